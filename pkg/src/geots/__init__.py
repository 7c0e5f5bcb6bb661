"""Hybrid spatial and local-similarity search over geolocated time series."""
from .core import (Checkpoints, Dataset, GeoTimeSeries, Hit, InputError, local_similarity,
                   local_similarity_checkpointed, place_checkpoints, spatial_distance)
from .index import HybridIndex, IndexConfig, build_index
from .mbts import MBTS, SegmentedMBTS, build_mbts, mindist_ts, sigma_bound
from .oracle import oracle
from .query import Counters, QueryResult, QuerySpec, run_query
from .storage import IndexFormatError, load_index, save_index

__all__ = [
    "Checkpoints", "Counters", "Dataset", "GeoTimeSeries", "Hit", "HybridIndex",
    "IndexConfig", "IndexFormatError", "InputError", "MBTS", "QueryResult", "QuerySpec",
    "SegmentedMBTS", "build_index", "build_mbts", "load_index", "local_similarity",
    "local_similarity_checkpointed", "mindist_ts", "oracle", "place_checkpoints",
    "run_query", "save_index", "sigma_bound", "spatial_distance",
]
