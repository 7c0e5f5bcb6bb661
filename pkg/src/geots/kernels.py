"""Hot inner loops: margin runs against bands, checkpoint walks, segment chains.

Every kernel takes a stack of bands ``upper``/``lower`` of shape ``(k, n)``.
A raw series is the degenerate band ``upper == lower == values``, so the same
kernels score leaf series and node bounds.  Each kernel returns its result
together with the number of margin tests it performed (one test is one
``mindist_ts <= eps`` evaluation at one timestamp for one band).

Two implementations exist for every kernel:

* ``jit``: explicit loops compiled with numba.
* ``numpy``: vectorised sweeps; the checkpoint walks get their margin mask
  from one vectorised pass and then run the interpreted walk over it.

``active`` is whichever of the two the ``GEOTS_DISABLE_NUMBA`` flag selects.
Both count margin tests identically.
"""
from types import SimpleNamespace

import numpy as np

from ._accel import HAVE_NUMBA, USE_NUMBA, njit

if HAVE_NUMBA:
    from numba.extending import register_jitable as _jitable
else:  # pragma: no cover
    def _jitable(func):
        return func

# Memo codes for ``state``.  0 means not yet evaluated; 3/4 are pre-evaluated
# by the numpy path but not yet charged as a test.
_UNKNOWN, _PASS, _FAIL, _PASS_UNCHARGED, _FAIL_UNCHARGED = 0, 1, 2, 3, 4


@_jitable
def _margin_code(v, hi, lo, eps, s):
    """Memo code of one cell once its test is charged: ``_PASS`` or ``_FAIL``.

    Takes scalars only: numba reference-counts array arguments on every call
    to a helper it does not inline, which dominates these short loops.
    """
    if s >= _PASS_UNCHARGED:
        return s - 2
    if v > hi:
        d = v - hi
    elif v < lo:
        d = lo - v
    else:
        d = 0.0
    return _PASS if d <= eps else _FAIL


# --------------------------------------------------------------------------
# loop kernels (compiled by numba on the jit path)


def _band_runs_sweep_loop(upper, lower, tq, eps):
    k, n = upper.shape
    runs = np.zeros(k, dtype=np.int64)
    for j in range(k):
        best = 0
        cur = 0
        for i in range(n):
            v = tq[i]
            if v > upper[j, i]:
                d = v - upper[j, i]
            elif v < lower[j, i]:
                d = lower[j, i] - v
            else:
                d = 0.0
            if d <= eps:
                cur += 1
                if cur > best:
                    best = cur
            else:
                cur = 0
        runs[j] = best
    return runs, k * n


def _band_checkpoint_loop(upper, lower, tq, eps, cps, delta, state):
    """Checkpoint walk over every band, each timestamp tested at most once.

    ``delta > 0``: decide whether some band has a run ``>= delta`` through a
    checkpoint, expanding only up to the neighbouring checkpoints and
    returning as soon as one is found.
    ``delta == 0``: expand every passing checkpoint to its full run and
    report the longest per band.

    Returns ``(runs, found, tests)``.
    """
    k, n = upper.shape
    tests = 0
    runs = np.zeros(k, dtype=np.int64)
    for j in range(k):
        best = 0
        reach = -1
        for c in cps:
            if delta == 0 and c <= reach:
                continue  # inside a run already measured in full
            s = state[j, c]
            if s == _UNKNOWN or s >= _PASS_UNCHARGED:
                s = _margin_code(tq[c], upper[j, c], lower[j, c], eps, s)
                state[j, c] = s
                tests += 1
            if s != _PASS:
                continue
            count = 1
            if delta > 0 and count >= delta:
                return runs, True, tests
            for step in (-1, 1):
                if delta > 0:
                    lim = max(c - delta + 1, 0) if step < 0 else min(c + delta - 1, n - 1)
                else:
                    lim = 0 if step < 0 else n - 1
                i = c + step
                while (i >= lim) if step < 0 else (i <= lim):
                    s = state[j, i]
                    if s == _UNKNOWN or s >= _PASS_UNCHARGED:
                        s = _margin_code(tq[i], upper[j, i], lower[j, i], eps, s)
                        state[j, i] = s
                        tests += 1
                    if s != _PASS:
                        break
                    count += 1
                    if delta > 0 and count >= delta:
                        return runs, True, tests
                    i += step
                if step > 0:
                    reach = i - 1
            if count > best:
                best = count
        runs[j] = best
    return runs, False, tests


def _seg_bound_sweep_loop(upper, lower, seg_of, seg_k, links, tq, eps):
    kmax, n = upper.shape
    prev = np.zeros(kmax, dtype=np.int64)
    cur = np.zeros(kmax, dtype=np.int64)
    best = 0
    tests = 0
    for i in range(n):
        t = seg_of[i]
        crossing = i > 0 and seg_of[i - 1] != t
        for j in range(seg_k[t]):
            v = tq[i]
            if v > upper[j, i]:
                d = v - upper[j, i]
            elif v < lower[j, i]:
                d = lower[j, i] - v
            else:
                d = 0.0
            tests += 1
            if d > eps:
                cur[j] = 0
                continue
            carry = 0
            if i > 0:
                if crossing:
                    tp = seg_of[i - 1]
                    for b in range(seg_k[tp]):
                        if links[tp, b, j] and prev[b] > carry:
                            carry = prev[b]
                else:
                    carry = prev[j]
            cur[j] = carry + 1
            if cur[j] > best:
                best = cur[j]
        for j in range(kmax):
            prev[j] = cur[j] if j < seg_k[t] else 0
    return best, tests


def _seg_checkpoint_loop(upper, lower, seg_of, seg_k, links, tq, eps, cps, delta, state):
    """Checkpoint walk over segmented bands.

    From each passing ``(checkpoint, band)`` the walk runs left, then right,
    keeping a set of candidate bands.  Inside a segment a band that fails
    the margin is dropped; crossing into a neighbouring segment replaces the
    set by the bands linked to any survivor.  A direction ends when the set
    empties.  ``delta`` selects verification or bound mode as in
    ``_band_checkpoint_loop``.

    Returns ``(best, found, tests)``.
    """
    kmax, n = upper.shape
    tests = 0
    active = np.zeros(kmax, dtype=np.bool_)
    nxt = np.zeros(kmax, dtype=np.bool_)
    best = 0
    for t in range(seg_k.shape[0]):
        for a in range(seg_k[t]):
            reach = -1
            for c in cps:
                if seg_of[c] != t:
                    continue
                if delta == 0 and c <= reach:
                    continue  # same band, same run: nothing new to find
                s = state[a, c]
                if s == _UNKNOWN or s >= _PASS_UNCHARGED:
                    s = _margin_code(tq[c], upper[a, c], lower[a, c], eps, s)
                    state[a, c] = s
                    tests += 1
                if s != _PASS:
                    continue
                count = 1
                if delta > 0 and count >= delta:
                    return best, True, tests
                for step in (-1, 1):
                    if delta > 0:
                        lim = max(c - delta + 1, 0) if step < 0 else min(c + delta - 1, n - 1)
                    else:
                        lim = 0 if step < 0 else n - 1
                    for b in range(kmax):
                        active[b] = False
                    active[a] = True
                    ts = t
                    i = c + step
                    while (i >= lim) if step < 0 else (i <= lim):
                        t2 = seg_of[i]
                        if t2 != ts:
                            for b in range(kmax):
                                nxt[b] = False
                            for a2 in range(seg_k[ts]):
                                if not active[a2]:
                                    continue
                                for b in range(seg_k[t2]):
                                    if links[ts, a2, b] if step > 0 else links[t2, b, a2]:
                                        nxt[b] = True
                            for b in range(kmax):
                                active[b] = nxt[b]
                            ts = t2
                        alive = False
                        for b in range(seg_k[ts]):
                            if not active[b]:
                                continue
                            s = state[b, i]
                            if s == _UNKNOWN or s >= _PASS_UNCHARGED:
                                s = _margin_code(tq[i], upper[b, i], lower[b, i], eps, s)
                                state[b, i] = s
                                tests += 1
                            if s == _PASS:
                                alive = True
                            else:
                                active[b] = False
                        if not alive:
                            break
                        count += 1
                        if delta > 0 and count >= delta:
                            return best, True, tests
                        i += step
                    if step > 0:
                        reach = i - 1
                if count > best:
                    best = count
    return best, False, tests


# --------------------------------------------------------------------------
# numpy path


def margin_mask(upper, lower, tq, eps):
    """Boolean ``(k, n)`` mask of ``mindist_ts <= eps``, fully vectorised."""
    d = np.maximum(np.maximum(tq - upper, lower - tq), 0.0)
    return d <= eps


def longest_true_runs(mask):
    """Length of the longest run of True in each row of a 2-D mask."""
    k, n = mask.shape
    padded = np.zeros((k, n + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    edges = np.diff(padded, axis=1)
    starts = np.argwhere(edges == 1)
    stops = np.argwhere(edges == -1)
    runs = np.zeros(k, dtype=np.int64)
    if len(starts):
        np.maximum.at(runs, starts[:, 0], stops[:, 1] - starts[:, 1])
    return runs


def _seg_mask(upper, lower, seg_of, seg_k, tq, eps):
    mask = margin_mask(upper, lower, tq, eps)
    rows = np.arange(upper.shape[0])[:, None]
    mask &= rows < seg_k[seg_of][None, :]
    return mask


def _prefilled(mask):
    return np.where(mask, _PASS_UNCHARGED, _FAIL_UNCHARGED).astype(np.int8)


def _band_runs_sweep_np(upper, lower, tq, eps):
    k, n = upper.shape
    return longest_true_runs(margin_mask(upper, lower, tq, eps)), k * n


def _band_runs_checkpoint_np(upper, lower, tq, eps, cps):
    state = _prefilled(margin_mask(upper, lower, tq, eps))
    runs, _, tests = _band_checkpoint_loop(upper, lower, tq, eps, cps, 0, state)
    return runs, int(tests)


def _band_verify_np(upper, lower, tq, eps, cps, delta):
    state = _prefilled(margin_mask(upper, lower, tq, eps))
    _, ok, tests = _band_checkpoint_loop(upper, lower, tq, eps, cps, int(delta), state)
    return bool(ok), int(tests)


def _seg_bound_sweep_np(upper, lower, seg_of, seg_k, links, tq, eps):
    kmax, n = upper.shape
    mask = _seg_mask(upper, lower, seg_of, seg_k, tq, eps)
    tests = int(seg_k[seg_of].sum())
    prev = np.zeros(kmax, dtype=np.int64)
    best = 0
    for i in range(n):
        if i == 0:
            carry = np.zeros(kmax, dtype=np.int64)
        elif seg_of[i - 1] != seg_of[i]:
            linked = links[seg_of[i - 1]]
            carry = np.where(linked, prev[:, None], 0).max(axis=0)
        else:
            carry = prev
        prev = np.where(mask[:, i], carry + 1, 0)
        best = max(best, int(prev.max()))
    return best, tests


def _seg_bound_checkpoint_np(upper, lower, seg_of, seg_k, links, tq, eps, cps):
    state = _prefilled(_seg_mask(upper, lower, seg_of, seg_k, tq, eps))
    best, _, tests = _seg_checkpoint_loop(upper, lower, seg_of, seg_k, links, tq, eps, cps, 0,
                                          state)
    return int(best), int(tests)


def _seg_verify_np(upper, lower, seg_of, seg_k, links, tq, eps, cps, delta):
    state = _prefilled(_seg_mask(upper, lower, seg_of, seg_k, tq, eps))
    _, ok, tests = _seg_checkpoint_loop(upper, lower, seg_of, seg_k, links, tq, eps, cps,
                                        int(delta), state)
    return bool(ok), int(tests)


numpy_kernels = SimpleNamespace(
    name="numpy",
    band_runs_sweep=_band_runs_sweep_np,
    band_runs_checkpoint=_band_runs_checkpoint_np,
    band_verify=_band_verify_np,
    seg_bound_sweep=_seg_bound_sweep_np,
    seg_bound_checkpoint=_seg_bound_checkpoint_np,
    seg_verify=_seg_verify_np,
)


# --------------------------------------------------------------------------
# jit path

jit_kernels = None
if HAVE_NUMBA:
    _band_runs_sweep_j = njit(_band_runs_sweep_loop)
    _band_checkpoint_j = njit(_band_checkpoint_loop)
    _seg_bound_sweep_j = njit(_seg_bound_sweep_loop)
    _seg_checkpoint_j = njit(_seg_checkpoint_loop)

    def _fresh(upper):
        return np.zeros(upper.shape, dtype=np.int8)

    def _band_runs_sweep_jit(upper, lower, tq, eps):
        runs, tests = _band_runs_sweep_j(upper, lower, tq, float(eps))
        return runs, int(tests)

    def _band_runs_checkpoint_jit(upper, lower, tq, eps, cps):
        runs, _, tests = _band_checkpoint_j(upper, lower, tq, float(eps), cps, 0, _fresh(upper))
        return runs, int(tests)

    def _band_verify_jit(upper, lower, tq, eps, cps, delta):
        _, ok, tests = _band_checkpoint_j(upper, lower, tq, float(eps), cps, int(delta),
                                          _fresh(upper))
        return bool(ok), int(tests)

    def _seg_bound_sweep_jit(upper, lower, seg_of, seg_k, links, tq, eps):
        best, tests = _seg_bound_sweep_j(upper, lower, seg_of, seg_k, links, tq, float(eps))
        return int(best), int(tests)

    def _seg_bound_checkpoint_jit(upper, lower, seg_of, seg_k, links, tq, eps, cps):
        best, _, tests = _seg_checkpoint_j(upper, lower, seg_of, seg_k, links, tq, float(eps),
                                           cps, 0, _fresh(upper))
        return int(best), int(tests)

    def _seg_verify_jit(upper, lower, seg_of, seg_k, links, tq, eps, cps, delta):
        _, ok, tests = _seg_checkpoint_j(upper, lower, seg_of, seg_k, links, tq, float(eps),
                                         cps, int(delta), _fresh(upper))
        return bool(ok), int(tests)

    jit_kernels = SimpleNamespace(
        name="numba",
        band_runs_sweep=_band_runs_sweep_jit,
        band_runs_checkpoint=_band_runs_checkpoint_jit,
        band_verify=_band_verify_jit,
        seg_bound_sweep=_seg_bound_sweep_jit,
        seg_bound_checkpoint=_seg_bound_checkpoint_jit,
        seg_verify=_seg_verify_jit,
    )

active = jit_kernels if USE_NUMBA else numpy_kernels
