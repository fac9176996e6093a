"""Hot numeric kernels with numba and pure-numpy implementations.

Three inner loops dominate runtime at catalog scale: filling per-position
popularity-logit matrices during training, successive weighted draws during
catalog sampling, and the rich-get-richer item picks of the synthetic
generator. Each kernel exists in two forms:

* ``*_numba`` - the loop body compiled with ``@njit`` (when numba is present),
* ``*_numpy`` - a plain numpy version of the same arithmetic.

The active implementation is chosen once at import time (see
:mod:`popseq._accel`); ``benchmarks/bench_backends.py`` times both.
All callers draw random numbers outside the kernels and pass them in, so the
two backends produce identical outputs for identical inputs.
"""

from __future__ import annotations

import numpy as np

from ._accel import HAS_NUMBA, USE_NUMBA

if HAS_NUMBA:
    from numba import njit


# ---------------------------------------------------------------------------
# Per-position popularity logits
# ---------------------------------------------------------------------------

def _pps_rows_loop(seq, n, epsilon, sigmoid_mode, out):
    # Row i holds logits from the counts of seq[0..i]; counts are updated
    # incrementally, one item per row.
    counts = np.zeros(n, np.float64)
    cmax = 0.0
    total = n * epsilon  # running sum of (c_z + eps)
    for i in range(seq.shape[0]):
        counts[seq[i]] += 1.0
        if counts[seq[i]] > cmax:
            cmax = counts[seq[i]]
        total += 1.0
        if sigmoid_mode:
            for j in range(n):
                cj = counts[j] + epsilon
                out[i, j] = np.log(cj / (total - cj))
        else:
            denom = cmax + epsilon
            for j in range(n):
                out[i, j] = np.log((counts[j] + epsilon) / denom)


def pps_rows_numpy(seq, n, epsilon, sigmoid_mode, out):
    """Vectorized equivalent of the incremental loop."""
    length = seq.shape[0]
    onehot = np.zeros((length, n), np.float64)
    onehot[np.arange(length), seq] = 1.0
    counts = np.cumsum(onehot, axis=0)
    shifted = counts + epsilon
    if sigmoid_mode:
        totals = np.arange(1, length + 1, dtype=np.float64) + n * epsilon
        np.log(shifted / (totals[:, None] - shifted), out=out)
    else:
        denom = counts.max(axis=1) + epsilon
        np.log(shifted / denom[:, None], out=out)


# ---------------------------------------------------------------------------
# Weighted sampling without replacement (successive renormalized draws)
# ---------------------------------------------------------------------------

def _weighted_draws_loop(weights, k, uniforms, out):
    # weights is consumed in place; caller passes a scratch copy.
    n = weights.shape[0]
    total = 0.0
    for j in range(n):
        total += weights[j]
    for i in range(k):
        r = uniforms[i] * total
        acc = 0.0
        pick = -1
        for j in range(n):
            w = weights[j]
            if w > 0.0:
                acc += w
                if r < acc:
                    pick = j
                    break
        if pick < 0:
            # round-off pushed r past the final partial sum; take the last
            # item still carrying weight
            for j in range(n - 1, -1, -1):
                if weights[j] > 0.0:
                    pick = j
                    break
        out[i] = pick
        total -= weights[pick]
        weights[pick] = 0.0


# ---------------------------------------------------------------------------
# Synthetic-log item picks (rich-get-richer favorite reuse)
# ---------------------------------------------------------------------------

def _synth_picks_loop(user_of_event, is_repeat, fresh_items, repeat_uniforms,
                      favorites, fav_counts, out):
    # fav_counts[u, f] tracks how often user u consumed favorite f; repeat
    # draws weight favorites by (count + 1) so unseen favorites stay reachable.
    n_fav = favorites.shape[1]
    for t in range(user_of_event.shape[0]):
        u = user_of_event[t]
        if is_repeat[t]:
            total = float(n_fav)
            for f in range(n_fav):
                total += fav_counts[u, f]
            r = repeat_uniforms[t] * total
            acc = 0.0
            pick = n_fav - 1
            for f in range(n_fav):
                acc += fav_counts[u, f] + 1.0
                if r < acc:
                    pick = f
                    break
            item = favorites[u, pick]
            fav_counts[u, pick] += 1.0
        else:
            item = fresh_items[t]
            for f in range(n_fav):
                if favorites[u, f] == item:
                    fav_counts[u, f] += 1.0
                    break
        out[t] = item


# ---------------------------------------------------------------------------
# Backend selection
# ---------------------------------------------------------------------------

if HAS_NUMBA:
    pps_rows_numba = njit(cache=True)(_pps_rows_loop)
    weighted_draws_numba = njit(cache=True)(_weighted_draws_loop)
    synth_picks_numba = njit(cache=True)(_synth_picks_loop)

weighted_draws_numpy = _weighted_draws_loop
synth_picks_numpy = _synth_picks_loop

if USE_NUMBA:
    _pps_rows = pps_rows_numba
    _weighted_draws = weighted_draws_numba
    _synth_picks = synth_picks_numba
else:
    _pps_rows = pps_rows_numpy
    _weighted_draws = weighted_draws_numpy
    _synth_picks = synth_picks_numpy


def pps_rows(seq: np.ndarray, n: int, epsilon: float, sigmoid_mode: bool) -> np.ndarray:
    """Fill an (L, n) matrix of popularity logits, one row per prefix."""
    seq = np.ascontiguousarray(seq, dtype=np.int64)
    out = np.empty((seq.shape[0], n), np.float64)
    _pps_rows(seq, n, float(epsilon), sigmoid_mode, out)
    return out


def weighted_draws(weights: np.ndarray, k: int, uniforms: np.ndarray) -> np.ndarray:
    """Draw k distinct indices, each proportional to the remaining weights."""
    scratch = np.array(weights, dtype=np.float64, copy=True)
    out = np.empty(k, np.int64)
    _weighted_draws(scratch, k, np.asarray(uniforms, dtype=np.float64), out)
    return out


def synth_picks(user_of_event, is_repeat, fresh_items, repeat_uniforms, favorites):
    """Run the favorite-reuse pick loop for a full synthetic event stream."""
    user_of_event = np.ascontiguousarray(user_of_event, dtype=np.int64)
    fav_counts = np.zeros(favorites.shape, np.float64)
    out = np.empty(user_of_event.shape[0], np.int64)
    _synth_picks(user_of_event, np.ascontiguousarray(is_repeat, dtype=np.bool_),
                 np.ascontiguousarray(fresh_items, dtype=np.int64),
                 np.ascontiguousarray(repeat_uniforms, dtype=np.float64),
                 np.ascontiguousarray(favorites, dtype=np.int64),
                 fav_counts, out)
    return out
