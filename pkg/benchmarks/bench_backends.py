#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Runs both implementations of every hot kernel on realistic shapes and prints
a timing table. Requires numba to be installed; the active package backend
(see POPSEQ_DISABLE_NUMBA) does not matter here because both variants are
imported explicitly.
"""

import argparse
import time

import numpy as np

from popseq import _accel, kernels


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_pps_rows(length, n_items, rng, repeats):
    seq = rng.integers(0, n_items, size=length).astype(np.int64)
    out = np.empty((length, n_items))
    for sigmoid_mode in (False, True):
        label = f"pps_rows[{'sigmoid' if sigmoid_mode else 'softmax'}] " \
                f"L={length} N={n_items}"
        nb = _best_of(lambda: kernels.pps_rows_numba(seq, n_items, 0.01,
                                                     sigmoid_mode, out), repeats)
        np_ = _best_of(lambda: kernels.pps_rows_numpy(seq, n_items, 0.01,
                                                      sigmoid_mode, out), repeats)
        yield label, nb, np_


def bench_weighted_draws(n_items, k, rng, repeats):
    weights = rng.integers(1, 1000, size=n_items).astype(np.float64)
    uniforms = rng.random(k)
    out = np.empty(k, np.int64)
    label = f"weighted_draws n={n_items} k={k}"
    nb = _best_of(lambda: kernels.weighted_draws_numba(weights.copy(), k,
                                                       uniforms, out), repeats)
    np_ = _best_of(lambda: kernels.weighted_draws_numpy(weights.copy(), k,
                                                        uniforms, out), repeats)
    yield label, nb, np_


def bench_synth_picks(users, events, favorites, rng, repeats):
    total = users * events
    fav = np.stack([rng.choice(2000, size=favorites, replace=False)
                    for _ in range(users)]).astype(np.int64)
    args = (np.arange(total, dtype=np.int64) % users,
            rng.random(total) < 0.8,
            rng.integers(0, 2000, size=total),
            rng.random(total), fav)
    label = f"synth_picks users={users} events/user={events}"
    nb = _best_of(lambda: kernels.synth_picks_numba(
        *args[:4], args[4], np.zeros(fav.shape), np.empty(total, np.int64)),
        repeats)
    np_ = _best_of(lambda: kernels.synth_picks_numpy(
        *args[:4], args[4], np.zeros(fav.shape), np.empty(total, np.int64)),
        repeats)
    yield label, nb, np_


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not _accel.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    rng = np.random.default_rng(args.seed)

    # trigger compilation outside the timed region
    warm = np.empty((2, 4))
    kernels.pps_rows_numba(np.array([1, 0], np.int64), 4, 0.1, True, warm)
    kernels.pps_rows_numba(np.array([1, 0], np.int64), 4, 0.1, False, warm)
    kernels.weighted_draws_numba(np.ones(4), 2, np.array([0.1, 0.9]),
                                 np.empty(2, np.int64))
    kernels.synth_picks_numba(np.zeros(2, np.int64), np.array([True, False]),
                              np.zeros(2, np.int64), np.array([0.3, 0.4]),
                              np.array([[1, 2]], dtype=np.int64),
                              np.zeros((1, 2)), np.empty(2, np.int64))

    rows = []
    rows.extend(bench_pps_rows(150, 1000, rng, args.repeats))
    rows.extend(bench_pps_rows(150, 30_000, rng, args.repeats))
    rows.extend(bench_weighted_draws(30_000, 3000, rng, args.repeats))
    rows.extend(bench_synth_picks(200, 400, 10, rng, args.repeats))

    width = max(len(label) for label, _, _ in rows)
    print(f"{'kernel':<{width}}  {'numba':>10}  {'numpy':>10}  {'speedup':>8}")
    print("-" * (width + 34))
    for label, nb, np_ in rows:
        print(f"{label:<{width}}  {nb * 1e3:>8.3f}ms  {np_ * 1e3:>8.3f}ms  "
              f"{np_ / nb:>7.1f}x")


if __name__ == "__main__":
    main()
