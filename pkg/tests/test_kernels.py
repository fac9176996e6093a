"""Backend equivalence: the numba kernels and their numpy fallbacks must
produce identical results, and the env flag must control which one runs."""

import os
import subprocess
import sys

import numpy as np
import pytest

from popseq import _accel, kernels


def _pps_case(rng, sigmoid_mode):
    n = int(rng.integers(2, 60))
    seq = rng.integers(0, n, size=int(rng.integers(1, 80)))
    eps = float(rng.choice([0.01, 0.1, 1.0]))
    out = np.empty((seq.shape[0], n))
    return seq.astype(np.int64), n, eps, sigmoid_mode, out


class TestBackendEquivalence:
    @pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")
    @pytest.mark.parametrize("sigmoid_mode", [False, True])
    def test_pps_rows(self, sigmoid_mode):
        rng = np.random.default_rng(0)
        for _ in range(25):
            seq, n, eps, mode, out_nb = _pps_case(rng, sigmoid_mode)
            out_np = np.empty_like(out_nb)
            kernels.pps_rows_numba(seq, n, eps, mode, out_nb)
            kernels.pps_rows_numpy(seq, n, eps, mode, out_np)
            np.testing.assert_allclose(out_nb, out_np, rtol=0, atol=1e-12)

    @pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")
    def test_weighted_draws(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            n = int(rng.integers(2, 40))
            k = int(rng.integers(1, n + 1))
            weights = rng.integers(1, 100, size=n).astype(np.float64)
            uniforms = rng.random(k)
            a = np.empty(k, np.int64)
            b = np.empty(k, np.int64)
            kernels.weighted_draws_numba(weights.copy(), k, uniforms, a)
            kernels.weighted_draws_numpy(weights.copy(), k, uniforms, b)
            np.testing.assert_array_equal(a, b)

    @pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")
    def test_synth_picks(self):
        rng = np.random.default_rng(2)
        n_users, n_fav, total = 6, 3, 200
        favorites = np.stack([rng.choice(30, size=n_fav, replace=False)
                              for _ in range(n_users)]).astype(np.int64)
        args = (np.arange(total, dtype=np.int64) % n_users,
                (rng.random(total) < 0.7),
                rng.integers(0, 30, size=total),
                rng.random(total), favorites)
        user_of_event, is_repeat, fresh, uni, fav = args
        out_a = np.empty(total, np.int64)
        out_b = np.empty(total, np.int64)
        kernels.synth_picks_numba(user_of_event, is_repeat,
                                  fresh.astype(np.int64), uni, fav,
                                  np.zeros(fav.shape), out_a)
        kernels.synth_picks_numpy(user_of_event, is_repeat,
                                  fresh.astype(np.int64), uni, fav,
                                  np.zeros(fav.shape), out_b)
        np.testing.assert_array_equal(out_a, out_b)


class TestDraws:
    def test_draws_are_distinct_and_weight_zero_items_excluded(self):
        weights = np.array([5.0, 0.0, 1.0, 3.0])
        picked = kernels.weighted_draws(weights, 3, np.array([0.4, 0.9, 0.1]))
        assert sorted(picked.tolist()) == sorted(set(picked.tolist()))
        assert 1 not in picked

    def test_exhaustive_draws_cover_support(self):
        weights = np.array([1.0, 2.0, 3.0])
        picked = kernels.weighted_draws(weights, 3, np.array([0.99, 0.5, 0.0]))
        assert sorted(picked.tolist()) == [0, 1, 2]


class TestEnvFlag:
    def _backend_in_subprocess(self, env_value):
        env = dict(os.environ)
        if env_value is None:
            env.pop(_accel.ENV_FLAG, None)
        else:
            env[_accel.ENV_FLAG] = env_value
        code = "from popseq import _accel; print(_accel.backend_name())"
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        return out.stdout.strip()

    @pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")
    def test_default_uses_numba(self):
        assert self._backend_in_subprocess(None) == "numba"
        assert self._backend_in_subprocess("0") == "numba"

    def test_flag_disables_numba(self):
        assert self._backend_in_subprocess("1") == "numpy"

    def test_results_identical_across_backends(self):
        """End-to-end: the same pps matrix regardless of the env flag."""
        code = (
            "import numpy as np\n"
            "from popseq.popularity import pps_matrix\n"
            "m = pps_matrix(np.array([3, 1, 3, 0, 2]), 0.05, 'sigmoid', n=5)\n"
            "print(repr(m.values.tobytes().hex()))\n")
        outs = []
        for flag in ("1", ""):
            env = dict(os.environ)
            env[_accel.ENV_FLAG] = flag
            run = subprocess.run([sys.executable, "-c", code], env=env,
                                 capture_output=True, text=True, check=True)
            outs.append(run.stdout)
        assert outs[0] == outs[1]
