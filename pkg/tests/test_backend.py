import time

import numpy as np
import pytest

from fagp.backend import (
    ENV_MAX_WORKERS,
    Backend,
    LuFactor,
    SpdFactor,
    TimingRecord,
    phase_scope,
    spd_solve,
)
from fagp.errors import NumericalError


def triple_loop_gemm(a, b):
    n, k = a.shape
    _, m = b.shape
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s = 0.0
            for kk in range(k):
                s += a[i, kk] * b[kk, j]
            out[i, j] = s
    return out


class TestGemm:
    def test_identity_bitwise(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(17, 17))
        assert np.array_equal(Backend().gemm(a, np.eye(17)), a)

    def test_small_vs_triple_loop(self):
        rng = np.random.default_rng(1)
        a, b = rng.normal(size=(2, 3)), rng.normal(size=(3, 2))
        ref = triple_loop_gemm(a, b)
        got = Backend().gemm(a, b)
        np.testing.assert_allclose(got, ref, rtol=1e-14)

    def test_serial_vs_parallel(self):
        rng = np.random.default_rng(2)
        a, b = rng.normal(size=(200, 200)), rng.normal(size=(200, 200))
        c_s = Backend("serial").gemm(a, b)
        c_p = Backend("parallel", workers=8).gemm(a, b)
        scale = np.abs(c_s).max()
        assert np.abs(c_s - c_p).max() / scale < 1e-12

    def test_deterministic_bitwise_across_modes_and_workers(self):
        rng = np.random.default_rng(3)
        a, b = rng.normal(size=(101, 37)), rng.normal(size=(37, 53))
        results = [
            Backend("serial", deterministic_reduction=True).gemm(a, b),
            Backend("parallel", workers=2, deterministic_reduction=True).gemm(a, b),
            Backend("parallel", workers=7, deterministic_reduction=True).gemm(a, b),
        ]
        assert np.array_equal(results[0], results[1])
        assert np.array_equal(results[1], results[2])

    def test_transpose_flags(self):
        rng = np.random.default_rng(4)
        a, b = rng.normal(size=(5, 9)), rng.normal(size=(7, 9))
        np.testing.assert_allclose(
            Backend().gemm(a, b, transpose_b=True), a @ b.T, rtol=1e-14
        )
        np.testing.assert_allclose(
            Backend().gemm(a, a, transpose_a=True), a.T @ a, rtol=1e-14
        )

    def test_matrix_vector(self):
        rng = np.random.default_rng(5)
        a, v = rng.normal(size=(40, 6)), rng.normal(size=6)
        got = Backend("parallel", workers=3, deterministic_reduction=True).gemm(a, v)
        assert got.shape == (40,)
        np.testing.assert_allclose(got, a @ v, rtol=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="conform"):
            Backend().gemm(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_associativity_within_tolerance(self):
        rng = np.random.default_rng(6)
        a, b, c = (rng.normal(size=(50, 50)) for _ in range(3))
        be = Backend()
        left = be.gemm(be.gemm(a, b), c)
        right = be.gemm(a, be.gemm(b, c))
        scale = np.abs(left).max()
        assert np.abs(left - right).max() <= 1e-10 * scale


class TestBackendConstruction:
    def test_invalid_mode(self):
        with pytest.raises(ValueError, match="mode"):
            Backend("gpu")

    def test_invalid_workers(self):
        with pytest.raises(ValueError, match="workers"):
            Backend("parallel", workers=0)

    def test_env_caps_workers(self, monkeypatch):
        monkeypatch.setenv(ENV_MAX_WORKERS, "2")
        assert Backend("parallel", workers=8).workers == 2
        monkeypatch.delenv(ENV_MAX_WORKERS)
        assert Backend("parallel", workers=8).workers == 8


class TestSpdSolve:
    def test_identity_bitwise(self):
        rng = np.random.default_rng(7)
        b = rng.normal(size=(6, 3))
        assert np.array_equal(spd_solve(np.eye(6), b), b)

    def test_diagonal(self):
        x = spd_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        np.testing.assert_allclose(x, [1.0, 1.0], rtol=1e-15)

    def test_random_spd_residual(self):
        rng = np.random.default_rng(8)
        a = rng.normal(size=(20, 20))
        m = a.T @ a + np.eye(20)
        b = rng.normal(size=(20, 4))
        x = spd_solve(m, b)
        assert np.abs(m @ x - b).max() / np.abs(b).max() < 1e-10

    def test_jitter_rescues_near_singular(self):
        # smallest eigenvalue -1e-15: below the jitter scale 1e-12 * trace / n
        rng = np.random.default_rng(10)
        q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
        m = (q * np.array([1.0, 0.9, 0.5, 0.2, -1e-15])) @ q.T
        m = 0.5 * (m + m.T)
        factor = SpdFactor(m)
        assert factor.jitter > 0.0
        x = factor.solve(np.ones(5))
        assert np.all(np.isfinite(x))

    def test_indefinite_carries_pivot_index(self):
        with pytest.raises(NumericalError) as excinfo:
            spd_solve(np.diag([1.0, -1.0]), np.ones(2))
        assert excinfo.value.pivot_index == 2

    def test_asymmetric_rejected(self):
        m = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            spd_solve(m, np.ones(2))

    def test_lu_fallback_handle(self):
        rng = np.random.default_rng(9)
        m = rng.normal(size=(6, 6))  # generic nonsymmetric
        x = LuFactor(m).solve(np.ones(6))
        np.testing.assert_allclose(m @ x, np.ones(6), atol=1e-10)


class TestPhaseTiming:
    def test_unused_phase_is_zero(self):
        rec = TimingRecord()
        assert rec.setup_s == 0.0
        assert rec.total_s == 0.0

    def test_sequential_scopes_accumulate(self):
        rec = TimingRecord()
        with phase_scope(rec, "eigen"):
            pass
        first = rec.eigen_s
        with phase_scope(rec, "eigen"):
            pass
        assert rec.eigen_s > first

    def test_sleep_smoke(self):
        rec = TimingRecord()
        with phase_scope(rec, "mean"):
            time.sleep(0.05)
        assert 0.045 <= rec.mean_s <= 0.5

    def test_nesting_disallowed(self):
        rec = TimingRecord()
        with pytest.raises(RuntimeError, match="nest"):
            with phase_scope(rec, "setup"):
                with phase_scope(rec, "eigen"):
                    pass
        # the record is usable again after the failed nest
        with phase_scope(rec, "eigen"):
            pass

    def test_same_phase_reentry_disallowed_while_open(self):
        rec = TimingRecord()
        with pytest.raises(RuntimeError, match="nest"):
            with phase_scope(rec, "mean"):
                with phase_scope(rec, "mean"):
                    pass

    def test_unknown_phase(self):
        rec = TimingRecord()
        with pytest.raises(ValueError, match="unknown phase"):
            with phase_scope(rec, "transfer"):
                pass
        with pytest.raises(ValueError, match="unknown phase"):
            rec.phase_seconds("transfer")

    def test_total_is_sum(self):
        rec = TimingRecord(setup_s=1.0, eigen_s=2.0, mean_s=3.0, retrieve_s=4.0)
        assert rec.total_s == 10.0
        assert rec.phase_seconds("mean") == 3.0
