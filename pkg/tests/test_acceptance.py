"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines as they
complete. Timing-based criteria (5) pin BLAS to one thread and take
medians of repeated measurements to stay robust on loaded machines.
"""

import time
from pathlib import Path

import numpy as np
import pytest
from threadpoolctl import ThreadpoolController

from fagp.backend import Backend, TimingRecord, phase_scope
from fagp.bench import (
    PLOTDATA_HEADER,
    RESULTS_HEADER,
    SKIP_PHASE,
    BenchConfig,
    run_sweep,
)
from fagp.cli import main as cli_main
from fagp.datagen import generate
from fagp.errors import BudgetError
from fagp.kernels import ArdKernelParams, KernelParams1D, gram_matrix
from fagp.mercer import eigenfunction_1d, eigensystem, reconstruct_kernel
from fagp.posterior import (
    GpModel,
    exact_posterior,
    fagp_posterior,
    fagp_posterior_from_eigensystems,
    lambda_bar,
)

GOLDEN = Path(__file__).parent / "golden"
UNIT_1D = ArdKernelParams.isotropic(1, 1.0, 1.0)


def report(num, name, passed, detail):
    print(f"\nACCEPTANCE {num} [{name}]: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, f"criterion {num} ({name}): {detail}"


def test_criterion_1_oracle_equivalence():
    start = time.perf_counter()
    ds = generate(200, 1, seed=1001, noise_std=0.1, domain=(-1.0, 1.0))
    rng = np.random.Generator(np.random.Philox(key=1002))
    Xstar = rng.uniform(-1.0, 1.0, size=(100, 1))
    exact = exact_posterior(ds, Xstar, GpModel(UNIT_1D, 1e-2))
    errs = []
    for n in (5, 10, 15, 20, 25):
        approx = fagp_posterior(ds, Xstar, GpModel(UNIT_1D, 1e-2, n_eigen=n))
        errs.append(float(np.abs(approx.mean - exact.mean).max()))
    elapsed = time.perf_counter() - start
    tol = 1e-3 * float(np.abs(ds.y).max())
    non_increasing = all(b <= a for a, b in zip(errs, errs[1:]))
    ok = non_increasing and errs[-1] < tol and elapsed < 5.0
    report(
        1, "oracle equivalence", ok,
        f"mean err over n=5..25 {['%.2e' % e for e in errs]} "
        f"({'non-increasing' if non_increasing else 'NOT monotone'}), "
        f"final {errs[-1]:.2e} < tol {tol:.2e}, runtime {elapsed:.2f} s (< 5 s)",
    )


def test_criterion_2_mercer_reconstruction():
    start = time.perf_counter()
    x = np.linspace(-1.0, 1.0, 21)[:, None]
    K = gram_matrix(x, x, UNIT_1D)
    errs = []
    for n in (2, 5, 10, 20, 30):
        es = eigensystem(x, UNIT_1D, n)
        errs.append(float(np.abs(reconstruct_kernel(es, es) - K).max()))
    elapsed = time.perf_counter() - start
    non_increasing = all(b <= a for a, b in zip(errs, errs[1:]))
    ok = non_increasing and errs[-1] < 1e-6 and elapsed < 1.0
    report(
        2, "kernel reconstruction", ok,
        f"max-abs err over n=2..30 {['%.2e' % e for e in errs]} "
        f"({'non-increasing' if non_increasing else 'NOT monotone'}), "
        f"final {errs[-1]:.2e} < 1e-06, runtime {elapsed:.3f} s (< 1 s)",
    )


def test_criterion_3_woodbury_identity():
    rng = np.random.default_rng(1003)
    worst = 0.0
    for k in range(20):
        p = 2 if k % 3 == 0 else 1
        n = int(rng.integers(1, 4)) if p == 2 else int(rng.integers(1, 11))
        N = int(rng.integers(5, 41))
        X = rng.uniform(-1.0, 1.0, size=(N, p))
        sigma2 = float(rng.uniform(0.05, 2.0))
        kernel = ArdKernelParams.isotropic(p, float(rng.uniform(0.5, 3.0)), 1.0)
        es = eigensystem(X, kernel, n)
        assert es.size <= 10
        handle = lambda_bar(es, sigma2)
        phi, lam = es.phi, es.lam_floored
        direct = np.linalg.inv(phi @ (lam[:, None] * phi.T) + sigma2 * np.eye(N))
        low_rank = np.eye(N) / sigma2 - (phi @ handle.solve(phi.T)) / sigma2**2
        worst = max(worst, float(np.abs(low_rank - direct).max() / np.abs(direct).max()))
    ok = worst < 1e-8
    report(3, "low-rank inversion identity", ok,
           f"worst relative err {worst:.2e} over 20 random instances (tol 1e-08)")


def test_criterion_4_orthonormality():
    params = KernelParams1D(1.0, 1.0)
    nodes, weights = np.polynomial.legendre.leggauss(200)
    half = 8.0 / params.rho
    xq = half * nodes
    wq = half * weights * (params.rho / np.sqrt(np.pi)) * np.exp(-((params.rho * xq) ** 2))
    phi = np.column_stack([eigenfunction_1d(i, xq, params) for i in range(1, 11)])
    overlap = phi.T @ (phi * wq[:, None])
    err = float(np.abs(overlap - np.eye(10)).max())
    ok = err < 1e-6
    report(4, "eigenfunction orthonormality", ok,
           f"max |<phi_i, phi_j>_w - delta_ij| = {err:.2e} for i,j <= 10 (tol 1e-06)")


def test_criterion_5_linear_scaling():
    kernel = UNIT_1D
    backend = Backend("serial")
    n = 16
    rng = np.random.Generator(np.random.Philox(key=1005))
    es_star = eigensystem(rng.uniform(-1, 1, (100, 1)), kernel, n)
    sizes = (2000, 4000, 8000, 16000)

    def mean_phase_time(N, reps):
        ds = generate(N, 1, seed=N, noise_std=0.05)
        model = GpModel(kernel, 2.5e-3, n_eigen=n)
        es = eigensystem(ds.X, kernel, n, backend=backend)
        times = []
        for _ in range(reps):
            rec = TimingRecord()
            with phase_scope(rec, "mean"):
                fagp_posterior_from_eigensystems(es, es_star, ds.y, model, backend=backend)
            times.append(rec.mean_s)
        return min(times)

    # one BLAS thread keeps every N on the identical code path; min-of-reps
    # and median-of-slopes absorb scheduler noise
    ctl = ThreadpoolController()
    with ctl.limit(limits=1, user_api="blas"):
        mean_phase_time(1000, 3)  # warmup
        slopes = []
        for _ in range(5):
            ts = [mean_phase_time(N, 15 if N <= 4000 else 9) for N in sizes]
            slopes.append(float(np.polyfit(np.log(sizes), np.log(ts), 1)[0]))
    slope = float(np.median(slopes))

    # measured speedup is reported, never asserted (hardware-dependent)
    ds = generate(8000, 1, seed=8000, noise_std=0.05)
    model = GpModel(kernel, 2.5e-3, n_eigen=n)
    es = eigensystem(ds.X, kernel, n)

    def phase(be):
        times = []
        for _ in range(5):
            rec = TimingRecord()
            with phase_scope(rec, "mean"):
                fagp_posterior_from_eigensystems(es, es_star, ds.y, model, backend=be)
            times.append(rec.mean_s)
        return min(times)

    t_serial = phase(Backend("serial"))
    t_par = phase(Backend("parallel", workers=8))
    ok = 0.8 <= slope <= 1.3
    report(
        5, "linear-in-N scaling", ok,
        f"log-log slope of mean-phase time over N={list(sizes)} is {slope:.3f} "
        f"(band [0.8, 1.3], per-trial {['%.2f' % s for s in slopes]}); "
        f"reported serial/parallel(8) mean-phase speedup at N=8000: "
        f"{t_serial / t_par:.2f}x (not asserted)",
    )


def test_criterion_6_feature_growth_and_budget():
    params = ArdKernelParams.isotropic(4, 1.0)
    X = np.zeros((5, 4))
    es = eigensystem(X, params, 3)
    shape_ok = es.phi.shape == (5, 81) and es.lam.shape == (81,)
    with pytest.raises(BudgetError) as excinfo:
        eigensystem(np.zeros((10000, 4)), params, 10, memory_cap=1 << 20)
    msg = str(excinfo.value)
    refusal_ok = excinfo.value.n_features == 10000 and "cap" in msg and "10^4" in msg
    ok = shape_ok and refusal_ok
    report(
        6, "feature-count growth and memory cap", ok,
        f"(n=3, p=4) gives 81 feature columns and 81 eigenvalues; "
        f"(n=10, p=4, N=10000) at a 1 MiB cap refused with: {msg.split(';')[0]}",
    )


def test_criterion_7_backend_equivalence():
    ds = generate(5000, 2, seed=1007, noise_std=0.05, domain=(-1.0, 1.0))
    rng = np.random.Generator(np.random.Philox(key=1008))
    Xstar = rng.uniform(-1.0, 1.0, size=(500, 2))
    kernel = ArdKernelParams.isotropic(2, 1.0, 1.0)
    model = GpModel(kernel, 1e-2, n_eigen=8)
    serial = fagp_posterior(ds, Xstar, model, backend=Backend("serial"))
    parallel = fagp_posterior(ds, Xstar, model, backend=Backend("parallel", workers=8))
    rel = float(np.abs(serial.mean - parallel.mean).max() / np.abs(serial.mean).max())
    det_s = fagp_posterior(ds, Xstar, model,
                           backend=Backend("serial", deterministic_reduction=True))
    det_p = fagp_posterior(ds, Xstar, model,
                           backend=Backend("parallel", workers=8, deterministic_reduction=True))
    bitwise = bool(np.array_equal(det_s.mean, det_p.mean))
    ok = rel < 1e-10 and bitwise
    report(
        7, "backend equivalence", ok,
        f"serial vs parallel(8) mean rel diff {rel:.2e} on (N=5000, p=2, n=8) "
        f"(tol 1e-10); deterministic mode bitwise equal: {bitwise}",
    )


def test_criterion_8_harness_contracts(tmp_path, capsys):
    # row-count formula, including one skipped corner
    cfg = BenchConfig(
        n_samples=60, n_test=20, dims=(1, 2), eigen_counts={1: (3, 40), 2: (2,)},
        reps=2, backends=("serial",), workers=2, memory_cap=4000,
    )
    rows = run_sweep(cfg)
    normal = [r for r in rows if r[4] != SKIP_PHASE]
    skipped = [r for r in rows if r[4] == SKIP_PHASE]
    # (p=1, n=3) and (p=2, n=2) run; (p=1, n=40) is over the cap
    formula_ok = len(normal) == 1 * 2 * 2 * 4 and len(skipped) == 2

    headers_ok = (
        RESULTS_HEADER + "\n" == (GOLDEN / "results_header.txt").read_text()
        and PLOTDATA_HEADER + "\n" == (GOLDEN / "plotdata_header.txt").read_text()
    )

    start = time.perf_counter()
    code = cli_main(["verify", "--level", "fast"])
    verify_elapsed = time.perf_counter() - start
    capsys.readouterr()
    verify_ok = code == 0 and verify_elapsed < 60.0

    ok = formula_ok and headers_ok and verify_ok
    report(
        8, "harness contracts", ok,
        f"row counts: {len(normal)} phase rows + {len(skipped)} skip sentinels "
        f"(formula holds: {formula_ok}); golden headers byte-equal: {headers_ok}; "
        f"verify --level fast exit {code} in {verify_elapsed:.1f} s (< 60 s)",
    )
