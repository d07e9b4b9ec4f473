"""Self-verification suites wrapping the library's numerical cross-checks.

Five named checks, each validating one pillar against an independent
reference:

* ``oracle-equivalence``   fast posterior vs the exact dense posterior
* ``woodbury``             low-rank inversion identity vs a dense inverse
* ``reconstruction``       truncated eigendecomposition vs the exact kernel
* ``orthonormality``       eigenfunctions vs quadrature of the weight inner product
* ``backend-equivalence``  serial vs parallel execution of the fast mean

``level="fast"`` keeps sizes small (seconds on a laptop); ``level="full"``
runs the acceptance-scale versions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import posterior as _posterior
from .backend import Backend
from .datagen import generate
from .kernels import ArdKernelParams, KernelParams1D, gram_matrix
from .mercer import eigenfunction_1d, eigensystem, reconstruct_kernel
from .posterior import GpModel, exact_posterior, fagp_posterior, lambda_bar

__all__ = ["CheckResult", "CHECK_NAMES", "run_verification"]

CHECK_NAMES = (
    "oracle-equivalence",
    "woodbury",
    "reconstruction",
    "orthonormality",
    "backend-equivalence",
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check_oracle_equivalence(level):
    N, Ns = (200, 100) if level == "full" else (120, 60)
    ds = generate(N, 1, seed=20240001, noise_std=0.1, domain=(-1.0, 1.0))
    rng = np.random.Generator(np.random.Philox(key=20240002))
    Xstar = rng.uniform(-1.0, 1.0, size=(Ns, 1))
    kernel = ArdKernelParams.isotropic(1, 1.0, 1.0)
    exact = exact_posterior(ds, Xstar, GpModel(kernel, 1e-2), want_cov=False)
    tol = 1e-3 * np.abs(ds.y).max()
    errs = []
    for n in (5, 10, 15, 20, 25):
        approx = fagp_posterior(ds, Xstar, GpModel(kernel, 1e-2, n_eigen=n))
        errs.append(float(np.abs(approx.mean - exact.mean).max()))
    non_increasing = all(b <= a for a, b in zip(errs, errs[1:]))
    passed = non_increasing and errs[-1] < tol
    detail = (
        f"err(n=25) {errs[-1]:.2e} (tol {tol:.2e}), "
        f"errors over n=5..25 {'non-increasing' if non_increasing else 'NOT monotone'}"
    )
    return CheckResult("oracle-equivalence", passed, detail)


def _check_woodbury(level):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        N = int(rng.integers(5, 41))
        n = int(rng.integers(1, 11))
        X = rng.uniform(-1.0, 1.0, size=(N, 1))
        sigma2 = float(rng.uniform(0.05, 2.0))
        kernel = ArdKernelParams.isotropic(1, float(rng.uniform(0.5, 3.0)), 1.0)
        es = eigensystem(X, kernel, n)
        handle = lambda_bar(es, sigma2)
        phi, lam = es.phi, es.lam_floored
        direct = np.linalg.inv(phi @ (lam[:, None] * phi.T) + sigma2 * np.eye(N))
        low_rank = (
            np.eye(N) / sigma2 - (phi @ handle.solve(phi.T)) / sigma2**2
        )
        rel = float(np.abs(low_rank - direct).max() / np.abs(direct).max())
        worst = max(worst, rel)
    passed = worst < 1e-8
    return CheckResult("woodbury", passed, f"worst rel err {worst:.2e} (tol 1e-08) over 20 instances")


def _check_reconstruction(level):
    x = np.linspace(-1.0, 1.0, 21)[:, None]
    kernel = ArdKernelParams.isotropic(1, 1.0, 1.0)
    K = gram_matrix(x, x, kernel)
    errs = []
    for n in (2, 5, 10, 20, 30):
        es = eigensystem(x, kernel, n)
        from .mercer import reconstruct_kernel

        errs.append(float(np.abs(reconstruct_kernel(es, es) - K).max()))
    non_increasing = all(b <= a for a, b in zip(errs, errs[1:]))
    passed = non_increasing and errs[-1] < 1e-6
    return CheckResult(
        "reconstruction",
        passed,
        f"err(n=30) {errs[-1]:.2e} (tol 1e-06), "
        f"{'non-increasing' if non_increasing else 'NOT monotone'} over n=2..30",
    )


def _check_orthonormality(level):
    from .kernels import KernelParams1D

    params = KernelParams1D(1.0, 1.0)
    rho = params.rho
    nodes, weights = np.polynomial.legendre.leggauss(200)
    half = 8.0 / rho
    xq = half * nodes
    wq = half * weights * (rho / np.sqrt(np.pi)) * np.exp(-((rho * xq) ** 2))
    phi = np.column_stack([eigenfunction_1d(i, xq, params) for i in range(1, 11)])
    overlap = phi.T @ (phi * wq[:, None])
    err = float(np.abs(overlap - np.eye(10)).max())
    passed = err < 1e-6
    return CheckResult("orthonormality", passed, f"max |<phi_i, phi_j>_w - delta_ij| {err:.2e} (tol 1e-06)")


def _check_backend_equivalence(level):
    N, n = (5000, 8) if level == "full" else (800, 6)
    p = 2
    ds = generate(N, p, seed=20240003, noise_std=0.05, domain=(-1.0, 1.0))
    rng = np.random.Generator(np.random.Philox(key=20240004))
    Xstar = rng.uniform(-1.0, 1.0, size=(200, p))
    kernel = ArdKernelParams.isotropic(p, 1.0, 1.0)
    model = GpModel(kernel, 1e-2, n_eigen=n)
    serial = fagp_posterior(ds, Xstar, model, backend=Backend("serial"))
    parallel = fagp_posterior(ds, Xstar, model, backend=Backend("parallel", workers=8))
    scale = np.abs(serial.mean).max()
    rel = float(np.abs(serial.mean - parallel.mean).max() / scale)
    det_s = fagp_posterior(
        ds, Xstar, model, backend=Backend("serial", deterministic_reduction=True)
    )
    det_p = fagp_posterior(
        ds, Xstar, model,
        backend=Backend("parallel", workers=8, deterministic_reduction=True),
    )
    bitwise = bool(np.array_equal(det_s.mean, det_p.mean))
    passed = rel < 1e-10 and bitwise
    return CheckResult(
        "backend-equivalence",
        passed,
        f"serial vs parallel rel diff {rel:.2e} (tol 1e-10); "
        f"deterministic mode bitwise equal: {bitwise}",
    )


_CHECKS = {
    "oracle-equivalence": _check_oracle_equivalence,
    "woodbury": _check_woodbury,
    "reconstruction": _check_reconstruction,
    "orthonormality": _check_orthonormality,
    "backend-equivalence": _check_backend_equivalence,
}


def run_verification(level="fast", inject_fault=False):
    """Run every check; returns (all_passed, [CheckResult])."""
    if level not in ("fast", "full"):
        raise ValueError(f"level must be 'fast' or 'full', got {level!r}")
    results = []
    if inject_fault:
        _posterior.set_fault_injection(True)
    try:
        for name in CHECK_NAMES:
            try:
                results.append(_CHECKS[name](level))
            except Exception as exc:  # a crash in a check is a failure, not an abort
                results.append(CheckResult(name, False, f"raised {type(exc).__name__}: {exc}"))
    finally:
        if inject_fault:
            _posterior.set_fault_injection(False)
    return all(r.passed for r in results), results
