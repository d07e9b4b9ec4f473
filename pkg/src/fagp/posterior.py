"""GP predictive posteriors: exact (dense, the reference) and fast low-rank.

The exact posterior conditions on all N training points through a dense
N x N solve:

    mu*    = m(X*) + K* (K + sigma_n^2 I)^{-1} (y - m(X))
    Sigma* = K**   - K* (K + sigma_n^2 I)^{-1} K*^T

The fast path replaces the kernel with the truncated eigendecomposition
``K ~= Phi Lam Phi^T`` of :mod:`fagp.mercer` and applies the low-rank matrix
inversion identity, so the only dense factorization is of the small
(n^p, n^p) system matrix

    LamBar = Lam^{-1} + Phi^T Phi / sigma_n^2.

Two algebraically equivalent mean/covariance routes are provided:

* ``"scaled"`` (default) — works with ``A = sigma_n^2 I + S Phi^T Phi S``
  where ``S = diag(sqrt(lam))``. Never forms ``Lam^{-1}``, so underflowed
  eigenvalues cannot blow up; the posterior is
  ``mu* = m(X*) + Phi* S A^{-1} S Phi^T (y - m(X))`` and
  ``Sigma* = sigma_n^2 Phi* S A^{-1} S Phi*^T``.
* ``"literal"`` — forms LamBar with floored eigenvalues and evaluates the
  identity term by term, as a right-to-left vector pipeline. Kept for
  cross-checking; fragile when eigenvalues underflow.

Both routes cost O(N (n^p)^2) time and never materialize an N x N or
N* x N intermediate; peak extra memory beyond the feature matrices is the
(n^p, n^p) work matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import Backend, LuFactor, SpdFactor
from .errors import NumericalError
from .kernels import ArdKernelParams, gram_matrix
from .mercer import DEFAULT_MEMORY_CAP, DELTA2_RHO_SQUARED, eigensystem

__all__ = [
    "GpModel",
    "PosteriorResult",
    "exact_posterior",
    "fagp_posterior",
    "fagp_posterior_from_eigensystems",
    "lambda_bar",
    "LambdaBarSolve",
    "set_fault_injection",
]

# Test hook: when True the fast-mean pipeline flips the sign of its final
# coefficient vector, so verification suites can prove they catch a wrong
# posterior. Never set this outside tests / `fagp verify --inject-fault`.
_FAULT_FLIP_MEAN_SIGN = False


def set_fault_injection(enabled):
    global _FAULT_FLIP_MEAN_SIGN
    _FAULT_FLIP_MEAN_SIGN = bool(enabled)


@dataclass(frozen=True)
class GpModel:
    """Model hyperparameters shared by both posterior routes.

    ``mean_const`` is the constant prior mean (zero by default). ``n_eigen``
    is only consulted by the fast route; the exact route ignores it.
    """

    kernel: ArdKernelParams
    noise_var: float
    mean_const: float = 0.0
    n_eigen: int | None = None

    def __post_init__(self):
        if not np.isfinite(self.noise_var) or self.noise_var <= 0:
            raise ValueError(f"noise_var must be finite and > 0, got {self.noise_var!r}")
        if self.n_eigen is not None and self.n_eigen < 1:
            raise ValueError(f"n_eigen must be >= 1, got {self.n_eigen}")


@dataclass
class PosteriorResult:
    """Predictive mean (N*,) and, when requested, covariance (N*, N*)."""

    mean: np.ndarray
    cov: np.ndarray | None = None


def _as_points(X, p, name):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != p:
        raise ValueError(f"{name} has {X.shape[1]} columns, expected p={p}")
    return X


def _factor_spd_or_lu(m, check_symmetric=True):
    try:
        return SpdFactor(m, check_symmetric=check_symmetric)
    except NumericalError:
        return LuFactor(m)


def exact_posterior(train, Xstar, model, want_cov=False):
    """Exact GP posterior by dense SPD factorization of (K + sigma_n^2 I).

    This is the reference the fast route is validated against. Cost is
    O(N^3) time and O(N^2) memory; use it at calibration scale only.

    Parameters
    ----------
    train : Dataset
        Training inputs/targets (any object with ``X`` (N, p) and ``y`` (N,)).
    Xstar : (N*, p) array_like
    model : GpModel
    want_cov : bool
        Also return the full predictive covariance.
    """
    p = model.kernel.p
    X = _as_points(train.X, p, "train.X")
    y = np.asarray(train.y, dtype=float)
    if X.shape[0] < 1:
        raise ValueError("training set must be nonempty")
    if y.shape != (X.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({X.shape[0]},)")
    Xs = _as_points(Xstar, p, "Xstar")

    K = gram_matrix(X, X, model.kernel)
    C = K + model.noise_var * np.eye(X.shape[0])
    factor = _factor_spd_or_lu(C)
    r = y - model.mean_const
    alpha = factor.solve(r)
    Ks = gram_matrix(Xs, X, model.kernel)
    mean = model.mean_const + Ks @ alpha

    cov = None
    if want_cov:
        Kss = gram_matrix(Xs, Xs, model.kernel)
        cov = Kss - Ks @ factor.solve(Ks.T)
        cov = 0.5 * (cov + cov.T)
    return PosteriorResult(mean=mean, cov=cov)


class LambdaBarSolve:
    """Reusable solve handle for the low-rank system matrix LamBar.

    Internally factorizes either LamBar itself (``form="literal"``) or its
    scaled equivalent ``A = sigma_n^2 I + S Phi^T Phi S`` (``form="scaled"``,
    related by ``A = sigma_n^2 S LamBar S``). Either way :meth:`solve`
    answers ``LamBar x = b`` and :attr:`matrix` is the explicit symmetrized
    LamBar built from floored eigenvalues.
    """

    def __init__(self, es, noise_var, backend=None, form="scaled"):
        if noise_var <= 0:
            raise ValueError(f"noise_var must be > 0, got {noise_var!r}")
        if form not in ("scaled", "literal"):
            raise ValueError(f"form must be 'scaled' or 'literal', got {form!r}")
        backend = backend or Backend()
        self.form = form
        self.noise_var = float(noise_var)
        self._es = es
        # One dense (N, m) x (m, m) product; symmetric up to roundoff, so the
        # explicit symmetrization happens lazily in `matrix` only.
        self._gram = backend.gemm(es.phi, es.phi, transpose_a=True)
        self.lam_floored = es.lam_floored
        self.sqrt_lam = np.sqrt(self.lam_floored)
        if form == "scaled":
            a = self.sqrt_lam[:, None] * self._gram
            a *= self.sqrt_lam
            a.flat[:: es.size + 1] += self.noise_var
            self._factor = _factor_spd_or_lu(a, check_symmetric=False)
        else:
            self._factor = _factor_spd_or_lu(self.matrix, check_symmetric=False)

    @property
    def size(self):
        return self._es.size

    @property
    def matrix(self):
        """Explicit LamBar = diag(1/lam) + Phi^T Phi / sigma_n^2, symmetric."""
        m = np.diag(1.0 / self.lam_floored) + self._gram / self.noise_var
        return 0.5 * (m + m.T)

    def solve_inner(self, b):
        """Solve against whichever matrix was factorized (A or LamBar)."""
        return self._factor.solve(np.asarray(b, dtype=float))

    def solve(self, b):
        """Solve ``LamBar x = b``."""
        b = np.asarray(b, dtype=float)
        if self.form == "literal":
            return self._factor.solve(b)
        s = self.sqrt_lam
        scaled = s[:, None] * b if b.ndim == 2 else s * b
        x = self._factor.solve(scaled)
        x = s[:, None] * x if x.ndim == 2 else s * x
        return self.noise_var * x


def lambda_bar(es, noise_var, backend=None, form="scaled"):
    """Build the reusable :class:`LambdaBarSolve` handle for an eigensystem."""
    return LambdaBarSolve(es, noise_var, backend=backend, form=form)


def fagp_posterior_from_eigensystems(
    es, es_star, y, model, backend=None, want_cov=False, method="scaled"
):
    """Fast posterior given prebuilt train/test eigensystems.

    Split out from :func:`fagp_posterior` so the benchmark harness can time
    eigensystem construction and posterior-mean evaluation separately.
    """
    if not es.compatible_with(es_star):
        raise ValueError("train and test eigensystems are incompatible")
    if es.params != model.kernel:
        raise ValueError("eigensystem params do not match model.kernel")
    y = np.asarray(y, dtype=float)
    if y.shape != (es.phi.shape[0],):
        raise ValueError(f"y has shape {y.shape}, expected ({es.phi.shape[0]},)")
    backend = backend or Backend()
    sigma2 = model.noise_var
    handle = LambdaBarSolve(es, sigma2, backend=backend, form=method)
    phi, phis = es.phi, es_star.phi
    r = y - model.mean_const

    if method == "scaled":
        s = handle.sqrt_lam
        t = backend.gemm(phi, r, transpose_a=True)
        u = handle.solve_inner(s * t)
        w = s * u
    else:
        lam_f = handle.lam_floored
        t1 = r / sigma2
        t2 = backend.gemm(phi, t1, transpose_a=True)
        t3 = handle.solve(t2)
        t4 = backend.gemm(phi, t3)
        t5 = t1 - t4 / sigma2
        u = backend.gemm(phi, t5, transpose_a=True)
        w = lam_f * u
    if _FAULT_FLIP_MEAN_SIGN:
        w = -w
    mean = model.mean_const + backend.gemm(phis, w)

    cov = None
    if want_cov:
        m = es.size
        if method == "scaled":
            s = handle.sqrt_lam
            a_inv = handle.solve_inner(np.eye(m))
            inner = sigma2 * (s[:, None] * a_inv * s[None, :])
        else:
            lam_f = handle.lam_floored
            g = handle._gram / sigma2
            mid = g - g @ handle.solve(g)
            inner = np.diag(lam_f) - lam_f[:, None] * mid * lam_f[None, :]
        inner = 0.5 * (inner + inner.T)
        cov = backend.gemm(backend.gemm(phis, inner), phis, transpose_b=True)
        cov = 0.5 * (cov + cov.T)
    return PosteriorResult(mean=mean, cov=cov)


def fagp_posterior(
    train,
    Xstar,
    model,
    backend=None,
    want_cov=False,
    method="scaled",
    memory_cap=DEFAULT_MEMORY_CAP,
    delta2_variant=DELTA2_RHO_SQUARED,
):
    """Fast approximate GP posterior via the truncated eigendecomposition.

    Builds the train/test eigensystems (n = ``model.n_eigen`` eigenvalues
    per dimension, n^p tensor-product features) and evaluates the posterior
    through the low-rank inversion identity. Only an (n^p, n^p) system is
    ever factorized, so the cost is linear in the number of training points.

    Parameters
    ----------
    train : Dataset
        Training inputs/targets (any object with ``X`` and ``y``).
    Xstar : (N*, p) array_like
    model : GpModel
        Must have ``n_eigen`` set.
    backend : Backend, optional
        Serial by default.
    want_cov : bool
        Also compute the predictive covariance (the mean alone is cheaper).
    method : {"scaled", "literal"}
        Numerical route; see the module docstring.
    memory_cap : int
        Passed to eigensystem construction; oversized (n, p) raise
        :class:`~fagp.errors.BudgetError`.
    """
    if model.n_eigen is None:
        raise ValueError("model.n_eigen must be set for the fast posterior")
    p = model.kernel.p
    X = _as_points(train.X, p, "train.X")
    Xs = _as_points(Xstar, p, "Xstar")
    y = np.asarray(train.y, dtype=float)
    backend = backend or Backend()
    es = eigensystem(
        X, model.kernel, model.n_eigen, backend=backend,
        memory_cap=memory_cap, delta2_variant=delta2_variant,
    )
    es_star = eigensystem(
        Xs, model.kernel, model.n_eigen, backend=backend,
        memory_cap=memory_cap, delta2_variant=delta2_variant,
    )
    return fagp_posterior_from_eigensystems(
        es, es_star, y, model, backend=backend, want_cov=want_cov, method=method
    )
