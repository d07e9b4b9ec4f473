"""Eigendecomposition of the squared-exponential kernel.

The univariate SE kernel ``exp(-eps^2 (x - x')^2)`` admits a series expansion

    k(x, x') = sum_i lam_i phi_i(x) phi_i(x')

whose eigenfunctions are Gaussian-damped Hermite polynomials orthonormal
under the weight ``w(x) = (rho / sqrt(pi)) exp(-rho^2 x^2)``, and whose
eigenvalues decay geometrically. With the shape constants

    beta    = (1 + (2 eps / rho)^2)^(1/4)
    delta^2 = (rho^2 / 2) (beta^2 - 1)
    gamma_i = sqrt(beta / (2^(i-1) (i-1)!))

the pairs are

    phi_i(x) = gamma_i exp(-delta^2 x^2) H_{i-1}(rho beta x)      (physicists' H)
    lam_i    = sqrt(rho^2 / (rho^2 + delta^2 + eps^2))
               * (eps^2 / (rho^2 + delta^2 + eps^2))^(i-1)

Truncating at n terms and, for p-variate inputs, taking tensor products over
all n^p multi-indices yields the low-rank factorization

    k(X, X') ~= Phi_X Lam Phi_X'^T

with ``Phi_X`` of shape (N, n^p) and ``Lam`` diagonal. That factorization is
what the fast posterior in :mod:`fagp.posterior` consumes.

Two numerical points drive the implementation:

* ``gamma_i`` underflows and ``H_{i-1}`` overflows for large i. The product
  is evaluated directly through the normalized recurrence
  ``h_0 = 1, h_1 = z sqrt(2), h_{k+1} = z sqrt(2/(k+1)) h_k - sqrt(k/(k+1)) h_{k-1}``
  where ``h_k = H_k / sqrt(2^k k!)``, keeping every term O(1).
* Product eigenvalues underflow for large n and p. :class:`EigenSystem`
  stores the raw values (so reconstruction stays exact, including exact
  zeros at eps = 0) and exposes :attr:`EigenSystem.lam_floored` for the
  solve paths that need ``Lam^{-1}`` to stay finite.

``delta2_variant`` selects between the default ``(rho^2 / 2)(beta^2 - 1)``
and the alternative ``(rho / 2)(beta^2 - 1)`` sometimes seen in print. The
two coincide at rho = 1; for rho != 1 only the default reproduces the exact
kernel (see ``demos/kernel_reconstruction.py``), which is why it is the
default. The variant is recorded on derived objects and must match when
eigensystems are combined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, NumericalError
from .kernels import ArdKernelParams, KernelParams1D

__all__ = [
    "DELTA2_RHO_SQUARED",
    "DELTA2_RHO_LINEAR",
    "DEFAULT_MEMORY_CAP",
    "LAMBDA_FLOOR_REL",
    "ShapeParams",
    "shape_params",
    "normalized_hermite",
    "eigenvalues_1d",
    "eigenfunction_1d",
    "multi_indices",
    "estimate_bytes",
    "EigenSystem",
    "eigensystem",
    "reconstruct_kernel",
]

DELTA2_RHO_SQUARED = "rho_squared"
DELTA2_RHO_LINEAR = "rho_linear"

#: Default cap on the estimated memory of one eigensystem (bytes).
DEFAULT_MEMORY_CAP = 8 << 30

#: Relative floor applied to product eigenvalues before inversion.
LAMBDA_FLOOR_REL = 1e-14


@dataclass(frozen=True)
class ShapeParams:
    """Shape constants (beta, delta^2) and normalizers gamma_1..gamma_n."""

    beta: float
    delta2: float
    gamma: np.ndarray


def _delta2(rho, beta, variant):
    if variant == DELTA2_RHO_SQUARED:
        return (rho * rho / 2.0) * (beta * beta - 1.0)
    if variant == DELTA2_RHO_LINEAR:
        return (rho / 2.0) * (beta * beta - 1.0)
    raise ValueError(f"unknown delta2 variant {variant!r}")


def shape_params(params, n, delta2_variant=DELTA2_RHO_SQUARED):
    """Shape constants of the univariate expansion, truncated at n terms.

    ``beta >= 1`` and ``delta2 >= 0``, both with equality exactly when
    ``epsilon == 0``. The normalizers satisfy
    ``gamma_{i+1} / gamma_i = 1 / sqrt(2 i)``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    eps, rho = params.epsilon, params.rho
    beta = (1.0 + (2.0 * eps / rho) ** 2) ** 0.25
    delta2 = _delta2(rho, beta, delta2_variant)
    i = np.arange(1, n + 1)
    # gamma_i = sqrt(beta / (2^(i-1) (i-1)!)) via logs; fine up to huge n.
    log_gamma = 0.5 * (
        math.log(beta) - (i - 1) * math.log(2.0) - np.array([math.lgamma(k) for k in i])
    )
    return ShapeParams(beta=beta, delta2=delta2, gamma=np.exp(log_gamma))


def normalized_hermite(z, count):
    """Normalized physicists' Hermite values ``h_k(z) = H_k(z) / sqrt(2^k k!)``.

    Evaluated for k = 0..count-1 with the stable recurrence
    ``h_{k+1} = z sqrt(2/(k+1)) h_k - sqrt(k/(k+1)) h_{k-1}``, which keeps
    magnitudes O(1) where the raw ``H_k`` would overflow.

    Returns an array of shape ``z.shape + (count,)``.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    z = np.asarray(z, dtype=float)
    out = np.empty(z.shape + (count,))
    out[..., 0] = 1.0
    if count > 1:
        out[..., 1] = z * math.sqrt(2.0)
    for k in range(1, count - 1):
        out[..., k + 1] = (
            z * math.sqrt(2.0 / (k + 1)) * out[..., k]
            - math.sqrt(k / (k + 1)) * out[..., k - 1]
        )
    return out


def eigenvalues_1d(params, n, delta2_variant=DELTA2_RHO_SQUARED):
    """First n eigenvalues of the univariate expansion (raw, no floor).

    Geometric: ``lam_i = lam_1 * r^(i-1)`` with
    ``lam_1 = sqrt(rho^2 / (rho^2 + delta^2 + eps^2))`` and
    ``r = eps^2 / (rho^2 + delta^2 + eps^2)``. For ``eps == 0`` this is
    (1, 0, 0, ...): the constant kernel has rank one.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    eps, rho = params.epsilon, params.rho
    sp = shape_params(params, 1, delta2_variant)
    denom = rho * rho + sp.delta2 + eps * eps
    lam1 = math.sqrt(rho * rho / denom)
    ratio = eps * eps / denom
    return lam1 * ratio ** np.arange(n)


def eigenfunction_1d(i, x, params, delta2_variant=DELTA2_RHO_SQUARED):
    """Value of the i-th univariate eigenfunction (i >= 1) at x.

    ``phi_i(x) = gamma_i exp(-delta^2 x^2) H_{i-1}(rho beta x)``, evaluated
    as ``sqrt(beta) exp(-delta^2 x^2) h_{i-1}(rho beta x)`` with the
    normalized recurrence. phi_i has parity (-1)^(i-1) about the origin.

    Accepts scalar or array x; raises on non-finite x.
    """
    if i < 1:
        raise ValueError(f"eigenfunction index must be >= 1, got {i}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("eigenfunction_1d requires finite x")
    sp = shape_params(params, 1, delta2_variant)
    z = params.rho * sp.beta * x
    # Rolling two-term recurrence; only the final degree is kept.
    h_prev = np.ones_like(z)
    if i == 1:
        h = h_prev
    else:
        h = z * math.sqrt(2.0)
        for k in range(1, i - 1):
            h, h_prev = (
                z * math.sqrt(2.0 / (k + 1)) * h - math.sqrt(k / (k + 1)) * h_prev,
                h,
            )
    val = math.sqrt(sp.beta) * np.exp(-sp.delta2 * x * x) * h
    return val if val.ndim else float(val)


def multi_indices(n, p, max_count=None):
    """All n^p index combinations, each component in 1..n.

    Ordered lexicographically with the first component slowest, e.g.
    (1,1), (1,2), (2,1), (2,2) for n = p = 2. Returned as an int array of
    shape (n^p, p).

    Raises
    ------
    BudgetError
        If ``max_count`` is given and n^p exceeds it.
    """
    if n < 1 or p < 1:
        raise ValueError(f"n and p must be >= 1, got n={n}, p={p}")
    count = n**p
    if max_count is not None and count > max_count:
        raise BudgetError(
            f"n^p = {n}^{p} = {count} exceeds the configured limit of {max_count}",
            n_features=count,
        )
    grids = np.meshgrid(*([np.arange(1, n + 1)] * p), indexing="ij")
    return np.stack(grids, axis=-1).reshape(count, p)


def estimate_bytes(N, n, p):
    """Estimated float64 memory of an eigensystem over N points: the
    (N, n^p) feature matrix, one (n^p, n^p) work matrix for the solve path,
    and two n^p vectors."""
    m = n**p
    return 8 * (N * m + m * m + 2 * m)


@dataclass
class EigenSystem:
    """Truncated tensor-product eigendecomposition evaluated on a point set.

    Attributes
    ----------
    lam : (n^p,) ndarray
        Raw product eigenvalues, one per multi-index. May contain exact
        zeros (eps = 0) or underflowed values; see :attr:`lam_floored`.
    phi : (N, n^p) ndarray
        Feature matrix; column j is the tensor-product eigenfunction of
        ``indices[j]`` evaluated on the N input rows.
    indices : (n^p, p) ndarray
        Multi-indices (1-based components), same column order as phi.
    params, n, delta2_variant
        Construction inputs, kept so compatibility can be checked when two
        systems are combined.
    """

    lam: np.ndarray
    phi: np.ndarray
    indices: np.ndarray
    params: ArdKernelParams
    n: int
    delta2_variant: str = DELTA2_RHO_SQUARED
    floor_rel: float = field(default=LAMBDA_FLOOR_REL, repr=False)

    @property
    def size(self):
        """Number of tensor-product features, n^p."""
        return self.lam.shape[0]

    @property
    def lam_floored(self):
        """Eigenvalues floored at ``max(lam) * floor_rel``; strictly positive.

        Inverse-bearing solve paths use these so ``Lam^{-1}`` stays finite.
        Reconstruction uses the raw values.
        """
        return np.maximum(self.lam, self.lam.max() * self.floor_rel)

    def compatible_with(self, other):
        return (
            self.params == other.params
            and self.n == other.n
            and self.delta2_variant == other.delta2_variant
        )


def _phi_1d(x_col, params_1d, n, delta2_variant):
    """(N, n) matrix of the first n univariate eigenfunctions at x_col."""
    sp = shape_params(params_1d, n, delta2_variant)
    z = params_1d.rho * sp.beta * x_col
    h = normalized_hermite(z, n)
    return math.sqrt(sp.beta) * np.exp(-sp.delta2 * x_col * x_col)[:, None] * h


def _assemble_phi(X, params, n, delta2_variant):
    """Row block of the tensor-product feature matrix."""
    N = X.shape[0]
    phi = np.ones((N, 1))
    for d in range(params.p):
        phi_d = _phi_1d(X[:, d], params.per_dim[d], n, delta2_variant)
        # Last dimension varies fastest, matching multi_indices order.
        phi = (phi[:, :, None] * phi_d[:, None, :]).reshape(N, -1)
    return phi


def eigensystem(
    X,
    params,
    n,
    backend=None,
    memory_cap=DEFAULT_MEMORY_CAP,
    delta2_variant=DELTA2_RHO_SQUARED,
):
    """Build the :class:`EigenSystem` of the n^p tensor-product pairs on X.

    ``lam[j]`` is the product of the per-dimension eigenvalues selected by
    ``indices[j]``; ``phi[i, j]`` the product of the per-dimension
    eigenfunction values at row i. Column order follows
    :func:`multi_indices`. Deterministic: identical inputs give bit-identical
    results for any backend and worker count (rows are independent; no
    cross-row reductions).

    Parameters
    ----------
    X : (N, p) array_like
        Input points; must be finite.
    params : ArdKernelParams
    n : int
        Eigenvalues per dimension.
    backend : Backend, optional
        If parallel, feature rows are assembled in worker threads.
    memory_cap : int
        Refuse construction when :func:`estimate_bytes` exceeds this.

    Raises
    ------
    BudgetError
        Estimated memory above ``memory_cap``.
    NumericalError
        Non-finite feature value (names the offending row and column).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != params.p:
        raise ValueError(f"X has {X.shape[1]} columns, params expect p={params.p}")
    if not np.all(np.isfinite(X)):
        raise ValueError("X must be finite")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    N, p = X.shape
    est = estimate_bytes(N, n, p)
    if est > memory_cap:
        raise BudgetError(
            f"eigensystem with n^p = {n}^{p} = {n**p} features over N={N} points "
            f"needs an estimated {est} bytes, above the cap of {memory_cap} bytes; "
            f"reduce n or p, or raise the cap",
            n_features=n**p,
            estimated_bytes=est,
            cap_bytes=memory_cap,
        )

    lam = np.ones(1)
    for d in range(p):
        lam_d = eigenvalues_1d(params.per_dim[d], n, delta2_variant)
        lam = (lam[:, None] * lam_d[None, :]).reshape(-1)

    if backend is not None and backend.mode == "parallel" and backend.workers > 1 and N > 1:
        from concurrent.futures import ThreadPoolExecutor

        phi = np.empty((N, n**p))
        block = max(32, -(-N // backend.workers))
        starts = range(0, N, block)

        def fill(start):
            stop = min(start + block, N)
            phi[start:stop] = _assemble_phi(X[start:stop], params, n, delta2_variant)

        with ThreadPoolExecutor(max_workers=backend.workers) as pool:
            list(pool.map(fill, starts))
    else:
        phi = _assemble_phi(X, params, n, delta2_variant)

    if not np.all(np.isfinite(phi)):
        i, j = np.argwhere(~np.isfinite(phi))[0]
        raise NumericalError(
            f"non-finite feature value at row {i}, column {j} "
            f"(point {X[i]}, multi-index {tuple(multi_indices(n, p)[j])})"
        )
    return EigenSystem(
        lam=lam,
        phi=phi,
        indices=multi_indices(n, p),
        params=params,
        n=n,
        delta2_variant=delta2_variant,
    )


def reconstruct_kernel(es_a, es_b):
    """Low-rank kernel approximation ``Phi_A Lam Phi_B^T``.

    Uses the raw (unfloored) eigenvalues through their square roots, so the
    result is exactly symmetric when both systems share one point set and
    exact zeros contribute nothing. Both systems must have been built with
    the same params, n and delta2 variant.
    """
    if not es_a.compatible_with(es_b):
        raise ValueError(
            "eigensystems were built with different params, n, or delta2 variant"
        )
    s = np.sqrt(es_a.lam)
    return (es_a.phi * s) @ (es_b.phi * s).T
