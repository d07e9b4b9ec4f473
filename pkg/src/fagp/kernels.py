"""Exact squared-exponential (SE) kernels with per-dimension inverse length-scales.

The univariate kernel has unit amplitude, ``k(x, x') = exp(-eps^2 (x - x')^2)``.
The multivariate form applies one inverse length-scale per input dimension
(automatic relevance determination) and is the product of the per-dimension
univariate kernels.

Gram matrices here are exact pairwise evaluations. They serve as the
reference that the truncated eigendecomposition in :mod:`fagp.mercer` is
checked against, and they back the exact posterior in :mod:`fagp.posterior`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "KernelParams1D",
    "ArdKernelParams",
    "se_kernel",
    "ard_kernel",
    "gram_matrix",
]


@dataclass(frozen=True)
class KernelParams1D:
    """Parameters of one univariate SE kernel.

    Parameters
    ----------
    epsilon : float
        Inverse length-scale, >= 0. Zero gives the constant kernel.
    rho : float
        Global scale factor controlling how fast the expansion eigenvalues
        decay, > 0. Irrelevant for exact kernel evaluation but carried here
        because the eigendecomposition needs one value per dimension.
    """

    epsilon: float
    rho: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        if not np.isfinite(self.rho) or self.rho <= 0:
            raise ValueError(f"rho must be finite and > 0, got {self.rho!r}")


@dataclass(frozen=True)
class ArdKernelParams:
    """Per-dimension SE kernel parameters for p-variate inputs."""

    per_dim: tuple[KernelParams1D, ...]

    def __post_init__(self):
        per_dim = tuple(self.per_dim)
        if len(per_dim) < 1:
            raise ValueError("ArdKernelParams needs at least one dimension")
        if not all(isinstance(k, KernelParams1D) for k in per_dim):
            raise TypeError("per_dim entries must be KernelParams1D")
        object.__setattr__(self, "per_dim", per_dim)

    @classmethod
    def isotropic(cls, p, epsilon, rho=1.0):
        """Same (epsilon, rho) in every one of ``p`` dimensions."""
        return cls(tuple(KernelParams1D(epsilon, rho) for _ in range(p)))

    @property
    def p(self):
        return len(self.per_dim)

    @property
    def epsilons(self):
        return np.array([k.epsilon for k in self.per_dim])

    @property
    def rhos(self):
        return np.array([k.rho for k in self.per_dim])


def se_kernel(x, x2, params):
    """Univariate SE kernel ``exp(-eps^2 (x - x2)^2)``.

    Symmetric in its arguments and valued in (0, 1]. Accepts scalars or
    broadcastable arrays.
    """
    t = params.epsilon * (np.asarray(x, dtype=float) - np.asarray(x2, dtype=float))
    return np.exp(-(t * t))


def ard_kernel(x, x2, params):
    """p-variate SE kernel ``exp(-sum_j eps_j^2 (x_j - x2_j)^2)``.

    Equals the product of the per-dimension :func:`se_kernel` values.

    Raises
    ------
    ValueError
        If the input lengths do not match ``params.p``.
    """
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != (params.p,) or x2.shape != (params.p,):
        raise ValueError(
            f"expected two vectors of length p={params.p}, got shapes {x.shape} and {x2.shape}"
        )
    # Accumulate in dimension order with the same per-term expression as
    # gram_matrix so the two agree to the last bit.
    s = 0.0
    for j, k in enumerate(params.per_dim):
        t = k.epsilon * (x[j] - x2[j])
        s += t * t
    return np.exp(-s)


def gram_matrix(A, B, params):
    """Exact kernel matrix: entry (i, j) is ``ard_kernel(A[i], B[j], params)``.

    ``gram_matrix(A, A, params)`` is exactly symmetric with unit diagonal;
    the accumulation order over dimensions is fixed so entries match the
    scalar :func:`ard_kernel` bit for bit.

    Parameters
    ----------
    A : (N, p) array_like
    B : (M, p) array_like

    Returns
    -------
    (N, M) ndarray
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != params.p or B.shape[1] != params.p:
        raise ValueError(
            f"column counts must equal p={params.p}, got {A.shape[1]} and {B.shape[1]}"
        )
    acc = np.zeros((A.shape[0], B.shape[0]))
    for j, k in enumerate(params.per_dim):
        t = k.epsilon * (A[:, j][:, None] - B[:, j][None, :])
        acc += t * t
    return np.exp(-acc)
