"""Gaussian-process regression with a low-rank eigendecomposed SE kernel.

The exact GP posterior needs an N x N solve. Expanding the
squared-exponential kernel in its eigenbasis and truncating at n terms per
dimension turns that into an (n^p, n^p) solve plus products with an
(N, n^p) feature matrix, making the cost linear in N. This package provides
the expansion (:mod:`fagp.mercer`), both posteriors (:mod:`fagp.posterior`),
exact kernels (:mod:`fagp.kernels`), serial/parallel execution backends
(:mod:`fagp.backend`), dataset generation (:mod:`fagp.datagen`), and a
timing benchmark harness (:mod:`fagp.bench`, CLI in :mod:`fagp.cli`).
"""

from .backend import Backend, TimingRecord, phase_scope, spd_solve
from .datagen import Dataset, generate, load_csv, save_csv
from .errors import BudgetError, ConfigError, CsvFormatError, NumericalError
from .kernels import ArdKernelParams, KernelParams1D, ard_kernel, gram_matrix, se_kernel
from .mercer import (
    EigenSystem,
    ShapeParams,
    eigenfunction_1d,
    eigensystem,
    eigenvalues_1d,
    multi_indices,
    reconstruct_kernel,
    shape_params,
)
from .posterior import (
    GpModel,
    PosteriorResult,
    exact_posterior,
    fagp_posterior,
    lambda_bar,
)

__version__ = "0.1.0"

__all__ = [
    "ArdKernelParams",
    "Backend",
    "BudgetError",
    "ConfigError",
    "CsvFormatError",
    "Dataset",
    "EigenSystem",
    "GpModel",
    "KernelParams1D",
    "NumericalError",
    "PosteriorResult",
    "ShapeParams",
    "TimingRecord",
    "ard_kernel",
    "eigenfunction_1d",
    "eigensystem",
    "eigenvalues_1d",
    "exact_posterior",
    "fagp_posterior",
    "generate",
    "gram_matrix",
    "lambda_bar",
    "load_csv",
    "multi_indices",
    "phase_scope",
    "reconstruct_kernel",
    "save_csv",
    "se_kernel",
    "shape_params",
    "spd_solve",
    "__version__",
]
