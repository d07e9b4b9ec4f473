"""Dense linear-algebra execution contract: serial and multi-worker GEMM,
SPD solves with jitter escalation, and per-phase wall-clock timing.

A :class:`Backend` value fixes how matrix products are executed:

* ``serial`` — one plain BLAS call.
* ``parallel`` — the output rows are partitioned into blocks computed by a
  thread pool of ``workers`` threads, with BLAS pinned to one thread for
  the call so our partitioning is the only parallelism (no oversubscription).

With ``deterministic_reduction`` both modes use the same fixed 32-row block
partition and single-threaded BLAS, so results are bitwise identical across
modes, worker counts and runs. Without it, serial and parallel results may
differ in the last bits (they share no partitioning), but never beyond
normal rounding.

The environment variable ``FAGP_MAX_WORKERS`` caps the worker count; it is
read once, when the Backend is constructed.
"""

from __future__ import annotations

import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import get_lapack_funcs

from .errors import NumericalError

__all__ = [
    "ENV_MAX_WORKERS",
    "Backend",
    "SpdFactor",
    "LuFactor",
    "spd_solve",
    "PHASES",
    "TimingRecord",
    "phase_scope",
]

ENV_MAX_WORKERS = "FAGP_MAX_WORKERS"

_DET_BLOCK_ROWS = 32

_POOLS = {}
_CONTROLLER = None


def _worker_pool(workers):
    from concurrent.futures import ThreadPoolExecutor

    pool = _POOLS.get(workers)
    if pool is None:
        pool = ThreadPoolExecutor(max_workers=workers)
        _POOLS[workers] = pool
    return pool


def _blas_single_thread():
    """Context limiting BLAS to one thread for the duration of a call."""
    global _CONTROLLER
    if _CONTROLLER is None:
        from threadpoolctl import ThreadpoolController

        _CONTROLLER = ThreadpoolController()
    return _CONTROLLER.limit(limits=1, user_api="blas")


@dataclass(frozen=True)
class Backend:
    """Execution mode for dense products. Immutable and shareable."""

    mode: str = "serial"
    workers: int = 1
    deterministic_reduction: bool = False

    def __post_init__(self):
        if self.mode not in ("serial", "parallel"):
            raise ValueError(f"mode must be 'serial' or 'parallel', got {self.mode!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")
        cap = os.environ.get(ENV_MAX_WORKERS)
        if cap is not None:
            object.__setattr__(self, "workers", min(self.workers, max(1, int(cap))))

    def gemm(self, a, b, transpose_a=False, transpose_b=False):
        """Dense product ``op(a) @ op(b)`` where op transposes on request.

        ``b`` may be 1-d, in which case the result is the matrix-vector
        product. Raises ValueError when inner dimensions do not conform.
        """
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        opa = a.T if transpose_a else a
        opb = b.T if transpose_b else b
        if opa.ndim != 2 or opb.ndim not in (1, 2):
            raise ValueError("gemm expects a 2-d left operand and a 1-d or 2-d right operand")
        if opa.shape[1] != opb.shape[0]:
            raise ValueError(
                f"inner dimensions do not conform: op(a) is {opa.shape}, op(b) is {opb.shape}"
            )
        rows = opa.shape[0]
        out_shape = (rows,) if opb.ndim == 1 else (rows, opb.shape[1])

        if self.deterministic_reduction:
            block = _DET_BLOCK_ROWS
        elif self.mode == "parallel" and self.workers > 1:
            block = max(_DET_BLOCK_ROWS, -(-rows // self.workers))
        else:
            return opa @ opb

        out = np.empty(out_shape)
        starts = list(range(0, rows, block))

        def fill(start):
            stop = min(start + block, rows)
            out[start:stop] = opa[start:stop] @ opb

        with _blas_single_thread():
            if self.mode == "parallel" and self.workers > 1 and len(starts) > 1:
                pool = _worker_pool(self.workers)
                list(pool.map(fill, starts))
            else:
                for start in starts:
                    fill(start)
        return out

    def spd_solve(self, m, b):
        """Solve ``m @ x = b`` for symmetric positive definite m.

        Cholesky with escalating diagonal jitter; raises
        :class:`~fagp.errors.NumericalError` (carrying the failing pivot
        index) if m is not positive definite even with jitter.
        """
        return spd_solve(m, b)


def _check_symmetric(m, tol=1e-9):
    scale = max(1.0, float(np.abs(m).max()))
    asym = float(np.abs(m - m.T).max())
    if asym > tol * scale:
        raise ValueError(
            f"matrix is not symmetric within {tol:g} (max asymmetry {asym:.3e}, scale {scale:.3e})"
        )


_POTRF = get_lapack_funcs(("potrf",), (np.empty((1, 1)),))[0]


class SpdFactor:
    """Reusable Cholesky solve handle with escalating diagonal jitter.

    Jitter starts at ``1e-12 * trace / n`` and is multiplied by 10, up to
    three attempts after the clean try. Failure raises
    :class:`~fagp.errors.NumericalError` with ``pivot_index`` set to the
    1-based index of the first non-positive pivot.

    ``check_symmetric=False`` skips the symmetry precondition check, for
    callers whose matrix is symmetric by construction.
    """

    def __init__(self, m, jitter_attempts=3, check_symmetric=True):
        m = np.ascontiguousarray(np.asarray(m, dtype=float))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if check_symmetric:
            _check_symmetric(m)
        potrf = _POTRF
        n = m.shape[0]
        base = 1e-12 * float(np.trace(m)) / n
        jitters = [0.0] + [base * 10**k for k in range(jitter_attempts)]
        info = 0
        for jit in jitters:
            work = m if jit == 0.0 else m + jit * np.eye(n)
            c, info = potrf(work, lower=1, overwrite_a=False)
            if info == 0:
                self._c = c
                self.jitter = jit
                self.shape = m.shape
                return
        raise NumericalError(
            f"matrix of order {n} is not positive definite: leading minor {info} "
            f"failed even with diagonal jitter up to {jitters[-1]:.3e}",
            pivot_index=int(info),
        )

    def solve(self, b):
        # inputs are produced internally; skip scipy's finiteness scan
        return sla.cho_solve((self._c, True), b, overwrite_b=False, check_finite=False)


class LuFactor:
    """Pivoted-LU solve handle; fallback when a matrix is not numerically SPD."""

    def __init__(self, m):
        m = np.asarray(m, dtype=float)
        self._lu, self._piv = sla.lu_factor(m)
        self.shape = m.shape

    def solve(self, b):
        return sla.lu_solve((self._lu, self._piv), b, check_finite=False)


def spd_solve(m, b, jitter_attempts=3):
    """One-shot SPD solve; see :class:`SpdFactor`."""
    return SpdFactor(m, jitter_attempts=jitter_attempts).solve(np.asarray(b, dtype=float))


PHASES = ("setup", "eigen", "mean", "retrieve")


@dataclass
class TimingRecord:
    """Accumulated wall time of the four benchmark phases for one repetition."""

    backend_mode: str = "serial"
    N: int = 0
    p: int = 0
    n: int = 0
    rep_id: int = 0
    setup_s: float = 0.0
    eigen_s: float = 0.0
    mean_s: float = 0.0
    retrieve_s: float = 0.0
    _open: str | None = field(default=None, repr=False, compare=False)

    @property
    def total_s(self):
        return self.setup_s + self.eigen_s + self.mean_s + self.retrieve_s

    def phase_seconds(self, phase):
        if phase not in PHASES:
            raise ValueError(f"unknown phase {phase!r}, expected one of {PHASES}")
        return getattr(self, f"{phase}_s")


@contextmanager
def phase_scope(record, phase):
    """Accumulate monotonic wall time of the enclosed block into one phase.

    Sequential scopes of the same phase add up. Scopes must not nest:
    opening any phase while another is open on the same record is an error.
    """
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}, expected one of {PHASES}")
    if record._open is not None:
        raise RuntimeError(
            f"phase scope {phase!r} opened while {record._open!r} is still open; "
            f"scopes must not nest"
        )
    record._open = phase
    start = time.perf_counter()
    try:
        yield record
    finally:
        elapsed = time.perf_counter() - start
        setattr(record, f"{phase}_s", getattr(record, f"{phase}_s") + elapsed)
        record._open = None
