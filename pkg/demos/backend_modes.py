#!/usr/bin/env python3
"""Execution backends: serial vs worker-parallel GEMM, and determinism.

The parallel backend partitions output rows across a thread pool. With
deterministic_reduction on, serial and parallel use one fixed block
partition and give bitwise-identical results for any worker count.
"""

import time

import numpy as np

from fagp import Backend

rng = np.random.default_rng(0)
A = rng.normal(size=(4000, 256))
B = rng.normal(size=(256, 256))

serial = Backend("serial")
parallel = Backend("parallel", workers=4)


def timeit(be, reps=5):
    be.gemm(A, B)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        be.gemm(A, B)
        times.append(time.perf_counter() - t0)
    return min(times)


t_s, t_p = timeit(serial), timeit(parallel)
C_s, C_p = serial.gemm(A, B), parallel.gemm(A, B)
print(f"gemm 4000x256 @ 256x256: serial {t_s * 1e3:.2f} ms, parallel(4) {t_p * 1e3:.2f} ms "
      f"(speedup {t_s / t_p:.2f}x, hardware-dependent)")
print(f"max relative difference: {np.abs(C_s - C_p).max() / np.abs(C_s).max():.2e}")

print()
print("Deterministic mode is bitwise identical across modes and worker counts:")
refs = [
    Backend("serial", deterministic_reduction=True).gemm(A, B),
    Backend("parallel", workers=2, deterministic_reduction=True).gemm(A, B),
    Backend("parallel", workers=8, deterministic_reduction=True).gemm(A, B),
]
print(f"  serial == parallel(2):  {np.array_equal(refs[0], refs[1])}")
print(f"  parallel(2) == parallel(8): {np.array_equal(refs[1], refs[2])}")

print()
print("SPD solves carry escalating jitter and report the failing pivot:")
from fagp import spd_solve
from fagp.errors import NumericalError

x = spd_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
print(f"  diag(2, 4) solve -> {x}")
try:
    spd_solve(np.diag([1.0, -1.0]), np.ones(2))
except NumericalError as exc:
    print(f"  indefinite matrix -> NumericalError (pivot {exc.pivot_index})")
