#!/usr/bin/env python3
"""The n^p blow-up: feature counts, memory estimates, and the safety cap.

With p input dimensions and n eigenvalues per dimension the expansion has
n^p tensor-product features: Lam is n^p x n^p and Phi is N x n^p. This is
the formulation's main limitation, so construction refuses up front when
the estimated memory exceeds a cap.
"""

import numpy as np

from fagp import ArdKernelParams, eigensystem, multi_indices
from fagp.errors import BudgetError
from fagp.mercer import estimate_bytes

print("Multi-index enumeration (n = 2, p = 2), first component slowest:")
print(" ", multi_indices(2, 2).tolist())

print()
N = 10000
print(f"Estimated eigensystem memory at N = {N}:")
print(f"{'p':>3} {'n':>4} {'features':>10} {'estimate':>12}")
for p, n in [(1, 128), (2, 11), (2, 30), (4, 7), (4, 10), (6, 8)]:
    m = n**p
    est = estimate_bytes(N, n, p)
    print(f"{p:>3} {n:>4} {m:>10} {est / 2**20:>10.1f} MiB")

print()
print("A 1 MiB cap refuses (n = 10, p = 4, N = 10000):")
try:
    eigensystem(np.zeros((N, 4)), ArdKernelParams.isotropic(4, 1.0), 10, memory_cap=1 << 20)
except BudgetError as exc:
    print(f"  BudgetError: {exc}")

print()
print("Within budget, features really are per-dimension products:")
rng = np.random.default_rng(1)
X = rng.uniform(-1, 1, size=(4, 3))
params = ArdKernelParams.isotropic(3, 1.0)
es = eigensystem(X, params, 3)
print(f"  p=3, n=3 -> Phi shape {es.phi.shape}, {len(es.indices)} multi-indices, "
      f"eigenvalue range [{es.lam.min():.2e}, {es.lam.max():.2e}]")
