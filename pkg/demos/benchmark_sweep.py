#!/usr/bin/env python3
"""A miniature end-to-end timing sweep through the library API.

The real harness (`fagp bench`) runs N = 10000 with Monte Carlo
repetitions; this demo shrinks everything so it finishes in seconds and
shows the full pipeline: sweep -> results rows -> per-dimension plot
tables.

Equivalent CLI session:

    fagp bench --out results.csv --n-samples 1500 --n-test 200 --reps 3
    fagp plotdata --results results.csv --out-dir plots/
"""

import tempfile
from pathlib import Path

from fagp.bench import (
    BenchConfig,
    aggregate_plotdata,
    run_sweep,
    write_plotdata_csvs,
    write_results_csv,
)

config = BenchConfig(
    n_samples=1500,
    n_test=200,
    dims=(1, 2),
    eigen_counts={1: (8, 16, 32), 2: (3, 5, 7)},
    reps=3,
    backends=("serial", "parallel"),
    workers=4,
)

print(f"sweep: N={config.n_samples}, dims={config.dims}, reps={config.reps}, "
      f"backends={config.backends}")
rows = run_sweep(config)
print(f"-> {len(rows)} result rows "
      f"({len(config.backends)} backends x 6 (p, n) points x {config.reps} reps x 4 phases)")

out_dir = Path(tempfile.mkdtemp(prefix="fagp_demo_"))
results_csv = out_dir / "results.csv"
write_results_csv(rows, results_csv)
print(f"results written to {results_csv}")

tables = aggregate_plotdata(rows)
for path in write_plotdata_csvs(tables, out_dir):
    print(f"plot table written to {path}")

print()
for p, table in sorted(tables.items()):
    print(f"p = {p}: mean total seconds over {config.reps} reps")
    print(f"  {'backend':>9} {'n':>4} {'total':>10} {'eigen':>10} {'mean':>10}")
    for row in table:
        backend, n, mean_total, _, _, mean_eigen, mean_mean, _, *_ = row
        print(f"  {backend:>9} {n:>4} {mean_total:>10.5f} {mean_eigen:>10.5f} {mean_mean:>10.5f}")
