"""Command-line interface.

Subcommands: ``generate`` (seeded datasets), ``bench`` (Monte Carlo timing
sweep), ``verify`` (numerical self-checks), ``predict`` (one-shot
fit/predict CSV to CSV), ``plotdata`` (aggregate bench results into
plot-ready CSVs).

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 I/O or
file-format error, 4 numerical or memory-budget error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .backend import Backend
from .datagen import dataset_filename, generate, load_csv, save_csv
from .errors import BudgetError, ConfigError, CsvFormatError, NumericalError
from .kernels import ArdKernelParams, KernelParams1D
from .posterior import GpModel, exact_posterior, fagp_posterior
from .verify import run_verification

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; this tool reserves 2 for
    # verification failures, so remap usage errors to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="fagp", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    gen = sub.add_parser("generate", help="write seeded benchmark datasets")
    gen.add_argument("--config", type=Path, help="sweep config; writes every (p, rep) dataset")
    gen.add_argument("--out-dir", type=Path, default=Path("."), help="output directory")
    gen.add_argument("--n-samples", type=int, default=10000)
    gen.add_argument("--dim", type=int, default=1, help="input dimension p")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--noise-std", type=float, default=0.05)
    gen.add_argument("--domain", type=float, nargs=2, default=(-1.0, 1.0),
                     metavar=("A", "B"), help="sampling interval per dimension")

    ben = sub.add_parser("bench", help="run the Monte Carlo timing sweep")
    ben.add_argument("--config", type=Path, help="key = value sweep config file")
    ben.add_argument("--out", type=Path, default=Path("results.csv"))
    ben.add_argument("--data-dir", type=Path, help="load train_N*_p*_seed*.csv from here when present")
    ben.add_argument("--append", action="store_true", help="append to an existing results file")
    ben.add_argument("--quiet", action="store_true")
    ben.add_argument("--reps", type=int)
    ben.add_argument("--dims", type=str, help="comma-separated p values")
    ben.add_argument("--backends", type=str, help="comma-separated subset of serial,parallel")
    ben.add_argument("--n-samples", type=int)
    ben.add_argument("--n-test", type=int)
    ben.add_argument("--workers", type=int)
    ben.add_argument("--memory-cap", type=int)
    ben.add_argument("--seed-base", type=int)

    ver = sub.add_parser("verify", help="run the numerical self-checks")
    ver.add_argument("--level", choices=("fast", "full"), default="fast")
    ver.add_argument("--inject-fault", action="store_true",
                     help="flip a sign inside the fast-mean pipeline to prove failures are caught")

    pre = sub.add_parser("predict", help="fit on a train CSV, predict at test CSV inputs")
    pre.add_argument("--train", type=Path, required=True)
    pre.add_argument("--test", type=Path, required=True,
                     help="CSV with x1..xp columns (a y column, if present, is ignored)")
    pre.add_argument("--out", type=Path, required=True)
    pre.add_argument("--epsilon", type=str, default="1.0",
                     help="inverse length-scale, scalar or comma list per dimension")
    pre.add_argument("--rho", type=str, default="1.0",
                     help="eigenvalue decay scale, scalar or comma list per dimension")
    pre.add_argument("--noise-var", type=float, default=1e-2)
    pre.add_argument("--n-eigen", type=int, default=16, help="eigenvalues per dimension (fast method)")
    pre.add_argument("--method", choices=("fast", "exact"), default="fast")
    pre.add_argument("--mean-const", type=float, default=0.0)
    pre.add_argument("--cov", action="store_true", help="also write per-point posterior variance")
    pre.add_argument("--backend", choices=("serial", "parallel"), default="serial")
    pre.add_argument("--workers", type=int, default=8)

    plo = sub.add_parser("plotdata", help="aggregate bench results into per-p plot CSVs")
    plo.add_argument("--results", type=Path, required=True)
    plo.add_argument("--out-dir", type=Path, default=Path("."))
    return parser


def _cmd_generate(args):
    if args.n_samples < 1:
        raise ConfigError(f"--n-samples must be >= 1, got {args.n_samples}")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    if args.config is not None:
        cfg = bench_mod.parse_config_file(args.config)
        written = []
        for p in cfg.dims:
            for rep in range(cfg.reps):
                seed = bench_mod.train_seed(cfg, p, rep)
                ds = generate(cfg.n_samples, p, seed, cfg.noise_std, domain=(-1.0, 1.0))
                path = args.out_dir / dataset_filename(cfg.n_samples, p, seed)
                save_csv(ds, path)
                written.append((path, ds))
    else:
        if args.dim < 1:
            raise ConfigError(f"--dim must be >= 1, got {args.dim}")
        ds = generate(args.n_samples, args.dim, args.seed, args.noise_std,
                      domain=tuple(args.domain))
        path = args.out_dir / dataset_filename(args.n_samples, args.dim, args.seed)
        save_csv(ds, path)
        written = [(path, ds)]
    for path, ds in written:
        print(f"wrote {path} (N={ds.N}, p={ds.p}, seed={ds.seed})")
    return EXIT_OK


def _bench_config(args):
    cfg = bench_mod.parse_config_file(args.config) if args.config else bench_mod.BenchConfig()
    from dataclasses import replace

    overrides = {}
    for attr, key in [
        ("reps", "reps"), ("n_samples", "n_samples"), ("n_test", "n_test"),
        ("workers", "workers"), ("memory_cap", "memory_cap"), ("seed_base", "seed_base"),
    ]:
        val = getattr(args, attr)
        if val is not None:
            overrides[key] = val
    if args.dims:
        overrides["dims"] = tuple(int(v) for v in args.dims.split(","))
    if args.backends:
        overrides["backends"] = tuple(v.strip() for v in args.backends.split(","))
    return replace(cfg, **overrides).validate()


def _cmd_bench(args):
    cfg = _bench_config(args)
    append = args.append and args.out.exists()
    progress = None if args.quiet else (lambda msg: print(msg, flush=True))
    with open(args.out, "a" if append else "w", newline="") as fh:
        if fh.tell() == 0:
            fh.write(bench_mod.RESULTS_HEADER + "\n")

        def sink(row):
            fh.write(bench_mod.format_row(row) + "\n")
            fh.flush()

        rows = bench_mod.run_sweep(cfg, data_dir=args.data_dir, row_sink=sink, progress=progress)
    n_skip = sum(1 for r in rows if r[4] == bench_mod.SKIP_PHASE)
    print(f"wrote {len(rows)} rows to {args.out} ({n_skip} skip sentinel(s))")
    return EXIT_OK


def _cmd_verify(args):
    start = time.perf_counter()
    ok, results = run_verification(level=args.level, inject_fault=args.inject_fault)
    elapsed = time.perf_counter() - start
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED ({len(failed)}/{len(results)}): {', '.join(failed)}  [{elapsed:.1f} s]")
        return EXIT_VERIFY
    print(f"all {len(results)} checks passed  [{elapsed:.1f} s]")
    return EXIT_OK


def _parse_per_dim(text, name, p):
    vals = [float(v) for v in text.split(",") if v.strip()]
    if len(vals) == 1:
        vals = vals * p
    if len(vals) != p:
        raise ConfigError(f"--{name} needs 1 or {p} comma-separated values, got {len(vals)}")
    return vals


def _load_test_inputs(path, p):
    # Accept either a full dataset CSV or a header of x1..xp only.
    with open(path) as fh:
        header = fh.readline().strip()
    if header.endswith(",y"):
        return load_csv(path).X
    cols = header.split(",")
    if cols != [f"x{j + 1}" for j in range(len(cols))]:
        raise CsvFormatError(path, 1, f"malformed header {header!r}, expected x1,...,xp[,y]")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(cols):
        raise CsvFormatError(path, 2, f"expected {len(cols)} fields per row")
    return data


def _cmd_predict(args):
    train = load_csv(args.train)
    p = train.p
    eps = _parse_per_dim(args.epsilon, "epsilon", p)
    rho = _parse_per_dim(args.rho, "rho", p)
    kernel = ArdKernelParams(tuple(KernelParams1D(e, r) for e, r in zip(eps, rho)))
    Xstar = _load_test_inputs(args.test, p)
    if Xstar.shape[1] != p:
        raise ConfigError(f"test inputs have {Xstar.shape[1]} columns, train has p={p}")
    model = GpModel(kernel, args.noise_var, mean_const=args.mean_const, n_eigen=args.n_eigen)
    backend = Backend(args.backend, workers=args.workers)
    if args.method == "exact":
        result = exact_posterior(train, Xstar, model, want_cov=args.cov)
    else:
        result = fagp_posterior(train, Xstar, model, backend=backend, want_cov=args.cov)
    cols = [f"x{j + 1}" for j in range(p)] + ["mean"] + (["var"] if args.cov else [])
    with open(args.out, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        var = np.diag(result.cov) if args.cov else None
        for i in range(Xstar.shape[0]):
            fields = [f"{v:.17g}" for v in Xstar[i]] + [f"{result.mean[i]:.17g}"]
            if var is not None:
                fields.append(f"{var[i]:.17g}")
            fh.write(",".join(fields) + "\n")
    print(f"wrote {Xstar.shape[0]} predictions to {args.out}")
    return EXIT_OK


def _cmd_plotdata(args):
    rows = bench_mod.read_results_csv(args.results)
    tables = bench_mod.aggregate_plotdata(rows)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for path in bench_mod.write_plotdata_csvs(tables, args.out_dir):
        print(f"wrote {path}")
    return EXIT_OK


_COMMANDS = {
    "generate": _cmd_generate,
    "bench": _cmd_bench,
    "verify": _cmd_verify,
    "predict": _cmd_predict,
    "plotdata": _cmd_plotdata,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CsvFormatError as exc:
        print(f"fagp: file format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (BudgetError, NumericalError) as exc:
        print(f"fagp: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"fagp: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"fagp: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
