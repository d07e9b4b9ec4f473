"""Benchmark harness: Monte Carlo timing sweeps over (backend, p, n).

Each sweep point draws a fresh seeded dataset, builds the train/test
eigensystems, evaluates the fast posterior mean on the test inputs, and
records four wall-clock phases:

    setup     staging contiguous input buffers
    eigen     eigenvalue and feature-matrix construction (train and test)
    mean      posterior-mean pipeline
    retrieve  materializing the result vector

One CSV row is written per phase: ``backend,p,n,rep,phase,seconds``. A
sweep point whose estimated memory exceeds the cap is recorded as a single
sentinel row with phase ``skipped`` and seconds ``-1`` instead of aborting
the sweep.

Seeding: the training dataset of sweep point (p, rep) uses
``seed_base + 100000 * p + rep``; the test inputs use an independent stream
at that seed plus 2**31. Everything except the ``seconds`` column is
deterministic given the config.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .backend import PHASES, Backend, TimingRecord, phase_scope
from .datagen import dataset_filename, generate, load_csv
from .errors import BudgetError, ConfigError, CsvFormatError
from .kernels import ArdKernelParams
from .mercer import DEFAULT_MEMORY_CAP, estimate_bytes, eigensystem
from .posterior import GpModel, fagp_posterior_from_eigensystems

__all__ = [
    "BenchConfig",
    "DEFAULT_EIGEN_COUNTS",
    "RESULTS_HEADER",
    "PLOTDATA_HEADER",
    "parse_config_file",
    "train_seed",
    "xstar_seed",
    "run_sweep",
    "write_results_csv",
    "read_results_csv",
    "aggregate_plotdata",
    "write_plotdata_csvs",
]

RESULTS_HEADER = "backend,p,n,rep,phase,seconds"
PLOTDATA_HEADER = (
    "backend,n,mean_total_s,std_total_s,"
    "mean_setup_s,mean_eigen_s,mean_mean_s,mean_retrieve_s,"
    "std_setup_s,std_eigen_s,std_mean_s,std_retrieve_s"
)

SKIP_PHASE = "skipped"
SKIP_SECONDS = -1.0

# Grids chosen so n^p spans comparable feature counts across dimensions.
DEFAULT_EIGEN_COUNTS = {
    1: (8, 16, 32, 64, 128),
    2: (3, 4, 5, 6, 7, 8, 9, 10, 11),
    4: (2, 3, 4, 5, 6, 7),
}


@dataclass(frozen=True)
class BenchConfig:
    """Sweep definition; see the module docstring for semantics."""

    n_samples: int = 10000
    n_test: int = 1000
    dims: tuple[int, ...] = (1, 2, 4)
    eigen_counts: dict[int, tuple[int, ...]] = field(
        default_factory=lambda: dict(DEFAULT_EIGEN_COUNTS)
    )
    reps: int = 10
    backends: tuple[str, ...] = ("serial", "parallel")
    workers: int = 8
    epsilon: float = 1.0
    rho: float = 1.0
    noise_std: float = 0.05
    noise_var: float = 0.0025
    seed_base: int = 0
    memory_cap: int = DEFAULT_MEMORY_CAP
    deterministic_reduction: bool = False

    def validate(self):
        if self.n_samples < 1 or self.n_test < 1 or self.reps < 1 or self.workers < 1:
            raise ConfigError("n_samples, n_test, reps and workers must all be >= 1")
        if not self.dims or any(p < 1 for p in self.dims):
            raise ConfigError("dims must be a nonempty list of integers >= 1")
        for p in self.dims:
            counts = self.eigen_counts.get(p)
            if not counts:
                raise ConfigError(f"no eigen_counts configured for p={p} (key eigen_counts.{p})")
            if any(n < 1 for n in counts):
                raise ConfigError(f"eigen_counts.{p} must be integers >= 1")
        for b in self.backends:
            if b not in ("serial", "parallel"):
                raise ConfigError(f"unknown backend {b!r}, expected serial or parallel")
        if self.epsilon < 0 or self.rho <= 0 or self.noise_var <= 0 or self.noise_std < 0:
            raise ConfigError("require epsilon >= 0, rho > 0, noise_var > 0, noise_std >= 0")
        if self.memory_cap < 1:
            raise ConfigError("memory_cap must be a positive byte count")
        return self


def _parse_int_list(value):
    return tuple(int(v) for v in value.split(",") if v.strip())


def _parse_bool(value):
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


_SCALAR_KEYS = {
    "n_samples": int,
    "n_test": int,
    "reps": int,
    "workers": int,
    "epsilon": float,
    "rho": float,
    "noise_std": float,
    "noise_var": float,
    "seed_base": int,
    "memory_cap": int,
    "deterministic_reduction": _parse_bool,
}


def parse_config_file(path, base=None):
    """Parse a ``key = value`` config file into a :class:`BenchConfig`.

    Blank lines and ``#`` comments are ignored. ``dims`` and ``backends``
    take comma-separated lists; per-dimension eigenvalue grids use keys
    ``eigen_counts.<p>``. Unknown keys are an error.
    """
    cfg = base or BenchConfig()
    eigen_counts = dict(cfg.eigen_counts)
    updates = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            try:
                if key in _SCALAR_KEYS:
                    updates[key] = _SCALAR_KEYS[key](value)
                elif key == "dims":
                    updates["dims"] = _parse_int_list(value)
                elif key == "backends":
                    updates["backends"] = tuple(v.strip() for v in value.split(",") if v.strip())
                elif key.startswith("eigen_counts."):
                    eigen_counts[int(key.split(".", 1)[1])] = _parse_int_list(value)
                else:
                    raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            except (ValueError, TypeError) as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from None
    return replace(cfg, eigen_counts=eigen_counts, **updates).validate()


def train_seed(config, p, rep):
    return config.seed_base + 100000 * p + rep


def xstar_seed(config, p, rep):
    return train_seed(config, p, rep) + 2**31


def _load_or_generate(config, p, rep, data_dir):
    seed = train_seed(config, p, rep)
    if data_dir is not None:
        path = data_dir / dataset_filename(config.n_samples, p, seed)
        if path.exists():
            return load_csv(path)
    return generate(config.n_samples, p, seed, config.noise_std, domain=(-1.0, 1.0))


def _test_inputs(config, p, rep):
    rng = np.random.Generator(np.random.Philox(key=xstar_seed(config, p, rep)))
    return rng.uniform(-1.0, 1.0, size=(config.n_test, p))


def run_sweep(config, data_dir=None, row_sink=None, progress=None):
    """Run the full Monte Carlo sweep; returns the result rows.

    Rows are ``(backend, p, n, rep, phase, seconds)`` tuples in
    deterministic (backend, p, n, rep, phase) order. ``row_sink`` (if given)
    receives each row as it is produced, for incremental writing;
    ``progress`` receives one message per sweep point.
    """
    config.validate()
    rows = []

    def emit(row):
        rows.append(row)
        if row_sink is not None:
            row_sink(row)

    for mode in config.backends:
        backend = Backend(
            mode=mode,
            workers=config.workers if mode == "parallel" else 1,
            deterministic_reduction=config.deterministic_reduction,
        )
        for p in config.dims:
            kernel = ArdKernelParams.isotropic(p, config.epsilon, config.rho)
            model = GpModel(kernel=kernel, noise_var=config.noise_var, n_eigen=None)
            for n in config.eigen_counts[p]:
                for rep in range(config.reps):
                    est = estimate_bytes(config.n_samples, n, p)
                    if est > config.memory_cap:
                        if progress:
                            progress(
                                f"skip {mode} p={p} n={n} rep={rep}: "
                                f"estimated {est} bytes over cap {config.memory_cap}"
                            )
                        emit((mode, p, n, rep, SKIP_PHASE, SKIP_SECONDS))
                        continue
                    try:
                        record = _run_point(config, backend, model, p, n, rep, data_dir)
                    except BudgetError as exc:
                        if progress:
                            progress(f"skip {mode} p={p} n={n} rep={rep}: {exc}")
                        emit((mode, p, n, rep, SKIP_PHASE, SKIP_SECONDS))
                        continue
                    for phase in PHASES:
                        emit((mode, p, n, rep, phase, record.phase_seconds(phase)))
                    if progress:
                        progress(
                            f"{mode} p={p} n={n} rep={rep}: total {record.total_s:.4f} s"
                        )
    return rows


def _run_point(config, backend, model, p, n, rep, data_dir):
    ds = _load_or_generate(config, p, rep, data_dir)
    Xstar = _test_inputs(config, p, rep)
    model = replace(model, n_eigen=n)
    record = TimingRecord(backend_mode=backend.mode, N=ds.N, p=p, n=n, rep_id=rep)
    with phase_scope(record, "setup"):
        X = np.ascontiguousarray(ds.X)
        y = np.ascontiguousarray(ds.y)
        Xs = np.ascontiguousarray(Xstar)
    with phase_scope(record, "eigen"):
        es = eigensystem(X, model.kernel, n, backend=backend, memory_cap=config.memory_cap)
        es_star = eigensystem(
            Xs, model.kernel, n, backend=backend, memory_cap=config.memory_cap
        )
    with phase_scope(record, "mean"):
        result = fagp_posterior_from_eigensystems(es, es_star, y, model, backend=backend)
    with phase_scope(record, "retrieve"):
        np.array(result.mean, copy=True)
    return record


def format_row(row):
    mode, p, n, rep, phase, seconds = row
    sec = "-1" if phase == SKIP_PHASE else f"{seconds:.9e}"
    return f"{mode},{p},{n},{rep},{phase},{sec}"


def write_results_csv(rows, path, append=False):
    """Write (or append) result rows; the header is emitted only for a new file."""
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        if not append or fh.tell() == 0:
            fh.write(RESULTS_HEADER + "\n")
        for row in rows:
            fh.write(format_row(row) + "\n")


def read_results_csv(path):
    """Parse a results CSV back into row tuples, validating phases."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CsvFormatError(path, 0, "empty results file")
    if lines[0] != RESULTS_HEADER:
        raise CsvFormatError(path, 1, f"bad header {lines[0]!r}, expected {RESULTS_HEADER!r}")
    rows = []
    valid_phases = set(PHASES) | {SKIP_PHASE}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 6:
            raise CsvFormatError(path, lineno, f"expected 6 fields, got {len(fields)}")
        mode, p, n, rep, phase, seconds = fields
        if phase not in valid_phases:
            raise CsvFormatError(path, lineno, f"unknown phase {phase!r}")
        try:
            rows.append((mode, int(p), int(n), int(rep), phase, float(seconds)))
        except ValueError:
            raise CsvFormatError(path, lineno, f"non-numeric field in {line!r}") from None
    return rows


def _mean_std(values):
    values = list(values)
    mean = sum(values) / len(values)
    if len(values) == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


def aggregate_plotdata(rows):
    """Aggregate result rows into per-p plot tables.

    For each (p, backend, n): per-rep totals are the sum of the four phase
    times; means and sample standard deviations are taken over reps
    (std = 0 for a single rep). Skip sentinels are excluded. Returns
    ``{p: [(backend, n, mean_total, std_total, mean..., std...), ...]}``
    sorted by (backend, n).
    """
    groups = {}
    for mode, p, n, rep, phase, seconds in rows:
        if phase == SKIP_PHASE:
            continue
        groups.setdefault((p, mode, n), {}).setdefault(rep, {})[phase] = seconds
    tables = {}
    for (p, mode, n), reps in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        totals = [sum(phases.values()) for phases in reps.values()]
        mean_total, std_total = _mean_std(totals)
        phase_means, phase_stds = [], []
        for phase in PHASES:
            vals = [phases.get(phase, 0.0) for phases in reps.values()]
            m, s = _mean_std(vals)
            phase_means.append(m)
            phase_stds.append(s)
        tables.setdefault(p, []).append(
            (mode, n, mean_total, std_total, *phase_means, *phase_stds)
        )
    return tables


def write_plotdata_csvs(tables, out_dir):
    """Write one ``plot_p{p}.csv`` per dimension; returns the written paths."""
    paths = []
    for p, table in sorted(tables.items()):
        path = out_dir / f"plot_p{p}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(PLOTDATA_HEADER + "\n")
            for row in table:
                mode, n, *vals = row
                fh.write(",".join([mode, str(n)] + [f"{v:.9e}" for v in vals]) + "\n")
        paths.append(path)
    return paths
