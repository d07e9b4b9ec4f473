"""Synthetic benchmark datasets: sum-of-cosines targets with Gaussian noise.

Inputs are drawn uniformly on a per-dimension interval and targets are

    y_i = sum_d cos(X[i, d]) + nu_i,    nu_i ~ N(0, noise_std^2).

Sampling uses numpy's counter-based Philox generator keyed by the seed, so
identical arguments reproduce bit-identical datasets on any platform.
X is drawn first (one uniform block), then the noise vector, which fixes
the stream layout for good.

CSV persistence keeps full float64 precision (17 significant digits), so a
save/load round trip is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CsvFormatError

__all__ = ["Dataset", "generate", "save_csv", "load_csv", "dataset_filename"]


@dataclass
class Dataset:
    """Training data: inputs X (N, p), targets y (N,), and provenance."""

    X: np.ndarray
    y: np.ndarray
    noise_std: float
    seed: int
    domain: tuple[tuple[float, float], ...]

    @property
    def N(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


def _normalize_domain(domain, p):
    """Accept one (a, b) pair for all dimensions or one pair per dimension."""
    domain = np.asarray(domain, dtype=float)
    if domain.shape == (2,):
        pairs = [(float(domain[0]), float(domain[1]))] * p
    elif domain.shape == (p, 2):
        pairs = [(float(a), float(b)) for a, b in domain]
    else:
        raise ValueError(
            f"domain must be one (a, b) pair or {p} pairs, got shape {domain.shape}"
        )
    for a, b in pairs:
        if not (np.isfinite(a) and np.isfinite(b)) or a > b:
            raise ValueError(f"invalid domain interval ({a}, {b})")
    return tuple(pairs)


def generate(N, p, seed, noise_std=0.05, domain=(-1.0, 1.0)):
    """Draw a dataset of N uniform points in ``domain^p`` with cosine targets.

    Parameters
    ----------
    N, p : int
        Sample count (>= 1) and input dimension (>= 1).
    seed : int
        Philox key; same arguments give a bit-identical dataset.
    noise_std : float
        Standard deviation of the additive Gaussian observation noise.
    domain : (a, b) or sequence of p pairs
        Per-dimension sampling interval; degenerate a == b pins the
        coordinate (useful for exact-value checks).
    """
    if N < 1 or p < 1:
        raise ValueError(f"N and p must be >= 1, got N={N}, p={p}")
    if noise_std < 0:
        raise ValueError(f"noise_std must be >= 0, got {noise_std}")
    pairs = _normalize_domain(domain, p)
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    lows = np.array([a for a, _ in pairs])
    highs = np.array([b for _, b in pairs])
    X = rng.uniform(lows, highs, size=(N, p))
    y = np.cos(X).sum(axis=1) + rng.normal(0.0, noise_std, size=N)
    return Dataset(X=X, y=y, noise_std=float(noise_std), seed=int(seed), domain=pairs)


def dataset_filename(N, p, seed):
    """Canonical file name used by the benchmark harness."""
    return f"train_N{N}_p{p}_seed{seed}.csv"


def save_csv(ds, path):
    """Write ``x1,...,xp,y`` rows with round-trip (17 digit) precision."""
    header = ",".join([f"x{j + 1}" for j in range(ds.p)] + ["y"])
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for i in range(ds.N):
            fields = [f"{v:.17g}" for v in ds.X[i]] + [f"{ds.y[i]:.17g}"]
            fh.write(",".join(fields) + "\n")


def load_csv(path):
    """Read a dataset written by :func:`save_csv`; bit-exact round trip.

    The returned Dataset carries ``noise_std=0`` and ``seed=0`` (the file
    stores no provenance) and the per-dimension data range as its domain.

    Raises
    ------
    CsvFormatError
        Empty file, malformed header, ragged row, non-numeric field, or a
        header with no data rows. Carries the offending 1-based line number
        (0 for the file as a whole).
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise CsvFormatError(path, 0, "empty file")
    cols = lines[0].split(",")
    if len(cols) < 2 or cols[-1] != "y" or cols[:-1] != [f"x{j + 1}" for j in range(len(cols) - 1)]:
        raise CsvFormatError(path, 1, f"malformed header {lines[0]!r}, expected x1,...,xp,y")
    p = len(cols) - 1
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != p + 1:
            raise CsvFormatError(path, lineno, f"expected {p + 1} fields, got {len(fields)}")
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            raise CsvFormatError(path, lineno, f"non-numeric field in {line!r}") from None
    if not rows:
        raise CsvFormatError(path, 1, "no data rows (datasets must have N >= 1)")
    data = np.array(rows)
    X, y = data[:, :p], data[:, p]
    domain = tuple((float(X[:, d].min()), float(X[:, d].max())) for d in range(p))
    return Dataset(X=X, y=y, noise_std=0.0, seed=0, domain=domain)
