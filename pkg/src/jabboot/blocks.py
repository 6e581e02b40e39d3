"""Block schemes over a time series and bootstrap sample assembly.

A block scheme partitions the resampling universe of a length-n series
into N blocks of length ell.  Three styles are supported:

* ``mbb``  moving (overlapping) blocks, N = n - ell + 1,
* ``nbb``  non-overlapping blocks, N = floor(n/ell), trailing partial
  block discarded,
* ``cbb``  circular blocks starting at every position and wrapping
  modulo n, N = n.

A bootstrap sample concatenates b = floor(n/ell) blocks drawn with
replacement, giving a pseudo-series of length n1 = b*ell <= n.

Block indices are 0-based throughout the Python API.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STYLES = ("mbb", "nbb", "cbb")


@dataclass(frozen=True)
class TimeSeries:
    """Ordered d-dimensional observations, stored as an (n, d) float array."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValueError("series values must be 1- or 2-dimensional")
        if v.shape[0] < 2:
            raise ValueError(f"series length must be >= 2, got {v.shape[0]}")
        if v.shape[1] < 1:
            raise ValueError("series dimension must be >= 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


def read_series_csv(path, header: bool = False) -> TimeSeries:
    """Load a series from CSV: one row per time point, d numeric columns."""
    data = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    return TimeSeries(data)


def write_series_csv(series: TimeSeries, path) -> None:
    np.savetxt(path, series.values, delimiter=",", fmt="%.17g")


@dataclass(frozen=True)
class BlockScheme:
    """Derived quantities of a block resampling scheme.

    Attributes
    ----------
    n : original series length
    ell : block length
    style : one of ``mbb``, ``nbb``, ``cbb``
    N : number of available blocks
    b : blocks per bootstrap sample, floor(n / ell)
    n1 : bootstrap sample length, b * ell
    """

    n: int
    ell: int
    style: str
    N: int
    b: int
    n1: int


def make_block_scheme(n: int, ell: int, style: str = "mbb") -> BlockScheme:
    """Build a block scheme for a length-n series.

    Raises ValueError for ell outside [1, n] or n < 2.
    """
    n = int(n)
    ell = int(ell)
    if n < 2:
        raise ValueError(f"series length must be >= 2, got n={n}")
    if not 1 <= ell <= n:
        raise ValueError(f"block length must satisfy 1 <= ell <= n, got ell={ell}, n={n}")
    style = style.lower()
    if style not in STYLES:
        raise ValueError(f"unknown block style {style!r}; expected one of {STYLES}")
    b = n // ell
    if style == "mbb":
        N = n - ell + 1
    elif style == "nbb":
        N = b
    else:  # cbb
        N = n
    return BlockScheme(n=n, ell=ell, style=style, N=N, b=b, n1=b * ell)


def block_starts(scheme: BlockScheme) -> np.ndarray:
    """Start position of every available block."""
    if scheme.style == "nbb":
        return np.arange(scheme.N) * scheme.ell
    return np.arange(scheme.N)


def _check_series(series: TimeSeries, scheme: BlockScheme) -> None:
    if series.n != scheme.n:
        raise ValueError(
            f"scheme built for n={scheme.n} but series has length {series.n}"
        )


def block_index_matrix(scheme: BlockScheme) -> np.ndarray:
    """(N, ell) matrix of observation indices making up each block."""
    idx = block_starts(scheme)[:, None] + np.arange(scheme.ell)[None, :]
    if scheme.style == "cbb":
        idx = idx % scheme.n
    return idx


def block_sums(series: TimeSeries, scheme: BlockScheme) -> np.ndarray:
    """(N, d) array of per-block sums under the scheme's style."""
    _check_series(series, scheme)
    x = series.values
    if scheme.style == "nbb":
        return x[: scheme.N * scheme.ell].reshape(scheme.N, scheme.ell, -1).sum(axis=1)
    if scheme.style == "cbb" and scheme.ell > 1:
        x = np.concatenate([x, x[: scheme.ell - 1]], axis=0)
    c = np.vstack([np.zeros((1, x.shape[1])), np.cumsum(x, axis=0)])
    return c[scheme.ell : scheme.N + scheme.ell] - c[: scheme.N]


def block_means(series: TimeSeries, scheme: BlockScheme) -> np.ndarray:
    """(N, d) array of per-block means (the scheme's resampling atoms)."""
    return block_sums(series, scheme) / scheme.ell


def draw_block_indices(
    scheme: BlockScheme,
    allowed: np.ndarray,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw ``count`` block indices i.i.d. uniform over ``allowed``.

    ``allowed`` must be a non-empty subset of ``range(scheme.N)``.  The
    result is fully determined by the state of ``rng``.
    """
    allowed = np.asarray(allowed, dtype=np.int64)
    if allowed.size == 0:
        raise ValueError("allowed index set is empty")
    if allowed.min() < 0 or allowed.max() >= scheme.N:
        raise ValueError("allowed indices out of range for scheme")
    return allowed[rng.integers(0, allowed.size, size=int(count))]


def assemble_bootstrap_sample(
    series: TimeSeries, scheme: BlockScheme, draw: np.ndarray
) -> TimeSeries:
    """Concatenate the drawn blocks, in draw order, into a length-n1 series."""
    _check_series(series, scheme)
    draw = np.asarray(draw, dtype=np.int64)
    if draw.min() < 0 or draw.max() >= scheme.N:
        raise ValueError("draw contains invalid block indices")
    idx = block_index_matrix(scheme)[draw].reshape(-1)
    return TimeSeries(series.values[idx])
