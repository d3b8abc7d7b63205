"""Datasets, CSV ingestion and the deterministic splitting rules."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .errors import BadHeader, DimensionMismatch, MissingValue, NonPositiveLog, TooFewRows
from .rng import RngStream

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Dataset:
    """One sample: an ``N x p`` covariate matrix and a length-``N`` response."""

    x: np.ndarray
    y: np.ndarray
    column_names: Optional[tuple] = None

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        y = np.array(self.y, dtype=np.float64).reshape(-1)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if x.ndim != 2:
            raise DimensionMismatch("x must be a 2-d matrix")
        if x.shape[0] != y.shape[0]:
            raise DimensionMismatch(f"x has {x.shape[0]} rows but y has {y.shape[0]} entries")
        if x.shape[1] < 1:
            raise DimensionMismatch("at least one covariate is required")
        if x.shape[0] < 2:
            raise TooFewRows(f"a dataset needs at least 2 rows, got {x.shape[0]}")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise MissingValue("dataset contains NaN or infinite entries")
        names = self.column_names
        if names is not None:
            names = tuple(str(c) for c in names)
            if len(names) != x.shape[1]:
                raise DimensionMismatch("column_names length must equal the covariate count")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", names)

    @property
    def n_rows(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.x[rows], self.y[rows], self.column_names)


@dataclass(frozen=True)
class PairedSample:
    """Cross residuals and covariates arranged so pair ``i`` is rows ``(i, i + n)``."""

    eta_hat: np.ndarray
    x: np.ndarray
    n: int = field(init=False)

    def __post_init__(self):
        eta = np.asarray(self.eta_hat, dtype=np.float64).reshape(-1)
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        if eta.shape[0] != x.shape[0]:
            raise DimensionMismatch("eta_hat and x must have the same number of rows")
        if eta.shape[0] < 2 or eta.shape[0] % 2:
            raise DimensionMismatch("a paired sample needs an even, positive row count")
        object.__setattr__(self, "eta_hat", eta)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "n", eta.shape[0] // 2)

    def halves(self):
        n = self.n
        return self.eta_hat[:n], self.eta_hat[n:], self.x[:n], self.x[n:]


def _resolve_column(header: Sequence[str], col: Union[str, int]) -> int:
    if isinstance(col, int) or (isinstance(col, str) and col.isdigit() and col not in header):
        idx = int(col)
        if not 0 <= idx < len(header):
            raise BadHeader(f"column index {idx} out of range for {len(header)} columns")
        return idx
    try:
        return list(header).index(col)
    except ValueError:
        raise BadHeader(f"column {col!r} not found in header {list(header)}") from None


def load_csv(
    path,
    response: Union[str, int],
    log_columns: Iterable[Union[str, int]] = (),
    drop_columns: Iterable[Union[str, int]] = (),
) -> Dataset:
    """Read a comma-separated file with a header row into a :class:`Dataset`.

    The response column is removed from the covariates. Columns listed in
    ``log_columns`` are replaced by their natural logarithm, and columns in
    ``drop_columns`` are discarded. Remaining covariates keep file order.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise BadHeader(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if any(h == "" for h in header) or len(set(header)) != len(header):
        raise BadHeader(f"{path}: header has empty or duplicate names")
    body = [r for r in rows[1:] if r and any(c.strip() for c in r)]

    width = len(header)
    values = np.empty((len(body), width), dtype=np.float64)
    for i, r in enumerate(body):
        if len(r) != width:
            raise MissingValue(f"{path}: row {i + 2} has {len(r)} fields, expected {width}")
        for j, cell in enumerate(r):
            cell = cell.strip()
            if cell == "":
                raise MissingValue(f"{path}: empty cell at row {i + 2}, column {header[j]!r}")
            try:
                v = float(cell)
            except ValueError:
                raise MissingValue(
                    f"{path}: non-numeric cell {cell!r} at row {i + 2}, column {header[j]!r}"
                ) from None
            if not math.isfinite(v):
                raise MissingValue(f"{path}: non-finite cell at row {i + 2}, column {header[j]!r}")
            values[i, j] = v

    y_idx = _resolve_column(header, response)
    logs = {_resolve_column(header, c) for c in log_columns}
    drops = {_resolve_column(header, c) for c in drop_columns}
    if y_idx in drops:
        raise BadHeader("the response column cannot be dropped")
    for j in sorted(logs):
        col = values[:, j]
        if np.any(col <= 0):
            raise NonPositiveLog(f"{path}: column {header[j]!r} has values <= 0")
        values[:, j] = np.log(col)

    keep = [j for j in range(width) if j != y_idx and j not in drops]
    if not keep:
        raise BadHeader("no covariate columns left")
    if len(body) < 2:
        raise TooFewRows(f"{path}: need at least 2 data rows, got {len(body)}")
    return Dataset(values[:, keep], values[:, y_idx], [header[j] for j in keep])


def write_csv(d: Dataset, path, response_name: str = "y") -> None:
    """Write ``d`` with 17 significant digits so :func:`load_csv` reproduces it."""
    names = list(d.column_names or [f"x{j + 1}" for j in range(d.p)])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + [response_name])
        for xi, yi in zip(d.x, d.y):
            w.writerow([f"{v:.17g}" for v in xi] + [f"{yi:.17g}"])


def even_truncate(d: Dataset, shuffle: Optional[RngStream] = None) -> Dataset:
    """Optionally shuffle the rows, then drop the last one if the count is odd."""
    if d.n_rows < 2:
        raise TooFewRows("need at least 2 rows")
    if shuffle is not None:
        d = d.take(shuffle.generator().permutation(d.n_rows))
    if d.n_rows % 2:
        logger.warning("odd row count %d: dropping the last row", d.n_rows)
        d = d.take(np.arange(d.n_rows - 1))
    return d


def split_random(d: Dataset, rng: RngStream):
    """Uniform random partition into groups of size ceil(N/2) and floor(N/2)."""
    N = d.n_rows
    if N < 4:
        raise TooFewRows(f"random split needs at least 4 rows, got {N}")
    perm = rng.generator().permutation(N)
    cut = (N + 1) // 2
    return d.take(np.sort(perm[:cut])), d.take(np.sort(perm[cut:]))


def split_median_swap(d: Dataset, swap_fraction: float, rng: RngStream):
    """Split at the response median (ties go low), then exchange a few rows.

    ``floor(swap_fraction * min(|A|, |B|))`` rows are drawn uniformly from
    each group and moved to the other, so both group sizes are preserved.
    """
    N = d.n_rows
    if N < 4:
        raise TooFewRows(f"median split needs at least 4 rows, got {N}")
    if not 0.0 <= swap_fraction < 1.0:
        raise ValueError("swap_fraction must lie in [0, 1)")
    med = np.median(d.y)
    low = np.flatnonzero(d.y <= med)
    high = np.flatnonzero(d.y > med)
    k = int(math.floor(swap_fraction * min(low.size, high.size)))
    if k > 0:
        g = rng.generator()
        ia = g.choice(low.size, k)
        ib = g.choice(high.size, k)
        a_out, b_out = low[ia].copy(), high[ib].copy()
        low = low.copy()
        high = high.copy()
        low[ia], high[ib] = b_out, a_out
    return d.take(np.sort(low)), d.take(np.sort(high))
