"""Bounded characteristic kernels and median-heuristic bandwidths.

Two evaluation modes share one :class:`KernelSpec`: scalar mode, with one
bandwidth applied to the Euclidean distance between whole covariate
vectors, and per-dimension mode, where ``G(x, x') = sum_d k_d(x(d), x'(d))``
with a separate bandwidth for every coordinate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy.spatial.distance import pdist

from .errors import DegenerateBandwidth, DimensionMismatch
from .rng import RngStream

FAMILIES = ("gaussian", "laplace")
SUBSAMPLE_THRESHOLD = 2000


@dataclass(frozen=True)
class KernelSpec:
    family: str = "gaussian"
    bandwidth: Optional[float] = None
    bandwidths: Optional[tuple] = None
    allow_constant: bool = False

    def __post_init__(self):
        fam = self.family.lower()
        if fam == "constant":
            if not self.allow_constant:
                raise ValueError("the constant kernel is only available with allow_constant=True")
        elif fam not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        object.__setattr__(self, "family", fam)
        if (self.bandwidth is None) == (self.bandwidths is None):
            raise ValueError("give exactly one of bandwidth (scalar) or bandwidths (per-dimension)")
        if self.bandwidth is not None:
            g = float(self.bandwidth)
            if not (g > 0 and math.isfinite(g)):
                raise ValueError(f"bandwidth must be positive and finite, got {g}")
            object.__setattr__(self, "bandwidth", g)
        else:
            gs = tuple(float(g) for g in np.ravel(self.bandwidths))
            if not gs or not all(g > 0 and math.isfinite(g) for g in gs):
                raise ValueError("per-dimension bandwidths must all be positive and finite")
            object.__setattr__(self, "bandwidths", gs)

    @property
    def per_dimension(self) -> bool:
        return self.bandwidths is not None

    def to_dict(self) -> dict:
        out = {"family": self.family}
        if self.per_dimension:
            out["bandwidths"] = list(self.bandwidths)
        else:
            out["bandwidth"] = self.bandwidth
        return out


def _profile(family: str, dist: np.ndarray, gamma) -> np.ndarray:
    # dist holds Euclidean (scalar mode) or absolute (per-dimension) distances
    if family == "gaussian":
        return np.exp(-(dist * dist) / (2.0 * np.square(gamma)))
    if family == "laplace":
        return np.exp(-dist / gamma)
    return np.ones_like(dist)


def _as_pair(x, x2, p=None):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    x2 = np.asarray(x2, dtype=np.float64).reshape(-1)
    if x.shape != x2.shape or (p is not None and x.size != p):
        raise DimensionMismatch(f"incompatible vectors of length {x.size} and {x2.size}")
    return x, x2


def eval_kernel(spec: KernelSpec, x, x2) -> float:
    """k(x, x2) for a scalar-mode spec."""
    if spec.per_dimension:
        raise ValueError("eval_kernel needs a scalar-bandwidth KernelSpec")
    x, x2 = _as_pair(x, x2)
    d = x - x2
    if spec.family == "gaussian":
        return float(np.exp(-np.dot(d, d) / (2.0 * spec.bandwidth**2)))
    return float(_profile(spec.family, np.sqrt(np.dot(d, d)), spec.bandwidth))


def eval_kernel_sum_G(spec: KernelSpec, x, x2) -> float:
    """Sum over coordinates of the 1-d kernel with that coordinate's bandwidth."""
    if not spec.per_dimension:
        raise ValueError("eval_kernel_sum_G needs a per-dimension KernelSpec")
    x, x2 = _as_pair(x, x2, len(spec.bandwidths))
    terms = _profile(spec.family, np.abs(x - x2), np.asarray(spec.bandwidths))
    return float(terms.sum())


def paired_kernel(spec: KernelSpec, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    """Row-wise kernel values ``k(xa[i], xb[i])``; ``G`` in per-dimension mode."""
    xa = np.asarray(xa, dtype=np.float64)
    xb = np.asarray(xb, dtype=np.float64)
    if xa.ndim == 1:
        xa, xb = xa.reshape(-1, 1), xb.reshape(-1, 1)
    if xa.shape != xb.shape:
        raise DimensionMismatch("paired covariate blocks must have identical shapes")
    diff = xa - xb
    if spec.per_dimension:
        if len(spec.bandwidths) != xa.shape[1]:
            raise DimensionMismatch(
                f"spec has {len(spec.bandwidths)} bandwidths but covariates have {xa.shape[1]} columns"
            )
        return _profile(spec.family, np.abs(diff), np.asarray(spec.bandwidths)).sum(axis=1)
    sq = np.einsum("ij,ij->i", diff, diff)
    if spec.family == "gaussian":
        return np.exp(-sq / (2.0 * spec.bandwidth**2))
    return _profile(spec.family, np.sqrt(sq), spec.bandwidth)


def _median_with_fallback(dists: np.ndarray):
    med = float(np.median(dists))
    if med > 0:
        return med, None
    nz = dists[dists > 0]
    if nz.size:
        return float(nz.mean()), "median pairwise distance is zero; using the mean nonzero distance"
    return 1.0, "all pairwise distances are zero; using bandwidth 1.0"


@njit(cache=True, nogil=True)
def _abs_gaps(col):
    s = np.sort(col)
    n = s.shape[0]
    out = np.empty(n * (n - 1) // 2)
    t = 0
    for i in range(n - 1):
        for j in range(i + 1, n):
            out[t] = s[j] - s[i]
            t += 1
    return out


def _rows_for_median(x: np.ndarray, rng: Optional[RngStream]) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.shape[0] < 2:
        raise ValueError("median heuristic needs at least 2 rows")
    if x.shape[0] > SUBSAMPLE_THRESHOLD:
        stream = rng if rng is not None else RngStream(0)
        rows = np.sort(stream.generator().choice(x.shape[0], SUBSAMPLE_THRESHOLD))
        x = x[rows]
    return x


def select_bandwidth_scalar(x, rng: Optional[RngStream] = None):
    """Median heuristic returning ``(gamma, note)``; ``note`` is None unless a fallback fired."""
    x = _rows_for_median(x, rng)
    return _median_with_fallback(pdist(x, "euclidean"))


def select_bandwidth_per_dim(x, rng: Optional[RngStream] = None):
    """Per-coordinate median heuristic returning ``(gammas, notes)``."""
    x = _rows_for_median(x, rng)
    gammas = np.empty(x.shape[1])
    notes = []
    for d in range(x.shape[1]):
        g, note = _median_with_fallback(_abs_gaps(np.ascontiguousarray(x[:, d])))
        gammas[d] = g
        if note:
            notes.append(f"dimension {d}: {note}")
    return gammas, notes


def median_bandwidth_scalar(x, rng: Optional[RngStream] = None) -> float:
    """Median of pairwise Euclidean distances between the rows of ``x``.

    Samples larger than 2000 rows are subsampled to 2000 rows drawn with
    ``rng``. A zero median falls back to the mean nonzero distance, then to
    1.0, with a :class:`DegenerateBandwidth` warning.
    """
    g, note = select_bandwidth_scalar(x, rng)
    if note:
        warnings.warn(note, DegenerateBandwidth, stacklevel=2)
    return g


def median_bandwidth_per_dim(x, rng: Optional[RngStream] = None) -> np.ndarray:
    """Per-column version of :func:`median_bandwidth_scalar`."""
    gs, notes = select_bandwidth_per_dim(x, rng)
    for note in notes:
        warnings.warn(note, DegenerateBandwidth, stacklevel=2)
    return gs
