"""The two-sample test procedures built on the paired kernel estimators.

1. Fit a regressor on each sample.
2. Form cross residuals: each sample's responses minus the other sample's
   fitted regression function.
3. Drop one row from odd-sized samples and pair row ``i`` with ``i + n``.
4. Pick median-heuristic bandwidths from each sample's own covariates.
5. Sum the two samples' pair estimates, studentize by
   ``sqrt(var_1 / n_1 + var_2 / n_2)`` and reject for large positive z.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.special import ndtri

from . import kernels
from .data import Dataset, PairedSample
from .errors import DegenerateVariance, DimensionMismatch, OutOfRange, TooFewRows
from .estimators import PairEstimate, cross_residuals, pair_estimate_T, pair_estimate_Ta
from .kernels import KernelSpec
from .regressors import RegressorSpec
from .rng import RngStream

STATISTICS = ("T", "Ta", "Both")
VARIANCE_FLOOR = 1e-300
_SQRT2 = math.sqrt(2.0)


def normal_cdf(z: float) -> float:
    """Standard normal CDF via the complementary error function."""
    z = float(z)
    if math.isnan(z):
        raise ValueError("normal_cdf of NaN")
    return 0.5 * math.erfc(-z / _SQRT2)


def normal_sf(z: float) -> float:
    """Upper tail ``1 - Phi(z)``, accurate far into the tail."""
    return 0.5 * math.erfc(float(z) / _SQRT2)


def normal_quantile(q: float) -> float:
    """Inverse of :func:`normal_cdf` on (0, 1)."""
    q = float(q)
    if not 0.0 < q < 1.0:
        raise OutOfRange(f"quantile level must lie strictly between 0 and 1, got {q}")
    z = float(ndtri(q))
    # one Newton step against our own CDF keeps the pair self-consistent
    dens = math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    if dens > 0:
        z -= (normal_cdf(z) - q) / dens
    return z


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # not a pytest class

    statistic: str = "Both"
    kernel_family: str = "gaussian"
    regressor: object = field(default_factory=RegressorSpec)
    alpha: float = 0.05
    pair_shuffle: Optional[int] = None

    def __post_init__(self):
        stat = {"t": "T", "ta": "Ta", "both": "Both"}.get(str(self.statistic).lower())
        if stat is None:
            raise ValueError(f"statistic must be one of {STATISTICS}, got {self.statistic!r}")
        object.__setattr__(self, "statistic", stat)
        fam = self.kernel_family.lower()
        if fam not in kernels.FAMILIES:
            raise ValueError(f"unknown kernel family {self.kernel_family!r}")
        object.__setattr__(self, "kernel_family", fam)
        if not 0.0 < self.alpha < 1.0:
            raise OutOfRange("alpha must lie in (0, 1)")

    def estimator(self):
        reg = self.regressor
        return reg.build() if isinstance(reg, RegressorSpec) else reg


@dataclass
class TestReport:
    __test__ = False

    statistic: str
    value: float
    stderr: float
    z: float
    p_value: float
    reject: bool
    alpha: float
    per_sample: tuple
    bandwidths: tuple
    p: int
    warnings: list = field(default_factory=list)

    @property
    def n1(self) -> int:
        return self.per_sample[0].n

    @property
    def n2(self) -> int:
        return self.per_sample[1].n

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "value": self.value,
            "stderr": self.stderr,
            "z": self.z,
            "p_value": self.p_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "n1": self.n1,
            "n2": self.n2,
            "p": self.p,
            "bandwidths": [b.to_dict() for b in self.bandwidths],
            "per_sample": [e.to_dict() for e in self.per_sample],
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    TSV_FIELDS = ("statistic", "value", "stderr", "z", "p_value", "reject", "n1", "n2", "p")

    def to_tsv(self) -> str:
        d = self.to_dict()
        return "\t".join(_fmt(d[k]) for k in self.TSV_FIELDS)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def combine(stat_name: str, est1: PairEstimate, est2: PairEstimate, alpha: float):
    """Studentize ``est1.delta_hat + est2.delta_hat``; returns (value, stderr, z, p, reject)."""
    value = est1.delta_hat + est2.delta_hat
    var = est1.var_hat / est1.n + est2.var_hat / est2.n
    if not var > VARIANCE_FLOOR:
        raise DegenerateVariance(
            f"{stat_name}: studentizing variance {var!r} is zero; every residual-kernel term vanished"
        )
    se = math.sqrt(var)
    z = value / se
    return value, se, z, normal_sf(z), z > normal_quantile(1.0 - alpha)


def _paired(eta: np.ndarray, x: np.ndarray, shuffle: Optional[RngStream], notes: list, label: str):
    idx = np.arange(eta.shape[0])
    if shuffle is not None:
        idx = shuffle.generator().permutation(eta.shape[0])
    if idx.size % 2:
        notes.append(f"{label}: odd row count {idx.size}, last row dropped before pairing")
        idx = idx[:-1]
    return PairedSample(eta[idx], x[idx])


def run_test(d1: Dataset, d2: Dataset, cfg: TestConfig, rng: RngStream):
    """Run T, T_a or both on two samples.

    Returns one :class:`TestReport`, or a ``(T, T_a)`` tuple of reports when
    ``cfg.statistic == "Both"``; both then share the fitted regressors and
    cross residuals.
    """
    if d1.p != d2.p:
        raise DimensionMismatch(f"samples have {d1.p} and {d2.p} covariates")
    for label, d in (("sample 1", d1), ("sample 2", d2)):
        if d.n_rows < 4:
            raise TooFewRows(f"{label} needs at least 4 rows, got {d.n_rows}")

    est = cfg.estimator()
    m1 = est.fit(d1, rng.child(1))
    m2 = est.fit(d2, rng.child(2))
    eta1 = cross_residuals(d1, m2)
    eta2 = cross_residuals(d2, m1)

    notes = []
    shuf = None if cfg.pair_shuffle is None else RngStream(int(cfg.pair_shuffle))
    ps1 = _paired(eta1, d1.x, shuf.child(1) if shuf else None, notes, "sample 1")
    ps2 = _paired(eta2, d2.x, shuf.child(2) if shuf else None, notes, "sample 2")

    wanted = ("T", "Ta") if cfg.statistic == "Both" else (cfg.statistic,)
    reports = []
    for stat in wanted:
        specs, ests, stat_notes = [], [], list(notes)
        for l, (d, ps) in enumerate(((d1, ps1), (d2, ps2)), start=1):
            # bandwidths use the full sample, before any row is dropped
            bw_rng = rng.child(10 + l)
            if stat == "T":
                g, note = kernels.select_bandwidth_scalar(d.x, bw_rng)
                spec = KernelSpec(cfg.kernel_family, bandwidth=g)
                ests.append(pair_estimate_T(ps, spec))
                found = [note] if note else []
            else:
                gs, found = kernels.select_bandwidth_per_dim(d.x, bw_rng)
                spec = KernelSpec(cfg.kernel_family, bandwidths=tuple(gs))
                ests.append(pair_estimate_Ta(ps, spec))
            specs.append(spec)
            stat_notes += [f"sample {l} bandwidth: {m}" for m in found]
        value, se, z, pval, rej = combine(stat, ests[0], ests[1], cfg.alpha)
        reports.append(
            TestReport(stat, value, se, z, pval, bool(rej), cfg.alpha, tuple(ests), tuple(specs),
                       d1.p, stat_notes)
        )
    return reports[0] if len(reports) == 1 else tuple(reports)


def reports_to_json(reports) -> str:
    if isinstance(reports, TestReport):
        return reports.to_json()
    return json.dumps([r.to_dict() for r in reports], sort_keys=True)
