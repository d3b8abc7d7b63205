"""Monte Carlo design: covariate-shifted samples, rejection rates and tables.

Group 1 covariates are standard normal and group 2 covariates are normal
with AR(1) correlation ``0.3 ** |i - j|``. Group 1 errors are
``N(0, 0.25)``; group 2 errors are Student t with 5 degrees of freedom
scaled to the same variance. The three examples differ in the regression
functions, with ``beta`` controlling how far group 1 departs from group 2.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional, Sequence

import numpy as np

from .data import Dataset
from .errors import BadDimension, DegenerateVariance
from .parallel import map_ordered
from .procedure import TestConfig, run_test
from .rng import RngStream

logger = logging.getLogger(__name__)

BETA_MODES = ("lowdim_all", "dense20", "sparse2")
AR_RHO = 0.3
NOISE_SD = 0.5
T_DF = 5
T_SCALE = math.sqrt(NOISE_SD**2 * (T_DF - 2) / T_DF)  # sqrt(0.15)


def make_beta(mode: str, p: int, beta_norm: float) -> np.ndarray:
    """Equal positive entries on the active coordinates, scaled to ``beta_norm``."""
    if beta_norm < 0:
        raise ValueError("beta_norm must be nonnegative")
    active = {"lowdim_all": p, "dense20": 20, "sparse2": 2}.get(mode)
    if active is None:
        raise BadDimension(f"unknown beta mode {mode!r}; choose from {BETA_MODES}")
    if p < max(active, 1):
        raise BadDimension(f"beta mode {mode} needs p >= {active}, got p = {p}")
    beta = np.zeros(p)
    beta[:active] = beta_norm / math.sqrt(active)
    return beta


def ar_covariance(p: int, rho: float = AR_RHO) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :]).astype(np.float64)


def regression_function(example: int, group: int, beta, x) -> np.ndarray:
    """Mean response of ``group`` at the rows of ``x``.

    Group 2 is the baseline; group 1 adds a ``beta``-weighted term that is
    exactly zero when ``beta`` is zero, so both groups then run the same
    arithmetic.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    beta = np.asarray(beta, dtype=np.float64)
    extra = group == 1
    if example == 1:
        inner = x[:, 0] ** 2 + x[:, 1] ** 2
        if extra:
            inner = inner + (x**2) @ beta
        return np.sqrt(inner)
    if example == 2:
        base = np.exp(x[:, 0]) + np.exp(x[:, 1])
        return base + np.exp(x) @ beta if extra else base
    if example == 3:
        base = x[:, 0] + x[:, 1]
        return base + (x @ beta) ** 2 if extra else base
    raise ValueError(f"example must be 1, 2 or 3, got {example}")


def draw_noise(group: int, n: int, draws) -> np.ndarray:
    """Errors for ``group``: 0.5 * N(0, 1), or sqrt(0.15) * t_5 built from six normals."""
    if group == 1:
        return NOISE_SD * draws.normal(n)
    num = draws.normal(n)
    chi2 = np.sum(draws.normal((n, T_DF)) ** 2, axis=1)
    return T_SCALE * num / np.sqrt(chi2 / T_DF)


def draw_sample(example: int, group: int, beta, n: int, p: int, rng: RngStream) -> Dataset:
    if n < 1:
        raise ValueError("n must be positive")
    if p < 2:
        raise BadDimension("the examples use the first two covariates, so p >= 2")
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (p,):
        raise BadDimension(f"beta must have length {p}")
    g = rng.generator()
    x = g.normal((n, p))
    if group == 2:
        x = x @ np.linalg.cholesky(ar_covariance(p)).T
    elif group != 1:
        raise ValueError("group must be 1 or 2")
    eps = draw_noise(group, n, g)
    return Dataset(x, regression_function(example, group, beta, x) + eps)


@dataclass(frozen=True)
class ScenarioConfig:
    example: int
    p: int
    n_per_group: int
    beta_norm: float = 0.0
    beta_mode: str = "lowdim_all"
    reps: int = 100
    alpha: float = 0.05
    master_seed: int = 0
    test_cfg: TestConfig = field(default_factory=TestConfig)

    def __post_init__(self):
        if self.example not in (1, 2, 3):
            raise ValueError("example must be 1, 2 or 3")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        make_beta(self.beta_mode, self.p, self.beta_norm)


@dataclass
class CellResult:
    rejections_T: int
    rejections_Ta: int
    reps: int
    mean_z_T: float
    mean_z_Ta: float
    degenerate: int = 0
    z_T: list = field(default_factory=list, repr=False)
    z_Ta: list = field(default_factory=list, repr=False)

    @property
    def rejection_rate_T(self) -> float:
        return self.rejections_T / self.reps

    @property
    def rejection_rate_Ta(self) -> float:
        return self.rejections_Ta / self.reps

    def to_dict(self, diagnostics: bool = False) -> dict:
        out = {
            "reps": self.reps,
            "rejection_rate_T": self.rejection_rate_T,
            "rejection_rate_Ta": self.rejection_rate_Ta,
            "rejections_T": self.rejections_T,
            "rejections_Ta": self.rejections_Ta,
            "mean_z_T": self.mean_z_T,
            "mean_z_Ta": self.mean_z_Ta,
            "degenerate": self.degenerate,
        }
        if diagnostics:
            out["z_T"] = list(self.z_T)
            out["z_Ta"] = list(self.z_Ta)
        return out


def tally(outcomes: Sequence) -> CellResult:
    """Reduce per-rep ``(T report, Ta report)`` pairs; ``None`` marks a degenerate rep."""
    zt, zta, rt, rta, bad = [], [], 0, 0, 0
    for out in outcomes:
        if out is None:
            bad += 1
            zt.append(float("nan"))
            zta.append(float("nan"))
            continue
        t, ta = out
        rt += t.reject
        rta += ta.reject
        zt.append(t.z)
        zta.append(ta.z)

    def mean(v):
        good = [x for x in v if not math.isnan(x)]
        return float(np.mean(good)) if good else float("nan")

    return CellResult(rt, rta, len(outcomes), mean(zt), mean(zta), bad, zt, zta)


def run_rep(cfg: ScenarioConfig, rep: int):
    stream = RngStream(cfg.master_seed, rep)
    beta = make_beta(cfg.beta_mode, cfg.p, cfg.beta_norm)
    d1 = draw_sample(cfg.example, 1, beta, cfg.n_per_group, cfg.p, stream.child(101))
    d2 = draw_sample(cfg.example, 2, beta, cfg.n_per_group, cfg.p, stream.child(102))
    tcfg = dataclasses.replace(cfg.test_cfg, statistic="Both", alpha=cfg.alpha)
    try:
        return run_test(d1, d2, tcfg, stream.child(103))
    except DegenerateVariance as exc:
        logger.warning("rep %d: %s (counted as non-rejection)", rep, exc)
        return None


def run_cell(cfg: ScenarioConfig, threads: Optional[int] = None) -> CellResult:
    """Rejection rates of T and T_a over ``cfg.reps`` replications.

    Replication ``r`` (1-based) draws everything from stream ``r`` of
    ``cfg.master_seed``, so results do not depend on scheduling.
    """
    return tally(map_ordered(lambda r: run_rep(cfg, r), range(1, cfg.reps + 1), threads))


def format_rate(rejections: int, reps: int) -> str:
    q = Decimal(rejections) / Decimal(reps)
    return str(q.quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def emit_table(cells, fmt: str = "tsv") -> str:
    """Render ``(ScenarioConfig, CellResult)`` pairs as a size/power table.

    One row per beta norm and two columns (T, Ta) per sample size, both in
    order of first appearance.
    """
    cells = list(cells)
    if not cells:
        raise ValueError("nothing to tabulate")
    norms, sizes, lookup = [], [], {}
    for cfg, res in cells:
        if cfg.beta_norm not in norms:
            norms.append(cfg.beta_norm)
        if cfg.n_per_group not in sizes:
            sizes.append(cfg.n_per_group)
        lookup[(cfg.beta_norm, cfg.n_per_group)] = res
    header = ["beta_norm"]
    for n in sizes:
        header += [f"T (N={n})", f"Ta (N={n})"]
    rows = []
    for b in norms:
        row = [f"{b:g}"]
        for n in sizes:
            res = lookup.get((b, n))
            if res is None:
                row += ["", ""]
            else:
                row += [format_rate(res.rejections_T, res.reps), format_rate(res.rejections_Ta, res.reps)]
        rows.append(row)
    if fmt == "tsv":
        return "\n".join("\t".join(r) for r in [header] + rows) + "\n"
    if fmt == "markdown":
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(r) + " |" for r in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def table_json(cells, diagnostics: bool = False) -> str:
    payload = [
        {"example": c.example, "p": c.p, "n": c.n_per_group, "beta_norm": c.beta_norm,
         "beta_mode": c.beta_mode, "master_seed": c.master_seed, **r.to_dict(diagnostics)}
        for c, r in cells
    ]
    return json.dumps(payload, sort_keys=True)
