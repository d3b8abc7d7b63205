"""Two-sample protocols for a single real dataset.

``null_split`` repeatedly splits the data at random into two halves, where
both halves share one regression function, and records how often each test
rejects. ``median_split`` separates rows with response at or below the
median from the rest, swaps a small fraction between the groups so the
covariate supports overlap, and runs both tests once.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field

from .data import Dataset, split_median_swap, split_random
from .errors import DegenerateVariance, TooFewRows
from .parallel import map_ordered
from .procedure import TestConfig, run_test
from .rng import RngStream
from .simulation import CellResult, tally

logger = logging.getLogger(__name__)

SCENARIOS = ("null_split", "median_split")


@dataclass(frozen=True)
class RealDataConfig:
    scenario: str = "null_split"
    swap_fraction: float = 0.05
    reps: int = 500
    alpha: float = 0.05
    test_cfg: TestConfig = field(default_factory=TestConfig)
    master_seed: int = 0

    def __post_init__(self):
        scen = self.scenario.replace("-", "_").lower()
        if scen not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}")
        object.__setattr__(self, "scenario", scen)
        if not 0.0 <= self.swap_fraction < 0.5:
            raise ValueError("swap_fraction must lie in [0, 0.5)")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")

    def both(self) -> TestConfig:
        return dataclasses.replace(self.test_cfg, statistic="Both", alpha=self.alpha)


def _check(d: Dataset):
    if d.n_rows < 8:
        raise TooFewRows(f"real-data protocols need at least 8 rows, got {d.n_rows}")


def run_null_calibration(d: Dataset, cfg: RealDataConfig, threads=None) -> CellResult:
    _check(d)
    tcfg = cfg.both()

    def one(rep):
        stream = RngStream(cfg.master_seed, rep)
        a, b = split_random(d, stream.child(201))
        try:
            return run_test(a, b, tcfg, stream.child(202))
        except DegenerateVariance as exc:
            logger.warning("split %d: %s (counted as non-rejection)", rep, exc)
            return None

    return tally(map_ordered(one, range(1, cfg.reps + 1), threads))


def run_alternative(d: Dataset, cfg: RealDataConfig):
    """One median split with swap; returns the ``(T, T_a)`` reports."""
    _check(d)
    stream = RngStream(cfg.master_seed, 0)
    a, b = split_median_swap(d, cfg.swap_fraction, stream.child(301))
    return run_test(a, b, cfg.both(), stream.child(302))
