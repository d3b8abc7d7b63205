"""Machine-learning-assisted two-sample tests for equality of regression functions."""

from .data import (
    Dataset,
    PairedSample,
    even_truncate,
    load_csv,
    split_median_swap,
    split_random,
    write_csv,
)
from .estimators import PairEstimate, cross_residuals, pair_estimate_T, pair_estimate_Ta
from .kernels import (
    KernelSpec,
    eval_kernel,
    eval_kernel_sum_G,
    median_bandwidth_per_dim,
    median_bandwidth_scalar,
)
from .procedure import TestConfig, TestReport, normal_cdf, normal_quantile, run_test
from .realdata import RealDataConfig, run_alternative, run_null_calibration
from .regressors import GBTParams, RegressorSpec, fit, predict
from .rng import RngStream
from .simulation import CellResult, ScenarioConfig, draw_sample, emit_table, make_beta, run_cell

__version__ = "0.1.0"
