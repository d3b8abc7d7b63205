"""Cross residuals and the paired kernel estimators.

For a paired sample with residuals ``eta`` and covariates ``x`` split into
halves ``(a, b)`` of ``n`` rows, each pair contributes the term
``h_i = eta_a[i] * eta_b[i] * k(x_a[i], x_b[i])``. The estimate is the mean
of ``h_i`` and the variance estimate is the mean of ``h_i ** 2``. With a
per-dimension kernel spec the kernel is the coordinate sum ``G``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, PairedSample
from .errors import DimensionMismatch
from .kernels import KernelSpec, paired_kernel
from .regressors import predict


@dataclass(frozen=True)
class PairEstimate:
    delta_hat: float
    var_hat: float
    n: int

    def to_dict(self) -> dict:
        return {"delta_hat": self.delta_hat, "var_hat": self.var_hat, "n": self.n}


def cross_residuals(target: Dataset, other_model) -> np.ndarray:
    """Responses of ``target`` minus predictions of the model fitted on the other sample."""
    pred = predict(other_model, target.x)
    if pred.shape[0] != target.n_rows:
        raise DimensionMismatch("model returned the wrong number of predictions")
    return target.y - pred


def pair_terms(ps: PairedSample, spec: KernelSpec) -> np.ndarray:
    eta_a, eta_b, xa, xb = ps.halves()
    return eta_a * eta_b * paired_kernel(spec, xa, xb)


def _estimate(ps: PairedSample, spec: KernelSpec) -> PairEstimate:
    h = pair_terms(ps, spec)
    # np.sum reduces contiguous float64 arrays pairwise
    return PairEstimate(float(np.sum(h) / ps.n), float(np.sum(h * h) / ps.n), ps.n)


def pair_estimate_T(ps: PairedSample, spec: KernelSpec) -> PairEstimate:
    if spec.per_dimension:
        raise ValueError("the T estimator needs a scalar-bandwidth kernel")
    return _estimate(ps, spec)


def pair_estimate_Ta(ps: PairedSample, spec: KernelSpec) -> PairEstimate:
    if not spec.per_dimension:
        raise ValueError("the T_a estimator needs per-dimension bandwidths")
    if len(spec.bandwidths) != ps.x.shape[1]:
        raise DimensionMismatch("bandwidth count must equal the covariate dimension")
    return _estimate(ps, spec)
