"""Exit criteria for the package, each at its pinned tolerance.

The Monte Carlo criteria take a few minutes in total; each prints one
PASS/FAIL line (also collected in the pytest terminal summary).
"""

import io
import math

import numpy as np
import pytest
from scipy import stats

from conftest import record
from oracles import brute_pair_estimate, k_scalar, k_sum
from regdiff.cli import main
from regdiff.data import Dataset, PairedSample
from regdiff.estimators import pair_estimate_T, pair_estimate_Ta
from regdiff.kernels import KernelSpec, eval_kernel, eval_kernel_sum_G, median_bandwidth_scalar
from regdiff.procedure import TestConfig, run_test
from regdiff.regressors import RegressorSpec
from regdiff.rng import RngStream
from regdiff.simulation import T_SCALE, ScenarioConfig, ar_covariance, draw_noise, draw_sample, make_beta, run_cell

SEED = 20240611
SIZE_BAND = (0.02, 0.10)


@pytest.fixture(scope="module")
def example1_null():
    return run_cell(ScenarioConfig(1, 5, 200, 0.0, "lowdim_all", reps=500, master_seed=SEED))


def _in_band(rate):
    return SIZE_BAND[0] <= rate <= SIZE_BAND[1]


def test_c01_null_size_low_dimension(example1_null):
    r = example1_null
    ok = _in_band(r.rejection_rate_T) and _in_band(r.rejection_rate_Ta)
    record("1", ok, f"Example 1 p=5 N=200 null, 500 reps: T={r.rejection_rate_T:.3f} "
                    f"Ta={r.rejection_rate_Ta:.3f} (band {SIZE_BAND})")
    assert ok


def test_c02_null_size_high_dimension():
    r = run_cell(ScenarioConfig(2, 50, 500, 0.0, "dense20", reps=300, master_seed=SEED + 2))
    ok = _in_band(r.rejection_rate_T) and _in_band(r.rejection_rate_Ta)
    record("2", ok, f"Example 2 p=50 N=500 null, 300 reps: T={r.rejection_rate_T:.3f} "
                    f"Ta={r.rejection_rate_Ta:.3f} (band {SIZE_BAND})")
    assert ok


def test_c03_power_ordering():
    grid = (0.0, 0.12, 0.3)
    cells = [run_cell(ScenarioConfig(1, 5, 200, b, "lowdim_all", reps=300, master_seed=SEED + 3))
             for b in grid]
    ok = True
    parts = []
    for name in ("T", "Ta"):
        rates = [getattr(c, f"rejection_rate_{name}") for c in cells]
        ok &= all(b > a for a, b in zip(rates, rates[1:])) and rates[-1] >= 0.45
        parts.append(f"{name}: " + " < ".join(f"{v:.3f}" for v in rates))
    record("3", ok, "Example 1 p=5 N=200 grid (0, 0.12, 0.3), 300 reps; " + "; ".join(parts)
                    + " (strictly increasing, last >= 0.45)")
    assert ok


def test_c04_dense_power_high_dimension():
    r = run_cell(ScenarioConfig(2, 50, 500, 0.08, "dense20", reps=200, master_seed=SEED + 4))
    ok = r.rejection_rate_T >= 0.80 and r.rejection_rate_Ta >= 0.80
    record("4", ok, f"Example 2 p=50 dense N=500 |beta|=0.08, 200 reps: T={r.rejection_rate_T:.3f} "
                    f"Ta={r.rejection_rate_Ta:.3f} (>= 0.80)")
    assert ok


def test_c05_null_z_calibration(example1_null):
    r = example1_null
    assert r.degenerate == 0
    p_t = stats.kstest(r.z_T, "norm").pvalue
    p_ta = stats.kstest(r.z_Ta, "norm").pvalue
    ok = p_t > 0.01 and p_ta > 0.01
    record("5", ok, f"KS vs N(0,1) over 500 null z-scores: p(T)={p_t:.3f} p(Ta)={p_ta:.3f} (> 0.01)")
    assert ok


def test_c06_oracle_equivalence():
    rs = np.random.default_rng(SEED + 6)
    worst = 0.0
    for _ in range(100):
        n = int(rs.integers(1, 21))
        p = int(rs.integers(1, 6))
        fam = ("gaussian", "laplace")[int(rs.integers(0, 2))]
        eta = rs.standard_normal(2 * n) * rs.uniform(0.1, 3)
        x = rs.standard_normal((2 * n, p)) * rs.uniform(0.2, 2)
        ps = PairedSample(eta, x)
        gamma = float(rs.uniform(0.3, 3))
        gammas = tuple(rs.uniform(0.3, 3, p))
        est = pair_estimate_T(ps, KernelSpec(fam, bandwidth=gamma))
        ref = brute_pair_estimate(eta, x, lambda a, b: k_scalar(fam, gamma, a, b))
        est_a = pair_estimate_Ta(ps, KernelSpec(fam, bandwidths=gammas))
        ref_a = brute_pair_estimate(eta, x, lambda a, b: k_sum(fam, gammas, a, b))
        for got, want in ((est.delta_hat, ref[0]), (est.var_hat, ref[1]),
                          (est_a.delta_hat, ref_a[0]), (est_a.var_hat, ref_a[1])):
            worst = max(worst, abs(got - want) / max(abs(want), 1e-300))
    ok = worst <= 1e-12
    record("6", ok, f"100 random instances vs loop oracle: max relative error {worst:.2e} (<= 1e-12)")
    assert ok


def test_c07_Ta_equals_T_in_one_dimension():
    rs = np.random.default_rng(SEED + 7)
    worst = 0.0
    cfg = TestConfig(statistic="Both", regressor=RegressorSpec("linear"))
    for i in range(50):
        n1, n2 = (int(v) for v in rs.integers(8, 60, 2))
        x1, x2 = rs.standard_normal((n1, 1)), rs.standard_normal((n2, 1)) * 1.5
        d1 = Dataset(x1, np.sin(x1[:, 0]) + 0.3 * rs.standard_normal(n1))
        d2 = Dataset(x2, np.sin(x2[:, 0]) + 0.3 * rs.standard_normal(n2))
        t, ta = run_test(d1, d2, cfg, RngStream(SEED, i))
        assert t.bandwidths[0].bandwidth == ta.bandwidths[0].bandwidths[0]
        for a, b in ((t.value, ta.value), (t.stderr, ta.stderr)):
            worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    ok = worst <= 1e-12
    record("7", ok, f"50 random 1-d instances, T vs Ta value/stderr: max relative gap {worst:.2e} (<= 1e-12)")
    assert ok


def test_c08_bilinearity():
    rs = np.random.default_rng(SEED + 8)
    worst = 0.0
    for _ in range(30):
        n, p = int(rs.integers(1, 30)), int(rs.integers(1, 6))
        eta, x = rs.standard_normal(2 * n), rs.standard_normal((2 * n, p))
        for spec, fn in ((KernelSpec(bandwidth=1.2), pair_estimate_T),
                         (KernelSpec(bandwidths=tuple(rs.uniform(0.5, 2, p))), pair_estimate_Ta)):
            base = fn(PairedSample(eta, x), spec)
            for c in (0.5, 2.0, 10.0):
                sc = fn(PairedSample(c * eta, x), spec)
                worst = max(worst,
                            abs(sc.delta_hat - c**2 * base.delta_hat) / abs(c**2 * base.delta_hat),
                            abs(sc.var_hat - c**4 * base.var_hat) / abs(c**4 * base.var_hat))
    ok = worst <= 1e-10
    record("8", ok, f"residual scaling c in (0.5, 2, 10): max relative error {worst:.2e} (<= 1e-10)")
    assert ok


def _exponent(fam, gamma, a, b):
    sq = float(np.sum((np.asarray(a) - np.asarray(b)) ** 2))
    return sq / (2 * gamma**2) if fam == "gaussian" else math.sqrt(sq) / gamma


def _positive(value, exponent):
    # exp(-t) is representable in float64 only for t below ~745
    return value > 0 if exponent < 700 else value >= 0


def test_c09_kernel_and_bandwidth_invariants():
    rs = np.random.default_rng(SEED + 9)
    failures = []
    underflow = 0
    for i in range(1000):
        p = int(rs.integers(1, 8))
        x, x2 = rs.standard_normal(p) * 3, rs.standard_normal(p) * 3
        for fam in ("gaussian", "laplace"):
            gamma = float(rs.uniform(0.1, 5))
            spec = KernelSpec(fam, bandwidth=gamma)
            k12, k21 = eval_kernel(spec, x, x2), eval_kernel(spec, x2, x)
            t = _exponent(fam, gamma, x, x2)
            underflow += t >= 700
            sym = k12 == k21 if fam == "gaussian" else abs(k12 - k21) <= math.ulp(k12)
            if not (sym and _positive(k12, t) and k12 <= 1 and eval_kernel(spec, x, x) == 1.0):
                failures.append(("k", i, fam))
            gammas = rs.uniform(0.1, 5, p)
            gspec = KernelSpec(fam, bandwidths=tuple(gammas))
            g = eval_kernel_sum_G(gspec, x, x2)
            t_min = min(_exponent(fam, gd, [a], [b]) for gd, a, b in zip(gammas, x, x2))
            if not (_positive(g, t_min) and g <= p and eval_kernel_sum_G(gspec, x, x) == p
                    and abs(g - eval_kernel_sum_G(gspec, x2, x)) <= p * math.ulp(1.0)):
                failures.append(("G", i, fam))
            k_prev = eval_kernel(spec, x, x)
            for s in (0.25, 0.5, 1.0, 2.0):
                k_s = eval_kernel(spec, x, x + s * (x2 - x))
                if k_s > k_prev:
                    failures.append(("monotone", i, fam))
                k_prev = k_s
    # bandwidths as the tests pick them: strict positivity with no exemption
    for i in range(1000):
        pts = rs.standard_normal((30, int(rs.integers(1, 8)))) * rs.uniform(0.1, 10)
        a, b = pts[int(rs.integers(0, 30))], pts[int(rs.integers(0, 30))]
        for fam in ("gaussian", "laplace"):
            spec = KernelSpec(fam, bandwidth=median_bandwidth_scalar(pts))
            if not 0 < eval_kernel(spec, a, b) <= 1:
                failures.append(("median-k", i, fam))
    for i in range(50):
        pts = rs.standard_normal((int(rs.integers(2, 40)), int(rs.integers(1, 6))))
        c = float(rs.uniform(0.01, 100))
        g, gc = median_bandwidth_scalar(pts), median_bandwidth_scalar(c * pts)
        spec, spec_c = KernelSpec(bandwidth=g), KernelSpec(bandwidth=gc)
        if abs(gc - c * g) > 1e-12 * c * g or abs(
                eval_kernel(spec_c, c * pts[0], c * pts[1]) - eval_kernel(spec, pts[0], pts[1])) > 1e-12:
            failures.append(("scale", i))
    ok = not failures
    record("9", ok, f"kernel symmetry/bounds/k(x,x)=1/monotonicity on 1000 random pairs "
                    f"({underflow} with exponent past float64 range, checked as k >= 0), 1000 pairs "
                    f"at median-heuristic bandwidths, scale covariance on 50 point sets: "
                    f"{len(failures)} failures")
    assert ok, failures[:5]


def test_c10_generator_sanity():
    d = draw_sample(1, 2, make_beta("lowdim_all", 5, 0.0), 100_000, 5, RngStream(SEED, 10))
    cov = np.cov(d.x.T)
    lag1 = np.array([cov[i, i + 1] for i in range(4)])
    noise_var = float(np.var(draw_noise(2, 1_000_000, RngStream(SEED, 11).generator())))
    ok = (np.all(np.abs(lag1 - 0.3) <= 0.01) and abs(noise_var - 0.25) <= 0.005
          and T_SCALE == math.sqrt(0.15) and ar_covariance(5)[0, 1] == 0.3)
    record("10", ok, f"group-2 lag-1 covariances {np.round(lag1, 4).tolist()} (0.3 +/- 0.01); "
                     f"t5 noise variance {noise_var:.4f} (0.25 +/- 0.005); scale == sqrt(0.15)")
    assert ok


def _cli(argv):
    buf = io.StringIO()
    code = main(argv, out=buf)
    return code, buf.getvalue()


def test_c11_cli_determinism(tmp_path):
    from regdiff.data import write_csv

    beta = make_beta("lowdim_all", 3, 0.0)
    write_csv(draw_sample(3, 1, beta, 90, 3, RngStream(1, 1)), tmp_path / "a.csv")
    write_csv(draw_sample(3, 2, beta, 91, 3, RngStream(1, 2)), tmp_path / "b.csv")
    invocations = [
        ["test", "--data1", str(tmp_path / "a.csv"), "--data2", str(tmp_path / "b.csv"),
         "--response", "y", "--seed", "1"],
        ["test", "--data1", str(tmp_path / "a.csv"), "--data2", str(tmp_path / "b.csv"),
         "--response", "y", "--seed", "2", "--format", "tsv", "--kernel", "laplace"],
        ["simulate", "--example", "1", "--p", "5", "--n", "60", "--beta-norms", "0,0.3",
         "--mode", "lowdim", "--reps", "6", "--seed", "11"],
        ["realdata", "--csv", str(tmp_path / "a.csv"), "--response", "y",
         "--scenario", "null-split", "--reps", "5", "--seed", "3"],
        ["realdata", "--csv", str(tmp_path / "a.csv"), "--response", "y",
         "--scenario", "median-split", "--swap", "0.05", "--seed", "3"],
    ]
    mismatched = []
    for argv in invocations:
        outs = {_cli(argv + extra) for extra in ([], [], ["--threads", "1"], ["--threads", "4"])}
        if len(outs) != 1 or next(iter(outs))[0] != 0:
            mismatched.append(argv[0])
    ok = not mismatched
    record("11", ok, f"{len(invocations)} CLI invocations x 4 runs (threads default/1/4): "
                     f"{'byte-identical' if ok else 'differs: ' + ', '.join(mismatched)}")
    assert ok
