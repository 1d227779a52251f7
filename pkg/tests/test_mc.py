import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mdlab import ar1, erw, mc
from mdlab.errors import DomainError, ReplicateError
from mdlab.normal import std_normal_cdf, std_normal_isf

TWO_POINT = erw.StepDistribution.two_point(0.5, 1.5, 0.5)
ERW_SMALL = erw.ErwParams(p=0.6, n=300, steps=TWO_POINT)
AR1_SMALL = ar1.Ar1Params(0.5, ar1.NoiseDistribution.uniform(1.0), 300)


def test_stream_is_pure_function_of_seed_and_index():
    a = mc.replicate_stream(42, 7).random(5)
    b = mc.replicate_stream(42, 7).random(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, mc.replicate_stream(42, 8).random(5))
    assert not np.array_equal(a, mc.replicate_stream(43, 7).random(5))
    with pytest.raises(DomainError):
        mc.replicate_stream(-1, 0)
    with pytest.raises(DomainError):
        mc.replicate_stream(1 << 64, 0)


@pytest.mark.parametrize("model", [ERW_SMALL, AR1_SMALL])
def test_results_independent_of_worker_count(model):
    base = mc.run_replicates(mc.McConfig(model, replications=300, master_seed=5, workers=1))
    for workers in (2, 3, 8):
        other = mc.run_replicates(mc.McConfig(model, replications=300, master_seed=5, workers=workers))
        assert base.tobytes() == other.tobytes()


def test_single_replicate_determinism():
    one = mc.run_replicates(mc.McConfig(ERW_SMALL, replications=1, master_seed=99, workers=1))
    eight = mc.run_replicates(mc.McConfig(ERW_SMALL, replications=1, master_seed=99, workers=8))
    assert one.shape == (1,) and one.tobytes() == eight.tobytes()


def test_seed_changes_output():
    a = mc.run_replicates(mc.McConfig(ERW_SMALL, replications=50, master_seed=1))
    b = mc.run_replicates(mc.McConfig(ERW_SMALL, replications=50, master_seed=2))
    assert not np.array_equal(a, b)


def test_engine_statistic_matches_path_pipeline():
    prm = erw.ErwParams(p=0.7, n=400, steps=erw.StepDistribution.uniform_on(), q=0.5)
    cfg_det = mc.McConfig(prm, replications=20, master_seed=31, statistic_mode="det")
    cfg_self = mc.McConfig(prm, replications=20, master_seed=31, statistic_mode="self")
    det, selfn = mc.run_replicates(cfg_det), mc.run_replicates(cfg_self)
    table = erw.coefficients(prm.p, prm.n)
    for i in range(20):
        stats = erw.martingale_stats(erw.simulate_path_fast(prm, mc.replicate_stream(31, i)), table)
        assert det[i] == pytest.approx(erw.normalized_statistic(stats, "deterministic"), rel=1e-12, abs=1e-14)
        assert selfn[i] == pytest.approx(erw.normalized_statistic(stats, "self_normalized"), rel=1e-12, abs=1e-14)


def test_ar1_engine_statistic_matches_path_pipeline():
    cfg = mc.McConfig(AR1_SMALL, replications=10, master_seed=4, statistic_mode="standardized")
    stat = mc.run_replicates(cfg)
    sigma = AR1_SMALL.noise.sigma
    for i in range(10):
        path = ar1.simulate(AR1_SMALL, mc.replicate_stream(4, i))
        assert stat[i] == pytest.approx(ar1.standardized_stat(path, 0.5, sigma), rel=1e-9, abs=1e-12)


def test_degenerate_ar1_replicate_reports_index():
    rec = np.array([[1.0, 2.0], [0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ReplicateError) as err:
        mc.ar1_statistics(AR1_SMALL, rec, "studentized")
    assert err.value.index == 1
    stat = mc.ar1_statistics(AR1_SMALL, rec, "studentized", strict=False)
    assert np.isnan(stat[1]) and np.isfinite(stat[0])


def test_config_validation():
    with pytest.raises(DomainError):
        mc.McConfig(ERW_SMALL, replications=0)
    with pytest.raises(DomainError):
        mc.McConfig(ERW_SMALL, replications=10, grid=(1.0, 0.5))
    with pytest.raises(DomainError):
        mc.McConfig(ERW_SMALL, replications=10, grid=(9.0,))
    with pytest.raises(DomainError):
        mc.McConfig(ERW_SMALL, replications=10, statistic_mode="studentized")
    with pytest.raises(DomainError):
        mc.McConfig(AR1_SMALL, replications=10, statistic_mode="self")
    cfg = mc.McConfig(ERW_SMALL, replications=10, grid=(0, 1, 2), statistic_mode="self")
    assert cfg.statistic_mode == "self_normalized" and cfg.grid == (0.0, 1.0, 2.0)


# -- Wilson interval ------------------------------------------------------------------

def wilson_by_quadratic(hits, reps, z):
    """Roots of (phat - pi)^2 = z^2 pi (1 - pi) / reps."""
    phat = hits / reps
    k = z * z / reps
    roots = np.roots([1 + k, -(2 * phat + k), phat * phat])
    return float(min(roots.real)), float(max(roots.real))


def test_wilson_against_quadratic_oracle():
    rng = np.random.default_rng(0)
    z = std_normal_isf(0.025)
    for _ in range(1000):
        reps = int(rng.integers(1, 100_000))
        hits = int(rng.integers(0, reps + 1))
        lo, hi = mc.wilson_interval(hits, reps)
        olo, ohi = wilson_by_quadratic(hits, reps, z)
        assert lo == pytest.approx(max(olo, 0.0), abs=1e-9)
        assert hi == pytest.approx(min(ohi, 1.0), abs=1e-9)
        assert lo <= hits / reps <= hi


@given(st.integers(1, 10**7).flatmap(lambda r: st.tuples(st.integers(0, r), st.just(r))))
def test_wilson_contains_estimate(pair):
    hits, reps = pair
    lo, hi = mc.wilson_interval(hits, reps)
    assert 0.0 <= lo <= hits / reps <= hi <= 1.0


# -- tail ratios --------------------------------------------------------------------

def test_tail_ratios_fields_and_monotonicity():
    samples = np.random.default_rng(3).standard_normal(50_000)
    grid = np.arange(0, 3.01, 0.25)
    est = mc.tail_ratios(samples, grid)
    assert len(est) == 2 * len(grid)
    for side in ("upper", "lower"):
        rows = [e for e in est if e.side == side]
        p = [e.p_hat for e in rows]
        assert all(b <= a for a, b in zip(p, p[1:]))
        for e in rows:
            assert e.p_lo <= e.p_hat <= e.p_hi
            assert e.ratio == pytest.approx(e.p_hat / e.normal_tail)
            assert e.ratio_lo == pytest.approx(e.p_lo / e.normal_tail)
            assert e.ratio_hi == pytest.approx(e.p_hi / e.normal_tail)
    at_zero = [e for e in est if e.x == 0.0]
    assert all(abs(e.ratio - 1) < 0.03 for e in at_zero)


def test_tail_ratio_counts_are_inclusive():
    est = mc.tail_ratios([-1.0, 0.0, 1.0, 2.0], [1.0])
    upper, lower = est
    assert (upper.side, upper.hits) == ("upper", 2)
    assert (lower.side, lower.hits) == ("lower", 1)


def test_tail_ratio_single_replicate():
    for value, expected in ((5.0, 1), (-5.0, 0)):
        upper = mc.tail_ratios([value], [1.0])[0]
        assert upper.hits == expected and upper.p_hat in (0.0, 1.0)
        assert upper.p_lo <= upper.p_hat <= upper.p_hi
        assert upper.p_hi - upper.p_lo > 0.5


def test_tail_ratio_flags_underflow():
    est = mc.tail_ratios([0.1, 0.2], [50.0])
    assert all(e.flagged and math.isnan(e.ratio) for e in est)


def test_tail_ratio_csv_format():
    est = mc.tail_ratios([0.0, 1.0], [0.5])
    lines = mc.tail_ratio_csv(est).splitlines()
    assert lines[0] == mc.TAIL_RATIO_HEADER
    fields = lines[1].split(",")
    assert fields[:4] == ["0.5", "upper", "1", "2"]
    assert fields[4] == "0.5"
    assert float(fields[7]) == pytest.approx(0.3085375387259869, rel=1e-15)


def test_tail_ratio_sweep_needs_grid():
    with pytest.raises(DomainError):
        mc.tail_ratio_sweep(mc.McConfig(ERW_SMALL, replications=5))


# -- Kolmogorov-Smirnov ---------------------------------------------------------------

def ks_brute(samples):
    """sup |F_R - Phi| evaluated at and just left of every sample point, O(R^2)."""
    s = list(samples)
    r = len(s)
    best = 0.0
    for x in s:
        at = sum(1 for y in s if y <= x) / r
        left = sum(1 for y in s if y < x) / r
        phi = std_normal_cdf(x)
        best = max(best, abs(at - phi), abs(left - phi))
    return best


@pytest.mark.parametrize("r", [1, 7, 100, 500])
def test_ks_matches_brute_force(r):
    rng = np.random.default_rng(r)
    samples = rng.standard_normal(r) * 1.3 + 0.2
    assert mc.ks_distance(samples) == pytest.approx(ks_brute(samples), abs=1e-15)
    ties = np.round(samples, 1)
    assert mc.ks_distance(ties) == pytest.approx(ks_brute(ties), abs=1e-15)


def test_ks_examples():
    r = 1000
    quantiles = [std_normal_isf(1 - (i - 0.5) / r) for i in range(1, r + 1)]
    assert mc.ks_distance(quantiles) == pytest.approx(1 / (2 * r), rel=1e-9)
    assert mc.ks_distance(np.zeros(200)) == 0.5


def test_berry_esseen_distance_small():
    est = mc.berry_esseen_distance(mc.McConfig(ERW_SMALL, replications=2000, master_seed=1))
    assert 0 <= est.d_sup <= 1
    assert est.dkw_bound == pytest.approx(math.sqrt(math.log(40) / 4000))
    with pytest.raises(DomainError):
        mc.berry_esseen_distance(mc.McConfig(ERW_SMALL, replications=50))


# -- coverage ----------------------------------------------------------------------

def test_coverage_collapses_for_large_kappa():
    cfg = mc.McConfig(AR1_SMALL, replications=2000, master_seed=2)
    est = mc.coverage_experiment(cfg, 0.99, "quantile")
    assert est.coverage < 0.05
    assert est.binom_lo <= est.coverage <= est.binom_hi and est.covered <= est.R


def test_exponential_coverage_dominates():
    cfg = mc.McConfig(AR1_SMALL, replications=3000, master_seed=8)
    for kappa in (0.3, 0.1, 0.05):
        q = mc.coverage_experiment(cfg, kappa, "quantile")
        e = mc.coverage_experiment(cfg, kappa, "exponential")
        assert e.covered >= q.covered


def test_coverage_requires_ar1():
    with pytest.raises(DomainError):
        mc.coverage_experiment(mc.McConfig(ERW_SMALL, replications=10), 0.1)


# -- rate fit --------------------------------------------------------------------------

def test_rate_fit_examples():
    ns = [100, 1000, 10_000]
    exact = [(n, 0.7 * math.log(n) / math.sqrt(n)) for n in ns]
    fit = mc.rate_fit(exact)
    assert fit.c_hat == pytest.approx(0.7, rel=1e-14)
    np.testing.assert_allclose(fit.residuals, 0, atol=1e-15)
    assert mc.rate_fit([(math.e ** 2, 2 / math.e)]).c_hat == pytest.approx(1.0, rel=1e-14)
    noisy = [(100, 0.3), (1000, 0.1), (10_000, 0.05)]
    assert mc.rate_fit(noisy + noisy).c_hat == pytest.approx(mc.rate_fit(noisy).c_hat, rel=1e-14)
    with pytest.raises(DomainError):
        mc.rate_fit([(2, 0.1)])


def test_grid_capped_at_boundary_regime():
    boundary = erw.ErwParams(p=0.75, n=100, steps=TWO_POINT)
    mc.McConfig(boundary, 10, grid=(1.0, 3.0))
    with pytest.raises(DomainError):
        mc.McConfig(boundary, 10, grid=(1.0, 3.5))
    mc.McConfig(erw.ErwParams(p=0.6, n=100), 10, grid=(3.5,))
