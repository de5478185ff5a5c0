import math

import numpy as np
import pytest

from empwass.measures import sampler_from_string
from empwass.mc_harness import (ExperimentSpec, HarnessError, fit_bound_constant,
                                replicate_seed, run_as_trajectory,
                                run_rate_experiment, run_tail_experiment,
                                verify_appendix_inequalities, wilson_interval)


def _spec(**kw):
    base = dict(sampler=sampler_from_string("uniform-cube:1"), p=1.0,
                estimator="1d-quantile", n_grid=(32, 64, 128, 256),
                replicates=60, seed=3)
    base.update(kw)
    return ExperimentSpec(**base)


def test_spec_validation():
    with pytest.raises(HarnessError):
        _spec(n_grid=(64, 32))
    with pytest.raises(HarnessError):
        _spec(estimator="bogus")


def test_replicate_seed_is_order_free():
    a = replicate_seed(7, 64, 3).random(4)
    b = replicate_seed(7, 64, 3).random(4)
    assert np.array_equal(a, b)
    c = replicate_seed(7, 64, 4).random(4)
    assert not np.array_equal(a, c)


def test_workers_give_identical_report():
    s1 = _spec(workers=1)
    s4 = _spec(workers=4)
    r1 = run_rate_experiment(s1)
    r4 = run_rate_experiment(s4)
    assert r1.to_json() == r4.to_json()


def test_rate_slope_one_dimensional():
    # W_1 against uniform[0,1] decays like n^{-1/2}
    spec = _spec(n_grid=(64, 128, 256, 512, 1024, 2048), replicates=60,
                 drop_small=2)
    rep = run_rate_experiment(spec)
    assert not rep.degenerate
    assert rep.slope == pytest.approx(-0.5, abs=0.1)
    lo, hi = rep.slope_ci
    assert lo < -0.5 < hi or abs(rep.slope + 0.5) < 0.1


def test_estimators_agree_in_one_dimension():
    # the two-sample estimator with a large reference sample approximates
    # the exact quantile-integral estimator in distribution
    sampler = sampler_from_string("uniform-cube:1")
    qspec = _spec(sampler=sampler, n_grid=(128, 256), replicates=80)
    tspec = _spec(sampler=sampler, estimator="mcf-two-sample",
                  n_grid=(128, 256), replicates=80, m_ref=100000)
    q = run_rate_experiment(qspec)
    t = run_rate_experiment(tspec)
    for rq, rt in zip(q.per_n, t.per_n):
        se = math.hypot(rq["sd"] / math.sqrt(80), rt["sd"] / math.sqrt(80))
        assert abs(rq["mean"] - rt["mean"]) < 4 * se + 0.01 * rq["mean"]


def test_rate_degenerate_flag_on_point_mass():
    spec = _spec(sampler=sampler_from_string("point-mass:1"),
                 n_grid=(32, 64, 128, 256), replicates=40)
    rep = run_rate_experiment(spec)
    assert rep.degenerate


def test_corrected_fit_reported_in_equality_regime():
    # alpha = 2p for the square with p = 1: log-corrected fit is computed
    spec = _spec(sampler=sampler_from_string("uniform-cube:2"),
                 estimator="mcf-two-sample",
                 n_grid=(64, 128, 256, 512), replicates=40)
    rep = run_rate_experiment(spec)
    assert rep.corrected_slope is not None
    assert rep.corrected_r2 is not None


def test_wilson_interval_properties():
    lo, hi = wilson_interval(5, 100)
    assert 0.0 <= lo < 0.05 < hi <= 1.0
    lo0, hi0 = wilson_interval(0, 100)
    assert lo0 == 0.0 and hi0 > 0.0
    lo1, hi1 = wilson_interval(100, 100)
    assert hi1 == 1.0 and lo1 < 1.0
    # coverage sanity: exact binomial simulation
    rng = np.random.default_rng(0)
    hits = 0
    trials = 400
    for _ in range(trials):
        k = rng.binomial(50, 0.3)
        lo, hi = wilson_interval(int(k), 50)
        hits += lo <= 0.3 <= hi
    assert hits / trials > 0.9


def test_tail_experiment_and_constant_fit_self_inverse():
    spec = _spec(n_grid=(64, 128, 256), replicates=1500,
                 x_grid=(0.05, 0.1))
    rep = run_tail_experiment(spec)
    for row in rep.per_n:
        assert row["tail_x0.05_lo"] <= row["tail_x0.05"] <= row["tail_x0.05_hi"]

    # bound = C * upper limit itself must fit with C ~ 1
    rows = {row["n"]: row for row in rep.per_n}

    def bound(x, n, C):
        return C * rows[n][f"tail_x{x:g}_hi"]

    fit = fit_bound_constant(rep, bound)
    assert fit.ok
    assert fit.C == pytest.approx(1.0, rel=5e-3)


def test_constant_fit_falsifies_impossible_bound():
    spec = _spec(n_grid=(64, 128), replicates=1000, x_grid=(0.05,))
    rep = run_tail_experiment(spec)

    def zero_bound(x, n, C):
        return 0.0  # no C can dominate a positive frequency

    fit = fit_bound_constant(rep, zero_bound)
    assert not fit.ok
    assert fit.falsified_at is not None


def test_tail_experiment_needs_x_grid():
    with pytest.raises(HarnessError):
        run_tail_experiment(_spec(replicates=1500))


def test_as_trajectory_bounded_and_deterministic():
    sampler = sampler_from_string("uniform-cube:1")
    out1 = run_as_trajectory(sampler, 1.0, 4096, seed=5)
    out2 = run_as_trajectory(sampler, 1.0, 4096, seed=5)
    assert out1 == out2
    assert out1["max_normalized"] < 10.0


def test_verify_appendix_rademacher_r2_is_tight():
    out = verify_appendix_inequalities("rademacher", 2.0, (64, 128, 256),
                                       R=1500, seed=9)
    assert math.isfinite(out["maximal_fitted_L"])
    for row in out["rows"]:
        # Rademacher at r = 2 meets the averaged bound with equality
        assert row["burkholder_ratio"] == pytest.approx(1.0, abs=0.05)
        assert row["burkholder_ok"]
        assert row["vbe_ok"]


def test_verify_appendix_heavy_tailed():
    out = verify_appendix_inequalities("pareto", 1.5, (64, 128), R=1500,
                                       seed=10, a=4.0)
    # r in (1, 2]: only the order-(1,2] inequality applies
    for row in out["rows"]:
        assert row["vbe_ok"]
        assert row["vbe_ratio"] <= 1.0 + 3.0 * row["lhs_se"] / row["vbe_rhs"]
