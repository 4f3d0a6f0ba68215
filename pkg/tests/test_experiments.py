import csv
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lpsc.experiments import (
    Ensemble,
    ExperimentConfig,
    ExperimentError,
    InvariantError,
    boost_roundtrip,
    decode_and_certify,
    estimate_error_rate,
    estimate_threshold,
    gc_sc_monotonicity,
    lp_excess_experiment,
    run_trial,
    run_trials,
    sample_bsc,
    wilson,
    write_csv,
)
from lpsc.graphs import CodeParams, TannerGraph, build_graph_cover, custom, derive_sc_from_cover
from lpsc import experiments

CHAIN = TannerGraph.from_parity_matrix([[1, 1, 0], [0, 1, 1]])
P = CodeParams(3, 2, 2, 2)


def test_bsc_extremes():
    assert not sample_bsc(50, 0.0, (1, 2)).any()
    assert sample_bsc(50, 1.0, (1, 2)).all()
    with pytest.raises(ExperimentError):
        sample_bsc(5, 1.5, 0)


def test_bsc_mean():
    bits = sample_bsc(10**4, 0.1, (3, 0))
    sd = math.sqrt(0.1 * 0.9 / 10**4)
    assert abs(bits.mean() - 0.1) < 3 * sd


@given(st.integers(0, 2**64 - 1), st.integers(0, 10**6))
def test_bsc_reproducible(master, trial):
    a = sample_bsc(64, 0.3, (master, trial))
    assert (a == sample_bsc(64, 0.3, (master, trial))).all()
    lower = sample_bsc(64, 0.1, (master, trial))
    assert (lower <= a).all()


def test_config_validation():
    e = Ensemble("Fixed", graph=CHAIN)
    for eps, trials in ((0.0, 5), (0.5, 5), (0.1, 0)):
        with pytest.raises(ExperimentError):
            ExperimentConfig(e, eps, trials)
    with pytest.raises(ExperimentError):
        Ensemble("Regular", n=7)
    with pytest.raises(ExperimentError):
        Ensemble("SC")


def test_wilson_contains_rate():
    for k, n in ((0, 10), (3, 10), (10, 10), (17, 200)):
        r = wilson(k, n)
        assert r.wilson_ci_95[0] <= r.error_rate <= r.wilson_ci_95[1]


def test_rate_zero_at_tiny_epsilon():
    cfg = ExperimentConfig(Ensemble("Fixed", graph=CHAIN), 1e-9, 20)
    rate, _ = estimate_error_rate(cfg)
    assert rate.error_rate == 0


def test_rate_near_half():
    cfg = ExperimentConfig(Ensemble("Regular", d_v=3, d_c=6, n=30), 0.45, 200, master_seed=5, certify=False)
    rate, _ = estimate_error_rate(cfg)
    assert rate.error_rate > 0.9


def test_records_reproducible_and_order_free():
    cfg = ExperimentConfig(Ensemble("Regular", d_v=3, d_c=6, n=12), 0.1, 12, master_seed=9)
    a = run_trials(cfg)
    assert a == run_trials(cfg)
    assert [run_trial(cfg, t) for t in reversed(range(12))][::-1] == a
    assert run_trials(cfg, workers=2) == a


def test_invariant_is_enforced(monkeypatch):
    class Fake:
        success = True

    monkeypatch.setattr(experiments, "lp_decode", lambda g, gamma: Fake())
    with pytest.raises(InvariantError):
        decode_and_certify(CHAIN, [-1, -1, -1])


def test_csv_columns(tmp_path):
    cfg = ExperimentConfig(Ensemble("Fixed", graph=CHAIN), 0.2, 5, master_seed=1)
    _, recs = estimate_error_rate(cfg)
    path = tmp_path / "out.csv"
    write_csv(recs, path)
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["trial", "seed", "eps", "success", "margin", "alpha_max"]
    assert len(rows) == 5


def test_threshold_of_a_bare_variable():
    # with no checks a single flip always wins, so the rate is epsilon itself
    lone = custom(1, 0, [])
    th = estimate_threshold(Ensemble("Fixed", graph=lone), 400, target_rate=0.05, tol=0.005, master_seed=2)
    assert th.label == "finite-n estimate"
    assert abs(th.estimate - 0.05) < 0.03
    assert th.rate_lo.error_rate < 0.05 <= th.rate_hi.error_rate
    th2 = estimate_threshold(Ensemble("Fixed", graph=lone), 400, target_rate=0.02, tol=0.005, master_seed=2)
    assert th2.estimate < th.estimate


def test_threshold_bracket_error():
    lone = custom(1, 0, [])
    with pytest.raises(ExperimentError):
        estimate_threshold(Ensemble("Fixed", graph=lone), 50, target_rate=0.9)


def test_threshold_reproducible():
    e = Ensemble("Regular", d_v=3, d_c=6, n=12)
    a = estimate_threshold(e, 30, tol=0.05, master_seed=4, certify=False)
    assert a == estimate_threshold(e, 30, tol=0.05, master_seed=4, certify=False)


def test_rate_monotone_in_epsilon():
    e = Ensemble("Regular", d_v=3, d_c=6, n=12)
    lo, _ = estimate_error_rate(ExperimentConfig(e, 0.01, 60, 3))
    hi, _ = estimate_error_rate(ExperimentConfig(e, 0.2, 60, 3))
    assert lo.error_rate <= hi.error_rate + 3 * math.hypot(lo.sigma, hi.sigma)


def test_excess_error_free_regime():
    rep = lp_excess_experiment(CHAIN, 1e-6, 1e-4, 50)
    assert rep.observed_prob == 1 and rep.bound == 1 and rep.ok


def test_excess_toy_code():
    rep = lp_excess_experiment(CHAIN, 0.05, 0.2, 2000, master_seed=3)
    assert rep.ok
    assert rep.vacuous == (rep.bound <= 0)
    with pytest.raises(ExperimentError):
        lp_excess_experiment(CHAIN, 0.5, 1.5, 10)


def test_monotonicity_zero_error():
    rep = gc_sc_monotonicity(P, 1e-9, 3)
    assert rep.cover_failures == 0 and rep.derived_failures == 0 and rep.ok


def test_monotonicity_small_run():
    rep = gc_sc_monotonicity(P, 0.05, 60, master_seed=1)
    assert not rep.violations and rep.aggregate_ok
    assert len(rep.records) == 60 and all(len(r.derived) == 5 for r in rep.records)


def test_roundtrip():
    rep = boost_roundtrip(CodeParams(3, 2, 2, 4), 0, 0.05, 40, master_seed=2)
    assert rep.ok and rep.decodable > 0 and rep.nontrivial > 0


def test_roundtrip_undersized_boost():
    rep = boost_roundtrip(CodeParams(3, 2, 2, 4), -1, 0.05, 40, master_seed=6, boost=1)
    assert rep.nontrivial > 0
    assert len(rep.failures) == rep.nontrivial
    assert all("lift" in msg for _, msg in rep.failures)
