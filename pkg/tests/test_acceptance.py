"""One test per acceptance criterion; each prints a PASS or FAIL line.

Run alone with ``pytest -s tests/test_acceptance.py``; the lines are also
repeated in the terminal summary.
"""

import graphlib
import math
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
from hypothesis import HealthCheck, given, settings

from conftest import record
from oracles import inject_circulation, single_sink_wdags, unified_brute_force
from lpsc.bounds import check_bound_on_instance, unified_opt
from lpsc.decoder import gamma_from_error, lp_decode, parity_cone_extreme_rays, weight_two_indicators
from lpsc.experiments import (
    Ensemble,
    ExperimentConfig,
    estimate_error_rate,
    estimate_threshold,
    gc_sc_monotonicity,
    lp_excess_experiment,
)
from lpsc.forest import expand_to_forest, verify_forest_properties
from lpsc.graphs import CodeParams, TannerGraph, build_regular, build_spatially_coupled, custom
from lpsc.tightness import build_tight_instance, certify_lower_bound, verify_explicit_hyperflow
from lpsc.witness import (
    find_dual_witness,
    remove_cycles_and_normalize,
    to_wdag,
    verify_dual_witness,
    verify_hyperflow,
)

F = Fraction


@contextmanager
def criterion(num, title):
    info = {"detail": ""}
    start = time.time()
    try:
        yield info
    except BaseException:
        record(f"criterion {num:>2}: FAIL  {title}  {info['detail']}")
        raise
    record(f"criterion {num:>2}: PASS  {title}  {info['detail']} ({time.time() - start:.0f}s)")


# --- shared instance generators ------------------------------------------------------------


def random_custom(rng):
    n = int(rng.integers(3, 16))
    m = int(rng.integers(1, max(2, n // 2) + 1))
    edges = set()
    for c in range(m):
        deg = int(rng.integers(2, min(n, 6) + 1))
        for v in rng.choice(n, size=deg, replace=False):
            edges.add((int(v), c))
    return custom(n, m, sorted(edges))


def small_instances(count=200, seed=2024):
    """Cycle through (3,4)-regular, (3,6)-regular and custom codes with n <= 15."""
    rng = np.random.default_rng(seed)
    makers = [
        lambda: build_regular(3, 4, 8, int(rng.integers(2**31)), max_attempts=50000),
        lambda: build_regular(3, 4, 12, int(rng.integers(2**31)), max_attempts=50000),
        lambda: build_regular(3, 6, 12, int(rng.integers(2**31)), max_attempts=50000),
        lambda: random_custom(rng),
        lambda: random_custom(rng),
    ]
    for i in range(count):
        g = makers[i % len(makers)]()
        eps = rng.uniform(0.05, 0.35)
        eta = (rng.random(g.n_vars) < eps).astype(int)
        yield g, gamma_from_error(eta)


def topo_sort_ok(wdag) -> bool:
    ts = graphlib.TopologicalSorter()
    for u, outs in wdag.successors().items():
        ts.add(u)
        for v, _ in outs:
            ts.add(v, u)
    try:
        ts.prepare()
    except graphlib.CycleError:
        return False
    return True


# --- 1 ------------------------------------------------------------------------------------


def test_criterion_1_decoder_witness_equivalence():
    with criterion(1, "LP decoding success iff a dual witness exists") as info:
        total = agree = wins = 0
        for g, gamma in small_instances():
            dec = lp_decode(g, gamma)
            res = find_dual_witness(g, gamma)
            total += 1
            wins += dec.success
            if dec.success == (res.margin > 0):
                agree += 1
            if res.weighting is not None:
                assert verify_dual_witness(g, gamma, res.weighting).ok
        info["detail"] = f"{agree}/{total} agree, {wins} successes"
        assert total >= 200 and agree == total
        assert 0 < wins < total


# --- 2 ------------------------------------------------------------------------------------


def test_criterion_2_cycle_removal_contract():
    with criterion(2, "cycle removal yields an acyclic hyperflow") as info:
        rng = np.random.default_rng(7)
        cases = list(small_instances(count=240, seed=99))
        for t in range(40):
            g = build_regular(3, 6, 30 if t % 2 else 60, seed=1000 + t)
            eta = (rng.random(g.n_vars) < 0.06).astype(int)
            cases.append((g, gamma_from_error(eta)))
        checked = cyclic = iterations = 0
        for g, gamma in cases:
            res = find_dual_witness(g, gamma)
            if res.weighting is None:
                continue
            inputs = [res.weighting]
            looped = inject_circulation(g, res.weighting, res.margin)
            if looped is not None:
                assert verify_dual_witness(g, gamma, looped).ok
                inputs.append(looped)
                cyclic += 1
            for w in inputs:
                trace = []
                h = remove_cycles_and_normalize(to_wdag(g, w, gamma), g, trace=trace, instrumented=True)
                assert all(step.still_witness for step in trace)
                assert topo_sort_ok(h)
                rep = verify_hyperflow(g, gamma, h.to_weighting(g))
                assert rep.ok, rep.violations[:3]
                checked += 1
                iterations += len(trace)
        info["detail"] = f"{checked} witnesses ({cyclic} with injected cycles), {iterations} loop iterations"
        assert checked >= 100 and cyclic >= 50 and iterations >= cyclic


# --- 3 ------------------------------------------------------------------------------------


def test_criterion_3_forest_properties():
    with criterion(3, "forest expansion has all seven properties") as info:
        seen = []

        @settings(max_examples=150, derandomize=True, database=None, deadline=None,
                  suppress_health_check=list(HealthCheck))
        @given(single_sink_wdags(max_nodes=12))
        def run(g):
            forest = expand_to_forest(g)
            rep = verify_forest_properties(g, forest, check_paths=True)
            assert rep.ok, rep.failed_items()
            assert rep.sink_item_applicable
            seen.append(len(g.var_nodes) + len(g.check_nodes))

        run()
        info["detail"] = f"{len(seen)} WDAGs, up to {max(seen)} nodes"
        assert len(seen) >= 100 and max(seen) <= 12


# --- 4 ------------------------------------------------------------------------------------


def test_criterion_4_unified_optimum():
    with criterion(4, "unified optimum matches brute force") as info:
        cases = 0
        for beta in (6, 10):
            for lam in range(1, 5):
                for m in range(lam, 201):
                    r = unified_opt(lam, beta, 6, m)
                    best, count, arg = unified_brute_force(lam, beta, 6, m)
                    trimmed = tuple(r.T_prime)
                    while trimmed and trimmed[-1] == 0:
                        trimmed = trimmed[:-1]
                    assert sum(r.T_prime) == m
                    assert r.f_value == best, (lam, beta, m)
                    assert count == 1 and arg == trimmed, (lam, beta, m)
                    assert float(r.f_value) <= r.closed_form_bound * (1 + 1e-12)
                    cases += 1
        info["detail"] = f"{cases} (lambda, beta, m) cases"


# --- 5 ------------------------------------------------------------------------------------


def bound_instance(g, eps, rng):
    eta = (rng.random(g.n_vars) < eps).astype(int)
    gamma = gamma_from_error(eta)
    res = find_dual_witness(g, gamma)
    if res.weighting is None:
        return None
    h = remove_cycles_and_normalize(to_wdag(g, res.weighting, gamma), g)
    return check_bound_on_instance(g, h.to_weighting(g), gamma)


def test_criterion_5_edge_weight_bounds():
    with criterion(5, "edge weights respect the sublinear bounds") as info:
        rng = np.random.default_rng(5)
        plan = [(30, 150), (48, 120), (60, 100), (96, 103), (150, 25), (300, 2)]
        reg, worst_reg, seed = 0, 0.0, 0
        for n, want in plan:
            got = 0
            while got < want:
                seed += 1
                rep = bound_instance(build_regular(3, 6, n, seed), 0.05 if n < 150 else 0.04, rng)
                if rep is None:
                    continue
                assert rep.ok, (n, seed, rep.violations[:3], rep.ratio)
                worst_reg = max(worst_reg, rep.ratio)
                got += 1
            reg += got
        shapes = [(L, M) for L in range(1, 7) for M in (2, 4)]
        sc, worst_sc, seed = 0, 0.0, 0
        while sc < 200:
            seed += 1
            L, M = shapes[seed % len(shapes)]
            rep = bound_instance(build_spatially_coupled(CodeParams(3, 2, L, M), seed), 0.05, rng)
            if rep is None:
                continue
            assert rep.ok, (L, M, seed, rep.violations[:3], rep.ratio)
            worst_sc = max(worst_sc, rep.ratio)
            sc += 1
        info["detail"] = (
            f"{reg} regular (max ratio {worst_reg:.3f}), {sc} coupled (max ratio {worst_sc:.3f})"
        )


# --- 6 ------------------------------------------------------------------------------------


def test_criterion_6_tightness():
    with criterion(6, "tight family needs weight growing like b_n") as info:
        parts = []
        for y in (1, 2):
            inst = build_tight_instance(3, 4, yn=y)
            chk = verify_explicit_hyperflow(inst, F(1, 4))
            assert chk.ok, chk.violations[:3]
            cert = certify_lower_bound(inst)
            assert cert.ok
            assert cert.min_max_weight >= inst.b_n == 2**y
            parts.append(f"y={y}: n={inst.graph.n_vars}, min max weight {cert.min_max_weight} >= {inst.b_n}")
        info["detail"] = "; ".join(parts)


# --- 7 ------------------------------------------------------------------------------------


def repetition_chain(n=7) -> TannerGraph:
    return TannerGraph.from_parity_matrix([[int(j in (i, i + 1)) for j in range(n)] for i in range(n - 1)])


def test_criterion_7_excess_trade():
    with criterion(7, "excess witnesses at the promised rate") as info:
        rep = lp_excess_experiment(repetition_chain(), 0.05, 0.2, 2000, master_seed=8)
        info["detail"] = (
            f"observed {rep.observed_prob:.4f} vs bound {rep.bound:.4f} "
            f"(q_hat {rep.q_hat.error_rate:.4f}, SE {rep.stderr:.4f})"
        )
        assert not rep.vacuous
        assert rep.ok


# --- 8 ------------------------------------------------------------------------------------


def test_criterion_8_cover_to_derived_monotonicity():
    with criterion(8, "cover success implies derived success") as info:
        trials = gc_fail = sc_fail = sc_total = 0
        for L in (2, 3):
            for M in (2, 4):
                rep = gc_sc_monotonicity(CodeParams(3, 2, L, M), 0.06, 50, master_seed=10 * L + M)
                assert not rep.violations, rep.violations[:5]
                assert rep.aggregate_ok
                trials += rep.trials
                gc_fail += rep.cover_failures
                sc_fail += rep.derived_failures
                sc_total += rep.derived_decodes
        g, s = gc_fail / trials, sc_fail / sc_total
        var = g * (1 - g) / trials + s * (1 - s) / trials
        info["detail"] = f"{trials} covers, {sc_total} derived decodes, rate GC {g:.3f} SC {s:.3f}"
        assert trials >= 200 and gc_fail > 0 and sc_fail < sc_total
        assert s <= g + 3 * math.sqrt(var)


# --- 9 ------------------------------------------------------------------------------------


def test_criterion_9_parity_cone_rays():
    with criterion(9, "parity cone rays are the weight-two vectors") as info:
        for m in range(2, 8):
            rays = parity_cone_extreme_rays(m)
            assert rays == weight_two_indicators(m)
            assert len(rays) == m * (m - 1) // 2
        info["detail"] = "m = 2..7"


# --- 10 -----------------------------------------------------------------------------------


def test_criterion_10_finite_thresholds():
    with criterion(10, "finite-n GC and derived thresholds agree") as info:
        p = CodeParams(3, 2, 7, 4)
        gc, sc = Ensemble("GC", params=p), Ensemble("DerivedSC", params=p, cut=0)
        kw = dict(trials_per_point=60, tol=0.02, master_seed=1, certify=False)
        th_gc, th_sc = estimate_threshold(gc, **kw), estimate_threshold(sc, **kw)
        assert th_gc.label == th_sc.label == "finite-n estimate"
        cross = []
        for ens, th in ((gc, th_sc), (sc, th_gc)):
            rate, _ = estimate_error_rate(ExperimentConfig(ens, th.estimate, 60, 1, certify=False))
            lo, hi = rate.wilson_ci_95
            cross.append((rate.error_rate, lo, hi))
        info["detail"] = (
            f"n={(2 * p.L + 1) * p.M}: "
            f"GC {th_gc.estimate:.4f}, derived {th_sc.estimate:.4f}; cross rates "
            + ", ".join(f"{r:.2f} in [{lo:.2f}, {hi:.2f}]" for r, lo, hi in cross)
        )
        for _, lo, hi in cross:
            assert lo <= 0.5 <= hi
