"""Command line entry point: ``lpsc <group> <command> ...``.

Exit codes: 0 on success, 1 when a verification reports violations, 2 when an
exact invariant fails inside an experiment, 3 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import bounds, experiments, forest, graphs, tightness, witness
from .decoder import gamma_from_error, lp_decode
from .lp import format_rational, parse_rational

OK, VIOLATION, INVARIANT, BAD_INPUT = 0, 1, 2, 3


def emit(obj, out=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def read_bits(path) -> list[int]:
    """Error pattern from a JSON list or from 0/1 tokens separated by spaces or commas."""
    text = Path(path).read_text().strip()
    bits = json.loads(text) if text.startswith("[") else text.replace(",", " ").split()
    out = [int(b) for b in bits]
    if any(b not in (0, 1) for b in out):
        raise ValueError("error pattern must contain only 0 and 1")
    return out


def load_problem(args):
    g = graphs.load(args.code)
    eta = read_bits(args.error)
    if len(eta) != g.n_vars:
        raise ValueError(f"error pattern has {len(eta)} bits for {g.n_vars} variables")
    return g, gamma_from_error(eta)


def report(rep) -> int:
    emit({"ok": rep.ok, "violations": rep.violations})
    return OK if rep.ok else VIOLATION


def parse_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


# --- graph ------------------------------------------------------------------------------


def cmd_graph_build(args) -> int:
    if args.kind == "regular":
        d_v, d_c, n = parse_ints(args.params)
        g = graphs.build_regular(d_v, d_c, n, args.seed)
    else:
        p = graphs.CodeParams(*parse_ints(args.params))
        g = (graphs.build_spatially_coupled if args.kind == "sc" else graphs.build_graph_cover)(p, args.seed)
    return write_graph(g, args.out)


def write_graph(g, out) -> int:
    if out:
        graphs.save(g, out)
    else:
        print(graphs.dumps(g))
    return OK


def cmd_graph_derive(args) -> int:
    d = graphs.derive_sc_from_cover(graphs.load(args.cover), args.cut)
    if args.map_out:
        emit({"special_vars": list(d.special_vars), "survivor_map": list(d.survivor_map),
              "check_map": list(d.check_map)}, args.map_out)
    return write_graph(d.graph, args.out)


def cmd_graph_validate(args) -> int:
    return report(graphs.validate(graphs.load(args.code)))


# --- decode -----------------------------------------------------------------------------


def cmd_decode(args) -> int:
    g, gamma = load_problem(args)
    res = lp_decode(g, gamma)
    out = {"success": res.success, "value": format_rational(res.optimal_value)}
    if args.emit_witness_point:
        out["point"] = [format_rational(x) for x in res.witness_point]
    emit(out)
    return OK


# --- witness ----------------------------------------------------------------------------


def budgets(args, gamma):
    if getattr(args, "delta", None) is not None:
        return witness.excess_budgets(gamma, parse_rational(args.delta))
    return gamma


def cmd_witness_find(args) -> int:
    g, gamma = load_problem(args)
    cap = parse_rational(args.cap) if args.cap else None
    res = witness.find_dual_witness(g, budgets(args, gamma), edge_cap=cap, formulation=args.formulation)
    if res.weighting is None:
        emit({"margin": format_rational(res.margin), "edges": None})
        return VIOLATION
    emit(witness.weighting_to_dict(res.weighting, res.margin), args.out)
    return OK


def cmd_witness_verify(args) -> int:
    g, gamma = load_problem(args)
    w, _ = witness.load_weighting(args.witness)
    return report(witness.verify_dual_witness(g, budgets(args, gamma), w))


def cmd_witness_hyperflow(args) -> int:
    g, gamma = load_problem(args)
    w, _ = witness.load_weighting(args.witness)
    return report(witness.verify_hyperflow(g, gamma, w))


def cmd_witness_transform(args) -> int:
    g, gamma = load_problem(args)
    w, margin = witness.load_weighting(args.witness)
    h = witness.remove_cycles_and_normalize(witness.to_wdag(g, w, gamma), g)
    hw = h.to_weighting(g)
    rep = witness.verify_hyperflow(g, gamma, hw)
    emit(witness.weighting_to_dict(hw, margin), args.out)
    if not rep.ok:
        print("\n".join(rep.violations), file=sys.stderr)
    return OK if rep.ok else VIOLATION


# --- forest -----------------------------------------------------------------------------


def load_hyperflow(args):
    g, gamma = load_problem(args)
    w, _ = witness.load_weighting(args.witness)
    return g, gamma, w


def cmd_forest_expand(args) -> int:
    g, gamma, w = load_hyperflow(args)
    gm = forest.extract_gmax(witness.Wdag.from_weighting(g, w, gamma))
    if gm.sink is None:
        emit({"nodes": [], "arcs": [], "ok": True})
        return OK
    f = forest.expand_to_forest(gm, size_cap=args.cap)
    rep = forest.verify_forest_properties(gm, f, check_paths=not args.skip_paths)
    out = forest.forest_to_dict(f)
    out["ok"] = rep.ok
    out["failed_items"] = rep.failed_items()
    emit(out, args.out)
    return OK if rep.ok else VIOLATION


# --- bounds -----------------------------------------------------------------------------


def cmd_bounds_profile(args) -> int:
    g, gamma, w = load_hyperflow(args)
    gm = forest.extract_gmax(witness.Wdag.from_weighting(g, w, gamma))
    if gm.sink is None:
        emit({"counts": [], "alpha": "0/1"})
        return OK
    prof = bounds.depth_profile(gm)
    d_c = max(len(a) for a in g.check_adj)
    emit({"counts": list(prof.counts), "alpha": format_rational(gm.alpha),
          "weighted_sum": format_rational(prof.weighted_sum(d_c))})
    return OK


def cmd_bounds_reduce(args) -> int:
    g, gamma, w = load_hyperflow(args)
    gm = forest.extract_gmax(witness.Wdag.from_weighting(g, w, gamma))
    if gm.sink is None:
        emit({"counts": [], "removed": []})
        return OK
    gr = bounds.reduce_wdag(gm, g)
    prof = bounds.regular_check_depth_profile(gr)
    emit({"counts": list(prof.counts), "removed": [list(e) for e in sorted(gr.removed)],
          "check_degrees": sorted(set(gr.check_degree().values()))})
    return OK


def cmd_bounds_unified(args) -> int:
    r = bounds.unified_opt(args.lam, args.beta, args.dc, args.m)
    emit({"l": r.l, "T_prime": list(r.T_prime), "f_value": format_rational(r.f_value),
          "closed_form_bound": r.closed_form_bound})
    return OK


def cmd_bounds_check(args) -> int:
    g, gamma, w = load_hyperflow(args)
    rep = bounds.check_bound_on_instance(g, w, gamma)
    row = rep.row()
    if args.csv:
        new = not Path(args.csv).exists()
        with open(args.csv, "a", newline="") as fh:
            out = csv.DictWriter(fh, fieldnames=list(row))
            if new:
                out.writeheader()
            out.writerow(row)
    emit({**row, "ok": rep.ok, "violations": rep.violations,
          "profile_sum": format_rational(rep.profile_sum)})
    return OK if rep.ok else VIOLATION


# --- tight ------------------------------------------------------------------------------


def load_instance(args):
    if args.instance:
        return tightness.loads(Path(args.instance).read_text())
    return tightness.build_tight_instance(args.dv, args.dc, n=args.n, yn=args.yn)


def cmd_tight_build(args) -> int:
    inst = tightness.build_tight_instance(args.dv, args.dc, n=args.n, yn=args.yn)
    text = tightness.dumps(inst)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return OK


def cmd_tight_hyperflow(args) -> int:
    inst = load_instance(args)
    eps = parse_rational(args.eps)
    rep = tightness.verify_explicit_hyperflow(inst, eps)
    if args.out:
        witness.dump_weighting(tightness.explicit_hyperflow(inst, eps), args.out)
    emit({"ok": rep.ok, "witness_ok": rep.witness_ok, "hyperflow_ok": rep.hyperflow_ok,
          "max_weight": format_rational(rep.max_weight),
          "expected_max_weight": format_rational(rep.expected_max_weight),
          "violations": list(rep.violations[:20])})
    return OK if rep.ok else VIOLATION


def cmd_tight_certify(args) -> int:
    inst = load_instance(args)
    cert = tightness.certify_lower_bound(inst)
    emit(cert.to_dict())
    return OK if cert.ok else VIOLATION


# --- sim --------------------------------------------------------------------------------


def ensemble_from(args) -> experiments.Ensemble:
    if args.code:
        return experiments.Ensemble("Fixed", graph=graphs.load(args.code))
    nums = parse_ints(args.params)
    if args.ensemble == "regular":
        d_v, d_c, n = nums
        return experiments.Ensemble("Regular", d_v=d_v, d_c=d_c, n=n)
    kind = {"sc": "SC", "gc": "GC", "derived": "DerivedSC"}[args.ensemble]
    return experiments.Ensemble(kind, params=graphs.CodeParams(*nums), cut=args.cut)


def rate_dict(r: experiments.RateEstimate) -> dict:
    return {"error_rate": r.error_rate, "wilson_ci_95": list(r.wilson_ci_95),
            "trials": r.trials, "failures": r.failures}


def cmd_sim_rate(args) -> int:
    cfg = experiments.ExperimentConfig(ensemble_from(args), args.eps, args.trials, args.seed,
                                       certify=not args.no_certify)
    rate, records = experiments.estimate_error_rate(cfg, args.workers)
    if args.out:
        experiments.write_csv(records, args.out)
    emit({"ensemble": cfg.ensemble.describe(), "eps": args.eps, **rate_dict(rate)})
    return OK


def cmd_sim_threshold(args) -> int:
    th = experiments.estimate_threshold(
        ensemble_from(args), args.trials, args.target, args.tol, args.seed,
        certify=not args.no_certify, workers=args.workers,
    )
    emit({"estimate": th.estimate, "bracket": [th.lo, th.hi], "label": th.label,
          "target_rate": th.target_rate, "rate_lo": rate_dict(th.rate_lo), "rate_hi": rate_dict(th.rate_hi)})
    return OK


def cmd_sim_excess(args) -> int:
    code = graphs.load(args.code)
    rep = experiments.lp_excess_experiment(code, args.eps, args.delta, args.trials, args.seed)
    emit({"observed_prob": rep.observed_prob, "bound": rep.bound, "stderr": rep.stderr,
          "q_hat": rate_dict(rep.q_hat), "epsilon_prime": rep.epsilon_prime,
          "vacuous": rep.vacuous, "ok": rep.ok})
    return OK


def cmd_sim_mono(args) -> int:
    p = graphs.CodeParams(*parse_ints(args.params))
    rep = experiments.gc_sc_monotonicity(p, args.eps, args.trials, args.seed)
    if args.out:
        experiments.write_csv(rep.records, args.out)
    emit({"rate_gc": rep.rate_gc, "rate_sc": rep.rate_sc, "sigma": rep.sigma,
          "violations": [list(v) for v in rep.violations], "aggregate_ok": rep.aggregate_ok})
    return VIOLATION if rep.violations else OK


def cmd_sim_roundtrip(args) -> int:
    p = graphs.CodeParams(*parse_ints(args.params))
    rep = experiments.boost_roundtrip(p, args.cut, args.eps, args.trials, args.seed, boost=args.boost)
    emit({"trials": rep.trials, "decodable": rep.decodable, "verified": rep.verified,
          "nontrivial": rep.nontrivial, "cap_failures": rep.cap_failures,
          "failures": [list(f) for f in rep.failures], "ok": rep.ok})
    return OK if rep.ok else VIOLATION


# --- parser -----------------------------------------------------------------------------


def add_problem(p, witness_file=False):
    p.add_argument("--code", required=True, help="graph JSON")
    p.add_argument("--error", required=True, help="error bits, JSON list or 0/1 tokens")
    if witness_file:
        p.add_argument("--witness", required=True, help="witness JSON")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpsc", description="LP decoding, dual witnesses and hyperflow bounds.")
    top = ap.add_subparsers(dest="group", required=True)

    gp = top.add_parser("graph", help="build, derive and validate Tanner graphs").add_subparsers(dest="cmd", required=True)
    p = gp.add_parser("build")
    p.add_argument("kind", choices=["regular", "sc", "gc"])
    p.add_argument("--params", required=True, help="d_v,d_c,n for regular; d_v,k,L,M otherwise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_graph_build)
    p = gp.add_parser("derive")
    p.add_argument("--cover", required=True)
    p.add_argument("--cut", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--map-out")
    p.set_defaults(fn=cmd_graph_derive)
    p = gp.add_parser("validate")
    p.add_argument("code")
    p.set_defaults(fn=cmd_graph_validate)

    p = top.add_parser("decode", help="LP decode one received word")
    add_problem(p)
    p.add_argument("--emit-witness-point", action="store_true")
    p.set_defaults(fn=cmd_decode)

    wp = top.add_parser("witness", help="dual witnesses and hyperflows").add_subparsers(dest="cmd", required=True)
    p = wp.add_parser("find")
    add_problem(p)
    p.add_argument("--delta", help="ask for uniform excess delta/2")
    p.add_argument("--cap", help="bound on every |w(e)|")
    p.add_argument("--formulation", choices=["cone", "cone-full", "pairwise"], default="cone")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_witness_find)
    p = wp.add_parser("verify")
    add_problem(p, True)
    p.add_argument("--delta")
    p.set_defaults(fn=cmd_witness_verify)
    p = wp.add_parser("hyperflow")
    add_problem(p, True)
    p.set_defaults(fn=cmd_witness_hyperflow)
    p = wp.add_parser("transform", help="cancel cycles and normalize checks")
    add_problem(p, True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_witness_transform)

    fp = top.add_parser("forest", help="expand G_max into a weighted forest").add_subparsers(dest="cmd", required=True)
    p = fp.add_parser("expand")
    add_problem(p, True)
    p.add_argument("--cap", type=int, default=100_000)
    p.add_argument("--skip-paths", action="store_true", help="skip the path-count comparison")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_forest_expand)

    bp = top.add_parser("bounds", help="depth profiles and edge-weight bounds").add_subparsers(dest="cmd", required=True)
    for name, fn in (("profile", cmd_bounds_profile), ("reduce", cmd_bounds_reduce)):
        p = bp.add_parser(name)
        add_problem(p, True)
        p.set_defaults(fn=fn)
    p = bp.add_parser("unified")
    p.add_argument("--lam", type=int, required=True)
    p.add_argument("--beta", type=int, required=True)
    p.add_argument("--dc", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(fn=cmd_bounds_unified)
    p = bp.add_parser("check")
    add_problem(p, True)
    p.add_argument("--csv", help="append the (n, alpha_max, bound, ratio) row here")
    p.set_defaults(fn=cmd_bounds_check)

    tp = top.add_parser("tight", help="the tightness family").add_subparsers(dest="cmd", required=True)

    def shape(p, instance=True):
        p.add_argument("--dv", type=int, default=3)
        p.add_argument("--dc", type=int, default=4)
        g = p.add_mutually_exclusive_group()
        g.add_argument("--yn", type=int)
        g.add_argument("--n", type=int)
        if instance:
            g.add_argument("--instance", help="instance JSON from 'tight build'")

    p = tp.add_parser("build")
    shape(p, instance=False)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_tight_build)
    p = tp.add_parser("hyperflow")
    shape(p)
    p.add_argument("--eps", default="1/4")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_tight_hyperflow)
    p = tp.add_parser("certify")
    shape(p)
    p.set_defaults(fn=cmd_tight_certify)

    sp = top.add_parser("sim", help="BSC Monte Carlo experiments").add_subparsers(dest="cmd", required=True)

    def common(p, ensemble=True):
        if ensemble:
            p.add_argument("--ensemble", choices=["regular", "sc", "gc", "derived"], default="regular")
            p.add_argument("--code", help="fixed graph JSON instead of an ensemble")
        p.add_argument("--params", default="3,6,30", help="d_v,d_c,n for regular; d_v,k,L,M otherwise")
        p.add_argument("--cut", type=int, default=0)
        p.add_argument("--eps", type=float, default=0.05)
        p.add_argument("--trials", type=int, default=100)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--no-certify", action="store_true", help="skip the witness LP on each trial")
        p.add_argument("--out", help="per-trial CSV")

    p = sp.add_parser("rate")
    common(p)
    p.set_defaults(fn=cmd_sim_rate)
    p = sp.add_parser("threshold")
    common(p)
    p.add_argument("--target", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=0.01)
    p.set_defaults(fn=cmd_sim_threshold)
    p = sp.add_parser("excess")
    common(p, ensemble=False)
    p.add_argument("--code", required=True)
    p.add_argument("--delta", type=float, default=0.2)
    p.set_defaults(fn=cmd_sim_excess)
    p = sp.add_parser("mono")
    common(p, ensemble=False)
    p.set_defaults(fn=cmd_sim_mono, params="3,2,2,2")
    p = sp.add_parser("roundtrip")
    common(p, ensemble=False)
    p.add_argument("--boost", help="override D")
    p.set_defaults(fn=cmd_sim_roundtrip, params="3,2,2,2")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except experiments.InvariantError as err:
        print(f"invariant failed: {err}", file=sys.stderr)
        return INVARIANT
    except (ValueError, TypeError, KeyError, OSError) as err:
        # GraphError, WitnessError, DecoderError, BoundError, ... are ValueErrors
        print(f"error: {err}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
