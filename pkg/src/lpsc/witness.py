"""Dual witnesses, hyperflows and weighted directed acyclic graphs.

An edge weighting ``w`` maps each edge ``(v, c)`` of a Tanner graph to a
rational.  It is a dual witness for budgets ``b`` when

* every variable satisfies ``sum_c w(v, c) < b(v)``, and
* for each check, ``w(v, c) + w(v', c) >= 0`` for every pair ``v != v'``.

A hyperflow additionally has, at each check, either all weights zero or one
weight ``-P`` with all others ``+P``.
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .graphs import DerivedCode, TannerGraph
from .lp import LpBuilder, Rel, Sense, Status, as_fraction, format_rational, solve

Edge = tuple[int, int]
Weighting = dict[Edge, Fraction]

VAR, CHECK = 0, 1
Node = tuple[int, int]  # (VAR, v) or (CHECK, c)


class WitnessError(ValueError):
    pass


@dataclass(frozen=True)
class WitnessSearchResult:
    """Result of the witness LP.

    ``margin`` is the optimal common slack ``t``.  ``weighting`` is present iff
    the margin is positive.  ``unbounded`` records that the LP had no finite
    optimum (possible only through checks of degree one); the margin is then
    computed with ``t`` capped at 1.
    """

    margin: Fraction
    weighting: Weighting | None
    unbounded: bool = False


@dataclass
class Report:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def as_weighting(w: Mapping) -> Weighting:
    return {(int(v), int(c)): as_fraction(x) for (v, c), x in w.items()}


def budgets_from_gamma(gamma: Sequence) -> list[Fraction]:
    return [as_fraction(g) for g in gamma]


def excess_budgets(gamma: Sequence, delta) -> list[Fraction]:
    """Budgets ``gamma - delta/2`` used for the LP-excess guarantee."""
    d = as_fraction(delta) / 2
    return [as_fraction(g) - d for g in gamma]


def boosted_budgets(gamma: Sequence, special: Iterable[int], boost) -> list[Fraction]:
    b = [as_fraction(g) for g in gamma]
    for v in special:
        b[v] += as_fraction(boost)
    return b


def find_dual_witness(
    graph: TannerGraph, budgets: Sequence, edge_cap=None, formulation: str = "cone"
) -> WitnessSearchResult:
    """Maximize the common slack ``t`` of a dual witness for ``budgets``.

    ``formulation="pairwise"`` solves the defining LP directly, with one free
    variable per edge plus ``t``::

        max t   s.t.  sum_c w(v, c) + t <= b(v)           for each variable v
                      w(v, c) + w(v', c) >= 0             for v != v' at a check
                      -cap <= w <= cap                     when edge_cap is set

    The default ``"cone"`` formulation parametrizes the weights at a check as
    ``w(v, c) = M_c - 2 mu(c, v)`` with ``mu >= 0`` and ``M_c = sum_u mu(c, u)``.
    Every check vector satisfying the pairwise condition is such a vector plus
    a nonnegative part, and dropping that part only loosens the budget rows,
    so both LPs have the same optimum; the cone LP has one row per variable
    and is much faster.  The cap becomes ``M_c <= cap``, which again loses
    nothing because ``M_c`` equals the largest ``|w|`` after the drop.

    ``"cone"`` prices the cone columns in on demand and is the fastest;
    ``"cone-full"`` solves the cone LP with every column present.
    """
    budgets = [as_fraction(b) for b in budgets]
    if len(budgets) != graph.n_vars:
        raise WitnessError("budget vector has the wrong length")
    solvers = {"cone": _generated_cone_lp, "cone-full": _cone_lp, "pairwise": _pairwise_lp}
    if formulation not in solvers:
        raise WitnessError(f"unknown formulation {formulation!r}")
    solver = solvers[formulation]
    out, decode = solver(graph, budgets, edge_cap, None)
    unbounded = False
    if out.status is Status.UNBOUNDED:
        unbounded = True
        out, decode = solver(graph, budgets, edge_cap, 1)
    assert out.status is Status.OPTIMAL, out.status
    t = out.point[-1]
    if t <= 0:
        return WitnessSearchResult(t, None, unbounded)
    return WitnessSearchResult(t, decode(out.point), unbounded)


def _pairwise_lp(graph, budgets, edge_cap, t_cap):
    index = {e: i for i, e in enumerate(graph.edges)}
    b = LpBuilder()
    cap = None if edge_cap is None else as_fraction(edge_cap)
    for _ in index:
        b.add_var(None if cap is None else -cap, cap)
    t = b.add_var(None, t_cap)
    for v, cs in enumerate(graph.var_adj):
        coeffs = {index[(v, c)]: 1 for c in cs}
        coeffs[t] = 1
        b.add(coeffs, Rel.LE, budgets[v])
    for c, vs in enumerate(graph.check_adj):
        for v1, v2 in combinations(vs, 2):
            b.add({index[(v1, c)]: 1, index[(v2, c)]: 1}, Rel.GE, 0)
    b.objective({t: 1}, Sense.MAX)
    return solve(b.build()), lambda x: {e: x[i] for e, i in index.items()}


def cone_rows(graph: TannerGraph, index: Mapping[Edge, int]) -> list[dict[int, int]]:
    """Per-variable row ``sum_c w(v, c)`` in terms of the ``mu`` columns."""
    rows = []
    for v, cs in enumerate(graph.var_adj):
        coeffs: dict[int, int] = {}
        for c in cs:
            for u in graph.check_adj[c]:
                j = index.get((u, c))
                if j is not None:
                    coeffs[j] = coeffs.get(j, 0) + (-1 if u == v else 1)
        rows.append(coeffs)
    return rows


def cone_weighting(graph: TannerGraph, index: Mapping[Edge, int], x: Sequence) -> Weighting:
    w = {}
    for c, vs in enumerate(graph.check_adj):
        total = sum((x[index[(v, c)]] for v in vs), Fraction(0))
        for v in vs:
            w[(v, c)] = total - 2 * x[index[(v, c)]]
    return {e: w[e] for e in graph.edges}


def _cone_lp(graph, budgets, edge_cap, t_cap, active=None, margin=None):
    """Cone LP over the columns ``active`` (all edges when None).

    Columns come first in the point and the scalar (``t``, or ``alpha`` when
    ``margin`` is fixed) last.  With ``margin`` the LP minimizes a common
    bound ``alpha`` on every ``M_c`` subject to slack ``margin`` everywhere.
    """
    edges = graph.edges if active is None else sorted(active)
    index = {e: i for i, e in enumerate(edges)}
    b = LpBuilder()
    for _ in index:
        b.add_var(0, None)
    t = b.add_var(None, t_cap) if margin is None else b.add_var(0, None)
    for v, coeffs in enumerate(cone_rows(graph, index)):
        coeffs = dict(coeffs)
        if margin is None:
            coeffs[t] = 1
            b.add(coeffs, Rel.LE, budgets[v])
        else:
            b.add(coeffs, Rel.LE, budgets[v] - margin)
    if margin is not None:
        for c, vs in enumerate(graph.check_adj):
            row = {index[(v, c)]: 1 for v in vs if (v, c) in index}
            row[t] = -1
            b.add(row, Rel.LE, 0)
        b.objective({t: -1}, Sense.MAX)
    else:
        if edge_cap is not None:
            for c, vs in enumerate(graph.check_adj):
                b.add({index[(v, c)]: 1 for v in vs if (v, c) in index}, Rel.LE, edge_cap)
        b.objective({t: 1}, Sense.MAX)
    return solve(b.build()), lambda x: cone_weighting(graph, index, x)


def _column_generation(graph, budgets, edge_cap, t_cap, active=None, margin=None):
    """Cone LP by column generation; returns ``(outcome, decode, active)``.

    The restricted LP starts from the columns ``active`` (none by default).  A
    column ``mu(u, c)`` improves the restricted optimum when its reduced cost
    ``y_u - sum_{v in N(c), v != u} y_v - z_c`` is positive, where ``y`` and
    ``z`` are the shadow prices of the variable rows and cap rows.  When no
    column prices out positively the restricted optimum is optimal for the
    full cone LP.
    """
    active = set(active or ())
    capped = edge_cap is not None or margin is not None
    while True:
        out, _ = _cone_lp(graph, budgets, edge_cap, t_cap, active, margin)
        index = {e: i for i, e in enumerate(sorted(active))}
        decode = lambda x, index=index: cone_weighting_sparse(graph, index, x)
        if out.status is not Status.OPTIMAL:
            return out, decode, active
        y = out.duals[: graph.n_vars]
        z = out.duals[graph.n_vars:] if capped else None
        fresh = []
        for c, vs in enumerate(graph.check_adj):
            total = sum((y[v] for v in vs), Fraction(0))
            for u in vs:
                if (u, c) in active:
                    continue
                reduced = 2 * y[u] - total - (z[c] if z is not None else 0)
                if reduced > 0:
                    fresh.append((u, c))
        if not fresh:
            return out, decode, active
        active.update(fresh)


def _generated_cone_lp(graph, budgets, edge_cap, t_cap):
    out, decode, _ = _column_generation(graph, budgets, edge_cap, t_cap)
    return out, decode


def minimize_max_weight(graph: TannerGraph, budgets: Sequence, margin=None) -> tuple[Fraction, Weighting, Fraction]:
    """Least ``max |w(e)|`` over dual witnesses with slack at least ``margin``.

    The default margin is half the best achievable slack ``t*``: any positive
    margin certifies existence, and halving keeps the feasible region full
    dimensional.  Returns ``(alpha, weighting, margin)``.  The search starts
    from the columns of the slack-maximizing solve, which are feasible.
    """
    budgets = [as_fraction(b) for b in budgets]
    out, _, active = _column_generation(graph, budgets, None, None)
    if out.status is Status.UNBOUNDED:
        out, _, active = _column_generation(graph, budgets, None, 1)
    t_star = out.point[-1]
    if t_star <= 0:
        raise WitnessError("no dual witness exists for these budgets")
    margin = t_star / 2 if margin is None else as_fraction(margin)
    if margin <= 0 or margin > t_star:
        raise WitnessError(f"margin {margin} outside (0, {t_star}]")
    out, decode, _ = _column_generation(graph, budgets, None, None, active, margin)
    assert out.status is Status.OPTIMAL, out.status
    return out.point[-1], decode(out.point), margin


def cone_weighting_sparse(graph: TannerGraph, index: Mapping[Edge, int], x: Sequence) -> Weighting:
    """Weights from cone coordinates where absent columns are zero."""
    w = {}
    for c, vs in enumerate(graph.check_adj):
        mus = [x[index[(v, c)]] if (v, c) in index else Fraction(0) for v in vs]
        total = sum(mus, Fraction(0))
        for v, mu in zip(vs, mus):
            w[(v, c)] = total - 2 * mu
    return {e: w[e] for e in graph.edges}


def _domain_check(graph: TannerGraph, w: Mapping, rep: Report) -> bool:
    if set(w) != set(graph.edges):
        missing = set(graph.edges) - set(w)
        extra = set(w) - set(graph.edges)
        rep.violations.append(f"domain mismatch: missing {sorted(missing)[:5]}, extra {sorted(extra)[:5]}")
        return False
    return True


def _var_sums(graph: TannerGraph, w: Mapping) -> list[Fraction]:
    sums = [Fraction(0)] * graph.n_vars
    for (v, c), x in w.items():
        sums[v] += x
    return sums


def check_budget_slack(graph: TannerGraph, budgets: Sequence, w: Mapping, rep: Report) -> None:
    """Strict per-variable inequality ``sum_c w(v, c) < b(v)``."""
    for v, s in enumerate(_var_sums(graph, w)):
        if not s < budgets[v]:
            rep.violations.append(f"variable {v}: weight sum {s} is not below budget {budgets[v]}")


def verify_dual_witness(graph: TannerGraph, budgets: Sequence, w: Mapping) -> Report:
    rep = Report()
    budgets = [as_fraction(b) for b in budgets]
    if not _domain_check(graph, w, rep):
        return rep
    check_budget_slack(graph, budgets, w, rep)
    for c, vs in enumerate(graph.check_adj):
        vals = sorted(w[(v, c)] for v in vs)
        if len(vals) >= 2 and vals[0] + vals[1] < 0:
            rep.violations.append(f"check {c}: two weights sum to {vals[0] + vals[1]} < 0")
    return rep


def check_pattern(weights: Sequence[Fraction]) -> str | None:
    """Describe why ``weights`` at one check are not of hyperflow form, or None."""
    if all(x == 0 for x in weights):
        return None
    neg = [x for x in weights if x < 0]
    pos = [x for x in weights if x > 0]
    if len(neg) != 1:
        return f"expected exactly one negative weight, got {len(neg)}"
    P = -neg[0]
    if len(pos) != len(weights) - 1 or any(x != P for x in pos):
        return f"positive weights {pos} differ from {P}"
    return None


def verify_hyperflow(graph: TannerGraph, budgets: Sequence, w: Mapping) -> Report:
    rep = Report()
    budgets = [as_fraction(b) for b in budgets]
    if not _domain_check(graph, w, rep):
        return rep
    check_budget_slack(graph, budgets, w, rep)
    for c, vs in enumerate(graph.check_adj):
        why = check_pattern([w[(v, c)] for v in vs])
        if why:
            rep.violations.append(f"check {c}: {why}")
    return rep


# --- weighted DAGs -----------------------------------------------------------


@dataclass
class Wdag:
    """Signed edge weights viewed as a directed graph.

    Only nonzero weights are stored.  ``w > 0`` is the arc ``v -> c`` and
    ``w < 0`` the arc ``c -> v``, each carrying weight ``|w|``.  ``gamma`` are
    the variable budgets.
    """

    n_vars: int
    n_checks: int
    weights: dict[Edge, Fraction]
    gamma: list[Fraction]

    @classmethod
    def from_weighting(cls, graph: TannerGraph, w: Mapping, gamma: Sequence) -> "Wdag":
        return cls(
            graph.n_vars,
            graph.n_checks,
            {e: as_fraction(x) for e, x in w.items() if x != 0},
            [as_fraction(g) for g in gamma],
        )

    def arcs(self) -> list[tuple[Node, Node, Fraction]]:
        out = []
        for (v, c), x in sorted(self.weights.items()):
            if x > 0:
                out.append(((VAR, v), (CHECK, c), x))
            else:
                out.append(((CHECK, c), (VAR, v), -x))
        return out

    def successors(self) -> dict[Node, list[tuple[Node, Fraction]]]:
        succ: dict[Node, list] = defaultdict(list)
        for a, b, x in self.arcs():
            succ[a].append((b, x))
        for lst in succ.values():
            lst.sort()
        return succ

    def predecessors(self) -> dict[Node, list[tuple[Node, Fraction]]]:
        pred: dict[Node, list] = defaultdict(list)
        for a, b, x in self.arcs():
            pred[b].append((a, x))
        for lst in pred.values():
            lst.sort()
        return pred

    def nodes(self) -> list[Node]:
        seen = set()
        for a, b, _ in self.arcs():
            seen.add(a)
            seen.add(b)
        return sorted(seen)

    def to_weighting(self, graph: TannerGraph) -> Weighting:
        return {e: self.weights.get(e, Fraction(0)) for e in graph.edges}

    def copy(self) -> "Wdag":
        return Wdag(self.n_vars, self.n_checks, dict(self.weights), list(self.gamma))


def to_wdag(graph: TannerGraph, w: Mapping, gamma: Sequence) -> Wdag:
    return Wdag.from_weighting(graph, w, gamma)


def find_cycle(wdag: Wdag) -> list[Node] | None:
    """First directed cycle found by a DFS visiting nodes and arcs in id order."""
    succ = wdag.successors()
    color: dict[Node, int] = {}
    for root in wdag.nodes():
        if color.get(root):
            continue
        color[root] = 1
        stack = [(root, iter(succ.get(root, ())))]
        path = [root]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                path.pop()
                continue
            child = nxt[0]
            state = color.get(child, 0)
            if state == 1:
                return path[path.index(child):]
            if state == 0:
                color[child] = 1
                stack.append((child, iter(succ.get(child, ()))))
                path.append(child)
    return None


def _edge_of(a: Node, b: Node) -> Edge:
    return (a[1], b[1]) if a[0] == VAR else (b[1], a[1])


def _graph_view(wdag: Wdag, graph: TannerGraph | None):
    if graph is not None:
        return graph
    edges = list(wdag.weights)
    return TannerGraph.from_edges(wdag.n_vars, wdag.n_checks, edges)


@dataclass
class CycleStep:
    cycle: list[Node]
    amount: Fraction
    still_witness: bool


def remove_cycles_and_normalize(
    wdag: Wdag,
    graph: TannerGraph | None = None,
    trace: list | None = None,
    instrumented: bool = False,
) -> Wdag:
    """Turn a dual witness into an acyclic hyperflow.

    While a directed cycle exists, the smallest arc weight on it is
    subtracted along the cycle (arcs reaching zero disappear).  Then each
    check is normalized: with no outgoing arc its weights are zeroed,
    otherwise the outgoing arc keeps ``-P`` and every incoming one becomes
    ``+P``.

    With ``instrumented`` the dual-witness property is re-verified after every
    iteration; ``trace`` (when given) collects one :class:`CycleStep` per
    iteration.
    """
    g = _graph_view(wdag, graph)
    budgets = wdag.gamma
    full = {e: wdag.weights.get(e, Fraction(0)) for e in g.edges}
    rep = verify_dual_witness(g, budgets, full)
    if any("two weights" in v for v in rep.violations):
        raise WitnessError("input violates the pairwise check condition: " + rep.violations[0])
    cur = wdag.copy()
    while True:
        cyc = find_cycle(cur)
        if cyc is None:
            break
        ring = list(zip(cyc, cyc[1:] + cyc[:1]))
        amount = min(abs(cur.weights[_edge_of(a, b)]) for a, b in ring)
        for a, b in ring:
            e = _edge_of(a, b)
            x = cur.weights[e]
            x = x - amount if x > 0 else x + amount
            if x == 0:
                del cur.weights[e]
            else:
                cur.weights[e] = x
        ok = True
        if instrumented or trace is not None:
            ok = verify_dual_witness(g, budgets, cur.to_weighting(g)).ok
            if instrumented and not ok:
                raise AssertionError("cycle removal broke the dual-witness property")
        if trace is not None:
            trace.append(CycleStep(cyc, amount, ok))
    for c in range(g.n_checks):
        vs = g.check_adj[c]
        xs = [cur.weights.get((v, c), Fraction(0)) for v in vs]
        neg = [(v, x) for v, x in zip(vs, xs) if x < 0]
        if not neg:
            for v in vs:
                cur.weights.pop((v, c), None)
            continue
        assert len(neg) == 1, "acyclic witness with two outgoing arcs at a check"
        v0, x0 = neg[0]
        for v in vs:
            if v != v0:
                cur.weights[(v, c)] = -x0
    return cur


def is_acyclic(wdag: Wdag) -> bool:
    return find_cycle(wdag) is None


def average_witnesses(weightings: Sequence[Mapping], coefficients: Sequence) -> Weighting:
    """Convex combination of dual witnesses on a common edge set."""
    if len(weightings) != len(coefficients) or not weightings:
        raise WitnessError("need one coefficient per weighting")
    coefficients = [as_fraction(a) for a in coefficients]
    if any(a < 0 for a in coefficients) or sum(coefficients) != 1:
        raise WitnessError("coefficients must be nonnegative and sum to 1")
    domain = set(weightings[0])
    if any(set(w) != domain for w in weightings):
        raise WitnessError("weightings have different domains")
    return {e: sum((a * as_fraction(w[e]) for a, w in zip(coefficients, weightings)), Fraction(0)) for e in sorted(domain)}


def restrict_witness(cover: TannerGraph, w: Mapping, special_vars: Iterable[int], derived: DerivedCode | None = None) -> Weighting:
    """Drop the edges at ``special_vars``; relabel to ``derived`` ids when given."""
    special = set(special_vars)
    remaining = defaultdict(int)
    for v, c in cover.edges:
        if v not in special:
            remaining[c] += 1
    for c in range(cover.n_checks):
        if 0 < remaining[c] < 2:
            raise WitnessError(f"check {c} would keep degree {remaining[c]} < 2")
    kept = {(v, c): as_fraction(x) for (v, c), x in w.items() if v not in special}
    if derived is None:
        return kept
    var_new = {old: new for new, old in enumerate(derived.survivor_map)}
    check_new = {old: new for new, old in enumerate(derived.check_map)}
    return {(var_new[v], check_new[c]): x for (v, c), x in kept.items()}


def extend_witness_with_boost(
    derived_w: Mapping, cover: TannerGraph, derived: DerivedCode, boost, strict: bool = True
) -> Weighting:
    """Lift a witness of ``derived`` to ``cover`` by adding the removed variables back.

    Each new edge ``(v, c)`` at a special variable gets the largest absolute
    weight among the other edges of ``c``, which keeps the pairwise condition
    at ``c``.  The result is a witness for budgets ``gamma + boost`` on the
    special variables provided ``boost >= d_v * alpha + 1`` with ``alpha`` the
    largest absolute weight of ``derived_w``.  ``strict`` rejects smaller
    boosts up front.
    """
    boost = as_fraction(boost)
    alpha = max((abs(as_fraction(x)) for x in derived_w.values()), default=Fraction(0))
    d_v = max((len(cs) for cs in cover.var_adj), default=0)
    if strict and boost < d_v * alpha + 1:
        raise WitnessError(f"boost {boost} is below d_v*alpha+1 = {d_v * alpha + 1}")
    lifted: Weighting = {}
    for (v, c), x in derived_w.items():
        lifted[(derived.survivor_map[v], derived.check_map[c])] = as_fraction(x)
    special = derived.special_vars
    for c, vs in enumerate(cover.check_adj):
        others = [abs(lifted[(v, c)]) for v in vs if v not in special]
        fill = max(others, default=Fraction(0))
        for v in vs:
            if v in special:
                lifted[(v, c)] = fill
    return {e: lifted[e] for e in cover.edges}


# --- serialization --------------------------------------------------------------


def weighting_to_dict(w: Mapping, margin=None) -> dict:
    d = {"edges": [[v, c, format_rational(x)] for (v, c), x in sorted(w.items())]}
    if margin is not None:
        d["margin"] = format_rational(margin)
    return d


def weighting_from_dict(d: dict) -> tuple[Weighting, Fraction | None]:
    w = {(int(v), int(c)): Fraction(x) for v, c, x in d["edges"]}
    margin = Fraction(d["margin"]) if d.get("margin") is not None else None
    return w, margin


def dump_weighting(w: Mapping, path, margin=None) -> None:
    with open(path, "w") as fh:
        json.dump(weighting_to_dict(w, margin), fh, sort_keys=True)


def load_weighting(path) -> tuple[Weighting, Fraction | None]:
    with open(path) as fh:
        return weighting_from_dict(json.load(fh))
