"""A regular code family whose hyperflows need weights of order n^gamma.

The graph is a tree ``T_n`` completed into a (d_v, d_c)-regular code:

* an A block ``A_x`` is a complete tree of depth ``x`` under a variable root
  with ``d_v - 1`` children; its ``beta^x`` leaves carry budget +1;
* the B block ``B_y`` has ``y + 1`` layers of degree-2 checks; all its
  variables carry budget -1 and its ``(d_v - 1)^y`` leaves must be fed;
* a root check ``c_0`` joins ``d_c - 1`` copies of ``A_{y+1}`` to ``B_y`` and
  each layer-i check of ``B_y`` is padded with ``d_c - 2`` copies of ``A_i``.

Every flow into the B leaves has to pass through the single edge from
``c_0`` to the B root, so any hyperflow has an edge of weight above
``b_n = (d_v - 1)^y``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

from .graphs import Kind, RegularParams, TannerGraph, graph_from_dict, graph_to_dict, validate
from .lp import as_fraction, format_rational
from .witness import (
    Weighting,
    Wdag,
    minimize_max_weight,
    remove_cycles_and_normalize,
    verify_dual_witness,
    verify_hyperflow,
)


class TightnessError(ValueError):
    pass


class Role(NamedTuple):
    """Origin of a node.

    ``kind`` is one of ``"ABlock"``, ``"BBlock"``, ``"Root"``, ``"Connecting"``.
    For A-block nodes ``param`` is the block parameter ``x`` and ``depth`` the
    number of checks between the node and the block root (a check counts
    itself).  For B-block nodes ``param`` is the layer.
    """

    kind: str
    param: int | None = None
    depth: int | None = None
    copy: int = 0


@dataclass
class Fragment:
    """A tree with local ids; variable 0 is the root.

    ``parent_check[v]`` / ``parent_var[c]`` point toward the root (``-1`` at
    the root variable).
    """

    n_vars: int = 0
    n_checks: int = 0
    edges: list[tuple[int, int]] = field(default_factory=list)
    var_roles: list[Role] = field(default_factory=list)
    check_roles: list[Role] = field(default_factory=list)
    parent_check: list[int] = field(default_factory=list)
    parent_var: list[int] = field(default_factory=list)

    def add_var(self, role: Role, parent: int) -> int:
        self.var_roles.append(role)
        self.parent_check.append(parent)
        if parent >= 0:
            self.edges.append((self.n_vars, parent))
        self.n_vars += 1
        return self.n_vars - 1

    def add_check(self, role: Role, parent: int) -> int:
        self.check_roles.append(role)
        self.parent_var.append(parent)
        self.edges.append((parent, self.n_checks))
        self.n_checks += 1
        return self.n_checks - 1

    def degrees(self) -> tuple[list[int], list[int]]:
        dv, dc = [0] * self.n_vars, [0] * self.n_checks
        for v, c in self.edges:
            dv[v] += 1
            dc[c] += 1
        return dv, dc

    def leaves(self) -> list[int]:
        dv, _ = self.degrees()
        return [v for v in range(self.n_vars) if dv[v] <= 1 and (v != 0 or self.n_vars == 1)]

    def graft(self, other: "Fragment", attach_check: int | None) -> int:
        """Copy ``other`` in, hanging its root below ``attach_check``; returns the new root id."""
        vo, co = self.n_vars, self.n_checks
        for v in range(other.n_vars):
            p = other.parent_check[v]
            self.var_roles.append(other.var_roles[v])
            self.parent_check.append(p + co if p >= 0 else (-1 if attach_check is None else attach_check))
        for c in range(other.n_checks):
            self.check_roles.append(other.check_roles[c])
            self.parent_var.append(other.parent_var[c] + vo)
        self.edges.extend((v + vo, c + co) for v, c in other.edges)
        if attach_check is not None:
            self.edges.append((vo, attach_check))
        self.n_vars += other.n_vars
        self.n_checks += other.n_checks
        return vo


def build_a_block(d_v: int, d_c: int, x: int) -> Fragment:
    """Complete tree of depth ``x`` (in checks) with ``beta^x`` leaves."""
    if x < 0:
        raise TightnessError("x must be nonnegative")
    f = Fragment()
    frontier = [f.add_var(Role("ABlock", x, 0), -1)]
    for depth in range(1, x + 1):
        nxt = []
        for v in frontier:
            for _ in range(d_v - 1):
                c = f.add_check(Role("ABlock", x, depth), v)
                nxt.extend(f.add_var(Role("ABlock", x, depth), c) for _ in range(d_c - 1))
        frontier = nxt
    return f


def build_b_block(d_v: int, y: int) -> Fragment:
    """Layered tree with degree-2 checks and ``(d_v - 1)^y`` leaves."""
    if y < 0:
        raise TightnessError("y must be nonnegative")
    f = Fragment()
    frontier = [f.add_var(Role("BBlock", y), -1)]
    for layer in range(y, 0, -1):
        nxt = []
        for v in frontier:
            for _ in range(d_v - 1):
                c = f.add_check(Role("BBlock", layer), v)
                nxt.append(f.add_var(Role("BBlock", layer - 1), c))
        frontier = nxt
    return f


def y_for_n(d_v: int, d_c: int, n: int) -> int:
    """``floor(log_{d_v-1} n^gamma)``, computed in integers.

    ``(d_v-1)^y <= n^gamma`` is equivalent to ``beta^y <= n`` because
    ``gamma = ln(d_v-1) / ln(beta)``.
    """
    beta = (d_v - 1) * (d_c - 1)
    y = 0
    while beta ** (y + 1) <= n:
        y += 1
    return y


def build_tree(d_v: int, d_c: int, y: int) -> tuple[Fragment, int, int]:
    """The tree ``T_n``; returns ``(tree, id of the B root, b_n)``.

    Check 0 of the tree is ``c_0`` and has no parent variable.
    """
    t = Fragment()
    t.check_roles.append(Role("Root"))
    t.parent_var.append(-1)
    t.n_checks = 1
    a_top = build_a_block(d_v, d_c, y + 1)
    for _ in range(d_c - 1):
        t.graft(a_top, 0)
    b = build_b_block(d_v, y)
    b_root = t.graft(b, 0)
    a_cache = {}
    for c in range(t.n_checks):
        role = t.check_roles[c]
        if role.kind == "BBlock":
            i = role.param
            a_i = a_cache.setdefault(i, build_a_block(d_v, d_c, i))
            for _ in range(d_c - 2):
                t.graft(a_i, c)
    return t, b_root, (d_v - 1) ** y


@dataclass(frozen=True)
class TightInstance:
    graph: TannerGraph
    gamma_n: tuple[int, ...]
    var_roles: tuple[Role, ...]
    check_roles: tuple[Role, ...]
    parent_check: tuple[int, ...]  # -1 for connecting variables
    parent_var: tuple[int, ...]  # -1 for root and connecting checks
    y_n: int
    b_n: int
    l_n: int
    copies: int
    d_v: int
    d_c: int

    def b_root_edges(self) -> list[tuple[int, int]]:
        """Edges from each root check to its B root."""
        return [
            (v, self.parent_check[v])
            for v, r in enumerate(self.var_roles)
            if r.kind == "BBlock" and r.param == self.y_n and self.parent_check[v] >= 0
            and self.check_roles[self.parent_check[v]].kind == "Root"
        ]


def _complete(d_v: int, d_c: int, b_leaves: list[int], a_leaves: list[int]) -> list[list[int]]:
    """Group leaf sockets into checks of ``d_c`` distinct leaves.

    Each leaf has ``d_v - 1`` free sockets.  B sockets are cut into pairs (one
    triple when their count is odd) and each group opens its own check, so a
    check that touches B leaves touches at least two.  The remaining slots take
    A sockets in round-robin order, which keeps every window of at most
    ``d_c`` consecutive sockets on distinct leaves.
    """
    s = d_v - 1
    if len(b_leaves) < 2 or (s * len(b_leaves) % 2 and len(b_leaves) < 3):
        raise TightnessError("too few B leaves to pair")
    if len(a_leaves) < d_c:
        raise TightnessError("too few A leaves to fill checks")
    b_seq = b_leaves * s
    groups = [b_seq[i:i + 2] for i in range(0, len(b_seq) - len(b_seq) % 2, 2)]
    if len(b_seq) % 2:
        groups[-1].append(b_seq[-1])
    a_seq = a_leaves * s
    pos = 0
    checks = []
    for g in groups:
        need = d_c - len(g)
        checks.append(g + a_seq[pos:pos + need])
        pos += need
    rest = a_seq[pos:]
    if len(rest) % d_c:
        raise TightnessError("socket count is not a multiple of d_c")
    checks.extend(rest[i:i + d_c] for i in range(0, len(rest), d_c))
    for ch in checks:
        assert len(set(ch)) == d_c, "repeated leaf in a connecting check"
    return checks


def build_tight_instance(d_v: int, d_c: int, n: int | None = None, yn: int | None = None) -> TightInstance:
    """Assemble the regular code and its error pattern.

    Give either the target length ``n`` (then ``y_n = floor(log_{d_v-1} n^gamma)``)
    or ``yn`` directly.  When the leaf sockets do not divide into checks,
    ``d_c`` disjoint copies of the tree are completed together.
    """
    if d_v <= 2 or d_c <= 2:
        raise TightnessError("need d_v > 2 and d_c > 2")
    if (n is None) == (yn is None):
        raise TightnessError("give exactly one of n and yn")
    y = y_for_n(d_v, d_c, n) if yn is None else yn
    if y < 1:
        raise TightnessError(f"y_n = {y}; the construction needs y_n >= 1 (n >= beta)")
    tree, _, b_n = build_tree(d_v, d_c, y)
    l_n = len(tree.leaves())
    copies = 1 if ((d_v - 1) * l_n) % d_c == 0 else d_c
    full = Fragment()
    for k in range(copies):
        vo, co = full.n_vars, full.n_checks
        full.graft(tree, None)
        full.var_roles[vo:] = [r._replace(copy=k) for r in full.var_roles[vo:]]
        full.check_roles[co:] = [r._replace(copy=k) for r in full.check_roles[co:]]
        # graft assumes a root variable at local id 0; the tree's root is a check
        full.parent_var[co] = -1
    dv, _ = full.degrees()
    leaves = [v for v in range(full.n_vars) if dv[v] == 1]
    assert len(leaves) == copies * l_n
    b_leaves = [v for v in leaves if full.var_roles[v].kind == "BBlock"]
    a_leaves = [v for v in leaves if full.var_roles[v].kind != "BBlock"]
    edges = list(full.edges)
    check_roles = list(full.check_roles)
    parent_var = list(full.parent_var)
    for group in _complete(d_v, d_c, b_leaves, a_leaves):
        c = len(check_roles)
        check_roles.append(Role("Connecting"))
        parent_var.append(-1)
        edges.extend((v, c) for v in group)
    graph = TannerGraph.from_edges(
        full.n_vars, len(check_roles), edges, kind=Kind.REGULAR, params=RegularParams(d_v, d_c)
    )
    rep = validate(graph)
    if not rep.ok:
        raise TightnessError("completion produced an invalid graph: " + "; ".join(rep.violations[:3]))
    gamma = tuple(-1 if r.kind == "BBlock" else 1 for r in full.var_roles)
    return TightInstance(
        graph, gamma, tuple(full.var_roles), tuple(check_roles), tuple(full.parent_check),
        tuple(parent_var), y, b_n, l_n, copies, d_v, d_c,
    )


# --- the explicit hyperflow ---------------------------------------------------------


@dataclass(frozen=True)
class TightnessWeights:
    d_v: int
    epsilon: Fraction

    def r(self, x: int) -> Fraction:
        """Weight leaving the root of ``A_x``."""
        return (1 - self.epsilon) * Fraction((self.d_v - 1) ** (x + 1) - 1, self.d_v - 2)

    def w(self, i: int) -> Fraction:
        """Weight entering a layer-i variable of the B block."""
        return (1 + self.epsilon) * Fraction((self.d_v - 1) ** (i + 1) - 1, self.d_v - 2)


def epsilon_range_ok(d_v: int, eps) -> bool:
    eps = as_fraction(eps)
    return 0 < eps < 1 - Fraction(2, d_v)


def explicit_weights(inst: TightInstance, eps) -> TightnessWeights:
    eps = as_fraction(eps)
    if not epsilon_range_ok(inst.d_v, eps):
        raise TightnessError(f"epsilon {eps} outside (0, {1 - Fraction(2, inst.d_v)})")
    return TightnessWeights(inst.d_v, eps)


def explicit_hyperflow(inst: TightInstance, eps) -> Weighting:
    """Dual witness for ``gamma_n``: A blocks drain toward their roots, the B block is fed from ``c_0``.

    Each tree edge carries the weight of the flow across it; connecting edges
    carry zero.  A positive weight on ``(v, c)`` is flow from ``v`` into ``c``.
    """
    k = explicit_weights(inst, eps)
    w: Weighting = {e: Fraction(0) for e in inst.graph.edges}
    for v, r in enumerate(inst.var_roles):
        c = inst.parent_check[v]
        if c < 0:
            continue
        if r.kind == "ABlock":
            # a variable at depth j holds a full subtree of height x - j
            w[(v, c)] = k.r(r.param - r.depth)
        else:
            w[(v, c)] = -k.w(r.param)
    for c, r in enumerate(inst.check_roles):
        p = inst.parent_var[c]
        if p < 0:
            continue
        if r.kind == "ABlock":
            w[(p, c)] = -k.r(r.param - r.depth)
        else:
            w[(p, c)] = k.w(r.param - 1)
    return w


def expected_max_weight(inst: TightInstance, eps) -> Fraction:
    k = explicit_weights(inst, eps)
    return max(k.r(inst.y_n + 1), k.w(inst.y_n))


@dataclass(frozen=True)
class HyperflowCheck:
    witness_ok: bool
    hyperflow_ok: bool
    max_weight: Fraction
    expected_max_weight: Fraction
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return self.witness_ok and self.hyperflow_ok and self.max_weight == self.expected_max_weight


def verify_explicit_hyperflow(inst: TightInstance, eps) -> HyperflowCheck:
    """Check the explicit weights as a dual witness and, once normalized, as a hyperflow."""
    w = explicit_hyperflow(inst, eps)
    r1 = verify_dual_witness(inst.graph, inst.gamma_n, w)
    bad = list(r1.violations)
    h_ok = False
    if r1.ok:
        h = remove_cycles_and_normalize(Wdag.from_weighting(inst.graph, w, inst.gamma_n), inst.graph)
        r2 = verify_hyperflow(inst.graph, inst.gamma_n, h.to_weighting(inst.graph))
        h_ok = r2.ok
        bad.extend(r2.violations)
    top = max((abs(x) for x in w.values()), default=Fraction(0))
    return HyperflowCheck(r1.ok, h_ok, top, expected_max_weight(inst, eps), tuple(bad))


# --- the LP certificate ---------------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    min_max_weight: Fraction
    b_n: int
    margin: Fraction
    root_edge_weights: tuple[Fraction, ...]

    @property
    def ok(self) -> bool:
        return self.min_max_weight >= self.b_n

    def to_dict(self) -> dict:
        return {
            "min_max_weight": format_rational(self.min_max_weight),
            "b_n": self.b_n,
            "margin": format_rational(self.margin),
            "root_edge_weights": [format_rational(x) for x in self.root_edge_weights],
            "ok": self.ok,
        }


def certify_lower_bound(inst: TightInstance) -> Certificate:
    """Minimize the largest edge weight over dual witnesses for ``gamma_n``.

    The slack is fixed at half its best value; the optimum must reach ``b_n``.
    """
    alpha, w, margin = minimize_max_weight(inst.graph, inst.gamma_n)
    roots = tuple(-w[e] for e in inst.b_root_edges())
    return Certificate(alpha, inst.b_n, margin, roots)


# --- serialization --------------------------------------------------------------------


def instance_to_dict(inst: TightInstance) -> dict:
    return {
        "graph": graph_to_dict(inst.graph),
        "gamma_n": list(inst.gamma_n),
        "var_roles": [list(r) for r in inst.var_roles],
        "check_roles": [list(r) for r in inst.check_roles],
        "parent_check": list(inst.parent_check),
        "parent_var": list(inst.parent_var),
        "y_n": inst.y_n,
        "b_n": inst.b_n,
        "l_n": inst.l_n,
        "copies": inst.copies,
        "d_v": inst.d_v,
        "d_c": inst.d_c,
    }


def instance_from_dict(d: dict) -> TightInstance:
    return TightInstance(
        graph_from_dict(d["graph"]),
        tuple(d["gamma_n"]),
        tuple(Role(*r) for r in d["var_roles"]),
        tuple(Role(*r) for r in d["check_roles"]),
        tuple(d["parent_check"]),
        tuple(d["parent_var"]),
        d["y_n"], d["b_n"], d["l_n"], d["copies"], d["d_v"], d["d_c"],
    )


def dumps(inst: TightInstance) -> str:
    return json.dumps(instance_to_dict(inst), sort_keys=True)


def loads(text: str) -> TightInstance:
    return instance_from_dict(json.loads(text))


def weights_to_dict(k: TightnessWeights, y: int) -> dict:
    return {
        "epsilon": format_rational(k.epsilon),
        "r": {x: format_rational(k.r(x)) for x in range(y + 2)},
        "w": {i: format_rational(k.w(i)) for i in range(y + 1)},
    }

