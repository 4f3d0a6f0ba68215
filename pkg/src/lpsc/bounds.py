"""Sublinear bounds on the largest edge weight of a hyperflow.

The largest check-to-variable weight ``alpha`` of a hyperflow is bounded by
``sum_i T_i / (d_c - 1)^i`` where ``T_i`` counts the variables at depth ``i``
of the sub-WDAG feeding that edge.  Maximizing the right-hand side over all
profiles obeying the growth constraints gives the closed forms below.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import mpmath

from .forest import SingleSinkWdag, extract_gmax
from .graphs import CodeParams, Kind, RegularParams, TannerGraph
from .lp import as_fraction
from .witness import CHECK, VAR, Node, Wdag, verify_hyperflow

LOG_TOLERANCE = 1e-9


class BoundError(ValueError):
    pass


class Mode(enum.Enum):
    PLAIN = "PlainDepth"
    REGULAR_CHECK = "RegularCheckDepth"


@dataclass(frozen=True)
class DepthProfile:
    counts: tuple[int, ...]
    mode: Mode
    depth: dict = field(default_factory=dict, compare=False, repr=False)

    def weighted_sum(self, d_c: int) -> Fraction:
        """``sum_i T_i / (d_c - 1)^i`` computed exactly."""
        return sum((Fraction(t, (d_c - 1) ** i) for i, t in enumerate(self.counts)), Fraction(0))

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class BoundConstants:
    d_v: int
    d_c: int

    def __post_init__(self):
        if self.d_v <= 2 or self.d_c <= 2:
            raise BoundError("need d_v, d_c > 2")

    @property
    def beta(self) -> int:
        return (self.d_c - 1) * (self.d_v - 1)

    @property
    def gamma_exp(self) -> float:
        a = math.log(self.d_v - 1)
        return a / (a + math.log(self.d_c - 1))

    @property
    def q(self) -> int:
        return self.d_v * (self.d_c - 1) * ((self.d_v - 1) ** self.d_v - 1) // (self.d_v - 2)

    @property
    def q0(self) -> int:
        return 1 + ((self.d_v - 1) ** (self.d_v - 1) - 1) // (self.d_v - 2)

    @property
    def eps(self) -> float:
        return math.log(self.d_c - 1) / math.log(self.q)

    @property
    def c_reg(self) -> Fraction:
        return Fraction((self.d_v - 1) ** 2, self.d_v - 2)

    @property
    def c_sc(self) -> Fraction:
        nu = Fraction(self.q, self.d_c - 1)
        return self.q0 * nu * nu / (nu - 1)


def max_edge_weight(w: Mapping) -> Fraction:
    return max((abs(as_fraction(x)) for x in w.values()), default=Fraction(0))


# --- depth profiles ------------------------------------------------------------


def _min_check_depth(nodes, pred, sink: int, counts_check) -> dict[int, int]:
    """0-1 BFS from the sink over reversed arcs; entering a counted check costs 1."""
    start = (VAR, sink)
    dist: dict[Node, int] = {start: 0}
    dq = deque([start])
    done = set()
    while dq:
        u = dq.popleft()
        if u in done:
            continue
        done.add(u)
        for p, _ in pred.get(u, ()):
            if p not in nodes:
                continue
            cost = 1 if p[0] == CHECK and counts_check(p[1]) else 0
            nd = dist[u] + cost
            if nd < dist.get(p, math.inf):
                dist[p] = nd
                if cost:
                    dq.append(p)
                else:
                    dq.appendleft(p)
    return {v: d for (k, v), d in dist.items() if k == VAR}


def _profile(depth: dict[int, int], var_nodes, mode: Mode) -> DepthProfile:
    missing = set(var_nodes) - set(depth)
    if missing:
        raise BoundError(f"variables {sorted(missing)[:5]} do not reach the sink")
    h = max(depth.values(), default=-1)
    counts = [0] * (h + 1)
    for v in var_nodes:
        counts[depth[v]] += 1
    return DepthProfile(tuple(counts), mode, dict(depth))


def depth_profile(g: SingleSinkWdag) -> DepthProfile:
    """``T_i`` = number of variables whose fewest-checks path to the sink has ``i`` checks."""
    if g.sink is None:
        return DepthProfile((), Mode.PLAIN)
    nodes = set(g.nodes())
    depth = _min_check_depth(nodes, g.wdag.predecessors(), g.sink, lambda c: True)
    return _profile(depth, g.var_nodes, Mode.PLAIN)


@dataclass
class ReducedWdag:
    """A single-sink WDAG whose boundary checks keep exactly one incoming arc."""

    g: SingleSinkWdag
    d_c: int
    removed: list = field(default_factory=list)

    def check_degree(self) -> dict[int, int]:
        deg: dict[int, int] = {c: 0 for c in self.g.check_nodes}
        for _, c in self.g.wdag.weights:
            deg[c] += 1
        return deg


def _prune(wdag: Wdag, sink: int, c_max, alpha) -> SingleSinkWdag:
    pred = wdag.predecessors()
    seen = {(VAR, sink)}
    stack = [(VAR, sink)]
    while stack:
        u = stack.pop()
        for p, _ in pred.get(u, ()):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    kept = {(v, c): x for (v, c), x in wdag.weights.items() if (VAR, v) in seen and (CHECK, c) in seen}
    sub = Wdag(wdag.n_vars, wdag.n_checks, kept, list(wdag.gamma))
    return SingleSinkWdag(
        sub, sink, c_max, alpha,
        frozenset(v for k, v in seen if k == VAR),
        frozenset(c for k, c in seen if k == CHECK),
    )


def reduce_wdag(g: SingleSinkWdag, graph: TannerGraph) -> ReducedWdag:
    """Trim boundary checks of a spatially coupled code to a single parent.

    A check at position below ``-L + hat_dv`` keeps the incoming arc from its
    parent of largest position, one above ``L - hat_dv`` the arc from its
    parent of smallest position (ties to the least id).  Checks are handled
    in increasing id; afterwards only nodes that still reach the sink remain.
    """
    p = graph.params
    if graph.var_pos is None or graph.check_pos is None or not isinstance(p, CodeParams):
        raise BoundError("reduce_wdag needs spatial positions and code parameters")
    if g.sink is None:
        return ReducedWdag(g, p.d_c)
    lo, hi = -p.L + p.hat_dv, p.L - p.hat_dv
    weights = dict(g.wdag.weights)
    removed = []
    parents: dict[int, list[int]] = {}
    for (v, c), x in sorted(weights.items()):
        if x > 0:
            parents.setdefault(c, []).append(v)
    for c in sorted(g.check_nodes):
        pos = graph.check_pos[c]
        ps = parents.get(c, [])
        if len(ps) <= 1 or lo <= pos <= hi:
            continue
        if pos < lo:
            keep = min(ps, key=lambda v: (-graph.var_pos[v], v))
        else:
            keep = min(ps, key=lambda v: (graph.var_pos[v], v))
        for v in ps:
            if v != keep:
                removed.append((v, c))
                del weights[(v, c)]
    trimmed = Wdag(g.wdag.n_vars, g.wdag.n_checks, weights, list(g.wdag.gamma))
    return ReducedWdag(_prune(trimmed, g.sink, g.c_max, g.alpha), p.d_c, removed)


def regular_check_depth_profile(gr: ReducedWdag) -> DepthProfile:
    """Like :func:`depth_profile` but only checks of degree ``d_c`` are counted."""
    g = gr.g
    if g.sink is None:
        return DepthProfile((), Mode.REGULAR_CHECK)
    deg = gr.check_degree()
    nodes = set(g.nodes())
    depth = _min_check_depth(nodes, g.wdag.predecessors(), g.sink, lambda c: deg[c] == gr.d_c)
    return _profile(depth, g.var_nodes, Mode.REGULAR_CHECK)


# --- the unified optimization ---------------------------------------------------


@dataclass(frozen=True)
class UnifiedOpt:
    l: int
    T_prime: tuple[int, ...]
    f_value: Fraction
    closed_form_bound: float


def unified_l(lam: int, beta: int, m: int) -> int:
    """``floor(log_beta(m (beta - 1) / lam + 1)) - 1`` in integer arithmetic."""
    t = 0
    while lam * beta ** (t + 1) <= m * (beta - 1) + lam:
        t += 1
    return t - 1


def closed_form(lam, beta: int, d_c: int, m) -> float:
    """``lam nu^2 / (nu - 1) m^(ln nu / ln beta)`` with ``nu = beta / (d_c - 1)``."""
    nu = beta / (d_c - 1)
    return float(lam) * nu * nu / (nu - 1) * float(m) ** (math.log(nu) / math.log(beta))


def unified_opt(lam: int, beta: int, d_c: int, m: int) -> UnifiedOpt:
    """Maximizer of ``sum_i T_i / (d_c - 1)^i`` over integer profiles.

    Feasible profiles sum to ``m``, start with ``T_0 <= lam`` and grow by at
    most a factor ``beta`` per step.  The maximizer fills each level to
    capacity and puts the remainder on the next one.
    """
    for name, x in (("lambda", lam), ("beta", beta), ("d_c", d_c), ("m", m)):
        if not isinstance(x, int) or x <= 0:
            raise BoundError(f"{name} must be a positive integer")
    if beta <= d_c - 1:
        raise BoundError("need beta > d_c - 1")
    if m < lam:
        raise BoundError("need m >= lambda")
    l = unified_l(lam, beta, m)
    T = [lam * beta**i for i in range(l + 1)]
    T.append(m - lam * (beta ** (l + 1) - 1) // (beta - 1))
    f = sum((Fraction(t, (d_c - 1) ** i) for i, t in enumerate(T)), Fraction(0))
    return UnifiedOpt(l, tuple(T), f, closed_form(lam, beta, d_c, m))


def regular_bound(d_v: int, d_c: int, n) -> float:
    k = BoundConstants(d_v, d_c)
    return float(k.c_reg) * float(n) ** k.gamma_exp


def sc_bound(d_v: int, d_c: int, n) -> float:
    k = BoundConstants(d_v, d_c)
    return float(k.c_sc) * float(n) ** (1 - k.eps)


# --- checking an instance -------------------------------------------------------


def log_le(alpha: Fraction, c: Fraction, exponent_num: float, n: int, exact_exponent=None) -> bool:
    """``alpha <= c * n^e`` decided in the log domain.

    When the two logs are within :data:`LOG_TOLERANCE`, the comparison is
    redone with 60 significant digits; ``exact_exponent`` then supplies the
    exponent as an mpmath expression.
    """
    if alpha <= 0:
        return True
    lhs = math.log(alpha.numerator) - math.log(alpha.denominator)
    rhs = math.log(c.numerator) - math.log(c.denominator) + exponent_num * math.log(n)
    if abs(lhs - rhs) > LOG_TOLERANCE:
        return lhs < rhs
    with mpmath.workdps(60):
        e = exact_exponent() if exact_exponent else mpmath.mpf(exponent_num)
        a = mpmath.log(alpha.numerator) - mpmath.log(alpha.denominator)
        b = mpmath.log(c.numerator) - mpmath.log(c.denominator) + e * mpmath.log(n)
        return a <= b


@dataclass
class BoundReport:
    kind: str
    n: int
    alpha_max: Fraction
    bound: float
    profile: DepthProfile | None
    profile_sum: Fraction
    unified_value: Fraction | None
    within_bound: bool
    violations: list[str] = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return float(self.alpha_max) / self.bound

    @property
    def ok(self) -> bool:
        return self.within_bound and not self.violations

    def row(self) -> dict:
        return {"n": self.n, "alpha_max": float(self.alpha_max), "bound": self.bound, "ratio": self.ratio}


def check_profile(profile: DepthProfile, lam: int, beta: int, exact_base: bool) -> list[str]:
    bad = []
    T = profile.counts
    if not T:
        return bad
    if exact_base and T[0] != lam or T[0] > lam:
        bad.append(f"T_0 = {T[0]} breaks the base condition (lambda = {lam})")
    for i in range(len(T) - 1):
        if T[i + 1] > beta * T[i]:
            bad.append(f"T_{i + 1} = {T[i + 1]} > {beta} * T_{i} = {beta * T[i]}")
    return bad


def check_bound_on_instance(graph: TannerGraph, hyperflow: Mapping, gamma) -> BoundReport:
    """Check the applicable edge-weight bound and its intermediate steps.

    The input must be a hyperflow for ``gamma`` in ``{+1, -1}`` on a regular
    or spatially coupled code.  Besides ``max |w| <= c n^e`` the report
    records the depth profile of the sub-WDAG feeding the heaviest inflow
    edge, its growth conditions, ``alpha <= sum_i T_i / (d_c - 1)^i`` and the
    optimum of the unified problem, which sits between the two.
    """
    gamma = [as_fraction(g) for g in gamma]
    if any(abs(g) != 1 for g in gamma):
        raise BoundError("gamma must take values in {+1, -1}")
    if graph.kind not in (Kind.REGULAR, Kind.SPATIALLY_COUPLED):
        raise BoundError(f"no bound for graph kind {graph.kind.value}")
    p = graph.params
    if not isinstance(p, (RegularParams, CodeParams)):
        raise BoundError("graph carries no degree parameters")
    d_v, d_c = p.d_v, p.d_c
    k = BoundConstants(d_v, d_c)
    full = {e: as_fraction(hyperflow.get(e, 0)) for e in graph.edges}
    violations = list(verify_hyperflow(graph, gamma, full).violations)
    alpha_all = max_edge_weight(full)
    n = graph.n_vars
    wdag = Wdag.from_weighting(graph, full, gamma)
    g = extract_gmax(wdag)
    if graph.kind is Kind.REGULAR:
        bound = regular_bound(d_v, d_c, n)
        within = log_le(alpha_all, k.c_reg, k.gamma_exp, n, lambda: _reg_exponent(d_v, d_c))
        profile = depth_profile(g) if g.sink is not None else None
        lam, beta, exact_base = 1, k.beta, True
        m = len(g.var_nodes)
    else:
        bound = sc_bound(d_v, d_c, n)
        within = log_le(alpha_all, k.c_sc, 1 - k.eps, n, lambda: _sc_exponent(k))
        profile = None
        lam, beta, exact_base = k.q0, k.q, False
        m = 0
        if g.sink is not None:
            gr = reduce_wdag(g, graph)
            deg = gr.check_degree()
            odd = sorted(c for c, d in deg.items() if d not in (2, d_c))
            if odd:
                violations.append(f"reduced checks {odd[:5]} have degree outside {{2, {d_c}}}")
            profile = regular_check_depth_profile(gr)
            m = len(gr.g.var_nodes)
    profile_sum = Fraction(0)
    unified = None
    if profile is not None:
        if profile.total != m:
            violations.append(f"profile sums to {profile.total}, expected {m}")
        violations += check_profile(profile, lam, beta, exact_base)
        profile_sum = profile.weighted_sum(d_c)
        if g.alpha > profile_sum:
            violations.append(f"alpha = {g.alpha} exceeds the profile sum {profile_sum}")
        if m >= lam:
            unified = unified_opt(lam, beta, d_c, m).f_value
        else:
            unified = Fraction(m)
        if profile_sum > unified:
            violations.append(f"profile sum {profile_sum} exceeds the unified optimum {unified}")
    if g.alpha != alpha_all and not violations:
        violations.append(f"max |w| = {alpha_all} differs from the heaviest inflow weight {g.alpha}")
    return BoundReport(graph.kind.value, n, alpha_all, bound, profile, profile_sum, unified, within, violations)


def _reg_exponent(d_v, d_c):
    a = mpmath.log(d_v - 1)
    return a / (a + mpmath.log(d_c - 1))


def _sc_exponent(k: BoundConstants):
    return 1 - mpmath.log(k.d_c - 1) / mpmath.log(k.q)
