"""From a weighted DAG to a directed weighted forest.

Every variable with several outgoing arcs has its whole ancestor tree
replicated once per arc; the copy attached to the arc of weight ``e_l`` is
scaled by ``e_l / e_T``, where ``e_T`` is the total outgoing weight.  Processing
variables in topological order turns the DAG into a forest whose directed
paths are in bijection with those of the DAG.
"""

from __future__ import annotations

import heapq
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .lp import format_rational
from .witness import CHECK, VAR, Node, Wdag, check_pattern


class ForestError(ValueError):
    pass


class ForestSizeError(ForestError):
    pass


@dataclass
class SingleSinkWdag:
    """The sub-WDAG that feeds the heaviest check-to-variable arc.

    ``wdag`` keeps only arcs among ``var_nodes`` and ``check_nodes``;
    ``sink`` is the variable ``v_max`` and ``alpha`` the weight of its single
    incoming arc from ``c_max``.
    """

    wdag: Wdag
    sink: int | None
    c_max: int | None
    alpha: Fraction
    var_nodes: frozenset[int]
    check_nodes: frozenset[int]

    def nodes(self) -> list[Node]:
        return sorted([(VAR, v) for v in self.var_nodes] + [(CHECK, c) for c in self.check_nodes])


def heaviest_inflow_edge(wdag: Wdag):
    """``argmax |w|`` over edges with ``w < 0``, ties to the least ``(v, c)``."""
    best = None
    for e, x in sorted(wdag.weights.items()):
        if x < 0 and (best is None or -x > -wdag.weights[best]):
            best = e
    return best


def extract_gmax(wdag: Wdag) -> SingleSinkWdag:
    e = heaviest_inflow_edge(wdag)
    if e is None:
        empty = Wdag(wdag.n_vars, wdag.n_checks, {}, list(wdag.gamma))
        return SingleSinkWdag(empty, None, None, Fraction(0), frozenset(), frozenset())
    v_max, c_max = e
    pred = wdag.predecessors()
    seen = {(CHECK, c_max)}
    stack = [(CHECK, c_max)]
    while stack:
        node = stack.pop()
        for p, _ in pred.get(node, ()):
            if p not in seen:
                seen.add(p)
                stack.append(p)
    var_nodes = frozenset({v for k, v in seen if k == VAR} | {v_max})
    check_nodes = frozenset(c for k, c in seen if k == CHECK)
    kept = {}
    for (v, c), x in wdag.weights.items():
        if v == v_max:
            if c == c_max:
                kept[(v, c)] = x
        elif v in var_nodes and c in check_nodes:
            kept[(v, c)] = x
    sub = Wdag(wdag.n_vars, wdag.n_checks, kept, list(wdag.gamma))
    return SingleSinkWdag(sub, v_max, c_max, -wdag.weights[e], var_nodes, check_nodes)


def single_sink(wdag: Wdag, nodes=None) -> SingleSinkWdag:
    """Wrap a WDAG that already has a single sink variable."""
    nodes = set(wdag.nodes()) if nodes is None else set(nodes)
    succ = wdag.successors()
    sinks = [u for u in nodes if not succ.get(u)]
    if len(sinks) != 1 or sinks[0][0] != VAR:
        raise ForestError(f"expected one sink variable, found {sinks}")
    sink = sinks[0][1]
    ins = wdag.predecessors().get(sinks[0], [])
    alpha = ins[0][1] if len(ins) == 1 else Fraction(0)
    c_max = ins[0][0][1] if len(ins) == 1 else None
    return SingleSinkWdag(
        wdag, sink, c_max, alpha,
        frozenset(v for k, v in nodes if k == VAR),
        frozenset(c for k, c in nodes if k == CHECK),
    )


@dataclass
class WeightedForest:
    """Replicated nodes with at most one outgoing arc each.

    ``origin[r]`` is the DAG node replicated by ``r``; ``out[r]`` is
    ``(head, weight)`` or absent for roots; ``gamma`` holds the budgets of
    variable replicates.
    """

    origin: list[Node] = field(default_factory=list)
    out: dict[int, tuple[int, Fraction]] = field(default_factory=dict)
    gamma: dict[int, Fraction] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.origin)

    def roots(self) -> list[int]:
        return [r for r in range(len(self.origin)) if r not in self.out]

    def incoming(self) -> dict[int, list[int]]:
        inn: dict[int, list[int]] = defaultdict(list)
        for r, (h, _) in self.out.items():
            inn[h].append(r)
        return inn

    def arcs(self):
        return sorted((r, h, x) for r, (h, x) in self.out.items())


def topological_order(nodes, succ) -> list[Node]:
    """Kahn's algorithm, always releasing the least available node."""
    indeg = Counter()
    for u in nodes:
        for v, _ in succ.get(u, ()):
            indeg[v] += 1
    heap = [u for u in nodes if indeg[u] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v, _ in succ.get(u, ()):
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    if len(order) != len(nodes):
        raise ForestError("input is not acyclic")
    return order


def _as_single_sink(g) -> SingleSinkWdag:
    if isinstance(g, SingleSinkWdag):
        return g
    nodes = set(g.nodes())
    return SingleSinkWdag(
        g, None, None, Fraction(0),
        frozenset(v for k, v in nodes if k == VAR),
        frozenset(c for k, c in nodes if k == CHECK),
    )


def expand_to_forest(g, size_cap: int = 100_000) -> WeightedForest:
    """Replicate ancestor trees until every node has at most one outgoing arc."""
    g = _as_single_sink(g)
    nodes = g.nodes()
    succ = g.wdag.successors()
    for u in nodes:
        if u[0] == CHECK and len(succ.get(u, ())) > 1:
            raise ForestError(f"check {u[1]} has several outgoing arcs")
    order = topological_order(nodes, succ)

    forest = WeightedForest()
    rep_of: dict[Node, int] = {}
    outs: dict[int, list[tuple[int, Fraction]]] = defaultdict(list)
    for u in nodes:
        rep_of[u] = len(forest.origin)
        forest.origin.append(u)
        if u[0] == VAR:
            forest.gamma[rep_of[u]] = g.wdag.gamma[u[1]]
    for u in nodes:
        for v, x in succ.get(u, ()):
            outs[rep_of[u]].append((rep_of[v], x))
    inn: dict[int, list[int]] = defaultdict(list)
    for r, lst in outs.items():
        for h, _ in lst:
            inn[h].append(r)

    def ancestors(root: int) -> list[int]:
        tree, stack = [], [root]
        while stack:
            r = stack.pop()
            tree.append(r)
            stack.extend(inn.get(r, ()))
        return tree

    for u in order:
        if u[0] != VAR:
            continue
        x = rep_of[u]
        edges = sorted(outs.get(x, ()), key=lambda hx: forest.origin[hx[0]])
        if len(edges) <= 1:
            continue
        total = sum((w for _, w in edges), Fraction(0))
        tree = ancestors(x)
        if len(forest.origin) + (len(edges) - 1) * len(tree) > size_cap:
            raise ForestSizeError(f"forest would exceed {size_cap} nodes")
        base_gamma = {r: forest.gamma[r] for r in tree if r in forest.gamma}
        base_out = {r: outs[r][0] for r in tree if r != x}
        for ell, (head, weight) in enumerate(edges):
            scale = weight / total
            if ell == 0:
                mapping = {r: r for r in tree}
            else:
                mapping = {}
                for r in tree:
                    mapping[r] = len(forest.origin)
                    forest.origin.append(forest.origin[r])
            for r, gv in base_gamma.items():
                forest.gamma[mapping[r]] = gv * scale
            for r, (h, w) in base_out.items():
                outs[mapping[r]] = [(mapping[h], w * scale)]
                if ell:
                    inn[mapping[h]].append(mapping[r])
            outs[mapping[x]] = [(head, weight)]
            if ell:
                inn[head].remove(x)
                inn[head].append(mapping[x])
    for r, lst in outs.items():
        if lst:
            forest.out[r] = lst[0]
    return forest


# --- verification ------------------------------------------------------------------


@dataclass
class ForestReport:
    items: dict[int, list[str]] = field(default_factory=lambda: {i: [] for i in range(1, 8)})
    structure: list[str] = field(default_factory=list)
    sink_item_applicable: bool = False

    @property
    def ok(self) -> bool:
        return not self.structure and not any(self.items.values())

    def failed_items(self) -> list[int]:
        return [i for i, v in self.items.items() if v]


def _dag_paths(nodes, succ) -> Counter:
    """Every directed path that ends at a sink, as a tuple of nodes."""
    paths = Counter()

    def walk(path):
        nxt = succ.get(path[-1], ())
        if not nxt:
            paths[path] += 1
        for v, _ in nxt:
            walk(path + (v,))

    for u in nodes:
        walk((u,))
    return paths


def _forest_paths(forest: WeightedForest) -> Counter:
    """The path from each replicate to its root, in original node labels."""
    paths = Counter()
    for r in range(len(forest)):
        path = (forest.origin[r],)
        cur = r
        while cur in forest.out:
            cur = forest.out[cur][0]
            path = path + (forest.origin[cur],)
        paths[path] += 1
    return paths


def _signed_at(nodes, wdag: Wdag):
    """Per-node list of signed weights, in the orientation of the witness."""
    incident = defaultdict(list)
    for (v, c), x in wdag.weights.items():
        if (VAR, v) in nodes and (CHECK, c) in nodes:
            incident[(VAR, v)].append(x)
            incident[(CHECK, c)].append(x)
    return incident


def verify_forest_properties(g, forest: WeightedForest, check_paths: bool = True) -> ForestReport:
    """Check the seven structural properties of an expanded forest.

    1-2. replicates partition the variables and the checks;
    3.   replicate budgets add up to the original budget;
    4.   replicate budgets keep the sign of the original;
    5.   budget slack and the check pattern hold at every replicate whose
         original satisfies them;
    6.   directed paths ending at a sink correspond one to one;
    7.   a sink with a single incoming arc of weight alpha is preserved.
    """
    g = _as_single_sink(g)
    rep = ForestReport()
    nodes = set(g.nodes())
    succ = g.wdag.successors()

    # forest structure
    for r, (h, _) in forest.out.items():
        if not 0 <= h < len(forest):
            rep.structure.append(f"replicate {r} points outside the forest")
    if len(forest.out) != len(forest) - len(forest.roots()):
        rep.structure.append("some replicate has several outgoing arcs")
    for r in range(len(forest)):
        seen, cur = set(), r
        while cur in forest.out:
            if cur in seen:
                rep.structure.append(f"cycle through replicate {r}")
                break
            seen.add(cur)
            cur = forest.out[cur][0]

    # items 1 and 2
    counts = Counter(forest.origin)
    for kind, item in ((VAR, 1), (CHECK, 2)):
        for u in nodes:
            if u[0] == kind and counts[u] == 0:
                rep.items[item].append(f"{u} has no replicate")
        for u in counts:
            if u[0] == kind and u not in nodes:
                rep.items[item].append(f"replicate of unknown node {u}")

    # items 3 and 4
    sums = defaultdict(Fraction)
    for r, gp in forest.gamma.items():
        u = forest.origin[r]
        sums[u] += gp
        gv = g.wdag.gamma[u[1]]
        if (gp > 0) != (gv > 0) or (gp < 0) != (gv < 0):
            rep.items[4].append(f"replicate {r} of {u}: sign of {gp} differs from {gv}")
    for u in nodes:
        if u[0] == VAR and sums[u] != g.wdag.gamma[u[1]]:
            rep.items[3].append(f"{u}: replicate budgets add to {sums[u]}, expected {g.wdag.gamma[u[1]]}")

    # item 5
    orig_incident = _signed_at(nodes, g.wdag)
    orig_slack_ok = {
        u: sum(orig_incident.get(u, []), Fraction(0)) < g.wdag.gamma[u[1]]
        for u in nodes if u[0] == VAR
    }
    orig_pattern_ok = {
        u: check_pattern(orig_incident.get(u, [])) is None for u in nodes if u[0] == CHECK
    }
    inn = forest.incoming()
    for r in range(len(forest)):
        u = forest.origin[r]
        signed = []
        for s in inn.get(r, ()):
            x = forest.out[s][1]
            signed.append(x if u[0] == CHECK else -x)
        if r in forest.out:
            x = forest.out[r][1]
            signed.append(x if u[0] == VAR else -x)
        if u[0] == VAR:
            if orig_slack_ok.get(u) and not sum(signed, Fraction(0)) < forest.gamma.get(r, Fraction(0)):
                rep.items[5].append(f"replicate {r} of {u} violates the budget slack")
        elif orig_pattern_ok.get(u):
            why = check_pattern(signed)
            if why:
                rep.items[5].append(f"replicate {r} of {u}: {why}")

    # item 6
    if check_paths:
        want = _dag_paths(sorted(nodes), succ)
        got = _forest_paths(forest)
        if got != want:
            missing = want - got
            extra = got - want
            rep.items[6].append(
                f"path multisets differ: {sum(missing.values())} missing, {sum(extra.values())} extra"
            )

    # item 7
    if g.sink is not None:
        ins = g.wdag.predecessors().get((VAR, g.sink), [])
        if len(ins) == 1:
            rep.sink_item_applicable = True
            alpha = ins[0][1]
            sinks = [r for r in forest.roots() if forest.origin[r] == (VAR, g.sink)]
            if len(sinks) != 1:
                rep.items[7].append(f"sink has {len(sinks)} replicates")
            else:
                feeders = inn.get(sinks[0], [])
                if len(feeders) != 1 or forest.out[feeders[0]][1] != alpha:
                    rep.items[7].append("sink replicate does not keep its single arc of weight alpha")
    return rep


def replicate_depths(forest: WeightedForest, counts=lambda node: node[0] == CHECK) -> dict[Node, int]:
    """Per original variable, the least number of counted nodes above any replicate.

    ``counts`` selects which nodes on the path to the root are counted; by
    default every check is.
    """
    best: dict[Node, int] = {}
    for r in range(len(forest)):
        u = forest.origin[r]
        if u[0] != VAR:
            continue
        d, cur = 0, r
        while cur in forest.out:
            cur = forest.out[cur][0]
            if counts(forest.origin[cur]):
                d += 1
        best[u] = min(d, best.get(u, d))
    return best


def forest_to_dict(forest: WeightedForest) -> dict:
    """JSON form; each replicate carries the DAG node it copies as provenance."""
    kinds = {VAR: "var", CHECK: "check"}
    nodes = []
    for r, (kind, i) in enumerate(forest.origin):
        item = {"id": r, "origin": [kinds[kind], i]}
        if r in forest.gamma:
            item["gamma"] = format_rational(forest.gamma[r])
        nodes.append(item)
    return {"nodes": nodes, "arcs": [[r, h, format_rational(x)] for r, h, x in forest.arcs()]}
