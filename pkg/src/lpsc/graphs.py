"""Tanner graphs: regular ensembles, spatially coupled chains and their covers.

Node ids are contiguous integers.  For the structured codes variables and
checks are numbered position-major: every node at position ``p`` precedes
every node at position ``p + 1``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class GraphError(ValueError):
    pass


class Kind(enum.Enum):
    REGULAR = "Regular"
    SPATIALLY_COUPLED = "SpatiallyCoupled"
    GRAPH_COVER = "GraphCover"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class CodeParams:
    """Parameters of a spatially coupled chain or of its graph cover.

    ``d_v`` is odd and larger than 2; checks have degree ``d_c = k * d_v`` in the
    interior.  Positions run over ``[-L, L]`` and each holds ``M`` variables.
    """

    d_v: int
    k: int
    L: int
    M: int

    def __post_init__(self):
        if self.d_v <= 2 or self.d_v % 2 == 0:
            raise GraphError(f"d_v must be odd and > 2, got {self.d_v}")
        if self.k < 1:
            raise GraphError("k must be positive")
        if self.L < 0 or self.M < 1:
            raise GraphError("L must be >= 0 and M >= 1")
        if self.M % self.k:
            raise GraphError(f"M={self.M} is not divisible by k={self.k}")

    @property
    def d_c(self) -> int:
        return self.k * self.d_v

    @property
    def hat_dv(self) -> int:
        return (self.d_v - 1) // 2

    @property
    def checks_per_position(self) -> int:
        return self.M // self.k

    def to_dict(self) -> dict:
        return {"d_v": self.d_v, "k": self.k, "L": self.L, "M": self.M}


@dataclass(frozen=True)
class RegularParams:
    d_v: int
    d_c: int

    def to_dict(self) -> dict:
        return {"d_v": self.d_v, "d_c": self.d_c}


@dataclass(frozen=True)
class TannerGraph:
    """Bipartite variable/check graph.

    The constructor does not validate; use :func:`validate` for that.
    ``var_pos`` and ``check_pos`` are empty for unstructured graphs.
    """

    n_vars: int
    n_checks: int
    var_adj: tuple[tuple[int, ...], ...]
    check_adj: tuple[tuple[int, ...], ...]
    kind: Kind = Kind.CUSTOM
    params: CodeParams | RegularParams | None = None
    var_pos: tuple[int, ...] = ()
    check_pos: tuple[int, ...] = ()
    _edges: tuple = field(default=None, repr=False, compare=False)

    @classmethod
    def from_edges(cls, n_vars, n_checks, edges: Iterable[tuple[int, int]], **kw) -> "TannerGraph":
        var_adj = [[] for _ in range(n_vars)]
        check_adj = [[] for _ in range(n_checks)]
        for v, c in edges:
            if not (0 <= v < n_vars and 0 <= c < n_checks):
                raise GraphError(f"edge ({v}, {c}) out of range")
            var_adj[v].append(c)
            check_adj[c].append(v)
        return cls(
            n_vars,
            n_checks,
            tuple(tuple(sorted(a)) for a in var_adj),
            tuple(tuple(sorted(a)) for a in check_adj),
            **kw,
        )

    @classmethod
    def from_parity_matrix(cls, H) -> "TannerGraph":
        H = np.asarray(H)
        m, n = H.shape
        edges = [(int(v), int(c)) for c, v in zip(*np.nonzero(H))]
        return cls.from_edges(n, m, edges)

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """All ``(v, c)`` edges sorted lexicographically."""
        if self._edges is None:
            es = tuple(sorted((v, c) for v, cs in enumerate(self.var_adj) for c in cs))
            object.__setattr__(self, "_edges", es)
        return self._edges

    def parity_matrix(self) -> np.ndarray:
        H = np.zeros((self.n_checks, self.n_vars), dtype=np.int8)
        for v, c in self.edges:
            H[c, v] = 1
        return H

    def vars_at(self, p: int) -> list[int]:
        return [v for v, q in enumerate(self.var_pos) if q == p]

    def checks_at(self, p: int) -> list[int]:
        return [c for c, q in enumerate(self.check_pos) if q == p]


@dataclass(frozen=True)
class DerivedCode:
    """A spatially coupled code cut out of a graph cover.

    ``survivor_map[v]`` is the cover id of derived variable ``v`` and
    ``check_map[c]`` the cover id of derived check ``c``.
    """

    graph: TannerGraph
    cut_position: int
    special_vars: frozenset[int]
    survivor_map: tuple[int, ...]
    check_map: tuple[int, ...]


def check_position_range(j: int, params: CodeParams) -> range:
    """Variable positions joined to a check at position ``j`` of a chain."""
    h, L = params.hat_dv, params.L
    return range(max(-L, j - h), min(L, j + h) + 1)


def _rng(seed):
    return np.random.default_rng(seed)


def build_regular(d_v: int, d_c: int, n: int, seed, max_attempts: int = 20000) -> TannerGraph:
    """Sample a (d_v, d_c)-regular graph on ``n`` variables without parallel edges.

    Configuration model: variable sockets are uniformly permuted against check
    sockets; samples containing a repeated edge are rejected.
    """
    if d_v < 2 or d_c < 2 or n < 1:
        raise GraphError("need d_v, d_c >= 2 and n >= 1")
    if (n * d_v) % d_c:
        raise GraphError(f"n*d_v = {n * d_v} is not divisible by d_c = {d_c}")
    m = n * d_v // d_c
    if d_c > n:
        raise GraphError("d_c exceeds n; a simple graph is impossible")
    rng = _rng(seed)
    var_sockets = np.repeat(np.arange(n), d_v)
    check_sockets = np.repeat(np.arange(m), d_c)
    for _ in range(max_attempts):
        perm = rng.permutation(var_sockets)
        edges = set(zip(perm.tolist(), check_sockets.tolist()))
        if len(edges) == n * d_v:
            return TannerGraph.from_edges(
                n, m, edges, kind=Kind.REGULAR, params=RegularParams(d_v, d_c)
            )
    raise GraphError(f"no simple graph after {max_attempts} attempts")


def _var_id(p: int, i: int, params: CodeParams) -> int:
    return (p + params.L) * params.M + i


def build_spatially_coupled(params: CodeParams, seed) -> TannerGraph:
    """Sample the chain ``C(d_v, k, L, M)``.

    For every check position ``j`` and every variable position ``p`` it is
    wired to, the ``M`` variables at ``p`` are matched to the ``M`` sockets
    (``k`` per check) at ``j`` by an independent uniform permutation.
    """
    rng = _rng(seed)
    L, M, h = params.L, params.M, params.hat_dv
    per = params.checks_per_position
    n = (2 * L + 1) * M
    check_positions = range(-L - h, L + h + 1)
    edges = []
    var_pos = [p for p in range(-L, L + 1) for _ in range(M)]
    check_pos = []
    for jj, j in enumerate(check_positions):
        base = jj * per
        check_pos += [j] * per
        for p in check_position_range(j, params):
            perm = rng.permutation(M)
            for s in range(M):
                edges.append((_var_id(p, int(perm[s]), params), base + s // params.k))
    return TannerGraph.from_edges(
        n, len(check_pos), edges,
        kind=Kind.SPATIALLY_COUPLED, params=params,
        var_pos=tuple(var_pos), check_pos=tuple(check_pos),
    )


def wrap(p: int, L: int) -> int:
    """Reduce ``p`` to the representative in ``[-L, L]`` modulo ``2L + 1``."""
    return (p + L) % (2 * L + 1) - L


def build_graph_cover(params: CodeParams, seed) -> TannerGraph:
    """Sample the tail-biting cover ``C~(d_v, k, L, M)``.

    Positions live on the cycle of length ``2L + 1`` and every check has degree
    ``d_c``.
    """
    L, M, h = params.L, params.M, params.hat_dv
    if 2 * L + 1 < params.d_v:
        raise GraphError("a graph cover needs 2L+1 >= d_v positions")
    rng = _rng(seed)
    per = params.checks_per_position
    edges = []
    var_pos = [p for p in range(-L, L + 1) for _ in range(M)]
    check_pos = []
    for jj, j in enumerate(range(-L, L + 1)):
        base = jj * per
        check_pos += [j] * per
        for i in range(-h, h + 1):
            p = wrap(j + i, L)
            perm = rng.permutation(M)
            for s in range(M):
                edges.append((_var_id(p, int(perm[s]), params), base + s // params.k))
    return TannerGraph.from_edges(
        (2 * L + 1) * M, len(check_pos), edges,
        kind=Kind.GRAPH_COVER, params=params,
        var_pos=tuple(var_pos), check_pos=tuple(check_pos),
    )


def derive_sc_from_cover(cover: TannerGraph, i: int) -> DerivedCode:
    """Cut the chain out of ``cover`` by deleting ``2*hat_dv`` consecutive positions.

    Positions ``i, i+1, ..., i + 2*hat_dv - 1`` (mod ``2L+1``) are removed.  The
    surviving positions are relabelled so that the one right after the cut
    becomes ``-L'`` with ``L' = L - hat_dv``; every check is kept and loses the
    edges to removed variables.
    """
    if cover.kind is not Kind.GRAPH_COVER:
        raise GraphError("expected a graph cover")
    params: CodeParams = cover.params
    L, M, h = params.L, params.M, params.hat_dv
    if not -L <= i <= L:
        raise GraphError(f"cut position {i} outside [-{L}, {L}]")
    new_L = L - h
    new_params = CodeParams(params.d_v, params.k, new_L, M)
    width = 2 * L + 1
    start = i + 2 * h  # first surviving cover position (before wrapping)

    def offset(p):
        return (p - start) % width

    special = frozenset(v for v, p in enumerate(cover.var_pos) if offset(p) > 2 * new_L)
    # derived variable order: by new position, keeping the cover order inside
    survivors = sorted(
        (v for v in range(cover.n_vars) if v not in special),
        key=lambda v: (offset(cover.var_pos[v]), v),
    )
    var_new = {v: k for k, v in enumerate(survivors)}

    def check_new_pos(j):
        t = offset(j)
        if t > 2 * new_L + h:
            t -= width
        return -new_L + t

    checks = sorted(range(cover.n_checks), key=lambda c: (check_new_pos(cover.check_pos[c]), c))
    check_new = {c: k for k, c in enumerate(checks)}
    edges = [(var_new[v], check_new[c]) for v, c in cover.edges if v not in special]
    graph = TannerGraph.from_edges(
        len(survivors), len(checks), edges,
        kind=Kind.SPATIALLY_COUPLED, params=new_params,
        var_pos=tuple(-new_L + offset(cover.var_pos[v]) for v in survivors),
        check_pos=tuple(check_new_pos(cover.check_pos[c]) for c in checks),
    )
    return DerivedCode(graph, i, special, tuple(survivors), tuple(checks))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(graph: TannerGraph) -> ValidationReport:
    """Check the structural invariants of ``graph`` and list each violation."""
    rep = ValidationReport()
    bad = rep.violations
    if len(graph.var_adj) != graph.n_vars or len(graph.check_adj) != graph.n_checks:
        bad.append("adjacency lengths do not match node counts")
        return rep
    from_vars = sorted((v, c) for v, cs in enumerate(graph.var_adj) for c in cs)
    from_checks = sorted((v, c) for c, vs in enumerate(graph.check_adj) for v in vs)
    if from_vars != from_checks:
        bad.append("adjacency is not symmetric")
    if len(set(from_vars)) != len(from_vars):
        bad.append("parallel edges present")
    for v, c in from_vars:
        if not (0 <= v < graph.n_vars and 0 <= c < graph.n_checks):
            bad.append(f"edge ({v}, {c}) out of range")
    for c, vs in enumerate(graph.check_adj):
        if not vs:
            bad.append(f"check {c} has degree 0")

    p = graph.params
    if graph.kind is Kind.REGULAR and isinstance(p, RegularParams):
        for v, cs in enumerate(graph.var_adj):
            if len(cs) != p.d_v:
                bad.append(f"variable {v} has degree {len(cs)}, expected {p.d_v}")
        for c, vs in enumerate(graph.check_adj):
            if len(vs) != p.d_c:
                bad.append(f"check {c} has degree {len(vs)}, expected {p.d_c}")
    elif graph.kind in (Kind.SPATIALLY_COUPLED, Kind.GRAPH_COVER):
        _validate_positions(graph, p, bad)
    return rep


def _validate_positions(graph: TannerGraph, p: CodeParams, bad: list[str]) -> None:
    if len(graph.var_pos) != graph.n_vars or len(graph.check_pos) != graph.n_checks:
        bad.append("missing positions")
        return
    L, M, h = p.L, p.M, p.hat_dv
    cover = graph.kind is Kind.GRAPH_COVER
    for q in range(-L, L + 1):
        if graph.var_pos.count(q) != M:
            bad.append(f"position {q} does not hold {M} variables")
    lo, hi = (-L, L) if cover else (-L - h, L + h)
    for q in range(lo, hi + 1):
        if graph.check_pos.count(q) != p.checks_per_position:
            bad.append(f"check position {q} does not hold M/k checks")
    if sorted(graph.var_pos) != list(graph.var_pos) or sorted(graph.check_pos) != list(graph.check_pos):
        bad.append("ids are not position-major")
    for v, cs in enumerate(graph.var_adj):
        if len(cs) != p.d_v:
            bad.append(f"variable {v} has degree {len(cs)}, expected {p.d_v}")
    for c, vs in enumerate(graph.check_adj):
        j = graph.check_pos[c]
        if cover:
            allowed = {wrap(j + t, L) for t in range(-h, h + 1)}
            expected = p.d_c
        else:
            allowed = set(check_position_range(j, p))
            expected = p.k * len(allowed)
        if len(vs) != expected:
            bad.append(f"check {c} at position {j} has degree {len(vs)}, expected {expected}")
        for v in vs:
            if graph.var_pos[v] not in allowed:
                bad.append(f"edge ({v}, {c}) joins positions {graph.var_pos[v]} and {j}")
    # each variable sees exactly one check position in every offset slot
    for v, cs in enumerate(graph.var_adj):
        pv = graph.var_pos[v]
        seen = sorted(graph.check_pos[c] for c in cs)
        if cover:
            want = sorted(wrap(pv + t, L) for t in range(-h, h + 1))
        else:
            want = list(range(pv - h, pv + h + 1))
        if seen != want:
            bad.append(f"variable {v} at position {pv} meets check positions {seen}")


def sc_check_degree_profile(params: CodeParams) -> list[int]:
    """Degree of a check at each position ``-L-hat .. L+hat`` of the chain."""
    h, L = params.hat_dv, params.L
    return [params.k * len(check_position_range(j, params)) for j in range(-L - h, L + h + 1)]


# --- serialization -------------------------------------------------------------


def graph_to_dict(graph: TannerGraph) -> dict:
    return {
        "kind": graph.kind.value,
        "params": None if graph.params is None else graph.params.to_dict(),
        "n_vars": graph.n_vars,
        "n_checks": graph.n_checks,
        "edges": [list(e) for e in graph.edges],
        "var_pos": list(graph.var_pos),
        "check_pos": list(graph.check_pos),
    }


def graph_from_dict(d: dict) -> TannerGraph:
    kind = Kind(d["kind"])
    raw = d.get("params")
    params = None
    if raw is not None:
        params = CodeParams(**raw) if "M" in raw else RegularParams(**raw)
    return TannerGraph.from_edges(
        d["n_vars"], d["n_checks"], [tuple(e) for e in d["edges"]],
        kind=kind, params=params,
        var_pos=tuple(d.get("var_pos", ())), check_pos=tuple(d.get("check_pos", ())),
    )


def dumps(graph: TannerGraph) -> str:
    return json.dumps(graph_to_dict(graph), sort_keys=True)


def loads(text: str) -> TannerGraph:
    return graph_from_dict(json.loads(text))


def save(graph: TannerGraph, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(graph))


def load(path) -> TannerGraph:
    with open(path) as fh:
        return loads(fh.read())


def custom(n_vars: int, n_checks: int, edges: Sequence[tuple[int, int]]) -> TannerGraph:
    return TannerGraph.from_edges(n_vars, n_checks, edges)
