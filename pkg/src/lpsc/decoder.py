"""LP decoding over the fundamental polytope."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .graphs import TannerGraph
from .lp import Constraint, LinearProgram, LpBuilder, Rel, Sense, Status, as_fraction, solve

MAX_CHECK_DEGREE = 12


class DecoderError(ValueError):
    pass


@dataclass(frozen=True)
class DecodeResult:
    """Outcome of LP decoding on the all-zeros codeword.

    ``success`` is true exactly when zero is the unique optimum.  When it is
    not, ``witness_point`` is a nonzero point of the polytope whose cost is
    at most zero.
    """

    success: bool
    optimal_value: Fraction
    witness_point: tuple[Fraction, ...] | None = None


def gamma_from_error(eta: Sequence[int]) -> list[Fraction]:
    """BSC log-likelihood signs: ``+1`` on clean bits and ``-1`` on flipped ones."""
    return [Fraction(-1 if e else 1) for e in eta]


def fundamental_polytope_constraints(graph: TannerGraph) -> LinearProgram:
    """Box constraints plus one forbidden-set inequality per odd subset of each check."""
    b = LpBuilder()
    for _ in range(graph.n_vars):
        b.add_var(0, 1)
    for c, vs in enumerate(graph.check_adj):
        if len(vs) > MAX_CHECK_DEGREE:
            raise DecoderError(f"check {c} has degree {len(vs)} > {MAX_CHECK_DEGREE}")
        for size in range(1, len(vs) + 1, 2):
            for S in combinations(vs, size):
                inside = set(S)
                coeffs = {v: (1 if v in inside else -1) for v in vs}
                b.add(coeffs, Rel.LE, size - 1)
    return b.build()


def most_violated_cut(x: Sequence[Fraction], neighbors: Sequence[int]):
    """Odd subset ``S`` of ``neighbors`` maximizing the violation of its inequality.

    The inequality for ``S`` reads ``sum_S x - sum_{N\\S} x <= |S| - 1``; its
    violation is ``1 - sum_S (1 - x_i) - sum_{N\\S} x_i``, maximized by taking
    every coordinate above one half and repairing the parity with the
    cheapest flip.  Returns ``(S, violation)``.
    """
    inside = [i for i in neighbors if 2 * x[i] > 1]
    if len(inside) % 2 == 0:
        flip = min(neighbors, key=lambda i: (abs(1 - 2 * x[i]), i))
        if flip in inside:
            inside.remove(flip)
        else:
            inside.append(flip)
    S = set(inside)
    violation = 1 - sum((1 - x[i] for i in S), Fraction(0)) - sum(
        (x[i] for i in neighbors if i not in S), Fraction(0)
    )
    return tuple(sorted(S)), violation


def _cut(neighbors, S) -> Constraint:
    inside = set(S)
    return Constraint({v: Fraction(1 if v in inside else -1) for v in neighbors}, Rel.LE, Fraction(len(S) - 1))


def _adaptive_solve(graph, objective, sense, extra, cuts: dict):
    """Optimize over the polytope by adding violated odd-set inequalities on demand.

    ``cuts`` maps ``(check, S)`` to its constraint and is extended in place, so
    that a second call starts from the inequalities the first one needed.  The
    loop stops when the relaxed optimum satisfies every inequality of every
    check, at which point it is optimal over the full polytope.
    """
    bounds = tuple((Fraction(0), Fraction(1)) for _ in range(graph.n_vars))
    while True:
        lp = LinearProgram(graph.n_vars, objective, sense, tuple(extra) + tuple(cuts.values()), bounds)
        out = solve(lp)
        assert out.status is Status.OPTIMAL
        added = False
        for c, vs in enumerate(graph.check_adj):
            if not vs:
                continue
            S, viol = most_violated_cut(out.point, vs)
            if viol > 0:
                cuts[(c, S)] = _cut(vs, S)
                added = True
        if not added:
            return out


def lp_decode(graph: TannerGraph, gamma: Sequence, method: str = "adaptive") -> DecodeResult:
    """Decide whether zero is the unique minimizer of ``gamma . x`` over the polytope.

    A first LP minimizes the cost.  If the minimum is zero, a second LP
    maximizes ``sum(x)`` over the optimal face ``{x in P : gamma . x <= 0}``;
    zero is the unique optimum exactly when that maximum is zero.

    ``method="full"`` writes out every inequality of the polytope;
    ``"adaptive"`` adds them as they become violated and reaches the same
    optima.
    """
    gamma = [as_fraction(g) for g in gamma]
    if len(gamma) != graph.n_vars:
        raise DecoderError(f"gamma has length {len(gamma)}, graph has {graph.n_vars} variables")
    if method not in ("adaptive", "full"):
        raise DecoderError(f"unknown method {method!r}")
    for c, vs in enumerate(graph.check_adj):
        if len(vs) > MAX_CHECK_DEGREE:
            raise DecoderError(f"check {c} has degree {len(vs)} > {MAX_CHECK_DEGREE}")
    if all(g > 0 for g in gamma):
        # strictly positive costs vanish only at the origin of the unit cube
        return DecodeResult(True, Fraction(0))
    cost = {i: g for i, g in enumerate(gamma) if g}
    ones = {i: Fraction(1) for i in range(graph.n_vars)}
    on_face = Constraint(dict(cost), Rel.LE, Fraction(0))
    if method == "full":
        region = fundamental_polytope_constraints(graph)
        first = solve(region.with_objective(cost, Sense.MIN))
        if first.value < 0:
            return DecodeResult(False, first.value, first.point)
        second = solve(
            LinearProgram(region.num_vars, ones, Sense.MAX, region.constraints + (on_face,), region.bounds)
        )
    else:
        cuts: dict = {}
        first = _adaptive_solve(graph, cost, Sense.MIN, (), cuts)
        if first.value < 0:
            return DecodeResult(False, first.value, first.point)
        second = _adaptive_solve(graph, ones, Sense.MAX, (on_face,), cuts)
    assert second.status is Status.OPTIMAL
    if second.value > 0:
        return DecodeResult(False, first.value, second.point)
    return DecodeResult(True, first.value)


def _nullspace_vector(rows: list[list[Fraction]], m: int) -> list[Fraction] | None:
    """Basis vector of the kernel when it is one-dimensional, else None."""
    A = [list(r) for r in rows]
    pivots = []
    r = 0
    for col in range(m):
        piv = next((i for i in range(r, len(A)) if A[i][col] != 0), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        p = A[r][col]
        A[r] = [x / p for x in A[r]]
        for i in range(len(A)):
            if i != r and A[i][col] != 0:
                f = A[i][col]
                A[i] = [a - f * b for a, b in zip(A[i], A[r])]
        pivots.append(col)
        r += 1
    free = [c for c in range(m) if c not in pivots]
    if len(free) != 1:
        return None
    f = free[0]
    x = [Fraction(0)] * m
    x[f] = Fraction(1)
    for i, col in enumerate(pivots):
        x[col] = -A[i][f]
    return x


def _primitive(x: list[Fraction]) -> tuple[int, ...]:
    den = math.lcm(*(v.denominator for v in x))
    ints = [int(v * den) for v in x]
    g = math.gcd(*ints)
    return tuple(v // g for v in ints)


def parity_cone_extreme_rays(m: int) -> list[tuple[int, ...]]:
    """Extreme rays of ``{y >= 0 : sum_{i != i0} y_i >= y_i0 for all i0}``.

    Every choice of ``m - 1`` tight inequalities with a one-dimensional
    solution space is tried; the primitive integer generator is kept when it
    lies in the cone.  Rays are returned sorted.
    """
    if not 2 <= m <= 7:
        raise DecoderError("m must lie in [2, 7]")
    ineqs = []
    for i in range(m):
        e = [Fraction(0)] * m
        e[i] = Fraction(1)
        ineqs.append(e)
    for i0 in range(m):
        ineqs.append([Fraction(-1 if i == i0 else 1) for i in range(m)])

    def inside(y):
        return all(sum(a * b for a, b in zip(row, y)) >= 0 for row in ineqs)

    rays = set()
    for tight in combinations(ineqs, m - 1):
        y = _nullspace_vector(list(tight), m)
        if y is None:
            continue
        for cand in (y, [-v for v in y]):
            if inside(cand):
                rays.add(_primitive(cand))
    return sorted(rays)


def weight_two_indicators(m: int) -> list[tuple[int, ...]]:
    out = []
    for i, j in combinations(range(m), 2):
        out.append(tuple(1 if t in (i, j) else 0 for t in range(m)))
    return sorted(out)
