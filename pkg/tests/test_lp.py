from fractions import Fraction
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from lpsc.lp import (
    LpBuilder,
    LpError,
    Rel,
    Sense,
    Status,
    format_rational,
    make_lp,
    max_coordinate_over,
    parse_rational,
    solve,
)

F = Fraction
FREE = (None, None)


def test_single_upper_bound():
    out = solve(make_lp([1], Sense.MAX, [([1], "<=", 3)]))
    assert out.status is Status.OPTIMAL
    assert out.value == 3 and out.point == (3,)


def test_infeasible():
    out = solve(make_lp([1], Sense.MAX, [([1], ">=", 1), ([1], "<=", 0)]))
    assert out.status is Status.INFEASIBLE


def test_unbounded_with_free_variables():
    out = solve(make_lp([1, 1], Sense.MAX, [([1, -1], "<=", 0)], bounds=[FREE, FREE]))
    assert out.status is Status.UNBOUNDED


def test_exact_third():
    out = solve(make_lp([1], Sense.MAX, [([1], "<=", F(1, 3))]))
    assert out.value == F(1, 3)
    assert isinstance(out.value, Fraction)


def test_dimension_mismatch():
    with pytest.raises(LpError):
        make_lp([1, 1], Sense.MAX, [([1], "<=", 1)])
    b = LpBuilder()
    b.add_var()
    b.add({3: 1}, Rel.LE, 1)
    with pytest.raises(LpError):
        solve(b.build())


def test_max_coordinate():
    lp = make_lp([0, 0], Sense.MAX, [([1, 1], "<=", 1), ([1, -1], "==", 0)])
    out = max_coordinate_over(lp, 1)
    assert out.value == F(1, 2)


def test_equalities_and_mixed_bounds():
    lp = make_lp(
        [1, 2], Sense.MIN,
        [([1, 1], "==", 4), ([1, -1], ">=", -2)],
        bounds=[FREE, (-1, 5)],
    )
    out = solve(lp)
    assert out.value == 3 and out.point == (5, -1)


def test_degenerate_cycling_example():
    # a classic degenerate LP on which the largest-coefficient rule cycles
    lp = make_lp(
        [F(3, 4), -150, F(1, 50), -6], Sense.MAX,
        [
            ([F(1, 4), -60, F(-1, 25), 9], "<=", 0),
            ([F(1, 2), -90, F(-1, 50), 3], "<=", 0),
            ([0, 0, 1, 0], "<=", 1),
        ],
    )
    out = solve(lp)
    assert out.value == F(1, 20)


def test_rational_format_roundtrip():
    for x in (F(0), F(-3, 7), F(5)):
        assert parse_rational(format_rational(x)) == x
    assert format_rational(F(5)) == "5/1"


def test_deterministic():
    lp = make_lp([1, 1, 1], Sense.MAX, [([1, 1, 0], "<=", 1), ([0, 1, 1], "<=", 1)])
    assert solve(lp) == solve(lp)


# --- oracle: enumerate every vertex of a bounded polyhedron -------------------


def unique_solution(A, b):
    """Gauss-Jordan over Fractions; None unless the square system is regular."""
    n = len(A)
    M = [[F(v) for v in row] + [F(bi)] for row, bi in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * bb for a, bb in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def vertex_oracle(c, sense, rows, box):
    """Best objective over vertices, or None when no vertex is feasible.

    Each of the rows and bounds is turned into a hyperplane; every choice of
    ``n`` hyperplanes with a unique intersection is tested for feasibility.
    """
    n = len(c)
    planes = []
    for a, rel, b in rows:
        planes.append((list(a), b))
    for i, (lo, hi) in enumerate(box):
        e = [0] * n
        e[i] = 1
        planes.append((e, lo))
        planes.append((e, hi))

    def feasible(x):
        for a, rel, b in rows:
            lhs = sum(ai * xi for ai, xi in zip(a, x))
            if rel == "<=" and lhs > b or rel == ">=" and lhs < b or rel == "==" and lhs != b:
                return False
        return all(lo <= xi <= hi for xi, (lo, hi) in zip(x, box))

    best = None
    for combo in combinations(planes, n):
        x = unique_solution([p[0] for p in combo], [p[1] for p in combo])
        if x is None or not feasible(x):
            continue
        val = sum(ci * xi for ci, xi in zip(c, x))
        if best is None or (val > best if sense is Sense.MAX else val < best):
            best = val
    return best


small_int = st.integers(min_value=-4, max_value=4)


@st.composite
def bounded_lps(draw):
    n = draw(st.integers(min_value=1, max_value=5))
    m = draw(st.integers(min_value=0, max_value=5))
    c = [draw(small_int) for _ in range(n)]
    rows = []
    for _ in range(m):
        a = [draw(small_int) for _ in range(n)]
        rel = draw(st.sampled_from(["<=", ">=", "=="]))
        b = F(draw(st.integers(-6, 6)), draw(st.integers(1, 3)))
        rows.append((a, rel, b))
    box = []
    for _ in range(n):
        lo = draw(st.integers(-3, 1))
        box.append((lo, lo + draw(st.integers(0, 4))))
    sense = draw(st.sampled_from([Sense.MAX, Sense.MIN]))
    return c, sense, rows, box


@settings(max_examples=150, deadline=None)
@given(bounded_lps())
def test_simplex_matches_vertex_enumeration(data):
    c, sense, rows, box = data
    out = solve(make_lp(c, sense, rows, bounds=box))
    expected = vertex_oracle(c, sense, rows, box)
    if expected is None:
        assert out.status is Status.INFEASIBLE
    else:
        assert out.status is Status.OPTIMAL
        assert out.value == expected


@settings(max_examples=60, deadline=None)
@given(bounded_lps())
def test_free_variable_reformulation(data):
    # replacing box bounds by explicit rows on free variables gives the same optimum
    c, sense, rows, box = data
    n = len(c)
    extra = []
    for i, (lo, hi) in enumerate(box):
        e = [0] * n
        e[i] = 1
        extra += [(e, ">=", lo), (e, "<=", hi)]
    a = solve(make_lp(c, sense, rows, bounds=box))
    b = solve(make_lp(c, sense, rows + extra, bounds=[FREE] * n))
    assert a.status == b.status
    assert a.value == b.value


@settings(max_examples=100, deadline=None)
@given(bounded_lps())
def test_shadow_prices_certify_optimality(data):
    # rewrite the box as explicit rows on nonnegative shifted variables, so the
    # dual of  max c.x, Ax (rel) b, x >= 0  applies verbatim
    c, sense, rows, box = data
    n = len(c)
    rows = list(rows)
    for i, (lo, hi) in enumerate(box):
        e = [0] * n
        e[i] = 1
        rows.append((e, "<=", hi))
    shift = [-lo for lo, _ in box]  # x = z - shift with z >= 0
    shifted = []
    for a, rel, b in rows:
        shifted.append((a, rel, b + sum(ai * si for ai, si in zip(a, shift))))
    out = solve(make_lp(c, sense, shifted))
    if out.status is not Status.OPTIMAL:
        return
    y = out.duals
    sgn = 1 if sense is Sense.MAX else -1
    for (a, rel, b), yi in zip(shifted, y):
        # shadow prices carry the sign implied by the row type
        if rel == "<=":
            assert sgn * yi >= 0
        elif rel == ">=":
            assert sgn * yi <= 0
    for j in range(n):
        col = sum(yi * a[j] for (a, _, _), yi in zip(shifted, y))
        assert sgn * col >= sgn * c[j]
    assert sum(yi * b for (_, _, b), yi in zip(shifted, y)) == out.value
