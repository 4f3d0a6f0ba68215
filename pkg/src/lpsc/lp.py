"""Exact rational linear programming.

A small dictionary-form simplex over the rationals.  Pricing is Dantzig's
largest-coefficient rule with a fall back to Bland's least-index rule on
long degenerate stretches, so runs are deterministic and cannot cycle.  Internally the
arithmetic uses ``gmpy2.mpq`` when it is installed (it is much faster than
``fractions.Fraction``); every value crossing the public interface is a
``Fraction``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

try:  # pragma: no cover - depends on the environment
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction


class LpError(ValueError):
    """Raised for malformed linear programs."""


class Sense(enum.Enum):
    MIN = "min"
    MAX = "max"


class Rel(enum.Enum):
    LE = "<="
    EQ = "=="
    GE = ">="


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions, mpq values and ``"p/q"`` strings to Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        raise TypeError("floats are not accepted in exact code paths")
    return Fraction(int(x.numerator), int(x.denominator))


def format_rational(x) -> str:
    """Serialize a rational as ``"p/q"`` (``q`` is always present)."""
    x = as_fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(s: str) -> Fraction:
    return Fraction(s)


@dataclass(frozen=True)
class Constraint:
    """``sum(coeffs[i] * x[i]) rel rhs`` with sparse integer-keyed coefficients."""

    coeffs: Mapping[int, Fraction]
    rel: Rel
    rhs: Fraction


@dataclass(frozen=True)
class LinearProgram:
    """A linear program in ``num_vars`` variables.

    ``bounds[i]`` is a pair ``(lo, hi)`` where ``None`` means unbounded on that
    side.  When ``bounds`` is empty every variable is taken to be ``>= 0``.
    """

    num_vars: int
    objective: Mapping[int, Fraction] = field(default_factory=dict)
    sense: Sense = Sense.MAX
    constraints: tuple[Constraint, ...] = ()
    bounds: tuple[tuple[Fraction | None, Fraction | None], ...] = ()

    def with_objective(self, objective: Mapping[int, object], sense: Sense) -> "LinearProgram":
        return replace(self, objective=_sparse(objective), sense=sense)

    def variable_bounds(self, i: int):
        if not self.bounds:
            return (Fraction(0), None)
        return self.bounds[i]


@dataclass(frozen=True)
class LpOutcome:
    status: Status
    value: Fraction | None = None
    point: tuple[Fraction, ...] | None = None
    duals: tuple[Fraction, ...] | None = None

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def _sparse(coeffs) -> dict[int, Fraction]:
    if isinstance(coeffs, Mapping):
        items = coeffs.items()
    else:
        items = enumerate(coeffs)
    return {int(i): as_fraction(a) for i, a in items if a != 0}


class LpBuilder:
    """Incremental construction of a :class:`LinearProgram`."""

    def __init__(self) -> None:
        self._bounds: list[tuple[Fraction | None, Fraction | None]] = []
        self._rows: list[Constraint] = []
        self._objective: dict[int, Fraction] = {}
        self._sense = Sense.MAX

    def add_var(self, lo=0, hi=None) -> int:
        lo = None if lo is None else as_fraction(lo)
        hi = None if hi is None else as_fraction(hi)
        self._bounds.append((lo, hi))
        return len(self._bounds) - 1

    def add(self, coeffs, rel: Rel, rhs) -> None:
        self._rows.append(Constraint(_sparse(coeffs), rel, as_fraction(rhs)))

    def objective(self, coeffs, sense: Sense) -> None:
        self._objective = _sparse(coeffs)
        self._sense = sense

    def build(self) -> LinearProgram:
        return LinearProgram(
            num_vars=len(self._bounds),
            objective=dict(self._objective),
            sense=self._sense,
            constraints=tuple(self._rows),
            bounds=tuple(self._bounds),
        )


def make_lp(objective, sense: Sense, rows, bounds=None) -> LinearProgram:
    """Build an LP from dense data.

    ``rows`` is a sequence of ``(coeffs, rel, rhs)`` where ``coeffs`` is a dense
    list of length ``len(objective)``.
    """
    n = len(objective)
    constraints = []
    for coeffs, rel, rhs in rows:
        if len(coeffs) != n:
            raise LpError(f"constraint has {len(coeffs)} coefficients, expected {n}")
        constraints.append(Constraint(_sparse(coeffs), Rel(rel), as_fraction(rhs)))
    if bounds is None:
        bnds: tuple = ()
    else:
        if len(bounds) != n:
            raise LpError(f"got {len(bounds)} bounds for {n} variables")
        bnds = tuple(
            (None if lo is None else as_fraction(lo), None if hi is None else as_fraction(hi))
            for lo, hi in bounds
        )
    return LinearProgram(n, _sparse(objective), sense, tuple(constraints), bnds)


def _check_dimensions(lp: LinearProgram) -> None:
    n = lp.num_vars
    if lp.bounds and len(lp.bounds) != n:
        raise LpError(f"got {len(lp.bounds)} bounds for {n} variables")
    for i in lp.objective:
        if not 0 <= i < n:
            raise LpError(f"objective index {i} out of range for {n} variables")
    for row in lp.constraints:
        for i in row.coeffs:
            if not 0 <= i < n:
                raise LpError(f"constraint index {i} out of range for {n} variables")
    for lo, hi in lp.bounds:
        if lo is not None and hi is not None and lo > hi:
            pass  # simply infeasible, reported by solve


DEGENERATE_STREAK = 50


class _Dictionary:
    """Simplex dictionary ``x_B = b + sum_j d[j] x_j`` over nonbasic ``x_j``.

    Rows and the objective are sparse dicts.  ``col`` tracks, for every
    nonbasic variable, the set of rows in which it appears, which keeps the
    ratio test and the pivot update proportional to the column size.
    """

    def __init__(self, basis, rhs, rows, objectives):
        self.basis = basis
        self.rhs = rhs
        self.rows = rows
        self.objs = objectives  # list of [const, dict]
        self.col: dict[int, set[int]] = {}
        for r, row in enumerate(rows):
            for j in row:
                self.col.setdefault(j, set()).add(r)
        self.frozen = set()  # rows excluded from ratio tests (free basics)

    def pivot(self, r: int, j: int) -> None:
        row = self.rows[r]
        leaving = self.basis[r]
        a = row.pop(j)
        inv = 1 / a
        new = {k: -v * inv for k, v in row.items()}
        new[leaving] = inv
        b = -self.rhs[r] * inv
        for k in row:
            self.col[k].discard(r)
        rs = self.col.pop(j)
        rs.discard(r)
        self.rows[r] = new
        self.rhs[r] = b
        self.basis[r] = j
        for k in new:
            self.col.setdefault(k, set()).add(r)
        for i in rs:
            other = self.rows[i]
            c = other.pop(j)
            self.rhs[i] += c * b
            for k, v in new.items():
                nv = other.get(k, 0) + c * v
                if nv:
                    if k not in other:
                        self.col[k].add(i)
                    other[k] = nv
                elif k in other:
                    del other[k]
                    self.col[k].discard(i)
        for obj in self.objs:
            c = obj[1].pop(j, 0)
            if c:
                obj[0] += c * b
                for k, v in new.items():
                    nv = obj[1].get(k, 0) + c * v
                    if nv:
                        obj[1][k] = nv
                    else:
                        obj[1].pop(k, None)

    def ratio_row(self, j: int):
        best = None
        best_ratio = None
        for r in self.col.get(j, ()):
            if r in self.frozen:
                continue
            d = self.rows[r][j]
            if d < 0:
                ratio = self.rhs[r] / -d
                if (
                    best is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and self.basis[r] < self.basis[best])
                ):
                    best, best_ratio = r, ratio
        return best

    def optimize(self, obj_index: int) -> bool:
        """Pivot on objective ``obj_index`` until optimal.  False means unbounded.

        Entering variables are chosen by largest reduced cost.  After
        ``DEGENERATE_STREAK`` consecutive degenerate pivots the least-index
        rule takes over until the objective moves again; a run of degenerate
        Bland pivots cannot cycle, and every nondegenerate pivot strictly
        improves the objective, so the method terminates.
        """
        obj = self.objs[obj_index]
        streak = 0
        while True:
            entering = None
            if streak >= DEGENERATE_STREAK:
                for k, v in obj[1].items():
                    if v > 0 and (entering is None or k < entering):
                        entering = k
            else:
                best = 0
                for k, v in obj[1].items():
                    if v > best or (v == best and v > 0 and k < entering):
                        entering, best = k, v
            if entering is None:
                return True
            r = self.ratio_row(entering)
            if r is None:
                return False
            streak = streak + 1 if self.rhs[r] == 0 else 0
            self.pivot(r, entering)


def solve(lp: LinearProgram) -> LpOutcome:
    """Solve ``lp`` exactly.

    Returns an optimal basic point together with one shadow price per
    constraint (the rate of change of the optimal value per unit of
    right-hand side), or reports infeasibility or unboundedness.  Raises
    :class:`LpError` on dimension mismatches.
    """
    _check_dimensions(lp)
    n = lp.num_vars
    Q = _Q

    # x_i = off_i + sgn_i * y_i, with y_i >= 0 unless the variable is free.
    off = [Q(0)] * n
    sgn = [1] * n
    free = []
    extra_rows = []  # (var, upper) meaning y_var <= upper
    for i in range(n):
        lo, hi = lp.variable_bounds(i)
        if lo is not None:
            off[i] = Q(lo)
            if hi is not None:
                if hi < lo:
                    return LpOutcome(Status.INFEASIBLE)
                extra_rows.append((i, Q(hi) - Q(lo)))
        elif hi is not None:
            off[i] = Q(hi)
            sgn[i] = -1
        else:
            free.append(i)

    # Every row is stored as  s = b + sum d_j y_j  with s >= 0.
    rows: list[dict] = []
    rhs: list = []
    origin: list = []  # (constraint index, orientation) or None for bound rows

    def add_le(coeffs: dict, bound, src=None) -> None:
        # sum a_j y_j <= bound   ->   s = bound - sum a_j y_j
        rows.append({j: -a for j, a in coeffs.items() if a})
        rhs.append(bound)
        origin.append(src)

    for k, con in enumerate(lp.constraints):
        coeffs = {}
        shift = Q(0)
        for i, a in con.coeffs.items():
            a = Q(a)
            shift += a * off[i]
            coeffs[i] = a * sgn[i]
        b = Q(con.rhs) - shift
        if con.rel in (Rel.LE, Rel.EQ):
            add_le(coeffs, b, (k, 1))
        if con.rel in (Rel.GE, Rel.EQ):
            add_le({j: -a for j, a in coeffs.items()}, -b, (k, -1))
    for i, ub in extra_rows:
        add_le({i: Q(1)}, ub)

    m = len(rows)
    # Drop rows that are empty after cancellation.
    keep_rows, keep_rhs, keep_origin = [], [], []
    for row, b, src in zip(rows, rhs, origin):
        if not row:
            if b < 0:
                return LpOutcome(Status.INFEASIBLE)
            continue
        keep_rows.append(row)
        keep_rhs.append(b)
        keep_origin.append(src)
    rows, rhs, origin = keep_rows, keep_rhs, keep_origin
    m = len(rows)
    slack_ids = list(range(n, n + m))

    sign = 1 if lp.sense is Sense.MAX else -1
    cost = {}
    const = Q(0)
    for i, c in lp.objective.items():
        c = Q(c)
        const += c * off[i]
        if c:
            cost[i] = sign * c * sgn[i]
    phase2 = [Q(0), cost]
    D = _Dictionary(list(slack_ids), rhs, rows, [phase2])

    # Phase 0: make every free variable basic and retire its row.
    unbounded_direction = False
    for j in free:
        candidates = [r for r in D.col.get(j, ()) if r not in D.frozen]
        if not candidates:
            if phase2[1].get(j, 0):
                unbounded_direction = True
            phase2[1].pop(j, None)
            continue
        r = min(candidates, key=lambda r: (len(D.rows[r]), D.basis[r]))
        D.pivot(r, j)
        D.frozen.add(r)
    # Snapshot the retired rows: no further pivot touches their variables
    # because free variables never leave the basis again.
    active = [r for r in range(m) if r not in D.frozen]
    retired = [(D.basis[r], D.rhs[r], dict(D.rows[r])) for r in range(m) if r in D.frozen]
    D2 = _Dictionary(
        [D.basis[r] for r in active],
        [D.rhs[r] for r in active],
        [D.rows[r] for r in active],
        [phase2],
    )
    D = D2

    # Phase 1 with a single auxiliary variable on the negative rows.
    neg = [r for r in range(len(D.rows)) if D.rhs[r] < 0]
    if neg:
        aux = n + m
        for r in neg:
            D.rows[r][aux] = Q(1)
            D.col.setdefault(aux, set()).add(r)
        phase1 = [Q(0), {aux: Q(-1)}]
        D.objs.append(phase1)
        r0 = min(neg, key=lambda r: (D.rhs[r], D.basis[r]))
        D.pivot(r0, aux)
        D.optimize(1)
        if phase1[0] < 0:
            return LpOutcome(Status.INFEASIBLE)
        if aux in D.basis:
            r = D.basis.index(aux)
            if D.rows[r]:
                D.pivot(r, min(D.rows[r]))
            else:
                # the auxiliary row reads x0 = 0 and carries no information
                del D.rows[r], D.rhs[r], D.basis[r]
                D = _Dictionary(D.basis, D.rhs, D.rows, D.objs)
        for r in D.col.pop(aux, ()):
            D.rows[r].pop(aux, None)
        phase2[1].pop(aux, None)
        D.objs.pop()

    if unbounded_direction:
        return LpOutcome(Status.UNBOUNDED)
    if not D.optimize(0):
        return LpOutcome(Status.UNBOUNDED)

    values = {}
    for r, v in enumerate(D.basis):
        values[v] = D.rhs[r]
    for v, b, row in retired:
        values[v] = b + sum(d * values.get(k, 0) for k, d in row.items())
    y = [values.get(i, Q(0)) for i in range(n)]
    x = [as_fraction(off[i] + sgn[i] * y[i]) for i in range(n)]
    value = sum((c * x[i] for i, c in lp.objective.items()), Fraction(0))
    _verify_point(lp, x)
    duals = [Q(0)] * len(lp.constraints)
    for r, src in enumerate(origin):
        if src is not None:
            k, orient = src
            duals[k] += -phase2[1].get(n + r, 0) * sign * orient
    return LpOutcome(Status.OPTIMAL, value, tuple(x), tuple(as_fraction(d) for d in duals))


def _verify_point(lp: LinearProgram, x: Sequence[Fraction]) -> None:
    for i in range(lp.num_vars):
        lo, hi = lp.variable_bounds(i)
        assert lo is None or x[i] >= lo, "simplex returned a point violating a bound"
        assert hi is None or x[i] <= hi, "simplex returned a point violating a bound"
    for con in lp.constraints:
        lhs = sum((a * x[i] for i, a in con.coeffs.items()), Fraction(0))
        ok = {Rel.LE: lhs <= con.rhs, Rel.EQ: lhs == con.rhs, Rel.GE: lhs >= con.rhs}[con.rel]
        assert ok, "simplex returned an infeasible point"


def max_coordinate_over(region: LinearProgram, index: int) -> LpOutcome:
    """Maximize coordinate ``index`` over the feasible region of ``region``."""
    if not 0 <= index < region.num_vars:
        raise LpError(f"index {index} out of range")
    return solve(region.with_objective({index: 1}, Sense.MAX))


def evaluate(coeffs: Mapping[int, Fraction], point: Iterable[Fraction]) -> Fraction:
    x = list(point)
    return sum((a * x[i] for i, a in coeffs.items()), Fraction(0))
