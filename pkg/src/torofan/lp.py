"""Exact rational linear programming: two-phase tableau simplex with Bland's rule."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .linalg import to_fraction


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "infeasible", "unbounded"
    x: tuple | None = None
    value: Fraction | None = None

    @property
    def feasible(self) -> bool:
        return self.status in ("optimal", "unbounded")


def _pivot(tab: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    prow = tab[row]
    lead = prow[col]
    if lead != 1:
        tab[row] = prow = [x / lead for x in prow]
    nz = [j for j, x in enumerate(prow) if x != 0]
    for i, r in enumerate(tab):
        if i != row:
            f = r[col]
            if f != 0:
                for j in nz:
                    r[j] -= f * prow[j]
    basis[row] = col


def _simplex(tab: list[list[Fraction]], basis: list[int], ncols: int, allowed: int) -> str:
    """Minimize the objective stored in the last row (reduced costs); columns >= allowed never enter."""
    obj = tab[-1]
    while True:
        enter = next((j for j in range(allowed) if obj[j] < 0), None)
        if enter is None:
            return "optimal"
        best = None
        for i in range(len(tab) - 1):
            a = tab[i][enter]
            if a > 0:
                ratio = tab[i][ncols] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(tab, basis, best[1], enter)
        obj = tab[-1]


def simplex_standard(a_eq: Sequence[Sequence], b_eq: Sequence, cost: Sequence) -> LPResult:
    """min cost·x subject to A x = b, x >= 0."""
    m = len(a_eq)
    n = len(cost)
    rows = [[to_fraction(x) for x in r] for r in a_eq]
    rhs = [to_fraction(x) for x in b_eq]
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-x for x in rows[i]]
            rhs[i] = -rhs[i]
    ncols = n + m
    tab = []
    for i in range(m):
        art = [Fraction(0)] * m
        art[i] = Fraction(1)
        tab.append(rows[i] + art + [rhs[i]])
    basis = [n + i for i in range(m)]
    phase1 = [Fraction(0)] * (ncols + 1)
    for i in range(m):
        for j in range(n):
            phase1[j] -= tab[i][j]
        phase1[ncols] -= tab[i][ncols]
    tab.append(phase1)
    _simplex(tab, basis, ncols, n)
    if tab[-1][ncols] != 0:
        return LPResult("infeasible")
    # drive remaining artificials out of the basis
    for i in range(m):
        if basis[i] >= n:
            col = next((j for j in range(n) if tab[i][j] != 0), None)
            if col is not None:
                _pivot(tab, basis, i, col)
    keep = [i for i in range(m) if basis[i] < n]
    tab = [tab[i] for i in keep]
    basis = [basis[i] for i in keep]
    costs = [to_fraction(c) for c in cost]
    obj = costs + [Fraction(0)] * m + [Fraction(0)]
    for i, b in enumerate(basis):
        f = obj[b]
        if f != 0:
            obj = [o - f * t for o, t in zip(obj, tab[i])]
    tab.append(obj)
    status = _simplex(tab, basis, ncols, n)
    x = [Fraction(0)] * n
    for i, b in enumerate(basis):
        x[b] = tab[i][ncols]
    value = sum((c * v for c, v in zip(costs, x)), Fraction(0))
    return LPResult(status, tuple(x), value)


def linprog(
    cost: Sequence | None = None,
    a_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    a_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    bounds: Sequence | None = None,
    nvars: int | None = None,
) -> LPResult:
    """min cost·x s.t. a_ub x <= b_ub, a_eq x = b_eq, lo <= x <= hi (None = unbounded side).

    Variables are free unless bounds say otherwise.  Deterministic: the returned
    point is the basic solution reached by Bland's rule from a fixed starting tableau.
    """
    if nvars is None:
        if cost is not None:
            nvars = len(cost)
        elif a_ub:
            nvars = len(a_ub[0])
        elif a_eq:
            nvars = len(a_eq[0])
        else:
            nvars = 0
    cost = [Fraction(0)] * nvars if cost is None else [to_fraction(c) for c in cost]
    bounds = [(None, None)] * nvars if bounds is None else list(bounds)

    # x_j = lo_j + y_j (y_j >= 0) when lo is given, else x_j = y_j^+ - y_j^-
    columns: list[list[tuple[int, int]]] = []  # per original var: list of (std column, sign)
    shift = []
    ncol = 0
    extra_ub: list[tuple[int, Fraction]] = []
    for j, (lo, hi) in enumerate(bounds):
        if lo is not None:
            columns.append([(ncol, 1)])
            shift.append(to_fraction(lo))
            ncol += 1
            if hi is not None:
                extra_ub.append((j, to_fraction(hi)))
        elif hi is not None:
            columns.append([(ncol, -1)])  # x = hi - y
            shift.append(to_fraction(hi))
            ncol += 1
        else:
            columns.append([(ncol, 1), (ncol + 1, -1)])
            shift.append(Fraction(0))
            ncol += 2

    ub_rows = [list(r) for r in a_ub]
    ub_rhs = list(b_ub)
    for j, hi in extra_ub:
        r = [0] * nvars
        r[j] = 1
        ub_rows.append(r)
        ub_rhs.append(hi)

    nslack = len(ub_rows)
    width = ncol + nslack

    def expand(row):
        out = [Fraction(0)] * width
        const = Fraction(0)
        for j, a in enumerate(row):
            a = to_fraction(a)
            if a == 0:
                continue
            const += a * shift[j]
            for col, sign in columns[j]:
                out[col] += sign * a
        return out, const

    eq_rows, eq_rhs = [], []
    for i, r in enumerate(ub_rows):
        out, const = expand(r)
        out[ncol + i] = Fraction(1)
        eq_rows.append(out)
        eq_rhs.append(to_fraction(ub_rhs[i]) - const)
    for i, r in enumerate(a_eq):
        out, const = expand(r)
        eq_rows.append(out)
        eq_rhs.append(to_fraction(b_eq[i]) - const)
    std_cost, const_cost = expand(cost)

    res = simplex_standard(eq_rows, eq_rhs, std_cost)
    if res.status == "infeasible":
        return res
    y = res.x
    x = []
    for j in range(nvars):
        val = shift[j]
        for col, sign in columns[j]:
            val += sign * y[col]
        x.append(val)
    value = sum((c * v for c, v in zip(cost, x)), Fraction(0))
    return LPResult(res.status, tuple(x), value)


def feasible_point(
    a_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    a_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    nvars: int | None = None,
    bounds: Sequence | None = None,
) -> tuple | None:
    res = linprog(None, a_ub, b_ub, a_eq, b_eq, bounds=bounds, nvars=nvars)
    return res.x if res.feasible else None


def lexmin_point(
    nvars: int,
    order: Sequence[int],
    a_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    a_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    bounds: Sequence | None = None,
) -> tuple | None:
    """Lexicographically minimize the variables listed in `order`, fixing each optimum in turn."""
    a_eq = [list(r) for r in a_eq]
    b_eq = list(b_eq)
    point = feasible_point(a_ub, b_ub, a_eq, b_eq, nvars=nvars, bounds=bounds)
    if point is None:
        return None
    for j in order:
        cost = [0] * nvars
        cost[j] = 1
        res = linprog(cost, a_ub, b_ub, a_eq, b_eq, bounds=bounds, nvars=nvars)
        if res.status != "optimal":
            continue
        row = [0] * nvars
        row[j] = 1
        a_eq.append(row)
        b_eq.append(res.x[j])
        point = res.x
    return point
