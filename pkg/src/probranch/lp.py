"""Exact-rational linear programming.

A small dense two-phase simplex over exact rationals with Bland's rule,
which guarantees termination and, together with exact arithmetic, makes
every feasibility answer and optimum exact.  All variables are
implicitly non-negative; constraints are equalities or <= inequalities
(slacks are added internally).

This is deliberately minimal: the polytopes arising from combined
transitions and weak-transition flows at desk scale have tens of
variables, so a dense tableau is both simple and fast enough.
"""

from __future__ import annotations

from .rat import ZERO, ONE


class LP:
    """Incremental builder for feasibility and optimization queries."""

    def __init__(self):
        self._index: dict = {}
        self._names: list = []
        self._rows: list = []  # (coeffs dict idx->Rat, rel, rhs)

    def var(self, name):
        """Register (idempotently) a non-negative variable."""
        if name not in self._index:
            self._index[name] = len(self._names)
            self._names.append(name)
        return name

    def add_eq(self, coeffs: dict, rhs):
        self._rows.append((self._materialize(coeffs), "==", rhs))

    def add_le(self, coeffs: dict, rhs):
        self._rows.append((self._materialize(coeffs), "<=", rhs))

    def _materialize(self, coeffs: dict) -> dict:
        out = {}
        for name, c in coeffs.items():
            if c == ZERO:
                continue
            out[self._index[name]] = out.get(self._index[name], ZERO) + c
        return out

    def _standard_form(self):
        n = len(self._names)
        rows = []
        rhs = []
        n_slack = sum(1 for _, rel, _ in self._rows if rel == "<=")
        total = n + n_slack
        slack_at = n
        for coeffs, rel, b in self._rows:
            row = [ZERO] * total
            for j, c in coeffs.items():
                row[j] = c
            if rel == "<=":
                row[slack_at] = ONE
                slack_at += 1
            if b < ZERO:
                row = [-c for c in row]
                b = -b
            rows.append(row)
            rhs.append(b)
        return rows, rhs, total

    def feasible(self):
        """A feasible assignment as {name: Rat}, or None."""
        return self.minimize({})

    def minimize(self, objective: dict):
        """Minimize a linear objective; returns {name: Rat} or None.

        The returned assignment includes the special key ``"__value__"``
        holding the optimum.
        """
        rows, rhs, total = self._standard_form()
        cost = [ZERO] * total
        for name, c in objective.items():
            cost[self._index[name]] += c
        solution = _simplex(rows, rhs, cost)
        if solution is None:
            return None
        x, value = solution
        out = {name: x[j] for name, j in self._index.items()}
        out["__value__"] = value
        return out

    def maximize(self, objective: dict):
        res = self.minimize({k: -v for k, v in objective.items()})
        if res is None:
            return None
        res["__value__"] = -res["__value__"]
        return res


def _simplex(rows, rhs, cost):
    """Solve min cost.x st rows.x = rhs, x >= 0 (rhs >= 0 on entry).

    Returns (x, value) or None when infeasible.  Unboundedness cannot
    occur for the bounded mass/flow polytopes built in this package but
    is reported as a ValueError defensively.
    """
    m = len(rows)
    n = len(rows[0]) if m else len(cost)
    if m == 0:
        return [ZERO] * n, ZERO

    # Phase 1 tableau with one artificial variable per row.
    width = n + m
    tab = [list(rows[i]) + [ONE if k == i else ZERO for k in range(m)] + [rhs[i]]
           for i in range(m)]
    basis = [n + i for i in range(m)]
    # Reduced-cost row z_j - c_j for min sum(artificials); the b-cell
    # holds the current objective value (the artificial mass left).
    zrow = [ZERO] * (width + 1)
    for i in range(m):
        for j in range(n):
            zrow[j] += tab[i][j]
        zrow[width] += tab[i][width]

    _pivot_to_optimum(tab, basis, zrow, width)
    if zrow[width] != ZERO:
        return None  # min sum of artificials > 0: infeasible

    # Drive remaining artificials out of the basis; drop redundant rows.
    keep = []
    for i in range(m):
        if basis[i] >= n:
            pivot_col = next((j for j in range(n) if tab[i][j] != ZERO), None)
            if pivot_col is None:
                continue  # redundant row
            _pivot(tab, basis, zrow, i, pivot_col, width)
        keep.append(i)
    tab = [tab[i] for i in keep]
    basis = [basis[i] for i in keep]
    m = len(tab)

    # Phase 2 with the real objective (artificial columns masked off).
    for row in tab:
        for j in range(n, width):
            row[j] = ZERO
    zrow = [ZERO] * (width + 1)
    for j in range(n):
        zrow[j] = -cost[j]
    for i in range(m):
        cb = cost[basis[i]] if basis[i] < n else ZERO
        if cb != ZERO:
            for j in range(width + 1):
                zrow[j] += cb * tab[i][j]
    for j in range(n, width):
        zrow[j] = -ONE  # forbid artificials from re-entering

    _pivot_to_optimum(tab, basis, zrow, width)

    x = [ZERO] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tab[i][width]
    return x, zrow[width]


def _pivot_to_optimum(tab, basis, zrow, width):
    # Maintain zrow[j] = z_j - c_j; optimal when all entries <= 0.
    while True:
        enter = None
        for j in range(width):
            if zrow[j] > ZERO:
                enter = j  # Bland: smallest index
                break
        if enter is None:
            return
        leave = None
        best = None
        for i in range(len(tab)):
            a = tab[i][enter]
            if a > ZERO:
                ratio = tab[i][width] / a
                if best is None or ratio < best or (
                        ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:
            raise ValueError("LP unbounded; malformed constraint system")
        _pivot(tab, basis, zrow, leave, enter, width)


def _pivot(tab, basis, zrow, row, col, width):
    pivot_row = tab[row]
    p = pivot_row[col]
    if p != ONE:
        inv = ONE / p
        for j in range(width + 1):
            if pivot_row[j] != ZERO:
                pivot_row[j] *= inv
    for i, other in enumerate(tab):
        if i == row:
            continue
        f = other[col]
        if f != ZERO:
            for j in range(width + 1):
                if pivot_row[j] != ZERO:
                    other[j] -= f * pivot_row[j]
    f = zrow[col]
    if f != ZERO:
        for j in range(width + 1):
            if pivot_row[j] != ZERO:
                zrow[j] -= f * pivot_row[j]
    basis[row] = col
