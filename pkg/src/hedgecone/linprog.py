"""Exact linear programming: dense Fraction tableau, two-phase simplex.

Pivoting uses Dantzig's rule (most negative reduced cost, lowest column
index on ties; leaving row = minimum ratio, ties broken by lowest basic
variable index).  After a run of consecutive degenerate pivots the rule
switches to Bland's rule until the objective strictly improves again, which
rules out cycling: an infinite pivot sequence would have to end in an
infinite all-degenerate stretch, which the Bland episodes make impossible.
Both rules are pure functions of the tableau, so every answer — including
the choice of optimal vertex under degeneracy — is deterministic for a
fixed construction order.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .rational import parse_rat

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpResult:
    status: str
    value: Fraction | None = None
    x: tuple[Fraction, ...] | None = None

    def __getitem__(self, var: int) -> Fraction:
        if self.x is None:
            raise ValueError(f"no solution available ({self.status})")
        return self.x[var]


class Lp:
    """Incremental LP builder over free or nonnegative scalar variables."""

    def __init__(self) -> None:
        self._nonneg: list[bool] = []
        self._rows: list[tuple[dict[int, Fraction], str, Fraction]] = []

    def var(self, *, nonneg: bool = False) -> int:
        self._nonneg.append(nonneg)
        return len(self._nonneg) - 1

    def vars(self, count: int, *, nonneg: bool = False) -> list[int]:
        return [self.var(nonneg=nonneg) for _ in range(count)]

    def add(
        self,
        coeffs: Mapping[int, object] | Iterable[tuple[int, object]],
        op: str,
        rhs: object,
    ) -> None:
        if op not in (">=", "<=", "=="):
            raise ValueError(f"unknown constraint operator {op!r}")
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        row: dict[int, Fraction] = {}
        for var, c in items:
            if not 0 <= var < len(self._nonneg):
                raise ValueError(f"unknown variable {var}")
            c = parse_rat(c) if not isinstance(c, Fraction) else c
            if c:
                row[var] = row.get(var, Fraction(0)) + c
        self._rows.append((row, op, parse_rat(rhs)))

    def add_dot(self, vars: Sequence[int], coeffs: Sequence[object], op: str, rhs: object) -> None:
        self.add(list(zip(vars, coeffs)), op, rhs)

    def minimize(self, objective: Mapping[int, object] | Iterable[tuple[int, object]]) -> LpResult:
        return self._solve(objective, sense=1)

    def maximize(self, objective: Mapping[int, object] | Iterable[tuple[int, object]]) -> LpResult:
        return self._solve(objective, sense=-1)

    # -- internals -----------------------------------------------------------

    def _columns(self) -> tuple[list[tuple[int, int]], int]:
        """Map variable -> (plus_col, minus_col or -1); return mapping and #cols."""
        cols: list[tuple[int, int]] = []
        n = 0
        for nonneg in self._nonneg:
            if nonneg:
                cols.append((n, -1))
                n += 1
            else:
                cols.append((n, n + 1))
                n += 2
        return cols, n

    def _solve(self, objective, sense: int) -> LpResult:
        items = objective.items() if isinstance(objective, Mapping) else list(objective)
        obj: dict[int, Fraction] = {}
        for var, c in items:
            c = parse_rat(c) if not isinstance(c, Fraction) else c
            obj[var] = obj.get(var, Fraction(0)) + c

        colmap, nstruct = self._columns()
        nslack = sum(1 for _, op, _ in self._rows if op != "==")
        ncols = nstruct + nslack

        # Dense rows in standard equality form A x = b, x >= 0.
        rows: list[list[Fraction]] = []
        slack_cols: list[int | None] = []
        slack_at = nstruct
        for rowdict, op, rhs in self._rows:
            dense = [Fraction(0)] * (ncols + 1)
            for var, c in rowdict.items():
                plus, minus = colmap[var]
                dense[plus] += c
                if minus >= 0:
                    dense[minus] -= c
            if op == ">=":
                dense[slack_at] = Fraction(-1)
                slack_cols.append(slack_at)
                slack_at += 1
            elif op == "<=":
                dense[slack_at] = Fraction(1)
                slack_cols.append(slack_at)
                slack_at += 1
            else:
                slack_cols.append(None)
            dense[ncols] = rhs
            sc = slack_cols[-1]
            if rhs < 0 or (rhs == 0 and sc is not None and dense[sc] < 0):
                # Negating keeps the rhs nonnegative and, for homogeneous
                # inequality rows, turns the slack into a ready-made basic
                # column so phase 1 needs no artificial for the row.
                dense = [-x for x in dense]
            rows.append(dense)

        tableau, basis = self._phase1(rows, ncols, slack_cols)
        if tableau is None:
            return LpResult(INFEASIBLE)

        # Phase 2 objective over structural columns.
        cost = [Fraction(0)] * ncols
        for var, c in obj.items():
            plus, minus = colmap[var]
            cost[plus] += sense * c
            if minus >= 0:
                cost[minus] -= sense * c
        z = self._reduced_costs(tableau, basis, cost, ncols)
        status = self._iterate(tableau, basis, z, ncols)
        if status == UNBOUNDED:
            return LpResult(UNBOUNDED)

        xcols = [Fraction(0)] * ncols
        for i, b in enumerate(basis):
            xcols[b] = tableau[i][-1]
        x = []
        for plus, minus in colmap:
            x.append(xcols[plus] - (xcols[minus] if minus >= 0 else Fraction(0)))
        value = sum((obj.get(v, Fraction(0)) * x[v] for v in obj), Fraction(0))
        return LpResult(OPTIMAL, value, tuple(x))

    @staticmethod
    def _reduced_costs(tableau, basis, cost, ncols) -> list[Fraction]:
        z = list(cost) + [Fraction(0)]
        for i, b in enumerate(basis):
            cb = cost[b]
            if cb:
                z = [zj if not tj else zj - cb * tj for zj, tj in zip(z, tableau[i])]
        return z

    def _phase1(self, rows: list[list[Fraction]], ncols: int, slack_cols):
        # Rows whose slack enters with +1 start basic on the slack; only the
        # rest receive an artificial column.
        m = len(rows)
        need_art = [
            i for i in range(m)
            if slack_cols[i] is None or rows[i][slack_cols[i]] != 1
        ]
        nart = len(need_art)
        art_of = {r: ncols + k for k, r in enumerate(need_art)}
        tableau = []
        basis = []
        for i, dense in enumerate(rows):
            art = [Fraction(0)] * nart
            if i in art_of:
                art[art_of[i] - ncols] = Fraction(1)
                basis.append(art_of[i])
            else:
                basis.append(slack_cols[i])
            tableau.append(dense[:ncols] + art + [dense[ncols]])
        cost = [Fraction(0)] * ncols + [Fraction(1)] * nart
        z = self._reduced_costs(tableau, basis, cost, ncols + nart)
        status = self._iterate(tableau, basis, z, ncols + nart)
        assert status == OPTIMAL  # phase-1 objective is bounded below by 0
        if -z[-1] != 0:  # z[-1] = -(objective value)
            return None, None
        # Pivot artificials out of the basis; drop rows that prove redundant.
        for i in range(m - 1, -1, -1):
            if i < len(basis) and basis[i] >= ncols:
                col = next((j for j in range(ncols) if tableau[i][j] != 0), None)
                if col is None:
                    tableau.pop(i)
                    basis.pop(i)
                else:
                    self._pivot(tableau, basis, i, col)
        tableau = [row[:ncols] + [row[-1]] for row in tableau]
        return tableau, basis

    @staticmethod
    def _pivot(tableau, basis, row, col) -> None:
        piv = tableau[row][col]
        if piv != 1:
            tableau[row] = [x if not x else x / piv for x in tableau[row]]
        prow = tableau[row]
        for i, r in enumerate(tableau):
            if i != row:
                f = r[col]
                if f:
                    tableau[i] = [a if not b else a - f * b for a, b in zip(r, prow)]
        basis[row] = col

    def _iterate(self, tableau, basis, z, ncols) -> str:
        stall = 0
        stall_limit = max(30, len(tableau))
        bland = False
        while True:
            col = None
            if bland:
                for j in range(ncols):
                    if z[j] < 0:
                        col = j
                        break
            else:
                worst = Fraction(0)
                for j in range(ncols):
                    if z[j] < worst:
                        worst = z[j]
                        col = j
            if col is None:
                return OPTIMAL
            best = None
            row = -1
            for i, r in enumerate(tableau):
                if r[col] > 0:
                    ratio = r[-1] / r[col]
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[row]):
                        best, row = ratio, i
            if row < 0:
                return UNBOUNDED
            self._pivot(tableau, basis, row, col)
            f = z[col]
            z[:] = [a if not b else a - f * b for a, b in zip(z, tableau[row])]
            if best == 0:
                stall += 1
                if stall >= stall_limit:
                    bland = True
            else:
                stall = 0
                bland = False


def optimize_over(poly, objective: Sequence[object], sense: str = "min") -> LpResult:
    """Exact min/max of a linear functional over a polyhedron (via its H-rep)."""
    from .geometry import Polyhedron  # local import to keep modules decoupled

    assert isinstance(poly, Polyhedron)
    obj = [parse_rat(c) for c in objective]
    if len(obj) != poly.dim:
        raise ValueError("objective dimension mismatch")
    lp = Lp()
    xs = lp.vars(poly.dim)
    for n, o in poly.hrep():
        lp.add_dot(xs, n, ">=", o)
    coeffs = {xs[i]: c for i, c in enumerate(obj) if c}
    return lp.minimize(coeffs) if sense == "min" else lp.maximize(coeffs)
