"""Exact rational revised simplex for ``min c.x  s.t.  A x = b, x >= 0``.

Two phases with artificial variables, Bland's lowest-index rule for both
the entering and the leaving variable, and an explicitly maintained basis
inverse.  Every result carries a certificate that :func:`check_certificate`
replays with exact arithmetic:

* optimal -- primal ``x``, dual ``y`` with ``c - y A >= 0`` and ``c.x == b.y``;
* infeasible -- Farkas vector ``y`` with ``y A <= 0`` and ``y.b > 0``;
* unbounded -- feasible ``x`` and ray ``d >= 0`` with ``A d = 0``, ``c.d < 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from urnlaw.errors import ValidationError
from urnlaw.rational import as_fraction

ZERO = Fraction(0)
ONE = Fraction(1)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LPInstance:
    c: list
    A: list
    b: list

    def __post_init__(self):
        self.c = [as_fraction(v) for v in self.c]
        self.A = [[as_fraction(v) for v in row] for row in self.A]
        self.b = [as_fraction(v) for v in self.b]
        n = len(self.c)
        if len(self.A) != len(self.b):
            raise ValidationError(f"{len(self.A)} constraint rows but {len(self.b)} right-hand sides")
        for row in self.A:
            if len(row) != n:
                raise ValidationError(f"constraint row of length {len(row)}, expected {n}")

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.b), len(self.c)


@dataclass
class LPResult:
    status: str
    value: Fraction | None = None
    x: list | None = None
    y: list | None = None
    ray: list | None = None
    basis: tuple | None = None
    iterations: int = 0
    notes: list = field(default_factory=list)


def _dot(u, v):
    return sum((a * b for a, b in zip(u, v) if a and b), ZERO)


def _invert(M):
    n = len(M)
    aug = [list(row) + [ONE if i == j else ZERO for j in range(n)] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise ValidationError("initial basis is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


class _Tableau:
    """Revised-simplex state: basis, basis inverse, basic values."""

    def __init__(self, columns, b, basis, Binv):
        self.columns = columns
        self.m = len(b)
        self.basis = list(basis)
        self.Binv = Binv
        self.xB = [_dot(row, b) for row in Binv]
        self.iterations = 0

    def ftran(self, j):
        col = self.columns[j]
        return [_dot(row, col) for row in self.Binv]

    def duals(self, costs):
        m = self.m
        y = [ZERO] * m
        for r in range(m):
            cb = costs[self.basis[r]]
            if cb:
                row = self.Binv[r]
                for i in range(m):
                    if row[i]:
                        y[i] += cb * row[i]
        return y

    def pivot(self, r, j, u):
        piv = u[r]
        Binv = self.Binv
        Binv[r] = [v / piv for v in Binv[r]]
        self.xB[r] /= piv
        for i in range(self.m):
            if i != r and u[i] != 0:
                f = u[i]
                Binv[i] = [a - f * b for a, b in zip(Binv[i], Binv[r])]
                self.xB[i] -= f * self.xB[r]
        self.basis[r] = j
        self.iterations += 1

    def run(self, costs, allowed):
        """Iterate Bland pivots; return ``(OPTIMAL, None)`` or ``(UNBOUNDED, (j, u))``."""
        while True:
            y = self.duals(costs)
            in_basis = set(self.basis)
            entering = None
            for j in allowed:
                if j in in_basis:
                    continue
                if costs[j] - _dot(y, self.columns[j]) < 0:
                    entering = j
                    break
            if entering is None:
                return OPTIMAL, None
            u = self.ftran(entering)
            best = None
            for r in range(self.m):
                if u[r] > 0:
                    key = (self.xB[r] / u[r], self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return UNBOUNDED, (entering, u)
            self.pivot(best[1], entering, u)


def simplex_solve(lp: LPInstance, basis=None) -> LPResult:
    """Solve ``lp`` exactly.

    ``basis`` optionally names ``m`` columns forming a primal feasible
    starting basis; phase one is then skipped.
    """
    m, n = lp.shape
    signs = [(-1 if bi < 0 else 1) for bi in lp.b]
    b = [bi * s for bi, s in zip(lp.b, signs)]
    columns = [[lp.A[r][j] * signs[r] for r in range(m)] for j in range(n)]
    original = list(range(n))

    if m == 0:
        if any(cj < 0 for cj in lp.c):
            j = next(j for j, cj in enumerate(lp.c) if cj < 0)
            ray = [ONE if i == j else ZERO for i in range(n)]
            return LPResult(UNBOUNDED, x=[ZERO] * n, ray=ray)
        return LPResult(OPTIMAL, ZERO, [ZERO] * n, [], basis=())

    if basis is not None:
        basis = list(basis)
        if len(basis) != m or len(set(basis)) != m or not all(0 <= j < n for j in basis):
            raise ValidationError(f"starting basis must name {m} distinct columns")
        B = [[columns[j][r] for j in basis] for r in range(m)]
        tab = _Tableau(columns, b, basis, _invert(B))
        if any(v < 0 for v in tab.xB):
            raise ValidationError("starting basis is not primal feasible")
        costs = list(lp.c)
        redundant = []
    else:
        for r in range(m):
            columns.append([ONE if i == r else ZERO for i in range(m)])
        artificial = list(range(n, n + m))
        Binv = [[ONE if i == r else ZERO for i in range(m)] for r in range(m)]
        tab = _Tableau(columns, b, artificial, Binv)
        phase1 = [ZERO] * n + [ONE] * m
        tab.run(phase1, original)
        infeasibility = sum((tab.xB[r] for r in range(m) if tab.basis[r] >= n), ZERO)
        if infeasibility > 0:
            y = tab.duals(phase1)
            farkas = [yi * s for yi, s in zip(y, signs)]
            return LPResult(INFEASIBLE, y=farkas, iterations=tab.iterations)
        redundant = _drive_out_artificials(tab, n)
        costs = list(lp.c) + [ZERO] * m

    status, info = tab.run(costs, original)
    x = [ZERO] * n
    for r, j in enumerate(tab.basis):
        if j < n:
            x[j] = tab.xB[r]
    notes = [f"redundant constraint rows: {redundant}"] if redundant else []
    if status == UNBOUNDED:
        entering, u = info
        ray = [ZERO] * n
        ray[entering] = ONE
        for r, j in enumerate(tab.basis):
            if j < n:
                ray[j] = -u[r]
        return LPResult(UNBOUNDED, x=x, ray=ray, iterations=tab.iterations, notes=notes)
    y = [yi * s for yi, s in zip(tab.duals(costs), signs)]
    return LPResult(
        OPTIMAL,
        value=_dot(lp.c, x),
        x=x,
        y=y,
        basis=tuple(tab.basis),
        iterations=tab.iterations,
        notes=notes,
    )


def _drive_out_artificials(tab: _Tableau, n: int) -> list[int]:
    """Pivot zero-level artificials out of the basis; return rows that are redundant."""
    redundant = []
    for r in range(tab.m):
        if tab.basis[r] < n:
            continue
        in_basis = set(tab.basis)
        for j in range(n):
            if j in in_basis:
                continue
            u = tab.ftran(j)
            if u[r] != 0:
                tab.pivot(r, j, u)
                break
        else:
            redundant.append(r)
    return redundant


def check_certificate(lp: LPInstance, result: LPResult) -> bool:
    """Replay the certificate attached to ``result`` with exact arithmetic."""
    m, n = lp.shape
    A, b, c = lp.A, lp.b, lp.c

    def Ax(x):
        return [_dot(row, x) for row in A]

    def yA(y):
        return [sum((y[r] * A[r][j] for r in range(m)), ZERO) for j in range(n)]

    if result.status == OPTIMAL:
        x, y = result.x, result.y
        if any(v < 0 for v in x) or Ax(x) != b:
            return False
        reduced = [cj - aj for cj, aj in zip(c, yA(y))]
        if any(v < 0 for v in reduced):
            return False
        if any(xj != 0 and rj != 0 for xj, rj in zip(x, reduced)):
            return False
        return _dot(c, x) == _dot(y, b) == result.value
    if result.status == INFEASIBLE:
        y = result.y
        return all(v <= 0 for v in yA(y)) and _dot(y, b) > 0
    if result.status == UNBOUNDED:
        x, d = result.x, result.ray
        return (
            all(v >= 0 for v in x)
            and Ax(x) == b
            and all(v >= 0 for v in d)
            and all(v == 0 for v in Ax(d))
            and _dot(c, d) < 0
        )
    return False
