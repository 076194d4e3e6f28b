"""Symmetric multi-marginal optimal transport with a k-body cost.

Two exact LP formulations of the same value ``C_{N,k}(rho)``:

* :func:`solve_primal` optimizes over symmetric N-plans directly, one
  variable per permutation orbit, with the averaged cost evaluated by
  brute force over k-subsets of particles;
* :func:`solve_reformulated` optimizes a prior over urns against the
  polynomial ``p_nk``, i.e. a 1/N-quantized convexification.

For two states the convexification is a planar lower hull
(:func:`convexify_ell2`), and :func:`gamma_limit_gap` brackets the
large-N limit.
"""

from __future__ import annotations

import itertools
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial

import numpy as np

from urnlaw.definetti import PriorMixture
from urnlaw.errors import BudgetError, ValidationError
from urnlaw.extremal import (
    enumerate_quantized,
    f_nk_explicit,
    is_offdiagonal_extreme,
    prefactor,
)
from urnlaw.measures import ZERO, DiscreteMeasure, QuantizedMeasure, StateSpace, tensor_power
from urnlaw.partitions import total_correction_mass
from urnlaw.rational import as_fraction, format_fraction
from urnlaw.simplex import OPTIMAL, LPInstance, LPResult, simplex_solve

MAX_PRIMAL_TUPLES = 10**5
MAX_REFORMULATED_COLUMNS = 10**6
HULL_GRID = 1024


class CostTensor:
    """Symmetric k-body potential on ``space``; ``infinite`` marks +inf entries."""

    def __init__(self, space: StateSpace, values, infinite=None):
        values = np.asarray(values, dtype=object)
        k = values.ndim
        if k < 1 or values.shape != (space.size,) * k:
            raise ValidationError(f"cost array of shape {values.shape} does not fit {space.size} states")
        self.space = space
        self.k = k
        self.values = np.vectorize(as_fraction, otypes=[object])(values)
        self.infinite = np.zeros(values.shape, dtype=bool) if infinite is None else np.asarray(infinite, dtype=bool)
        if self.infinite.shape != values.shape:
            raise ValidationError("infinity mask shape mismatch")
        self.values[self.infinite] = ZERO
        for perm in itertools.permutations(range(k)):
            if not (np.all(self.values == self.values.transpose(perm)) and np.all(self.infinite == self.infinite.transpose(perm))):
                raise ValidationError("cost must be symmetric under permutations of its arguments")

    @property
    def has_infinity(self) -> bool:
        return bool(self.infinite.any())

    def max_abs(self) -> Fraction:
        """Sup norm over the finite entries."""
        return max((abs(v) for v in self.values.flat), default=ZERO)

    def __call__(self, idx):
        idx = tuple(idx)
        return None if self.infinite[idx] else self.values[idx]

    def _key(self):
        return (self.space, tuple(self.values.flat), tuple(self.infinite.ravel().tolist()), self.k)

    def __eq__(self, other):
        return isinstance(other, CostTensor) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @classmethod
    def from_function(cls, space: StateSpace, k: int, fn) -> "CostTensor":
        """Tabulate ``fn(idx)``; ``None`` or ``float('inf')`` mean +inf."""
        values = np.full((space.size,) * k, ZERO, dtype=object)
        inf = np.zeros(values.shape, dtype=bool)
        for idx in itertools.product(range(space.size), repeat=k):
            v = fn(idx)
            if v is None or v == float("inf"):
                inf[idx] = True
            else:
                values[idx] = as_fraction(v)
        return cls(space, values, inf)

    @classmethod
    def diag_indicator(cls, space: StateSpace, k: int = 2) -> "CostTensor":
        """1 when all arguments coincide, else 0."""
        return cls.from_function(space, k, lambda idx: Fraction(int(len(set(idx)) == 1)))

    @classmethod
    def constant(cls, space: StateSpace, k: int, c) -> "CostTensor":
        return cls.from_function(space, k, lambda idx: as_fraction(c))

    @classmethod
    def random(cls, space: StateSpace, k: int, seed: int, height: int = 10, max_den: int = 6) -> "CostTensor":
        """Seeded symmetric rational cost, one draw per multiset of arguments."""
        rng = np.random.default_rng(seed)
        table = {}
        for rep in itertools.combinations_with_replacement(range(space.size), k):
            table[rep] = Fraction(int(rng.integers(-height, height + 1)), int(rng.integers(1, max_den + 1)))
        return cls.from_function(space, k, lambda idx: table[tuple(sorted(idx))])

    def to_json(self) -> dict:
        entries = []
        for idx in itertools.product(range(self.space.size), repeat=self.k):
            one_based = [i + 1 for i in idx]
            if self.infinite[idx]:
                entries.append({"idx": one_based, "infinity": True})
            elif self.values[idx] != 0:
                entries.append({"idx": one_based, "w": format_fraction(self.values[idx])})
        return {"labels": list(self.space.labels), "order": self.k, "entries": entries}

    @classmethod
    def from_json(cls, data: dict) -> "CostTensor":
        try:
            space = StateSpace(tuple(data["labels"]))
            k = int(data["order"])
            raw = data["entries"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed cost JSON: {exc}") from exc
        if k < 1:
            raise ValidationError("cost order must be positive")
        values = np.full((space.size,) * k, ZERO, dtype=object)
        inf = np.zeros(values.shape, dtype=bool)
        for e in raw:
            idx = tuple(int(i) - 1 for i in e.get("idx", ()))
            if len(idx) != k or any(not 0 <= i < space.size for i in idx):
                raise ValidationError(f"bad cost index {e.get('idx')}")
            if e.get("infinity"):
                inf[idx] = True
            else:
                values[idx] = as_fraction(e["w"])
        return cls(space, values, inf)


def _check_rho(phi: CostTensor, rho: DiscreteMeasure) -> None:
    if rho.space != phi.space:
        raise ValidationError("marginal and cost live on different state spaces")


def _contract(T, phi: CostTensor) -> Fraction | None:
    if phi.has_infinity and any(w != 0 for w in T.weights[phi.infinite]):
        return None
    return T.integrate(phi.values)


def p_nk(lam, phi: CostTensor, N: int) -> Fraction | None:
    """``integral of phi dF_{N,k}(lam)``; ``None`` when an infinite entry is charged."""
    if phi.k > N:
        raise ValidationError(f"k={phi.k} exceeds N={N}")
    return _contract(f_nk_explicit(N, lam, phi.k), phi)


def p_k(lam, phi: CostTensor) -> Fraction | None:
    """``integral of phi d(lam^{(x)k})``."""
    if isinstance(lam, QuantizedMeasure):
        lam = lam.to_measure()
    return _contract(tensor_power(lam, phi.k), phi)


def averaged_cost(word, phi: CostTensor) -> Fraction | None:
    """Mean of ``phi`` over the k-subsets of a configuration of particles."""
    total = ZERO
    count = 0
    for sub in itertools.combinations(word, phi.k):
        v = phi(sub)
        if v is None:
            return None
        total += v
        count += 1
    return total / count


def _marginal_rows(columns, rho: DiscreteMeasure, N: int):
    """Rows for ``sum alpha * lam = rho`` (last state implied) and total mass one."""
    ell = rho.space.size
    A = [[Fraction(c[x], N) for c in columns] for x in range(ell - 1)]
    A.append([Fraction(1)] * len(columns))
    b = [rho.weights[x] for x in range(ell - 1)] + [Fraction(1)]
    return A, b


def solve_primal(N: int, phi: CostTensor, rho: DiscreteMeasure) -> LPResult:
    """Exact LP over symmetric N-plans with one-point marginal ``rho``.

    Variable ``c`` is the mass of the uniform law on the arrangements of
    count vector ``c``.  The returned ``x`` is indexed like
    ``enumerate_quantized(N, space)``.
    """
    _check_rho(phi, rho)
    k = phi.k
    if not 1 <= k <= N:
        raise ValidationError(f"need 1 <= k <= N, got k={k}, N={N}")
    if phi.space.size**N > MAX_PRIMAL_TUPLES:
        raise BudgetError(f"{phi.space.size}^{N} configurations exceed the primal budget")
    urns = list(enumerate_quantized(N, phi.space))
    costs = [averaged_cost(u.balls(), phi) for u in urns]
    keep = [i for i, c in enumerate(costs) if c is not None]
    A, b = _marginal_rows([urns[i].counts for i in keep], rho, N)
    result = simplex_solve(LPInstance([costs[i] for i in keep], A, b))
    if result.x is not None:
        x = [ZERO] * len(urns)
        for i, v in zip(keep, result.x):
            x[i] = v
        result.x = x
    return result


@lru_cache(maxsize=256)
def _reformulated_columns(N: int, phi: CostTensor, offdiag: bool):
    cols = []
    for urn in enumerate_quantized(N, phi.space):
        if offdiag and not is_offdiagonal_extreme(urn, phi.k):
            continue
        v = p_nk(urn, phi, N)
        if v is not None:
            cols.append((urn, v))
    return tuple(cols)


def solve_reformulated(
    N: int, phi: CostTensor, rho: DiscreteMeasure, offdiag: bool = False
) -> tuple[LPResult, PriorMixture | None]:
    """Minimize ``sum alpha_lam p_nk(lam)`` over priors with barycentre ``rho``.

    ``offdiag`` keeps only urns with no colour repeated ``k`` times, the
    support forced by a cost that is infinite on the diagonal.
    """
    _check_rho(phi, rho)
    if not 1 <= phi.k <= N:
        raise ValidationError(f"need 1 <= k <= N, got k={phi.k}, N={N}")
    if comb(N + phi.space.size - 1, phi.space.size - 1) > MAX_REFORMULATED_COLUMNS:
        raise BudgetError("too many quantized measures for the reformulated LP")
    cols = _reformulated_columns(N, phi, offdiag)
    A, b = _marginal_rows([u.counts for u, _ in cols], rho, N)
    result = simplex_solve(LPInstance([v for _, v in cols], A, b))
    if result.status != OPTIMAL:
        return result, None
    prior = PriorMixture(phi.space, N, tuple((w, u) for w, (u, _) in zip(result.x, cols) if w != 0))
    return result, prior


@dataclass(frozen=True)
class PiecewiseLinear:
    """Convex piecewise-linear function through sorted ``(x, y)`` breakpoints."""

    points: tuple[tuple[Fraction, Fraction], ...]

    def __call__(self, x) -> Fraction:
        x = as_fraction(x)
        xs = [p[0] for p in self.points]
        if not xs[0] <= x <= xs[-1]:
            raise ValidationError(f"{x} outside the domain [{xs[0]}, {xs[-1]}]")
        i = bisect_right(xs, x) - 1
        if i == len(xs) - 1:
            return self.points[-1][1]
        (x0, y0), (x1, y1) = self.points[i], self.points[i + 1]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def to_json(self) -> list[dict]:
        return [{"x": format_fraction(x), "y": format_fraction(y)} for x, y in self.points]


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def lower_hull(points) -> PiecewiseLinear:
    """Graham scan (monotone chain) over points already sorted by abscissa."""
    hull: list = []
    for p in points:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) <= 0:
            hull.pop()
        hull.append(p)
    if not hull:
        raise ValidationError("no finite points to hull")
    return PiecewiseLinear(tuple(hull))


def _two_state(t: Fraction, space: StateSpace) -> DiscreteMeasure:
    return DiscreteMeasure(space, (t, 1 - t))


def convexify_ell2(N: int, phi: CostTensor, k: int | None = None) -> PiecewiseLinear:
    """Lower convex envelope of ``m/N -> p_nk((m/N, 1 - m/N))``, ``m = 0..N``.

    Its value at ``rho_1`` is ``C_{N,k}((rho_1, 1 - rho_1))``.
    """
    if phi.space.size != 2:
        raise ValidationError("the planar hull needs exactly two states")
    if k is not None and k != phi.k:
        raise ValidationError(f"cost has order {phi.k}, not {k}")
    if phi.k > N:
        raise ValidationError(f"k={phi.k} exceeds N={N}")
    pts = []
    for m in range(N + 1):
        v = p_nk(QuantizedMeasure(phi.space, N, (m, N - m)), phi, N)
        if v is not None:
            pts.append((Fraction(m, N), v))
    return lower_hull(pts)


def _poly_coefficients_ell2(phi: CostTensor) -> list[Fraction]:
    """Monomial coefficients of ``t -> p_k((t, 1-t))`` by exact interpolation."""
    k = phi.k
    ts = [Fraction(i, k) for i in range(k + 1)]
    ys = [p_k(_two_state(t, phi.space), phi) for t in ts]
    V = [[t**e for e in range(k + 1)] for t in ts]
    # Gauss-Jordan on the Vandermonde system
    aug = [row + [y] for row, y in zip(V, ys)]
    n = k + 1
    for c in range(n):
        piv = next(r for r in range(c, n) if aug[r][c] != 0)
        aug[c], aug[piv] = aug[piv], aug[c]
        aug[c] = [v / aug[c][c] for v in aug[c]]
        for r in range(n):
            if r != c and aug[r][c] != 0:
                f = aug[r][c]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[c])]
    return [aug[r][n] for r in range(n)]


def _bernstein_nonnegative(coeffs: list[Fraction]) -> bool:
    """Sufficient test for ``sum a_i t^i >= 0`` on [0,1]: nonnegative Bernstein coefficients."""
    d = len(coeffs) - 1
    if d < 0:
        return True
    return all(
        sum((Fraction(comb(i, r), comb(d, r)) * coeffs[r] for r in range(i + 1)), ZERO) >= 0
        for i in range(d + 1)
    )


def _psd(M) -> bool:
    """Exact positive semidefiniteness by symmetric Gaussian elimination."""
    M = [list(row) for row in M]
    n = len(M)
    for c in range(n):
        if M[c][c] < 0:
            return False
        if M[c][c] == 0:
            if any(M[c][r] != 0 for r in range(c + 1, n)):
                return False
            continue
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            for s in range(c, n):
                M[r][s] -= f * M[c][s]
    return True


def certify_convex(phi: CostTensor) -> bool:
    """Exact sufficient certificate that ``lam -> p_k(lam)`` is convex on the simplex."""
    if phi.has_infinity:
        return False
    ell = phi.space.size
    if ell == 2:
        a = _poly_coefficients_ell2(phi)
        second = [(i + 2) * (i + 1) * a[i + 2] for i in range(len(a) - 2)]
        return _bernstein_nonnegative(second)
    if phi.k == 2:
        # quadratic form restricted to directions e_i - e_last
        Phi = phi.values
        last = ell - 1
        M = [
            [Phi[i, j] - Phi[i, last] - Phi[last, j] + Phi[last, last] for j in range(last)]
            for i in range(last)
        ]
        return _psd(M)
    return False


@dataclass(frozen=True)
class GammaGap:
    C: Fraction
    pkss_low: Fraction
    pkss_high: Fraction
    lower_bound: Fraction
    upper_holds: bool
    lower_holds: bool
    method: str

    @property
    def holds(self) -> bool:
        return self.upper_holds and self.lower_holds

    @property
    def certified_bound(self) -> Fraction:
        """Width of the interval known to contain both ``C`` and ``P_k**``."""
        return self.pkss_high - self.lower_bound

    @property
    def gap(self) -> Fraction | None:
        """``C - P_k**`` when the envelope is exact."""
        return self.C - self.pkss_high if self.pkss_low == self.pkss_high else None


def grid_envelope(phi: CostTensor, rho_1, resolution: int = HULL_GRID) -> tuple[Fraction, Fraction]:
    """Bracket ``P_k**`` at ``(rho_1, 1-rho_1)`` with a dyadic grid hull.

    The hull of grid samples overestimates the envelope by at most the
    interpolation error ``k * max|phi| / resolution``.
    """
    pts = []
    for i in range(resolution + 1):
        t = Fraction(i, resolution)
        pts.append((t, p_k(_two_state(t, phi.space), phi)))
    high = lower_hull(pts)(rho_1)
    return high - phi.k * phi.max_abs() / resolution, high


def gamma_limit_gap(N: int, phi: CostTensor, rho: DiscreteMeasure, resolution: int = HULL_GRID) -> GammaGap:
    """Check ``s (P** - C_k max|phi| / N) <= C_{N,k} <= P**`` with ``s = (N-k)! N^k / N!``."""
    _check_rho(phi, rho)
    if phi.has_infinity:
        raise ValidationError("the sandwich needs a bounded cost")
    k = phi.k
    if certify_convex(phi):
        low = high = p_k(rho, phi)
        method = "convex"
    elif phi.space.size == 2:
        low, high = grid_envelope(phi, rho.weights[0], resolution)
        method = f"grid-hull/{resolution}"
    else:
        raise ValidationError("no computable envelope: more than two states and no convexity certificate")
    result, _ = solve_reformulated(N, phi, rho)
    C = result.value
    scale = Fraction(factorial(N - k) * N**k, factorial(N))
    assert scale == prefactor(N, k)
    lower = scale * (low - total_correction_mass(k) * phi.max_abs() / N)
    return GammaGap(C, low, high, lower, C <= high, lower <= C, method)
