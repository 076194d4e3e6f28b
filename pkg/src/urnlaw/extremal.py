"""The universal polynomials F_{N,k}(lam) and the extreme points they describe.

``F_{N,k}(lam)`` is the law of ``k`` draws without replacement from the urn
whose empirical measure is ``lam``.  It is computed here by four routes
that never share code paths beyond the basic tensor algebra:

* :func:`f_nk_explicit`  -- prefactor times the finite series in 1/N over
  integer partitions;
* :func:`f_nk_recursive` -- the order-by-order recursion with duplication maps;
* :func:`f_nk_partition` -- the signed sum over set partitions;
* :func:`f_nk_bruteforce` -- literal enumeration of distinct index tuples.

The first three are polynomial in ``lam`` and accept any probability
measure; the last needs an actual urn.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial, prod
from typing import Iterator

import numpy as np

from urnlaw.errors import BudgetError, ValidationError
from urnlaw.measures import (
    ONE,
    ZERO,
    DiscreteMeasure,
    QuantizedMeasure,
    SignedTensor,
    StateSpace,
    check_budget,
    mass_norm,
    symmetrize,
    tensor_power,
    zeros,
)
from urnlaw.partitions import (
    MAX_SET_PARTITION,
    IntegerPartition,
    coefficient_c,
    coefficient_d,
    contributing_partitions,
    enumerate_set_partitions,
    total_correction_mass,
)

MAX_BRUTEFORCE_TUPLES = 10**7
MAX_QUANTIZED = 10**7


def prefactor(N: int, k: int) -> Fraction:
    """``N^(k-1) / prod_{i<k} (N - i)``."""
    return Fraction(N ** (k - 1), prod(N - i for i in range(1, k)))


def _check_nk(N: int, k: int) -> None:
    if not isinstance(k, int) or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k!r}")
    if not isinstance(N, int) or N < 1:
        raise ValidationError(f"N must be a positive integer, got {N!r}")
    if k > N:
        raise ValidationError(f"k={k} exceeds N={N}: no N-representable k-plans")


def _as_measure(lam) -> DiscreteMeasure:
    if isinstance(lam, QuantizedMeasure):
        return lam.to_measure()
    return lam


def _monomial_entries(lam: DiscreteMeasure, p: IntegerPartition | None, k: int):
    """Nonzero entries of the unsymmetrized ``p``-monomial as ``(index, value)``."""
    sizes = [] if p is None else [part + 1 for part in p.parts]
    rest = k - sum(sizes)
    sizes += [1] * rest
    support = [s for s in range(lam.space.size) if lam.weights[s] != 0]
    for assignment in itertools.product(support, repeat=len(sizes)):
        value = ONE
        idx: list[int] = []
        for s, size in zip(assignment, sizes):
            value *= lam.weights[s]
            idx.extend([s] * size)
        yield tuple(idx), value


def monomial(lam: DiscreteMeasure, p: IntegerPartition | None, k: int) -> SignedTensor:
    """Unsymmetrized monomial ``id^{p_1+1} lam (x) ... (x) lam^{(x)(k-j-n)}``."""
    lam = _as_measure(lam)
    w = zeros(lam.space.size, k)
    for idx, value in _monomial_entries(lam, p, k):
        w[idx] = value
    return SignedTensor(lam.space, w)


@dataclass(frozen=True)
class FSeriesTerm:
    """Order-``j`` term of the bracket: ``sum_p d_p S_k(monomial_p)``.

    ``contributions`` holds ``(p, d_p, S_k monomial_p)`` triples; for
    ``j = 0`` the single contribution is ``(None, 1, lam^{(x)k})``.
    """

    j: int
    contributions: tuple[tuple[IntegerPartition | None, Fraction, SignedTensor], ...]

    def coefficient_sum(self) -> Fraction:
        return sum((d for _, d, _ in self.contributions), ZERO)

    def tensor(self) -> SignedTensor:
        """``P_j`` after symmetrization (no sign, no power of N)."""
        out = None
        for _, d, t in self.contributions:
            out = t * d if out is None else out + t * d
        return out


def series_terms(lam, k: int) -> list[FSeriesTerm]:
    """All terms ``j = 0 .. k-1`` of the bracket; independent of ``N``."""
    lam = _as_measure(lam)
    terms = [FSeriesTerm(0, ((None, ONE, tensor_power(lam, k)),))]
    for j in range(1, k):
        contribs = tuple(
            (p, coefficient_d(k, p), symmetrize(monomial(lam, p, k)))
            for p in contributing_partitions(k, j)
        )
        terms.append(FSeriesTerm(j, contribs))
    return terms


def _bracket(lam: DiscreteMeasure, N: int, k: int, max_order: int) -> SignedTensor:
    # symmetrization is linear: combine the monomials first, symmetrize once
    lead = tensor_power(lam, k)
    if max_order < 1:
        return lead
    w = zeros(lam.space.size, k)
    for j in range(1, max_order + 1):
        scale = Fraction((-1) ** j, N**j)
        for p in contributing_partitions(k, j):
            coef = scale * coefficient_d(k, p)
            for idx, value in _monomial_entries(lam, p, k):
                w[idx] += coef * value
    return lead + symmetrize(SignedTensor(lam.space, w))


def f_nk_explicit(N: int, lam, k: int) -> SignedTensor:
    """F_{N,k}(lam) from the finite series in inverse powers of N.

    Defined for every probability measure ``lam``; nonnegative when ``lam``
    is 1/N-quantized.  ``k = 1`` returns ``lam`` itself.
    """
    _check_nk(N, k)
    lam = _as_measure(lam)
    if k == 1:
        return tensor_power(lam, 1)
    return _bracket(lam, N, k, k - 1) * prefactor(N, k)


def f_nk_truncated(N: int, lam, k: int, p: int) -> tuple[SignedTensor, SignedTensor]:
    """Keep corrections up to order ``p``; return ``(approx, residual)``.

    ``approx`` carries the prefactor, ``residual = F_{N,k}(lam) - approx``.
    """
    _check_nk(N, k)
    if k < 2 or not isinstance(p, int) or not 0 <= p <= k - 2:
        raise ValidationError(f"truncation order p must lie in 0..{k - 2}, got {p!r}")
    lam = _as_measure(lam)
    approx = _bracket(lam, N, k, p) * prefactor(N, k)
    return approx, f_nk_explicit(N, lam, k) - approx


def truncation_bound(N: int, k: int, p: int) -> Fraction:
    """Certified ``prefactor * C_k / N^(p+1)`` bound on the residual mass."""
    return prefactor(N, k) * Fraction(total_correction_mass(k), N ** (p + 1))


def f_nk_recursive(N: int, lam, k: int) -> SignedTensor:
    """Build mu_1 = lam, mu_{j+1} = N/(N-j) mu_j (x) lam - 1/(N-j) sum_i R_i# mu_j."""
    _check_nk(N, k)
    lam = _as_measure(lam)
    check_budget(lam.space.size, k)
    ell = lam.space.size
    base = lam.array()
    mu = base
    for j in range(1, k):
        grid = tuple(np.indices((ell,) * j).reshape(j, -1))
        flat = mu.ravel() * Fraction(1, N - j)
        nxt = np.multiply.outer(mu * Fraction(N, N - j), base)
        for i in range(j):
            # R_i duplicates coordinate i into the new last slot
            np.subtract.at(nxt, grid + (grid[i],), flat)
        mu = nxt
    return SignedTensor(lam.space, mu)


def f_nk_partition(N: int, lam, k: int) -> SignedTensor:
    """Signed sum over set partitions P of {1..k} of N^{n(P)} beta_P G_P(lam)."""
    _check_nk(N, k)
    if k > MAX_SET_PARTITION:
        raise ValidationError(f"k={k} exceeds set-partition range {MAX_SET_PARTITION}")
    lam = _as_measure(lam)
    ell = lam.space.size
    w = zeros(ell, k)
    scale = Fraction(factorial(N - k), factorial(N))
    support = [s for s in range(ell) if lam.weights[s] != 0]
    products: dict[int, list] = {}
    for P in enumerate_set_partitions(k):
        n = P.n_blocks
        if n not in products:
            products[n] = [
                (a, prod((lam.weights[s] for s in a), start=ONE))
                for a in itertools.product(support, repeat=n)
            ]
        coef = scale * (-1) ** (k - n) * N**n * P.beta()
        labels = P.labels()
        for assignment, value in products[n]:
            w[tuple(assignment[b] for b in labels)] += coef * value
    return SignedTensor(lam.space, w)


def f_nk_bruteforce(urn: QuantizedMeasure, k: int) -> SignedTensor:
    """Average of delta at (x_{m_1}..x_{m_k}) over pairwise distinct index tuples."""
    N = urn.N
    _check_nk(N, k)
    if N**k > MAX_BRUTEFORCE_TUPLES:
        raise BudgetError(f"{N}^{k} index tuples exceed budget {MAX_BRUTEFORCE_TUPLES}")
    balls = urn.balls()
    counts: dict[tuple[int, ...], int] = {}
    for m in itertools.product(range(N), repeat=k):
        if len(set(m)) == k:
            key = tuple(balls[i] for i in m)
            counts[key] = counts.get(key, 0) + 1
    total = factorial(N) // factorial(N - k)
    return SignedTensor.from_entries(urn.space, k, ((idx, Fraction(c, total)) for idx, c in counts.items()))


def diagonal_mass(N: int, lam, k: int, x) -> Fraction:
    """Closed-form mass of F_{N,k}(lam) at ``(x, ..., x)``.

    ``prefactor * t (t - 1/N) ... (t - (k-1)/N)`` with ``t = lam({x})``;
    valid for 1/N-quantized ``lam``.
    """
    _check_nk(N, k)
    lam = _as_measure(lam)
    i = lam.space.index(x) if isinstance(x, str) else int(x)
    t = lam.weights[i]
    if (t * N).denominator != 1:
        raise ValidationError(f"lam({x}) = {t} is not a multiple of 1/{N}")
    value = prod((t - Fraction(r, N) for r in range(k)), start=ONE)
    return prefactor(N, k) * value if k > 1 else value


def is_offdiagonal_extreme(urn: QuantizedMeasure, k: int) -> bool:
    """True iff no colour appears ``k`` or more times in the urn."""
    if k < 1:
        raise ValidationError("k must be positive")
    return all(c <= k - 1 for c in urn.counts)


def has_zero_diagonal(T: SignedTensor) -> bool:
    return all(T.diagonal_entry(i) == 0 for i in range(T.ell))


def enumerate_quantized(N: int, space: StateSpace) -> Iterator[QuantizedMeasure]:
    """Every urn of ``N`` balls over ``space``, colex order on the count vectors."""
    if not isinstance(N, int) or N < 1:
        raise ValidationError(f"N must be a positive integer, got {N!r}")
    ell = space.size
    if comb(N + ell - 1, ell - 1) > MAX_QUANTIZED:
        raise BudgetError(f"{comb(N + ell - 1, ell - 1)} quantized measures exceed budget")

    def compositions(total, slots):
        # colex: the last coordinate varies slowest
        if slots == 1:
            yield (total,)
            return
        for last in range(total + 1):
            for head in compositions(total - last, slots - 1):
                yield head + (last,)

    for counts in compositions(N, ell):
        yield QuantizedMeasure(space, N, counts)


def term_mass_table(N: int, k: int) -> list[tuple[int, Fraction, Fraction]]:
    """Rows ``(j, c_j/N^j, prefactor * c_j/N^j)`` with ``c_0 = 1``.

    These are the total masses of the terms of F_{N,k} (each term is a
    nonnegative measure times its sign).
    """
    if k < 2 or N < k:
        raise ValidationError(f"need 2 <= k <= N, got k={k}, N={N}")
    pref = prefactor(N, k)
    rows = []
    for j in range(k):
        c = 1 if j == 0 else coefficient_c(k, j)
        rel = Fraction(c, N**j)
        rows.append((j, rel, pref * rel))
    return rows


def series_check(lam, k: int) -> bool:
    """Per-term sanity: j=0 is lam^k with coefficient 1, sum of d_p equals c_j."""
    terms = series_terms(lam, k)
    if terms[0].coefficient_sum() != 1:
        return False
    return all(t.coefficient_sum() == coefficient_c(k, t.j) for t in terms[1:])


__all__ = [
    "FSeriesTerm",
    "diagonal_mass",
    "enumerate_quantized",
    "f_nk_bruteforce",
    "f_nk_explicit",
    "f_nk_partition",
    "f_nk_recursive",
    "f_nk_truncated",
    "has_zero_diagonal",
    "is_offdiagonal_extreme",
    "mass_norm",
    "monomial",
    "prefactor",
    "series_terms",
    "term_mass_table",
    "truncation_bound",
]
