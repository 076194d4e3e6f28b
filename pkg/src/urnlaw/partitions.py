"""Integer and set partitions, and the coefficient families built on them.

All arithmetic is exact.  Integer partitions use the standard
representation (weakly decreasing parts); the allelic form
``m_q = #{i : p_i = q}`` is a derived view.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial, prod
from typing import Iterator

from urnlaw.errors import PoleError, ValidationError
from urnlaw.rational import as_fraction

MAX_INTEGER_PARTITION = 21
MAX_SET_PARTITION = 12


@dataclass(frozen=True, order=True)
class IntegerPartition:
    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        if not parts:
            raise ValidationError("a partition needs at least one part")
        if any(p < 1 for p in parts):
            raise ValidationError(f"parts must be positive: {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise ValidationError(f"parts must be weakly decreasing: {parts}")

    @property
    def size(self) -> int:
        """The integer being partitioned (``j`` in the coefficient formulas)."""
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def multiplicities(self) -> Counter:
        return Counter(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)

    def __repr__(self):
        return f"IntegerPartition{self.parts}"


@dataclass(frozen=True)
class AllelicVector:
    """``m[q-1]`` counts the parts equal to ``q``; ``sum(q * m_q) == k``."""

    m: tuple[int, ...]

    def __post_init__(self):
        m = tuple(int(x) for x in self.m)
        object.__setattr__(self, "m", m)
        if not m or any(x < 0 for x in m):
            raise ValidationError(f"invalid allelic vector {m}")

    @property
    def k(self) -> int:
        return sum(q * mq for q, mq in enumerate(self.m, start=1))

    def to_partition(self) -> IntegerPartition:
        parts = []
        for q in range(len(self.m), 0, -1):
            parts.extend([q] * self.m[q - 1])
        return IntegerPartition(tuple(parts))


@dataclass(frozen=True)
class SetPartition:
    """Blocks of ``{1..k}``, each sorted, blocks ordered by their minimum."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(b)) for b in self.blocks), key=lambda b: b[0] if b else 0))
        object.__setattr__(self, "blocks", blocks)
        if any(not b for b in blocks):
            raise ValidationError("blocks must be nonempty")
        flat = [x for b in blocks for x in b]
        if sorted(flat) != list(range(1, len(flat) + 1)):
            raise ValidationError(f"blocks do not partition {{1..k}}: {blocks}")

    @property
    def k(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def profile(self) -> IntegerPartition:
        """Block sizes as an integer partition of ``k``."""
        return IntegerPartition(tuple(sorted((len(b) for b in self.blocks), reverse=True)))

    def beta(self) -> int:
        """``prod over blocks of (|B| - 1)!``."""
        return prod(factorial(len(b) - 1) for b in self.blocks)

    def labels(self) -> tuple[int, ...]:
        """Block id (0-based) of each element ``1..k``."""
        out = [0] * self.k
        for bid, block in enumerate(self.blocks):
            for x in block:
                out[x - 1] = bid
        return tuple(out)


def _check_positive(name, value):
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ValidationError(f"{name} must be a positive integer, got {value!r}")


def _partitions_bounded(j: int, largest: int) -> Iterator[tuple[int, ...]]:
    # lexicographically decreasing over weakly decreasing tuples
    if j == 0:
        yield ()
        return
    for first in range(min(j, largest), 0, -1):
        for rest in _partitions_bounded(j - first, first):
            yield (first,) + rest


def enumerate_integer_partitions(j: int, max_length: int | None = None) -> list[IntegerPartition]:
    """All partitions of ``j`` (optionally of length at most ``max_length``).

    Order: lexicographically decreasing part lists, e.g.
    ``(4), (3,1), (2,2), (2,1,1), (1,1,1,1)`` for ``j = 4``.
    """
    _check_positive("j", j)
    if j > MAX_INTEGER_PARTITION:
        raise ValidationError(f"j={j} exceeds supported range 1..{MAX_INTEGER_PARTITION}")
    if max_length is not None:
        _check_positive("max_length", max_length)
    return [
        IntegerPartition(parts)
        for parts in _partitions_bounded(j, j)
        if max_length is None or len(parts) <= max_length
    ]


def enumerate_set_partitions(k: int) -> list[SetPartition]:
    """All set partitions of ``{1..k}`` in restricted-growth-string order."""
    _check_positive("k", k)
    if k > MAX_SET_PARTITION:
        raise ValidationError(f"k={k} exceeds supported range 1..{MAX_SET_PARTITION}")
    return list(_set_partitions_cached(k))


@lru_cache(maxsize=None)
def _set_partitions_cached(k: int) -> tuple[SetPartition, ...]:
    out = []

    def grow(rgs, top):
        if len(rgs) == k:
            blocks = [[] for _ in range(top + 1)]
            for i, b in enumerate(rgs, start=1):
                blocks[b].append(i)
            out.append(SetPartition(tuple(tuple(b) for b in blocks)))
            return
        for b in range(top + 2):
            grow(rgs + [b], max(top, b))

    grow([0], 0)
    return tuple(out)


def bell_number(k: int) -> int:
    """Bell number via the Bell triangle (independent of the enumerator)."""
    row = [1]
    for _ in range(k):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def _as_partition(p) -> IntegerPartition:
    return p if isinstance(p, IntegerPartition) else IntegerPartition(tuple(p))


def coefficient_d(k: int, p) -> Fraction:
    """Coefficient of the ``p``-monomial in the order-``j`` correction of F_{N,k}.

    ``k!/(k-j-n)! * prod 1/(p_i+1) * prod_q 1/m_q!`` with ``j = |p|`` and
    ``n`` the number of parts.
    """
    p = _as_partition(p)
    _check_positive("k", k)
    j, n = p.size, p.length
    if not 1 <= j <= k - 1:
        raise ValidationError(f"partition of {j} does not index a correction for k={k}")
    if j + n > k:
        raise ValidationError(f"partition {p.parts} does not contribute at k={k} (j+n={j + n} > k)")
    value = Fraction(factorial(k), factorial(k - j - n))
    for part in p.parts:
        value /= part + 1
    for mult in p.multiplicities().values():
        value /= factorial(mult)
    return value


def contributing_partitions(k: int, j: int) -> list[IntegerPartition]:
    """Partitions ``p`` of ``j`` with ``j + n(p) <= k``."""
    return enumerate_integer_partitions(j, max_length=k - j)


def coefficient_c(k: int, j: int) -> int:
    """Elementary symmetric polynomial ``e_j(1, 2, ..., k-1)``."""
    _check_positive("k", k)
    if not isinstance(j, int) or not 1 <= j <= k - 1:
        raise ValidationError(f"j must lie in 1..{k - 1}, got {j!r}")
    e = [1] + [0] * j
    for i in range(1, k):
        for r in range(min(i, j), 0, -1):
            e[r] += i * e[r - 1]
    return e[j]


def total_correction_mass(k: int) -> int:
    """``C_k = sum_j c_j^(k)``, the explicit truncation constant."""
    return sum(coefficient_c(k, j) for j in range(1, k))


@lru_cache(maxsize=None)
def stirling_first_unsigned(q: int, r: int) -> int:
    """Number of permutations of ``{1..q}`` with exactly ``r`` cycles."""
    if not (isinstance(q, int) and isinstance(r, int)) or q < 0 or r < 0:
        raise ValidationError(f"stirling arguments must be nonnegative integers: {q!r}, {r!r}")
    if r > q:
        raise ValidationError(f"r={r} exceeds q={q}")
    if q == 0 and r == 0:
        return 1
    if q == 0 or r == 0:
        return 0
    if r == q:
        return 1
    return stirling_first_unsigned(q - 1, r - 1) + (q - 1) * stirling_first_unsigned(q - 1, r)


def to_allelic(p_prime) -> AllelicVector:
    p_prime = _as_partition(p_prime)
    k = p_prime.size
    mult = p_prime.multiplicities()
    return AllelicVector(tuple(mult.get(q, 0) for q in range(1, k + 1)))


def correction_to_cycle_type(p, k: int) -> IntegerPartition:
    """Map a contributing partition of ``j`` to the partition of ``k`` with ``k-j`` parts.

    Adds one to every part and pads with ones.
    """
    p = _as_partition(p)
    j, n = p.size, p.length
    if j + n > k:
        raise ValidationError(f"{p.parts} does not contribute at k={k}")
    return IntegerPartition(tuple(x + 1 for x in p.parts) + (1,) * (k - j - n))


def cycle_type_to_correction(p_prime) -> IntegerPartition | None:
    """Inverse of :func:`correction_to_cycle_type`; ``None`` for all-ones."""
    p_prime = _as_partition(p_prime)
    parts = tuple(x - 1 for x in p_prime.parts if x > 1)
    return IntegerPartition(parts) if parts else None


def _rising(theta: Fraction, start: int, stop: int) -> Fraction:
    return prod((theta + i for i in range(start, stop)), start=Fraction(1))


def ewens(p_prime, theta) -> Fraction:
    """Ewens function of a partition ``p'`` of ``k``, continued to all rational theta.

    Poles are exactly ``theta in {-1, ..., -(k-1)}``.  At ``theta = 0``
    the removable singularity is resolved by cancelling one factor of theta.
    """
    p_prime = _as_partition(p_prime)
    theta = as_fraction(theta)
    k, n = p_prime.size, p_prime.length
    if theta.denominator == 1 and -(k - 1) <= theta <= -1:
        raise PoleError(f"Ewens function of a partition of {k} has a pole at theta={theta}")
    # k!/(theta (theta+1) ... (theta+k-1)) * theta^n with one theta cancelled
    value = Fraction(factorial(k)) * theta ** (n - 1) / _rising(theta, 1, k)
    for part in p_prime.parts:
        value /= part
    for mult in p_prime.multiplicities().values():
        value /= factorial(mult)
    return value


def ewens_allelic(m: AllelicVector, theta) -> Fraction:
    """Same function written over the allelic vector (independent formula)."""
    theta = as_fraction(theta)
    k = m.k
    if theta.denominator == 1 and -(k - 1) <= theta <= -1:
        raise PoleError(f"pole at theta={theta}")
    if theta == 0:
        return Fraction(1) if sum(m.m) == 1 else Fraction(0)
    value = Fraction(factorial(k)) / (theta * _rising(theta, 1, k))
    for q, mq in enumerate(m.m, start=1):
        value *= theta**mq / (Fraction(q) ** mq * factorial(mq))
    return value


def cycle_type_coefficient(p_prime, N: int) -> Fraction:
    """Signed coefficient of the ``p'`` orbit monomial in F_{N,k}.

    ``(-1)^(k-n) k!/(N(N-1)...(N-k+1)) N^n prod 1/p'_i prod 1/m_q!``.
    """
    p_prime = _as_partition(p_prime)
    k, n = p_prime.size, p_prime.length
    if N < k:
        raise ValidationError(f"N={N} < k={k}")
    falling = prod(range(N - k + 1, N + 1))
    value = Fraction((-1) ** (k - n) * factorial(k) * N**n, falling)
    for part in p_prime.parts:
        value /= part
    for mult in p_prime.multiplicities().values():
        value /= factorial(mult)
    return value
