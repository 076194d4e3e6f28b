"""Exact measure algebra on a finite state space and its k-fold products.

Tensors are dense numpy arrays of dtype ``object`` holding
:class:`~fractions.Fraction` entries, shape ``(ell,) * k``.  Indices are
0-based internally and 1-based in every serialized form.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from urnlaw.errors import BudgetError, ValidationError
from urnlaw.partitions import SetPartition
from urnlaw.rational import as_fraction, format_fraction

MAX_TENSOR_ENTRIES = 10**7
MAX_SUBSET_STATES = 16

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class StateSpace:
    labels: tuple[str, ...]

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if not labels:
            raise ValidationError("a state space needs at least one point")
        if len(set(labels)) != len(labels):
            raise ValidationError(f"state labels must be distinct: {labels}")

    @classmethod
    def of_size(cls, ell: int) -> "StateSpace":
        return cls(tuple(f"a{i}" for i in range(1, ell + 1)))

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown state {label!r}") from None

    def __len__(self):
        return len(self.labels)


def check_budget(ell: int, k: int, limit: int = MAX_TENSOR_ENTRIES) -> None:
    if ell**k > limit:
        raise BudgetError(f"tensor with {ell}^{k} entries exceeds budget {limit}")


def zeros(ell: int, k: int) -> np.ndarray:
    check_budget(ell, k)
    return np.full((ell,) * k, ZERO, dtype=object)


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Probability measure on a finite state space with exact weights."""

    space: StateSpace
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        weights = tuple(as_fraction(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        if len(weights) != self.space.size:
            raise ValidationError(f"{len(weights)} weights for {self.space.size} states")
        if any(w < 0 for w in weights):
            raise ValidationError(f"negative weight in {weights}")
        if sum(weights) != 1:
            raise ValidationError(f"weights sum to {sum(weights)}, not 1")

    @classmethod
    def from_weights(cls, weights, labels=None) -> "DiscreteMeasure":
        weights = tuple(as_fraction(w) for w in weights)
        space = StateSpace(tuple(labels)) if labels is not None else StateSpace.of_size(len(weights))
        return cls(space, weights)

    @classmethod
    def dirac(cls, space: StateSpace, i: int) -> "DiscreteMeasure":
        return cls(space, tuple(ONE if j == i else ZERO for j in range(space.size)))

    def array(self) -> np.ndarray:
        return np.array(self.weights, dtype=object)

    def __eq__(self, other):
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return self.space == other.space and self.weights == other.weights

    def __hash__(self):
        return hash((self.space, self.weights))

    def __repr__(self):
        return f"DiscreteMeasure({', '.join(map(str, self.weights))})"


@dataclass(frozen=True)
class QuantizedMeasure:
    """A 1/N-quantized measure stored as ball counts, i.e. an urn."""

    space: StateSpace
    N: int
    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if len(counts) != self.space.size:
            raise ValidationError(f"{len(counts)} counts for {self.space.size} states")
        if any(c < 0 for c in counts):
            raise ValidationError(f"negative count in {counts}")
        if self.N < 1 or sum(counts) != self.N:
            raise ValidationError(f"counts {counts} do not sum to N={self.N}")

    @classmethod
    def from_measure(cls, lam: DiscreteMeasure, N: int) -> "QuantizedMeasure":
        scaled = [w * N for w in lam.weights]
        if any(s.denominator != 1 for s in scaled):
            raise ValidationError(f"{lam} is not 1/{N}-quantized")
        return cls(lam.space, N, tuple(int(s) for s in scaled))

    def to_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.space, tuple(Fraction(c, self.N) for c in self.counts))

    def balls(self) -> tuple[int, ...]:
        """The urn's multiset as a sorted tuple of state indices."""
        return tuple(i for i, c in enumerate(self.counts) for _ in range(c))

    def colex_key(self):
        return tuple(reversed(self.counts))

    def word(self) -> str:
        """Compact name such as ``rrg`` when labels are single characters."""
        return "".join(self.space.labels[i] for i in self.balls())


class SignedTensor:
    """Signed measure on ``X^k`` with exact weights, immutable by convention."""

    __slots__ = ("space", "weights")

    def __init__(self, space: StateSpace, weights: np.ndarray):
        weights = np.asarray(weights, dtype=object)
        if weights.ndim == 0 or any(s != space.size for s in weights.shape):
            raise ValidationError(f"tensor shape {weights.shape} incompatible with {space.size} states")
        self.space = space
        self.weights = weights

    @property
    def order(self) -> int:
        return self.weights.ndim

    @property
    def ell(self) -> int:
        return self.space.size

    def __getitem__(self, idx):
        return self.weights[idx]

    def _coerce(self, other):
        if not isinstance(other, SignedTensor):
            return NotImplemented
        if other.space != self.space or other.order != self.order:
            raise ValidationError("tensors live on different product spaces")
        return other.weights

    def __add__(self, other):
        w = self._coerce(other)
        if w is NotImplemented:
            return w
        return SignedTensor(self.space, self.weights + w)

    def __sub__(self, other):
        w = self._coerce(other)
        if w is NotImplemented:
            return w
        return SignedTensor(self.space, self.weights - w)

    def __neg__(self):
        return SignedTensor(self.space, -self.weights)

    def __mul__(self, scalar):
        return SignedTensor(self.space, self.weights * as_fraction(scalar))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SignedTensor):
            return NotImplemented
        return (
            self.space == other.space
            and self.order == other.order
            and bool(np.all(self.weights == other.weights))
        )

    __hash__ = None

    def __repr__(self):
        return f"SignedTensor(order={self.order}, ell={self.ell}, nnz={len(self.entries())})"

    def outer(self, other: "SignedTensor") -> "SignedTensor":
        if other.space != self.space:
            raise ValidationError("tensors live on different state spaces")
        check_budget(self.ell, self.order + other.order)
        return SignedTensor(self.space, np.multiply.outer(self.weights, other.weights))

    def mass(self) -> Fraction:
        return sum(self.weights.flat, ZERO)

    def is_probability(self) -> bool:
        return self.mass() == 1 and all(w >= 0 for w in self.weights.flat)

    def is_symmetric(self) -> bool:
        return all(
            np.all(self.weights == self.weights.transpose(perm))
            for perm in _adjacent_transpositions(self.order)
        )

    def entries(self) -> list[tuple[tuple[int, ...], Fraction]]:
        """Nonzero entries as ``(0-based multi-index, weight)`` in row-major order."""
        return [(idx, w) for idx, w in np.ndenumerate(self.weights) if w != 0]

    def integrate(self, phi) -> Fraction:
        """Contract against a function given as an array of shape ``(ell,)*k``."""
        phi = np.asarray(phi, dtype=object)
        if phi.shape != self.weights.shape:
            raise ValidationError("integrand shape mismatch")
        return sum((a * b for a, b in zip(self.weights.flat, phi.flat) if a != 0), ZERO)

    def diagonal_entry(self, i: int) -> Fraction:
        return self.weights[(i,) * self.order]

    @classmethod
    def from_entries(cls, space: StateSpace, order: int, entries) -> "SignedTensor":
        w = zeros(space.size, order)
        for idx, value in entries:
            w[tuple(idx)] += as_fraction(value)
        return cls(space, w)

    @classmethod
    def dirac(cls, space: StateSpace, idx) -> "SignedTensor":
        w = zeros(space.size, len(idx))
        w[tuple(idx)] = ONE
        return cls(space, w)

    def to_json(self) -> dict:
        return {
            "labels": list(self.space.labels),
            "order": self.order,
            "entries": [
                {"idx": [i + 1 for i in idx], "w": format_fraction(w)} for idx, w in self.entries()
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SignedTensor":
        try:
            space = StateSpace(tuple(data["labels"]))
            order = int(data["order"])
            entries = [(tuple(int(i) - 1 for i in e["idx"]), e["w"]) for e in data["entries"]]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed tensor JSON: {exc}") from exc
        for idx, _ in entries:
            if len(idx) != order or any(not 0 <= i < space.size for i in idx):
                raise ValidationError(f"bad multi-index {[i + 1 for i in idx]}")
        return cls.from_entries(space, order, entries)


def _adjacent_transpositions(k: int):
    for a in range(k - 1):
        perm = list(range(k))
        perm[a], perm[a + 1] = perm[a + 1], perm[a]
        yield tuple(perm)


def tensor_power(lam: DiscreteMeasure, k: int) -> SignedTensor:
    """``lam^{(x)k}``: weight ``prod_j lam[i_j]`` at ``(i_1..i_k)``."""
    if k < 1:
        raise ValidationError("order must be at least 1")
    check_budget(lam.space.size, k)
    base = lam.array()
    w = base
    for _ in range(k - 1):
        w = np.multiply.outer(w, base)
    return SignedTensor(lam.space, w)


def diagonal_push(lam: DiscreteMeasure, m: int) -> SignedTensor:
    """Push-forward of ``lam`` under ``x -> (x, ..., x)`` (``m`` copies)."""
    if m < 1:
        raise ValidationError("order must be at least 1")
    w = zeros(lam.space.size, m)
    for i, li in enumerate(lam.weights):
        w[(i,) * m] = li
    return SignedTensor(lam.space, w)


def block_push(lam: DiscreteMeasure, partition: SetPartition) -> SignedTensor:
    """``G_P(lam)``: one factor of ``lam`` per block, pushed onto that block's diagonal."""
    k = partition.k
    ell = lam.space.size
    w = zeros(ell, k)
    labels = partition.labels()
    for assignment in itertools.product(range(ell), repeat=partition.n_blocks):
        value = ONE
        for s in assignment:
            value *= lam.weights[s]
            if value == 0:
                break
        if value:
            w[tuple(assignment[b] for b in labels)] = value
    return SignedTensor(lam.space, w)


@lru_cache(maxsize=64)
def _orbit_structure(ell: int, k: int):
    """Orbit id of every flat index under coordinate permutations, plus orbit sizes."""
    idx = np.indices((ell,) * k).reshape(k, -1)
    key = np.ravel_multi_index(np.sort(idx, axis=0), (ell,) * k)
    _, orbit, sizes = np.unique(key, return_inverse=True, return_counts=True)
    return orbit.ravel(), sizes.astype(object)


def symmetrize(T: SignedTensor) -> SignedTensor:
    """Average over all coordinate permutations.

    Each entry becomes the mean of ``T`` over its orbit, which is the same
    as ``(1/k!) sum_sigma T^sigma`` without materializing ``k!`` copies.
    """
    if T.order == 1:
        return T
    orbit, sizes = _orbit_structure(T.ell, T.order)
    sums = [ZERO] * len(sizes)
    for o, w in zip(orbit.tolist(), T.weights.flat):
        if w:
            sums[o] += w
    means = np.array([s / n if s else ZERO for s, n in zip(sums, sizes)], dtype=object)
    return SignedTensor(T.space, means[orbit].reshape(T.weights.shape))


def symmetrize_bruteforce(T: SignedTensor) -> SignedTensor:
    """Literal ``(1/k!) sum over all k! transposes``; slow reference version."""
    perms = list(itertools.permutations(range(T.order)))
    total = sum((T.weights.transpose(p) for p in perms[1:]), T.weights.copy())
    return SignedTensor(T.space, total * Fraction(1, len(perms)))


def marginal(T: SignedTensor, k: int) -> SignedTensor:
    """Keep the first ``k`` coordinates, summing out the rest."""
    n = T.order
    if not 1 <= k <= n:
        raise ValidationError(f"marginal order {k} outside 1..{n}")
    if k == n:
        return T
    w = T.weights.sum(axis=tuple(range(k, n)))
    return SignedTensor(T.space, np.asarray(w, dtype=object).reshape((T.ell,) * k))


def one_point_marginal(T: SignedTensor) -> DiscreteMeasure:
    return DiscreteMeasure(T.space, tuple(marginal(T, 1).weights))


def mass_norm(T: SignedTensor) -> Fraction:
    """Sum of absolute weights."""
    return sum((abs(w) for w in T.weights.flat), ZERO)


def set_sup_norm(T: SignedTensor) -> Fraction:
    """``sup_A |T(A)|`` = larger of the positive and negative parts."""
    pos = sum((w for w in T.weights.flat if w > 0), ZERO)
    neg = -sum((w for w in T.weights.flat if w < 0), ZERO)
    return max(pos, neg)


def verify_quantization(lam: DiscreteMeasure, N: int):
    """Quadratic-constraint test for membership in the 1/N-quantized measures.

    Checks ``f_k(t) = t^2 - (2k+1)/N t + k(k+1)/N^2 >= 0`` for ``t = lam(A)``
    over every subset ``A`` and ``k in 0..N-1``.  Returns ``(True, None)``
    or ``(False, (A, k))`` with ``A`` a tuple of 0-based state indices.
    """
    ell = lam.space.size
    if ell > MAX_SUBSET_STATES:
        raise BudgetError(f"subset enumeration over {ell} states exceeds {MAX_SUBSET_STATES}")
    if N < 1:
        raise ValidationError("N must be positive")
    for r in range(ell + 1):
        for subset in itertools.combinations(range(ell), r):
            t = sum((lam.weights[i] for i in subset), ZERO)
            for k in range(N):
                if t * t - Fraction(2 * k + 1, N) * t + Fraction(k * (k + 1), N * N) < 0:
                    return False, (subset, k)
    return True, None


def is_quantized(lam: DiscreteMeasure, N: int) -> bool:
    """Direct check that every ``N * lam_i`` is an integer."""
    return all((w * N).denominator == 1 for w in lam.weights)


def count_quantized(N: int, ell: int) -> int:
    return comb(N + ell - 1, ell - 1)
