"""Finite de Finetti layer: mixtures of urn laws, their inversion, and sampling.

A :class:`PriorMixture` is a finitely supported probability measure on the
1/N-quantized measures (urns).  Mixing it against ``F_{N,k}`` gives an
N-representable k-plan; at ``k = N`` the prior can be read back uniquely
by pushing the plan forward under "sequence -> count vector".
"""

from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from math import comb, lcm

import numpy as np

from urnlaw.errors import BudgetError, ValidationError
from urnlaw.extremal import enumerate_quantized, f_nk_explicit, f_nk_truncated, prefactor, truncation_bound
from urnlaw.measures import (
    ZERO,
    QuantizedMeasure,
    SignedTensor,
    StateSpace,
    set_sup_norm,
    symmetrize,
    tensor_power,
)
from urnlaw.rational import as_fraction, format_fraction
from urnlaw.simplex import INFEASIBLE, OPTIMAL, LPInstance, simplex_solve

MAX_LP_COLUMNS = 10**6


@dataclass(frozen=True)
class PriorMixture:
    """Weights on distinct urns; canonical order is colex on the count vectors."""

    space: StateSpace
    N: int
    atoms: tuple[tuple[Fraction, QuantizedMeasure], ...]

    def __post_init__(self):
        merged: dict[tuple[int, ...], Fraction] = {}
        for weight, urn in self.atoms:
            weight = as_fraction(weight)
            if urn.space != self.space or urn.N != self.N:
                raise ValidationError(f"atom {urn.counts} does not live in P_1/{self.N} on this space")
            if weight < 0:
                raise ValidationError(f"negative prior weight {weight}")
            merged[urn.counts] = merged.get(urn.counts, ZERO) + weight
        if sum(merged.values(), ZERO) != 1:
            raise ValidationError(f"prior weights sum to {sum(merged.values(), ZERO)}, not 1")
        atoms = tuple(
            (w, QuantizedMeasure(self.space, self.N, counts))
            for counts, w in sorted(merged.items(), key=lambda kv: tuple(reversed(kv[0])))
            if w != 0
        )
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def point_mass(cls, urn: QuantizedMeasure) -> "PriorMixture":
        return cls(urn.space, urn.N, ((Fraction(1), urn),))

    @classmethod
    def from_counts(cls, space: StateSpace, N: int, weighted_counts) -> "PriorMixture":
        """Build from ``[(weight, counts), ...]``."""
        return cls(space, N, tuple((as_fraction(w), QuantizedMeasure(space, N, c)) for w, c in weighted_counts))

    def as_dict(self) -> dict[tuple[int, ...], Fraction]:
        return {urn.counts: w for w, urn in self.atoms}

    def to_json(self) -> dict:
        return {
            "labels": list(self.space.labels),
            "N": self.N,
            "atoms": [{"weight": format_fraction(w), "counts": list(u.counts)} for w, u in self.atoms],
        }

    @classmethod
    def from_json(cls, data: dict, labels=None) -> "PriorMixture":
        try:
            N = int(data["N"])
            labels = data.get("labels", labels)
            atoms = [(a["weight"], tuple(a["counts"])) for a in data["atoms"]]
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed prior JSON: {exc}") from exc
        if labels is None:
            labels = StateSpace.of_size(len(atoms[0][1])).labels
        return cls.from_counts(StateSpace(tuple(labels)), N, atoms)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def prior_tv(a: PriorMixture, b: PriorMixture) -> Fraction:
    """Total variation ``sup_A |a(A) - b(A)|`` between two priors."""
    da, db = a.as_dict(), b.as_dict()
    return sum((abs(da.get(c, ZERO) - db.get(c, ZERO)) for c in set(da) | set(db)), ZERO) / 2


def mix(prior: PriorMixture, k: int) -> SignedTensor:
    """``sum_i w_i F_{N,k}(lam_i)``."""
    out = None
    for w, urn in prior.atoms:
        term = f_nk_explicit(prior.N, urn, k) * w
        out = term if out is None else out + term
    return out


def _require_symmetric_probability(gamma: SignedTensor) -> None:
    if not gamma.is_probability():
        raise ValidationError("input is not a probability tensor")
    if not gamma.is_symmetric():
        raise ValidationError("input is not symmetric under coordinate permutations")


def decompose(gamma: SignedTensor, N: int) -> PriorMixture:
    """Recover the unique prior of a symmetric probability ``N``-plan.

    Each support point is sent to its count vector and the weights are
    accumulated there.
    """
    if gamma.order != N:
        raise ValidationError(f"decomposition needs an order-{N} plan, got order {gamma.order}")
    _require_symmetric_probability(gamma)
    ell = gamma.ell
    acc: dict[tuple[int, ...], Fraction] = {}
    for idx, w in gamma.entries():
        counts = [0] * ell
        for i in idx:
            counts[i] += 1
        key = tuple(counts)
        acc[key] = acc.get(key, ZERO) + w
    return PriorMixture.from_counts(gamma.space, N, [(w, c) for c, w in acc.items()])


def decompose_float(weights, space: StateSpace, N: int, max_denominator: int = 10**6) -> PriorMixture:
    """Tolerant variant for float data: rationalize, symmetrize, renormalize, decompose."""
    arr = np.asarray(weights, dtype=float)
    if arr.shape != (space.size,) * N:
        raise ValidationError(f"expected shape {(space.size,) * N}, got {arr.shape}")
    if (arr < -1.0 / max_denominator).any():
        raise ValidationError("float plan has materially negative entries")
    frac = np.array(
        [Fraction(max(v, 0.0)).limit_denominator(max_denominator) for v in arr.flat], dtype=object
    ).reshape(arr.shape)
    T = symmetrize(SignedTensor(space, frac))
    total = T.mass()
    if total == 0:
        raise ValidationError("float plan has zero mass")
    return decompose(T * (1 / total), N)


@dataclass(frozen=True)
class SeparatingFunctional:
    """``phi`` and ``offset`` with ``<phi, F(lam)> + offset <= 0`` for every urn but ``> 0`` on the target."""

    phi: SignedTensor
    offset: Fraction

    def value(self, T: SignedTensor) -> Fraction:
        return T.integrate(self.phi.weights) + self.offset


@dataclass(frozen=True)
class Representability:
    representable: bool
    prior: PriorMixture | None = None
    certificate: SeparatingFunctional | None = None

    def __bool__(self):
        return self.representable


def _orbit_representatives(ell: int, k: int):
    return list(itertools.combinations_with_replacement(range(ell), k))


def _orbit_size(rep) -> int:
    size = 1
    remaining = len(rep)
    for _, group in itertools.groupby(rep):
        g = len(list(group))
        size *= comb(remaining, g)
        remaining -= g
    return size


def is_representable(mu_k: SignedTensor, N: int) -> Representability:
    """Exact LP feasibility: is ``mu_k`` a mixture of ``F_{N,k}`` over urns?

    Rows are the permutation orbits of ``X^k`` plus total mass; columns are
    all ``binom(N+ell-1, ell-1)`` urns.
    """
    k = mu_k.order
    if k > N:
        raise ValidationError(f"k={k} exceeds N={N}")
    _require_symmetric_probability(mu_k)
    space = mu_k.space
    if comb(N + space.size - 1, space.size - 1) > MAX_LP_COLUMNS:
        raise BudgetError("too many quantized measures for the feasibility LP")
    urns = list(enumerate_quantized(N, space))
    reps = _orbit_representatives(space.size, k)
    plans = [f_nk_explicit(N, u, k) for u in urns]
    A = [[plan[rep] for plan in plans] for rep in reps] + [[Fraction(1)] * len(urns)]
    b = [mu_k[rep] for rep in reps] + [Fraction(1)]
    result = simplex_solve(LPInstance([ZERO] * len(urns), A, b))
    if result.status == OPTIMAL:
        prior = PriorMixture(space, N, tuple((w, u) for w, u in zip(result.x, urns) if w != 0))
        return Representability(True, prior=prior)
    assert result.status == INFEASIBLE
    y = result.y
    phi = np.full((space.size,) * k, ZERO, dtype=object)
    for yo, rep in zip(y, reps):
        share = yo / _orbit_size(rep)
        for idx in set(itertools.permutations(rep)):
            phi[idx] = share
    return Representability(False, certificate=SeparatingFunctional(SignedTensor(space, phi), y[-1]))


def _draw_without_replacement(balls, k: int, choose) -> tuple[int, ...]:
    """Draw ``k`` balls; ``choose(m)`` returns a uniform index in ``range(m)``."""
    remaining = list(balls)
    out = []
    for _ in range(k):
        out.append(remaining.pop(choose(len(remaining))))
    return tuple(out)


def sample_urn(urn: QuantizedMeasure, k: int, rng: np.random.Generator) -> tuple[int, ...]:
    """``k`` draws without replacement; returns 0-based state indices."""
    if not 1 <= k <= urn.N:
        raise ValidationError(f"cannot draw {k} balls from an urn of {urn.N}")
    return _draw_without_replacement(urn.balls(), k, lambda m: int(rng.integers(m)))


def exhaustive_draw_law(urn: QuantizedMeasure, k: int) -> SignedTensor:
    """Run the sampler against every possible sequence of uniform choices.

    There are ``N (N-1) ... (N-k+1)`` equally likely choice sequences, so
    weighting each outcome uniformly gives the exact law of :func:`sample_urn`.
    """
    if not 1 <= k <= urn.N:
        raise ValidationError(f"cannot draw {k} balls from an urn of {urn.N}")
    balls = urn.balls()
    counts: dict[tuple[int, ...], int] = {}
    total = 0
    for script in itertools.product(*(range(urn.N - t) for t in range(k))):
        it = iter(script)
        seq = _draw_without_replacement(balls, k, lambda m: next(it))
        counts[seq] = counts.get(seq, 0) + 1
        total += 1
    return SignedTensor.from_entries(urn.space, k, ((s, Fraction(c, total)) for s, c in counts.items()))


@dataclass(frozen=True)
class SampleBatch:
    space: StateSpace
    N: int
    k: int
    seed: int
    prior_digest: str
    sequences: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.sequences)


def sequence_rng(seed: int, index: int) -> np.random.Generator:
    """PCG64 stream for sequence ``index``; independent of how many others are drawn."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _uniform_below(rng: np.random.Generator, bound: int) -> int:
    if bound < 2**63:
        return int(rng.integers(bound))
    nbits = bound.bit_length()
    while True:
        value = int.from_bytes(rng.bytes((nbits + 7) // 8), "little") >> (8 * ((nbits + 7) // 8) - nbits)
        if value < bound:
            return value


def _draw_urn(prior: PriorMixture, rng: np.random.Generator) -> QuantizedMeasure:
    den = lcm(*(w.denominator for w, _ in prior.atoms))
    u = _uniform_below(rng, den)
    acc = 0
    for w, urn in prior.atoms:
        acc += w.numerator * (den // w.denominator)
        if u < acc:
            return urn
    return prior.atoms[-1][1]


def sample_one(prior: PriorMixture, k: int, seed: int, index: int) -> tuple[int, ...]:
    rng = sequence_rng(seed, index)
    return sample_urn(_draw_urn(prior, rng), k, rng)


def sample_exchangeable(prior: PriorMixture, k: int, n: int, seed: int) -> SampleBatch:
    """``n`` sequences, each from an urn drawn from ``prior`` then emptied ``k`` times."""
    if not 1 <= k <= prior.N:
        raise ValidationError(f"k={k} outside 1..{prior.N}")
    if n < 0:
        raise ValidationError("n must be nonnegative")
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must be an unsigned 64-bit integer")
    seqs = tuple(sample_one(prior, k, seed, i) for i in range(n))
    return SampleBatch(prior.space, prior.N, k, seed, prior.digest(), seqs)


def empirical_law(batch: SampleBatch) -> SignedTensor:
    """Pooled empirical distribution of the sampled sequences."""
    n = len(batch)
    counts: dict[tuple[int, ...], int] = {}
    for s in batch.sequences:
        counts[s] = counts.get(s, 0) + 1
    return SignedTensor.from_entries(batch.space, batch.k, ((s, Fraction(c, n)) for s, c in counts.items()))


def empirical_prior(batch: SampleBatch) -> PriorMixture:
    """Empirical measure of the count vectors of the sampled sequences (``k = N``)."""
    if batch.k != batch.N:
        raise ValidationError(f"prior recovery needs full draws (k = N = {batch.N}), got k={batch.k}")
    if not batch.sequences:
        raise ValidationError("empty sample batch")
    ell = batch.space.size
    acc: dict[tuple[int, ...], int] = {}
    for seq in batch.sequences:
        counts = [0] * ell
        for s in seq:
            counts[s] += 1
        acc[tuple(counts)] = acc.get(tuple(counts), 0) + 1
    n = len(batch)
    return PriorMixture.from_counts(batch.space, batch.N, [(Fraction(c, n), k) for k, c in acc.items()])


def mixture_approximation(prior: PriorMixture, k: int, p: int, variant: str = "bare") -> SignedTensor:
    """Mixture of truncated approximations of ``F_{N,k}``.

    ``p = 0`` and ``variant="bare"`` mixes plain ``lam^{(x)k}``;
    ``variant="prefactor"`` scales the mean field by the prefactor.
    ``p >= 1`` always keeps the prefactor and the first ``p`` corrections.
    """
    if variant not in ("bare", "prefactor"):
        raise ValidationError(f"unknown variant {variant!r}")
    out = None
    for w, urn in prior.atoms:
        lam = urn.to_measure()
        if p == 0 and variant == "bare":
            approx = tensor_power(lam, k)
        elif p == 0:
            approx = tensor_power(lam, k) * prefactor(prior.N, k)
        else:
            approx, _ = f_nk_truncated(prior.N, lam, k, p)
        term = approx * w
        out = term if out is None else out + term
    return out


def df_gap(mu_k: SignedTensor, prior: PriorMixture, p: int, variant: str = "bare") -> Fraction:
    """``sup_A |mu_k(A) - approx(A)|`` for the order-``p`` mixture approximation."""
    k = mu_k.order
    if k < 2 or not 0 <= p <= k - 2:
        raise ValidationError(f"p must lie in 0..{k - 2}")
    if mix(prior, k) != mu_k:
        raise ValidationError("prior does not mix to the given plan")
    return set_sup_norm(mu_k - mixture_approximation(prior, k, p, variant))


def df_bound(N: int, k: int, p: int) -> Fraction:
    """Certified bound ``prefactor * C_k / N^(p+1)`` on :func:`df_gap`."""
    return truncation_bound(N, k, p)
