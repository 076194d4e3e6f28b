"""Acceptance suite: fourteen exact checks over the whole library.

Each check returns ``(passed, expected, actual)`` strings suitable for a
machine-readable report.  Two profiles exist: ``quick`` trims the sweep
ranges of the expensive checks, ``full`` runs them at the stated scale.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from math import comb, factorial

import numpy as np

from urnlaw import __version__
from urnlaw.definetti import (
    PriorMixture,
    decompose,
    empirical_prior,
    exhaustive_draw_law,
    mix,
    prior_tv,
    sample_exchangeable,
)
from urnlaw.errors import PoleError
from urnlaw.extremal import (
    diagonal_mass,
    enumerate_quantized,
    f_nk_bruteforce,
    f_nk_explicit,
    f_nk_partition,
    f_nk_recursive,
    f_nk_truncated,
    has_zero_diagonal,
    is_offdiagonal_extreme,
    prefactor,
    term_mass_table,
    truncation_bound,
)
from urnlaw.measures import DiscreteMeasure, StateSpace, mass_norm, tensor_power
from urnlaw.mmot import CostTensor, convexify_ell2, gamma_limit_gap, solve_primal, solve_reformulated
from urnlaw.partitions import (
    IntegerPartition,
    coefficient_c,
    coefficient_d,
    contributing_partitions,
    cycle_type_coefficient,
    enumerate_integer_partitions,
    enumerate_set_partitions,
    ewens,
    stirling_first_unsigned,
)

PROFILES = {
    "quick": {
        "oracle_ell": 3, "oracle_N": 4,
        "round_trips": 100,
        "trunc_N": 5,
        "offdiag_N": 4,
        "mmot_N": 4, "mmot_closed_N": 8,
        "hull_N": (2, 3, 4, 5, 8, 13, 16),
        "gamma_N": 20,
    },
    "full": {
        "oracle_ell": 4, "oracle_N": 6,
        "round_trips": 500,
        "trunc_N": 6,
        "offdiag_N": 5,
        "mmot_N": 6, "mmot_closed_N": 12,
        "hull_N": tuple(range(2, 65)),
        "gamma_N": 20,
    },
}

URN_EXAMPLE_WEIGHTS = {(3, 0, 0): Fraction(8, 27), (2, 1, 0): Fraction(4, 9), (1, 2, 0): Fraction(2, 9), (0, 3, 0): Fraction(1, 27)}
RHO_GRID = (Fraction(0), Fraction(1, 5), Fraction(1, 3), Fraction(1, 2), Fraction(7, 9))
INTERIOR = tuple(Fraction(a, 67) for a in (1, 9, 16, 23, 30)) + tuple(Fraction(a, 71) for a in (38, 45, 52, 61, 70))
COST_SEEDS = (0, 1, 2, 3, 4)


@dataclass
class Check:
    id: int
    name: str
    passed: bool
    expected: str
    actual: str
    seconds: float


REPORT_SCHEMA = {
    "type": "object",
    "required": ["version", "profile", "passed", "checks"],
    "properties": {
        "version": {"type": "string"},
        "profile": {"enum": list(PROFILES)},
        "passed": {"type": "boolean"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "name", "passed", "expected", "actual", "seconds"],
                "properties": {
                    "id": {"type": "integer"},
                    "name": {"type": "string"},
                    "passed": {"type": "boolean"},
                    "expected": {"type": "string"},
                    "actual": {"type": "string"},
                    "seconds": {"type": "number"},
                },
            },
        },
    },
}


def _space(ell: int) -> StateSpace:
    return StateSpace.of_size(ell)


def check_master_oracle(cfg):
    mismatches = []
    count = 0
    for ell in range(1, cfg["oracle_ell"] + 1):
        space = _space(ell)
        for N in range(2, cfg["oracle_N"] + 1):
            for urn in enumerate_quantized(N, space):
                for k in range(2, N + 1):
                    ref = f_nk_bruteforce(urn, k)
                    for route in (f_nk_explicit, f_nk_recursive, f_nk_partition):
                        if route(N, urn, k) != ref:
                            mismatches.append((route.__name__, ell, N, k, urn.counts))
                    count += 1
    return (
        not mismatches,
        "four routes identical on every urn",
        f"{count} (urn, k) cases, {len(mismatches)} mismatches {mismatches[:3]}",
    )


COEFF_TABLES = {3: [3, 2], 4: [6, 8, 3, 6], 5: [10, 20, 15, 30, 20, 24]}


def check_coefficient_tables(cfg):
    actual = {k: [coefficient_d(k, p) for j in range(1, k) for p in contributing_partitions(k, j)] for k in COEFF_TABLES}
    edge_ok = all(
        coefficient_d(k, (1,)) == Fraction(k * (k - 1), 2) and coefficient_d(k, (k - 1,)) == factorial(k - 1)
        for k in range(2, 9)
    )
    ok = all(actual[k] == COEFF_TABLES[k] for k in COEFF_TABLES) and edge_ok
    shown = {k: [str(v) for v in vals] for k, vals in actual.items()}
    return ok, f"{COEFF_TABLES}; edge rows k(k-1)/2 and (k-1)!", f"{shown}; edge rows ok={edge_ok}"


def check_sum_rule(cfg):
    bad = []
    for k in range(2, 9):
        for j in range(1, k):
            total = sum((coefficient_d(k, p) for p in contributing_partitions(k, j)), Fraction(0))
            if not total == coefficient_c(k, j) == stirling_first_unsigned(k, k - j):
                bad.append((k, j, total))
    return not bad, "sum d = c_j = s(k,k-j) for 2<=k<=8", f"{len(bad)} failures {bad[:3]}"


def _set_partition_orbit_coefficient(p_prime: IntegerPartition, N: int) -> Fraction:
    k, n = p_prime.size, p_prime.length
    beta_sum = sum(P.beta() for P in enumerate_set_partitions(k) if P.profile() == p_prime)
    return Fraction(factorial(N - k), factorial(N)) * (-1) ** (k - n) * N**n * beta_sum


def check_ewens(cfg):
    bad = []
    for k in range(1, 7):
        for N in range(k, k + 5):
            for pp in enumerate_integer_partitions(k):
                a = cycle_type_coefficient(pp, N)
                if not a == _set_partition_orbit_coefficient(pp, N) == ewens(pp, -N):
                    bad.append(("coef", k, N, pp.parts))
    thetas = [Fraction(1), Fraction(1, 2), Fraction(7, 3), Fraction(-1, 2), Fraction(-7, 2), Fraction(10)]
    for k in range(1, 7):
        for theta in thetas:
            if sum((ewens(p, theta) for p in enumerate_integer_partitions(k)), Fraction(0)) != 1:
                bad.append(("sum", k, theta))
        for t in range(-(k + 3), 3):
            raised = False
            try:
                ewens((k,), t)
            except PoleError:
                raised = True
            if raised != (-(k - 1) <= t <= -1):
                bad.append(("pole", k, t))
    return not bad, "coefficients = ewens(., -N); sums = 1; poles exactly {-1..-(k-1)}", f"{len(bad)} failures {bad[:3]}"


def _urn_example_space():
    return StateSpace(("r", "g", "b"))


def check_urn_example(cfg):
    space = _urn_example_space()
    lam = DiscreteMeasure(space, (Fraction(2, 3), Fraction(1, 3), Fraction(0)))
    got = decompose(tensor_power(lam, 3), 3).as_dict()
    alt = PriorMixture.from_counts(
        space, 3, [(Fraction(2, 9), (3, 0, 0)), (Fraction(2, 3), (2, 1, 0)), (Fraction(1, 9), (0, 3, 0))]
    )
    alt_ok = mix(alt, 2) == tensor_power(lam, 2)
    ok = got == URN_EXAMPLE_WEIGHTS and alt_ok and alt.as_dict() != got
    shown = {"".join("rgb"[i] * c for i, c in enumerate(counts)): str(w) for counts, w in got.items()}
    return ok, "rrr 8/27, rrg 4/9, rgg 2/9, ggg 1/27; alternative k=2 prior reproduces lam^2", f"{shown}; alt ok={alt_ok}"


def random_prior(rng: np.random.Generator, space: StateSpace, N: int) -> PriorMixture:
    urns = list(enumerate_quantized(N, space))
    size = int(rng.integers(1, len(urns) + 1))
    chosen = rng.choice(len(urns), size=size, replace=False)
    raw = [int(rng.integers(1, 20)) for _ in chosen]
    total = sum(raw)
    return PriorMixture(space, N, tuple((Fraction(r, total), urns[i]) for r, i in zip(raw, chosen)))


def check_round_trip(cfg):
    rng = np.random.default_rng(20240601)
    bad = 0
    for _ in range(cfg["round_trips"]):
        ell = int(rng.integers(1, 4))
        N = int(rng.integers(1, 6))
        prior = random_prior(rng, _space(ell), N)
        if decompose(mix(prior, N), N) != prior:
            bad += 1
    return bad == 0, f"{cfg['round_trips']} exact round trips", f"{bad} failures"


def check_quantized_count(cfg):
    bad = [(N, ell) for N in range(1, 9) for ell in range(1, 6)
           if sum(1 for _ in enumerate_quantized(N, _space(ell))) != comb(N + ell - 1, ell - 1)]
    return not bad, "count = binom(N+l-1, l-1) for N<=8, l<=5", f"{len(bad)} failures {bad[:3]}"


def check_truncation(cfg):
    bad = []
    cases = 0
    for ell in range(1, 4):
        for N in range(2, cfg["trunc_N"] + 1):
            for urn in enumerate_quantized(N, _space(ell)):
                for k in range(2, N + 1):
                    for p in range(0, k - 1):
                        _, res = f_nk_truncated(N, urn, k, p)
                        mass = mass_norm(res)
                        cases += 1
                        if mass > truncation_bound(N, k, p):
                            bad.append(("bound", N, k, p, urn.counts))
                        if p == k - 2 and mass != prefactor(N, k) * factorial(k - 1) / Fraction(N) ** (k - 1):
                            bad.append(("last", N, k, urn.counts))
    return not bad, "residual mass <= prefactor C_k / N^(p+1); equality form at p=k-2", f"{cases} cases, {len(bad)} failures {bad[:3]}"


def check_figure(cfg):
    ratios = {}
    exceeds = {}
    for N in (5, 6, 20):
        rows = term_mass_table(N, 4)
        lead, first = rows[0][2], rows[1][2]
        ratios[N] = first / lead
        exceeds[N] = (first > lead, first == lead)
    ok = (
        ratios == {5: Fraction(6, 5), 6: Fraction(1), 20: Fraction(3, 10)}
        and exceeds[5][0] and exceeds[6][1] and not exceeds[20][0]
    )
    return ok, "c_1/N = 6/5 at N=5, 1 at N=6, 3/10 at N=20", str({N: str(r) for N, r in ratios.items()})


def check_offdiagonal(cfg):
    bad = []
    for ell in range(1, 4):
        space = _space(ell)
        for N in range(1, cfg["offdiag_N"] + 1):
            for urn in enumerate_quantized(N, space):
                for k in range(1, N + 1):
                    F = f_nk_explicit(N, urn, k)
                    if is_offdiagonal_extreme(urn, k) != has_zero_diagonal(F):
                        bad.append(("class", N, k, urn.counts))
                    for x in range(ell):
                        if diagonal_mass(N, urn, k, x) != F.diagonal_entry(x):
                            bad.append(("factor", N, k, urn.counts, x))
    return not bad, "count criterion <=> zero diagonal; factorized diagonal = tensor entry", f"{len(bad)} failures {bad[:3]}"


def mmot_costs(space: StateSpace, k: int):
    yield "diag", CostTensor.diag_indicator(space, k)
    for s in COST_SEEDS:
        yield f"random{s}", CostTensor.random(space, k, seed=1000 * k + s)


def check_mmot(cfg):
    space = _space(2)
    bad = []
    cases = 0
    for N in range(2, cfg["mmot_N"] + 1):
        for k in range(2, min(3, N) + 1):
            for name, phi in mmot_costs(space, k):
                for r in RHO_GRID:
                    rho = DiscreteMeasure(space, (r, 1 - r))
                    a = solve_primal(N, phi, rho).value
                    b = solve_reformulated(N, phi, rho)[0].value
                    cases += 1
                    if a != b:
                        bad.append((N, k, name, r, a, b))
    closed = {}
    half = DiscreteMeasure(space, (Fraction(1, 2), Fraction(1, 2)))
    for N in range(2, cfg["mmot_closed_N"] + 1, 2):
        closed[N] = solve_primal(N, CostTensor.diag_indicator(space, 2), half).value
        if closed[N] != Fraction(N - 2, 2 * (N - 1)):
            bad.append(("closed", N, closed[N]))
    return (
        not bad,
        "primal = reformulated on every instance; C_N2(1/2,1/2) = (N-2)/(2(N-1)) for even N",
        f"{cases} instances, {len(bad)} failures {bad[:3]}; closed form {{{', '.join(f'{N}: {v}' for N, v in closed.items())}}}",
    )


def check_hull(cfg):
    space = _space(2)
    bad = []
    cases = 0
    for N in cfg["hull_N"]:
        for k in range(2, min(4, N) + 1):
            phi = CostTensor.diag_indicator(space, k)
            hull = convexify_ell2(N, phi)
            for x in [Fraction(m, N) for m in range(N + 1)] + list(INTERIOR):
                cases += 1
                lp = solve_reformulated(N, phi, DiscreteMeasure(space, (x, 1 - x)))[0].value
                if hull(x) != lp:
                    bad.append((N, k, x, hull(x), lp))
    return not bad, "hull value = LP value at every vertex and interior point", f"{cases} evaluations, {len(bad)} failures {bad[:3]}"


def check_gamma(cfg):
    space = _space(2)
    phi = CostTensor.diag_indicator(space, 2)
    half = DiscreteMeasure(space, (Fraction(1, 2), Fraction(1, 2)))
    bad = []
    gaps = {}
    for N in range(2, cfg["gamma_N"] + 1):
        g = gamma_limit_gap(N, phi, half)
        gaps[N] = g.gap
        if not g.holds:
            bad.append(("sandwich", N))
        # the balanced urn exists only for even N
        expected = Fraction(-1, 2 * (N - 1)) if N % 2 == 0 else Fraction(-1, 2 * N)
        if g.gap != expected:
            bad.append(("gap", N, g.gap))
    even = {N: str(v) for N, v in gaps.items() if N % 2 == 0}
    odd = {N: str(v) for N, v in gaps.items() if N % 2}
    return (
        not bad,
        "sandwich holds for N=2..20; gap = -1/(2(N-1)) for even N (odd N: -1/(2N))",
        f"{len(bad)} failures {bad[:3]}; even gaps {even}; odd gaps {odd}",
    )


def check_statistical(cfg):
    space = _urn_example_space()
    prior = PriorMixture.from_counts(space, 3, [(w, c) for c, w in URN_EXAMPLE_WEIGHTS.items()])
    tv = prior_tv(empirical_prior(sample_exchangeable(prior, 3, 10**4, seed=42)), prior)
    bad = []
    for ell in range(1, 4):
        for N in range(1, 5):
            for urn in enumerate_quantized(N, _space(ell)):
                for k in range(1, N + 1):
                    if exhaustive_draw_law(urn, k) != f_nk_bruteforce(urn, k):
                        bad.append((N, k, urn.counts))
    return (
        tv < Fraction(1, 20) and not bad,
        "TV < 0.05 at n=10^4, seed 42; exhaustive draw law = brute force",
        f"TV = {float(tv):.6f}; {len(bad)} draw-law failures",
    )


CHECKS = [
    (1, "master oracle equivalence", check_master_oracle),
    (2, "coefficient tables", check_coefficient_tables),
    (3, "sum rule and Stirling numbers", check_sum_rule),
    (4, "Ewens identity and poles", check_ewens),
    (5, "urn example and non-uniqueness", check_urn_example),
    (6, "prior round trip", check_round_trip),
    (7, "quantized measure count", check_quantized_count),
    (8, "truncation bounds", check_truncation),
    (9, "term-mass figure ratios", check_figure),
    (10, "off-diagonal classification", check_offdiagonal),
    (11, "MMOT formulation equivalence", check_mmot),
    (12, "Graham-scan hull equals LP", check_hull),
    (13, "Gamma-limit sandwich", check_gamma),
    (14, "statistical recovery and sampling soundness", check_statistical),
]


def run_check(cid: int, profile: str = "quick") -> Check:
    cfg = PROFILES[profile]
    _, name, fn = next(c for c in CHECKS if c[0] == cid)
    t0 = time.perf_counter()
    try:
        passed, expected, actual = fn(cfg)
    except Exception as exc:  # a crash is a failed check, not an aborted suite
        passed, expected, actual = False, "no exception", f"{type(exc).__name__}: {exc}"
    return Check(cid, name, bool(passed), expected, actual, round(time.perf_counter() - t0, 3))


def verify_all(profile: str = "quick", only=None, progress=None) -> dict:
    """Run the suite; returns a report dict (see ``REPORT_SCHEMA``)."""
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    checks = []
    for cid, _, _ in CHECKS:
        if only and cid not in only:
            continue
        c = run_check(cid, profile)
        if progress:
            progress(c)
        checks.append(c)
    return {
        "version": __version__,
        "profile": profile,
        "passed": all(c.passed for c in checks),
        "checks": [asdict(c) for c in checks],
    }


def format_line(c: Check | dict) -> str:
    d = c if isinstance(c, dict) else asdict(c)
    return f"[{'PASS' if d['passed'] else 'FAIL'}] {d['id']:2d} {d['name']}: {d['actual']}"
