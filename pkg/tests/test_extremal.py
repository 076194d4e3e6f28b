from fractions import Fraction
from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rational_measures
from urnlaw.errors import ValidationError
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
    series_check,
    series_terms,
    term_mass_table,
    truncation_bound,
)
from urnlaw.measures import (
    DiscreteMeasure,
    QuantizedMeasure,
    SignedTensor,
    StateSpace,
    block_push,
    diagonal_push,
    marginal,
    mass_norm,
    symmetrize,
    tensor_power,
)
from urnlaw.partitions import coefficient_c, enumerate_integer_partitions, enumerate_set_partitions, ewens

F = Fraction


def urns(ell, N):
    return list(enumerate_quantized(N, StateSpace.of_size(ell)))


class TestExplicit:
    @given(rational_measures(), st.integers(2, 9))
    def test_k2_closed_form(self, lam, N):
        expected = tensor_power(lam, 2) * F(N, N - 1) - diagonal_push(lam, 2) * F(1, N - 1)
        assert f_nk_explicit(N, lam, 2) == expected

    @pytest.mark.parametrize("N", range(1, 6))
    def test_single_point_urn(self, N):
        S = StateSpace.of_size(3)
        lam = DiscreteMeasure.dirac(S, 2)
        assert f_nk_explicit(N, lam, N) == SignedTensor.dirac(S, (2,) * N)

    def test_rrg_table(self, rgb):
        T = f_nk_explicit(3, QuantizedMeasure(rgb, 3, (2, 1, 0)), 3)
        support = {(0, 0, 1), (0, 1, 0), (1, 0, 0)}
        for idx, w in np.ndenumerate(T.weights):
            assert w == (F(1, 3) if idx in support else 0)

    def test_k1_is_lambda(self):
        lam = DiscreteMeasure.from_weights([F(1, 7), F(6, 7)])
        assert f_nk_explicit(4, lam, 1) == tensor_power(lam, 1)

    def test_k_above_N(self):
        lam = DiscreteMeasure.from_weights([F(1, 2), F(1, 2)])
        for route in (f_nk_explicit, f_nk_recursive, f_nk_partition):
            with pytest.raises(ValidationError):
                route(2, lam, 3)

    @settings(max_examples=40)
    @given(rational_measures(), st.integers(2, 7), st.data())
    def test_total_mass_one(self, lam, N, data):
        k = data.draw(st.integers(1, min(N, 5)))
        assert f_nk_explicit(N, lam, k).mass() == 1


class TestRouteAgreement:
    @settings(max_examples=60, deadline=None)
    @given(rational_measures(), st.integers(2, 5), st.data())
    def test_three_routes_general_lambda(self, lam, N, data):
        k = data.draw(st.integers(2, min(N, 5)))
        T = f_nk_explicit(N, lam, k)
        assert f_nk_recursive(N, lam, k) == T
        assert f_nk_partition(N, lam, k) == T

    @pytest.mark.parametrize("ell", [1, 2, 3])
    @pytest.mark.parametrize("N", [2, 3, 4, 5])
    def test_bruteforce_oracle(self, ell, N):
        for urn in urns(ell, N):
            for k in range(1, N + 1):
                assert f_nk_explicit(N, urn, k) == f_nk_bruteforce(urn, k)

    def test_mu3_via_recursion(self, rgb):
        urn = QuantizedMeasure(rgb, 3, (2, 1, 0))
        assert f_nk_recursive(3, urn, 3) == f_nk_explicit(3, urn, 3)

    def test_k1_recursion_base(self):
        lam = DiscreteMeasure.from_weights([F(2, 5), F(3, 5)])
        assert f_nk_recursive(5, lam, 1) == tensor_power(lam, 1)

    def test_k2_partition_has_two_terms(self):
        lam = DiscreteMeasure.from_weights([F(1, 4), F(3, 4)])
        assert len(enumerate_set_partitions(2)) == 2
        expected = tensor_power(lam, 2) * F(5, 4) - diagonal_push(lam, 2) * F(1, 4)
        assert f_nk_partition(5, lam, 2) == expected

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_orbit_coefficients_are_ewens(self, k):
        # F_{N,k} = sum over cycle types p' of ewens(p', -N) * symmetrized block push
        lam = DiscreteMeasure.from_weights([F(1, 6), F(1, 3), F(1, 2)])
        reps = {}
        for P in enumerate_set_partitions(k):
            reps.setdefault(P.profile(), P)
        for N in range(k, k + 3):
            total = None
            for pp in enumerate_integer_partitions(k):
                term = symmetrize(block_push(lam, reps[pp])) * ewens(pp, -N)
                total = term if total is None else total + term
            assert f_nk_partition(N, lam, k) == total

    def test_k3_display(self):
        lam = DiscreteMeasure.from_weights([F(1, 5), F(4, 5)])
        for N in range(3, 8):
            d = (N - 1) * (N - 2)
            pair = symmetrize(diagonal_push(lam, 2).outer(tensor_power(lam, 1)))
            expected = tensor_power(lam, 3) * F(N * N, d) - pair * F(3 * N, d) + diagonal_push(lam, 3) * F(2, d)
            assert f_nk_explicit(N, lam, 3) == expected


class TestSeriesTerms:
    @pytest.mark.parametrize("k", range(2, 7))
    def test_term_structure(self, k):
        lam = DiscreteMeasure.from_weights([F(1, 3), F(2, 3)])
        terms = series_terms(lam, k)
        assert terms[0].j == 0 and terms[0].coefficient_sum() == 1
        assert terms[0].tensor() == tensor_power(lam, k)
        for t in terms[1:]:
            assert t.coefficient_sum() == coefficient_c(k, t.j)
        assert series_check(lam, k)


class TestStructure:
    @pytest.mark.parametrize("ell", [1, 2, 3])
    @pytest.mark.parametrize("N", [2, 3, 4, 5])
    def test_nonnegative_on_urns(self, ell, N):
        for urn in urns(ell, N):
            for k in range(1, N + 1):
                assert all(w >= 0 for w in f_nk_explicit(N, urn, k).weights.flat)

    def test_negative_witness_off_lattice(self):
        witnesses = []
        S = StateSpace.of_size(2)
        for N in range(2, 6):
            for a in range(1, 12):
                lam = DiscreteMeasure(S, (F(a, 12), 1 - F(a, 12)))
                for k in range(2, N + 1):
                    if any(w < 0 for w in f_nk_explicit(N, lam, k).weights.flat):
                        witnesses.append((N, a, k))
        assert witnesses
        # (1/2, 1/2) at N=3, k=3 is off the 1/3-lattice
        lam = DiscreteMeasure(S, (F(1, 2), F(1, 2)))
        assert f_nk_explicit(3, lam, 3)[0, 0, 0] < 0

    @given(rational_measures(), st.integers(2, 6), st.data())
    def test_marginal_consistency(self, lam, N, data):
        k = data.draw(st.integers(1, min(N, 4)))
        T = f_nk_explicit(N, lam, k)
        for j in range(1, k + 1):
            assert marginal(T, j) == f_nk_explicit(N, lam, j)

    @pytest.mark.parametrize("ell", [1, 2, 3])
    @pytest.mark.parametrize("N", [1, 2, 3, 4])
    def test_injective_on_urns(self, ell, N):
        for k in range(1, N + 1):
            seen = {}
            for urn in urns(ell, N):
                key = tuple(f_nk_explicit(N, urn, k).weights.flat)
                assert key not in seen
                seen[key] = urn


class TestTruncation:
    @pytest.mark.parametrize("k", range(2, 6))
    def test_last_term(self, k):
        lam = DiscreteMeasure.from_weights([F(1, 4), F(1, 4), F(1, 2)])
        N = k + 2
        _, res = f_nk_truncated(N, lam, k, k - 2)
        pref = prefactor(N, k)
        sign = (-1) ** (k - 1)
        assert res == diagonal_push(lam, k) * (sign * pref * factorial(k - 1) / F(N) ** (k - 1))
        assert mass_norm(res) == pref * factorial(k - 1) / F(N) ** (k - 1)

    @pytest.mark.parametrize("N", [20, 100, 1000])
    def test_mean_field_ratio(self, N):
        rows = term_mass_table(N, 4)
        assert rows[1][2] / rows[0][2] == F(6, N)

    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_bounds_hold(self, ell):
        for N in range(2, 6):
            for urn in urns(ell, N):
                for k in range(2, N + 1):
                    for p in range(k - 1):
                        approx, res = f_nk_truncated(N, urn, k, p)
                        assert approx + res == f_nk_explicit(N, urn, k)
                        assert mass_norm(res) <= truncation_bound(N, k, p)

    def test_p_out_of_range(self):
        lam = DiscreteMeasure.from_weights([F(1, 2), F(1, 2)])
        with pytest.raises(ValidationError):
            f_nk_truncated(5, lam, 3, 2)
        with pytest.raises(ValidationError):
            f_nk_truncated(5, lam, 3, -1)


class TestDiagonal:
    def test_small_count_vanishes(self):
        urn = QuantizedMeasure(StateSpace.of_size(2), 5, (2, 3))
        assert diagonal_mass(5, urn, 3, 0) == 0

    @pytest.mark.parametrize("N", range(1, 6))
    def test_full_urn(self, N):
        urn = QuantizedMeasure(StateSpace.of_size(2), N, (N, 0))
        assert diagonal_mass(N, urn, N, 0) == 1

    def test_n4_k2_m3(self):
        urn = QuantizedMeasure(StateSpace.of_size(2), 4, (3, 1))
        assert diagonal_mass(4, urn, 2, 0) == F(1, 2) == f_nk_bruteforce(urn, 2)[0, 0]

    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_factorization_matches_entry(self, ell):
        for N in range(1, 6):
            for urn in urns(ell, N):
                for k in range(1, N + 1):
                    T = f_nk_explicit(N, urn, k)
                    for x in range(ell):
                        assert diagonal_mass(N, urn, k, x) == T.diagonal_entry(x)


class TestOffDiagonal:
    def test_k2_distinct_balls(self):
        for urn in urns(3, 3):
            assert is_offdiagonal_extreme(urn, 2) == all(c <= 1 for c in urn.counts)

    def test_rrg(self, rgb):
        urn = QuantizedMeasure(rgb, 3, (2, 1, 0))
        assert is_offdiagonal_extreme(urn, 3)
        assert has_zero_diagonal(f_nk_explicit(3, urn, 3))

    @pytest.mark.parametrize("ell", [1, 2, 3])
    def test_criteria_equivalent(self, ell):
        for N in range(1, 6):
            for urn in urns(ell, N):
                for k in range(1, N + 1):
                    assert is_offdiagonal_extreme(urn, k) == has_zero_diagonal(f_nk_explicit(N, urn, k))


class TestEnumerateQuantized:
    def test_n3_l3(self):
        assert len(urns(3, 3)) == 10

    def test_n1_diracs(self):
        assert [u.counts for u in urns(3, 1)] == [(1, 0, 0), (0, 1, 0), (0, 0, 1)]

    @pytest.mark.parametrize("N", range(1, 9))
    @pytest.mark.parametrize("ell", range(1, 6))
    def test_counts(self, N, ell):
        got = urns(ell, N)
        assert len(got) == len({u.counts for u in got}) == comb(N + ell - 1, ell - 1)

    def test_colex_order(self):
        keys = [tuple(reversed(u.counts)) for u in urns(3, 4)]
        assert keys == sorted(keys)


class TestTermMassTable:
    def test_k4_figure(self):
        ratios = {N: term_mass_table(N, 4)[1][1] for N in (5, 6, 20, 100)}
        assert ratios == {5: F(6, 5), 6: F(1), 20: F(3, 10), 100: F(3, 50)}

    def test_rows_sum_to_signed_mass(self):
        # alternating signs of the term masses add up to total mass one
        for N in range(4, 9):
            rows = term_mass_table(N, 4)
            assert sum((-1) ** j * m for j, _, m in rows) == 1

    def test_rejects(self):
        with pytest.raises(ValidationError):
            term_mass_table(3, 4)
