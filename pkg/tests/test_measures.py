import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import rational_measures
from urnlaw.errors import BudgetError, ValidationError
from urnlaw.extremal import enumerate_quantized, f_nk_bruteforce, series_terms
from urnlaw.measures import (
    DiscreteMeasure,
    QuantizedMeasure,
    SignedTensor,
    StateSpace,
    block_push,
    check_budget,
    diagonal_push,
    is_quantized,
    marginal,
    mass_norm,
    set_sup_norm,
    symmetrize,
    symmetrize_bruteforce,
    tensor_power,
    verify_quantization,
)
from urnlaw.partitions import SetPartition, coefficient_c
from urnlaw.rational import as_fraction, format_fraction

F = Fraction


@st.composite
def signed_tensors(draw, max_ell=3, max_order=3):
    ell = draw(st.integers(1, max_ell))
    order = draw(st.integers(1, max_order))
    vals = draw(st.lists(st.fractions(-5, 5, max_denominator=7), min_size=ell**order, max_size=ell**order))
    return SignedTensor(StateSpace.of_size(ell), np.array(vals, dtype=object).reshape((ell,) * order))


class TestRational:
    def test_parses_strings(self):
        assert as_fraction("3/4") == F(3, 4)
        assert as_fraction("-2") == -2

    def test_rejects_floats_and_bools(self):
        with pytest.raises(ValidationError):
            as_fraction(0.5)
        with pytest.raises(ValidationError):
            as_fraction(True)

    def test_format_always_has_denominator(self):
        assert format_fraction(F(2)) == "2/1"
        assert format_fraction(F(-1, 3)) == "-1/3"


class TestStateSpaceAndMeasures:
    def test_distinct_labels(self):
        with pytest.raises(ValidationError):
            StateSpace(("a", "a"))
        with pytest.raises(ValidationError):
            StateSpace(())

    def test_measure_validation(self):
        S = StateSpace.of_size(2)
        with pytest.raises(ValidationError):
            DiscreteMeasure(S, (F(1, 2), F(1, 3)))
        with pytest.raises(ValidationError):
            DiscreteMeasure(S, (F(3, 2), F(-1, 2)))

    def test_quantized_measure(self):
        S = StateSpace.of_size(3)
        urn = QuantizedMeasure(S, 3, (2, 1, 0))
        assert urn.to_measure().weights == (F(2, 3), F(1, 3), F(0))
        assert urn.balls() == (0, 0, 1)
        with pytest.raises(ValidationError):
            QuantizedMeasure(S, 3, (2, 2, 0))

    def test_budget(self):
        with pytest.raises(BudgetError):
            check_budget(10, 8)


class TestTensorPower:
    def test_two_thirds(self):
        lam = DiscreteMeasure.from_weights([F(2, 3), F(1, 3)])
        T = tensor_power(lam, 2)
        assert T.weights.tolist() == [[F(4, 9), F(2, 9)], [F(2, 9), F(1, 9)]]

    def test_dirac(self):
        S = StateSpace.of_size(3)
        assert tensor_power(DiscreteMeasure.dirac(S, 1), 4) == SignedTensor.dirac(S, (1, 1, 1, 1))

    def test_lambda_star_cube(self, lam_star):
        T = tensor_power(lam_star, 3)
        # slices with last index r and g
        assert T[0, 0, 0] == F(8, 27)
        assert T[0, 1, 0] == T[1, 0, 0] == T[0, 0, 1] == F(4, 27)
        assert T[1, 1, 0] == T[0, 1, 1] == F(2, 27)
        assert T[1, 1, 1] == F(1, 27)
        assert all(w == 0 for idx, w in np.ndenumerate(T.weights) if 2 in idx)

    @given(rational_measures(), st.integers(1, 4))
    def test_probability(self, lam, k):
        assert tensor_power(lam, k).is_probability()


class TestPushForwards:
    def test_diagonal(self):
        lam = DiscreteMeasure.from_weights([F(1, 2), F(1, 2)])
        assert diagonal_push(lam, 2).weights.tolist() == [[F(1, 2), 0], [0, F(1, 2)]]

    @given(rational_measures(), st.integers(1, 4))
    def test_diagonal_mass(self, lam, m):
        assert diagonal_push(lam, m).mass() == 1

    @given(rational_measures(max_ell=3), st.data())
    def test_diagonal_integral(self, lam, data):
        ell = lam.space.size
        phi = np.array(
            data.draw(st.lists(st.fractions(-3, 3, max_denominator=5), min_size=ell**3, max_size=ell**3)),
            dtype=object,
        ).reshape((ell,) * 3)
        direct = sum(lam.weights[i] * phi[i, i, i] for i in range(ell))
        assert diagonal_push(lam, 3).integrate(phi) == direct

    def test_block_pair_pairs(self):
        lam = DiscreteMeasure.from_weights([F(1, 5), F(3, 10), F(1, 2)])
        P = SetPartition(((1, 2), (3, 4)))
        assert block_push(lam, P) == diagonal_push(lam, 2).outer(diagonal_push(lam, 2))

    def test_block_135_24(self):
        lam = DiscreteMeasure.from_weights([F(1, 3), F(2, 3)])
        T = block_push(lam, SetPartition(((1, 3), (2, 4, 5))))
        for x, y in itertools.product(range(2), repeat=2):
            assert T[x, y, x, y, y] == lam.weights[x] * lam.weights[y]
        assert T.mass() == 1
        assert len(T.entries()) == 4

    @given(rational_measures(), st.integers(1, 4))
    def test_singletons_give_power(self, lam, k):
        P = SetPartition(tuple((i,) for i in range(1, k + 1)))
        assert block_push(lam, P) == tensor_power(lam, k)


class TestSymmetrize:
    def test_pair(self):
        S = StateSpace.of_size(2)
        T = symmetrize(SignedTensor.dirac(S, (0, 1)))
        assert T == SignedTensor.from_entries(S, 2, [((0, 1), F(1, 2)), ((1, 0), F(1, 2))])

    @settings(max_examples=60)
    @given(signed_tensors())
    def test_matches_bruteforce(self, T):
        assert symmetrize(T) == symmetrize_bruteforce(T)

    @settings(max_examples=60)
    @given(signed_tensors())
    def test_idempotent_and_mass(self, T):
        S1 = symmetrize(T)
        assert symmetrize(S1) == S1
        assert S1.mass() == T.mass()
        assert S1.is_symmetric()


class TestMarginal:
    @given(rational_measures(), st.integers(1, 4), st.data())
    def test_product(self, lam, n, data):
        k = data.draw(st.integers(1, n))
        assert marginal(tensor_power(lam, n), k) == tensor_power(lam, k)

    def test_identity(self):
        T = SignedTensor.dirac(StateSpace.of_size(2), (0, 1, 1))
        assert marginal(T, 3) is T
        with pytest.raises(ValidationError):
            marginal(T, 4)

    @pytest.mark.parametrize("N", [3, 4])
    def test_symmetrized_dirac_is_urn_law(self, N):
        S = StateSpace.of_size(2)
        for urn in enumerate_quantized(N, S):
            gamma = symmetrize(SignedTensor.dirac(S, urn.balls()))
            for k in range(1, N + 1):
                assert marginal(gamma, k) == f_nk_bruteforce(urn, k)


class TestNorms:
    def test_probability(self):
        T = tensor_power(DiscreteMeasure.from_weights([F(1, 4), F(3, 4)]), 2)
        assert mass_norm(T) == set_sup_norm(T) == 1

    def test_signed(self):
        T = SignedTensor(StateSpace.of_size(2), np.array([F(1, 2), F(-1, 2)], dtype=object))
        assert mass_norm(T) == 1
        assert set_sup_norm(T) == F(1, 2)

    @settings(max_examples=40)
    @given(signed_tensors(max_ell=2, max_order=2))
    def test_set_sup_is_sup_over_sets(self, T):
        flat = list(T.weights.flat)
        best = max(abs(sum(c)) for r in range(len(flat) + 1) for c in itertools.combinations(flat, r))
        assert set_sup_norm(T) == best

    @pytest.mark.parametrize("k", [2, 3, 4, 5])
    def test_correction_masses_are_c(self, k):
        lam = DiscreteMeasure.from_weights([F(1, 6), F(1, 3), F(1, 2)])
        for term in series_terms(lam, k)[1:]:
            assert mass_norm(term.tensor()) == coefficient_c(k, term.j)


class TestQuantization:
    def test_uniform_three(self):
        lam = DiscreteMeasure.from_weights([F(1, 3)] * 3)
        assert verify_quantization(lam, 3) == (True, None)

    def test_half_at_three(self):
        lam = DiscreteMeasure.from_weights([F(1, 2), F(1, 2)])
        ok, (subset, k) = verify_quantization(lam, 3)
        assert not ok and subset == (0,) and k == 1

    @settings(max_examples=200)
    @given(rational_measures(max_ell=4), st.integers(1, 6))
    def test_agrees_with_integrality(self, lam, N):
        assert verify_quantization(lam, N)[0] == is_quantized(lam, N)
