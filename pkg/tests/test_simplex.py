import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from urnlaw.errors import ValidationError
from urnlaw.simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LPInstance, check_certificate, simplex_solve

F = Fraction


def brute_force_lp(lp):
    """Enumerate basic solutions; returns min value, or None if infeasible."""
    m, n = lp.shape
    best = None
    for cols in itertools.combinations(range(n), m):
        M = [[lp.A[r][j] for j in cols] + [lp.b[r]] for r in range(m)]
        # Gauss-Jordan
        ok = True
        for c in range(m):
            piv = next((r for r in range(c, m) if M[r][c] != 0), None)
            if piv is None:
                ok = False
                break
            M[c], M[piv] = M[piv], M[c]
            M[c] = [v / M[c][c] for v in M[c]]
            for r in range(m):
                if r != c and M[r][c] != 0:
                    f = M[r][c]
                    M[r] = [a - f * b for a, b in zip(M[r], M[c])]
        if not ok:
            continue
        xs = [M[r][m] for r in range(m)]
        if any(v < 0 for v in xs):
            continue
        val = sum(lp.c[j] * v for j, v in zip(cols, xs))
        best = val if best is None else min(best, val)
    return best


class TestBasics:
    def test_single_variable(self):
        lp = LPInstance([1], [[1]], [1])
        r = simplex_solve(lp)
        assert r.status == OPTIMAL and r.value == 1 and r.x == [1]
        assert check_certificate(lp, r)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            LPInstance([1, 2], [[1]], [1])
        with pytest.raises(ValidationError):
            LPInstance([1], [[1], [1]], [1])

    def test_rejects_float(self):
        with pytest.raises(ValidationError):
            LPInstance([0.5], [[1]], [1])


class TestCycling:
    """Beale's instance, which cycles under the largest-coefficient rule."""

    def beale(self):
        c = [F(-3, 4), 150, F(-1, 50), 6, 0, 0, 0]
        A = [
            [F(1, 4), -60, F(-1, 25), 9, 1, 0, 0],
            [F(1, 2), -90, F(-1, 50), 3, 0, 1, 0],
            [0, 0, 1, 0, 0, 0, 1],
        ]
        return LPInstance(c, A, [0, 0, 1])

    def test_terminates_from_slack_basis(self):
        lp = self.beale()
        r = simplex_solve(lp, basis=[4, 5, 6])
        assert r.status == OPTIMAL and r.value == F(-1, 20)
        assert check_certificate(lp, r)

    def test_terminates_from_phase_one(self):
        lp = self.beale()
        r = simplex_solve(lp)
        assert r.value == F(-1, 20)
        assert check_certificate(lp, r)


class TestCertificates:
    def test_infeasible(self):
        lp = LPInstance([0, 0], [[1, 1], [1, 1]], [1, 2])
        r = simplex_solve(lp)
        assert r.status == INFEASIBLE
        assert check_certificate(lp, r)

    def test_unbounded(self):
        lp = LPInstance([-1, 0], [[1, -1]], [1])
        r = simplex_solve(lp)
        assert r.status == UNBOUNDED
        assert check_certificate(lp, r)

    def test_redundant_rows(self):
        lp = LPInstance([1, 2, 3], [[1, 1, 1], [2, 2, 2]], [1, 2])
        r = simplex_solve(lp)
        assert r.status == OPTIMAL and r.value == 1
        assert check_certificate(lp, r)

    def test_negative_rhs(self):
        lp = LPInstance([1, 1], [[-1, -2]], [-2])
        r = simplex_solve(lp)
        assert r.value == 1
        assert check_certificate(lp, r)

    def test_tampered_certificate_rejected(self):
        lp = LPInstance([1, 2], [[1, 1]], [1])
        r = simplex_solve(lp)
        r.y = [r.y[0] + 1]
        assert not check_certificate(lp, r)

    def test_bad_start_basis(self):
        lp = LPInstance([1, 1], [[1, 1]], [1])
        with pytest.raises(ValidationError):
            simplex_solve(lp, basis=[0, 1])


@st.composite
def small_lps(draw):
    m = draw(st.integers(1, 3))
    n = draw(st.integers(m, 5))
    ints = st.integers(-4, 4)
    A = [[F(draw(ints)) for _ in range(n)] for _ in range(m)]
    b = [F(draw(ints)) for _ in range(m)]
    c = [F(draw(ints)) for _ in range(n)]
    return LPInstance(c, A, b)


class TestRandom:
    @settings(max_examples=300, deadline=None)
    @given(small_lps())
    def test_certificates_replay(self, lp):
        r = simplex_solve(lp)
        assert check_certificate(lp, r)

    @settings(max_examples=200, deadline=None)
    @given(small_lps())
    def test_bounded_value_matches_vertex_enumeration(self, lp):
        # vertex enumeration needs full row rank; rank-deficient systems yield None
        r = simplex_solve(lp)
        best = brute_force_lp(lp)
        if r.status == OPTIMAL and best is not None:
            assert r.value == best
        if r.status == INFEASIBLE:
            assert best is None

