from fractions import Fraction

import pytest
from hypothesis import strategies as st

from urnlaw.definetti import PriorMixture
from urnlaw.measures import DiscreteMeasure, StateSpace


@pytest.fixture
def rgb():
    return StateSpace(("r", "g", "b"))


@pytest.fixture
def urn_prior(rgb):
    return PriorMixture.from_counts(
        rgb,
        3,
        [(Fraction(8, 27), (3, 0, 0)), (Fraction(4, 9), (2, 1, 0)), (Fraction(2, 9), (1, 2, 0)), (Fraction(1, 27), (0, 3, 0))],
    )


@pytest.fixture
def lam_star(rgb):
    return DiscreteMeasure(rgb, (Fraction(2, 3), Fraction(1, 3), Fraction(0)))


@st.composite
def rational_measures(draw, ell=None, max_ell=3, positive=False):
    """Random rational probability vectors."""
    ell = ell or draw(st.integers(1, max_ell))
    lo = 1 if positive else 0
    raw = draw(st.lists(st.integers(lo, 12), min_size=ell, max_size=ell).filter(lambda xs: sum(xs) > 0))
    total = sum(raw)
    return DiscreteMeasure(StateSpace.of_size(ell), tuple(Fraction(x, total) for x in raw))
