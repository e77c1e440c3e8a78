import numpy as np
import pytest
from fractions import Fraction

from polygin.polyalg import GaussRational, PolyPoly


def gauss_poly(terms):
    """PolyPoly with exact GaussRational coefficients from {(a,b): Fraction}."""
    return PolyPoly({k: GaussRational(Fraction(v)) for k, v in terms.items()})


@pytest.fixture(scope="session")
def g_re():
    return gauss_poly({(1, 0): Fraction(1, 2), (0, 1): Fraction(1, 2)})


@pytest.fixture(scope="session")
def g_abs2():
    return gauss_poly({(1, 1): 1})


@pytest.fixture(scope="session")
def g_re2():
    return gauss_poly({(2, 0): Fraction(1, 2), (0, 2): Fraction(1, 2)})


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)
