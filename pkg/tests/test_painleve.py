import math
from fractions import Fraction

import mpmath
import pytest

from moments import painleve
from moments.algebra import TruncatedSeries1


def test_k1_bessel_series():
    s = painleve.bessel_det_series(1, 6)
    assert len(s) == 6
    for m in range(6):
        assert s[m] == Fraction(1, math.factorial(m) * math.factorial(m + 1))


def brute_force_2x2(terms):
    def entry(nu):
        return TruncatedSeries1(
            [Fraction(1, math.factorial(m) * math.factorial(m + nu)) for m in range(terms)]
        )

    # x^{-2} det [[I1, I2], [I2, I3]] with the x^{nu/2} prefactors removed
    return entry(1) * entry(3) - entry(2) * entry(2)


def test_k2_bessel_series_brute_force():
    assert painleve.bessel_det_series(2, 8) == brute_force_2x2(8)
    assert painleve.bessel_det_series(2, 8)[0] == Fraction(-1, 12)


@pytest.mark.parametrize("K", [1, 2, 3])
def test_normalised_product_starts_at_one(K):
    assert painleve.normalised_bessel_product(K, 6)[0] == 1


@pytest.mark.parametrize("K, expected", [(1, 1), (2, Fraction(1, 12)), (3, Fraction(1, 8640))])
def test_keating_snaith(K, expected):
    assert painleve.keating_snaith_coeff(K) == expected


@pytest.mark.parametrize(
    "K, M, expected",
    [
        (1, 1, 1),
        (1, 0, Fraction(1, 12)),
        (2, 2, Fraction(1, 12)),
        (2, 1, Fraction(1, 720)),
        (2, 0, Fraction(1, 6720)),
        (3, 0, Fraction(1, 496742400)),
    ],
)
def test_theorem1_coefficients(K, M, expected):
    assert painleve.theorem1_coefficient(K, M) == expected


@pytest.mark.parametrize("K", [1, 2, 3])
def test_two_routes_agree(K):
    for M in range(K + 1):
        assert painleve.theorem1_painleve_form(K, M) == painleve.theorem1_coefficient(K, M)


@pytest.mark.parametrize("K", [1, 2, 3, 4])
def test_diagonal_is_keating_snaith(K):
    assert painleve.theorem1_coefficient(K, K) == painleve.keating_snaith_coeff(K)


@pytest.mark.parametrize("K", [1, 2, 3])
def test_sigma_boundary(K):
    s = painleve.sigma_series(K, 10)
    assert (s[0], s[1]) == (-K * K, Fraction(1, 8))
    assert painleve.sigma_boundary(K) == (-K * K, Fraction(1, 8))


def test_sigma_truncation_convergence():
    a = painleve.sigma_series(1, 30).evaluate(mpmath.mpf("0.5"), bits=200)
    b = painleve.sigma_series(1, 40).evaluate(mpmath.mpf("0.5"), bits=200)
    assert abs(a - b) < 1e-20


@pytest.mark.parametrize("K", [1, 2, 3])
@pytest.mark.parametrize("s", [0.1, 0.5, 1.0, 2.0])
def test_painleve_residual(K, s):
    assert painleve.painleve_residual(K, s) < 1e-10


def test_painleve_residual_near_origin():
    assert painleve.painleve_residual(1, 1e-8) < 1e-12


@pytest.mark.parametrize("s", [0.0, -0.5, 2.5])
def test_residual_outside_zone_rejected(s):
    with pytest.raises(ValueError):
        painleve.painleve_residual(1, s)


def test_spec_validation():
    with pytest.raises(ValueError):
        painleve.BesselSeriesSpec(K=2, M=3, terms=10)
    with pytest.raises(ValueError):
        painleve.BesselSeriesSpec(K=2, M=0, terms=3)
