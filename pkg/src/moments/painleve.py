"""Mixed moments of Z and Z' through the I-Bessel determinant.

Everything here is exact power-series algebra over the rationals.  With
``e_nu(x) = x^{-nu/2} I_nu(2 sqrt x) = sum_m x^m / (m! (m+nu)!)`` the
powers of sqrt(x) in ``det(I_{i+j-1}(2 sqrt x))`` total exactly x^{K^2/2},
so ``x^{-K^2/2} det(I_{i+j-1}(2 sqrt x)) = det(e_{i+j-1}(x))``.

The sigma function of the Painleve III' equation is built from that
determinant through its logarithmic derivative and then checked against
the differential equation; it is never integrated as an ODE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath

from .algebra import TruncatedSeries1, series1_determinant, to_mp, working_precision

DEFAULT_RESIDUAL_TERMS = 40
# sigma series are convergent well past this, but residuals are only validated here
MAX_RESIDUAL_S = 2


@dataclass(frozen=True)
class BesselSeriesSpec:
    K: int
    M: int
    terms: int

    def __post_init__(self):
        if not 0 <= self.M <= self.K:
            raise ValueError("need 0 <= M <= K")
        if self.terms < 2 * self.K - 2 * self.M + 2:
            raise ValueError("terms must be >= 2K - 2M + 2")


def _bessel_entry(nu: int, order: int) -> TruncatedSeries1:
    return TruncatedSeries1(
        [Fraction(1, math.factorial(m) * math.factorial(m + nu)) for m in range(order + 1)]
    )


@lru_cache(maxsize=None)
def bessel_det_series(K: int, terms: int) -> TruncatedSeries1:
    """Series of x^{-K^2/2} det_{KxK}(I_{i+j-1}(2 sqrt x)) with ``terms`` coefficients."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if terms < 1:
        raise ValueError("terms must be >= 1")
    order = terms - 1
    entries = {nu: _bessel_entry(nu, order) for nu in range(1, 2 * K)}
    matrix = [[entries[i + j - 1] for j in range(1, K + 1)] for i in range(1, K + 1)]
    return series1_determinant(matrix)


def _exp_series(rate: Fraction, order: int) -> TruncatedSeries1:
    return TruncatedSeries1([rate**k / math.factorial(k) for k in range(order + 1)])


def keating_snaith_coeff(K: int) -> Fraction:
    """prod_{j=0}^{K-1} j!/(j+K)!"""
    if K < 1:
        raise ValueError("K must be >= 1")
    out = Fraction(1)
    for j in range(K):
        out *= Fraction(math.factorial(j), math.factorial(j + K))
    return out


def theorem1_coefficient(K: int, M: int) -> Fraction:
    """Leading constant c with E|Z'(1)|^{2K-2M} |Z(1)|^{2M} ~ c N^{K^2+2K-2M}.

    c = (-1)^{K(K-1)/2+K-M} (d/dx)^{2K-2M} [e^{-x/2} x^{-K^2/2} det I_{i+j-1}(2 sqrt x)] at 0.
    """
    if not 0 <= M <= K:
        raise ValueError("need 0 <= M <= K")
    d = 2 * K - 2 * M
    terms = d + 1
    series = _exp_series(Fraction(-1, 2), d) * bessel_det_series(K, terms)
    sign = (-1) ** (K * (K - 1) // 2 + K - M)
    return sign * math.factorial(d) * series[d]


def normalised_bessel_product(K: int, terms: int) -> TruncatedSeries1:
    """F(x) = (-1)^{K(K-1)/2} prod (j+K)!/j! e^{-x} x^{-K^2/2} det(...), with F(0) = 1."""
    scale = (-1) ** (K * (K - 1) // 2) / keating_snaith_coeff(K)
    return _exp_series(Fraction(-1), terms - 1) * bessel_det_series(K, terms) * scale


@lru_cache(maxsize=None)
def sigma_series(K: int, terms: int) -> TruncatedSeries1:
    """Series in s of sigma_III'(s), through s^{terms-1}.

    From exp(-int_0^{4x} (sigma(s) + K^2) ds/s) = F(x): differentiating gives
    sigma(4x) = -x F'(x)/F(x) - K^2, and s = 4x rescales the coefficients.
    """
    if terms < 2:
        raise ValueError("terms must be >= 2")
    F = normalised_bessel_product(K, terms)
    if F[0] != 1:
        raise ArithmeticError(f"normalised Bessel product has F(0) = {F[0]}, expected 1")
    log_derivative = F.derivative() * F.truncate(F.order - 1).inverse()
    in_x = (-log_derivative).shift_up() - K * K
    return in_x.scale_variable(Fraction(1, 4))


def tau_exponent_series(K: int, terms: int) -> TruncatedSeries1:
    """Series in x of -int_0^{4x} (sigma(s) + K^2) ds/s, from the sigma coefficients."""
    sigma = sigma_series(K, terms)
    coeffs = [Fraction(0)]
    for n in range(1, sigma.order + 1):
        coeffs.append(-sigma[n] * Fraction(4) ** n / n)
    return TruncatedSeries1(coeffs)


def theorem1_painleve_form(K: int, M: int) -> Fraction:
    """The same leading constant, computed from sigma_III'.

    (-1)^{K-M} prod j!/(j+K)! (d/dx)^{2K-2M} [e^{x/2} exp(-int_0^{4x} (sigma+K^2) ds/s)] at 0.
    """
    if not 0 <= M <= K:
        raise ValueError("need 0 <= M <= K")
    d = 2 * K - 2 * M
    terms = max(d + 1, 2)
    tau = tau_exponent_series(K, terms).truncate(d) if d > 0 else TruncatedSeries1([0])
    series = _exp_series(Fraction(1, 2), d) * tau.exp()
    return (-1) ** (K - M) * keating_snaith_coeff(K) * math.factorial(d) * series[d]


def sigma_derivatives(K: int, s, terms: int = DEFAULT_RESIDUAL_TERMS, bits: int | None = None):
    """(sigma, sigma', sigma'') at ``s`` from the truncated series."""
    series = sigma_series(K, terms)
    with working_precision(bits):
        s = mpmath.mpf(s)
        return (
            series.evaluate(s),
            series.derivative(1).evaluate(s),
            series.derivative(2).evaluate(s),
        )


def painleve_residual(
    K: int, s, terms: int = DEFAULT_RESIDUAL_TERMS, bits: int | None = None
) -> mpmath.mpf:
    """|(s sigma'')^2 + sigma'(4 sigma' - 1)(sigma - s sigma') - K^2/16| at ``s``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    with working_precision(bits):
        s = mpmath.mpf(s)
        if not 0 < s <= MAX_RESIDUAL_S:
            raise ValueError(f"s={s} is outside the validated range (0, {MAX_RESIDUAL_S}]")
        sig, d1, d2 = sigma_derivatives(K, s, terms)
        value = (s * d2) ** 2 + d1 * (4 * d1 - 1) * (sig - s * d1) - mpmath.mpf(K * K) / 16
        return abs(value)


def sigma_boundary(K: int) -> tuple[Fraction, Fraction]:
    """Constant and linear sigma coefficients, expected (-K^2, 1/8)."""
    series = sigma_series(K, 3)
    return series[0], series[1]


__all__ = [
    "BesselSeriesSpec",
    "bessel_det_series",
    "keating_snaith_coeff",
    "theorem1_coefficient",
    "normalised_bessel_product",
    "sigma_series",
    "tau_exponent_series",
    "theorem1_painleve_form",
    "sigma_derivatives",
    "painleve_residual",
    "sigma_boundary",
    "to_mp",
]
