"""Moment determinants for the pair of weights on |u| = 2.

The weights are

    w1(u) = exp(a u/2 + t1/(u-1) + t2/(u+1)) / (u-1)^K,
    w2(u) = exp(-a u/2 + t1/(u-1) + t2/(u+1)) / (u+1)^K,

with moments mu_l^(j) = (1/2 pi i) int_{|u|=2} u^l w_j(u) du.  Contour
integrals use the periodic trapezoidal rule on the circle, which converges
geometrically because the only singularities (at u = +-1) are well inside.
Determinants are taken in mpmath at ``DET_BITS`` of precision.

The type II multiple orthogonal polynomials P_n, their Cauchy transforms
R_n^(j), the recurrence coefficients and the block Hankel product formula
are all checked against one another here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import mpmath
import numpy as np

from .algebra import neville_extrapolate
from .errors import ConvergenceError, DegenerateParametersError

DET_BITS = 128
QUAD_START = 256
QUAD_MAX = 2**16
QUAD_RTOL = 1e-13
DEGENERATE_TOL = 1e-10
RADIUS = 2.0
LIMIT_STEP = 1e-3
LIMIT_LEVELS = 6


@dataclass(frozen=True)
class WeightParams:
    a: float = 0.0
    t1: float = 0.0
    t2: float = 0.0
    K: int = 1

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        for name in ("a", "t1", "t2"):
            object.__setattr__(self, name, float(getattr(self, name)))
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    def weight(self, j: int, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=complex)
        common = self.t1 / (u - 1) + self.t2 / (u + 1)
        if j == 1:
            return np.exp(self.a * u / 2 + common) / (u - 1) ** self.K
        if j == 2:
            return np.exp(-self.a * u / 2 + common) / (u + 1) ** self.K
        raise ValueError("weight index must be 1 or 2")


@dataclass(frozen=True)
class MultiIndex:
    n1: int
    n2: int

    def __post_init__(self):
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError("multi-index entries must be nonnegative")

    @property
    def size(self) -> int:
        return self.n1 + self.n2

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(self.n1 + other.n1, self.n2 + other.n2)

    def minus(self, j: int) -> "MultiIndex":
        return MultiIndex(self.n1 - (j == 1), self.n2 - (j == 2))

    def plus(self, j: int) -> "MultiIndex":
        return MultiIndex(self.n1 + (j == 1), self.n2 + (j == 2))

    def entry(self, j: int) -> int:
        return self.n1 if j == 1 else self.n2


def _as_index(n) -> MultiIndex:
    return n if isinstance(n, MultiIndex) else MultiIndex(*n)


# -- quadrature -------------------------------------------------------------


def _nodes(count: int, radius: float = RADIUS) -> np.ndarray:
    return radius * np.exp(2j * np.pi * np.arange(count) / count)


def circle_integral(
    f: Callable[[np.ndarray], np.ndarray],
    rtol: float = QUAD_RTOL,
    start: int = QUAD_START,
    max_nodes: int = QUAD_MAX,
) -> np.ndarray:
    """(1/2 pi i) int_{|u|=2} f(u) du by the trapezoidal rule with node doubling.

    ``f`` maps an array of nodes to values along the last axis; the
    integral of every component is returned.  Convergence is declared when
    a doubling changes no component by more than ``rtol`` times the largest
    component magnitude, or of the mean integrand magnitude when the
    integral itself cancels to nearly zero.
    """
    count = start
    previous = None
    while count <= max_nodes:
        u = _nodes(count)
        integrand = np.asarray(f(u)) * u
        value = np.mean(integrand, axis=-1)
        if previous is not None:
            scale = max(np.max(np.abs(value)), np.max(np.mean(np.abs(integrand), axis=-1)))
            if np.max(np.abs(value - previous)) <= rtol * scale:
                return value
        previous = value
        count *= 2
    raise ConvergenceError(f"trapezoidal rule did not converge with {max_nodes} nodes")


@lru_cache(maxsize=64)
def _mp_weight_nodes(j: int, params: WeightParams, count: int) -> tuple:
    """Nodes u_k on |u| = 2 and u_k w_j(u_k), at ``DET_BITS``."""
    with mpmath.workprec(DET_BITS):
        nodes, weighted = [], []
        for k in range(count):
            u = RADIUS * mpmath.expjpi(mpmath.mpf(2 * k) / count)
            common = params.t1 / (u - 1) + params.t2 / (u + 1)
            if j == 1:
                w = mpmath.exp(params.a * u / 2 + common) / (u - 1) ** params.K
            else:
                w = mpmath.exp(-params.a * u / 2 + common) / (u + 1) ** params.K
            nodes.append(u)
            weighted.append(u * w)
        return tuple(nodes), tuple(weighted)


def weight_integral(j: int, params: WeightParams, g) -> list:
    """(1/2 pi i) int_{|u|=2} g(u) w_j(u) du for vector-valued g, in mpmath.

    Same doubling rule as :func:`circle_integral`; the tolerance is the
    tighter of ``QUAD_RTOL`` and the working precision, which the geometric
    convergence of the rule reaches after a few hundred nodes.
    """
    if j not in (1, 2):
        raise ValueError("weight index must be 1 or 2")
    with mpmath.workprec(DET_BITS):
        rtol = min(QUAD_RTOL, mpmath.mpf(2) ** (-DET_BITS + 16))
        count, previous = QUAD_START, None
        while count <= QUAD_MAX:
            nodes, weighted = _mp_weight_nodes(j, params, count)
            sums, mags = None, None
            for u, uw in zip(nodes, weighted):
                vals = [v * uw for v in g(u)]
                if sums is None:
                    sums, mags = list(vals), [abs(v) for v in vals]
                else:
                    for i, v in enumerate(vals):
                        sums[i] += v
                        mags[i] += abs(v)
            value = [x / count for x in sums]
            if previous is not None:
                scale = max(max(abs(x) for x in value), max(mags) / count)
                if max(abs(x - y) for x, y in zip(value, previous)) <= rtol * scale:
                    return value
            previous = value
            count *= 2
    raise ConvergenceError(f"trapezoidal rule did not converge with {QUAD_MAX} nodes")


def _powers(u, count: int) -> list:
    out, x = [], mpmath.mpc(1)
    for _ in range(count):
        out.append(x)
        x *= u
    return out


@lru_cache(maxsize=256)
def _moment_vector(j: int, count: int, params: WeightParams) -> tuple:
    return tuple(weight_integral(j, params, lambda u: _powers(u, count)))


def weight_moment(j: int, l: int, params: WeightParams) -> complex:
    """mu_l^(j) by quadrature on |u| = 2."""
    if l < 0:
        raise ValueError("moment index must be >= 0")
    if j not in (1, 2):
        raise ValueError("weight index must be 1 or 2")
    return complex(moments(j, l + 1, params)[l])


def moments(j: int, count: int, params: WeightParams) -> list:
    """mu_0^(j), ..., mu_{count-1}^(j) as mpc values."""
    # round the request up so neighbouring calls share one quadrature
    size = max(8, 1 << max(count, 1).bit_length())
    return list(_moment_vector(j, size, params)[:count])


# -- determinants and polynomials -------------------------------------------


def moment_matrix(n, params: WeightParams, columns: int | None = None) -> list[list]:
    """Rows mu^(1)_{i+c}, i < n1, then mu^(2)_{i+c}, i < n2; c < columns (default |n|)."""
    n = _as_index(n)
    columns = n.size if columns is None else columns
    mu1 = moments(1, n.n1 + columns, params)
    mu2 = moments(2, n.n2 + columns, params)
    rows = [[mu1[i + c] for c in range(columns)] for i in range(n.n1)]
    rows += [[mu2[i + c] for c in range(columns)] for i in range(n.n2)]
    return rows


def _mp_det(rows) -> mpmath.mpc:
    if not rows:
        return mpmath.mpc(1)
    with mpmath.workprec(DET_BITS):
        return mpmath.det(mpmath.matrix([[mpmath.mpc(x) for x in row] for row in rows]))


def _poly(coeffs, u):
    out = mpmath.mpc(0)
    for c in reversed(coeffs):
        out = out * u + c
    return out


def hankel_delta(n, params: WeightParams) -> mpmath.mpc:
    """Delta_n, the |n| x |n| moment determinant; Delta_(0,0) = 1."""
    n = _as_index(n)
    if n.size == 0:
        return mpmath.mpc(1)
    return _mp_det(moment_matrix(n, params))


def block_hankel_permutation(K: int) -> tuple[list[int], int]:
    """Order taking Delta_(K,K) rows/columns to 2x2 block Hankel form, and its sign.

    Row K+j moves to position 2j (1-based) and the first K rows fill the odd
    slots; columns are permuted the same way, so the determinant sign is +1.
    """
    order = []
    for j in range(K):
        order += [j, K + j]
    return order, 1


def block_hankel_matrix(K: int, params: WeightParams) -> list[list]:
    """[w_{r+c}] with 2x2 blocks [[mu1_m, mu1_{m+K}], [mu2_m, mu2_{m+K}]], m = r + c."""
    mu1 = moments(1, 3 * K, params)
    mu2 = moments(2, 3 * K, params)
    out = [[None] * (2 * K) for _ in range(2 * K)]
    for r in range(K):
        for c in range(K):
            m = r + c
            out[2 * r][2 * c] = mu1[m]
            out[2 * r][2 * c + 1] = mu1[m + K]
            out[2 * r + 1][2 * c] = mu2[m]
            out[2 * r + 1][2 * c + 1] = mu2[m + K]
    return out


def permuted_moment_matrix(K: int, params: WeightParams) -> list[list]:
    base = moment_matrix(MultiIndex(K, K), params)
    order, _ = block_hankel_permutation(K)
    return [[base[r][c] for c in order] for r in order]


def block_hankel_delta(K: int, params: WeightParams) -> mpmath.mpc:
    _, sign = block_hankel_permutation(K)
    return sign * _mp_det(block_hankel_matrix(K, params))


def _require_nondegenerate(n: MultiIndex, params: WeightParams) -> mpmath.mpc:
    delta = hankel_delta(n, params)
    if abs(delta) < DEGENERATE_TOL:
        raise DegenerateParametersError(f"Delta_{(n.n1, n.n2)} = {mpmath.nstr(delta, 5)} vanishes")
    return delta


@lru_cache(maxsize=256)
def _mop_coefficients(n: MultiIndex, params: WeightParams) -> tuple:
    if n.size == 0:
        return (mpmath.mpc(1),)
    delta = _require_nondegenerate(n, params)
    rows = moment_matrix(n, params, columns=n.size + 1)
    coeffs = []
    with mpmath.workprec(DET_BITS):
        for k in range(n.size + 1):
            minor = [row[:k] + row[k + 1 :] for row in rows]
            coeffs.append((-1) ** (n.size + k) * _mp_det(minor) / delta)
    return tuple(coeffs)


def mop_coefficients(n, params: WeightParams) -> list:
    """Coefficients (ascending, mpc) of the monic P_n from the bordered moment determinant."""
    return list(_mop_coefficients(_as_index(n), params))


def _weighted_integral(n: MultiIndex, j: int, power: int, params: WeightParams) -> mpmath.mpc:
    """(1/2 pi i) int u^power P_n(u) w_j(u) du by direct quadrature."""
    coeffs = mop_coefficients(n, params)
    return weight_integral(j, params, lambda u: [u**power * _poly(coeffs, u)])[0]


def mop_orthogonality_residual(n, params: WeightParams) -> float:
    """max over j and l < n_j of |(1/2 pi i) int P_n u^l w_j du|."""
    n = _as_index(n)
    if n.size:
        _require_nondegenerate(n, params)
    worst = 0.0
    for j in (1, 2):
        for l in range(n.entry(j)):
            worst = max(worst, float(abs(_weighted_integral(n, j, l, params))))
    return worst


@dataclass
class GammaEntries:
    """Recurrence coefficients from contour integrals and from determinant ratios."""

    index: tuple
    from_integrals: dict
    from_determinants: dict

    def residual(self) -> float:
        return max(
            (
                float(abs(self.from_integrals[k] - self.from_determinants[k]))
                for k in self.from_integrals
            ),
            default=0.0,
        )


def gamma_entries(n, params: WeightParams) -> GammaEntries:
    n = _as_index(n)
    delta = _require_nondegenerate(n, params)
    for j in (1, 2):
        if n.entry(j) >= 1:
            _require_nondegenerate(n.minus(j), params)
    with mpmath.workprec(DET_BITS):
        integrals, ratios = {}, {}
        sign = (-1) ** (n.n2 + 1)
        integrals["12"] = -_weighted_integral(n, 1, n.n1, params)
        ratios["12"] = sign * hankel_delta(n.plus(1), params) / delta
        integrals["13"] = -_weighted_integral(n, 2, n.n2, params)
        ratios["13"] = -hankel_delta(n.plus(2), params) / delta
        if n.n1 >= 1:
            integrals["21"] = -1 / _weighted_integral(n.minus(1), 1, n.n1 - 1, params)
            ratios["21"] = sign * hankel_delta(n.minus(1), params) / delta
        if n.n2 >= 1:
            integrals["31"] = -1 / _weighted_integral(n.minus(2), 2, n.n2 - 1, params)
            ratios["31"] = -hankel_delta(n.minus(2), params) / delta
    return GammaEntries((n.n1, n.n2), integrals, ratios)


def gamma_recurrence_residual(n, params: WeightParams) -> float:
    """Largest gap between integral and determinant forms of gamma_12, gamma_13, b1, b2."""
    return gamma_entries(n, params).residual()


def _product_formula(K: int, params: WeightParams) -> mpmath.mpc:
    out = mpmath.mpc(1)
    for j in range(1, K + 1):
        n = MultiIndex(j - 1, j)
        try:
            _require_nondegenerate(n, params)
            _require_nondegenerate(n.minus(2), params)
        except DegenerateParametersError as exc:
            raise DegenerateParametersError(f"at index {(n.n1, n.n2)}: {exc}") from exc
        g12 = -_weighted_integral(n, 1, n.n1, params)
        g31 = -1 / _weighted_integral(n.minus(2), 2, n.n2 - 1, params)
        with mpmath.workprec(DET_BITS):
            out *= (-1) ** j * g12 / g31
    return out


def product_formula_delta(K: int, params: WeightParams, extrapolate: bool = True) -> mpmath.mpc:
    """prod_{j=1}^K (-1)^j (gamma_(j-1,j))_12 / (gamma_(j-1,j))_31, from contour integrals.

    Where an intermediate Delta vanishes (e.g. Delta_(0,1) = 0 at zero
    parameters for K = 2) the product is 0/0; with ``extrapolate`` it is then
    evaluated as the limit along the ray params + h (1, 1/2, 1/3), h -> 0.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    try:
        return _product_formula(K, params)
    except DegenerateParametersError:
        if not extrapolate:
            raise
    steps = [LIMIT_STEP / 2**k for k in range(LIMIT_LEVELS)]
    values = [
        _product_formula(
            K, WeightParams(params.a + h, params.t1 + h / 2, params.t2 + h / 3, K)
        )
        for h in steps
    ]
    with mpmath.workprec(DET_BITS):
        return neville_extrapolate([mpmath.mpf(h) for h in steps], values)


# -- Cauchy transform and jump ----------------------------------------------


def cauchy_transform(j: int, params: WeightParams, u: complex, n=(0, 0)) -> complex:
    """R_n^(j)(u) = (1/2 pi i) int_{|v|=2} P_n(v) w_j(v) / (v - u) dv for u off the circle."""
    if abs(abs(u) - RADIUS) == 0:
        raise ValueError("u must be off the contour")
    coeffs = [complex(c) for c in mop_coefficients(n, params)]
    return complex(
        circle_integral(
            lambda v: np.polynomial.polynomial.polyval(v, coeffs) * params.weight(j, v) / (v - u)
        )
    )


def plemelj_jump_residual(params: WeightParams, phase: float, delta: float) -> float:
    """max_j |R^(j)(inside) - R^(j)(outside) - w_j| at 2 e^{i phase}, offsets +-delta, for n = 0."""
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")
    direction = np.exp(1j * phase)
    inside = (RADIUS - delta) * direction
    outside = (RADIUS + delta) * direction
    on = RADIUS * direction
    worst = 0.0
    for j in (1, 2):
        jump = cauchy_transform(j, params, inside) - cauchy_transform(j, params, outside)
        worst = max(worst, abs(jump - complex(params.weight(j, on))))
    return worst


# -- tau function at the origin ---------------------------------------------


def tau0(a: float, t1: float, t2: float, K: int):
    """exp(-K a + K (t2 - t1)/6 - t1 t2 / 6)."""
    return mpmath.exp(-K * mpmath.mpf(a) + K * (mpmath.mpf(t2) - t1) / 6 - mpmath.mpf(t1) * t2 / 6)


@dataclass
class TauReport:
    K: int
    tau0_origin: mpmath.mpf
    delta_origin: mpmath.mpc
    expected_delta: int
    tau0_residual: float
    delta_residual: float

    @property
    def tau_kk_origin(self) -> mpmath.mpc:
        """tau_(K,K)(0,0,0) implied by Delta = (-2)^{K^2} e^{...} tau at the origin."""
        return self.delta_origin / self.expected_delta


def tau_relations_at_origin(K: int) -> TauReport:
    if not 1 <= K <= 3:
        raise ValueError("K must be 1, 2 or 3")
    t0 = tau0(0, 0, 0, K)
    delta = hankel_delta(MultiIndex(K, K), WeightParams(0.0, 0.0, 0.0, K))
    expected = (-2) ** (K * K)
    return TauReport(
        K,
        t0,
        delta,
        expected,
        float(abs(t0 - 1)),
        float(abs(delta / expected - 1)),
    )
