"""Exact finite-N moment formulas and their coincident-shift limits.

``z(x) = 1/(1 - e^{-x})`` is the basic building block.  Two exact formulas
are implemented directly:

* the permutation sum for averages of products of ``Z_X(e^{-alpha_j})``
  and ``Z_{X*}(e^{alpha_{K+j}})``;
* the subset/partition formula J*(A;B) for averages of products of
  logarithmic derivatives of ``Lambda_X``.

Both have removable singularities when shifts collide.  Those limits are
taken by perturbing the shifts, evaluating at high precision and
extrapolating in the perturbation size with Neville's scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import mpmath

from .algebra import default_precision, neville_extrapolate, working_precision
from .errors import CancellationError, PoleError, RemovableSingularityError

SMALL_ARGUMENT = mpmath.mpf("1e-3")
# perturbation ladder for coincident limits, relative to min(1, |alpha|)
BASE_DELTA = mpmath.mpf("1e-4")
DELTA_LEVELS = 6
CANCELLATION_DIGITS = 30


def _mpc(x) -> mpmath.mpc:
    return x if isinstance(x, mpmath.mpc) else mpmath.mpc(x)


def z_eval(x, bits: int | None = None) -> mpmath.mpc:
    """z(x) = 1/(1 - e^{-x}); Bernoulli series for |x| < 1e-3."""
    with working_precision(bits):
        x = _mpc(x)
        if x == 0:
            raise PoleError("z has a pole at x = 0")
        if abs(x) < SMALL_ARGUMENT:
            # x z(x) = sum_n B_n (-x)^n / n!
            eps = mpmath.mpf(2) ** (-mpmath.mp.prec - 4)
            total = mpmath.mpc(1) + x / 2
            n = 2
            while True:
                term = mpmath.bernoulli(n) * x**n / mpmath.factorial(n)
                total += term
                if abs(term) < eps * abs(total):
                    break
                n += 2
            return total / x
        denominator = 1 - mpmath.exp(-x)
        if abs(denominator) <= mpmath.mpf(2) ** (-mpmath.mp.prec + 8):
            raise PoleError(f"z has a pole at x = {mpmath.nstr(x, 15)}")
        return 1 / denominator


def zlogderiv(x, bits: int | None = None) -> mpmath.mpc:
    """z'/z(x) = 1/(1 - e^x) = z(-x)."""
    with working_precision(bits):
        return z_eval(-_mpc(x))


def zlogderiv_prime(x, bits: int | None = None) -> mpmath.mpc:
    """(z'/z)'(x) = e^x/(1 - e^x)^2 = -z(x) z(-x)."""
    with working_precision(bits):
        x = _mpc(x)
        return -z_eval(x) * z_eval(-x)


# -- permutation sum --------------------------------------------------------


def permutation_moment(alphas: Sequence, N: int, bits: int | None = None) -> mpmath.mpc:
    """Average of prod_{j<=K} Z_X(e^{-a_j}) Z_{X*}(e^{a_{K+j}}) over U(N).

    (-1)^{NK} e^{-N/2 sum a} sum_sigma e^{N sum_{j<=K} a_sigma(j)}
    prod_{i,j<=K} z(a_sigma(i) - a_sigma(K+j)), where sigma keeps both halves
    in increasing order.
    """
    if len(alphas) % 2 or not alphas:
        raise ValueError("need an even, nonzero number of shifts")
    if N < 1:
        raise ValueError("N must be >= 1")
    K = len(alphas) // 2
    with working_precision(bits):
        a = [_mpc(x) for x in alphas]
        for i, j in combinations(range(2 * K), 2):
            if a[i] == a[j]:
                raise RemovableSingularityError(
                    f"shifts {i} and {j} coincide; use permutation_moment_limit"
                )
        total = mpmath.mpc(0)
        indices = range(2 * K)
        for first in combinations(indices, K):
            second = [k for k in indices if k not in first]
            term = mpmath.exp(N * mpmath.fsum(a[k] for k in first))
            for i in first:
                for j in second:
                    term *= z_eval(a[i] - a[j])
            total += term
        prefactor = (-1) ** (N * K) * mpmath.exp(-mpmath.mpf(N) / 2 * mpmath.fsum(a))
        return prefactor * total


def permutation_moment_limit(
    base: Sequence,
    N: int,
    directions: Sequence | None = None,
    bits: int | None = None,
) -> mpmath.mpc:
    """Limit of the permutation sum at coincident shifts.

    Evaluates at ``base_j + c_j delta`` (default ``c_j = j + 1``) on the
    perturbation ladder and extrapolates to ``delta = 0``.
    """
    if directions is None:
        directions = list(range(1, len(base) + 1))
    if len(directions) != len(base):
        raise ValueError("directions must match base")
    K = len(base) // 2
    with working_precision(bits) as prec:
        scale = min(mpmath.mpf(1), max([abs(_mpc(b)) for b in base] + [mpmath.mpf(0)]) or 1)
        deltas = [BASE_DELTA * scale / 2**k for k in range(DELTA_LEVELS)]
        extra = int(2 * K * math.log2(float(1 / deltas[-1]))) + 32
        with working_precision(prec + extra):
            values = [
                permutation_moment(
                    [_mpc(b) + c * d for b, c in zip(base, directions)], N
                )
                for d in deltas
            ]
            return neville_extrapolate(deltas, values)


def exact_z2_moment(N: int) -> int:
    """E|Z_X(1)|^2 = N + 1."""
    return N + 1


def exact_zprime2_moment(N: int) -> Fraction:
    """E|Z_X'(1)|^2 = N(N+1)(N+2)/12."""
    return Fraction(N * (N + 1) * (N + 2), 12)


# -- J*(A;B) ----------------------------------------------------------------


@dataclass(frozen=True)
class ShiftSets:
    A: tuple
    B: tuple

    def __post_init__(self):
        object.__setattr__(self, "A", tuple(self.A))
        object.__setattr__(self, "B", tuple(self.B))
        for x in self.A + self.B:
            if mpmath.re(x) <= 0:
                raise ValueError(f"shift {x} must have positive real part")

    def distinct_within(self) -> bool:
        return len(set(map(complex, self.A))) == len(self.A) and len(
            set(map(complex, self.B))
        ) == len(self.B)


def _single_h(x, own, other):
    """H for a singleton {x}: sum_own z'/z(x - s) - sum_other z'/z(x + t)."""
    total = mpmath.mpc(0)
    for s in own:
        total += zlogderiv(x - s)
    for t in other:
        total -= zlogderiv(x + t)
    return total


def _matching_sum(rest_a: list, rest_b: list, h_a: dict, h_b: dict) -> mpmath.mpc:
    """Sum over partial matchings of rest_a with rest_b of the product of H's."""
    if not rest_a:
        out = mpmath.mpc(1)
        for j in rest_b:
            out *= h_b[j]
        return out
    i, tail = rest_a[0], rest_a[1:]
    total = h_a[i] * _matching_sum(tail, rest_b, h_a, h_b)
    for k, j in enumerate(rest_b):
        pair = h_a[("pair", i, j)]
        total += pair * _matching_sum(tail, rest_b[:k] + rest_b[k + 1 :], h_a, h_b)
    return total


def _zdagger_self(S) -> mpmath.mpc:
    out = mpmath.mpc(1)
    for s in S:
        for r in S:
            if s - r != 0:
                out *= z_eval(s - r)
    return out


def j_star(sets: ShiftSets, N: int, bits: int | None = None) -> mpmath.mpc:
    """J*(A;B): exact average of prod (-e^{-a}) Lambda'/Lambda(e^{-a}) times the X* analogue."""
    if not isinstance(sets, ShiftSets):
        sets = ShiftSets(*sets)
    if not sets.distinct_within():
        raise RemovableSingularityError("repeated shift within A or B; use j_star_coincident")
    if N < 1:
        raise ValueError("N must be >= 1")
    with working_precision(bits):
        A = [_mpc(x) for x in sets.A]
        B = [_mpc(x) for x in sets.B]
        total = mpmath.mpc(0)
        for size in range(min(len(A), len(B)) + 1):
            for S_idx in combinations(range(len(A)), size):
                S = [A[i] for i in S_idx]
                for T_idx in combinations(range(len(B)), size):
                    T = [B[j] for j in T_idx]
                    weight = mpmath.exp(-N * (mpmath.fsum(S) + mpmath.fsum(T)))
                    for s in S:
                        for t in T:
                            weight *= z_eval(s + t) * z_eval(-s - t)
                    weight /= _zdagger_self(S) * _zdagger_self(T)
                    rest_a = [i for i in range(len(A)) if i not in S_idx]
                    rest_b = [j for j in range(len(B)) if j not in T_idx]
                    h_a = {i: _single_h(A[i], S, T) for i in rest_a}
                    h_b = {j: _single_h(B[j], T, S) for j in rest_b}
                    for i in rest_a:
                        for j in rest_b:
                            h_a[("pair", i, j)] = zlogderiv_prime(A[i] + B[j])
                    total += weight * _matching_sum(rest_a, rest_b, h_a, h_b)
        return total


@dataclass
class CoincidentLimit:
    value: mpmath.mpc
    deltas: list
    samples: list
    extrapolation_error: mpmath.mpf
    cancellation_digits: float
    precision_bits: int
    notes: list = field(default_factory=list)


def _coincident_sets(K: int, alpha, delta) -> ShiftSets:
    shifts = tuple(alpha + j * delta for j in range(K))
    return ShiftSets(shifts, shifts)


def j_star_coincident_report(
    K: int, alpha, N: int, bits: int | None = None
) -> CoincidentLimit:
    """Limit of J* with A = B = {alpha + j delta : j < K} as delta -> 0, with diagnostics."""
    if K not in (1, 2, 3):
        raise ValueError("K must be 1, 2 or 3")
    bits = default_precision() if bits is None else bits
    with working_precision(bits):
        alpha = _mpc(alpha)
        if mpmath.re(alpha) <= 0:
            raise ValueError("alpha must have positive real part")
        if K == 1:
            value = j_star(_coincident_sets(1, alpha, 0), N)
            return CoincidentLimit(value, [], [value], mpmath.mpf(0), math.inf, mpmath.mp.prec)
        scale = min(mpmath.mpf(1), abs(alpha))
        deltas = [BASE_DELTA * scale / 2**k for k in range(DELTA_LEVELS)]
    # 1/delta divergences of total order up to 2K cancel between terms
    extra = int(2 * K * math.log2(float(1 / (deltas[-1] / scale)))) + 32
    prec = max(bits, 256) + extra
    with working_precision(prec):
        samples = [j_star(_coincident_sets(K, alpha, d), N) for d in deltas]
        value = neville_extrapolate(deltas, samples)
        coarse = neville_extrapolate(deltas[:-1], samples[:-1])
        extrapolation_error = abs(value - coarse)
    with working_precision(2 * prec):
        check = j_star(_coincident_sets(K, alpha, deltas[-1]), N)
        diff = abs(check - samples[-1])
        size = abs(check)
        digits = math.inf if diff == 0 else float(-mpmath.log10(diff / size))
    if digits < CANCELLATION_DIGITS:
        raise CancellationError(
            f"divergent terms cancelled to only {digits:.1f} digits at delta={deltas[-1]}"
        )
    with working_precision(bits):
        return CoincidentLimit(
            +value, deltas, samples, +extrapolation_error, digits, prec
        )


def j_star_coincident(K: int, alpha, N: int, bits: int | None = None) -> mpmath.mpc:
    """Limit of J*({alpha,...};{alpha,...}) with K copies on each side."""
    return j_star_coincident_report(K, alpha, N, bits).value


def section6_closed(K: int, alpha, N: int, bits: int | None = None) -> mpmath.mpc:
    """Closed forms of the coincident J* for K = 1 and K = 2."""
    if K not in (1, 2):
        raise ValueError("closed forms exist only for K = 1, 2")
    with working_precision(bits):
        alpha = _mpc(alpha)
        if alpha == 0:
            raise PoleError("closed form has a pole at alpha = 0")
        if K == 1:
            return zlogderiv_prime(2 * alpha) + mpmath.exp(-2 * N * alpha) * z_eval(
                2 * alpha
            ) * z_eval(-2 * alpha)
        e2, e4, e6 = (mpmath.exp(k * alpha) for k in (2, 4, 6))
        n2 = mpmath.mpf(N) ** 2
        numerator = 2 * e4 + mpmath.exp(-2 * alpha * N) * (
            -e2 * n2 + 2 * e4 * n2 - e6 * n2 - 2 * e4
        )
        return numerator / (1 - e2) ** 4


def theorem2_leading(K: int, a, N: int, bits: int | None = None) -> mpmath.mpf:
    """binom(2K-2, K-1) N^{2K} / (2a)^{2K-1}."""
    with working_precision(bits):
        return math.comb(2 * K - 2, K - 1) * mpmath.mpf(N) ** (2 * K) / (2 * mpmath.mpf(a)) ** (
            2 * K - 1
        )


def abs_lambda_moment(N: int, power, bits: int | None = None) -> mpmath.mpf:
    """E|Lambda_X(1)|^power = prod_{j=1}^N Gamma(j) Gamma(j+power) / Gamma(j+power/2)^2."""
    if N < 1:
        raise ValueError("N must be >= 1")
    with working_precision(bits):
        p = mpmath.mpf(power)
        if p <= -1:
            raise ValueError("moment diverges for power <= -1")
        out = mpmath.mpf(1)
        for j in range(1, N + 1):
            out *= mpmath.gamma(j) * mpmath.gamma(j + p) / mpmath.gamma(j + p / 2) ** 2
        return out
