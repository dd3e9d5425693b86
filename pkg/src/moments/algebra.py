"""Exact and high-precision arithmetic shared by the mathematical modules.

Rational numbers are :class:`fractions.Fraction`; configurable-precision
reals and complexes are :mod:`mpmath` ``mpf``/``mpc`` values evaluated under
:func:`working_precision`.  Power series come in two flavours:

* :class:`TruncatedSeries1`, a dense univariate series ``sum c_k x^k`` known
  up to a fixed order;
* :class:`TruncatedSeries2`, a sparse bivariate series in ``(t1, t2)`` known
  for every monomial of total degree at most ``cap``.

Determinants of rational matrices use fraction-free (Bareiss) elimination.
Determinants over the truncated series rings cannot divide (the rings have
zero divisors), so they use a division-free expansion by minors.
"""

from __future__ import annotations

import math
import os
from contextlib import contextmanager
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Iterator, Mapping, Sequence, TypeVar

import mpmath

Rational = Fraction

DEFAULT_PRECISION_BITS = 256
PRECISION_ENV_VAR = "MOMENTS_PRECISION_BITS"

T = TypeVar("T")


def default_precision() -> int:
    """Working precision in bits, honouring ``MOMENTS_PRECISION_BITS``."""
    raw = os.environ.get(PRECISION_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_PRECISION_BITS
    bits = int(raw)
    if bits < 53:
        raise ValueError(f"{PRECISION_ENV_VAR}={bits} is below double precision")
    return bits


@contextmanager
def working_precision(bits: int | None = None) -> Iterator[int]:
    """Evaluate the enclosed block with ``bits`` of mpmath precision.

    Precision is only ever raised relative to the caller's context, never
    silently lowered.
    """
    if bits is None:
        bits = default_precision()
    bits = max(int(bits), mpmath.mp.prec)
    with mpmath.workprec(bits):
        yield bits


def big_real(value, bits: int | None = None) -> mpmath.mpf:
    with working_precision(bits):
        if isinstance(value, Fraction):
            return mpmath.mpf(value.numerator) / value.denominator
        return mpmath.mpf(value)


def big_complex(value, bits: int | None = None) -> mpmath.mpc:
    with working_precision(bits):
        if isinstance(value, Fraction):
            return mpmath.mpc(mpmath.mpf(value.numerator) / value.denominator)
        return mpmath.mpc(value)


def to_mp(value: Fraction | int) -> mpmath.mpf:
    """Convert a rational to an mpf at the current precision."""
    value = Fraction(value)
    return mpmath.mpf(value.numerator) / value.denominator


def binomial(n: int, k: int) -> int:
    """Generalized binomial coefficient ``n (n-1) ... (n-k+1) / k!`` for any integer n."""
    if k < 0:
        return 0
    if n >= 0:
        return math.comb(n, k)
    # (-m choose k) = (-1)^k (m+k-1 choose k)
    return (-1) ** k * math.comb(-n + k - 1, k)


# ----------------------------------------------------------------------------
# Determinants
# ----------------------------------------------------------------------------


def _check_square(matrix: Sequence[Sequence]) -> int:
    n = len(matrix)
    if n == 0:
        raise ValueError("matrix must have size >= 1")
    for row in matrix:
        if len(row) != n:
            raise ValueError(f"matrix is not square: row of length {len(row)} in {n}x{n}")
    return n


def exact_determinant(matrix: Sequence[Sequence[Fraction | int]]) -> Fraction:
    """Exact determinant of a square rational matrix.

    Each row is scaled to integers, the integer determinant is found by
    Bareiss fraction-free elimination (every intermediate is itself a minor,
    so coefficient growth stays polynomial), and the scaling is undone.
    """
    n = _check_square(matrix)
    rows = [[Fraction(x) for x in row] for row in matrix]
    scale = Fraction(1)
    int_rows: list[list[int]] = []
    for row in rows:
        lcm = 1
        for x in row:
            lcm = lcm * x.denominator // math.gcd(lcm, x.denominator)
        scale *= lcm
        int_rows.append([int(x * lcm) for x in row])
    return Fraction(_bareiss(int_rows, n)) / scale


def _bareiss(a: list[list[int]], n: int) -> int:
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        pivot = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i = a[i]
            row_k = a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * pivot - aik * row_k[j]) // prev
        prev = pivot
    return sign * a[n - 1][n - 1]


def minor_expansion_determinant(
    matrix: Sequence[Sequence[T]], zero: T, one: T
) -> T:
    """Division-free determinant over any commutative ring.

    Expands row by row, memoising the partial determinant of each set of
    already-used columns; ``n 2^(n-1)`` ring multiplications.
    """
    n = _check_square(matrix)
    partial: dict[frozenset[int], T] = {frozenset(): one}
    for i in range(n):
        row = matrix[i]
        nxt: dict[frozenset[int], T] = {}
        for used, value in partial.items():
            for j in range(n):
                if j in used:
                    continue
                inversions = sum(1 for k in used if k > j)
                term = row[j] * value
                if inversions % 2:
                    term = -term
                key = used | {j}
                nxt[key] = nxt[key] + term if key in nxt else term
        partial = nxt
    return partial.get(frozenset(range(n)), zero)


def cofactor_determinant(matrix: Sequence[Sequence]) -> object:
    """Plain Laplace expansion along the first row; exponential time."""
    n = _check_square(matrix)
    if n == 1:
        return matrix[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in (list(r) for r in matrix[1:])]
        term = matrix[0][j] * cofactor_determinant(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


# ----------------------------------------------------------------------------
# Univariate truncated series
# ----------------------------------------------------------------------------


class TruncatedSeries1:
    """Univariate power series with rational coefficients, known up to ``order``.

    Coefficients past ``order`` are unknown, so every operation truncates its
    result to the smallest order of its operands.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coefficients: Iterable, order: int | None = None):
        coeffs = [Fraction(c) for c in coefficients]
        if order is None:
            order = len(coeffs) - 1
        if order < 0:
            raise ValueError("order must be >= 0")
        coeffs = coeffs[: order + 1] + [Fraction(0)] * (order + 1 - len(coeffs))
        self._coeffs = tuple(coeffs)

    @classmethod
    def constant(cls, value, order: int) -> "TruncatedSeries1":
        return cls([value], order)

    @classmethod
    def variable(cls, order: int) -> "TruncatedSeries1":
        return cls([0, 1], order)

    @property
    def order(self) -> int:
        return len(self._coeffs) - 1

    @property
    def coefficients(self) -> tuple[Fraction, ...]:
        return self._coeffs

    def __getitem__(self, k: int) -> Fraction:
        if k < 0 or k > self.order:
            raise IndexError(f"coefficient {k} is beyond the truncation order {self.order}")
        return self._coeffs[k]

    def __len__(self) -> int:
        return len(self._coeffs)

    def __repr__(self) -> str:
        return f"TruncatedSeries1({[str(c) for c in self._coeffs]})"

    def __eq__(self, other) -> bool:
        if isinstance(other, TruncatedSeries1):
            return self._coeffs == other._coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._coeffs)

    def _coerce(self, other) -> "TruncatedSeries1":
        if isinstance(other, TruncatedSeries1):
            return other
        if isinstance(other, (int, Fraction)):
            return TruncatedSeries1.constant(other, self.order)
        return NotImplemented

    def truncate(self, order: int) -> "TruncatedSeries1":
        if order > self.order:
            raise ValueError(f"cannot extend a series of order {self.order} to {order}")
        return TruncatedSeries1(self._coeffs[: order + 1])

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        order = min(self.order, other.order)
        return TruncatedSeries1(
            [self._coeffs[k] + other._coeffs[k] for k in range(order + 1)]
        )

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries1([-c for c in self._coeffs])

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return TruncatedSeries1([c * other for c in self._coeffs])
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        order = min(self.order, other.order)
        a, b = self._coeffs, other._coeffs
        out = []
        for k in range(order + 1):
            s = Fraction(0)
            for i in range(k + 1):
                if a[i] and b[k - i]:
                    s += a[i] * b[k - i]
            out.append(s)
        return TruncatedSeries1(out)

    __rmul__ = __mul__

    def derivative(self, k: int = 1) -> "TruncatedSeries1":
        return series_derivative(self, k)

    def shift_up(self) -> "TruncatedSeries1":
        """Multiply by the variable: the result is known to one more order."""
        return TruncatedSeries1((Fraction(0),) + self._coeffs)

    def integral(self) -> "TruncatedSeries1":
        """Antiderivative vanishing at 0 (one order longer)."""
        return TruncatedSeries1(
            [Fraction(0)] + [c / (k + 1) for k, c in enumerate(self._coeffs)]
        )

    def scale_variable(self, factor) -> "TruncatedSeries1":
        """Series of ``f(factor * x)``."""
        factor = Fraction(factor)
        return TruncatedSeries1([c * factor**k for k, c in enumerate(self._coeffs)])

    def inverse(self) -> "TruncatedSeries1":
        """Multiplicative inverse by Newton iteration ``g <- g (2 - f g)``."""
        c0 = self._coeffs[0]
        if c0 == 0:
            raise ZeroDivisionError("series with zero constant term is not invertible")
        g = TruncatedSeries1([1 / c0])
        known = 0
        while known < self.order:
            known = min(2 * known + 1, self.order)
            f = self.truncate(known)
            g = TruncatedSeries1(g._coeffs, known)
            g = g * (2 - f * g)
        return g

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return TruncatedSeries1([c / other for c in self._coeffs])
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self * other.inverse()

    def log(self) -> "TruncatedSeries1":
        """Formal logarithm of a series with constant term 1."""
        if self._coeffs[0] != 1:
            raise ValueError("log requires constant term 1")
        if self.order == 0:
            return TruncatedSeries1([0])
        return (self.derivative() * self.truncate(self.order - 1).inverse()).integral()

    def exp(self) -> "TruncatedSeries1":
        """Formal exponential of a series with zero constant term.

        Newton iteration ``g <- g (1 + h - log g)`` doubles the number of
        correct coefficients per step.
        """
        if self._coeffs[0] != 0:
            raise ValueError("exp requires zero constant term")
        g = TruncatedSeries1([1])
        known = 0
        while known < self.order:
            known = min(2 * known + 1, self.order)
            h = self.truncate(known)
            g = TruncatedSeries1(g._coeffs, known)
            g = g * (1 + h - g.log())
        return g

    def evaluate(self, x, bits: int | None = None):
        """Horner evaluation; rational for rational ``x``, mpmath otherwise."""
        if isinstance(x, (int, Fraction)):
            acc = Fraction(0)
            for c in reversed(self._coeffs):
                acc = acc * x + c
            return acc
        with working_precision(bits):
            acc = mpmath.mpf(0)
            for c in reversed(self._coeffs):
                acc = acc * x + to_mp(c)
            return acc


def series_derivative(series: TruncatedSeries1, k: int) -> TruncatedSeries1:
    """k-th formal derivative; the order drops by ``k``."""
    if k < 0:
        raise ValueError("derivative count must be >= 0")
    if k > series.order:
        raise ValueError(f"cannot differentiate {k} times a series of order {series.order}")
    if k == 0:
        return series
    c = series.coefficients
    return TruncatedSeries1(
        [c[j] * math.perm(j, k) for j in range(k, series.order + 1)]
    )


# ----------------------------------------------------------------------------
# Bivariate truncated series
# ----------------------------------------------------------------------------


class TruncatedSeries2:
    """Sparse series in ``(t1, t2)`` known for total degree ``<= cap``."""

    __slots__ = ("_terms", "_cap")

    def __init__(self, terms: Mapping[tuple[int, int], Fraction | int], cap: int):
        if cap < 0:
            raise ValueError("cap must be >= 0")
        clean: dict[tuple[int, int], Fraction] = {}
        for (m, n), c in terms.items():
            if m < 0 or n < 0:
                raise ValueError(f"negative exponent ({m}, {n})")
            if m + n <= cap and c != 0:
                clean[(m, n)] = Fraction(c)
        self._terms = clean
        self._cap = cap

    @classmethod
    def constant(cls, value, cap: int) -> "TruncatedSeries2":
        return cls({(0, 0): value}, cap)

    @property
    def cap(self) -> int:
        return self._cap

    @property
    def terms(self) -> dict[tuple[int, int], Fraction]:
        return dict(self._terms)

    def coefficient(self, m: int, n: int) -> Fraction:
        if m + n > self._cap:
            raise IndexError(f"t1^{m} t2^{n} is beyond the truncation cap {self._cap}")
        return self._terms.get((m, n), Fraction(0))

    @property
    def constant_term(self) -> Fraction:
        return self._terms.get((0, 0), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def nonconstant_terms(self) -> dict[tuple[int, int], Fraction]:
        return {k: v for k, v in self._terms.items() if k != (0, 0)}

    def max_degree(self) -> int:
        """Largest total degree with a nonzero coefficient (-1 for zero)."""
        return max((m + n for m, n in self._terms), default=-1)

    def homogeneous_part(self, degree: int) -> dict[tuple[int, int], Fraction]:
        return {k: v for k, v in self._terms.items() if sum(k) == degree}

    def restrict(self, cap: int) -> "TruncatedSeries2":
        if cap > self._cap:
            raise ValueError(f"cannot extend cap {self._cap} to {cap}")
        return TruncatedSeries2(self._terms, cap)

    def __repr__(self) -> str:
        body = ", ".join(f"{k}: {v}" for k, v in sorted(self._terms.items()))
        return f"TruncatedSeries2({{{body}}}, cap={self._cap})"

    def __eq__(self, other) -> bool:
        if isinstance(other, TruncatedSeries2):
            return self._cap == other._cap and self._terms == other._terms
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self._cap, frozenset(self._terms.items())))

    def _coerce(self, other) -> "TruncatedSeries2":
        if isinstance(other, TruncatedSeries2):
            if other._cap != self._cap:
                raise ValueError(f"mismatched caps {self._cap} and {other._cap}")
            return other
        if isinstance(other, (int, Fraction)):
            return TruncatedSeries2.constant(other, self._cap)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out.get(k, 0) + v
        return TruncatedSeries2(out, self._cap)

    __radd__ = __add__

    def __neg__(self):
        return TruncatedSeries2({k: -v for k, v in self._terms.items()}, self._cap)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return TruncatedSeries2({k: v * other for k, v in self._terms.items()}, self._cap)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        cap = self._cap
        out: dict[tuple[int, int], Fraction] = {}
        for (m1, n1), a in self._terms.items():
            room = cap - m1 - n1
            for (m2, n2), b in other._terms.items():
                if m2 + n2 <= room:
                    key = (m1 + m2, n1 + n2)
                    out[key] = out.get(key, 0) + a * b
        return TruncatedSeries2(out, cap)

    __rmul__ = __mul__


def series_determinant(matrix: Sequence[Sequence[TruncatedSeries2]]) -> TruncatedSeries2:
    """Determinant of a square matrix of bivariate series sharing one cap."""
    _check_square(matrix)
    caps = {entry.cap for row in matrix for entry in row}
    if len(caps) != 1:
        raise ValueError(f"entries have mismatched caps {sorted(caps)}")
    cap = caps.pop()
    return minor_expansion_determinant(
        matrix, TruncatedSeries2({}, cap), TruncatedSeries2.constant(1, cap)
    )


def series1_determinant(matrix: Sequence[Sequence[TruncatedSeries1]]) -> TruncatedSeries1:
    """Determinant of a square matrix of univariate series."""
    _check_square(matrix)
    order = min(entry.order for row in matrix for entry in row)
    return minor_expansion_determinant(
        matrix, TruncatedSeries1([0], order), TruncatedSeries1([1], order)
    )


def neville_extrapolate(xs: Sequence, ys: Sequence, at=0):
    """Value at ``at`` of the polynomial interpolating ``(xs, ys)``."""
    if len(xs) != len(ys) or not xs:
        raise ValueError("need matching, non-empty abscissae and ordinates")
    p = list(ys)
    n = len(xs)
    for level in range(1, n):
        for i in range(n - level):
            p[i] = ((at - xs[i + level]) * p[i] + (xs[i] - at) * p[i + 1]) / (
                xs[i] - xs[i + level]
            )
    return p[0]


def pairwise_sum(values: Sequence[float]) -> float:
    """Correctly rounded float sum, hence independent of summation order."""
    return math.fsum(values)


__all__ = [
    "Rational",
    "DEFAULT_PRECISION_BITS",
    "PRECISION_ENV_VAR",
    "default_precision",
    "working_precision",
    "big_real",
    "big_complex",
    "to_mp",
    "binomial",
    "exact_determinant",
    "minor_expansion_determinant",
    "cofactor_determinant",
    "TruncatedSeries1",
    "TruncatedSeries2",
    "series_determinant",
    "series1_determinant",
    "series_derivative",
    "neville_extrapolate",
    "pairwise_sum",
]
