"""Exact residue calculus for the integrals

    I(r, E, G) = 1/(2 pi i) \\oint_{|u|=2} u^r exp(t1/(u-1) + t2/(u+1)) / ((u-1)^E (u+1)^G) du

and the determinants built from them: the constant (-2)^{K^2} determinant,
the degree-2K determinant with one raised row, the degree bookkeeping for
matrices whose exponents split as ``r_{i,j} = c_j + r_i``, the factorial
matrix C_{2K}, and the small-shift asymptotic of the log-derivative moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Sequence

import mpmath

from .algebra import (
    TruncatedSeries2,
    binomial,
    exact_determinant,
    series_determinant,
    working_precision,
)


@dataclass(frozen=True)
class IntegralIndex:
    """Index (r, E, G) of I(r, E, G): power of u and pole orders at u=1 and u=-1."""

    r: int
    E: int
    G: int

    def __post_init__(self):
        if self.E < 0 or self.G < 0:
            raise ValueError(f"pole orders must be nonnegative, got E={self.E}, G={self.G}")

    @property
    def degree(self) -> int:
        return self.r - self.E - self.G


@dataclass(frozen=True)
class DegreeProfile:
    column_degrees: tuple[int, ...]
    total: int

    @property
    def zero_columns(self) -> tuple[int, ...]:
        """Columns of degree <= -2, which vanish identically."""
        return tuple(j for j, d in enumerate(self.column_degrees) if d <= -2)


# ----------------------------------------------------------------------------
# Residues
# ----------------------------------------------------------------------------


def _power_series_coeffs(base_exponent: int, sign: int, count: int) -> list[int]:
    """Coefficients of (1 + sign*v)^base_exponent up to v^(count-1)."""
    return [binomial(base_exponent, k) * sign**k for k in range(count)]


def _residue_at_one(r: int, E: int, G: int) -> Fraction:
    # v = u - 1: u^r = (1+v)^r, (u+1)^-G = 2^-G (1 + v/2)^-G
    if E == 0:
        return Fraction(0)
    a = _power_series_coeffs(r, 1, E)
    b = [Fraction(binomial(-G, k), 2**k) for k in range(E)]
    coeff = sum(a[k] * b[E - 1 - k] for k in range(E))
    return coeff / Fraction(2) ** G


def _residue_at_minus_one(r: int, E: int, G: int) -> Fraction:
    # v = u + 1: u^r = (-1)^r (1-v)^r, (u-1)^-E = (-2)^-E (1 - v/2)^-E
    if G == 0:
        return Fraction(0)
    a = _power_series_coeffs(r, -1, G)
    b = [Fraction(binomial(-E, k) * (-1) ** k, 2**k) for k in range(G)]
    coeff = sum(a[k] * b[G - 1 - k] for k in range(G))
    return (-1) ** (r % 2) * coeff / Fraction(-2) ** E


def _residue_at_zero(r: int, E: int, G: int) -> Fraction:
    # only for r < 0: coefficient of u^(-r-1) in (u-1)^-E (u+1)^-G
    if r >= 0:
        return Fraction(0)
    k = -r - 1
    # (u-1)^-E = (-1)^E (1-u)^-E
    a = _power_series_coeffs(-E, -1, k + 1)
    b = _power_series_coeffs(-G, 1, k + 1)
    return Fraction((-1) ** E * sum(a[i] * b[k - i] for i in range(k + 1)))


def residue_integral(idx: IntegralIndex) -> Fraction:
    """I(r, E, G) at t1 = t2 = 0, exactly.

    Sum of the residues inside |u| = 2: at u = 1 and u = -1 from local
    binomial expansions, plus u = 0 when r < 0.  Vanishes whenever
    E + G >= r + 2 since the integrand then decays like |u|^-2.
    """
    r, E, G = idx.r, idx.E, idx.G
    if E + G >= r + 2:
        return Fraction(0)
    return _residue_at_one(r, E, G) + _residue_at_minus_one(r, E, G) + _residue_at_zero(r, E, G)


def i_series(idx: IntegralIndex, cap: int) -> TruncatedSeries2:
    """I(r, E, G) as a series in (t1, t2) through total degree ``cap``.

    Expanding the exponential, the coefficient of t1^m t2^n is
    I(r, E+m, G+n) / (m! n!).
    """
    if cap < 0:
        raise ValueError("cap must be >= 0")
    terms = {}
    for m in range(cap + 1):
        for n in range(cap + 1 - m):
            value = residue_integral(IntegralIndex(idx.r, idx.E + m, idx.G + n))
            if value:
                terms[(m, n)] = value / (math.factorial(m) * math.factorial(n))
    return TruncatedSeries2(terms, cap)


# ----------------------------------------------------------------------------
# Matrices whose exponents split as r_{i,j} = c_j + r_i
# ----------------------------------------------------------------------------


def class_m_grid(
    row_offsets: Sequence[int],
    col_offsets: Sequence[int],
    E: Sequence[int],
    G: Sequence[int],
) -> list[list[IntegralIndex]]:
    """Grid of indices I(c_j + r_i, E_j, G_j)."""
    if not (len(col_offsets) == len(E) == len(G)):
        raise ValueError("column data must have equal lengths")
    return [
        [IntegralIndex(ri + cj, ej, gj) for cj, ej, gj in zip(col_offsets, E, G)]
        for ri in row_offsets
    ]


def degree_profile(grid: Sequence[Sequence[IntegralIndex]]) -> DegreeProfile:
    """Column degrees max_i (r_ij - E_j - G_j) and their sum.

    Rejects grids whose total pole order E+G varies down a column or whose
    exponents do not split as r_{i,j} = c_j + r_i.  The split of E+G between
    the two poles may change with the row, as in the raised-row matrices.
    """
    n_rows = len(grid)
    if n_rows == 0:
        raise ValueError("empty grid")
    n_cols = len(grid[0])
    if any(len(row) != n_cols for row in grid):
        raise ValueError("ragged grid")
    for j in range(n_cols):
        column = [grid[i][j] for i in range(n_rows)]
        if len({x.E + x.G for x in column}) != 1:
            raise ValueError(f"total pole order varies down column {j}")
    # r_{i,j} - r_{0,j} must not depend on j
    for i in range(n_rows):
        diffs = {grid[i][j].r - grid[0][j].r for j in range(n_cols)}
        if len(diffs) != 1:
            raise ValueError(f"exponents in row {i} do not split as c_j + r_i")
    degrees = tuple(max(grid[i][j].degree for i in range(n_rows)) for j in range(n_cols))
    return DegreeProfile(degrees, sum(degrees))


def series_matrix(grid: Sequence[Sequence[IntegralIndex]], cap: int) -> list[list[TruncatedSeries2]]:
    return [[i_series(idx, cap) for idx in row] for row in grid]


def grid_determinant(grid: Sequence[Sequence[IntegralIndex]], cap: int) -> TruncatedSeries2:
    return series_determinant(series_matrix(grid, cap))


def mij_grid(K: int, m: Sequence[int], n: Sequence[int], variant: str = "rowK") -> list[list[IntegralIndex]]:
    """Column-differentiated version of the raised-row matrix.

    Column j has been differentiated m_j times in t1 and n_j times in t2,
    raising its pole orders.  ``variant`` selects whether row K (``"rowK"``)
    or row 2K (``"row2K"``) carries the extra power of u.
    """
    if len(m) != 2 * K or len(n) != 2 * K:
        raise ValueError("need 2K derivative counts per variable")
    if variant not in ("rowK", "row2K"):
        raise ValueError(f"unknown variant {variant!r}")
    grid = []
    for i in range(1, 2 * K + 1):
        row = []
        for j in range(1, 2 * K + 1):
            mj, nj = m[j - 1], n[j - 1]
            if i <= K:
                r = i + j - 2 + (1 if variant == "rowK" and i == K else 0)
                row.append(IntegralIndex(r, K + mj, nj))
            else:
                r = i - K + j - 2 + (1 if variant == "row2K" and i == 2 * K else 0)
                row.append(IntegralIndex(r, mj, K + nj))
        grid.append(row)
    return grid


# ----------------------------------------------------------------------------
# Residue determinants with and without a raised row
# ----------------------------------------------------------------------------


def lemma1_grid(K: int) -> list[list[IntegralIndex]]:
    if K < 1:
        raise ValueError("K must be >= 1")
    top = [[IntegralIndex(i + j, K, 0) for j in range(2 * K)] for i in range(K)]
    bottom = [[IntegralIndex(i + j, 0, K) for j in range(2 * K)] for i in range(K)]
    return top + bottom


def lemma1_determinant(K: int, cap: int = 4) -> TruncatedSeries2:
    """Determinant of the 2K x 2K matrix of u^{i+j-2} integrals against
    (u-1)^-K (top half) and (u+1)^-K (bottom half), as a series in t1, t2.

    Identically (-2)^{K^2}: every nonconstant coefficient vanishes.
    """
    if cap < 2:
        raise ValueError("cap must be >= 2")
    return grid_determinant(lemma1_grid(K), cap)


def lemma2_grid(K: int, variant: str = "rowK") -> list[list[IntegralIndex]]:
    if K < 1:
        raise ValueError("K must be >= 1")
    return mij_grid(K, [0] * (2 * K), [0] * (2 * K), variant)


def lemma2_determinant(K: int, variant: str = "rowK", cap: int | None = None) -> TruncatedSeries2:
    """Raised-row determinant as a series, by default through degree 2K+1.

    The default cap sits one above the expected degree so that the degree
    bound is falsifiable.
    """
    if cap is None:
        cap = 2 * K + 1
    return grid_determinant(lemma2_grid(K, variant), cap)


def lemma2_leading_coefficient(K: int, a: int, b: int, variant: str = "rowK") -> Fraction:
    """Predicted coefficient of t1^a t2^b (a + b = 2K) in the raised-row determinant."""
    if a + b != 2 * K:
        raise ValueError("a + b must equal 2K")
    sign = 1 if variant == "rowK" else -1
    return Fraction(
        sign * math.comb(2 * K - 2, K - 1) * 2 ** ((K - 1) ** 2),
        math.factorial(a) * math.factorial(b),
    )


def binomial_matrix(K: int) -> list[list[int]]:
    """Signed binomial matrix that evaluates to (-2)^{K^2}.

    Top K rows: C(j, i); bottom K rows: (-1)^{i+j} C(j, i), with
    i = 0..K-1 and j = 0..2K-1.
    """
    top = [[math.comb(j, i) for j in range(2 * K)] for i in range(K)]
    bottom = [[(-1) ** (i + j) * math.comb(j, i) for j in range(2 * K)] for i in range(K)]
    return top + bottom


def c_matrix(K: int) -> list[list[Fraction]]:
    """2K x 2K matrix with (i, j) entry 1/(j+1-i)! for i <= j+1 (1-based), else 0."""
    if K < 1:
        raise ValueError("K must be >= 1")
    size = 2 * K
    return [
        [
            Fraction(1, math.factorial(j + 1 - i)) if i <= j + 1 else Fraction(0)
            for j in range(1, size + 1)
        ]
        for i in range(1, size + 1)
    ]


def c_matrix_determinant(K: int) -> Fraction:
    return exact_determinant(c_matrix(K))


def _permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k] - 1
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class LeadingTerm:
    """One surviving column-degree arrangement in the leading-coefficient sum."""

    column_degrees: tuple[int, ...]
    permutation: tuple[int, ...]
    derivative_counts: tuple[int, ...]
    sign: int
    multiplicity: int


def leading_terms(K: int) -> list[LeadingTerm]:
    """Permutations sigma of 1..2K with sigma_j <= j+1.

    Column j then carries p_j = j + 1 - sigma_j derivatives and has degree
    sigma_j - 2; the multiplicity of the arrangement is (2K)!/prod p_j!.
    """
    size = 2 * K
    out = []
    for perm in permutations(range(1, size + 1)):
        if any(perm[j - 1] > j + 1 for j in range(1, size + 1)):
            continue
        p = tuple(j + 1 - perm[j - 1] for j in range(1, size + 1))
        mult = math.factorial(size)
        for pj in p:
            mult //= math.factorial(pj)
        out.append(
            LeadingTerm(
                column_degrees=tuple(s - 2 for s in perm),
                permutation=tuple(perm),
                derivative_counts=p,
                sign=_permutation_sign(perm),
                multiplicity=mult,
            )
        )
    return out


def theorem2_value(K: int, a, N, bits: int | None = None) -> mpmath.mpf:
    """Leading small-shift asymptotic C(2K-2, K-1) N^{2K} / (2a)^{2K-1}."""
    if K < 1:
        raise ValueError("K must be >= 1")
    with working_precision(bits):
        a = mpmath.mpf(a)
        if a <= 0:
            raise ValueError("a must be > 0")
        N = mpmath.mpf(N)
        return math.comb(2 * K - 2, K - 1) * N ** (2 * K) / (2 * a) ** (2 * K - 1)


def theorem2_constant_from_determinants(K: int) -> Fraction:
    """Constant C with moment ~ C N^{2K} / a^{2K-1}, assembled from the series determinants.

    Applies (d/dt1)^K (d/dt2)^K at the origin to the two raised-row
    determinants, weights them by +a/2 and -a/2, and divides by 2^{K^2}.
    """
    kf2 = math.factorial(K) ** 2
    row_k = lemma2_determinant(K, "rowK").coefficient(K, K) * kf2
    row_2k = lemma2_determinant(K, "row2K").coefficient(K, K) * kf2
    return (row_k * Fraction(1, 2) - row_2k * Fraction(1, 2)) / 2 ** (K * K)


def random_class_m(rng, K: int, max_total: int, attempts: int = 10_000):
    """Draw (row_offsets, col_offsets, E, G) with total degree < ``max_total``.

    Offsets are small integers; rejection sampling on the total degree.
    """
    size = 2 * K
    for _ in range(attempts):
        rows = sorted(int(x) for x in rng.integers(-1, 4, size))
        cols = [int(x) for x in rng.integers(0, 5, size)]
        E = [int(x) for x in rng.integers(0, 4, size)]
        G = [int(x) for x in rng.integers(0, 4, size)]
        grid = class_m_grid(rows, cols, E, G)
        if degree_profile(grid).total < max_total:
            return rows, cols, E, G
    raise RuntimeError("could not draw a low-degree instance")


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def all_derivative_patterns(K: int, total: int):
    """Every (m, n) pair of length-2K nonnegative vectors with sum(m)+sum(n) == total."""
    size = 2 * K
    for combo in _compositions(total, 2 * size):
        yield list(combo[:size]), list(combo[size:])
