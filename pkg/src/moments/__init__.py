"""Moments of characteristic polynomials of CUE matrices and their derivatives.

Modules:

* :mod:`moments.algebra`: rationals, truncated power series, determinants, precision;
* :mod:`moments.sampler`: Haar sampling and Monte Carlo moment estimates;
* :mod:`moments.exact`: exact finite-N formulas and coincident-shift limits;
* :mod:`moments.painleve`: the I-Bessel determinant and Painleve III' sigma form;
* :mod:`moments.contour`: exact residue integrals and the contour determinants;
* :mod:`moments.hankel`: weight moments, block Hankel determinants, orthogonal polynomials;
* :mod:`moments.cli`: the ``moments`` command.
"""

from .errors import (
    CancellationError,
    ConvergenceError,
    DegenerateParametersError,
    InconsistencyError,
    PoleError,
    RemovableSingularityError,
)

__version__ = "0.1.0"

__all__ = [
    "CancellationError",
    "ConvergenceError",
    "DegenerateParametersError",
    "InconsistencyError",
    "PoleError",
    "RemovableSingularityError",
]
