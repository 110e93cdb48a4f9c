"""Exact polynomial machinery for the shifted Legendre basis.

The through-thickness displacement profiles are expanded in an orthonormal
Legendre basis on [0, kh].  Everything here is closed-form polynomial
arithmetic in monomial coefficients -- no quadrature anywhere.  The NT1/NT2
integrals computed here populate the dispersion eigenproblem blocks.

Monomial coefficients of Legendre polynomials grow fast enough that naive
double-precision products lose all accuracy around order 12, so the rational
part of every NT value is carried in exact ``fractions.Fraction`` arithmetic
(``Fraction(kh)`` is exact for any binary float) and only the irrational
normalization sqrt((2m+1)(2j+1))/kh is applied in floating point at the end.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

__all__ = [
    "Polynomial",
    "BasisSpec",
    "legendre_poly",
    "q_basis",
    "nt1",
    "nt2",
]

# Float monomial coefficients of P_m degrade double precision noticeably
# beyond this order; the exact NT path is unaffected but float evaluation
# of q_basis is not.
CONDITION_WARN_ORDER = 20


class Polynomial:
    """Polynomial in monomial coefficients, canonical (trimmed) form.

    ``coefficients[i]`` multiplies ``x**i``.  Coefficients may be any exact
    or floating numeric type (int, Fraction, float); arithmetic preserves
    exactness when the operands are exact.  The zero polynomial has an empty
    coefficient tuple and degree -1.
    """

    __slots__ = ("coefficients",)

    def __init__(self, coefficients):
        coeffs = list(coefficients)
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients = tuple(coeffs)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.coefficients, other.coefficients
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] = out[i] + c
        return Polynomial(out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (other * -1)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            a, b = self.coefficients, other.coefficients
            if not a or not b:
                return Polynomial([])
            out = [0] * (len(a) + len(b) - 1)
            for i, ca in enumerate(a):
                for k, cb in enumerate(b):
                    out[i + k] += ca * cb
            return Polynomial(out)
        return Polynomial([c * other for c in self.coefficients])

    __rmul__ = __mul__

    def derivative(self) -> "Polynomial":
        c = self.coefficients
        return Polynomial([i * c[i] for i in range(1, len(c))])

    def antiderivative(self) -> "Polynomial":
        c = self.coefficients
        if not c:
            return Polynomial([])
        out = [0]
        for i, ci in enumerate(c):
            if isinstance(ci, float):
                out.append(ci / (i + 1))
            else:
                out.append(Fraction(ci, i + 1) if isinstance(ci, int)
                           else ci / (i + 1))
        return Polynomial(out)

    def integrate(self, a, b):
        """Definite integral over [a, b]; exact for exact coefficients and
        endpoints."""
        anti = self.antiderivative()
        return anti(b) - anti(a)

    def __call__(self, x):
        c = self.coefficients
        if isinstance(x, np.ndarray):
            result = np.zeros_like(np.asarray(x, dtype=float))
            for coef in reversed(c):
                result = result * x + float(coef)
            return result
        if not c:
            return 0 * x
        result = c[-1]
        for coef in c[-2::-1]:
            result = result * x + coef
        return result

    def compose_affine(self, scale, shift) -> "Polynomial":
        """Return p(scale*x + shift) expanded in monomials."""
        out = Polynomial([])
        arg = Polynomial([shift, scale])
        power = Polynomial([1])
        for coef in self.coefficients:
            out = out + power * coef
            power = power * arg
        return out

    def __repr__(self):
        return f"Polynomial({list(self.coefficients)})"

    def __eq__(self, other):
        return (
            isinstance(other, Polynomial)
            and self.coefficients == other.coefficients
        )

    def __hash__(self):
        return hash(self.coefficients)


@dataclass(frozen=True)
class BasisSpec:
    """Expansion truncation order and dimensionless thickness product."""

    order: int
    kh: float

    def __post_init__(self):
        if self.order < 0:
            raise ValueError("expansion order must be non-negative")
        if self.kh <= 0:
            raise ValueError("kh must be positive")


@lru_cache(maxsize=None)
def _legendre_exact(m: int) -> Polynomial:
    """P_m with exact Fraction coefficients via Bonnet's recurrence."""
    if m == 0:
        return Polynomial([Fraction(1)])
    if m == 1:
        return Polynomial([Fraction(0), Fraction(1)])
    pm2 = Polynomial([Fraction(1)])
    pm1 = Polynomial([Fraction(0), Fraction(1)])
    x = Polynomial([Fraction(0), Fraction(1)])
    for n in range(2, m + 1):
        # Bonnet: n P_n = (2n-1) x P_{n-1} - (n-1) P_{n-2}
        pn = (x * pm1) * Fraction(2 * n - 1, n) - pm2 * Fraction(n - 1, n)
        pm2, pm1 = pm1, pn
    return pm1


def legendre_poly(m: int) -> Polynomial:
    """Legendre polynomial P_m in exact monomial coefficients."""
    if m < 0:
        raise ValueError("order must be non-negative")
    if m > CONDITION_WARN_ORDER:
        warnings.warn(
            f"Legendre order {m} > {CONDITION_WARN_ORDER}: float evaluation "
            "of the monomial coefficients loses precision in double "
            "arithmetic",
            RuntimeWarning,
            stacklevel=2,
        )
    return _legendre_exact(m)


def q_basis(m: int, kh: float) -> Polynomial:
    """Orthonormal basis member Q_m(q3) = sqrt((2m+1)/kh) P_m(2 q3/kh - 1).

    The {Q_m} are orthonormal on [0, kh]: integral of Q_j * Q_m equals
    delta_jm.  The returned polynomial carries float coefficients (the
    normalization is irrational); the NT integrals below avoid that
    rounding by deferring the normalization.
    """
    if kh <= 0:
        raise ValueError("kh must be positive")
    khf = Fraction(kh)
    pm = legendre_poly(m).compose_affine(2 / khf, Fraction(-1))
    return pm * math.sqrt((2 * m + 1) / kh)


@lru_cache(maxsize=None)
def _mapped_derivative(m: int, n: int, kh: float) -> Polynomial:
    """n-th derivative of the un-normalized mapped P_m(2x/kh - 1), exact."""
    khf = Fraction(kh)
    p = _legendre_exact(m).compose_affine(2 / khf, Fraction(-1))
    for _ in range(n):
        p = p.derivative()
    return p


def _check_nt_args(m: int, j: int, n: int, kh: float) -> None:
    if m < 0 or j < 0:
        raise ValueError("basis indices must be non-negative")
    if not 0 <= n <= 2:
        raise ValueError("derivative order restricted to 0..2")
    if kh <= 0:
        raise ValueError("kh must be positive")


def _norm(m: int, j: int, kh: float) -> float:
    return math.sqrt((2 * m + 1) * (2 * j + 1)) / kh


@lru_cache(maxsize=None)
def nt1(m: int, j: int, n: int, kh: float) -> float:
    """Exact integral over [0, kh] of Q_j times the n-th derivative of Q_m."""
    _check_nt_args(m, j, n, kh)
    prod = _mapped_derivative(j, 0, kh) * _mapped_derivative(m, n, kh)
    exact = prod.integrate(Fraction(0), Fraction(kh))
    return float(exact) * _norm(m, j, kh)


@lru_cache(maxsize=None)
def nt2(m: int, j: int, n: int, kh: float) -> float:
    """Boundary bracket f_n(0) - f_n(kh) with f_n = Q_j * d^n Q_m / dq3^n.

    This is the closed-form value of the Dirac-delta weighted integral that
    enforces the traction-free surfaces; the sifting property reduces it to
    two endpoint evaluations.
    """
    _check_nt_args(m, j, n, kh)
    qj = _mapped_derivative(j, 0, kh)
    qm = _mapped_derivative(m, n, kh)
    khf = Fraction(kh)
    exact = qj(Fraction(0)) * qm(Fraction(0)) - qj(khf) * qm(khf)
    return float(exact) * _norm(m, j, kh)
