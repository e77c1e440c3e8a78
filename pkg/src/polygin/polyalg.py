"""Exact algebra of polynomials in z and conj(z) over the planar Gaussian measure.

This module is the ground truth for the numerical kernel, sampler and
cumulant code.  Everything is sparse, small and exact on purpose.

Conventions used throughout the package:

* area measure  dA = dx dy / pi,
* Gaussian measure  dmu_n = exp(-n |z|^2) dA,  with the monomial moments
  integral( z^a conj(z)^b dmu_n ) = delta_{ab} * a! / n^(a+1),
* Wirtinger operators  d = (d/dx - i d/dy)/2  and  dbar = (d/dx + i d/dy)/2,
* Laplacian  lap = d dbar  (one quarter of the Euclidean Laplacian).

Coefficients may be ordinary Python complex numbers (fast path) or
``GaussRational`` values (exact complex rationals, used when identity
tests must be bit-exact).  All operations are coefficient-type agnostic.
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "GaussRational",
    "PolyPoly",
    "DiffOpSpec",
    "DegreeBudgetError",
    "DEGREE_BUDGET",
    "degree_budget",
    "wirtinger",
    "laplacian",
    "apply_T",
    "gaussian_inner",
    "plain_integral",
    "basis_monomial",
    "monomial_norm_sq",
    "apply_diffop",
    "falling",
]

#: Largest exponent allowed per variable.  Exceeding it raises instead of
#: silently truncating; 64! is still exactly representable as a float.
DEGREE_BUDGET = 64


@contextmanager
def degree_budget(limit: int):
    """Temporarily raise the per-variable degree budget (setup-time use)."""
    global DEGREE_BUDGET
    old = DEGREE_BUDGET
    DEGREE_BUDGET = limit
    try:
        yield
    finally:
        DEGREE_BUDGET = old


class DegreeBudgetError(ValueError):
    """A polynomial operation produced an exponent above the degree budget."""


class GaussRational:
    """Exact complex number with rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _coerce(x):
        if isinstance(x, GaussRational):
            return x
        if isinstance(x, (int, Fraction)):
            return GaussRational(x)
        return NotImplemented

    def conjugate(self):
        return GaussRational(self.re, -self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            if isinstance(other, (float, complex)):
                return complex(self) == complex(other)
            return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __neg__(self):
        return GaussRational(-self.re, -self.im)

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return GaussRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return GaussRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return GaussRational(o.re - self.re, o.im - self.im)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return GaussRational(
            self.re * o.re - self.im * o.im,
            self.re * o.im + self.im * o.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero GaussRational")
        return GaussRational(
            (self.re * o.re + self.im * o.im) / den,
            (self.im * o.re - self.re * o.im) / den,
        )

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussRational({self.re!r}, {self.im!r})"


def _conj_coeff(c):
    if isinstance(c, GaussRational):
        return c.conjugate()
    return complex(c).conjugate()


def _scale(c, frac: Fraction):
    """Multiply a coefficient by an exact rational scale factor."""
    if isinstance(c, GaussRational):
        return c * frac
    return c * float(frac)


class PolyPoly:
    """Sparse polynomial sum(c_{a,b} z^a conj(z)^b) with complex coefficients.

    The terms live in a dict mapping exponent pairs (a, b) to nonzero
    coefficients.  Addition and multiplication close over the
    representation; exponents above ``DEGREE_BUDGET`` raise
    ``DegreeBudgetError`` instead of truncating.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        cleaned = {}
        if terms:
            for (a, b), c in terms.items():
                if a < 0 or b < 0:
                    raise ValueError(f"negative exponent ({a}, {b})")
                if a > DEGREE_BUDGET or b > DEGREE_BUDGET:
                    raise DegreeBudgetError(
                        f"exponent ({a}, {b}) exceeds degree budget {DEGREE_BUDGET}"
                    )
                if c:
                    cleaned[(a, b)] = c
        self.terms = cleaned

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls):
        return cls({})

    @classmethod
    def monomial(cls, a, b, coeff=1):
        return cls({(a, b): coeff})

    @classmethod
    def constant(cls, coeff):
        return cls({(0, 0): coeff})

    # -- structure ----------------------------------------------------
    def is_zero(self):
        return not self.terms

    def degree(self):
        """Max (z-degree, conj(z)-degree) over stored terms, (-1,-1) if zero."""
        if not self.terms:
            return (-1, -1)
        return (
            max(a for a, _ in self.terms),
            max(b for _, b in self.terms),
        )

    def __eq__(self, other):
        if not isinstance(other, PolyPoly):
            return NotImplemented
        if self.terms.keys() != other.terms.keys():
            return False
        return all(self.terms[k] == other.terms[k] for k in self.terms)

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- arithmetic ---------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, PolyPoly):
            return NotImplemented
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k, 0) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return PolyPoly(out)

    def __sub__(self, other):
        if not isinstance(other, PolyPoly):
            return NotImplemented
        return self + (-other)

    def __neg__(self):
        return PolyPoly({k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, PolyPoly):
            out = {}
            for (a1, b1), c1 in self.terms.items():
                for (a2, b2), c2 in other.terms.items():
                    k = (a1 + a2, b1 + b2)
                    p = c1 * c2
                    s = out.get(k, 0) + p
                    if s:
                        out[k] = s
                    else:
                        out.pop(k, None)
            return PolyPoly(out)
        # scalar
        if not other:
            return PolyPoly.zero()
        return PolyPoly({k: c * other for k, c in self.terms.items()})

    __rmul__ = __mul__

    def conjugate(self):
        """Complex conjugate: swaps z and conj(z) exponents, conjugates coefficients."""
        return PolyPoly({(b, a): _conj_coeff(c) for (a, b), c in self.terms.items()})

    def evaluate(self, z):
        """Evaluate at a complex point or numpy array of points."""
        zc = z.conjugate() if hasattr(z, "conjugate") else complex(z).conjugate()
        total = 0
        for (a, b), c in self.terms.items():
            total = total + complex(c) * z**a * zc**b
        return total

    def __repr__(self):
        if not self.terms:
            return "PolyPoly(0)"
        bits = [f"({c!r})*z^{a}*zb^{b}" for (a, b), c in sorted(self.terms.items())]
        return "PolyPoly(" + " + ".join(bits) + ")"


def wirtinger(p: PolyPoly, which: str) -> PolyPoly:
    """Wirtinger derivative of p: 'd' acts on z exponents, 'dbar' on conj(z).

    Constants map to the zero polynomial.
    """
    if which not in ("d", "dbar"):
        raise ValueError("which must be 'd' or 'dbar'")
    out = {}
    for (a, b), c in p.terms.items():
        if which == "d":
            if a == 0:
                continue
            out[(a - 1, b)] = c * a
        else:
            if b == 0:
                continue
            out[(a, b - 1)] = c * b
    return PolyPoly(out)


def laplacian(p: PolyPoly) -> PolyPoly:
    """lap = d dbar (one quarter of the Euclidean Laplacian)."""
    return wirtinger(wirtinger(p, "dbar"), "d")


def apply_T(p: PolyPoly, n: int, times: int = 1) -> PolyPoly:
    """Apply the raising operator T p = n*conj(z)*p - dp, ``times`` times.

    Each application raises the conj(z)-degree by at most one.  T maps the
    analytic polynomials onto the next Landau-level eigenspace up to the
    normalization sqrt(n^r r!).
    """
    if times < 0:
        raise ValueError("times must be >= 0")
    zbar = PolyPoly.monomial(0, 1)
    out = p
    for _ in range(times):
        out = zbar * out * n - wirtinger(out, "d")
    return out


def gaussian_inner(p: PolyPoly, q: PolyPoly, n: int):
    """Inner product <p, q> = integral( p * conj(q) dmu_n ).

    Exact when both polynomials carry GaussRational coefficients.  A term
    z^a conj(z)^b of p pairs with a term z^c conj(z)^d of q exactly when
    a - b == c - d, contributing c_p * conj(c_q) * m! / n^(m+1) with
    m = a + d.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    exact = _uses_gauss_rational(p) or _uses_gauss_rational(q)
    total = GaussRational() if exact else 0j
    for (a, b), cp in p.terms.items():
        for (c, d), cq in q.terms.items():
            if a - b != c - d:
                continue
            m = a + d
            if m > DEGREE_BUDGET:
                raise DegreeBudgetError(
                    f"moment order {m} exceeds degree budget {DEGREE_BUDGET}"
                )
            factor = Fraction(math.factorial(m), n ** (m + 1))
            total = total + _scale(cp * _conj_coeff(cq), factor)
    return total


def plain_integral(p: PolyPoly, n: int):
    """Plain integral of p against dmu_n (no conjugation).

    Only the diagonal monomials z^a conj(z)^a survive, each contributing
    c * a! / n^(a+1).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    exact = _uses_gauss_rational(p)
    total = GaussRational() if exact else 0j
    for (a, b), c in p.terms.items():
        if a != b:
            continue
        factor = Fraction(math.factorial(a), n ** (a + 1))
        total = total + _scale(c, factor)
    return total


def _uses_gauss_rational(p: PolyPoly) -> bool:
    return any(isinstance(c, GaussRational) for c in p.terms.values())


def basis_monomial(j: int, n: int) -> PolyPoly:
    """Unit-norm analytic monomial e_j = n^((j+1)/2) z^j / sqrt(j!).

    Floating-point coefficient; for exact work use the raw monomial z^j
    together with ``monomial_norm_sq``.
    """
    if j < 0 or j > DEGREE_BUDGET:
        raise DegreeBudgetError(f"index {j} outside degree budget")
    coeff = math.exp(0.5 * ((j + 1) * math.log(n) - math.lgamma(j + 1)))
    return PolyPoly.monomial(j, 0, complex(coeff))


def monomial_norm_sq(j: int, n: int) -> Fraction:
    """Exact squared norm of z^j in L2(dmu_n): j! / n^(j+1)."""
    return Fraction(math.factorial(j), n ** (j + 1))


def falling(r: int, j: int) -> int:
    """Falling factorial (r)_j = r (r-1) ... (r-j+1), with (r)_0 = 1."""
    out = 1
    for i in range(j):
        out *= r - i
    return out


@dataclass(frozen=True)
class DiffOpSpec:
    """The two-index differential operator used in the cumulant reduction.

    D_{alpha,beta,n} = sum_j binom(m, j) (M)_j n^j dbar^(alpha-j) d^(beta-j)
    with m = min(alpha, beta) and M = max(alpha, beta).  For alpha == beta
    == r this equals n^r r! L_r^0(-lap/n).
    """

    alpha: int
    beta: int
    n: int

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be nonnegative")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    def expansion(self):
        """List of (coefficient, dbar_power, d_power); exactly min(alpha,beta)+1 terms."""
        lo = min(self.alpha, self.beta)
        hi = max(self.alpha, self.beta)
        return [
            (math.comb(lo, j) * falling(hi, j) * self.n**j,
             self.alpha - j, self.beta - j)
            for j in range(lo + 1)
        ]


def apply_diffop(spec: DiffOpSpec, p: PolyPoly) -> PolyPoly:
    out = PolyPoly.zero()
    for coeff, kbar, kd in spec.expansion():
        q = p
        for _ in range(kbar):
            q = wirtinger(q, "dbar")
        for _ in range(kd):
            q = wirtinger(q, "d")
        out = out + q * coeff
    return out
