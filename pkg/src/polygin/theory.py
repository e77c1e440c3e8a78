"""Test functions and the limiting variance they predict.

A small expression grammar builds real-valued test functions g with exact
symbolic Wirtinger derivatives:

    expr     := term { ('+' | '-') term }
    term     := factor { '*' factor }
    factor   := NUMBER | '-' factor | builtin | '(' expr ')'
    builtin  := 're' | 'im' | 'abs2' | 'harm(k)' | 'rad(p0,p1,...)'
                | 'bump(r0,w)'

`re`, `im` are Re z and Im z; `abs2` is |z|^2; `harm(k)` is Re z^k;
`rad(p0,p1,...)` is a polynomial in |z|^2; `bump(r0,w)` is the standard
exp(-1/x) smooth radial cutoff, identically 1 for |z| <= r0 and 0 for
|z| >= r0 + w.

For the limiting fluctuation variance, the bulk contribution is the
Dirichlet seminorm integral(|dbar g|^2, unit disk, dA) and the boundary
contribution is sum(|k| |ghat(k)|^2) over Fourier coefficients of g
restricted to the unit circle.  A pure ensemble at level q contributes
(2q-1) times the bulk term plus half the boundary term; the full ensemble
multiplies both terms by q, which is the average of the per-level bulk
factors since (1 + 3 + ... + (2q-1)) / q = q.
"""

from __future__ import annotations

import math
import re as _re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TestFunction",
    "TestFunctionError",
    "VariancePrediction",
    "parse_testfn",
    "h1_seminorm",
    "h_half_seminorm",
    "predicted_variance",
]


class TestFunctionError(ValueError):
    """Bad test-function expression (syntax, unknown name, or not real)."""

    __test__ = False  # not a pytest class despite the name


# ---------------------------------------------------------------------------
# expression tree
# ---------------------------------------------------------------------------

class _Node:
    def fields(self, z):
        """Return (value, dz, dzbar, lap) arrays at complex points z."""
        raise NotImplementedError

    def max_mode(self) -> int:
        raise NotImplementedError

    def support_radius(self) -> float:
        raise NotImplementedError

    def to_expr(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class _Scalar(_Node):
    value: float

    def fields(self, z):
        shape = np.shape(z)
        return (np.full(shape, self.value, dtype=complex),
                np.zeros(shape, dtype=complex),
                np.zeros(shape, dtype=complex),
                np.zeros(shape, dtype=complex))

    def max_mode(self):
        return 0

    def support_radius(self):
        return math.inf

    def to_expr(self):
        return repr(self.value)


@dataclass(frozen=True)
class _Re(_Node):
    def fields(self, z):
        z = np.asarray(z, dtype=complex)
        half = np.full(z.shape, 0.5, dtype=complex)
        zero = np.zeros(z.shape, dtype=complex)
        return z.real.astype(complex), half, half.copy(), zero

    def max_mode(self):
        return 1

    def support_radius(self):
        return math.inf

    def to_expr(self):
        return "re"


@dataclass(frozen=True)
class _Im(_Node):
    def fields(self, z):
        z = np.asarray(z, dtype=complex)
        zero = np.zeros(z.shape, dtype=complex)
        return (z.imag.astype(complex),
                np.full(z.shape, -0.5j),
                np.full(z.shape, 0.5j),
                zero)

    def max_mode(self):
        return 1

    def support_radius(self):
        return math.inf

    def to_expr(self):
        return "im"


@dataclass(frozen=True)
class _Abs2(_Node):
    def fields(self, z):
        z = np.asarray(z, dtype=complex)
        return ((z * np.conjugate(z)),
                np.conjugate(z),
                z.copy(),
                np.ones(z.shape, dtype=complex))

    def max_mode(self):
        return 0

    def support_radius(self):
        return math.inf

    def to_expr(self):
        return "abs2"


@dataclass(frozen=True)
class _Harm(_Node):
    k: int

    def fields(self, z):
        z = np.asarray(z, dtype=complex)
        k = self.k
        val = 0.5 * (z**k + np.conjugate(z) ** k)
        dz = 0.5 * k * z ** (k - 1)
        dzb = 0.5 * k * np.conjugate(z) ** (k - 1)
        return val, dz, dzb, np.zeros(z.shape, dtype=complex)

    def max_mode(self):
        return self.k

    def support_radius(self):
        return math.inf

    def to_expr(self):
        return f"harm({self.k})"


@dataclass(frozen=True)
class _Rad(_Node):
    coeffs: tuple

    def fields(self, z):
        z = np.asarray(z, dtype=complex)
        s = (z * np.conjugate(z)).real
        # Horner for u, u', u'' in the radial variable s = |z|^2
        u = np.zeros(s.shape)
        u1 = np.zeros(s.shape)
        u2 = np.zeros(s.shape)
        for c in reversed(self.coeffs):
            u2 = u2 * s + 2 * u1
            u1 = u1 * s + u
            u = u * s + c
        val = u.astype(complex)
        dz = np.conjugate(z) * u1
        dzb = z * u1
        lap = (s * u2 + u1).astype(complex)
        return val, dz, dzb, lap

    def max_mode(self):
        return 0

    def support_radius(self):
        return math.inf

    def to_expr(self):
        return "rad(" + ",".join(repr(float(c)) for c in self.coeffs) + ")"


def _smoothstep(t):
    """h, h', h'' for the exp(-1/x) step: h(0)=0, h(1)=1, C-infinity.

    Vectorized; t outside (0,1) returns the clamped constants with zero
    derivatives.  Underflow of exp(-1/t) near the endpoints makes the
    formulas exact zeros there, so no special-casing beyond the clamp.
    """
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 1e-8, 1 - 1e-8)
    u = np.exp(-1.0 / tc)
    v = np.exp(-1.0 / (1.0 - tc))
    a = tc**-2 + (1 - tc) ** -2
    bdiff = tc**-2 - (1 - tc) ** -2
    aprime = -2 * tc**-3 + 2 * (1 - tc) ** -3
    usum = u + v
    h = u / usum
    h1 = u * v * a / usum**2
    h2 = (u * v * bdiff * a + u * v * aprime) / usum**2 \
        - 2 * u * v * a * (u * tc**-2 - v * (1 - tc) ** -2) / usum**3
    lo = t <= 0
    hi = t >= 1
    h = np.where(lo, 0.0, np.where(hi, 1.0, h))
    h1 = np.where(lo | hi, 0.0, h1)
    h2 = np.where(lo | hi, 0.0, h2)
    return h, h1, h2


@dataclass(frozen=True)
class _Bump(_Node):
    r0: float
    width: float

    def fields(self, z):
        z = np.asarray(z, dtype=complex)
        rho = np.abs(z)
        t = (rho - self.r0) / self.width
        h, h1, h2 = _smoothstep(t)
        g = 1.0 - h
        g1 = -h1 / self.width          # dG/drho
        g2 = -h2 / self.width**2       # d2G/drho2
        rho_safe = np.maximum(rho, 1e-300)
        dz = np.conjugate(z) / (2 * rho_safe) * g1
        dzb = z / (2 * rho_safe) * g1
        lap = (0.25 * g2 + 0.25 * g1 / rho_safe).astype(complex)
        return g.astype(complex), dz, dzb, lap

    def max_mode(self):
        return 0

    def support_radius(self):
        return self.r0 + self.width

    def to_expr(self):
        return f"bump({float(self.r0)!r},{float(self.width)!r})"


@dataclass(frozen=True)
class _Sum(_Node):
    parts: tuple

    def fields(self, z):
        acc = None
        for p in self.parts:
            f = p.fields(z)
            acc = f if acc is None else tuple(a + b for a, b in zip(acc, f))
        return acc

    def max_mode(self):
        return max(p.max_mode() for p in self.parts)

    def support_radius(self):
        return max(p.support_radius() for p in self.parts)

    def to_expr(self):
        return " + ".join(p.to_expr() for p in self.parts)


@dataclass(frozen=True)
class _Prod(_Node):
    parts: tuple

    def fields(self, z):
        va, da, ba, la = self.parts[0].fields(z)
        for p in self.parts[1:]:
            vb, db, bb, lb = p.fields(z)
            la = va * lb + da * bb + ba * db + la * vb
            da = va * db + da * vb
            ba = va * bb + ba * vb
            va = va * vb
        return va, da, ba, la

    def max_mode(self):
        return sum(p.max_mode() for p in self.parts)

    def support_radius(self):
        return min(p.support_radius() for p in self.parts)

    def to_expr(self):
        bits = []
        for p in self.parts:
            s = p.to_expr()
            bits.append(f"({s})" if isinstance(p, _Sum) else s)
        return "*".join(bits)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

_TOKEN = _re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*(),]))"
)


def _tokenize(text):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip() == "":
                break
            raise TestFunctionError(f"syntax error at position {pos}: {text[pos:]!r}")
        if m.lastgroup is not None:
            out.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind=None, value=None):
        tok = self.tokens[self.i]
        if kind is not None and tok[0] != kind:
            raise TestFunctionError(
                f"syntax error at position {tok[2]}: expected {kind}, got {tok[1]!r}"
            )
        if value is not None and tok[1] != value:
            raise TestFunctionError(
                f"syntax error at position {tok[2]}: expected {value!r}, got {tok[1]!r}"
            )
        self.i += 1
        return tok

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise TestFunctionError(
                f"syntax error at position {tok[2]}: unexpected {tok[1]!r}"
            )
        return node

    def expr(self):
        parts = [self.term()]
        while self.peek()[1] in ("+", "-"):
            op = self.take("op")[1]
            t = self.term()
            if op == "-":
                t = _Prod((_Scalar(-1.0), t))
            parts.append(t)
        return parts[0] if len(parts) == 1 else _Sum(tuple(parts))

    def term(self):
        parts = [self.factor()]
        while self.peek()[1] == "*":
            self.take("op", "*")
            parts.append(self.factor())
        return parts[0] if len(parts) == 1 else _Prod(tuple(parts))

    def factor(self):
        kind, value, pos = self.peek()
        if value == "-":
            self.take("op", "-")
            inner = self.factor()
            if isinstance(inner, _Scalar):
                return _Scalar(-inner.value)
            return _Prod((_Scalar(-1.0), inner))
        if kind == "num":
            self.take("num")
            return _Scalar(float(value))
        if value == "(":
            self.take("op", "(")
            node = self.expr()
            self.take("op", ")")
            return node
        if kind == "ident":
            self.take("ident")
            return self.builtin(value, pos)
        raise TestFunctionError(f"syntax error at position {pos}: got {value!r}")

    def builtin(self, name, pos):
        if name == "re":
            return _Re()
        if name == "im":
            return _Im()
        if name == "abs2":
            return _Abs2()
        if name in ("harm", "rad", "bump"):
            args = self.arglist()
            if name == "harm":
                if len(args) != 1 or args[0] != int(args[0]) or args[0] < 1:
                    raise TestFunctionError("harm(k) needs a positive integer k")
                return _Harm(int(args[0]))
            if name == "rad":
                if not args:
                    raise TestFunctionError("rad needs at least one coefficient")
                return _Rad(tuple(float(a) for a in args))
            if len(args) != 2 or args[0] < 0 or args[1] <= 0:
                raise TestFunctionError("bump(r0,w) needs r0 >= 0 and w > 0")
            return _Bump(float(args[0]), float(args[1]))
        raise TestFunctionError(f"unknown identifier {name!r} at position {pos}")

    def arglist(self):
        self.take("op", "(")
        args = []
        while True:
            sign = 1.0
            if self.peek()[1] == "-":
                self.take("op", "-")
                sign = -1.0
            tok = self.take("num")
            args.append(sign * float(tok[1]))
            if self.peek()[1] == ",":
                self.take("op", ",")
                continue
            self.take("op", ")")
            return args


@dataclass(frozen=True)
class TestFunction:
    """Parsed real-valued test function with exact Wirtinger derivatives."""

    __test__ = False  # not a pytest class despite the name

    root: _Node
    expr: str = field(compare=False, default="")

    def value(self, z):
        return np.real(self.root.fields(z)[0])

    def dz(self, z):
        return self.root.fields(z)[1]

    def dzbar(self, z):
        return self.root.fields(z)[2]

    def lap(self, z):
        return np.real(self.root.fields(z)[3])

    def boundary(self, theta):
        return self.value(np.exp(1j * np.asarray(theta, dtype=float)))

    @property
    def max_mode(self) -> int:
        return self.root.max_mode()

    @property
    def support_radius(self) -> float:
        return self.root.support_radius()

    @property
    def compactly_supported(self) -> bool:
        return math.isfinite(self.support_radius)

    def to_expr(self) -> str:
        return self.root.to_expr()

    def __str__(self):
        return self.to_expr()


def parse_testfn(expr: str) -> TestFunction:
    """Parse an expression into a TestFunction; raises TestFunctionError."""
    root = _Parser(expr).parse()
    fn = TestFunction(root=root, expr=expr)
    # reality check at scattered points (the grammar only builds real g,
    # but this guards any future builtin)
    pts = np.array([0.3 + 0.4j, -1.1 + 0.2j, 0.05 - 0.9j, 1.7 + 1.3j, -0.6 - 0.6j])
    vals = fn.root.fields(pts)[0]
    scale = float(np.max(np.abs(vals))) + 1.0
    if float(np.max(np.abs(vals.imag))) > 1e-12 * scale:
        raise TestFunctionError(f"expression {expr!r} is not real-valued")
    return fn


# ---------------------------------------------------------------------------
# seminorms and the predicted variance
# ---------------------------------------------------------------------------

def h1_seminorm(g: TestFunction, num_radial: int = 256, num_angular: int = 512) -> float:
    """Dirichlet seminorm integral(|dbar g|^2, unit disk, dA), dA = dxdy/pi.

    Polar Gauss-Legendre x trapezoid quadrature of the exact symbolic
    derivative; the angular rule is exact for the built-in family.
    """
    nodes, weights = np.polynomial.legendre.leggauss(num_radial)
    rho = 0.5 * (nodes + 1.0)
    wr = 0.5 * weights
    theta = 2 * np.pi * np.arange(num_angular) / num_angular
    zgrid = rho[:, None] * np.exp(1j * theta[None, :])
    density = np.abs(g.dzbar(zgrid)) ** 2
    mean_theta = density.mean(axis=1)
    return float(2.0 * np.sum(wr * rho * mean_theta))


def h_half_seminorm(g: TestFunction, modes: int = 512) -> float:
    """Boundary seminorm sum(|k| |ghat(k)|^2) of g restricted to |z| = 1.

    ghat(k) are Fourier coefficients computed by FFT on ``modes`` points;
    the spectrum must be fully resolved (band-limited family), otherwise a
    TestFunctionError is raised.
    """
    min_modes = 4 * max(1, g.max_mode)
    if modes < min_modes or modes & (modes - 1):
        raise ValueError(f"modes must be a power of two >= {min_modes}")
    theta = 2 * np.pi * np.arange(modes) / modes
    vals = g.boundary(theta)
    coefs = np.fft.fft(vals) / modes
    k = np.round(modes * np.fft.fftfreq(modes)).astype(int)
    top = np.abs(k) > modes // 4
    peak = float(np.max(np.abs(coefs)))
    if peak > 0 and float(np.max(np.abs(coefs[top]))) > max(1e-10 * peak, 1e-13):
        raise TestFunctionError(
            "boundary spectrum does not decay; increase modes or check the function"
        )
    return float(np.sum(np.abs(k) * np.abs(coefs) ** 2))


@dataclass(frozen=True)
class VariancePrediction:
    """Limiting variance of the fluctuation of trace(g), split by origin."""

    bulk: float
    boundary: float
    total: float
    bulk_coeff: float
    boundary_coeff: float
    h1: float
    h_half: float
    per_level: tuple  # (bulk, boundary, total) for each pure level 1..q
    compact_support_warning: bool

    def as_dict(self):
        return {
            "bulk": self.bulk,
            "boundary": self.boundary,
            "total": self.total,
        }


def predicted_variance(spec, g: TestFunction) -> VariancePrediction:
    """Limiting fluctuation variance for trace(g) under the given ensemble.

    Pure level q: (2q-1) * h1 + (1/2) * h_half.  Full with q levels:
    q * (h1 + h_half / 2), i.e. per-level bulk terms averaged and per-level
    boundary terms summed.  Non-compactly-supported g is accepted for
    comparison purposes but flagged.
    """
    h1 = h1_seminorm(g)
    hh = h_half_seminorm(g)
    q = spec.q
    if spec.variant == "full":
        bulk_coeff, boundary_coeff = float(q), float(q)
    else:  # pure and ginibre
        bulk_coeff, boundary_coeff = float(2 * q - 1), 1.0
    per_level = tuple(
        ((2 * r - 1) * h1, 0.5 * hh, (2 * r - 1) * h1 + 0.5 * hh)
        for r in range(1, q + 1)
    )
    bulk = bulk_coeff * h1
    boundary = boundary_coeff * 0.5 * hh
    return VariancePrediction(
        bulk=bulk,
        boundary=boundary,
        total=bulk + boundary,
        bulk_coeff=bulk_coeff,
        boundary_coeff=boundary_coeff,
        h1=h1,
        h_half=hh,
        per_level=per_level,
        compact_support_warning=not g.compactly_supported,
    )
