"""Reproducing kernels for planar Landau-level ensembles.

Three independent evaluation paths are provided for the same kernel:

* ``basis``    -- sum phi_m(z) conj(phi_m(w)) over the orthonormal basis
                  obtained by raising the analytic monomials level by level
                  (closed-form coefficients, the production path),
* ``explicit`` -- the closed Laguerre-polynomial expression,
* ``raising``  -- symbolic application of the raising operator to the
                  analytic kernel via :mod:`polygin.polyalg`, then stable
                  evaluation.

All production numerics use the weighted kernel
K(z,w) exp(-n(|z|^2+|w|^2)/2), whose diagonal is bounded by the dimension
density n*q.  Raw (unweighted) values exist only for small-n oracle tests.

Every weighted evaluator works monomial-by-monomial in log space:
magnitudes like n^((j+1)/2) |z|^j / sqrt(j!) overflow long before their
weighted products do, so each monomial carries (log-magnitude, sign) and
only the combined exponent is ever exponentiated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .polyalg import PolyPoly, apply_T, degree_budget

__all__ = [
    "KernelSpec",
    "BasisFunction",
    "CapacityError",
    "laguerre",
    "eval_ginibre",
    "basis_functions",
    "eval_kernel",
    "eval_kernel_many",
    "intensity",
    "cross_path_check",
]

#: weighted evaluation is supported up to this many particles per level
MAX_N_WEIGHTED = 4096
#: raw (unweighted) kernels overflow quickly; keep them for oracle scales
MAX_N_RAW = 64
#: symbolic raising-path coefficients stay inside double range up to here
MAX_N_RAISING = 512

_TINY = 1e-300  # clamp for log arguments; exp(pow * log(_TINY)) underflows to 0


class CapacityError(ValueError):
    """Request outside the numerically supported regime (not a bug)."""


@dataclass(frozen=True)
class KernelSpec:
    """Ensemble selector: n particles per level, q Landau levels, variant.

    variant 'full' uses levels 0..q-1 (dimension n*q), 'pure' only level
    q-1 (dimension n), 'ginibre' is the classical case and forces q == 1.
    """

    n: int
    q: int
    variant: str = "full"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if self.q < 1:
            raise ValueError("q must be a positive integer")
        if self.variant not in ("ginibre", "full", "pure"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "ginibre" and self.q != 1:
            raise ValueError("ginibre variant requires q == 1")

    @property
    def dimension(self) -> int:
        return self.n * self.q if self.variant == "full" else self.n

    @property
    def levels(self) -> tuple:
        if self.variant == "full":
            return tuple(range(self.q))
        if self.variant == "pure":
            return (self.q - 1,)
        return (0,)


def laguerre(r: int, k: int, x):
    """Associated Laguerre polynomial L_r^k(x), three-term recurrence in r.

    Vectorized over x; k may also be an array broadcastable against x.
    """
    if np.any(np.asarray(r) < 0) or r > 64:
        raise ValueError("degree r must be in 0..64")
    if np.ndim(k) == 0 and (k < 0 or k > 64):
        raise ValueError("index k must be in 0..64")
    x = np.asarray(x, dtype=float)
    k = np.asarray(k, dtype=float)
    prev = np.zeros(np.broadcast(x, k).shape)
    cur = np.ones(np.broadcast(x, k).shape)
    for m in range(r):
        prev, cur = cur, ((2 * m + k + 1 - x) * cur - (m + k) * prev) / (m + 1)
    if cur.ndim == 0:
        return float(cur)
    return cur


def eval_ginibre(n: int, z, w, weighted: bool = True):
    """Classical analytic kernel K_n(z,w) = n sum_{j<n} (n z conj(w))^j / j!.

    The weighted form is evaluated term-wise in log space and is safe up to
    n = 4096; the raw form is restricted to n <= 64.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if not weighted:
        if n > MAX_N_RAW:
            raise CapacityError(f"raw kernel limited to n <= {MAX_N_RAW}")
        z = complex(z)
        w = complex(w)
        s = n * z * w.conjugate()
        total = 0j
        term = 1.0 + 0j
        for j in range(n):
            total += term
            term = term * s / (j + 1)
        return n * total
    if n > MAX_N_WEIGHTED:
        raise CapacityError(f"weighted kernel limited to n <= {MAX_N_WEIGHTED}")
    zs = np.asarray(z, dtype=complex)
    ws = np.asarray(w, dtype=complex)
    out = _ginibre_weighted_many(n, np.atleast_1d(zs).ravel(), np.atleast_1d(ws).ravel())
    if zs.ndim == 0 and ws.ndim == 0:
        return complex(out[0])
    return out.reshape(np.broadcast(zs, ws).shape)


def _ginibre_weighted_many(n, zs, ws):
    s = n * zs * np.conjugate(ws)
    logmag = np.log(np.maximum(np.abs(s), _TINY))
    phase = np.angle(s)
    expo = -0.5 * n * (np.abs(zs) ** 2 + np.abs(ws) ** 2) + math.log(n)
    j = np.arange(n)[:, None]
    lg = np.exp(expo[None, :] + j * logmag[None, :] - _lgamma_cache(n)[:, None])
    return np.sum(lg * np.exp(1j * j * phase[None, :]), axis=0)


@lru_cache(maxsize=16)
def _lgamma_cache(n):
    return np.array([math.lgamma(j + 1) for j in range(n)])


@dataclass(frozen=True)
class BasisFunction:
    """One weighted orthonormal eigenfunction of the chosen Landau level.

    The function at level r and index j is the r-fold raising of the
    analytic monomial e_j; it has at most r+1 monomials z^a conj(z)^b, all
    sharing the single angular frequency j - r.  Monomials are stored as
    (a, b, log-magnitude, sign) so the weighted value can be assembled
    without overflow.
    """

    level: int
    index: int
    n: int
    monomials: tuple  # of (a, b, logmag, sign)

    @property
    def angular_momentum(self) -> int:
        return self.index - self.level

    def weighted_value(self, z):
        """phi(z) * exp(-n|z|^2 / 2), stable at any point."""
        z = np.asarray(z, dtype=complex)
        rho = np.maximum(np.abs(z), _TINY)
        logrho = np.log(rho)
        radial = np.zeros(z.shape)
        for a, b, logmag, sign in self.monomials:
            radial = radial + sign * np.exp(
                logmag + (a + b) * logrho - 0.5 * self.n * rho**2
            )
        return radial * np.exp(1j * self.angular_momentum * np.angle(z))

    def to_polypoly(self) -> PolyPoly:
        """Raw (unweighted) polynomial with float coefficients; small n only."""
        if self.n > MAX_N_RAW:
            raise CapacityError(f"raw coefficients limited to n <= {MAX_N_RAW}")
        return PolyPoly(
            {(a, b): sign * math.exp(logmag) + 0j for a, b, logmag, sign in self.monomials}
        )


def _basis_function(n: int, r: int, j: int) -> BasisFunction:
    # T_{n,r} e_j expanded: monomial k has exponents (j-k, r-k) and coefficient
    # (-1)^(r-k) n^((j+1-r)/2 + r-k) binom(r,k) (j)_k / sqrt(r! j!)
    monos = []
    for k in range(min(r, j) + 1):
        logmag = (
            0.5 * ((j + 1 - r) * math.log(n) - math.lgamma(r + 1) - math.lgamma(j + 1))
            + (r - k) * math.log(n)
            + math.log(math.comb(r, k))
            + (math.lgamma(j + 1) - math.lgamma(j - k + 1))
        )
        sign = -1.0 if (r - k) % 2 else 1.0
        monos.append((j - k, r - k, logmag, sign))
    return BasisFunction(level=r, index=j, n=n, monomials=tuple(monos))


def basis_functions(spec: KernelSpec):
    """Orthonormal basis functions of the ensemble, one level after another."""
    return [
        _basis_function(spec.n, r, j) for r in spec.levels for j in range(spec.n)
    ]


class _LogPolyTable:
    """Stacked monomial rows for a family of single-frequency functions.

    Rows are (function, total power, log-magnitude, sign); each function has
    one angular frequency, so the weighted value at z = rho e^(i theta) is
    sum(sign * exp(logmag + pow*log rho - n rho^2/2)) * e^(i ell theta).
    """

    def __init__(self, n, func_level, func_index, rows_func, rows_a, rows_b,
                 rows_logmag, rows_sign):
        self.n = n
        self.func_level = np.asarray(func_level)
        self.func_index = np.asarray(func_index)
        self.ell = self.func_index - self.func_level
        order = np.argsort(rows_func, kind="stable")
        self.rows_func = np.asarray(rows_func)[order]
        self.rows_a = np.asarray(rows_a)[order]
        self.rows_b = np.asarray(rows_b)[order]
        self.rows_pow = self.rows_a + self.rows_b
        self.rows_logmag = np.asarray(rows_logmag)[order]
        self.rows_sign = np.asarray(rows_sign)[order]
        self.size = len(self.func_level)
        # reduceat segment starts (every function has >= 1 row)
        starts = np.searchsorted(self.rows_func, np.arange(self.size))
        self.segment_starts = starts

    def radial_values(self, rho):
        """Real weighted radial parts, shape (num_functions, len(rho))."""
        rho = np.maximum(np.asarray(rho, dtype=float), _TINY)
        logrho = np.log(rho)
        terms = self.rows_sign[:, None] * np.exp(
            self.rows_logmag[:, None]
            + self.rows_pow[:, None] * logrho[None, :]
            - 0.5 * self.n * rho[None, :] ** 2
        )
        return np.add.reduceat(terms, self.segment_starts, axis=0)

    def weighted_values(self, z):
        """Weighted function values, shape (num_functions, len(z))."""
        z = np.asarray(z, dtype=complex)
        radial = self.radial_values(np.abs(z))
        return radial * np.exp(1j * self.ell[:, None] * np.angle(z)[None, :])

    def raw_values(self, z):
        if self.n > MAX_N_RAW:
            raise CapacityError(f"raw values limited to n <= {MAX_N_RAW}")
        z = np.asarray(z, dtype=complex)
        zb = np.conjugate(z)
        coeffs = self.rows_sign * np.exp(self.rows_logmag)
        terms = coeffs[:, None] * z[None, :] ** self.rows_a[:, None] \
            * zb[None, :] ** self.rows_b[:, None]
        return np.add.reduceat(terms, self.segment_starts, axis=0)


@lru_cache(maxsize=32)
def _basis_table(spec: KernelSpec) -> _LogPolyTable:
    funcs = basis_functions(spec)
    rows_func, rows_a, rows_b, rows_logmag, rows_sign = [], [], [], [], []
    for m, f in enumerate(funcs):
        for a, b, logmag, sign in f.monomials:
            rows_func.append(m)
            rows_a.append(a)
            rows_b.append(b)
            rows_logmag.append(logmag)
            rows_sign.append(sign)
    return _LogPolyTable(
        spec.n,
        [f.level for f in funcs],
        [f.index for f in funcs],
        rows_func, rows_a, rows_b, rows_logmag, rows_sign,
    )


@lru_cache(maxsize=8)
def _raising_table(spec: KernelSpec) -> _LogPolyTable:
    """Same family as the basis table, but obtained symbolically.

    Level r of the kernel is (n^-r / r!) T^r(x)T^r(w-side) applied to the
    analytic kernel sum_j n^(j+1)/j! z^j conj(w)^j, which separates into
    per-j factors sqrt(n^(j+1)/j!) * T^r z^j / sqrt(n^r r!) on each side.
    """
    n = spec.n
    if n > MAX_N_RAISING:
        raise CapacityError(f"raising path limited to n <= {MAX_N_RAISING}")
    rows_func, rows_a, rows_b, rows_logmag, rows_sign = [], [], [], [], []
    func_level, func_index = [], []
    m = 0
    with degree_budget(n + 8):
        table_polys = [
            (r, j, apply_T(PolyPoly.monomial(j, 0, 1), n, r))
            for r in spec.levels
            for j in range(n)
        ]
    for r, j, poly in table_polys:
        norm_log = 0.5 * (
            (j + 1) * math.log(n) - math.lgamma(j + 1)
            - r * math.log(n) - math.lgamma(r + 1)
        )
        for (a, b), c in poly.terms.items():
            rows_func.append(m)
            rows_a.append(a)
            rows_b.append(b)
            rows_logmag.append(math.log(abs(c)) + norm_log)
            rows_sign.append(1.0 if c > 0 else -1.0)
        func_level.append(r)
        func_index.append(j)
        m += 1
    return _LogPolyTable(n, func_level, func_index, rows_func, rows_a,
                         rows_b, rows_logmag, rows_sign)


def _pairwise_kernel(table: _LogPolyTable, zs, ws, weighted):
    fz = table.weighted_values(zs) if weighted else table.raw_values(zs)
    fw = table.weighted_values(ws) if weighted else table.raw_values(ws)
    return np.einsum("mp,mp->p", fz, np.conjugate(fw))


def _explicit_weighted(n, q, zs, ws):
    """Closed Laguerre form of the weighted q-level kernel, vectorized."""
    x = n * np.abs(zs) ** 2
    y = n * np.abs(ws) ** 2
    damp = -0.5 * (x + y)
    s = n * zs * np.conjugate(ws)
    logc = np.log(np.maximum(np.abs(s), _TINY))
    phi = np.angle(s)
    total = np.zeros(zs.shape, dtype=complex)
    # nonnegative angular momenta: levels r, offsets i = 0..n-r-1
    for r in range(q):
        imax = n - r - 1
        if imax < 0:
            continue
        i = np.arange(imax + 1, dtype=float)[:, None]
        lz = laguerre(r, i, x[None, :])
        lw = laguerre(r, i, y[None, :])
        logmag = (
            math.log(n) + math.lgamma(r + 1)
            - _lgamma_shift(r, imax)[:, None]
            + i * logc[None, :]
            + damp[None, :]
            + np.log(np.maximum(np.abs(lz), _TINY))
            + np.log(np.maximum(np.abs(lw), _TINY))
        )
        total += np.sum(
            np.sign(lz) * np.sign(lw) * np.exp(logmag) * np.exp(1j * i * phi[None, :]),
            axis=0,
        )
    # negative angular momenta: Laguerre degree jj, offset kk = 1..q-jj-1
    for jj in range(q - 1):
        for kk in range(1, q - jj):
            lz = laguerre(jj, kk, x)
            lw = laguerre(jj, kk, y)
            logmag = (
                math.log(n) + math.lgamma(jj + 1) - math.lgamma(kk + jj + 1)
                + kk * logc + damp
                + np.log(np.maximum(np.abs(lz), _TINY))
                + np.log(np.maximum(np.abs(lw), _TINY))
            )
            total += np.sign(lz) * np.sign(lw) * np.exp(logmag) * np.exp(-1j * kk * phi)
    return total


@lru_cache(maxsize=128)
def _lgamma_shift(r, imax):
    return np.array([math.lgamma(r + i + 1) for i in range(imax + 1)])


def _explicit_raw(n, q, zs, ws):
    if n > MAX_N_RAW:
        raise CapacityError(f"raw kernel limited to n <= {MAX_N_RAW}")
    x = n * np.abs(zs) ** 2
    y = n * np.abs(ws) ** 2
    s = n * zs * np.conjugate(ws)
    total = np.zeros(zs.shape, dtype=complex)
    for r in range(q):
        imax = n - r - 1
        if imax < 0:
            continue
        for i in range(imax + 1):
            coeff = n * math.factorial(r) / math.factorial(r + i)
            total += coeff * s**i * laguerre(r, i, x) * laguerre(r, i, y)
    for jj in range(q - 1):
        for kk in range(1, q - jj):
            coeff = n * math.factorial(jj) / math.factorial(kk + jj)
            total += coeff * np.conjugate(s) ** kk * laguerre(jj, kk, x) * laguerre(jj, kk, y)
    return total


def eval_kernel_many(spec: KernelSpec, zs, ws, path: str = "basis",
                     weighted: bool = True):
    """Kernel values for paired point arrays (zs[i], ws[i])."""
    zs = np.asarray(zs, dtype=complex).ravel()
    ws = np.asarray(ws, dtype=complex).ravel()
    if zs.shape != ws.shape:
        raise ValueError("zs and ws must have matching shapes")
    if spec.n > MAX_N_WEIGHTED:
        raise CapacityError(f"kernel evaluation limited to n <= {MAX_N_WEIGHTED}")
    if weighted and (np.any(np.abs(zs) > 8) or np.any(np.abs(ws) > 8)):
        raise ValueError("weighted evaluation expects |z|, |w| <= 8")
    if path == "basis":
        return _pairwise_kernel(_basis_table(spec), zs, ws, weighted)
    if path == "raising":
        return _pairwise_kernel(_raising_table(spec), zs, ws, weighted)
    if path == "explicit":
        fn = _explicit_weighted if weighted else _explicit_raw
        if spec.variant == "pure" and spec.q > 1:
            return fn(spec.n, spec.q, zs, ws) - fn(spec.n, spec.q - 1, zs, ws)
        return fn(spec.n, spec.q, zs, ws)
    raise ValueError(f"unknown path {path!r}")


def eval_kernel(spec: KernelSpec, z, w, path: str = "basis",
                weighted: bool = True) -> complex:
    """Kernel value at a single pair of points."""
    return complex(eval_kernel_many(spec, [z], [w], path=path, weighted=weighted)[0])


def intensity(spec: KernelSpec, radius):
    """Weighted one-point intensity K(z,z) exp(-n|z|^2) at |z| = radius.

    Radial by rotation invariance; integrates against dA to the dimension.
    """
    radius = np.asarray(radius, dtype=float)
    if np.any(radius < 0) or np.any(radius > 8):
        raise ValueError("radius must lie in [0, 8]")
    radial = _basis_table(spec).radial_values(np.atleast_1d(radius).ravel())
    out = np.sum(radial**2, axis=0)
    if radius.ndim == 0:
        return float(out[0])
    return out.reshape(radius.shape)


def rel_diff(a, b, floor: float = 1.0):
    """|a - b| / max(|a|, |b|, floor); the floor makes tiny values comparable."""
    a = np.asarray(a)
    b = np.asarray(b)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return np.abs(a - b) / scale


def cross_path_check(spec: KernelSpec, num_pairs: int = 1000,
                     radius: float = 2.0, seed: int = 0) -> dict:
    """Compare all three evaluation paths on random point pairs.

    Returns the worst relative discrepancy between any two paths, with the
    scale floored at 1 so deep-tail values compare absolutely.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    zs = _uniform_disk(rng, num_pairs, radius)
    ws = _uniform_disk(rng, num_pairs, radius)
    vals = {
        p: eval_kernel_many(spec, zs, ws, path=p, weighted=True)
        for p in ("basis", "explicit", "raising")
    }
    worst = 0.0
    pairwise = {}
    names = list(vals)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            d = float(np.max(rel_diff(vals[names[i]], vals[names[j]])))
            pairwise[f"{names[i]}-{names[j]}"] = d
            worst = max(worst, d)
    return {"max_rel_diff": worst, "pairwise": pairwise, "num_pairs": num_pairs}


def _uniform_disk(rng, count, radius):
    r = radius * np.sqrt(rng.random(count))
    t = 2 * np.pi * rng.random(count)
    return r * np.exp(1j * t)
