"""Linear statistics, their cumulants, and two independent ways to get them.

The variance of trace(g) has the closed form

    Var = integral(g^2 K(z,z) dmu) - double integral(g(z) g(w) |K(z,w)|^2)
        = tr(G2) - ||G||_F^2,

where G_{mm'} = integral(g phi_m conj(phi_m') dmu) over the orthonormal
basis.  Every basis function carries a single angular frequency, so G is
banded in angular momentum with bandwidth equal to g's largest Fourier
mode; this collapses the O(N^2) quadratures to O(N * modes).

For polynomial g at small n everything reduces to exact Gaussian moments:
the k-fold cumulant integral factorizes into a trace of products of
moment matrices over the (unnormalized, rational) raised-monomial basis,
which is the oracle the Monte Carlo and quadrature paths are tested
against.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import stats as sp_stats

from .kernels import KernelSpec, _basis_table
from .polyalg import (
    DiffOpSpec,
    GaussRational,
    PolyPoly,
    apply_T,
    apply_diffop,
    gaussian_inner,
    plain_integral,
)
from .sampler import PointSample, proposal_rmax, sample_many
from .theory import TestFunction, predicted_variance

__all__ = [
    "QuadratureGrid",
    "GridMismatchError",
    "default_grid",
    "GkRepresentation",
    "build_Gk",
    "CumulantReport",
    "McReport",
    "linear_statistic",
    "expected_trace",
    "disk_integral",
    "variance_quadrature",
    "cumulant_exact_smalln",
    "verify_crossterms",
    "mc_cumulant_report",
    "report_to_json_dict",
]


class GridMismatchError(ValueError):
    """Quadrature grid does not resolve the requested ensemble."""


class QuadratureGrid:
    """Polar product grid: Gauss-Legendre in the radius, uniform angles.

    Radial weights are premultiplied by 2 rho, so
    integral(f dA) = sum(w2rho * mean over angles of f).
    """

    def __init__(self, nr: int = 160, ntheta: int = 512, rmax: float = 2.0):
        if nr < 8:
            raise ValueError("nr too small")
        if ntheta < 8 or ntheta & (ntheta - 1):
            raise ValueError("ntheta must be a power of two >= 8")
        nodes, weights = np.polynomial.legendre.leggauss(nr)
        self.nr = nr
        self.ntheta = ntheta
        self.rmax = float(rmax)
        self.rho = 0.5 * self.rmax * (nodes + 1.0)
        self.w2rho = 0.5 * self.rmax * weights * 2.0 * self.rho
        self.theta = 2.0 * np.pi * np.arange(ntheta) / ntheta

    def refined(self, factor: float = 1.5) -> "QuadratureGrid":
        return QuadratureGrid(int(math.ceil(self.nr * factor)), self.ntheta, self.rmax)

    def dimension_gap(self, spec: KernelSpec) -> float:
        """Relative error of integrating the intensity to the dimension."""
        radial = _basis_table(spec).radial_values(self.rho)
        total = float(np.sum(self.w2rho * np.sum(radial**2, axis=0)))
        return abs(total - spec.dimension) / spec.dimension

    def check(self, spec: KernelSpec, tol: float = 1e-8):
        if self.rmax < proposal_rmax(spec.n) - 1e-12:
            raise GridMismatchError(
                f"grid rmax {self.rmax} below required {proposal_rmax(spec.n)}"
            )
        gap = self.dimension_gap(spec)
        if gap > tol:
            raise GridMismatchError(
                f"grid integrates intensity to relative error {gap:.3e} > {tol:.1e}"
            )

    def as_dict(self):
        return {"nr": self.nr, "ntheta": self.ntheta, "rmax": self.rmax}


def default_grid(spec: KernelSpec, nr: int | None = None, ntheta: int = 512,
                 rmax: float | None = None) -> QuadratureGrid:
    if rmax is None:
        rmax = proposal_rmax(spec.n)
    if nr is None:
        # 160 suffices through n ~ 400; scale with the sqrt(n) feature width
        nr = max(160, int(math.ceil(3.2 * rmax * math.sqrt(spec.n))))
    return QuadratureGrid(nr=nr, ntheta=ntheta, rmax=rmax)


# ---------------------------------------------------------------------------
# linear statistics
# ---------------------------------------------------------------------------

def linear_statistic(sample: PointSample, g: TestFunction) -> float:
    """trace(g) = sum of g over the configuration."""
    return float(np.sum(g.value(sample.points)))


def _g_fourier(g: TestFunction, grid: QuadratureGrid, kmax: int):
    """Angular Fourier coefficients ghat_k(rho) for |k| <= kmax, plus mean of g^2."""
    zmesh = grid.rho[:, None] * np.exp(1j * grid.theta[None, :])
    vals = g.value(zmesh)
    coefs = np.fft.fft(vals, axis=1) / grid.ntheta
    modes = {}
    for k in range(-kmax, kmax + 1):
        modes[k] = coefs[:, k % grid.ntheta]
    mean_g2 = np.mean(vals**2, axis=1)
    return modes, mean_g2


def expected_trace(spec: KernelSpec, g: TestFunction,
                   grid: QuadratureGrid | None = None) -> float:
    """E trace(g) = integral(g(z) K(z,z) exp(-n|z|^2) dA)."""
    if grid is None:
        grid = default_grid(spec)
    grid.check(spec)
    radial = _basis_table(spec).radial_values(grid.rho)
    modes, _ = _g_fourier(g, grid, 0)
    g0 = modes[0].real
    return float(np.sum(np.sum(radial**2, axis=0) * g0 * grid.w2rho))


def disk_integral(g: TestFunction, num_radial: int = 512,
                  num_angular: int = 512) -> float:
    """integral(g dA) over the unit disk; the circular-law limit of
    (1/dimension) E trace(g)."""
    nodes, weights = np.polynomial.legendre.leggauss(num_radial)
    rho = 0.5 * (nodes + 1.0)
    w = 0.5 * weights * 2.0 * rho
    theta = 2 * np.pi * np.arange(num_angular) / num_angular
    vals = g.value(rho[:, None] * np.exp(1j * theta[None, :]))
    return float(np.sum(w * vals.mean(axis=1)))


def _variance_on_grid(spec: KernelSpec, g: TestFunction,
                      grid: QuadratureGrid):
    table = _basis_table(spec)
    radial = table.radial_values(grid.rho)          # (N, nr)
    kmax = g.max_mode
    modes, mean_g2 = _g_fourier(g, grid, kmax)
    w = grid.w2rho
    term1 = float(np.sum(np.sum(radial**2, axis=0) * mean_g2 * w))

    n = spec.n
    levels = spec.levels
    nlev = len(levels)
    rad = radial.reshape(nlev, n, grid.nr)
    gscale = max(float(np.max(np.abs(m))) for m in modes.values())
    frob = 0.0
    for k in range(-kmax, kmax + 1):
        ck = modes[k]
        if gscale > 0 and float(np.max(np.abs(ck))) < 1e-15 * gscale:
            continue
        wk = ck * w
        for ia, ra in enumerate(levels):
            for ib, rb in enumerate(levels):
                # function (ra, j) pairs with (rb, j2), j2 = j + k + rb - ra
                shift = k + rb - ra
                j_lo = max(0, -shift)
                j_hi = min(n, n - shift)
                if j_lo >= j_hi:
                    continue
                a_block = rad[ia, j_lo:j_hi, :]
                b_block = rad[ib, j_lo + shift:j_hi + shift, :]
                entries = np.einsum("ji,ji->j", a_block * wk[None, :], b_block)
                frob += float(np.sum(np.abs(entries) ** 2))
    return term1 - frob, term1


def variance_quadrature(spec: KernelSpec, g: TestFunction,
                        grid: QuadratureGrid | None = None,
                        tol: float = 0.002) -> "CumulantReport":
    """Second cumulant of trace(g) by banded two-grid quadrature.

    The returned value comes from the finer grid; the relative gap between
    the two grids (Richardson gap) is reported and flagged when above tol.
    """
    if grid is None:
        grid = default_grid(spec)
    grid.check(spec)
    coarse, _ = _variance_on_grid(spec, g, grid)
    fine_grid = grid.refined()
    fine, scale = _variance_on_grid(spec, g, fine_grid)
    # the gap floor keeps degenerate cases (variance ~ 0) from flagging
    gap = abs(fine - coarse) / max(abs(fine), 1e-9 * max(scale, 1.0))
    converged = gap <= tol
    if not converged:
        warnings.warn(
            f"variance quadrature not converged: richardson gap {gap:.3e} > {tol}",
            stacklevel=2,
        )
    return CumulantReport(
        k=2,
        value=fine,
        method="quadrature",
        std_error=0.0,
        spec=spec,
        g_expr=g.expr or g.to_expr(),
        diagnostics={
            "richardson_gap": gap,
            "converged": converged,
            "grid": grid.as_dict(),
            "fine_grid": fine_grid.as_dict(),
        },
    )


# ---------------------------------------------------------------------------
# cumulant combinatorics
# ---------------------------------------------------------------------------

def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class GkRepresentation:
    """G_k as sum of c * prod_l g(z_l)^(e_l) with rational coefficients."""

    k: int
    terms: tuple  # of (Fraction, tuple of k exponents)

    def diagonal_sum(self) -> Fraction:
        """Value coefficient at z_1 = ... = z_k; zero for k >= 2."""
        return sum((c for c, _ in self.terms), Fraction(0))

    def symmetrized(self) -> "GkRepresentation":
        """Average over cyclic relabelings; integral-equivalent to the raw form."""
        acc: dict = {}
        for c, exps in self.terms:
            for shift in range(self.k):
                rolled = tuple(exps[(i - shift) % self.k] for i in range(self.k))
                acc[rolled] = acc.get(rolled, Fraction(0)) + Fraction(c, self.k)
        terms = tuple(sorted((c, e) for e, c in acc.items() if c != 0))
        return GkRepresentation(k=self.k, terms=tuple((c, e) for c, e in terms))


def build_Gk(k: int) -> GkRepresentation:
    """Composition-sum coefficients of G_k.

    G_k = sum over j of (-1)^(j-1)/j * sum over compositions
    (k_1,...,k_j) of k of  k!/(k_1! ... k_j!) * prod g(z_l)^(k_l).
    """
    if not 1 <= k <= 4:
        raise ValueError("k must be between 1 and 4")
    acc: dict = {}
    for j in range(1, k + 1):
        lead = Fraction((-1) ** (j - 1), j)
        for comp in _compositions(k, j):
            coeff = lead * Fraction(math.factorial(k))
            for part in comp:
                coeff /= math.factorial(part)
            exps = comp + (0,) * (k - j)
            acc[exps] = acc.get(exps, Fraction(0)) + coeff
    terms = tuple(sorted((c, e) for e, c in acc.items() if c != 0))
    return GkRepresentation(k=k, terms=tuple((c, e) for c, e in terms))


# ---------------------------------------------------------------------------
# exact small-n oracle
# ---------------------------------------------------------------------------

def _exact_basis(spec: KernelSpec):
    """Unnormalized raised monomials T^r z^j with exact squared norms."""
    one = GaussRational(1)
    polys = []
    norms = []
    for r in spec.levels:
        for j in range(spec.n):
            p = apply_T(PolyPoly.monomial(j, 0, one), spec.n, r)
            polys.append(p)
            nu = gaussian_inner(p, p, spec.n)
            norms.append(nu.re)  # exact rational, imaginary part is zero
    return polys, norms


def _moment_matrix(power_poly: PolyPoly, polys, norms, n: int):
    """A[m][m'] = <g^e p_m', p_m> / nu_m'  (exact GaussRational entries)."""
    size = len(polys)
    out = [[None] * size for _ in range(size)]
    for mp in range(size):
        gp = power_poly * polys[mp]
        inv = Fraction(1, 1) / norms[mp]
        for m in range(size):
            out[m][mp] = gaussian_inner(gp, polys[m], n) * inv
    return out


def _mat_mul(a, b):
    size = len(a)
    zero = GaussRational()
    out = [[zero] * size for _ in range(size)]
    for i in range(size):
        ai = a[i]
        row = out[i]
        for t in range(size):
            x = ai[t]
            if not x:
                continue
            bt = b[t]
            for j in range(size):
                if bt[j]:
                    row[j] = row[j] + x * bt[j]
    return out


def _mat_trace(a):
    total = GaussRational()
    for i in range(len(a)):
        total = total + a[i][i]
    return total


def cumulant_exact_smalln(k: int, spec: KernelSpec, g: PolyPoly) -> "CumulantReport":
    """Exact k-th cumulant of trace(g) for polynomial g at small n.

    The k-fold integral of G_k against the cyclic kernel product reduces to
    tr(A^(e_1) ... A^(e_k)) over moment matrices of g-powers in the
    raised-monomial basis; with rational coefficients everything is exact.
    """
    if not 1 <= k <= 3:
        raise ValueError("exact oracle supports k in 1..3")
    if spec.n > 8:
        raise ValueError("exact oracle supports n <= 8")
    if g.conjugate() != g:
        raise ValueError("g must be real-valued as a polynomial")
    polys, norms = _exact_basis(spec)
    gk = build_Gk(k)
    powers = sorted({e for _, exps in gk.terms for e in exps})
    gpow = {0: PolyPoly.constant(GaussRational(1))}
    for e in range(1, max(powers) + 1):
        gpow[e] = gpow[e - 1] * g
    mats = {e: _moment_matrix(gpow[e], polys, norms, spec.n) for e in powers}
    total = GaussRational()
    for coeff, exps in gk.terms:
        prod = mats[exps[0]]
        for e in exps[1:]:
            prod = _mat_mul(prod, mats[e])
        total = total + _mat_trace(prod) * coeff
    if total.im != 0:
        raise AssertionError(f"exact cumulant has nonzero imaginary part {total.im}")
    return CumulantReport(
        k=k,
        value=float(total.re),
        method="exact_oracle",
        std_error=0.0,
        spec=spec,
        g_expr=repr(g),
        diagnostics={"exact": str(total.re)},
    )


def verify_crossterms(n: int, i1: int, i2: int, F):
    """Both sides of the two-point partial-integration identity, exactly.

    lhs integrates F(z1,z2) against the raised two-level cyclic kernel
    product; rhs moves the raising operators onto F as the mixed
    differential operators.  F is a pair (f1, f2) of real polynomial
    factors.  Returns (lhs, rhs, |difference|) as floats; with rational
    coefficients the difference is exactly zero.
    """
    if n < 1 or n > 8:
        raise ValueError("n must be in 1..8")
    if min(i1, i2) < 0 or max(i1, i2) > 3:
        raise ValueError("raising orders must be in 0..3")
    f1, f2 = F
    one = GaussRational(1)
    ps = [PolyPoly.monomial(j, 0, one) for j in range(n)]
    nus = [gaussian_inner(p, p, n).re for p in ps]
    t1 = [apply_T(p, n, i1) for p in ps]
    t2 = [apply_T(p, n, i2) for p in ps]
    d1 = apply_diffop(DiffOpSpec(alpha=i2, beta=i1, n=n), f1)
    d2 = apply_diffop(DiffOpSpec(alpha=i1, beta=i2, n=n), f2)
    lhs = GaussRational()
    rhs = GaussRational()
    for j in range(n):
        for l in range(n):
            scale = Fraction(1, 1) / (nus[j] * nus[l])
            lhs = lhs + (
                plain_integral(f1 * t1[j] * t2[l].conjugate(), n)
                * plain_integral(f2 * t1[j].conjugate() * t2[l], n)
            ) * scale
            rhs = rhs + (
                plain_integral(d1 * ps[j] * ps[l].conjugate(), n)
                * plain_integral(d2 * ps[l] * ps[j].conjugate(), n)
            ) * scale
    diff = lhs - rhs
    return complex(lhs), complex(rhs), abs(complex(diff))


# ---------------------------------------------------------------------------
# Monte Carlo cumulants (k-statistics)
# ---------------------------------------------------------------------------

def _k_statistics(x: np.ndarray):
    """Unbiased cumulant estimators k2, k3, k4 from i.i.d. replicates."""
    m = len(x)
    mean = float(np.mean(x))
    d = x - mean
    m2 = float(np.mean(d**2))
    m3 = float(np.mean(d**3))
    m4 = float(np.mean(d**4))
    k2 = m / (m - 1) * m2
    k3 = m**2 / ((m - 1) * (m - 2)) * m3
    k4 = m**2 * ((m + 1) * m4 - 3 * (m - 1) * m2**2) / (
        (m - 1) * (m - 2) * (m - 3)
    )
    return mean, k2, k3, k4


def _jackknife(x: np.ndarray):
    """Leave-one-out k-statistics, vectorized; returns arrays per replicate."""
    m = len(x)
    s1 = np.sum(x)
    s2 = np.sum(x**2)
    s3 = np.sum(x**3)
    s4 = np.sum(x**4)
    mm = m - 1
    mu = (s1 - x) / mm
    r2 = (s2 - x**2) / mm
    r3 = (s3 - x**3) / mm
    r4 = (s4 - x**4) / mm
    m2 = r2 - mu**2
    m3 = r3 - 3 * mu * r2 + 2 * mu**3
    m4 = r4 - 4 * mu * r3 + 6 * mu**2 * r2 - 3 * mu**4
    k2 = mm / (mm - 1) * m2
    k3 = mm**2 / ((mm - 1) * (mm - 2)) * m3
    k4 = mm**2 * ((mm + 1) * m4 - 3 * (mm - 1) * m2**2) / (
        (mm - 1) * (mm - 2) * (mm - 3)
    )
    return k2, k3, k4


def _jackknife_se(values: np.ndarray) -> float:
    m = len(values)
    center = np.mean(values)
    return float(np.sqrt((m - 1) / m * np.sum((values - center) ** 2)))


@dataclass(frozen=True)
class CumulantReport:
    """One cumulant estimate with its provenance."""

    k: int
    value: float
    method: str           # 'mc' | 'quadrature' | 'exact_oracle'
    std_error: float
    spec: KernelSpec
    g_expr: str
    diagnostics: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class McReport:
    """Replicate-based cumulants with a normality summary."""

    spec: KernelSpec
    g_expr: str
    num_replicates: int
    mean: float
    reports: tuple          # CumulantReport for k = 2..k_max
    skewness: float
    skewness_se: float
    excess_kurtosis: float
    excess_kurtosis_se: float
    ks_distance: float
    fluct: np.ndarray = field(compare=False, repr=False, default=None)
    total_rejections: int = 0


def mc_cumulant_report(spec: KernelSpec, g: TestFunction, seeds,
                       k_max: int = 4, threads: int | None = None) -> McReport:
    """Monte Carlo cumulants of trace(g) over independent replicates.

    Estimates are k-statistics (unbiased) with delete-one jackknife
    standard errors; the normality summary reports skewness, excess
    kurtosis and the Kolmogorov-Smirnov distance to the fitted normal.
    """
    seeds = list(seeds)
    if len(seeds) < 200:
        raise ValueError("need at least 200 replicates")
    if not 2 <= k_max <= 4:
        raise ValueError("k_max must be 2..4")
    samples = sample_many(spec, seeds, threads=threads)
    traces = np.array([linear_statistic(s, g) for s in samples])
    mean, k2, k3, k4 = _k_statistics(traces)
    jk2, jk3, jk4 = _jackknife(traces)
    se = {2: _jackknife_se(jk2), 3: _jackknife_se(jk3), 4: _jackknife_se(jk4)}
    kval = {2: k2, 3: k3, 4: k4}
    if k2 > 0:
        skew = k3 / k2**1.5
        kurt = k4 / k2**2
        with np.errstate(invalid="ignore", divide="ignore"):
            jskew = np.where(jk2 > 0, jk3 / jk2**1.5, 0.0)
            jkurt = np.where(jk2 > 0, jk4 / jk2**2, 0.0)
        skew_se = _jackknife_se(jskew)
        kurt_se = _jackknife_se(jkurt)
        ks = float(sp_stats.kstest(traces, "norm", args=(mean, math.sqrt(k2))).statistic)
    else:
        skew = kurt = skew_se = kurt_se = ks = 0.0
    reports = tuple(
        CumulantReport(
            k=k,
            value=kval[k],
            method="mc",
            std_error=se[k],
            spec=spec,
            g_expr=g.expr or g.to_expr(),
            diagnostics={"replicates": len(seeds)},
        )
        for k in range(2, k_max + 1)
    )
    return McReport(
        spec=spec,
        g_expr=g.expr or g.to_expr(),
        num_replicates=len(seeds),
        mean=mean,
        reports=reports,
        skewness=skew,
        skewness_se=skew_se,
        excess_kurtosis=kurt,
        excess_kurtosis_se=kurt_se,
        ks_distance=ks,
        fluct=traces - mean,
        total_rejections=int(sum(s.rejection_count for s in samples)),
    )


def report_to_json_dict(report: CumulantReport, grid: QuadratureGrid | None = None,
                        prediction=None, rejections: int = 0) -> dict:
    """Serialize a cumulant report to the documented JSON layout."""
    spec = report.spec
    grid_dict = grid.as_dict() if grid is not None else report.diagnostics.get("grid")
    if prediction is None:
        pred_dict = None
    elif hasattr(prediction, "as_dict"):
        pred_dict = prediction.as_dict()
    else:
        pred_dict = dict(prediction)
    return {
        "spec": {"n": spec.n, "q": spec.q, "variant": spec.variant},
        "g": report.g_expr,
        "method": report.method,
        "k": report.k,
        "value": report.value,
        "std_error": report.std_error,
        "grid": grid_dict,
        "prediction": pred_dict,
        "diagnostics": {
            "richardson_gap": report.diagnostics.get("richardson_gap"),
            "rejections": rejections,
        },
    }


def prediction_for(spec: KernelSpec, g: TestFunction):
    return predicted_variance(spec, g)
