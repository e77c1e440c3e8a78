"""Exact identity suites used by the command line and the acceptance tests.

Each check returns (name, passed, detail).  The 'identities' suite is
exact-rational wherever the inputs allow it: those checks assert zero
error, not a tolerance.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np

from .kernels import (
    KernelSpec,
    basis_functions,
    cross_path_check,
    eval_kernel_many,
    intensity,
    rel_diff,
)
from .polyalg import (
    GaussRational,
    PolyPoly,
    apply_T,
    basis_monomial,
    gaussian_inner,
    monomial_norm_sq,
    plain_integral,
    wirtinger,
)
from .statistics import verify_crossterms

__all__ = ["run_suite", "SUITES"]


def _check_cancel_lowering():
    """dbar^j T^r f = (r)_j n^j T^(r-j) f for analytic f, exact."""
    from .polyalg import falling

    bad = []
    for n in range(1, 6):
        for deg in (0, 2, 5, 8):
            f = PolyPoly.monomial(deg, 0, GaussRational(1))
            for r in range(5):
                for j in range(r + 1):
                    lhs = apply_T(f, n, r)
                    for _ in range(j):
                        lhs = wirtinger(lhs, "dbar")
                    rhs = apply_T(f, n, r - j) * (falling(r, j) * n**j)
                    if lhs != rhs:
                        bad.append((n, deg, r, j))
    return "lowering identity (exact)", not bad, f"{len(bad)} failures" if bad else "all n<=5, deg<=8, r<=4"


def _check_isometry():
    """<T^r z^i, T^r z^j> = n^r r! <z^i, z^j>, exact."""
    bad = []
    for n in (1, 2, 3, 5):
        for r in range(4):
            polys = [apply_T(PolyPoly.monomial(i, 0, GaussRational(1)), n, r) for i in range(7)]
            for i in range(7):
                for j in range(7):
                    v = gaussian_inner(polys[i], polys[j], n)
                    want = (
                        GaussRational(Fraction(n**r * math.factorial(r)) * monomial_norm_sq(i, n))
                        if i == j
                        else GaussRational()
                    )
                    if v != want:
                        bad.append((n, r, i, j))
    return "raising isometry (exact)", not bad, f"{len(bad)} failures" if bad else "n in {1,2,3,5}, r<=3, i,j<=6"


def _check_partial_integration():
    """integral(f T g dmu) = integral(df g dmu) on a polynomial family, exact."""
    bad = []
    mono = PolyPoly.monomial
    one = GaussRational(1)
    fam = [mono(0, 0, one), mono(1, 0, one), mono(2, 1, one), mono(1, 2, one),
           mono(3, 0, one) + mono(1, 1, one) * GaussRational(Fraction(1, 3))]
    for n in (1, 2, 4):
        for f in fam:
            for g in fam:
                lhs = plain_integral(f * apply_T(g, n, 1), n)
                rhs = plain_integral(wirtinger(f, "d") * g, n)
                if lhs != rhs:
                    bad.append((n, repr(f), repr(g)))
    return "partial integration (exact)", not bad, f"{len(bad)} failures" if bad else "5x5 family, n in {1,2,4}"


def _check_orthonormality():
    """Unnormalized Gram is diagonal with the exact norms; floats hit 1e-12."""
    bad = []
    for n in (1, 2, 5):
        for q in (1, 2, 3):
            spec = KernelSpec(n, q, "full")
            polys = [
                apply_T(PolyPoly.monomial(j, 0, GaussRational(1)), n, r)
                for r in spec.levels
                for j in range(n)
            ]
            for a, pa in enumerate(polys):
                for b, pb in enumerate(polys):
                    v = gaussian_inner(pa, pb, n)
                    if a != b and v:
                        bad.append((n, q, a, b))
                    if a == b and not v.re > 0:
                        bad.append((n, q, a, b))
    # float-normalized spot check
    for n in (1, 2, 5):
        for j in range(6):
            for k in range(6):
                v = gaussian_inner(basis_monomial(j, n), basis_monomial(k, n), n)
                want = 1.0 if j == k else 0.0
                if abs(v - want) > 1e-12:
                    bad.append(("float", n, j, k))
    return "basis orthonormality", not bad, f"{len(bad)} failures" if bad else "exact Gram + float spot checks"


def _check_reproducing():
    """gaussian_inner(p, K_w) = p(w) for random p in the polynomial space."""
    rng = np.random.default_rng(20260810)
    worst = 0.0
    for n in (4, 10):
        for q in (1, 3):
            spec = KernelSpec(n, q, "full")
            funcs = [f.to_polypoly() for f in basis_functions(spec)]
            for _ in range(3):
                coeffs = rng.standard_normal(len(funcs)) + 1j * rng.standard_normal(len(funcs))
                p = PolyPoly.zero()
                for c, f in zip(coeffs, funcs):
                    p = p + f * complex(c)
                for w in rng.standard_normal(5) * 0.8 + 1j * rng.standard_normal(5) * 0.8:
                    kw = PolyPoly.zero()
                    for f in funcs:
                        kw = kw + f * complex(f.evaluate(w)).conjugate()
                    got = gaussian_inner(p, kw, n)
                    want = p.evaluate(w)
                    worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    return "reproducing property", worst <= 1e-9, f"worst rel err {worst:.2e}"


def _check_projection_idempotence():
    """integral(K(z,u) K(u,w) dmu(u)) = K(z,w) at random points, via the
    exact pairing <K_w, K_z> = K(z,w)."""
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in (3, 6):
        for q in (1, 2):
            spec = KernelSpec(n, q, "full")
            funcs = [f.to_polypoly() for f in basis_functions(spec)]
            for _ in range(4):
                z, w = rng.standard_normal(2) * 0.7 + 1j * rng.standard_normal(2) * 0.7
                kz = PolyPoly.zero()
                kw = PolyPoly.zero()
                for f in funcs:
                    kz = kz + f * complex(f.evaluate(z)).conjugate()
                    kw = kw + f * complex(f.evaluate(w)).conjugate()
                got = gaussian_inner(kw, kz, n)
                want = complex(eval_kernel_many(spec, [z], [w], weighted=False)[0])
                worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    return "projection idempotence", worst <= 1e-9, f"worst rel err {worst:.2e}"


def _check_kernel_decomposition():
    """K_{n,q} equals the sum of the pure level kernels pointwise."""
    rng = np.random.default_rng(11)
    worst = 0.0
    for n in (6, 40):
        for q in (2, 3):
            full = KernelSpec(n, q, "full")
            zs = (rng.random(200) - 0.5) * 3 + 1j * (rng.random(200) - 0.5) * 3
            ws = (rng.random(200) - 0.5) * 3 + 1j * (rng.random(200) - 0.5) * 3
            total = np.zeros(200, dtype=complex)
            for r in range(1, q + 1):
                total += eval_kernel_many(KernelSpec(n, r, "pure"), zs, ws, path="basis")
            got = eval_kernel_many(full, zs, ws, path="explicit")
            worst = max(worst, float(np.max(rel_diff(got, total))))
    return "kernel decomposition", worst <= 1e-9, f"worst rel diff {worst:.2e}"


def _check_diagonal_bound():
    """Weighted K(z,z) stays below the dimension density bound."""
    radii = np.linspace(0.0, 4.0, 200)
    worst = 0.0
    for spec in (KernelSpec(64, 1, "ginibre"), KernelSpec(64, 3, "full"),
                 KernelSpec(64, 3, "pure"), KernelSpec(256, 2, "full")):
        bound = spec.n * len(spec.levels)
        vals = intensity(spec, radii)
        worst = max(worst, float(np.max(vals)) / bound)
    return "diagonal bound", worst <= 1.0 + 1e-9, f"max intensity / bound = {worst:.12f}"


def _check_gram_psd():
    """Weighted kernel Gram matrices are Hermitian PSD on sampled points."""
    rng = np.random.default_rng(5)
    worst = 0.0
    for spec in (KernelSpec(30, 2, "full"), KernelSpec(30, 3, "pure")):
        pts = (rng.random(40) - 0.5) * 3 + 1j * (rng.random(40) - 0.5) * 3
        zz, ww = np.meshgrid(pts, pts, indexing="ij")
        gram = eval_kernel_many(spec, zz.ravel(), ww.ravel()).reshape(40, 40)
        herm = float(np.max(np.abs(gram - gram.conj().T)))
        eig = np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))
        worst = max(worst, herm / spec.n, float(-eig.min()) / spec.n)
    return "gram hermitian psd", worst <= 1e-8, f"worst scaled violation {worst:.2e}"


def _check_crossterms_lattice():
    """Two-point partial-integration identity on a 30-case lattice, exact."""
    one = GaussRational(1)
    half = GaussRational(Fraction(1, 2))
    f_pool = [
        PolyPoly.monomial(1, 1, one),                              # |z|^2
        PolyPoly({(1, 0): half, (0, 1): half}),                    # Re z
        PolyPoly({(2, 0): half, (0, 2): half}),                    # Re z^2
        PolyPoly({(0, 0): one, (1, 1): -one}),                     # 1 - |z|^2
    ]
    cases = []
    idx = 0
    for n in (1, 2, 3, 4, 6):
        for i1, i2 in ((0, 0), (0, 1), (1, 1), (1, 2), (2, 3), (3, 3)):
            f1 = f_pool[idx % len(f_pool)]
            f2 = f_pool[(idx + 1) % len(f_pool)]
            idx += 1
            cases.append((n, i1, i2, f1, f2))
    bad = 0
    for n, i1, i2, f1, f2 in cases:
        lhs, rhs, diff = verify_crossterms(n, i1, i2, (f1, f2))
        if diff != 0.0:
            bad += 1
    return ("crossterms lattice (exact)", bad == 0,
            f"{len(cases)} cases, {bad} failures")


def _check_path_agreement():
    worst = 0.0
    for n in (10, 50, 100):
        for q in (1, 2, 3, 4):
            for variant in ("full", "pure"):
                res = cross_path_check(KernelSpec(n, q, variant), num_pairs=1000,
                                       seed=1000 * n + q)
                worst = max(worst, res["max_rel_diff"])
    return "kernel path agreement", worst <= 1e-8, f"worst rel diff {worst:.2e}"


SUITES = {
    "identities": [
        _check_cancel_lowering,
        _check_isometry,
        _check_partial_integration,
        _check_orthonormality,
        _check_reproducing,
        _check_projection_idempotence,
        _check_kernel_decomposition,
        _check_diagonal_bound,
        _check_gram_psd,
        _check_crossterms_lattice,
    ],
    "kernels": [_check_path_agreement],
}
SUITES["all"] = SUITES["identities"] + SUITES["kernels"]


def run_suite(name: str, echo=print):
    """Run a named suite; returns True when every check passes."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    ok = True
    for check in SUITES[name]:
        t0 = time.time()
        title, passed, detail = check()
        ok = ok and passed
        status = "PASS" if passed else "FAIL"
        echo(f"[{status}] {title}: {detail} ({time.time() - t0:.1f}s)")
    return ok
