"""Linear statistics and cumulants: quadrature vs the exact oracle."""

import math
from fractions import Fraction

import numpy as np
import pytest

from polygin.kernels import KernelSpec
from polygin.polyalg import GaussRational, PolyPoly
from polygin.sampler import sample_many
from polygin.statistics import (
    CumulantReport,
    GridMismatchError,
    QuadratureGrid,
    build_Gk,
    cumulant_exact_smalln,
    default_grid,
    disk_integral,
    expected_trace,
    linear_statistic,
    mc_cumulant_report,
    report_to_json_dict,
    variance_quadrature,
    verify_crossterms,
)
from polygin.theory import parse_testfn, predicted_variance
from conftest import gauss_poly


class TestLinearStatistic:
    def test_counts_points(self):
        s = sample_many(KernelSpec(5, 3, "full"), [0])[0]
        assert linear_statistic(s, parse_testfn("1.0")) == pytest.approx(15.0)

    def test_zero_function(self):
        s = sample_many(KernelSpec(3, 1, "ginibre"), [1])[0]
        assert linear_statistic(s, parse_testfn("0.0")) == 0.0

    def test_mean_matches_expected_trace(self):
        spec = KernelSpec(24, 1, "ginibre")
        g = parse_testfn("bump(0.5,0.3)")
        samples = sample_many(spec, range(400), threads=2)
        traces = np.array([linear_statistic(s, g) for s in samples])
        target = expected_trace(spec, g)
        se = traces.std(ddof=1) / math.sqrt(len(traces))
        assert abs(traces.mean() - target) < 4 * se


class TestExpectedTrace:
    def test_constant_gives_dimension(self):
        for spec in (KernelSpec(9, 3, "full"), KernelSpec(9, 3, "pure")):
            val = expected_trace(spec, parse_testfn("1.0"))
            assert abs(val - spec.dimension) / spec.dimension < 1e-9

    def test_gaussian_moment(self):
        # single particle: E|z|^2 under exp(-|z|^2) dA is 1
        val = expected_trace(KernelSpec(1, 1, "ginibre"), parse_testfn("rad(0,1)"))
        assert val == pytest.approx(1.0, rel=1e-10)

    def test_circular_law_bulk_bump(self):
        spec = KernelSpec(256, 2, "full")
        g = parse_testfn("bump(0.5,0.2)")
        val = expected_trace(spec, g)
        want = spec.dimension * disk_integral(g)
        assert abs(val - want) / want < 0.02

    def test_grid_mismatch(self):
        spec = KernelSpec(4, 1, "ginibre")
        small = QuadratureGrid(nr=160, ntheta=512, rmax=1.5)  # below required rmax
        with pytest.raises(GridMismatchError):
            expected_trace(spec, parse_testfn("re"), small)


class TestGk:
    def test_k1(self):
        assert build_Gk(1).terms == ((Fraction(1), (1,)),)

    def test_k2_raw(self):
        assert set(build_Gk(2).terms) == {
            (Fraction(1), (2, 0)), (Fraction(-1), (1, 1)),
        }

    def test_k2_symmetrized_diagonal_zero(self):
        sym = build_Gk(2).symmetrized()
        assert set(sym.terms) == {
            (Fraction(1, 2), (2, 0)), (Fraction(1, 2), (0, 2)), (Fraction(-1), (1, 1)),
        }
        assert sym.diagonal_sum() == 0

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_diagonal_vanishing(self, k):
        assert build_Gk(k).diagonal_sum() == 0

    def test_k_range(self):
        with pytest.raises(ValueError):
            build_Gk(5)
        with pytest.raises(ValueError):
            build_Gk(0)


class TestExactOracle:
    def test_c1_single_particle(self, g_abs2):
        rep = cumulant_exact_smalln(1, KernelSpec(1, 1, "ginibre"), g_abs2)
        assert rep.value == 1.0

    def test_c2_single_particle(self, g_abs2):
        rep = cumulant_exact_smalln(2, KernelSpec(1, 1, "ginibre"), g_abs2)
        assert rep.value == 1.0

    def test_c2_matches_quadrature(self, g_re):
        spec = KernelSpec(2, 2, "full")
        exact = cumulant_exact_smalln(2, spec, g_re)
        quad = variance_quadrature(spec, parse_testfn("re"))
        assert abs(exact.value - quad.value) <= 1e-6 * abs(exact.value)

    def test_c3_cyclic_and_symmetrization_invariance(self):
        # raw vs cyclic-shifted vs symmetrized coefficients: equal cumulants
        from polygin.statistics import (_exact_basis, _mat_mul, _mat_trace,
                                        _moment_matrix)
        spec = KernelSpec(2, 2, "full")
        g = gauss_poly({(1, 0): Fraction(1, 2), (0, 1): Fraction(1, 2), (1, 1): 1})

        def run(terms):
            polys, norms = _exact_basis(spec)
            powers = sorted({e for _, exps in terms for e in exps})
            gpow = {0: PolyPoly.constant(GaussRational(1))}
            for e in range(1, max(powers) + 1):
                gpow[e] = gpow[e - 1] * g
            mats = {e: _moment_matrix(gpow[e], polys, norms, spec.n) for e in powers}
            tot = GaussRational()
            for c, exps in terms:
                prod = mats[exps[0]]
                for e in exps[1:]:
                    prod = _mat_mul(prod, mats[e])
                tot = tot + _mat_trace(prod) * c
            return tot

        g3 = build_Gk(3)
        raw = run(g3.terms)
        shifted = run(tuple((c, (e[2], e[0], e[1])) for c, e in g3.terms))
        symm = run(g3.symmetrized().terms)
        assert raw == shifted
        assert raw == symm
        assert raw.im == 0

    def test_real_polynomial_required(self):
        z_only = PolyPoly.monomial(1, 0, GaussRational(1))
        with pytest.raises(ValueError):
            cumulant_exact_smalln(2, KernelSpec(2, 1, "ginibre"), z_only)

    def test_c1_equals_expected_trace(self, g_abs2):
        # first cumulant is the mean: exact oracle vs quadrature route
        spec = KernelSpec(3, 2, "full")
        c1 = cumulant_exact_smalln(1, spec, g_abs2).value
        et = expected_trace(spec, parse_testfn("rad(0,1)"))
        assert c1 == pytest.approx(et, rel=1e-10)


class TestCrossterms:
    def test_order_zero_is_plain_cyclic_integral(self, g_abs2):
        lhs, rhs, diff = verify_crossterms(1, 0, 0, (g_abs2, g_abs2))
        assert diff == 0.0
        assert lhs == rhs

    def test_mixed_orders(self, g_re):
        lhs, rhs, diff = verify_crossterms(3, 0, 1, (g_re, g_re))
        assert diff == 0.0

    def test_equal_orders_nontrivial(self, g_abs2):
        lhs, rhs, diff = verify_crossterms(2, 1, 1, (g_abs2, g_abs2))
        assert diff == 0.0
        assert abs(lhs) > 1.0  # genuinely nonzero both sides


class TestVarianceQuadrature:
    def test_single_particle_abs2(self):
        rep = variance_quadrature(KernelSpec(1, 1, "ginibre"), parse_testfn("rad(0,1)"))
        assert rep.value == pytest.approx(1.0, rel=1e-9)
        assert rep.diagnostics["converged"]

    def test_constant_gives_zero(self):
        rep = variance_quadrature(KernelSpec(6, 2, "full"), parse_testfn("3.0"))
        assert abs(rep.value) < 1e-12

    def test_nonnegative(self):
        for expr in ("re", "harm(2)", "bump(0.5,0.2)"):
            rep = variance_quadrature(KernelSpec(10, 2, "pure"), parse_testfn(expr))
            assert rep.value > -1e-12


class TestMcCumulants:
    def test_replicate_floor(self):
        with pytest.raises(ValueError):
            mc_cumulant_report(KernelSpec(1, 1, "ginibre"), parse_testfn("re"),
                               range(100))

    def test_degenerate_replicates(self):
        from polygin.statistics import _k_statistics
        mean, k2, k3, k4 = _k_statistics(np.full(500, 2.5))
        assert (k2, k3, k4) == (0.0, 0.0, 0.0)

    def test_k_statistics_on_known_distribution(self, rng):
        # Gamma(shape 4, scale 1): cumulants k2 = 4, k3 = 8, k4 = 24
        x = rng.gamma(4.0, 1.0, 200000)
        from polygin.statistics import _k_statistics
        _, k2, k3, k4 = _k_statistics(x)
        assert k2 == pytest.approx(4.0, rel=0.05)
        assert k3 == pytest.approx(8.0, rel=0.10)
        assert k4 == pytest.approx(24.0, rel=0.25)

    def test_single_particle_variance(self):
        rep = mc_cumulant_report(KernelSpec(1, 1, "ginibre"), parse_testfn("rad(0,1)"),
                                 range(2000), threads=2)
        k2 = rep.reports[0]
        assert abs(k2.value - 1.0) <= 3 * k2.std_error
        assert rep.num_replicates == 2000


class TestReportSchema:
    def test_json_layout(self):
        spec = KernelSpec(3, 2, "full")
        g = parse_testfn("re")
        grid = default_grid(spec)
        rep = variance_quadrature(spec, g, grid)
        pred = predicted_variance(spec, g)
        d = report_to_json_dict(rep, grid=grid, prediction=pred, rejections=7)
        assert set(d) == {"spec", "g", "method", "k", "value", "std_error",
                          "grid", "prediction", "diagnostics"}
        assert d["spec"] == {"n": 3, "q": 2, "variant": "full"}
        assert set(d["grid"]) == {"nr", "ntheta", "rmax"}
        assert set(d["prediction"]) == {"bulk", "boundary", "total"}
        assert set(d["diagnostics"]) == {"richardson_gap", "rejections"}
        assert d["diagnostics"]["rejections"] == 7


class TestGrid:
    def test_power_of_two_angles(self):
        with pytest.raises(ValueError):
            QuadratureGrid(nr=64, ntheta=500, rmax=2.0)

    def test_dimension_invariant_default(self):
        for spec in (KernelSpec(64, 2, "full"), KernelSpec(400, 3, "pure")):
            assert default_grid(spec).dimension_gap(spec) < 1e-9
