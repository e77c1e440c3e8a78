"""Test-function grammar, exact derivatives, seminorms, predictions."""

import math

import numpy as np
import pytest

from polygin.kernels import KernelSpec
from polygin.theory import (
    TestFunctionError,
    h1_seminorm,
    h_half_seminorm,
    parse_testfn,
    predicted_variance,
)

# frozen regression constant; two-grid agreement 3.2e-9 (256/512 vs 384/1024)
H1_BUMP_RE = 0.44514598320766646


class TestParser:
    def test_re(self):
        g = parse_testfn("re")
        z = np.array([0.3 + 0.4j])
        assert g.value(z)[0] == pytest.approx(0.3)
        assert g.dzbar(z)[0] == pytest.approx(0.5)

    def test_bump_times_harmonic(self):
        g = parse_testfn("bump(0.5,0.2)*harm(2)")
        assert g.support_radius == pytest.approx(0.7)
        assert g.max_mode == 2
        assert g.value(np.array([0.9 + 0j]))[0] == 0.0

    def test_scaled_radial(self):
        g = parse_testfn("1.5*rad(0,1)")
        z = np.array([1.0 + 2.0j])
        assert g.value(z)[0] == pytest.approx(7.5)
        assert g.lap(z)[0] == pytest.approx(1.5)

    def test_roundtrip(self):
        for expr in ["re", "im", "abs2", "bump(0.5,0.2)*harm(2)",
                     "1.5*rad(0.0,1.0)", "re + -1.0*im", "2.0*(re + im*abs2)"]:
            t = parse_testfn(expr)
            assert parse_testfn(t.to_expr()).root == t.root

    @pytest.mark.parametrize("bad", [
        "foo", "re +", "bump(0.5)", "bump(0.5,-0.1)", "harm(0)", "(re",
        "rad()", "re re",
    ])
    def test_errors(self, bad):
        with pytest.raises(TestFunctionError):
            parse_testfn(bad)

    def test_error_carries_position(self):
        with pytest.raises(TestFunctionError, match="position"):
            parse_testfn("re + $")


class TestDerivatives:
    @pytest.mark.parametrize("expr", [
        "re", "im", "abs2", "harm(3)", "rad(1,-0.5,0.25)",
        "bump(0.5,0.2)", "bump(0.5,0.2)*harm(1)", "re + 2.0*im*abs2",
        "bump(0.3,0.4)*rad(0,1)",
    ])
    def test_against_finite_differences(self, expr, rng):
        g = parse_testfn(expr)
        pts = (rng.random(30) - 0.5) * 2.4 + 1j * (rng.random(30) - 0.5) * 2.4
        h = 1e-6
        gx = (g.value(pts + h) - g.value(pts - h)) / (2 * h)
        gy = (g.value(pts + 1j * h) - g.value(pts - 1j * h)) / (2 * h)
        db = 0.5 * (gx + 1j * gy)
        d = 0.5 * (gx - 1j * gy)
        scale = np.maximum(1, np.abs(db))
        assert np.max(np.abs(g.dzbar(pts) - db) / scale) < 2e-8
        assert np.max(np.abs(g.dz(pts) - d) / scale) < 2e-8
        h2 = 2e-4
        lap_fd = (g.value(pts + h2) + g.value(pts - h2) + g.value(pts + 1j * h2)
                  + g.value(pts - 1j * h2) - 4 * g.value(pts)) / (4 * h2**2)
        # the exp-based bump has 4th derivatives ~ 1e5, so the 5-point
        # stencil itself carries O(h^2 g'''') ~ 1e-3 truncation error
        tol = 2e-3 if "bump" in expr else 5e-5
        assert np.max(np.abs(g.lap(pts) - lap_fd) / np.maximum(1, np.abs(lap_fd))) < tol

    def test_bump_plateaus(self):
        g = parse_testfn("bump(0.5,0.2)")
        inner = np.array([0.0 + 0j, 0.3 + 0.2j])
        outer = np.array([0.8 + 0j, 1.0 - 1.0j])
        assert np.all(g.value(inner) == 1.0)
        assert np.all(g.value(outer) == 0.0)
        assert np.all(g.dzbar(inner) == 0.0)
        assert np.all(g.dzbar(outer) == 0.0)


class TestSeminorms:
    def test_h1_re(self):
        assert h1_seminorm(parse_testfn("re")) == pytest.approx(0.25, abs=1e-12)

    def test_h1_constant(self):
        assert h1_seminorm(parse_testfn("2.5")) == 0.0

    def test_h1_regression_bump_re(self):
        assert h1_seminorm(parse_testfn("bump(0.5,0.2)*re")) == \
            pytest.approx(H1_BUMP_RE, rel=1e-8)

    def test_h1_scaling(self):
        g1 = h1_seminorm(parse_testfn("bump(0.5,0.2)*harm(1)"))
        g3 = h1_seminorm(parse_testfn("3.0*bump(0.5,0.2)*harm(1)"))
        assert g3 == pytest.approx(9 * g1, rel=1e-12)

    def test_h_half_cos(self):
        assert h_half_seminorm(parse_testfn("re")) == pytest.approx(0.5, abs=1e-12)

    def test_h_half_cos2(self):
        assert h_half_seminorm(parse_testfn("harm(2)")) == pytest.approx(1.0, abs=1e-12)

    def test_h_half_bulk_supported(self):
        assert h_half_seminorm(parse_testfn("bump(0.5,0.2)")) == pytest.approx(0.0, abs=1e-25)

    def test_h_half_scaling(self):
        a = h_half_seminorm(parse_testfn("harm(3)"))
        b = h_half_seminorm(parse_testfn("2.0*harm(3)"))
        assert b == pytest.approx(4 * a, rel=1e-12)

    def test_modes_validation(self):
        with pytest.raises(ValueError):
            h_half_seminorm(parse_testfn("re"), modes=100)  # not a power of two


class TestPrediction:
    def test_ginibre_re(self):
        p = predicted_variance(KernelSpec(10, 1, "ginibre"), parse_testfn("re"))
        assert p.total == pytest.approx(0.5, abs=1e-12)
        assert p.bulk == pytest.approx(0.25, abs=1e-12)
        assert p.boundary == pytest.approx(0.25, abs=1e-12)
        assert p.compact_support_warning

    def test_pure_q3_bulk_supported(self):
        g = parse_testfn("bump(0.5,0.2)")
        p = predicted_variance(KernelSpec(8, 3, "pure"), g)
        assert p.boundary == 0.0
        assert p.total == pytest.approx(5 * h1_seminorm(g), rel=1e-12)
        assert not p.compact_support_warning

    def test_full_is_level_average_in_bulk(self):
        g = parse_testfn("bump(0.5,0.2)")
        q = 3
        pf = predicted_variance(KernelSpec(8, q, "full"), g)
        per_level_bulk = [pl[0] for pl in pf.per_level]
        assert pf.bulk == pytest.approx(sum(per_level_bulk) / q, rel=1e-12)
        assert pf.total == pytest.approx(3 * h1_seminorm(g), rel=1e-12)

    def test_full_boundary_is_level_sum(self):
        g = parse_testfn("re")
        q = 3
        pf = predicted_variance(KernelSpec(8, q, "full"), g)
        per_level_boundary = [pl[1] for pl in pf.per_level]
        assert pf.boundary == pytest.approx(sum(per_level_boundary), rel=1e-12)

    def test_vanishing_iff_constant(self):
        g = parse_testfn("4.2")
        p = predicted_variance(KernelSpec(4, 2, "full"), g)
        assert p.total == 0.0
        g2 = parse_testfn("bump(0.5,0.2)")
        assert predicted_variance(KernelSpec(4, 2, "full"), g2).total > 0
