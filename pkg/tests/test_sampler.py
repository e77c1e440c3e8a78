"""Sampler: determinism, cardinality, one-point law, repulsion, file formats."""

import csv
import json

import numpy as np
import pytest
from scipy import stats as sp_stats

from polygin.kernels import KernelSpec
from polygin.sampler import (
    RadialProposal,
    empirical_intensity,
    sample,
    sample_many,
    write_samples_csv,
)


@pytest.fixture(scope="module")
def samples_n32():
    # shared across the slower statistical tests in this module
    return sample_many(KernelSpec(32, 1, "ginibre"), range(600), threads=2)


class TestDeterminism:
    def test_bitwise_reproducible(self):
        spec = KernelSpec(12, 2, "full")
        a = sample(spec, 987654321)
        b = sample(spec, 987654321)
        assert np.array_equal(a.points, b.points)
        assert a.rejection_count == b.rejection_count

    def test_seed_sensitivity(self):
        spec = KernelSpec(12, 2, "full")
        assert not np.array_equal(sample(spec, 1).points, sample(spec, 2).points)


class TestCardinality:
    @pytest.mark.parametrize("spec", [
        KernelSpec(5, 3, "full"),
        KernelSpec(5, 3, "pure"),
        KernelSpec(7, 1, "ginibre"),
    ])
    def test_exact_count(self, spec):
        for seed in range(30):
            assert len(sample(spec, seed).points) == spec.dimension


class TestOnePointLaw:
    def test_single_particle_radial_cdf(self):
        # P(|z| <= r) = 1 - exp(-r^2) for the one-particle ensemble
        draws = sample_many(KernelSpec(1, 1, "ginibre"), range(100000), threads=2)
        radii = np.sort(np.abs(np.concatenate([s.points for s in draws])))
        emp = np.arange(1, len(radii) + 1) / len(radii)
        ks = float(np.max(np.abs(emp - (1 - np.exp(-radii**2)))))
        assert ks < 0.01

    def test_histogram_within_error_bars(self, samples_n32):
        hist = empirical_intensity(samples_n32, 24)
        m = hist.num_samples
        # per-bin standard errors from the across-sample count variation;
        # only bins with at least 5 expected points carry a usable error bar
        per_sample = np.stack([
            np.histogram(np.abs(s.points), bins=hist.edges)[0] for s in samples_n32
        ])
        se = per_sample.std(axis=0, ddof=1) / np.sqrt(m)
        diff = np.abs(hist.observed_mean - hist.expected)
        usable = hist.expected * m >= 5
        assert usable.sum() >= 12
        assert np.all(diff[usable] <= 4 * se[usable])

    def test_chi_square_level(self, samples_n32):
        hist = empirical_intensity(samples_n32, 32)
        stat, dof = hist.chi_square()
        assert stat < sp_stats.chi2.ppf(0.99, dof)


class TestRepulsion:
    def test_close_pairs_below_poisson(self, samples_n32):
        spec = samples_n32[0].spec
        d = 0.1 / np.sqrt(spec.n)
        counts = []
        for s in samples_n32:
            pts = s.points
            dist = np.abs(pts[:, None] - pts[None, :])
            iu = np.triu_indices(len(pts), k=1)
            counts.append(int(np.sum(dist[iu] < d)))
        observed = float(np.mean(counts))
        # Poisson process with the same intensity: E pairs = d^2/2 * int I^2 dA
        from polygin.kernels import intensity
        from numpy.polynomial.legendre import leggauss
        nodes, wts = leggauss(400)
        rho = 0.5 * 2.5 * (nodes + 1)
        w2rho = 0.5 * 2.5 * wts * 2 * rho
        pair_rate = d**2 / 2 * np.sum(w2rho * intensity(spec, rho) ** 2)
        se = float(np.std(counts, ddof=1) / np.sqrt(len(counts)))
        assert observed + 3 * se < pair_rate


class TestThreading:
    def test_results_independent_of_thread_count(self):
        spec = KernelSpec(6, 2, "full")
        serial = sample_many(spec, range(8), threads=1)
        threaded = sample_many(spec, range(8), threads=4)
        for a, b in zip(serial, threaded):
            assert np.array_equal(a.points, b.points)

    def test_env_var_honored(self, monkeypatch):
        from polygin.sampler import _thread_count
        monkeypatch.setenv("POLYGIN_THREADS", "3")
        assert _thread_count() == 3


class TestAborts:
    def test_rejection_budget_diagnostic(self, monkeypatch):
        import polygin.sampler as sampler_mod
        from polygin.sampler import SamplingError
        monkeypatch.setattr(sampler_mod, "REJECTION_BUDGET", 0)
        with pytest.raises(SamplingError, match="rejection budget"):
            sample(KernelSpec(2, 1, "ginibre"), 0)


class TestProposal:
    def test_cdf_monotone_normalized(self):
        prop = RadialProposal(KernelSpec(24, 2, "pure"))
        assert np.all(np.diff(prop.cdf) >= 0)
        assert abs(prop.cdf[-1] - 1.0) <= 1e-10
        assert prop.cdf[0] == 0.0

    def test_knot_minimum(self):
        with pytest.raises(ValueError):
            RadialProposal(KernelSpec(4, 1, "ginibre"), knots=1000)


class TestHistogramApi:
    def test_empty_error(self):
        with pytest.raises(ValueError):
            empirical_intensity([], 8)

    def test_mixed_specs_error(self):
        a = sample(KernelSpec(3, 1, "ginibre"), 0)
        b = sample(KernelSpec(4, 1, "ginibre"), 0)
        with pytest.raises(ValueError):
            empirical_intensity([a, b], 8)

    def test_single_sample_one_bin(self):
        spec = KernelSpec(6, 2, "full")
        s = sample(spec, 5)
        hist = empirical_intensity([s], np.array([0.0, 8.0]))
        assert hist.observed_mean[0] == spec.dimension


class TestCsvOutput:
    def test_schema_and_sidecar(self, tmp_path):
        spec = KernelSpec(4, 2, "full")
        samples = sample_many(spec, range(3), threads=1)
        csv_path = tmp_path / "run.csv"
        _, meta_path = write_samples_csv(samples, csv_path)
        with open(csv_path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["sample_id", "point_id", "re", "im"]
        assert len(rows) == 1 + 3 * spec.dimension
        z0 = complex(float(rows[1][2]), float(rows[1][3]))
        assert z0 == samples[0].points[0]
        meta = json.loads(open(meta_path).read())
        assert meta == {
            "n": 4, "q": 2, "variant": "full", "seed": 0,
            "samples": 3, "rejections": meta["rejections"],
        }
        assert meta["rejections"] >= 0
