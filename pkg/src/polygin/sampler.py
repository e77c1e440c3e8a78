"""Exact sampling of the determinantal ensembles.

Sequential sampling for projection kernels: the t-th point is drawn from
the one-point density of the kernel projected off the span of the points
already drawn, realized by Gram-Schmidt on the weighted basis feature
vectors.  Proposals come from the radial inverse CDF of the one-point
intensity times a uniform angle, so the acceptance ratio for the t-th
point is bounded below by (N - t) / N and a full configuration costs
O(N log N) proposals in expectation.

Randomness is counter-based: point index t of a draw with seed s consumes
the Philox stream keyed by (s, t), so identical (spec, seed) reproduce the
configuration bit for bit and independent replicates parallelize freely.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, _basis_table

__all__ = [
    "PointSample",
    "RadialProposal",
    "SamplingError",
    "proposal_rmax",
    "sample",
    "sample_many",
    "empirical_intensity",
    "RadialHistogram",
    "write_samples_csv",
]

MAX_DIMENSION = 4096
REJECTION_BUDGET = 10**6


class SamplingError(RuntimeError):
    """Sampling aborted: rejection budget exceeded or degenerate pivot."""


def proposal_rmax(n: int) -> float:
    """Radius cap for proposals; the intensity mass beyond it is < 1e-12."""
    return max(2.0, 1.0 + 8.0 / math.sqrt(n))


@dataclass(frozen=True)
class PointSample:
    """One sampled configuration of unlabelled points."""

    points: np.ndarray
    spec: KernelSpec
    seed: int
    rejection_count: int

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=complex))


class RadialProposal:
    """Tabulated inverse CDF of the normalized radial one-point density.

    The density in the radius is 2 rho I(rho) / dimension on [0, rmax];
    the CDF is tabulated on >= 4096 knots and inverted by interpolation.
    """

    def __init__(self, spec: KernelSpec, knots: int = 8192):
        if knots < 4096:
            raise ValueError("need at least 4096 knots")
        self.rmax = proposal_rmax(spec.n)
        self.rho = np.linspace(0.0, self.rmax, knots)
        table = _basis_table(spec)
        radial = table.radial_values(self.rho)
        pdf = 2.0 * self.rho * np.sum(radial**2, axis=0)
        cdf = np.concatenate([[0.0], np.cumsum((pdf[1:] + pdf[:-1]) * 0.5 * np.diff(self.rho))])
        total = cdf[-1]
        # tail beyond rmax is below 1e-12 of the dimension; renormalize it away
        if not (abs(total - spec.dimension) <= 1e-6 * spec.dimension):
            raise SamplingError(
                f"radial mass {total:.12g} != dimension {spec.dimension}"
            )
        self.cdf = cdf / total
        if np.any(np.diff(self.cdf) < 0) or abs(self.cdf[-1] - 1.0) > 1e-10:
            raise SamplingError("radial CDF not monotone or not normalized")

    def inverse(self, u):
        return np.interp(u, self.cdf, self.rho)


_PROPOSAL_CACHE: dict = {}


def _prepared(spec: KernelSpec):
    if spec not in _PROPOSAL_CACHE:
        _PROPOSAL_CACHE[spec] = (_basis_table(spec), RadialProposal(spec))
    return _PROPOSAL_CACHE[spec]


class _PointStreams:
    """Philox streams keyed by (seed, point index), one shared generator.

    Resetting the bit-generator state is bit-identical to constructing
    Philox(key=[seed, t]) afresh, just without the per-point setup cost.
    """

    def __init__(self, seed: int):
        self._philox = np.random.Philox(key=np.zeros(2, dtype=np.uint64))
        self.generator = np.random.Generator(self._philox)
        self._template = self._philox.state
        self._template["state"]["key"][0] = np.uint64(seed)

    def select(self, t: int):
        state = self._template
        state["state"]["key"][1] = np.uint64(t)
        state["state"]["counter"][:] = 0
        state["buffer_pos"] = 4
        state["has_uint32"] = 0
        state["uinteger"] = 0
        self._philox.state = state
        return self.generator


def sample(spec: KernelSpec, seed: int) -> PointSample:
    """Draw one configuration; exactly spec.dimension points, every time."""
    n_points = spec.dimension
    if n_points > MAX_DIMENSION:
        raise ValueError(f"dimension {n_points} exceeds {MAX_DIMENSION}")
    table, proposal = _prepared(spec)
    panel = np.empty((n_points, n_points), dtype=complex)  # orthonormal columns
    points = np.empty(n_points, dtype=complex)
    rejections = 0
    streams = _PointStreams(seed)
    for t in range(n_points):
        rng = streams.select(t)
        batch = int(min(64, max(8, 2 * math.ceil(n_points / (n_points - t)))))
        used = 0
        accepted = False
        while not accepted:
            if used >= REJECTION_BUDGET:
                raise SamplingError(
                    f"rejection budget exceeded at point {t} "
                    f"(seed {seed}, spec {spec})"
                )
            draws = rng.random((3, batch))
            radii = proposal.inverse(draws[0])
            angles = 2 * np.pi * draws[1]
            zs = radii * np.exp(1j * angles)
            feats = table.weighted_values(zs)  # (N, batch)
            kzz = np.sum(np.abs(feats) ** 2, axis=0)
            if t:
                proj = panel[:, :t].conj().T @ feats
                kt = kzz - np.sum(np.abs(proj) ** 2, axis=0)
            else:
                kt = kzz
            ratios = np.clip(kt, 0.0, None) / kzz
            hits = np.nonzero(draws[2] < ratios)[0]
            if hits.size:
                b = int(hits[0])
                rejections += used + b
                accepted = True
                points[t] = zs[b]
                vec = feats[:, b].copy()
                if t:
                    # Gram-Schmidt with one re-orthogonalization pass
                    for _ in range(2):
                        vec -= panel[:, :t] @ (panel[:, :t].conj().T @ vec)
                norm = float(np.linalg.norm(vec))
                if norm < 1e-12 * n_points:
                    raise SamplingError(
                        f"degenerate Gram-Schmidt pivot at point {t} "
                        f"(residual {norm:.3e}, seed {seed})"
                    )
                panel[:, t] = vec / norm
            else:
                used += batch
    return PointSample(points=points, spec=spec, seed=seed,
                       rejection_count=rejections)


def _thread_count() -> int:
    env = os.environ.get("POLYGIN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sample_many(spec: KernelSpec, seeds, threads: int | None = None):
    """Independent replicates, one per seed; order follows the seed list."""
    seeds = list(seeds)
    workers = threads if threads is not None else _thread_count()
    if workers <= 1 or len(seeds) < 4:
        return [sample(spec, s) for s in seeds]
    _prepared(spec)  # build shared immutable tables before fanning out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda s: sample(spec, s), seeds))


@dataclass(frozen=True)
class RadialHistogram:
    """Binned radial counts, normalized per configuration."""

    edges: np.ndarray
    observed_mean: np.ndarray    # mean count per bin per configuration
    expected: np.ndarray         # kernel-side expected count per bin
    num_samples: int

    def chi_square(self):
        """Pearson statistic of the total counts against the expectation."""
        obs = self.observed_mean * self.num_samples
        exp = self.expected * self.num_samples
        mask = exp > 0
        stat = float(np.sum((obs[mask] - exp[mask]) ** 2 / exp[mask]))
        dof = int(np.sum(mask)) - 1
        return stat, dof


def empirical_intensity(samples, bins) -> RadialHistogram:
    """Radial histogram of configurations vs the kernel intensity.

    Counts sum to the dimension; the expected column integrates
    2 rho I(rho) over each bin so the two are comparable bin by bin.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one sample")
    spec = samples[0].spec
    if any(s.spec != spec for s in samples):
        raise ValueError("samples mix different kernel specs")
    if np.ndim(bins) == 0:
        edges = np.linspace(0.0, proposal_rmax(spec.n), int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=float)
    radii = np.concatenate([np.abs(s.points) for s in samples])
    counts, _ = np.histogram(radii, bins=edges)
    observed = counts / len(samples)
    table = _basis_table(spec)
    expected = np.empty(len(edges) - 1)
    for i in range(len(edges) - 1):
        grid = np.linspace(edges[i], edges[i + 1], 129)
        dens = 2.0 * grid * np.sum(table.radial_values(grid) ** 2, axis=0)
        expected[i] = float(np.sum((dens[1:] + dens[:-1]) * 0.5 * np.diff(grid)))
    return RadialHistogram(edges=edges, observed_mean=observed,
                           expected=expected, num_samples=len(samples))


def write_samples_csv(samples, csv_path, meta_path=None):
    """CSV schema: sample_id,point_id,re,im plus a JSON metadata sidecar."""
    samples = list(samples)
    if not samples:
        raise ValueError("no samples to write")
    spec = samples[0].spec
    if any(s.spec != spec for s in samples):
        raise ValueError("samples mix different kernel specs")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "point_id", "re", "im"])
        for sid, s in enumerate(samples):
            for pid, z in enumerate(s.points):
                writer.writerow([sid, pid, repr(float(z.real)), repr(float(z.imag))])
    meta = {
        "n": spec.n,
        "q": spec.q,
        "variant": spec.variant,
        "seed": samples[0].seed,
        "samples": len(samples),
        "rejections": int(sum(s.rejection_count for s in samples)),
    }
    if meta_path is None:
        meta_path = os.path.splitext(str(csv_path))[0] + ".json"
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, meta_path
