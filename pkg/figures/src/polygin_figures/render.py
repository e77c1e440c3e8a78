"""Render figures from polygin sample CSVs and report JSONs.

Three kinds:

* scatter     -- one sampled configuration with the unit circle overlaid,
* histogram   -- fluctuation values against the predicted normal density,
* convergence -- relative variance error versus n on log-log axes.

Inputs follow the documented schemas (sample CSV header
``sample_id,point_id,re,im``; clt/variance report JSON).  Anything that
does not parse against them exits nonzero with a message.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["FigureJob", "SchemaError", "render", "main"]

KINDS = ("scatter", "histogram", "convergence")


class SchemaError(ValueError):
    """Input file does not match the documented schema."""


@dataclass(frozen=True)
class FigureJob:
    """One figure: input paths, kind, output path, styling knobs."""

    kind: str
    inputs: tuple
    output: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise SchemaError("no input files given")


def read_sample_csv(path):
    """Points per sample_id from the sampler CSV schema."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not rows or rows[0] != ["sample_id", "point_id", "re", "im"]:
        raise SchemaError(f"{path}: expected header sample_id,point_id,re,im")
    if len(rows) == 1:
        raise SchemaError(f"{path}: no points")
    samples: dict = {}
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            sid = int(row[0])
            z = complex(float(row[2]), float(row[3]))
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path}:{lineno}: bad row {row!r}") from exc
        samples.setdefault(sid, []).append(z)
    return {sid: np.asarray(pts) for sid, pts in samples.items()}


def read_report_json(path, required):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    missing = [key for key in required if key not in data]
    if missing:
        raise SchemaError(f"{path}: missing report keys {missing}")
    return data


def read_traces_csv(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    if not rows or rows[0] != ["sample_id", "trace", "fluct"]:
        raise SchemaError(f"{path}: expected header sample_id,trace,fluct")
    if len(rows) == 1:
        raise SchemaError(f"{path}: no trace rows")
    try:
        return np.array([float(r[2]) for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: bad trace row") from exc


def _render_scatter(job: FigureJob):
    samples = read_sample_csv(job.inputs[0])
    sid = job.options.get("sample_id", min(samples))
    if sid not in samples:
        raise SchemaError(f"sample_id {sid} not present in {job.inputs[0]}")
    pts = samples[sid]
    meta = {}
    meta_path = str(job.inputs[0]).rsplit(".", 1)[0] + ".json"
    try:
        with open(meta_path) as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError):
        pass
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(pts.real, pts.imag, s=4, c="#1f3d7a", alpha=0.8, linewidths=0)
    theta = np.linspace(0, 2 * math.pi, 400)
    ax.plot(np.cos(theta), np.sin(theta), color="#c23b22", lw=1.0)
    label = ""
    if {"n", "q"} <= meta.keys():
        label = f"n={meta['n']}, q={meta['q']}, {meta.get('variant', '')}"
    ax.set_title(f"sampled configuration {label}".strip())
    ax.set_aspect("equal")
    lim = max(1.25, float(np.max(np.abs(pts))) * 1.05)
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    fig.tight_layout()
    fig.savefig(job.output, dpi=160)
    plt.close(fig)


def _render_histogram(job: FigureJob):
    report = read_report_json(job.inputs[0],
                              required=["prediction", "normality", "g", "spec"])
    traces_path = (job.inputs[1] if len(job.inputs) > 1
                   else str(job.inputs[0]).rsplit(".", 1)[0] + ".traces.csv")
    fluct = read_traces_csv(traces_path)
    sigma2 = float(report["prediction"]["total"])
    quad = report.get("quadrature_c2")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.hist(fluct, bins=job.options.get("bins", 40), density=True,
            color="#7293cb", edgecolor="white", label="fluctuations")
    xs = np.linspace(fluct.min() - 0.5, fluct.max() + 0.5, 400)
    if sigma2 > 0:
        dens = np.exp(-(xs**2) / (2 * sigma2)) / math.sqrt(2 * math.pi * sigma2)
        ax.plot(xs, dens, color="#c23b22", lw=1.5,
                label=f"N(0, {sigma2:.3f}) predicted")
    if quad:
        dens = np.exp(-(xs**2) / (2 * quad)) / math.sqrt(2 * math.pi * quad)
        ax.plot(xs, dens, color="#2e7d32", lw=1.2, ls="--",
                label=f"N(0, {quad:.3f}) finite-n")
    spec = report["spec"]
    ax.set_title(f"fluct trace g, n={spec['n']}, q={spec['q']} ({spec['variant']})")
    ax.set_xlabel(f"g = {report['g']}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(job.output, dpi=160)
    plt.close(fig)


def _render_convergence(job: FigureJob):
    points = []
    for path in job.inputs:
        rep = read_report_json(path, required=["spec", "value",
                                               "relative_error_vs_prediction"])
        points.append((int(rep["spec"]["n"]), float(rep["relative_error_vs_prediction"]),
                       rep["spec"].get("variant", "?"), int(rep["spec"].get("q", 0))))
    if len(points) < 2:
        raise SchemaError("convergence plot needs at least two reports")
    points.sort()
    fig, ax = plt.subplots(figsize=(6, 4))
    groups: dict = {}
    for n, err, variant, q in points:
        groups.setdefault((variant, q), []).append((n, err))
    for (variant, q), vals in sorted(groups.items()):
        ns, errs = zip(*vals)
        ax.loglog(ns, errs, "o-", label=f"{variant}, q={q}")
    ax.set_xlabel("n")
    ax.set_ylabel("relative variance error vs prediction")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(job.output, dpi=160)
    plt.close(fig)


_RENDERERS = {
    "scatter": _render_scatter,
    "histogram": _render_histogram,
    "convergence": _render_convergence,
}


def render(job: FigureJob) -> str:
    """Render one figure job; returns the output path."""
    _RENDERERS[job.kind](job)
    return job.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="polygin-figures",
        description="Figures from polygin sample CSVs and report JSONs.",
    )
    sub = parser.add_subparsers(dest="kind", required=True)

    p_scatter = sub.add_parser("scatter", help="point cloud with unit circle")
    p_scatter.add_argument("csv", help="sample CSV")
    p_scatter.add_argument("--sample-id", type=int, default=None)
    p_scatter.add_argument("--out", required=True)

    p_hist = sub.add_parser("histogram", help="fluctuations vs predicted normal")
    p_hist.add_argument("report", help="clt report JSON")
    p_hist.add_argument("--traces", help="traces CSV (default: <report>.traces.csv)")
    p_hist.add_argument("--bins", type=int, default=40)
    p_hist.add_argument("--out", required=True)

    p_conv = sub.add_parser("convergence", help="variance error vs n")
    p_conv.add_argument("reports", nargs="+", help="variance report JSONs")
    p_conv.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.kind == "scatter":
            opts = {}
            if args.sample_id is not None:
                opts["sample_id"] = args.sample_id
            job = FigureJob("scatter", (args.csv,), args.out, opts)
        elif args.kind == "histogram":
            inputs = (args.report,) if not args.traces else (args.report, args.traces)
            job = FigureJob("histogram", inputs, args.out, {"bins": args.bins})
        else:
            job = FigureJob("convergence", tuple(args.reports), args.out)
        render(job)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
