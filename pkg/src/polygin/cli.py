"""Command line entry point.

Subcommands: kernel, sample, stats, variance, clt, verify.  Exit codes:
0 success, 1 tolerance failure, 2 usage or configuration error.  Flags
override values from --config (a JSON file); every report embeds the
resolved configuration so a run is reproducible byte for byte.  The
worker count comes from POLYGIN_THREADS (default: available cores) and
never affects results.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from .kernels import CapacityError, KernelSpec, cross_path_check, eval_kernel
from .sampler import sample_many, write_samples_csv
from .statistics import (
    QuadratureGrid,
    default_grid,
    disk_integral,
    expected_trace,
    mc_cumulant_report,
    report_to_json_dict,
    variance_quadrature,
)
from .theory import TestFunctionError, parse_testfn, predicted_variance
from .verify import SUITES, run_suite

CONFIG_SCHEMA = "polygin-config-v1"
REPORT_SCHEMA = "polygin-report-v1"


class UsageError(Exception):
    pass


def _spec_from(args) -> KernelSpec:
    if args.n is None:
        raise UsageError("--n is required")
    q = args.q if args.q is not None else 1
    variant = args.variant or ("ginibre" if q == 1 else "full")
    try:
        return KernelSpec(int(args.n), int(q), variant)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _grid_from(args, spec) -> QuadratureGrid:
    return default_grid(spec, nr=args.nr, ntheta=args.ntheta or 512,
                        rmax=args.rmax)


def _load_config(args):
    """Fill unset argparse values from the JSON config file."""
    if not getattr(args, "config", None):
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if cfg.get("schema", CONFIG_SCHEMA) != CONFIG_SCHEMA:
        raise UsageError(f"unsupported config schema {cfg.get('schema')!r}")
    for key, value in cfg.items():
        if key == "schema":
            continue
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)
    return args


def _resolved_config(args, spec, extra=None):
    out = {
        "schema": CONFIG_SCHEMA,
        "version": __version__,
        "n": spec.n,
        "q": spec.q,
        "variant": spec.variant,
    }
    for key in ("g", "seed", "samples", "nr", "ntheta", "rmax"):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    if extra:
        out.update(extra)
    return out


def _emit(payload: dict, out_path):
    """Deterministic JSON to stdout or a file; leaves a .failed marker on error."""
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        tmp = str(out_path) + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    else:
        sys.stdout.write(text)


def _fail_marker(out_path):
    if out_path:
        try:
            with open(str(out_path) + ".failed", "w") as fh:
                fh.write("command failed before writing output\n")
        except OSError:
            pass


def _parse_g(args):
    if not getattr(args, "g", None):
        raise UsageError("--g is required")
    try:
        return parse_testfn(args.g)
    except TestFunctionError as exc:
        raise UsageError(f"bad test function: {exc}") from exc


def cmd_kernel(args) -> int:
    if args.mode == "check":
        spec = _spec_from(args)
        tol = args.tol if args.tol is not None else 1e-8
        res = cross_path_check(spec, num_pairs=args.pairs or 1000,
                               seed=args.seed or 0)
        print(f"max cross-path relative difference: {res['max_rel_diff']:.3e}")
        for pair, val in sorted(res["pairwise"].items()):
            print(f"  {pair}: {val:.3e}")
        return 0 if res["max_rel_diff"] <= tol else 1
    spec = _spec_from(args)
    if args.z is None or args.w is None:
        raise UsageError("--z and --w are required")
    try:
        zval = complex(args.z)
        wval = complex(args.w)
    except ValueError as exc:
        raise UsageError(f"bad complex literal: {exc}") from exc
    weighted = _parse_bool(args.weighted, default=True)
    value = eval_kernel(spec, zval, wval, path=args.path or "basis",
                        weighted=weighted)
    if abs(value.imag) < 1e-14 * max(1.0, abs(value.real)):
        print(f"{value.real:.12g}")
    else:
        print(f"{value.real:.12g}{value.imag:+.12g}j")
    return 0


def _parse_bool(text, default):
    if text is None:
        return default
    if str(text).lower() in ("1", "true", "yes", "on"):
        return True
    if str(text).lower() in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"bad boolean {text!r}")


def cmd_sample(args) -> int:
    spec = _spec_from(args)
    seed = args.seed if args.seed is not None else 0
    count = args.samples if args.samples is not None else 1
    out = args.out or "sample"
    csv_path = out if str(out).endswith(".csv") else f"{out}.csv"
    try:
        samples = sample_many(spec, range(seed, seed + count))
        write_samples_csv(samples, csv_path)
    except Exception:
        _fail_marker(csv_path)
        raise
    print(f"wrote {csv_path} ({count} configurations, {spec.dimension} points each)")
    return 0


def cmd_stats(args) -> int:
    spec = _spec_from(args)
    g = _parse_g(args)
    grid = _grid_from(args, spec)
    out = args.out
    try:
        etr = expected_trace(spec, g, grid)
        limit = disk_integral(g)
        per = etr / spec.dimension
        payload = {
            "schema": REPORT_SCHEMA,
            "config": _resolved_config(args, spec),
            "expected_trace": etr,
            "per_particle": per,
            "disk_integral": limit,
            "relative_gap": abs(per - limit) / max(abs(limit), 1e-300),
            "grid": grid.as_dict(),
        }
        _emit(payload, out)
    except Exception:
        _fail_marker(out)
        raise
    return 0


def cmd_variance(args) -> int:
    spec = _spec_from(args)
    g = _parse_g(args)
    grid = _grid_from(args, spec)
    out = args.out
    try:
        report = variance_quadrature(spec, g, grid)
        pred = predicted_variance(spec, g)
        rel = abs(report.value - pred.total) / max(abs(pred.total), 1e-300)
        payload = report_to_json_dict(report, grid=grid, prediction=pred)
        payload.update({
            "schema": REPORT_SCHEMA,
            "config": _resolved_config(args, spec),
            "relative_error_vs_prediction": rel,
            "prediction_warning": pred.compact_support_warning,
        })
        _emit(payload, out)
    except Exception:
        _fail_marker(out)
        raise
    if args.tolerance is not None and rel > args.tolerance:
        return 1
    if not report.diagnostics.get("converged", True):
        return 1
    return 0


def cmd_clt(args) -> int:
    spec = _spec_from(args)
    g = _parse_g(args)
    seed = args.seed if args.seed is not None else 0
    count = args.samples if args.samples is not None else 2000
    kmax = args.kmax or 4
    out = args.out
    try:
        mc = mc_cumulant_report(spec, g, range(seed, seed + count), k_max=kmax)
        quad = variance_quadrature(spec, g)
        pred = predicted_variance(spec, g)
        cumulants = {
            str(r.k): {"value": r.value, "std_error": r.std_error}
            for r in mc.reports
        }
        payload = {
            "schema": REPORT_SCHEMA,
            "config": _resolved_config(args, spec),
            "spec": {"n": spec.n, "q": spec.q, "variant": spec.variant},
            "g": mc.g_expr,
            "method": "mc",
            "mean": mc.mean,
            "cumulants": cumulants,
            "normality": {
                "skewness": mc.skewness,
                "skewness_se": mc.skewness_se,
                "excess_kurtosis": mc.excess_kurtosis,
                "excess_kurtosis_se": mc.excess_kurtosis_se,
                "ks_distance": mc.ks_distance,
            },
            "quadrature_c2": quad.value,
            "prediction": pred.as_dict(),
            "diagnostics": {
                "richardson_gap": quad.diagnostics.get("richardson_gap"),
                "rejections": mc.total_rejections,
            },
        }
        _emit(payload, out)
        if out:
            traces_path = os.path.splitext(str(out))[0] + ".traces.csv"
            with open(traces_path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["sample_id", "trace", "fluct"])
                for i, f in enumerate(mc.fluct):
                    writer.writerow([i, repr(float(f + mc.mean)), repr(float(f))])
    except Exception:
        _fail_marker(out)
        raise
    if args.check:
        k2 = mc.reports[0]
        gates = [
            abs(k2.value - quad.value) <= 3 * k2.std_error,
            abs(mc.skewness) <= 3 * mc.skewness_se,
            abs(mc.excess_kurtosis) <= 3 * mc.excess_kurtosis_se,
            mc.ks_distance < 0.035,
        ]
        return 0 if all(gates) else 1
    return 0


def cmd_verify(args) -> int:
    suite = args.suite or "identities"
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    return 0 if run_suite(suite) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polygin",
        description="Planar Landau-level determinantal ensembles: kernels, "
                    "sampling, linear statistics, cumulants.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=False, sampling=False, g=False):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--n", type=int)
        p.add_argument("--q", type=int)
        p.add_argument("--variant", choices=["ginibre", "full", "pure"])
        if g:
            p.add_argument("--g", help="test function expression")
        if grid:
            p.add_argument("--nr", type=int)
            p.add_argument("--ntheta", type=int)
            p.add_argument("--rmax", type=float)
        if sampling:
            p.add_argument("--seed", type=int)
            p.add_argument("--samples", type=int)
        p.add_argument("--out", help="output file (default: stdout)")

    p_kernel = sub.add_parser("kernel", help="evaluate the kernel or cross-check paths")
    p_kernel.add_argument("mode", nargs="?", choices=["check"], default=None)
    p_kernel.add_argument("--config")
    p_kernel.add_argument("--n", type=int)
    p_kernel.add_argument("--q", type=int)
    p_kernel.add_argument("--variant", choices=["ginibre", "full", "pure"])
    p_kernel.add_argument("--z")
    p_kernel.add_argument("--w")
    p_kernel.add_argument("--path", choices=["basis", "explicit", "raising"])
    p_kernel.add_argument("--weighted")
    p_kernel.add_argument("--pairs", type=int)
    p_kernel.add_argument("--tol", type=float)
    p_kernel.add_argument("--seed", type=int)
    p_kernel.set_defaults(func=cmd_kernel)

    p_sample = sub.add_parser("sample", help="draw configurations, write CSV")
    common(p_sample, sampling=True)
    p_sample.set_defaults(func=cmd_sample)

    p_stats = sub.add_parser("stats", help="expected trace vs the circular law")
    common(p_stats, grid=True, g=True)
    p_stats.set_defaults(func=cmd_stats)

    p_var = sub.add_parser("variance", help="quadrature variance vs prediction")
    common(p_var, grid=True, g=True)
    p_var.add_argument("--tolerance", type=float,
                       help="exit 1 when the relative error exceeds this")
    p_var.set_defaults(func=cmd_variance)

    p_clt = sub.add_parser("clt", help="Monte Carlo cumulants and normality")
    common(p_clt, sampling=True, g=True)
    p_clt.add_argument("--kmax", type=int, choices=[2, 3, 4])
    p_clt.add_argument("--check", action="store_true",
                       help="exit 1 when a normality gate fails")
    p_clt.set_defaults(func=cmd_clt)

    p_verify = sub.add_parser("verify", help="run exact identity suites")
    p_verify.add_argument("--suite", choices=sorted(SUITES), default="identities")
    p_verify.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        args = _load_config(args)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CapacityError, TestFunctionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
