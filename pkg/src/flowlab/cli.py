"""Command-line front end: randomized inequality campaigns, flow runs from a
JSON config, self-similar residual checks, and stationary-radius lookup.

Exit codes: 0 success, 1 assertion/violation, 2 usage or config error,
3 numeric failure.  Output files are written atomically (temp + rename) and
are byte-identical across reruns with the same arguments and seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time

from . import __version__
from .geom import (
    ConvexityError,
    Ellipsoid,
    PerturbedSphere,
    Sphere,
    make_shape,
    selfsim_residual,
    stationary_sphere_radius,
)
from .flow import FlowConfig, run_flow, shrinking_sphere_oracle
from .lemma_lab import LEMMA_IDS, NumericError, run_campaign
from .symfun import SpeedFunction, SpeedFunctionError

__all__ = ["main"]

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-flowlab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_shape(descriptor: str, r_star: float):
    """Shape descriptors: sphere:auto | sphere:<r> | ellipsoid:<a>,<b> |
    perturbed-sphere:<r>,<mode>,<amplitude>."""
    kind, _, rest = descriptor.partition(":")
    if kind == "sphere":
        return Sphere(r_star if rest == "auto" else float(rest))
    if kind == "ellipsoid":
        a, b = (float(v) for v in rest.split(","))
        return Ellipsoid(a, b)
    if kind == "perturbed-sphere":
        r, mode, amp = rest.split(",")
        return PerturbedSphere(float(r), int(mode), float(amp))
    raise ValueError(f"unknown shape descriptor {descriptor!r}")


# --- verify -------------------------------------------------------------------

def cmd_verify(args) -> int:
    suites = list(LEMMA_IDS) if args.suite == "all" else [args.suite]
    if args.suite != "all" and args.suite not in LEMMA_IDS:
        print(f"error: unknown suite {args.suite!r}; known: "
              f"{', '.join(LEMMA_IDS)}, all", file=sys.stderr)
        return EXIT_USAGE
    params: dict = {"artifact_version": __version__}
    if args.n is not None:
        params["n"] = args.n
    if args.k is not None:
        params["k"] = args.k
    if args.alpha is not None:
        params["alpha"] = args.alpha
    if args.F is not None:
        try:
            params["F"] = SpeedFunction.parse(args.F)
        except SpeedFunctionError as exc:
            print(f"error: bad speed expression: {exc}", file=sys.stderr)
            return EXIT_USAGE

    total_violations = 0
    for lemma_id in suites:
        try:
            report = run_campaign(lemma_id, params, args.samples, args.seed)
        except (ValueError, SpeedFunctionError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        except (NumericError, FloatingPointError) as exc:
            print(f"numeric failure in suite {lemma_id}: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        total_violations += report.violations
        text = report.to_json() + "\n"
        if args.out is None:
            sys.stdout.write(text)
        elif len(suites) == 1:
            _atomic_write(args.out, text)
        else:
            os.makedirs(args.out, exist_ok=True)
            _atomic_write(os.path.join(args.out, f"{lemma_id}.json"), text)
        print(f"{lemma_id}: {report.samples} samples, "
              f"{report.violations} violations, "
              f"worst margin {report.worst_margin:.6e}", file=sys.stderr)
    return EXIT_OK if total_violations == 0 else EXIT_VIOLATION


# --- flow ---------------------------------------------------------------------

_CONFIG_KEYS = {
    "F", "n", "N", "cfl", "mode", "C_shift", "stop", "record_every",
    "shape", "output",
}
_STOP_KEYS = {"max_steps", "max_time", "roundness_tol", "min_mean_radius"}
_SHAPE_KEYS = {"kind", "r", "a", "b", "mode", "amplitude"}
_OUTPUT_KEYS = {"trace_csv", "summary_json"}


def _load_run_config(path: str):
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError("config root must be a JSON object")
    for name, obj, allowed in (
        ("config", raw, _CONFIG_KEYS),
        ("stop", raw.get("stop", {}), _STOP_KEYS),
        ("shape", raw.get("shape", {}), _SHAPE_KEYS),
        ("output", raw.get("output", {}), _OUTPUT_KEYS),
    ):
        unknown = sorted(set(obj) - allowed)
        if unknown:
            raise ValueError(f"unknown {name} keys: {', '.join(unknown)}")
    for key in ("F", "n", "N", "shape"):
        if key not in raw:
            raise ValueError(f"missing required config key: {key}")
    F = SpeedFunction.parse(raw["F"])
    stop = raw.get("stop", {})
    config = FlowConfig(
        F=F, n=int(raw["n"]), N=int(raw["N"]),
        cfl=float(raw.get("cfl", 0.5)),
        mode=raw.get("mode", "raw"),
        C_shift=float(raw.get("C_shift", 0.0)),
        max_steps=stop.get("max_steps"),
        max_time=stop.get("max_time"),
        roundness_tol=stop.get("roundness_tol"),
        min_mean_radius=stop.get("min_mean_radius"),
        record_every=int(raw.get("record_every", 20)),
    )
    shape_spec = dict(raw["shape"])
    kind = shape_spec.pop("kind", None)
    if kind == "sphere":
        shape = Sphere(float(shape_spec["r"]))
    elif kind == "ellipsoid":
        shape = Ellipsoid(float(shape_spec["a"]), float(shape_spec["b"]))
    elif kind == "perturbed-sphere":
        shape = PerturbedSphere(float(shape_spec["r"]), int(shape_spec["mode"]),
                                float(shape_spec["amplitude"]))
    else:
        raise ValueError(f"unknown shape kind {kind!r}")
    return config, shape, raw.get("output", {})


def cmd_flow(args) -> int:
    try:
        config, shape, output = _load_run_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, SpeedFunctionError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    started = time.perf_counter()
    try:
        initial = make_shape(shape, config.n, config.N)
        trace = run_flow(config, initial)
    except ConvexityError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    summary = trace.summary()
    if isinstance(shape, Sphere) and config.mode == "raw" and summary["final_time"]:
        try:
            summary["oracle_radius"] = shrinking_sphere_oracle(
                config.F, config.n, shape.r, summary["final_time"])
        except ValueError:
            summary["oracle_radius"] = None
    summary["wall_time_ms"] = (time.perf_counter() - started) * 1e3
    text = json.dumps(summary, sort_keys=True, indent=2) + "\n"
    if output.get("trace_csv"):
        _atomic_write(output["trace_csv"], trace.csv_text())
    if output.get("summary_json"):
        _atomic_write(output["summary_json"], text)
    sys.stdout.write(text)
    print(f"status: {trace.status} after {trace.steps} steps", file=sys.stderr)
    return EXIT_OK if trace.status in ("Converged", "Shrunk") else EXIT_VIOLATION


# --- selfsim / sphere-radius ----------------------------------------------------

def cmd_selfsim(args) -> int:
    try:
        F = SpeedFunction.parse(args.F)
    except SpeedFunctionError as exc:
        print(f"error: bad speed expression: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.C > 0:
        print("error: C must be <= 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        r_star = stationary_sphere_radius(F, args.C, args.n)
        shape = _parse_shape(args.shape, r_star)
        p = make_shape(shape, args.n, args.N)
        max_abs, mean_abs = selfsim_residual(p, F, args.C)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvexityError, NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"r* = {r_star!r}")
    print(f"selfsim residual: max = {max_abs!r}, mean = {mean_abs!r}")
    ok = max_abs <= 1e-8 * max(1.0, r_star)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_sphere_radius(args) -> int:
    try:
        F = SpeedFunction.parse(args.F)
    except SpeedFunctionError as exc:
        print(f"error: bad speed expression: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.C > 0:
        print("error: C must be <= 0", file=sys.stderr)
        return EXIT_USAGE
    try:
        r_star = stationary_sphere_radius(F, args.C, args.n)
    except (ValueError, NumericError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(repr(r_star))
    return EXIT_OK


# --- entry point ----------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowlab",
        description="Numerical checks for curvature-function inequalities "
                    "and axisymmetric contracting flows.")
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run a randomized inequality campaign")
    v.add_argument("--suite", required=True,
                   help=f"one of: {', '.join(LEMMA_IDS)}, all")
    v.add_argument("--n", type=int, default=None)
    v.add_argument("--k", type=int, default=None)
    v.add_argument("--alpha", type=float, default=None)
    v.add_argument("--F", default=None, help='speed expression, e.g. "sigma(2)^0.5"')
    v.add_argument("--samples", type=int, default=10000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default=None,
                   help="report path (a directory when --suite all)")
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("flow", help="run a flow experiment from a JSON config")
    f.add_argument("--config", required=True)
    f.set_defaults(func=cmd_flow)

    s = sub.add_parser("selfsim", help="check the self-similar residual of a shape")
    s.add_argument("--F", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--C", type=float, default=0.0)
    s.add_argument("--shape", required=True,
                   help="sphere:auto | sphere:<r> | ellipsoid:<a>,<b> | "
                        "perturbed-sphere:<r>,<mode>,<amplitude>")
    s.add_argument("--N", type=int, default=200)
    s.set_defaults(func=cmd_selfsim)

    r = sub.add_parser("sphere-radius", help="print the stationary sphere radius")
    r.add_argument("--F", required=True)
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--C", type=float, default=0.0)
    r.set_defaults(func=cmd_sphere_radius)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        return args.func(args)
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
