"""Batch command surface: threshold solving, shape sweeps, Monte Carlo
ROC experiments, and the property-verification suite.

Subcommands
-----------
threshold   solve the optimal quantizer for one (alpha, beta, q0, q1)
sweep       solve across a beta grid, writing a CSV
roc         run a Monte Carlo ROC experiment preset, writing a CSV
verify      run the numerical property suite

File-producing commands write a sibling ``<out>.manifest.json`` holding
the command, resolved parameters, master seed, toolkit version and
wall-clock duration; `replay_manifest` re-runs a manifest and reproduces
the output bytes exactly.  CSV output is RFC-4180-style with a header
row, '.' decimals and 17 significant digits.  The environment variable
``ONEBITDET_PARALLEL`` sets the default worker count for trial batches
(results are independent of it).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, ggn, harness, optimizer
from .detection import DetectionScenario, SensorField
from .objective import ChannelParams, UninformativeChannelError

EXIT_OK = 0
EXIT_FAILED_CHECKS = 1
EXIT_BAD_REQUEST = 2
EXIT_SIMULATION = 3

_ROC_KEYS = (
    "preset", "alpha", "beta", "theta", "delta",
    "q0", "q1", "n", "k", "trials", "seed",
)
_ROC_FLOAT_KEYS = {"alpha", "beta", "theta", "delta", "q0", "q1"}
_ROC_INT_KEYS = {"n", "k", "trials", "seed"}


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_manifest(out_path, command, params, master_seed, started):
    manifest = {
        "command": command,
        "params": params,
        "master_seed": master_seed,
        "outputs": [str(out_path)],
        "version": __version__,
        "duration_seconds": time.perf_counter() - started,
    }
    manifest_path = str(out_path) + ".manifest.json"
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebitdet",
        description="One-bit quantizer design and detection experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_thr = sub.add_parser("threshold", help="solve the optimal quantizer threshold")
    p_thr.add_argument("--alpha", type=float, default=1.0)
    p_thr.add_argument("--beta", type=float, required=True)
    p_thr.add_argument("--q0", type=float, required=True)
    p_thr.add_argument("--q1", type=float, required=True)

    p_sweep = sub.add_parser("sweep", help="solve thresholds over a beta grid")
    p_sweep.add_argument("--alpha", type=float, default=1.0)
    p_sweep.add_argument("--q0", type=float)
    p_sweep.add_argument("--q1", type=float)
    p_sweep.add_argument(
        "--beta-grid",
        dest="beta_grid",
        help="comma list '1.5,2,4' or range 'start:stop:step'",
    )
    p_sweep.add_argument("--preset", choices=("table1", "fig1-sweep"))
    p_sweep.add_argument("--out", default="sweep.csv")

    p_roc = sub.add_parser("roc", help="run a Monte Carlo ROC experiment")
    p_roc.add_argument("--preset", choices=("fig2-roc", "fig3-acoustic"))
    p_roc.add_argument("--config", help="key = value file; flags override it")
    for key in ("alpha", "beta", "theta", "delta", "q0", "q1"):
        p_roc.add_argument(f"--{key}", type=float)
    for key in ("n", "k", "trials", "seed"):
        p_roc.add_argument(f"--{key}", type=int)
    p_roc.add_argument("--out", default="roc.csv")

    p_verify = sub.add_parser("verify", help="run the property-verification suite")
    p_verify.add_argument(
        "--only",
        action="append",
        choices=harness.VERIFY_SCOPES,
        help="restrict to one or more scopes (repeatable)",
    )
    return parser


# ---------------------------------------------------------------------------
# threshold


def _cmd_threshold(args) -> int:
    try:
        solution = optimizer.solve_threshold(
            ggn.GGNParams(args.alpha, args.beta), ChannelParams(args.q0, args.q1)
        )
    except UninformativeChannelError as exc:
        print(f"error: uninformative channel: {exc}", file=sys.stderr)
        return EXIT_BAD_REQUEST
    except (ValueError, optimizer.ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_REQUEST
    print(f"case        {solution.case_label}")
    print(f"x_star      {solution.x_star:.4f}")
    print(f"tau_star    {solution.tau_star:.4f}")
    if solution.also_tau is not None:
        print(f"also_tau    {solution.also_tau:.4f}")
    print(f"gain        {solution.g_value:.4f}")
    print(f"iterations  {solution.iterations}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep


def _parse_beta_grid(text: str):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"beta grid range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("beta grid step must be > 0")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(count))
    return tuple(float(p) for p in text.split(",") if p.strip())


def _run_sweep(params: dict, out_path: str, started: float) -> int:
    if params.get("preset"):
        spec = harness.preset(params["preset"])
        multi_channel = len(spec.channels) > 1
    else:
        missing = [k for k in ("q0", "q1", "beta_grid") if params.get(k) is None]
        if missing:
            print(f"error: sweep requires {missing} (or --preset)", file=sys.stderr)
            return EXIT_BAD_REQUEST
        betas = _parse_beta_grid(str(params["beta_grid"]))
        spec = harness.SweepSpec(
            alpha=float(params.get("alpha", 1.0)),
            channels=((float(params["q0"]), float(params["q1"])),),
            betas=betas,
        )
        multi_channel = False
    rows = harness.run_sweep(spec)
    if multi_channel:
        header = ["q0", "q1", "beta", "alpha_x_star", "case", "error"]
        csv_rows = [(r.q0, r.q1, r.beta, r.alpha_x_star, r.case, r.error) for r in rows]
    else:
        header = ["beta", "alpha_x_star", "case", "error"]
        csv_rows = [(r.beta, r.alpha_x_star, r.case, r.error) for r in rows]
    _write_csv(out_path, header, csv_rows)
    _write_manifest(out_path, "sweep", params, None, started)
    solved = sum(1 for r in rows if not r.error)
    print(f"sweep: {solved}/{len(rows)} rows solved -> {out_path}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    params = {
        "preset": args.preset,
        "alpha": args.alpha,
        "q0": args.q0,
        "q1": args.q1,
        "beta_grid": args.beta_grid,
    }
    try:
        return _run_sweep(params, args.out, time.perf_counter())
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_REQUEST


# ---------------------------------------------------------------------------
# roc


def _parse_config_file(path: str) -> dict:
    params = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        params[key.strip()] = value.strip()
    return params


def _resolve_roc_config(params: dict) -> harness.ExperimentConfig:
    unknown = set(params) - set(_ROC_KEYS)
    if unknown:
        raise ValueError(f"unknown roc config keys: {sorted(unknown)}")
    typed = {}
    for key, value in params.items():
        if value is None:
            continue
        if key in _ROC_FLOAT_KEYS:
            typed[key] = float(value)
        elif key in _ROC_INT_KEYS:
            typed[key] = int(value)
        else:
            typed[key] = str(value)
    if typed.get("preset"):
        config = harness.preset(typed["preset"])
        if not isinstance(config, harness.ExperimentConfig):
            raise ValueError(f"preset {typed['preset']!r} is a solver sweep, not a roc run")
    else:
        required = {"n", "k", "theta", "beta"}
        missing = sorted(required - set(typed))
        if missing:
            raise ValueError(f"roc without preset requires keys {missing}")
        field = SensorField.homogeneous(typed["n"], typed["k"])
        scenario = DetectionScenario(
            field=field,
            theta=typed["theta"],
            delta=typed.get("delta", 0.5),
            noise=ggn.GGNParams(typed.get("alpha", 1.0), typed["beta"]),
            channel=ChannelParams(typed.get("q0", 0.0), typed.get("q1", 0.0)),
        )
        return harness.ExperimentConfig(
            scenario=scenario,
            trials=typed.get("trials", 1000),
            master_seed=typed.get("seed", harness.DEFAULT_SEED),
        )
    scenario = config.scenario
    noise = scenario.noise
    channel = scenario.channel
    if "alpha" in typed or "beta" in typed:
        noise = ggn.GGNParams(typed.get("alpha", noise.alpha), typed.get("beta", noise.beta))
    if "q0" in typed or "q1" in typed:
        channel = ChannelParams(typed.get("q0", channel.q0), typed.get("q1", channel.q1))
    field = scenario.field
    if "n" in typed or "k" in typed:
        h = field.h
        if not (np.all(h == h.flat[0]) and np.all(field.tau == field.tau.flat[0])):
            raise ValueError("--n/--k overrides apply to homogeneous fields only")
        field = SensorField.homogeneous(
            typed.get("n", field.n_sensors),
            typed.get("k", field.n_readings),
            h=float(h.flat[0]),
            tau=float(field.tau.flat[0]),
        )
    scenario = DetectionScenario(
        field=field,
        theta=typed.get("theta", scenario.theta),
        delta=typed.get("delta", scenario.delta),
        noise=noise,
        channel=channel,
    )
    return replace(
        config,
        scenario=scenario,
        trials=typed.get("trials", config.trials),
        master_seed=typed.get("seed", config.master_seed),
    )


def _run_roc(params: dict, out_path: str, started: float) -> int:
    try:
        config = _resolve_roc_config(params)
    except (ValueError, UninformativeChannelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_REQUEST
    try:
        curves = harness.empirical_roc(config)
    except Exception as exc:  # simulation failure, distinct exit code
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    rows = [
        (curve.detector, curve.threshold_label, pfa, pd)
        for curve in curves
        for pfa, pd in zip(curve.pfa, curve.pd)
    ]
    _write_csv(out_path, ["detector", "threshold_label", "pfa", "pd"], rows)
    _write_manifest(out_path, "roc", params, config.master_seed, started)
    print(
        f"roc: {len(curves)} curve(s), {config.trials} trials each -> {out_path}"
    )
    return EXIT_OK


def _cmd_roc(args) -> int:
    started = time.perf_counter()
    params = {}
    if args.config:
        try:
            params.update(_parse_config_file(args.config))
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_BAD_REQUEST
    for key in _ROC_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return _run_roc(params, args.out, started)


# ---------------------------------------------------------------------------
# verify


def _cmd_verify(args) -> int:
    scopes = tuple(args.only) if args.only else None
    report = harness.verify_propositions(scopes=scopes)
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        where = f" {check.config}" if check.config else ""
        print(f"[{status}] {check.name}{where}: {check.detail}")
    failures = report.failures()
    print(f"verify: {len(report.checks) - len(failures)}/{len(report.checks)} checks passed")
    return EXIT_OK if report.all_passed else EXIT_FAILED_CHECKS


# ---------------------------------------------------------------------------
# entry points


def replay_manifest(manifest_path, out=None) -> int:
    """Re-run a recorded command; the rewritten output is bit-identical."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    command = manifest["command"]
    out_path = out or manifest["outputs"][0]
    started = time.perf_counter()
    if command == "roc":
        return _run_roc(manifest["params"], out_path, started)
    if command == "sweep":
        return _run_sweep(manifest["params"], out_path, started)
    raise ValueError(f"manifest command {command!r} is not replayable")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "threshold":
        return _cmd_threshold(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    if args.command == "roc":
        return _cmd_roc(args)
    return _cmd_verify(args)


def console() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console()
