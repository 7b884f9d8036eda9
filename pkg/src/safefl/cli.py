"""Command-line front end: parameter selection, verification, simulation.

Exit codes: 0 success, 2 verification or feasibility failure, 3 configuration
error, 4 numerical abort (singularity or divergence during simulation).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    ConfigError,
    EmptyCOmega,
    GridTooCoarse,
    InvalidUnsafeSet,
    LevelTooSmall,
    MarginInfeasible,
)
from .scenario import (
    RunConfig,
    ScenarioBundle,
    build_bundle,
    default_config_path,
    load_config,
    parameter_report,
    run_case,
    verify_bundle,
)
from .sim import Trajectory, safety_monitor
from .svg import render_input_norms, render_trajectories

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_CONFIG = 3
EXIT_NUMERICAL = 4

CSV_COLUMNS = (
    "t",
    "p1",
    "p2",
    "v1",
    "v2",
    "tau1",
    "tau2",
    "F1",
    "F2",
    "Fsafe1",
    "Fsafe2",
    "W1",
    "W2",
    "safe_flag",
)


def _fmt(value: float) -> str:
    return format(float(value), ".9g")


def write_trajectory_csv(traj: Trajectory, path: Path) -> None:
    """Emit the fixed 14-column schema with 9-significant-digit floats."""
    rows = [",".join(CSV_COLUMNS)]
    for i in range(len(traj)):
        rec = [
            _fmt(traj.t[i]),
            _fmt(traj.pos[i, 0]),
            _fmt(traj.pos[i, 1]),
            _fmt(traj.vel[i, 0]),
            _fmt(traj.vel[i, 1]),
            _fmt(traj.inputs[i, 0]),
            _fmt(traj.inputs[i, 1]),
            _fmt(traj.force[i, 0]),
            _fmt(traj.force[i, 1]),
            _fmt(traj.force_safe[i, 0]),
            _fmt(traj.force_safe[i, 1]),
            _fmt(traj.w[i, 0]),
            _fmt(traj.w[i, 1]),
            str(int(traj.safe[i])),
        ]
        rows.append(",".join(rec))
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def run_label(k_safe: float) -> str:
    return "baseline" if k_safe == 0.0 else f"ksafe_{k_safe:g}"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="safefl",
        description=(
            "Construct, verify and simulate scaled-certificate safe "
            "feedback-linearization controllers for a planar two-link arm."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, sim_flags: bool = False) -> None:
        p.add_argument("--config", type=Path, default=None, help="JSON run configuration")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        if sim_flags:
            p.add_argument("--dt", type=float, default=None, help="integration step override")
            p.add_argument("--horizon", type=float, default=None, help="horizon override (s)")
            p.add_argument(
                "--k-safe",
                type=float,
                action="append",
                default=None,
                help="safety gain (repeatable); replaces the configured sweep",
            )

    common(sub.add_parser("select-params", help="choose certificate parameters and report bounds"))
    verify = sub.add_parser("verify", help="grid-check the certificate conditions")
    common(verify)
    verify.add_argument("--grid", type=int, default=400, help="grid resolution per axis")
    simulate = sub.add_parser("simulate", help="run the closed-loop scenario and emit CSV/SVG")
    common(simulate, sim_flags=True)
    reproduce = sub.add_parser(
        "reproduce-paper",
        help="simulate the bundled reference scenario with its published gain sweep",
    )
    common(reproduce, sim_flags=True)
    return parser


def _load(args, force_default: bool = False) -> RunConfig:
    path = default_config_path() if force_default or args.config is None else args.config
    return load_config(path)


def cmd_select_params(args) -> int:
    config = _load(args)
    bundle = build_bundle(config, enforce_bounds=True)
    report = parameter_report(bundle)
    args.out.mkdir(parents=True, exist_ok=True)
    out_path = args.out / "parameters.json"
    out_path.write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    for sub in report["subsystems"]:
        if not sub["constrained"]:
            print(f"axis {sub['axis']}: unconstrained (kp={sub['kp']}, kd={sub['kd']})")
            continue
        print(
            f"axis {sub['axis']}: d={sub['d']:.6g} gamma={sub['gamma']:.6g} "
            f"l={sub['l']:.6g} (max {sub['l_max']:.6g}) "
            f"delta={sub['delta']:.6g} (min {sub['delta_min']:.6g}) "
            f"theta={sub['theta']:.6g} (min {sub['theta_min']:.6g}) "
            f"k={sub['k']:.6g} v1={sub['v1']:.6g} v2={sub['v2']:.6g}"
        )
    print(f"parameters written to {out_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    config = _load(args)
    bundle = build_bundle(config, enforce_bounds=False)
    results = verify_bundle(bundle, grid_resolution=args.grid)
    args.out.mkdir(parents=True, exist_ok=True)
    payload = {"grid_resolution": args.grid, "subsystems": []}
    all_pass = True
    for axis, report in results:
        payload["subsystems"].append({"axis": axis, **report.to_dict()})
        all_pass &= report.passed
        for cond in report.conditions() + ([report.c_omega] if report.c_omega else []):
            status = "pass" if cond.passed else "FAIL"
            name = cond.name if hasattr(cond, "name") else "margin_set_contained"
            margin = cond.margin if hasattr(cond, "margin") else cond.worst_value
            line = f"axis {axis} {name}: {status} (worst {margin:.6g}"
            witness = cond.witness
            if witness is not None and not cond.passed:
                line += f", witness ({witness[0]:.6g}, {witness[1]:.6g})"
            print(line + ")")
    out_path = args.out / "verification_report.json"
    out_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    print(("all conditions pass" if all_pass else "verification FAILED") + f"; report at {out_path}")
    return EXIT_OK if all_pass else EXIT_CHECK_FAILED


def _simulate_cases(
    bundle: ScenarioBundle, sweep, dt: Optional[float], horizon: Optional[float]
) -> list[Trajectory]:
    runs = []
    for k_safe in [0.0, *sweep]:
        runs.append(run_case(bundle, k_safe, dt=dt, horizon=horizon))
    return runs


def cmd_simulate(args, force_default: bool = False) -> int:
    config = _load(args, force_default=force_default)
    bundle = build_bundle(config, enforce_bounds=True)
    sweep = tuple(args.k_safe) if args.k_safe is not None else config.k_safe_sweep
    runs = _simulate_cases(bundle, sweep, args.dt, args.horizon)

    args.out.mkdir(parents=True, exist_ok=True)
    summary = parameter_report(bundle)
    summary["runs"] = []
    aborted = False
    for traj in runs:
        label = run_label(traj.meta["k_safe"])
        write_trajectory_csv(traj, args.out / f"{label}.csv")
        entry = {"label": label, "k_safe": traj.meta["k_safe"], "steps": max(len(traj) - 1, 0)}
        if traj.failed:
            entry["failure"] = traj.meta["failure"]
            aborted = True
        if len(traj) > 0:
            monitor = safety_monitor(traj)
            goal_err = float(np.linalg.norm(traj.pos[-1] - bundle.config.goal))
            entry.update(
                {
                    "safe": monitor.first_violation_time is None and not traj.failed,
                    "min_margin": monitor.min_margin,
                    "first_violation_time": monitor.first_violation_time,
                    "final_goal_distance": goal_err,
                }
            )
            status = (
                "aborted"
                if traj.failed
                else "safe"
                if monitor.first_violation_time is None
                else f"VIOLATION at t={monitor.first_violation_time:.3f}s"
            )
            print(
                f"{label}: {status}, min margin {monitor.min_margin:.4f}, "
                f"final goal distance {goal_err:.2e}"
            )
        else:
            entry["safe"] = False
            print(f"{label}: aborted before the first step")
        summary["runs"].append(entry)

    render_trajectories(runs, bundle, args.out / "trajectories.svg")
    render_input_norms(runs, args.out / "input_norms.svg")
    (args.out / "summary.json").write_text(
        json.dumps(summary, indent=2) + "\n", encoding="utf-8"
    )

    w0 = summary["initial_w"]
    line = "initial certificate values: " + ", ".join(
        f"W{i + 1}={v:.4g}" for i, v in enumerate(w0) if v is not None
    )
    if "reference_initial_w" in summary:
        ref = summary["reference_initial_w"]
        line += " (reference readouts: " + ", ".join(
            f"W{i + 1}={v:.4g}" for i, v in enumerate(ref)
        ) + "; reported for comparison, not asserted)"
    print(line)
    print(f"outputs written to {args.out}")
    return EXIT_NUMERICAL if aborted else EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "select-params":
            return cmd_select_params(args)
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "reproduce-paper":
            return cmd_simulate(args, force_default=True)
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (LevelTooSmall, MarginInfeasible, InvalidUnsafeSet, EmptyCOmega, GridTooCoarse) as err:
        print(f"infeasible: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    raise SystemExit(main())
