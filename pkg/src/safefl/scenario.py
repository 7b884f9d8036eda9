"""Run configuration and assembly of the reach-avoid manipulator scenario.

A configuration names the arm, the Cartesian goal, per-axis position
constraints, loop gains and certificate parameters. Assembly normalizes each
constraint onto a canonical left half plane (recording the axis sign flip),
solves the per-axis Lyapunov equations, selects or validates the certificate
parameters, and exposes plant/controller factories for simulation.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .clbf import (
    HalfPlaneUnsafe,
    MarginPolicy,
    ParameterBounds,
    QuadraticCLF,
    RegionBox,
    WeakCLBF,
    assemble_weak_clbf,
    full_verification,
    normalize_constraint,
    parameter_bounds,
    select_parameters,
    v1_min_on_unsafe,
)
from .errors import ConfigError
from .manipulator import (
    ManipulatorParams,
    ManipulatorPlant,
    SafeTaskController,
    forward_kinematics,
    inverse_kinematics,
    jacobian,
)
from .numerics import solve_lyapunov_2x2
from .sim import SimConfig, Trajectory, simulate_closed_loop
from .sontag import subsystem_drift
from .transform import GainSchedule

SCHEMA_VERSION = 1

_DEFAULT_Q = ((1.0, -0.9), (-0.9, 1.0))


@dataclass(frozen=True)
class ConstraintSpec:
    """Keep-out bound on one task axis: side 'max' keeps p_axis below bound,
    side 'min' keeps it above."""

    axis: int
    side: str
    bound: float


@dataclass(frozen=True)
class RunConfig:
    name: str
    manipulator: ManipulatorParams
    goal: np.ndarray
    initial_position: np.ndarray
    initial_velocity: np.ndarray
    elbow: str
    region_p1: tuple[float, float]
    region_p2: tuple[float, float]
    speed_limit: float
    constraints: tuple[ConstraintSpec, ...]
    kp: np.ndarray
    kd: np.ndarray
    lyapunov_q: np.ndarray
    clbf_mode: str
    v2: tuple[Optional[float], Optional[float]]
    l_override: tuple[Optional[float], Optional[float]]
    delta_margin: float
    theta_margin: float
    explicit_params: Optional[tuple[dict, ...]]
    dt: float
    horizon: float
    record_stride: int
    k_safe_sweep: tuple[float, ...]
    reference_initial_w: Optional[tuple[float, float]]

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        try:
            return _parse_config(cls, raw)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as err:
            raise ConfigError(f"invalid configuration: {err}") from err


_TOP_LEVEL_KEYS = {
    "schema_version",
    "name",
    "manipulator",
    "goal",
    "initial",
    "region",
    "constraints",
    "gains",
    "lyapunov_q",
    "clbf",
    "simulation",
    "k_safe",
    "reference_initial_w",
}


def _pair(value, what: str) -> tuple[float, float]:
    seq = list(value)
    if len(seq) != 2:
        raise ConfigError(f"{what} must have exactly two entries")
    return float(seq[0]), float(seq[1])


def _optional_pair(value) -> tuple[Optional[float], Optional[float]]:
    if value is None:
        return (None, None)
    seq = list(value)
    if len(seq) != 2:
        raise ConfigError("per-axis settings must have exactly two entries")
    return tuple(None if v is None else float(v) for v in seq)  # type: ignore[return-value]


def _parse_config(cls, raw: dict) -> "RunConfig":
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be an object")
    unknown = set(raw) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version must be {SCHEMA_VERSION}, got {raw.get('schema_version')!r}"
        )

    arm = raw["manipulator"]
    params = ManipulatorParams(
        m1=float(arm["m1"]),
        m2=float(arm["m2"]),
        L1=float(arm["L1"]),
        L2=float(arm["L2"]),
        gravity=float(arm.get("gravity", 9.81)),
    )
    goal = np.array(_pair(raw["goal"], "goal"))
    initial = raw["initial"]
    p0 = np.array(_pair(initial["position"], "initial position"))
    v0 = np.array(_pair(initial["velocity"], "initial velocity"))
    elbow = str(initial.get("elbow", "up"))
    if elbow not in ("up", "down"):
        raise ConfigError(f"elbow must be 'up' or 'down', got {elbow!r}")

    region = raw["region"]
    p1_lo, p1_hi = _pair(region["p1"], "region p1")
    p2_lo, p2_hi = _pair(region["p2"], "region p2")
    speed = float(region["speed_limit"])
    if speed <= 0.0:
        raise ConfigError("speed_limit must be positive")

    constraints = []
    seen_axes = set()
    for entry in raw["constraints"]:
        axis = int(entry["axis"])
        side = str(entry["side"])
        if axis not in (0, 1):
            raise ConfigError(f"constraint axis must be 0 or 1, got {axis}")
        if side not in ("min", "max"):
            raise ConfigError(f"constraint side must be 'min' or 'max', got {side!r}")
        if axis in seen_axes:
            raise ConfigError(f"duplicate constraint on axis {axis}")
        seen_axes.add(axis)
        constraints.append(ConstraintSpec(axis=axis, side=side, bound=float(entry["bound"])))
    if not constraints:
        raise ConfigError("at least one constraint required")
    constraints.sort(key=lambda c: c.axis)

    gains = raw["gains"]
    kp = np.array(_pair(gains["kp"], "kp"))
    kd = np.array(_pair(gains["kd"], "kd"))
    if np.any(kp <= 0.0) or np.any(kd <= 0.0):
        raise ConfigError("gains must be positive")

    q_mat = np.array(raw.get("lyapunov_q", _DEFAULT_Q), dtype=float)
    if q_mat.shape != (2, 2):
        raise ConfigError("lyapunov_q must be a 2x2 matrix")

    clbf = raw["clbf"]
    mode = str(clbf.get("mode", "auto"))
    if mode not in ("auto", "explicit"):
        raise ConfigError(f"clbf mode must be 'auto' or 'explicit', got {mode!r}")
    v2 = _optional_pair(clbf.get("v2"))
    l_override = _optional_pair(clbf.get("l"))
    delta_margin = float(clbf.get("delta_margin", 1.05))
    theta_margin = float(clbf.get("theta_margin", 1.05))
    explicit_params = None
    if mode == "explicit":
        entries = clbf.get("params")
        if not isinstance(entries, list) or len(entries) != len(constraints):
            raise ConfigError("explicit mode needs one params entry per constraint")
        cooked = []
        for entry in entries:
            cooked.append(
                {
                    "l": float(entry["l"]),
                    "delta": float(entry["delta"]),
                    "theta": float(entry["theta"]),
                    "k": None if entry.get("k") is None else float(entry["k"]),
                }
            )
        explicit_params = tuple(cooked)
        if any(v is None for v in v2):
            raise ConfigError("explicit mode requires v2 for every constraint")

    sim = raw["simulation"]
    dt = float(sim["dt"])
    horizon = float(sim["horizon"])
    stride = int(sim.get("record_stride", 1))
    if not 0.0 < dt <= 1e-2:
        raise ConfigError(f"dt must lie in (0, 1e-2], got {dt}")
    if horizon <= 0.0:
        raise ConfigError("horizon must be positive")
    if stride < 1:
        raise ConfigError("record_stride must be >= 1")

    sweep = tuple(float(v) for v in raw.get("k_safe", []))
    if any(v <= 0.0 for v in sweep):
        raise ConfigError("k_safe sweep values must be positive")

    reference = raw.get("reference_initial_w")
    reference_w = None if reference is None else _pair(reference, "reference_initial_w")

    return cls(
        name=str(raw.get("name", "scenario")),
        manipulator=params,
        goal=goal,
        initial_position=p0,
        initial_velocity=v0,
        elbow=elbow,
        region_p1=(p1_lo, p1_hi),
        region_p2=(p2_lo, p2_hi),
        speed_limit=speed,
        constraints=tuple(constraints),
        kp=kp,
        kd=kd,
        lyapunov_q=q_mat,
        clbf_mode=mode,
        v2=v2,
        l_override=l_override,
        delta_margin=delta_margin,
        theta_margin=theta_margin,
        explicit_params=explicit_params,
        dt=dt,
        horizon=horizon,
        record_stride=stride,
        k_safe_sweep=sweep,
        reference_initial_w=reference_w,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read configuration: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"configuration is not valid JSON: {err}") from err
    return RunConfig.from_dict(raw)


def default_config_path() -> Path:
    return Path(__file__).parent / "configs" / "paper_scenario.json"


# ---------------------------------------------------------------------------
# assembly


@dataclass(frozen=True)
class SubsystemSetup:
    """One task axis of the decoupled loop, with its certificate if constrained."""

    axis: int
    sign: float
    kp: float
    kd: float
    clf: QuadraticCLF
    region: RegionBox
    unsafe: Optional[HalfPlaneUnsafe]
    bounds: Optional[ParameterBounds]
    certificate: Optional[WeakCLBF]
    xbar0: tuple[float, float]

    @property
    def constrained(self) -> bool:
        return self.certificate is not None


@dataclass(frozen=True)
class ScenarioBundle:
    config: RunConfig
    subsystems: tuple[SubsystemSetup, ...]
    q0: np.ndarray
    qdot0: np.ndarray

    @property
    def params(self) -> ManipulatorParams:
        return self.config.manipulator

    @property
    def signs(self) -> np.ndarray:
        return np.array([sub.sign for sub in self.subsystems])

    @property
    def certificates(self) -> list[Optional[WeakCLBF]]:
        return [sub.certificate for sub in self.subsystems]

    @property
    def unsafe_thresholds(self) -> list[Optional[float]]:
        return [None if sub.unsafe is None else sub.unsafe.d for sub in self.subsystems]

    def initial_w(self) -> np.ndarray:
        return np.array(
            [
                sub.certificate.value(*sub.xbar0) if sub.certificate else np.nan
                for sub in self.subsystems
            ]
        )

    def initial_member(self) -> bool:
        values = self.initial_w()
        return bool(np.all(values[~np.isnan(values)] <= 0.0))

    def gain_schedule(self, k_safe_value: float) -> GainSchedule:
        k_safe = np.array(
            [k_safe_value if sub.constrained else 0.0 for sub in self.subsystems]
        )
        return GainSchedule(kp=self.config.kp.copy(), kd=self.config.kd.copy(), k_safe=k_safe)

    def controller(self, k_safe_value: float) -> SafeTaskController:
        return SafeTaskController(
            params=self.params,
            goal=self.config.goal,
            signs=self.signs,
            gains=self.gain_schedule(k_safe_value),
            certificates=self.certificates,
            unsafe_d=self.unsafe_thresholds,
        )

    def plant(self) -> ManipulatorPlant:
        return ManipulatorPlant(self.params)

    @property
    def x0(self) -> np.ndarray:
        return np.concatenate([self.q0, self.qdot0])


def _axis_interval(sign: float, lo: float, hi: float, goal: float) -> tuple[float, float]:
    a, b = sign * (lo - goal), sign * (hi - goal)
    return (a, b) if a < b else (b, a)


def build_bundle(config: RunConfig, enforce_bounds: bool = True) -> ScenarioBundle:
    """Assemble per-axis certificates and the initial joint state.

    enforce_bounds=False builds certificates exactly as configured even when
    their parameters violate the feasibility bounds, leaving judgment to the
    verifier; feasibility errors (LevelTooSmall, MarginInfeasible) still
    propagate in enforcing mode.
    """
    goal = config.goal
    p_bounds = (config.region_p1, config.region_p2)
    if not all(
        p_bounds[axis][0] < goal[axis] < p_bounds[axis][1] for axis in (0, 1)
    ):
        raise ConfigError("region must contain the goal in its interior")
    if not all(
        p_bounds[axis][0] <= config.initial_position[axis] <= p_bounds[axis][1]
        for axis in (0, 1)
    ):
        raise ConfigError("region must contain the initial position")

    by_axis = {c.axis: c for c in config.constraints}
    subsystems = []
    constrained_index = 0
    for axis in (0, 1):
        spec = by_axis.get(axis)
        if spec is not None:
            direction = "ge" if spec.side == "max" else "le"
            unsafe, flip = normalize_constraint(direction, spec.bound - goal[axis])
            sign = -1.0 if flip else 1.0
        else:
            unsafe, sign = None, 1.0

        lo, hi = _axis_interval(sign, *p_bounds[axis], goal[axis])
        try:
            region = RegionBox(lo, hi, -config.speed_limit, config.speed_limit)
        except ValueError as err:
            raise ConfigError(f"axis {axis}: {err}") from err

        A = np.array([[0.0, 1.0], [-config.kp[axis], -config.kd[axis]]])
        clf = QuadraticCLF.from_matrix(solve_lyapunov_2x2(A, config.lyapunov_q))

        e0 = sign * (config.initial_position[axis] - goal[axis])
        edot0 = sign * config.initial_velocity[axis]

        certificate = None
        bounds = None
        if unsafe is not None:
            v2 = config.v2[constrained_index]
            if v2 is None:
                # default level: cover the initial error state, with headroom
                # over the unsafe-set minimum so the level set reaches it
                v2 = max(clf.value(e0, edot0), 1.5 * v1_min_on_unsafe(clf, unsafe.d))
            bounds = parameter_bounds(clf, region, unsafe, v2)
            if config.clbf_mode == "auto":
                policy = MarginPolicy(
                    l=config.l_override[constrained_index],
                    delta_margin=config.delta_margin,
                    theta_margin=config.theta_margin,
                )
                certificate = select_parameters(clf, region, unsafe, v2, policy)
            else:
                entry = config.explicit_params[constrained_index]
                certificate = assemble_weak_clbf(
                    clf,
                    region,
                    unsafe,
                    v2,
                    l=entry["l"],
                    delta=entry["delta"],
                    theta=entry["theta"],
                    k=entry["k"],
                    enforce_bounds=enforce_bounds,
                )
            constrained_index += 1

        subsystems.append(
            SubsystemSetup(
                axis=axis,
                sign=sign,
                kp=float(config.kp[axis]),
                kd=float(config.kd[axis]),
                clf=clf,
                region=region,
                unsafe=unsafe,
                bounds=bounds,
                certificate=certificate,
                xbar0=(e0, edot0),
            )
        )

    q0 = inverse_kinematics(config.manipulator, config.initial_position, config.elbow)
    J0 = jacobian(config.manipulator, q0)
    qdot0 = np.linalg.solve(J0, config.initial_velocity)
    fk_err = np.max(np.abs(forward_kinematics(config.manipulator, q0) - config.initial_position))
    if fk_err > 1e-9:
        raise ConfigError(f"inverse kinematics failed to reach the initial position ({fk_err:.2e})")

    return ScenarioBundle(
        config=config, subsystems=tuple(subsystems), q0=q0, qdot0=qdot0
    )


def run_case(
    bundle: ScenarioBundle,
    k_safe_value: float,
    dt: Optional[float] = None,
    horizon: Optional[float] = None,
    record_stride: Optional[int] = None,
) -> Trajectory:
    config = SimConfig(
        dt=dt if dt is not None else bundle.config.dt,
        horizon=horizon if horizon is not None else bundle.config.horizon,
        x0=bundle.x0,
        record_stride=record_stride if record_stride is not None else bundle.config.record_stride,
    )
    traj = simulate_closed_loop(bundle.plant(), bundle.controller(k_safe_value), config)
    traj.meta["k_safe"] = k_safe_value
    return traj


def verify_bundle(
    bundle: ScenarioBundle,
    grid_resolution: int = 400,
    eps_origin: Optional[float] = None,
    c_omega_resolution: int = 200,
):
    """Certificate verification for every constrained axis: [(axis, report)]."""
    results = []
    for sub in bundle.subsystems:
        if not sub.constrained:
            continue
        drift = subsystem_drift(sub.kp, sub.kd)
        report = full_verification(
            sub.certificate,
            drift,
            sub.region,
            sub.unsafe,
            grid_resolution=grid_resolution,
            eps_origin=eps_origin,
            c_omega_resolution=c_omega_resolution,
        )
        results.append((sub.axis, report))
    return results


def parameter_report(bundle: ScenarioBundle) -> dict:
    """Chosen certificate parameters with their bounds and slack factors."""
    subsystems = []
    for sub in bundle.subsystems:
        entry: dict = {
            "axis": sub.axis,
            "sign": sub.sign,
            "kp": sub.kp,
            "kd": sub.kd,
            "p_matrix": sub.clf.matrix.tolist(),
            "constrained": sub.constrained,
        }
        if sub.constrained:
            cert = sub.certificate
            bounds = sub.bounds
            l = cert.shape.l
            delta = cert.shape.delta
            delta_min = bounds.delta_min(l)
            theta_min = bounds.theta_min(l, delta)
            entry.update(
                {
                    "d": sub.unsafe.d,
                    "gamma": bounds.gamma,
                    "l_max": bounds.l_max,
                    "v1": bounds.v1,
                    "v2": bounds.v2,
                    "l": l,
                    "delta_min": delta_min,
                    "delta": delta,
                    "theta_min": theta_min,
                    "theta": cert.theta,
                    "k": cert.k,
                    "sigma1": cert.levels.sigma1,
                    "sigma2": cert.levels.sigma2,
                    "w0": cert.value(*sub.xbar0),
                    "slack": {
                        "delta_over_min": delta / delta_min if delta_min > 0 else math.inf,
                        "theta_over_min": cert.theta / theta_min if math.isfinite(theta_min) else 0.0,
                    },
                }
            )
        subsystems.append(entry)
    out = {
        "name": bundle.config.name,
        "subsystems": subsystems,
        "initial_w": [None if math.isnan(v) else v for v in bundle.initial_w()],
        "initial_member": bundle.initial_member(),
    }
    if bundle.config.reference_initial_w is not None:
        out["reference_initial_w"] = list(bundle.config.reference_initial_w)
    return out
