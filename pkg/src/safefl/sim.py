"""Fixed-step closed-loop simulation with safety and input monitors.

The controller is treated as continuous feedback: it is evaluated at every
integrator stage, so the classical Runge-Kutta order applies to the closed
loop. Runs are deterministic for identical configurations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from .errors import NearSingular, NonFiniteState


def rk4_step(
    field: Callable[[float, np.ndarray], np.ndarray],
    t: float,
    x: np.ndarray,
    dt: float,
    k1: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Classical 4th-order Runge-Kutta update; local error O(dt^5).

    k1 may be supplied when the caller already evaluated the field at (t, x).
    Raises NonFiniteState if any stage produces NaN or infinity.
    """
    if k1 is None:
        k1 = field(t, x)
    half = 0.5 * dt
    if not np.all(np.isfinite(k1)):
        raise NonFiniteState(f"integration stage diverged near t = {t}")
    k2 = field(t + half, x + half * k1)
    if not np.all(np.isfinite(k2)):
        raise NonFiniteState(f"integration stage diverged near t = {t}")
    k3 = field(t + half, x + half * k2)
    if not np.all(np.isfinite(k3)):
        raise NonFiniteState(f"integration stage diverged near t = {t}")
    k4 = field(t + dt, x + dt * k3)
    if not np.all(np.isfinite(k4)):
        raise NonFiniteState(f"integration stage diverged near t = {t}")
    x_next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x_next)):
        raise NonFiniteState(f"integration diverged near t = {t}")
    return x_next


@dataclass(frozen=True)
class SimConfig:
    """Step size, horizon, initial plant state and recording stride."""

    dt: float
    horizon: float
    x0: np.ndarray
    record_stride: int = 1

    def __post_init__(self):
        if not 0.0 < self.dt <= 1e-2:
            raise ValueError("dt must lie in (0, 1e-2]")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if self.record_stride < 1:
            raise ValueError("record stride must be >= 1")
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))

    @property
    def n_steps(self) -> int:
        return math.ceil(self.horizon / self.dt)


@dataclass
class ControlAction:
    """Input applied to the plant plus the diagnostics recorded alongside it."""

    u: np.ndarray
    force: Optional[np.ndarray] = None
    force_safe: Optional[np.ndarray] = None
    w_values: Optional[np.ndarray] = None
    margins: Optional[np.ndarray] = None


class Plant(Protocol):
    state_dim: int

    def derivative(self, t: float, x: np.ndarray, u: np.ndarray) -> np.ndarray: ...


@dataclass
class Trajectory:
    """Time-indexed record of one closed-loop run.

    The task-space blocks (pos/vel/force/...) are present when the plant and
    controller provide them and None otherwise; all present arrays share the
    leading length of t.
    """

    t: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    pos: Optional[np.ndarray] = None
    vel: Optional[np.ndarray] = None
    force: Optional[np.ndarray] = None
    force_safe: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    margins: Optional[np.ndarray] = None
    safe: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def failed(self) -> bool:
        return "failure" in self.meta

    def check_lengths(self) -> None:
        n = len(self)
        for name in ("states", "inputs", "pos", "vel", "force", "force_safe", "w", "margins", "safe"):
            arr = getattr(self, name)
            if arr is not None and arr.shape[0] != n:
                raise ValueError(f"column {name} has length {arr.shape[0]}, expected {n}")
        if np.any(np.diff(self.t) <= 0.0):
            raise ValueError("time stamps must be strictly increasing")


def simulate_closed_loop(
    plant: Plant,
    controller: Callable[[float, np.ndarray], ControlAction],
    config: SimConfig,
) -> Trajectory:
    """Integrate the plant under the controller, recording diagnostics per step.

    NearSingular and NonFiniteState abort the run; the partial trajectory is
    returned with failure metadata instead of raising.
    """
    n_steps = config.n_steps
    n_records = n_steps // config.record_stride + 1
    x = config.x0.copy()

    t_out = np.empty(n_records)
    states = np.empty((n_records, x.size))
    inputs: Optional[np.ndarray] = None
    pos = vel = force = force_safe = w = margins = None
    has_task = hasattr(plant, "task_state")

    def field_fn(t: float, state: np.ndarray) -> np.ndarray:
        return plant.derivative(t, state, controller(t, state).u)

    failure: Optional[dict] = None
    count = 0
    for step in range(n_steps + 1):
        t = step * config.dt
        record_now = step % config.record_stride == 0 or step == n_steps
        try:
            action = controller(t, x)
        except (NearSingular, NonFiniteState) as err:
            failure = {"error": type(err).__name__, "message": str(err), "time": t}
            break
        if record_now:
            if inputs is None:
                inputs = np.empty((n_records, np.size(action.u)))
                if action.w_values is not None:
                    w = np.empty((n_records, np.size(action.w_values)))
                if action.margins is not None:
                    margins = np.empty((n_records, np.size(action.margins)))
                if action.force is not None:
                    force = np.empty((n_records, np.size(action.force)))
                if action.force_safe is not None:
                    force_safe = np.empty((n_records, np.size(action.force_safe)))
                if has_task:
                    pos = np.empty((n_records, 2))
                    vel = np.empty((n_records, 2))
            t_out[count] = t
            states[count] = x
            inputs[count] = action.u
            if w is not None:
                w[count] = action.w_values
            if margins is not None:
                margins[count] = action.margins
            if force is not None:
                force[count] = action.force
            if force_safe is not None:
                force_safe[count] = action.force_safe
            if has_task:
                pos[count], vel[count] = plant.task_state(x)
            count += 1
        if step == n_steps:
            break
        try:
            # overflow at extreme states is reported through NonFiniteState,
            # not as console warnings
            with np.errstate(over="ignore", invalid="ignore"):
                k1 = plant.derivative(t, x, action.u)
                x = rk4_step(field_fn, t, x, config.dt, k1=k1)
        except (NearSingular, NonFiniteState) as err:
            failure = {"error": type(err).__name__, "message": str(err), "time": t}
            break

    def trim(arr: Optional[np.ndarray]) -> Optional[np.ndarray]:
        return None if arr is None else arr[:count]

    safe_flags = None
    margins = trim(margins)
    if margins is not None:
        safe_flags = np.all(margins > 0.0, axis=1)

    traj = Trajectory(
        t=t_out[:count],
        states=states[:count],
        inputs=trim(inputs) if inputs is not None else np.empty((count, 0)),
        pos=trim(pos),
        vel=trim(vel),
        force=trim(force),
        force_safe=trim(force_safe),
        w=trim(w),
        margins=margins,
        safe=safe_flags,
        meta={"dt": config.dt, "horizon": config.horizon},
    )
    if failure is not None:
        traj.meta["failure"] = failure
    traj.check_lengths()
    return traj


@dataclass(frozen=True)
class MonitorReport:
    """Safety and input summary of one trajectory."""

    min_margin: float
    min_margin_per_constraint: np.ndarray
    first_violation_time: Optional[float]
    w_dot: np.ndarray
    w_crossing_times: list[Optional[float]]
    phi_norm: np.ndarray
    force_safe_norm: np.ndarray


def safety_monitor(traj: Trajectory) -> MonitorReport:
    """Distance-to-constraint, certificate-rate and input-norm time series.

    The plain feedback-linearization magnitude is recovered as the recorded
    total force minus the recorded safety force. Certificate rates are
    forward differences of the recorded values; a crossing time is the first
    instant a certificate moves from <= 0 to > 0.
    """
    if len(traj) == 0:
        raise ValueError("trajectory is empty")
    if traj.margins is None or traj.w is None or traj.force is None:
        raise ValueError("trajectory carries no safety diagnostics to monitor")

    per_constraint = np.min(traj.margins, axis=0)
    min_margin = float(np.min(per_constraint))
    violated = np.flatnonzero(np.any(traj.margins <= 0.0, axis=1))
    first_violation = float(traj.t[violated[0]]) if violated.size else None

    dt = np.diff(traj.t)
    w_dot = np.diff(traj.w, axis=0) / dt[:, None]

    crossings: list[Optional[float]] = []
    for j in range(traj.w.shape[1]):
        col = traj.w[:, j]
        idx = np.flatnonzero((col[:-1] <= 0.0) & (col[1:] > 0.0))
        crossings.append(float(traj.t[idx[0] + 1]) if idx.size else None)

    phi = traj.force - traj.force_safe if traj.force_safe is not None else traj.force
    phi_norm = np.linalg.norm(phi, axis=1)
    fsafe_norm = (
        np.linalg.norm(traj.force_safe, axis=1)
        if traj.force_safe is not None
        else np.zeros(len(traj))
    )
    return MonitorReport(
        min_margin=min_margin,
        min_margin_per_constraint=per_constraint,
        first_violation_time=first_violation,
        w_dot=w_dot,
        w_crossing_times=crossings,
        phi_norm=phi_norm,
        force_safe_norm=fsafe_norm,
    )
