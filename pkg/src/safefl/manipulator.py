"""Planar two-link manipulator: joint dynamics, kinematics, task-space control.

The safe task controller feedback-linearizes the Cartesian dynamics around a
goal position, imposes decoupled second-order error loops per axis, and adds
the universal-formula safety input of each axis certificate on top.

The model quantities are written as scalar kernels shared between the public
array-valued functions and the controller/plant fast paths, which run inside
every integrator stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .clbf import WeakCLBF
from .errors import NearSingular
from .sim import ControlAction
from .sontag import DriftVariant, sontag_universal
from .transform import GainSchedule


@dataclass(frozen=True)
class ManipulatorParams:
    """Link masses (kg), link lengths (m), gravitational acceleration (m/s^2)."""

    m1: float
    m2: float
    L1: float
    L2: float
    gravity: float = 9.81

    def __post_init__(self):
        if min(self.m1, self.m2, self.L1, self.L2) <= 0.0:
            raise ValueError("masses and lengths must be positive")

    @property
    def singularity_threshold(self) -> float:
        # |det J| = L1 L2 |sin(theta2)| ; below this the arm is treated as singular
        return 1e-4 * self.L1 * self.L2


@dataclass(frozen=True)
class JointState:
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        qdot = np.asarray(self.qdot, dtype=float)
        if q.shape != (2,) or qdot.shape != (2,):
            raise ValueError("joint state is a pair of 2-vectors")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(qdot))):
            raise ValueError("joint state must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "qdot", qdot)


@dataclass(frozen=True)
class TaskState:
    p: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise ValueError("task state must be finite")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "v", v)


# ---------------------------------------------------------------------------
# scalar kernels


def _mass_entries(p: ManipulatorParams, c2: float) -> tuple[float, float, float]:
    a = p.m2 * p.L1 * p.L2 * c2
    m22 = p.m2 * p.L2 * p.L2
    m11 = (p.m1 + p.m2) * p.L1 * p.L1 + m22 + 2.0 * a
    return m11, m22 + a, m22


def _coriolis_entries(
    p: ManipulatorParams, s2: float, qd1: float, qd2: float
) -> tuple[float, float]:
    h = p.m2 * p.L1 * p.L2 * s2
    return -h * (2.0 * qd1 * qd2 + qd2 * qd2), h * qd1 * qd1


def _gravity_entries(p: ManipulatorParams, c1: float, c12: float) -> tuple[float, float]:
    second = p.m2 * p.gravity * p.L2 * c12
    return (p.m1 + p.m2) * p.L1 * p.gravity * c1 + second, second


def _jacobian_entries(
    p: ManipulatorParams, s1: float, c1: float, s12: float, c12: float
) -> tuple[float, float, float, float]:
    a, b = p.L1 * s1, p.L2 * s12
    c, d = p.L1 * c1, p.L2 * c12
    return -a - b, -b, c + d, d


def _jacobian_dot_entries(
    p: ManipulatorParams,
    s1: float,
    c1: float,
    s12: float,
    c12: float,
    qd1: float,
    qd2: float,
) -> tuple[float, float, float, float]:
    w12 = qd1 + qd2
    a, b = p.L1 * c1 * qd1, p.L2 * c12 * w12
    c, d = p.L1 * s1 * qd1, p.L2 * s12 * w12
    return -a - b, -b, -c - d, -d


def _accel_entries(
    p: ManipulatorParams,
    c2: float,
    s2: float,
    qd1: float,
    qd2: float,
    c1: float,
    c12: float,
    tau1: float,
    tau2: float,
) -> tuple[float, float]:
    m11, m12, m22 = _mass_entries(p, c2)
    cv1, cv2 = _coriolis_entries(p, s2, qd1, qd2)
    gv1, gv2 = _gravity_entries(p, c1, c12)
    r1 = tau1 - cv1 - gv1
    r2 = tau2 - cv2 - gv2
    det = m11 * m22 - m12 * m12
    return (m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det


# ---------------------------------------------------------------------------
# public model functions


def mass_matrix(params: ManipulatorParams, q) -> np.ndarray:
    m11, m12, m22 = _mass_entries(params, math.cos(q[1]))
    return np.array([[m11, m12], [m12, m22]])


def coriolis_vector(params: ManipulatorParams, q, qdot) -> np.ndarray:
    return np.array(_coriolis_entries(params, math.sin(q[1]), qdot[0], qdot[1]))


def gravity_vector(params: ManipulatorParams, q) -> np.ndarray:
    return np.array(_gravity_entries(params, math.cos(q[0]), math.cos(q[0] + q[1])))


def forward_kinematics(params: ManipulatorParams, q) -> np.ndarray:
    t12 = q[0] + q[1]
    return np.array(
        [
            params.L1 * math.cos(q[0]) + params.L2 * math.cos(t12),
            params.L1 * math.sin(q[0]) + params.L2 * math.sin(t12),
        ]
    )


def jacobian(params: ManipulatorParams, q) -> np.ndarray:
    t12 = q[0] + q[1]
    j11, j12, j21, j22 = _jacobian_entries(
        params, math.sin(q[0]), math.cos(q[0]), math.sin(t12), math.cos(t12)
    )
    return np.array([[j11, j12], [j21, j22]])


def jacobian_det(params: ManipulatorParams, q) -> float:
    return params.L1 * params.L2 * math.sin(q[1])


def jacobian_dot(params: ManipulatorParams, q, qdot) -> np.ndarray:
    t12 = q[0] + q[1]
    jd11, jd12, jd21, jd22 = _jacobian_dot_entries(
        params,
        math.sin(q[0]),
        math.cos(q[0]),
        math.sin(t12),
        math.cos(t12),
        qdot[0],
        qdot[1],
    )
    return np.array([[jd11, jd12], [jd21, jd22]])


def task_state_from_joint(params: ManipulatorParams, state: JointState) -> TaskState:
    """End-effector position and velocity induced by a joint state."""
    return TaskState(
        p=forward_kinematics(params, state.q),
        v=jacobian(params, state.q) @ state.qdot,
    )


def inverse_kinematics(params: ManipulatorParams, p, elbow: str = "up") -> np.ndarray:
    """Joint angles reaching Cartesian p; elbow selects the sign of theta2."""
    r2 = p[0] * p[0] + p[1] * p[1]
    cos_t2 = (r2 - params.L1 ** 2 - params.L2 ** 2) / (2.0 * params.L1 * params.L2)
    if abs(cos_t2) > 1.0:
        raise ValueError(f"point {tuple(p)} is out of reach")
    t2 = math.acos(cos_t2)
    if elbow == "down":
        t2 = -t2
    elif elbow != "up":
        raise ValueError("elbow must be 'up' or 'down'")
    t1 = math.atan2(p[1], p[0]) - math.atan2(
        params.L2 * math.sin(t2), params.L1 + params.L2 * math.cos(t2)
    )
    return np.array([t1, t2])


def joint_accel(params: ManipulatorParams, q, qdot, tau) -> np.ndarray:
    """Forward dynamics: solve M(q) qddot = tau - c(q, qdot) - g(q)."""
    t12 = q[0] + q[1]
    return np.array(
        _accel_entries(
            params,
            math.cos(q[1]),
            math.sin(q[1]),
            qdot[0],
            qdot[1],
            math.cos(q[0]),
            math.cos(t12),
            tau[0],
            tau[1],
        )
    )


def kinetic_energy(params: ManipulatorParams, q, qdot) -> float:
    M = mass_matrix(params, q)
    qd = np.asarray(qdot, dtype=float)
    return 0.5 * float(qd @ M @ qd)


def task_space_terms(
    params: ManipulatorParams, q, qdot, det_threshold: Optional[float] = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cartesian-space mass, velocity and gravity terms (M_p, c_p, g_p).

    Raises NearSingular when |det J| falls at or below the threshold
    (default 1e-4 * L1 * L2) rather than regularizing.
    """
    J = jacobian(params, q)
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    threshold = params.singularity_threshold if det_threshold is None else det_threshold
    if abs(det) <= threshold:
        raise NearSingular(f"|det J| = {abs(det):.3e} at q = {tuple(q)}")
    j_inv = np.array([[J[1, 1], -J[0, 1]], [-J[1, 0], J[0, 0]]]) / det
    m_p = j_inv.T @ mass_matrix(params, q) @ j_inv
    qd = np.asarray(qdot, dtype=float)
    c_p = -m_p @ (jacobian_dot(params, q, qdot) @ qd) + j_inv.T @ coriolis_vector(
        params, q, qdot
    )
    g_p = j_inv.T @ gravity_vector(params, q)
    return m_p, c_p, g_p


# ---------------------------------------------------------------------------
# safe task-space controller


@dataclass(frozen=True)
class SafeTaskController:
    """Feedback-linearizing force controller with per-axis safety inputs.

    signs maps task coordinates onto the canonical error coordinates
    (x1_i = signs_i * (p_i - goal_i), x2_i = signs_i * v_i), so that each
    constrained axis sees its unsafe set as a left half plane. certificates
    holds one WeakCLBF per axis, or None for an unconstrained axis.
    """

    params: ManipulatorParams
    goal: np.ndarray
    signs: np.ndarray
    gains: GainSchedule
    certificates: Sequence[Optional[WeakCLBF]]
    unsafe_d: Sequence[Optional[float]]
    drift_variant: DriftVariant = "closed_loop"

    def __post_init__(self):
        object.__setattr__(self, "goal", np.asarray(self.goal, dtype=float))
        object.__setattr__(self, "signs", np.asarray(self.signs, dtype=float))
        if len(self.certificates) != 2 or len(self.unsafe_d) != 2:
            raise ValueError("one certificate slot per task axis required")
        if self.drift_variant not in ("closed_loop", "positive_feedback"):
            raise ValueError(f"unknown drift variant {self.drift_variant!r}")

    def __call__(self, t: float, x: np.ndarray) -> ControlAction:
        return self.compute((x[0], x[1]), (x[2], x[3]))

    def compute(self, q, qdot) -> ControlAction:
        p = self.params
        q1, q2 = float(q[0]), float(q[1])
        qd1, qd2 = float(qdot[0]), float(qdot[1])
        t12 = q1 + q2
        s1, c1 = math.sin(q1), math.cos(q1)
        s12, c12 = math.sin(t12), math.cos(t12)
        s2, c2 = math.sin(q2), math.cos(q2)

        j11, j12, j21, j22 = _jacobian_entries(p, s1, c1, s12, c12)
        det = j11 * j22 - j12 * j21
        if abs(det) <= p.singularity_threshold:
            raise NearSingular(f"|det J| = {abs(det):.3e} at q = ({q1}, {q2})")
        ji11, ji12 = j22 / det, -j12 / det
        ji21, ji22 = -j21 / det, j11 / det

        m11, m12, m22 = _mass_entries(p, c2)
        cv1, cv2 = _coriolis_entries(p, s2, qd1, qd2)
        gv1, gv2 = _gravity_entries(p, c1, c12)

        p1 = p.L1 * c1 + p.L2 * c12
        p2 = p.L1 * s1 + p.L2 * s12
        v1 = j11 * qd1 + j12 * qd2
        v2 = j21 * qd1 + j22 * qd2

        # M_p = Jinv' M Jinv
        a11 = m11 * ji11 + m12 * ji21
        a12 = m11 * ji12 + m12 * ji22
        a21 = m12 * ji11 + m22 * ji21
        a22 = m12 * ji12 + m22 * ji22
        mp11 = ji11 * a11 + ji21 * a21
        mp12 = ji11 * a12 + ji21 * a22
        mp21 = ji12 * a11 + ji22 * a21
        mp22 = ji12 * a12 + ji22 * a22

        jd11, jd12, jd21, jd22 = _jacobian_dot_entries(p, s1, c1, s12, c12, qd1, qd2)
        u1 = jd11 * qd1 + jd12 * qd2
        u2 = jd21 * qd1 + jd22 * qd2
        cp1 = -(mp11 * u1 + mp12 * u2) + ji11 * cv1 + ji21 * cv2
        cp2 = -(mp21 * u1 + mp22 * u2) + ji12 * cv1 + ji22 * cv2
        gp1 = ji11 * gv1 + ji21 * gv2
        gp2 = ji12 * gv1 + ji22 * gv2

        goal = self.goal
        signs = self.signs
        gains = self.gains
        positive = self.drift_variant == "positive_feedback"

        xbar = (
            (signs[0] * (p1 - goal[0]), signs[0] * v1),
            (signs[1] * (p2 - goal[1]), signs[1] * v2),
        )
        acc = [0.0, 0.0]
        a_safe = [0.0, 0.0]
        w_values = [math.nan, math.nan]
        margins = [math.inf, math.inf]
        for i in range(2):
            x1i, x2i = xbar[i]
            kp_i, kd_i = gains.kp[i], gains.kd[i]
            acc[i] = -kp_i * x1i - kd_i * x2i
            cert = self.certificates[i]
            if cert is None:
                continue
            w, g1, g2 = cert.value_and_grad(x1i, x2i)
            w_values[i] = w
            margins[i] = x1i - self.unsafe_d[i]
            if gains.k_safe[i] > 0.0:
                drift2 = kp_i * x1i + kd_i * x2i if positive else acc[i]
                a_safe[i] = gains.k_safe[i] * sontag_universal(
                    g1 * x2i + g2 * drift2, g2
                )

        sa0, sa1 = signs[0] * acc[0], signs[1] * acc[1]
        ss0, ss1 = signs[0] * a_safe[0], signs[1] * a_safe[1]
        fs1 = mp11 * ss0 + mp12 * ss1
        fs2 = mp21 * ss0 + mp22 * ss1
        f1 = mp11 * sa0 + mp12 * sa1 + cp1 + gp1 + fs1
        f2 = mp21 * sa0 + mp22 * sa1 + cp2 + gp2 + fs2
        tau1 = j11 * f1 + j21 * f2
        tau2 = j12 * f1 + j22 * f2
        return ControlAction(
            u=np.array((tau1, tau2)),
            force=np.array((f1, f2)),
            force_safe=np.array((fs1, fs2)),
            w_values=np.array(w_values),
            margins=np.array(margins),
        )


def safe_task_controller(
    params: ManipulatorParams,
    state: JointState,
    goal,
    gains: GainSchedule,
    certificates: Sequence[Optional[WeakCLBF]],
    unsafe_d: Sequence[Optional[float]],
    signs,
    drift_variant: DriftVariant = "closed_loop",
) -> tuple[np.ndarray, np.ndarray, ControlAction]:
    """One-shot evaluation of the safe task-space force law: (F, tau, diagnostics)."""
    controller = SafeTaskController(
        params=params,
        goal=goal,
        signs=signs,
        gains=gains,
        certificates=certificates,
        unsafe_d=unsafe_d,
        drift_variant=drift_variant,
    )
    action = controller.compute(state.q, state.qdot)
    return action.force, action.u, action


class ManipulatorPlant:
    """Joint-space plant x = (q, qdot), tau in, integrated by the simulator."""

    state_dim = 4

    def __init__(self, params: ManipulatorParams):
        self.params = params

    def derivative(self, t: float, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        q1, q2, qd1, qd2 = x[0], x[1], x[2], x[3]
        qdd1, qdd2 = _accel_entries(
            self.params,
            math.cos(q2),
            math.sin(q2),
            qd1,
            qd2,
            math.cos(q1),
            math.cos(q1 + q2),
            u[0],
            u[1],
        )
        return np.array((qd1, qd2, qdd1, qdd2))

    def task_state(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        q, qdot = x[:2], x[2:]
        return forward_kinematics(self.params, q), jacobian(self.params, q) @ qdot
