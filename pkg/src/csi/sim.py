"""Planar articulated-agent simulator.

A 4-joint chain agent driven by a PD position controller, with a closed-form
kinematic coupling from joint motion to root motion: the two "gait" joints
(0, 1) drive body-frame forward speed, the two "steer" joints (2, 3) drive
the heading rate. Dynamics are deterministic; every function here works on
single states and, where noted, on batches of states (leading axis).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DISC_FEATURE_NAMES = (
    "heading_cos",
    "heading_sin",
    "linvel_body_x",
    "linvel_body_y",
    "angvel",
    "joint_pos_0",
    "joint_pos_1",
    "joint_pos_2",
    "joint_pos_3",
    "joint_vel_0",
    "joint_vel_1",
    "joint_vel_2",
    "joint_vel_3",
    "tip_x",
    "tip_y",
)

DISC_FEATURE_DIM = len(DISC_FEATURE_NAMES)  # 5 + 2J + 2 with J = 4
LATENT_DIM = 8


class SimulationDiverged(RuntimeError):
    """Raised when the state leaves the sane regime (non-finite or too fast)."""


@dataclass(frozen=True)
class SimParams:
    """Physical constants of the planar agent.

    The PD gains and the root coupling are tuned so scripted sinusoid
    experts produce bounded, well-separated limit cycles.
    """

    num_joints: int = 4
    control_dt: float = 0.02        # policy rate 50 Hz
    substeps: int = 4               # PD rate 200 Hz
    kp: float = 20.0
    kd: float = 0.5
    q_max: float = 1.5              # joint limit, radians
    breach_margin: float = 0.2      # limit overshoot that terminates an episode
    g_v: float = 0.15               # gait-velocity -> forward-speed gain
    g_w: float = 0.8                # steer-offset -> heading-rate gain
    coupling_sign: tuple[float, float] = (1.0, -1.0)
    max_speed: float = 50.0         # |root_linvel| beyond this is divergence
    episode_horizon: int = 300      # control steps

    @property
    def sub_dt(self) -> float:
        return self.control_dt / self.substeps


@dataclass
class AgentState:
    """Full simulator state. All arrays are float64 and owned by the state."""

    root_pos: np.ndarray            # (2,) world frame, meters
    root_heading: float             # radians, wrapped to (-pi, pi]
    root_linvel: np.ndarray         # (2,) world frame, m/s
    root_angvel: float              # rad/s
    joint_pos: np.ndarray           # (J,) radians
    joint_vel: np.ndarray           # (J,) rad/s
    prev_action: np.ndarray         # (J,) last applied joint targets
    phase_time: float = 0.0         # seconds since episode start

    def copy(self) -> "AgentState":
        return AgentState(
            root_pos=self.root_pos.copy(),
            root_heading=self.root_heading,
            root_linvel=self.root_linvel.copy(),
            root_angvel=self.root_angvel,
            joint_pos=self.joint_pos.copy(),
            joint_vel=self.joint_vel.copy(),
            prev_action=self.prev_action.copy(),
            phase_time=self.phase_time,
        )


def default_state(params: SimParams = SimParams()) -> AgentState:
    """Canonical stand state: everything at zero."""
    j = params.num_joints
    return AgentState(
        root_pos=np.zeros(2),
        root_heading=0.0,
        root_linvel=np.zeros(2),
        root_angvel=0.0,
        joint_pos=np.zeros(j),
        joint_vel=np.zeros(j),
        prev_action=np.zeros(j),
    )


def wrap_angle(h):
    """Wrap to (-pi, pi]. Works elementwise on arrays."""
    w = np.mod(h + np.pi, 2.0 * np.pi) - np.pi
    # mod maps the upper boundary to -pi; fold it back to +pi
    return np.where(w == -np.pi, np.pi, w)


def pd_torque(action, joint_pos, joint_vel, params: SimParams):
    """PD position-controller torque: tau = kp*(a - q) - kd*qd."""
    return params.kp * (action - joint_pos) - params.kd * joint_vel


def _integrate_substeps(q, qd, pos, heading, action, params: SimParams):
    """Advance one control period (``substeps`` semi-implicit Euler steps).

    All inputs may carry a leading batch axis. Returns the new
    (q, qd, pos, heading, linvel_world, angvel) plus the substep-mean torque.
    """
    dt = params.sub_dt
    sign = np.asarray(params.coupling_sign)
    torque_acc = np.zeros_like(q)
    for _ in range(params.substeps):
        tau = pd_torque(action, q, qd, params)
        torque_acc = torque_acc + tau
        qd = qd + tau * dt              # unit joint inertia
        q = q + qd * dt
        v_fwd = params.g_v * np.mean(qd[..., :2] * sign, axis=-1)
        angvel = params.g_w * (q[..., 2] - q[..., 3])
        heading = wrap_angle(heading + angvel * dt)
        linvel = np.stack(
            [v_fwd * np.cos(heading), v_fwd * np.sin(heading)], axis=-1
        )
        pos = pos + linvel * dt
    return q, qd, pos, heading, linvel, angvel, torque_acc / params.substeps


def step_detailed(
    state: AgentState, action, params: SimParams = SimParams()
) -> tuple[AgentState, np.ndarray]:
    """Step one control period and also return the substep-mean torque.

    The action is clamped to the joint limits before being applied;
    ``prev_action`` stores the clamped value.
    """
    action = np.clip(np.asarray(action, dtype=float), -params.q_max, params.q_max)
    q, qd, pos, heading, linvel, angvel, torque = _integrate_substeps(
        state.joint_pos, state.joint_vel, state.root_pos, state.root_heading,
        action, params,
    )
    new = AgentState(
        root_pos=pos,
        root_heading=float(heading),
        root_linvel=linvel,
        root_angvel=float(angvel),
        joint_pos=q,
        joint_vel=qd,
        prev_action=action,
        phase_time=state.phase_time + params.control_dt,
    )
    if not _state_finite(new) or np.linalg.norm(new.root_linvel) > params.max_speed:
        raise SimulationDiverged(
            f"simulation diverged at t={new.phase_time:.2f}s"
        )
    return new, torque


def step(state: AgentState, action, params: SimParams = SimParams()) -> AgentState:
    """Step one control period (50 Hz) of the PD-driven dynamics."""
    new, _ = step_detailed(state, action, params)
    return new


def _state_finite(state: AgentState) -> bool:
    return bool(
        np.isfinite(state.root_pos).all()
        and math.isfinite(state.root_heading)
        and np.isfinite(state.root_linvel).all()
        and math.isfinite(state.root_angvel)
        and np.isfinite(state.joint_pos).all()
        and np.isfinite(state.joint_vel).all()
    )


def joint_limit_breached(joint_pos, params: SimParams = SimParams()):
    """True where any joint exceeds the limit by more than the margin."""
    return np.any(
        np.abs(joint_pos) > params.q_max + params.breach_margin, axis=-1
    )


def chain_tip(joint_pos):
    """Tip of the unit-length link chain, in the root frame.

    Link k points along the sum of the first k+1 joint angles; the tip is
    the sum of the link direction vectors, so the straight chain reaches
    (J, 0).
    """
    theta = np.cumsum(joint_pos, axis=-1)
    return np.stack(
        [np.sum(np.cos(theta), axis=-1), np.sum(np.sin(theta), axis=-1)], axis=-1
    )


def world_to_body(vec, heading):
    c, s = np.cos(heading), np.sin(heading)
    x, y = vec[..., 0], vec[..., 1]
    return np.stack([c * x + s * y, -s * x + c * y], axis=-1)


def body_to_world(vec, heading):
    c, s = np.cos(heading), np.sin(heading)
    x, y = vec[..., 0], vec[..., 1]
    return np.stack([c * x - s * y, s * x + c * y], axis=-1)


def disc_features(heading, linvel_world, angvel, joint_pos, joint_vel):
    """Discriminator feature vector; batched over any leading axes.

    Layout: [cos h, sin h, body-frame linvel (2), angvel,
    joint_pos (J), joint_vel (J), chain tip (2)].
    """
    heading = np.asarray(heading, dtype=float)
    v_body = world_to_body(np.asarray(linvel_world, dtype=float), heading)
    return np.concatenate(
        [
            np.stack([np.cos(heading), np.sin(heading)], axis=-1),
            v_body,
            np.asarray(angvel, dtype=float)[..., None],
            np.asarray(joint_pos, dtype=float),
            np.asarray(joint_vel, dtype=float),
            chain_tip(joint_pos),
        ],
        axis=-1,
    )


def observe_disc(state: AgentState) -> np.ndarray:
    """Discriminator observation of a single state (length 15 for J = 4)."""
    if not _state_finite(state):
        raise SimulationDiverged("cannot featurize a non-finite state")
    return disc_features(
        state.root_heading, state.root_linvel, state.root_angvel,
        state.joint_pos, state.joint_vel,
    )


def policy_features_base(prev_action, heading, linvel_world, joint_pos, joint_vel):
    """Proprioceptive part of the policy observation (no latent slot):
    [prev_action (J), body-frame linvel (2), cos h, sin h, joint_pos (J),
    joint_vel (J)]. Batched over any leading axes."""
    heading = np.asarray(heading, dtype=float)
    v_body = world_to_body(np.asarray(linvel_world, dtype=float), heading)
    return np.concatenate(
        [
            np.asarray(prev_action, dtype=float),
            v_body,
            np.stack([np.cos(heading), np.sin(heading)], axis=-1),
            np.asarray(joint_pos, dtype=float),
            np.asarray(joint_vel, dtype=float),
        ],
        axis=-1,
    )


def policy_features(prev_action, heading, linvel_world, joint_pos, joint_vel, z):
    """Full policy/value observation: the proprioceptive base plus the
    8-dim skill latent appended last."""
    base = policy_features_base(prev_action, heading, linvel_world, joint_pos, joint_vel)
    return np.concatenate([base, np.asarray(z, dtype=float)], axis=-1)


def observe_policy(state: AgentState, z) -> np.ndarray:
    """Policy observation of a single state (length 3J + 12 = 24 for J = 4)."""
    z = np.asarray(z, dtype=float)
    if not np.isfinite(z).all():
        raise ValueError("latent z must be finite")
    return policy_features(
        state.prev_action, state.root_heading, state.root_linvel,
        state.joint_pos, state.joint_vel, z,
    )


def reconstruct_state(features, params: SimParams = SimParams()) -> AgentState:
    """Invert ``observe_disc`` up to the world-frame root position.

    Root position is reset to the origin and ``prev_action`` is seeded with
    the joint positions so the PD controller starts torque-free;
    ``observe_disc`` of the result reproduces the input features.
    """
    f = np.asarray(features, dtype=float)
    if f.shape != (DISC_FEATURE_DIM,):
        raise ValueError(f"expected a {DISC_FEATURE_DIM}-vector, got {f.shape}")
    j = params.num_joints
    heading = math.atan2(f[1], f[0])
    linvel = body_to_world(f[2:4], heading)
    joint_pos = f[5:5 + j].copy()
    joint_vel = f[5 + j:5 + 2 * j].copy()
    return AgentState(
        root_pos=np.zeros(2),
        root_heading=heading,
        root_linvel=linvel,
        root_angvel=float(f[4]),
        joint_pos=joint_pos,
        joint_vel=joint_vel,
        prev_action=np.clip(joint_pos, -params.q_max, params.q_max),
        phase_time=0.0,
    )
