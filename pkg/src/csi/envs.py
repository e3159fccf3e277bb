"""Batched environment instances stepped in lockstep.

``VecEnv`` keeps E independent episodes as struct-of-arrays state and
advances them with the same integrator as the single-state simulator, so
batched stepping is bit-identical to stepping each instance alone.
Termination (divergence, joint-limit breach, horizon) and mixed-init
resets are handled per instance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sim, skills
from .sim import SimParams
from .skills import ReferenceDataset


@dataclass
class VecStepResult:
    """Everything one batched control step produces, captured before any
    auto-reset rewrites the state arrays."""

    disc_t: np.ndarray              # (E, F) features before the step
    disc_next: np.ndarray           # (E, F) features after the step
    skill_ids: np.ndarray           # (E,) labels commanded during the step
    action: np.ndarray              # (E, J) clamped applied action
    prev_action: np.ndarray         # (E, J) previous applied action
    joint_vel_t: np.ndarray         # (E, J)
    joint_vel_next: np.ndarray      # (E, J)
    torque_mean: np.ndarray         # (E, J) substep-mean torque
    done: np.ndarray                # (E,) bool
    diverged: np.ndarray            # (E,) bool (features may be non-finite)


class VecEnv:
    def __init__(
        self,
        num_envs: int,
        dataset: ReferenceDataset,
        rng: np.random.Generator,
        params: SimParams = SimParams(),
        reset_mode: str = "mixed",
        auto_reset: bool = True,
    ):
        self.num_envs = num_envs
        self.dataset = dataset
        self.rng = rng
        self.params = params
        self.reset_mode = reset_mode
        self.auto_reset = auto_reset
        j = params.num_joints
        self.q = np.zeros((num_envs, j))
        self.qd = np.zeros((num_envs, j))
        self.pos = np.zeros((num_envs, 2))
        self.heading = np.zeros(num_envs)
        self.linvel = np.zeros((num_envs, 2))
        self.angvel = np.zeros(num_envs)
        self.prev_action = np.zeros((num_envs, j))
        self.steps = np.zeros(num_envs, dtype=np.int64)
        self.skill_ids = np.zeros(num_envs, dtype=np.int64)
        self.reset_all()

    @property
    def num_skills(self) -> int:
        return self.dataset.num_skills

    def reset_all(self):
        for i in range(self.num_envs):
            self.reset_env(i)

    def reset_env(self, i: int):
        res = skills.reset(self.reset_mode, self.dataset, self.rng, self.params)
        s = res.state
        self.q[i] = s.joint_pos
        self.qd[i] = s.joint_vel
        self.pos[i] = s.root_pos
        self.heading[i] = s.root_heading
        self.linvel[i] = s.root_linvel
        self.angvel[i] = s.root_angvel
        self.prev_action[i] = s.prev_action
        self.steps[i] = 0
        self.skill_ids[i] = res.skill.skill_id

    def set_skills(self, skill_ids):
        self.skill_ids[:] = np.asarray(skill_ids, dtype=np.int64)

    def observe_disc(self) -> np.ndarray:
        return sim.disc_features(
            self.heading, self.linvel, self.angvel, self.q, self.qd
        )

    def observe_policy_base(self) -> np.ndarray:
        return sim.policy_features_base(
            self.prev_action, self.heading, self.linvel, self.q, self.qd
        )

    def step(self, actions) -> VecStepResult:
        p = self.params
        a = np.clip(np.asarray(actions, dtype=float), -p.q_max, p.q_max)
        disc_t = self.observe_disc()
        prev_action = self.prev_action.copy()
        qd_t = self.qd.copy()
        ids = self.skill_ids.copy()

        q, qd, pos, heading, linvel, angvel, torque = sim._integrate_substeps(
            self.q, self.qd, self.pos, self.heading, a, p
        )
        finite = (
            np.isfinite(q).all(axis=1)
            & np.isfinite(qd).all(axis=1)
            & np.isfinite(linvel).all(axis=1)
            & np.isfinite(heading)
        )
        diverged = ~finite | (
            np.where(finite, np.linalg.norm(np.nan_to_num(linvel), axis=1), np.inf)
            > p.max_speed
        )
        breach = sim.joint_limit_breached(q, p)
        self.q, self.qd, self.pos = q, qd, pos
        self.heading, self.linvel, self.angvel = heading, linvel, angvel
        self.prev_action = a.copy()
        self.steps += 1

        disc_next = self.observe_disc()
        qd_next = qd.copy()
        if self.auto_reset:
            done = diverged | breach | (self.steps >= p.episode_horizon)
            for i in np.flatnonzero(done):
                self.reset_env(i)
        else:
            done = diverged.copy()

        return VecStepResult(
            disc_t=disc_t,
            disc_next=disc_next,
            skill_ids=ids,
            action=a,
            prev_action=prev_action,
            joint_vel_t=qd_t,
            joint_vel_next=qd_next,
            torque_mean=torque,
            done=done,
            diverged=diverged,
        )
