"""Clipped-surrogate policy optimization over the conditional policy.

Rollout storage, the per-step reward assembly (style reward plus smoothness
penalties), generalized advantage estimation, and the PPO update that steps
the policy, the value function, and the condition encoder together - the
encoder is trained purely by the gradients flowing through its latent
output z into the policy and value inputs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import nets
from .nets import NetworkParameters

POLICY_BASE_DIM = 16            # observation dims before the latent slot


@dataclass(frozen=True)
class RewardWeights:
    """Weights of the total per-step reward (penalty weights are negative)."""

    style: float = 1.0
    dof_velocity: float = -1e-4
    energy: float = -2e-5
    action_rate: float = -1e-2
    torque: float = -1e-4


def regularization_rewards(joint_vel_t, joint_vel_next, torque_mean, action, prev_action):
    """Smoothness terms, each summed over every DoF and nonnegative:
    r_v = sum (qd_t - qd_t+1)^2, r_ep = sum |tau * qd_t|,
    r_a = sum (a_t - a_t-1)^2, r_t = sum |tau|."""
    qd_t = np.asarray(joint_vel_t, float)
    dv = qd_t - np.asarray(joint_vel_next, float)
    tau = np.asarray(torque_mean, float)
    da = np.asarray(action, float) - np.asarray(prev_action, float)
    r_v = np.sum(dv * dv, axis=-1)
    r_ep = np.sum(np.abs(tau * qd_t), axis=-1)
    r_a = np.sum(da * da, axis=-1)
    r_t = np.sum(np.abs(tau), axis=-1)
    return r_v, r_ep, r_a, r_t


def total_reward(r_s, regs, weights: RewardWeights = RewardWeights()):
    """Weighted sum of the style reward and the four penalty terms."""
    r_v, r_ep, r_a, r_t = regs
    return (weights.style * np.asarray(r_s, float)
            + weights.dof_velocity * np.asarray(r_v, float)
            + weights.energy * np.asarray(r_ep, float)
            + weights.action_rate * np.asarray(r_a, float)
            + weights.torque * np.asarray(r_t, float))


def gae_advantages(rewards, values, dones, gamma, lam):
    """Generalized advantage estimation.

    ``values`` carries one extra trailing step (the bootstrap value of the
    state after the last reward); ``dones`` cut both the TD target and the
    advantage recursion. Returns (advantages, returns), un-normalized.
    """
    rewards = np.asarray(rewards, float)
    values = np.asarray(values, float)
    dones = np.asarray(dones, float)
    t_len = rewards.shape[0]
    if values.shape[0] != t_len + 1 or dones.shape[0] != t_len:
        raise ValueError("rewards (T), values (T+1) and dones (T) must align")
    adv = np.zeros_like(rewards)
    carry = np.zeros_like(rewards[0] if rewards.ndim > 1 else np.float64(0.0))
    for t in reversed(range(t_len)):
        not_done = 1.0 - dones[t]
        delta = rewards[t] + gamma * values[t + 1] * not_done - values[t]
        carry = delta + gamma * lam * not_done * carry
        adv[t] = carry
    return adv, adv + values[:-1]


@dataclass
class RolloutBuffer:
    """Per-step records of one collection phase, laid out (T, E, ...)."""

    obs_base: np.ndarray            # (T, E, 16)
    skill_ids: np.ndarray           # (T, E)
    actions: np.ndarray             # (T, E, J) raw policy samples
    log_probs: np.ndarray           # (T, E)
    values: np.ndarray              # (T, E)
    r_style: np.ndarray             # (T, E)
    r_dof_velocity: np.ndarray
    r_energy: np.ndarray
    r_action_rate: np.ndarray
    r_torque: np.ndarray
    rewards: np.ndarray             # (T, E) weighted totals
    dones: np.ndarray               # (T, E)
    bootstrap_value: np.ndarray     # (E,)
    episode_records: list = field(default_factory=list)  # (skill_id, return)

    @property
    def horizon(self):
        return self.log_probs.shape[0]

    @property
    def num_envs(self):
        return self.log_probs.shape[1]

    @property
    def num_steps(self):
        return self.log_probs.size


@dataclass
class PPOSettings:
    clip: float = 0.2
    epochs: int = 3
    minibatch_size: int = 256
    gamma: float = 0.95
    lam: float = 0.95
    value_coef: float = 0.5


@dataclass
class PPOStats:
    policy_loss: float
    value_loss: float
    mean_ratio: float
    clip_fraction: float
    skipped_minibatches: int


def ppo_update(
    policy: NetworkParameters,
    value: NetworkParameters,
    encoder: NetworkParameters,
    log_std: np.ndarray,
    buffer: RolloutBuffer,
    settings: PPOSettings,
    rng: np.random.Generator,
    opt_policy: nets.OptimizerState,
    opt_value: nets.OptimizerState,
    opt_encoder: nets.OptimizerState,
) -> PPOStats:
    """One PPO phase over the buffer: minibatched epochs of the clipped
    surrogate plus value regression, advantages normalized per update.

    The policy optimizer owns [policy arrays..., log_std]. The latent z is
    recomputed from the current encoder every minibatch, so encoder
    updates propagate into the ratio within the epoch loop.
    """
    t_len, n_envs = buffer.log_probs.shape
    n = t_len * n_envs
    num_skills = encoder.spec.layer_sizes[0]
    eye = np.eye(num_skills)

    values_ext = np.concatenate(
        [buffer.values, buffer.bootstrap_value[None, :]], axis=0
    )
    adv, ret = gae_advantages(
        buffer.rewards, values_ext, buffer.dones, settings.gamma, settings.lam
    )
    adv = adv.reshape(n)
    adv = (adv - adv.mean()) / (adv.std() + 1e-8)
    ret = ret.reshape(n)

    obs_base = buffer.obs_base.reshape(n, -1)
    ids = buffer.skill_ids.reshape(n)
    actions = buffer.actions.reshape(n, -1)
    logp_old = buffer.log_probs.reshape(n)

    pol_losses, val_losses, ratios, clipped_fracs = [], [], [], []
    skipped = 0
    for _ in range(settings.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, settings.minibatch_size):
            mb = perm[start:start + settings.minibatch_size]
            m = len(mb)
            z, cache_e = nets.forward(encoder, eye[ids[mb]])
            obs = np.concatenate([obs_base[mb], z], axis=1)

            mean, cache_p = nets.forward(policy, obs)
            lp = nets.gaussian_log_prob(mean, log_std, actions[mb])
            ratio = np.exp(lp - logp_old[mb])
            if not np.isfinite(ratio).all():
                warnings.warn("non-finite PPO ratio; minibatch skipped", stacklevel=2)
                skipped += 1
                continue
            a_mb = adv[mb]
            unclipped = ratio * a_mb
            clipped = np.clip(ratio, 1.0 - settings.clip, 1.0 + settings.clip) * a_mb
            policy_loss = -float(np.mean(np.minimum(unclipped, clipped)))

            active = unclipped <= clipped   # where the raw ratio attains the min
            dlogp = -(a_mb * ratio * active) / m
            std = np.exp(nets.clamp_log_std(log_std))
            diff = actions[mb] - mean
            grad_mean = dlogp[:, None] * (diff / (std * std))
            grad_log_std = np.sum(
                dlogp[:, None] * ((diff * diff) / (std * std) - 1.0), axis=0
            )
            pgrads, gobs_p = nets.backward(policy, cache_p, grad_mean)

            v, cache_v = nets.forward(value, obs)
            v = v[:, 0]
            verr = v - ret[mb]
            value_loss = float(np.mean(verr * verr))
            gv = (settings.value_coef * 2.0 * verr / m)[:, None]
            vgrads, gobs_v = nets.backward(value, cache_v, gv)

            gz = gobs_p[:, POLICY_BASE_DIM:] + gobs_v[:, POLICY_BASE_DIM:]
            egrads, _ = nets.backward(encoder, cache_e, gz)

            nets.adam_step(
                policy.arrays() + [log_std],
                pgrads.arrays() + [grad_log_std],
                opt_policy,
            )
            np.clip(log_std, nets.LOG_STD_MIN, nets.LOG_STD_MAX, out=log_std)
            nets.adam_step(value.arrays(), vgrads.arrays(), opt_value)
            nets.adam_step(encoder.arrays(), egrads.arrays(), opt_encoder)

            pol_losses.append(policy_loss)
            val_losses.append(value_loss)
            ratios.append(float(np.mean(ratio)))
            clipped_fracs.append(float(np.mean(~active)))

    return PPOStats(
        policy_loss=float(np.mean(pol_losses)) if pol_losses else float("nan"),
        value_loss=float(np.mean(val_losses)) if val_losses else float("nan"),
        mean_ratio=float(np.mean(ratios)) if ratios else float("nan"),
        clip_fraction=float(np.mean(clipped_fracs)) if clipped_fracs else float("nan"),
        skipped_minibatches=skipped,
    )
