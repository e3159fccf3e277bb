"""End-to-end adversarial imitation training.

One iteration = collect a batch of conditioned rollouts (style rewards come
from a read-only snapshot of the discriminator), run a few discriminator
updates on real / replayed-fake / mismatched samples, then a PPO phase over
the rollout buffer. Checkpoints are one JSON document per network plus a
YAML bundle manifest; metrics append to a fixed-column CSV.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from . import discriminator as disc_mod
from . import nets, ppo
from .discriminator import (
    ConditionalDiscriminator,
    DiscLossWeights,
    FakeReplayBuffer,
    assemble_batch,
)
from .envs import VecEnv
from .ppo import PPOSettings, RewardWeights, RolloutBuffer
from .sim import LATENT_DIM, SimParams
from .skills import ReferenceDataset, SkillLabel

BUNDLE_FORMAT_VERSION = 1
METRIC_BASE_COLUMNS = (
    "iteration", "env_steps", "L_I", "L_CA", "L_GP", "L_WD",
    "mean_r_s", "mean_return",
)


class TrainingDiverged(RuntimeError):
    pass


class CheckpointError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    """Every tunable of a training run.

    The first block mirrors the reference hyperparameter table verbatim
    (desk-scale values active; paper-scale values noted); the second block
    is desk-scale plumbing.
    """

    style_reward_weight: float = 1.0
    conditional_imitation_loss_weight: float = 1.0
    condition_aware_loss_weight: float = 1.0
    weight_decay_loss_weight: float = 1e-4
    gradient_penalty_weight: float = 5.0
    dof_velocity_penalty_weight: float = -1e-4
    action_rate_penalty_weight: float = -1e-2
    energy_penalty_weight: float = -2e-5
    torque_penalty_weight: float = -1e-4
    adjust_ratio: float = 0.5               # reserved; not consumed anywhere
    discriminator_batch_size: int = 128     # paper-scale: 512
    minibatch_size: int = 256               # paper-scale: 32768
    learning_rate: float = 3e-4             # paper-scale: 5e-5
    discount: float = 0.95
    replay_buffer_size: int = 100_000       # paper-scale: 1e6
    ppo_clip: float = 0.2
    gae: float = 0.95

    env_count: int = 64
    horizon: int = 32
    total_steps: int = 500_000
    seed: int = 0
    ppo_epochs: int = 3
    disc_updates_per_iter: int = 4
    policy_hidden: tuple = (128, 64)
    value_hidden: tuple = (128, 64)
    disc_hidden: tuple = (128, 64)
    encoder_hidden: tuple = (64, 64)
    loss_mode: str = disc_mod.MODE_VANILLA
    disc_input_norm: bool = False           # standardize disc inputs by dataset stats
    init_log_std: float = -1.0
    checkpoint_interval: int = 200          # iterations between checkpoints

    def __post_init__(self):
        if not (0.0 < self.discount <= 1.0):
            raise ValueError("discount must lie in (0, 1]")
        if self.ppo_clip <= 0:
            raise ValueError("ppo_clip must be positive")
        self.policy_hidden = tuple(self.policy_hidden)
        self.value_hidden = tuple(self.value_hidden)
        self.disc_hidden = tuple(self.disc_hidden)
        self.encoder_hidden = tuple(self.encoder_hidden)

    def reward_weights(self) -> RewardWeights:
        return RewardWeights(
            style=self.style_reward_weight,
            dof_velocity=self.dof_velocity_penalty_weight,
            energy=self.energy_penalty_weight,
            action_rate=self.action_rate_penalty_weight,
            torque=self.torque_penalty_weight,
        )

    def disc_loss_weights(self) -> DiscLossWeights:
        return DiscLossWeights(
            imitation=self.conditional_imitation_loss_weight,
            condition_aware=self.condition_aware_loss_weight,
            weight_decay=self.weight_decay_loss_weight,
            gradient_penalty=self.gradient_penalty_weight,
        )

    def ppo_settings(self) -> PPOSettings:
        return PPOSettings(
            clip=self.ppo_clip,
            epochs=self.ppo_epochs,
            minibatch_size=self.minibatch_size,
            gamma=self.discount,
            lam=self.gae,
        )

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = list(v) if isinstance(v, tuple) else v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)


def encode_condition(encoder: nets.NetworkParameters, skill_id: int) -> np.ndarray:
    """Latent z for one skill label: encoder(onehot(skill_id))."""
    k = encoder.spec.layer_sizes[0]
    if not 0 <= skill_id < k:
        raise ValueError(f"skill id {skill_id} out of range [0, {k})")
    onehot = np.zeros(k)
    onehot[skill_id] = 1.0
    z, _ = nets.forward(encoder, onehot)
    return z


def latent_table(encoder: nets.NetworkParameters) -> np.ndarray:
    """(K, latent) table of z vectors for all skills."""
    k = encoder.spec.layer_sizes[0]
    z, _ = nets.forward(encoder, np.eye(k))
    return z


@dataclass
class ConditionedPolicy:
    """Frozen inference view of a trained controller."""

    policy: nets.NetworkParameters
    encoder: nets.NetworkParameters
    log_std: np.ndarray
    num_skills: int
    _z: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self._z is None:
            self._z = latent_table(self.encoder)

    def observe(self, obs_base, skill_ids):
        z = self._z[np.asarray(skill_ids, dtype=np.int64)]
        return np.concatenate([np.atleast_2d(obs_base), np.atleast_2d(z)], axis=-1)

    def act(self, obs_base, skill_ids, rng=None, stochastic=True):
        mean, _ = nets.forward(self.policy, self.observe(obs_base, skill_ids))
        if stochastic:
            if rng is None:
                raise ValueError("stochastic action sampling needs an rng")
            action, _ = nets.gaussian_sample(mean, self.log_std, rng)
            return action
        return mean


class Trainer:
    def __init__(
        self,
        config: TrainConfig,
        dataset: ReferenceDataset,
        out_dir,
        sim_params: SimParams = SimParams(),
        resolved_tree: dict | None = None,
    ):
        self.config = config
        self.dataset = dataset
        self.params = sim_params
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        # written as the run snapshot; a full config tree (when given)
        # reloads directly via `csi train --config <snapshot>`
        self.resolved_tree = resolved_tree or {"train": config.to_dict()}

        k = dataset.num_skills
        f_dim = dataset.feature_dim
        j = sim_params.num_joints
        obs_dim = ppo.POLICY_BASE_DIM + LATENT_DIM

        seq = np.random.SeedSequence(config.seed)
        (init_seq, env_seq, act_seq, batch_seq, perm_seq) = seq.spawn(5)
        init_seeds = init_seq.generate_state(4)
        self.env_rng = np.random.default_rng(env_seq)
        self.action_rng = np.random.default_rng(act_seq)
        self.batch_rng = np.random.default_rng(batch_seq)
        self.perm_rng = np.random.default_rng(perm_seq)

        self.policy = nets.init_params(nets.NetworkSpec(
            (obs_dim, *config.policy_hidden, j), "relu", "linear",
            seed=int(init_seeds[0]),
        ))
        self.value = nets.init_params(nets.NetworkSpec(
            (obs_dim, *config.value_hidden, 1), "relu", "linear",
            seed=int(init_seeds[1]),
        ))
        self.encoder = nets.init_params(nets.NetworkSpec(
            (k, *config.encoder_hidden, LATENT_DIM), "relu", "linear",
            seed=int(init_seeds[2]),
        ))
        self.log_std = np.full(j, float(config.init_log_std))
        shift = scale = None
        if config.disc_input_norm:
            frames = dataset.all_frames()
            shift = frames.mean(axis=0)
            scale = frames.std(axis=0)
            scale[scale < 1e-6] = 1.0
        self.disc = ConditionalDiscriminator.create(
            num_skills=k, feature_dim=f_dim, hidden=config.disc_hidden,
            seed=int(init_seeds[3]), mode=config.loss_mode,
            feature_shift=shift, feature_scale=scale,
        )

        lr = config.learning_rate
        self.opt_policy = nets.adam_init(self.policy.arrays() + [self.log_std], lr)
        self.opt_value = nets.adam_init(self.value.arrays(), lr)
        self.opt_encoder = nets.adam_init(self.encoder.arrays(), lr)
        self.opt_disc = nets.adam_init(self.disc.params.arrays(), lr)

        self.env = VecEnv(
            config.env_count, dataset, self.env_rng, sim_params, reset_mode="mixed"
        )
        self.fake_buffer = FakeReplayBuffer(config.replay_buffer_size, f_dim)
        self.env_steps = 0
        self.iteration = 0
        self._ep_return = np.zeros(config.env_count)
        self.metrics_path = self.out_dir / "metrics.csv"
        self._metric_columns = list(METRIC_BASE_COLUMNS) + [
            f"return_{label.name}" for label in dataset.skills
        ]
        if not self.metrics_path.exists():
            with open(self.metrics_path, "w", newline="") as fh:
                csv.writer(fh).writerow(self._metric_columns)

    # -- rollout collection --------------------------------------------------

    def collect_rollouts(self) -> RolloutBuffer:
        cfg = self.config
        t_len, n_envs = cfg.horizon, cfg.env_count
        j = self.params.num_joints
        z_table = latent_table(self.encoder)
        weights = cfg.reward_weights()

        obs_base = np.empty((t_len, n_envs, ppo.POLICY_BASE_DIM))
        skill_ids = np.empty((t_len, n_envs), dtype=np.int64)
        actions = np.empty((t_len, n_envs, j))
        log_probs = np.empty((t_len, n_envs))
        values = np.empty((t_len, n_envs))
        comps = {name: np.empty((t_len, n_envs)) for name in
                 ("r_style", "r_dof_velocity", "r_energy", "r_action_rate", "r_torque")}
        rewards = np.empty((t_len, n_envs))
        dones = np.empty((t_len, n_envs))
        episode_records = []

        for t in range(t_len):
            base = self.env.observe_policy_base()
            ids = self.env.skill_ids.copy()
            obs = np.concatenate([base, z_table[ids]], axis=1)
            mean, _ = nets.forward(self.policy, obs)
            act, logp = nets.gaussian_sample(mean, self.log_std, self.action_rng)
            val, _ = nets.forward(self.value, obs)

            out = self.env.step(act)
            ok = ~out.diverged
            r_s = np.zeros(n_envs)
            if ok.any():
                r_s[ok] = self.disc.style_reward(
                    out.disc_t[ok], out.disc_next[ok], out.skill_ids[ok]
                )
            regs = ppo.regularization_rewards(
                out.joint_vel_t, out.joint_vel_next, out.torque_mean,
                out.action, out.prev_action,
            )
            regs = tuple(np.where(ok, r, 0.0) for r in regs)
            total = ppo.total_reward(r_s, regs, weights)

            if ok.any():
                self.fake_buffer.push(
                    out.disc_t[ok], out.disc_next[ok], out.skill_ids[ok]
                )

            obs_base[t] = base
            skill_ids[t] = ids
            actions[t] = act
            log_probs[t] = logp
            values[t] = val[:, 0]
            comps["r_style"][t] = r_s
            comps["r_dof_velocity"][t] = regs[0]
            comps["r_energy"][t] = regs[1]
            comps["r_action_rate"][t] = regs[2]
            comps["r_torque"][t] = regs[3]
            rewards[t] = total
            dones[t] = out.done.astype(float)

            self._ep_return += total
            for i in np.flatnonzero(out.done):
                episode_records.append((int(out.skill_ids[i]), float(self._ep_return[i])))
                self._ep_return[i] = 0.0

        final_obs = np.concatenate(
            [self.env.observe_policy_base(), z_table[self.env.skill_ids]], axis=1
        )
        bootstrap, _ = nets.forward(self.value, final_obs)
        self.env_steps += t_len * n_envs
        return RolloutBuffer(
            obs_base=obs_base, skill_ids=skill_ids, actions=actions,
            log_probs=log_probs, values=values,
            r_style=comps["r_style"], r_dof_velocity=comps["r_dof_velocity"],
            r_energy=comps["r_energy"], r_action_rate=comps["r_action_rate"],
            r_torque=comps["r_torque"], rewards=rewards, dones=dones,
            bootstrap_value=bootstrap[:, 0], episode_records=episode_records,
        )

    # -- updates -------------------------------------------------------------

    def update_discriminator(self, buffer: RolloutBuffer) -> dict:
        # collect_rollouts feeds the replay buffer before this runs, so the
        # empty-buffer fallback path of assemble_batch is never needed here
        cfg = self.config
        sizes = (cfg.discriminator_batch_size,) * 3
        totals = []
        comps_acc: dict[str, list] = {}
        for _ in range(cfg.disc_updates_per_iter):
            batch = assemble_batch(
                self.dataset, self.fake_buffer, self.batch_rng, sizes=sizes,
            )
            total, grads, comps = self.disc.total_loss(batch, cfg.disc_loss_weights())
            nets.adam_step(self.disc.params.arrays(), grads.arrays(), self.opt_disc)
            totals.append(total)
            for name, v in comps.items():
                comps_acc.setdefault(name, []).append(v)
        out = {name: float(np.mean(vs)) for name, vs in comps_acc.items()}
        out["total"] = float(np.mean(totals))
        return out

    def run_iteration(self) -> dict:
        buffer = self.collect_rollouts()
        try:
            disc_stats = self.update_discriminator(buffer)
            stats = ppo.ppo_update(
                self.policy, self.value, self.encoder, self.log_std, buffer,
                self.config.ppo_settings(), self.perm_rng,
                self.opt_policy, self.opt_value, self.opt_encoder,
            )
        except nets.NonFiniteGradient as exc:
            diag = self.save_checkpoint(self.out_dir / "checkpoint_diagnostic")
            raise TrainingDiverged(
                f"{exc} at iteration {self.iteration}; diagnostic checkpoint at {diag}"
            ) from exc
        self.iteration += 1
        row = self._log_metrics(buffer, disc_stats, stats)
        self._check_finite(disc_stats, stats)
        return row

    def train(self) -> "TrainResult":
        cfg = self.config
        (self.out_dir / "config_resolved.yaml").write_text(
            yaml.safe_dump(self.resolved_tree, sort_keys=False), encoding="utf-8"
        )
        steps_per_iter = cfg.env_count * cfg.horizon
        n_iters = max(1, math.ceil(cfg.total_steps / steps_per_iter))
        t0 = time.time()
        for _ in range(n_iters):
            self.run_iteration()
            if cfg.checkpoint_interval and self.iteration % cfg.checkpoint_interval == 0:
                self.save_checkpoint(self.out_dir / f"checkpoint_{self.iteration:06d}")
        final = self.save_checkpoint(self.out_dir / "checkpoint_final")
        return TrainResult(
            checkpoint_dir=final,
            metrics_path=self.metrics_path,
            iterations=self.iteration,
            env_steps=self.env_steps,
            wall_seconds=time.time() - t0,
        )

    # -- bookkeeping ---------------------------------------------------------

    def _log_metrics(self, buffer, disc_stats, ppo_stats) -> dict:
        k = self.dataset.num_skills
        per_skill = [float("nan")] * k
        by_skill: dict[int, list] = {}
        for skill_id, ret in buffer.episode_records:
            by_skill.setdefault(skill_id, []).append(ret)
        for skill_id, rets in by_skill.items():
            per_skill[skill_id] = float(np.mean(rets))
        all_rets = [r for _, r in buffer.episode_records]
        row = {
            "iteration": self.iteration,
            "env_steps": self.env_steps,
            "L_I": disc_stats.get("imitation", disc_stats.get("ls_pair", float("nan"))),
            "L_CA": disc_stats.get("condition_aware", float("nan")),
            "L_GP": disc_stats.get("gradient_penalty", float("nan")),
            "L_WD": disc_stats.get("weight_decay", float("nan")),
            "mean_r_s": float(np.mean(buffer.r_style)),
            "mean_return": float(np.mean(all_rets)) if all_rets else float("nan"),
        }
        for label, value in zip(self.dataset.skills, per_skill):
            row[f"return_{label.name}"] = value
        with open(self.metrics_path, "a", newline="") as fh:
            csv.writer(fh).writerow([row[c] for c in self._metric_columns])
        return row

    def _check_finite(self, disc_stats, ppo_stats):
        bad = [k for k, v in disc_stats.items() if not math.isfinite(v)]
        for name, v in (("policy_loss", ppo_stats.policy_loss),
                        ("value_loss", ppo_stats.value_loss)):
            if not math.isfinite(v):
                bad.append(name)
        if bad:
            diag = self.save_checkpoint(self.out_dir / "checkpoint_diagnostic")
            raise TrainingDiverged(
                f"non-finite losses {bad} at iteration {self.iteration}; "
                f"diagnostic checkpoint at {diag}"
            )

    def save_checkpoint(self, ckpt_dir) -> Path:
        ckpt_dir = Path(ckpt_dir)
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        k = self.dataset.num_skills
        nets.save_network(
            self.policy, ckpt_dir / "policy.json", role="policy",
            meta={"log_std": [float(v) for v in self.log_std], "num_skills": k},
        )
        nets.save_network(self.value, ckpt_dir / "value.json", role="value")
        nets.save_network(
            self.encoder, ckpt_dir / "encoder.json", role="encoder",
            meta={"num_skills": k},
        )
        self.disc.save(ckpt_dir / "discriminator.json")
        bundle = {
            "format_version": BUNDLE_FORMAT_VERSION,
            "skills": [
                {"skill_id": s.skill_id, "name": s.name, "caption": s.caption}
                for s in self.dataset.skills
            ],
            "iteration": self.iteration,
            "env_steps": self.env_steps,
            "loss_mode": self.config.loss_mode,
            "train_config": self.config.to_dict(),
        }
        (ckpt_dir / "bundle.yaml").write_text(
            yaml.safe_dump(bundle, sort_keys=False), encoding="utf-8"
        )
        return ckpt_dir


@dataclass
class TrainResult:
    checkpoint_dir: Path
    metrics_path: Path
    iterations: int
    env_steps: int
    wall_seconds: float


@dataclass
class CheckpointBundle:
    policy: ConditionedPolicy
    value: nets.NetworkParameters
    disc: ConditionalDiscriminator
    skills: list[SkillLabel]
    loss_mode: str
    train_config: dict
    iteration: int
    env_steps: int

    @property
    def num_skills(self) -> int:
        return len(self.skills)


def load_checkpoint_bundle(ckpt_dir) -> CheckpointBundle:
    ckpt_dir = Path(ckpt_dir)
    bundle_path = ckpt_dir / "bundle.yaml"
    if not bundle_path.exists():
        raise CheckpointError(f"no bundle.yaml under {ckpt_dir}")
    bundle = yaml.safe_load(bundle_path.read_text(encoding="utf-8"))
    if bundle.get("format_version") != BUNDLE_FORMAT_VERSION:
        raise CheckpointError("unsupported bundle format version")
    policy, role, pmeta = nets.load_network(ckpt_dir / "policy.json")
    if role != "policy":
        raise CheckpointError("policy.json does not hold a policy network")
    value, _, _ = nets.load_network(ckpt_dir / "value.json")
    encoder, role_e, _ = nets.load_network(ckpt_dir / "encoder.json")
    if role_e != "encoder":
        raise CheckpointError("encoder.json does not hold an encoder network")
    disc = ConditionalDiscriminator.load(ckpt_dir / "discriminator.json")
    labels = [
        SkillLabel(skill_id=int(s["skill_id"]), name=s["name"], caption=s["caption"])
        for s in bundle["skills"]
    ]
    if disc.num_skills != len(labels):
        raise CheckpointError("discriminator condition count mismatches skill list")
    cond = ConditionedPolicy(
        policy=policy,
        encoder=encoder,
        log_std=np.asarray(pmeta["log_std"], dtype=float),
        num_skills=len(labels),
    )
    return CheckpointBundle(
        policy=cond, value=value, disc=disc, skills=labels,
        loss_mode=bundle.get("loss_mode", disc_mod.MODE_VANILLA),
        train_config=bundle.get("train_config", {}),
        iteration=int(bundle.get("iteration", 0)),
        env_steps=int(bundle.get("env_steps", 0)),
    )
