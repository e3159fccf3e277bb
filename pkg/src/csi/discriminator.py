"""Condition-aware adversarial discriminator.

The discriminator scores a state transition together with a skill label:
D(s_t, s_t+1 | c), realized as an MLP over [s_t || s_t+1 || onehot(c)].
This module owns every discriminator-side training signal (conditional
imitation loss, condition-aware loss on mislabeled real samples, weight
decay, input-gradient penalty), the conditional style reward fed to the
policy, an optional least-squares mode, the fake-transition replay buffer,
and real/fake/mismatched batch assembly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import nets
from .nets import NetworkParameters, NetworkSpec
from .skills import ReferenceDataset

PROB_CLAMP_EPS = 1e-7

MODE_VANILLA = "vanilla"
MODE_LEAST_SQUARES = "least-squares"


class EmptyBatchError(ValueError):
    pass


class ContractViolation(ValueError):
    pass


class ModeMismatch(RuntimeError):
    pass


@dataclass(frozen=True)
class TransitionSample:
    """One (s_t, s_t+1, skill) triple, tagged with where it came from."""

    s_t: np.ndarray
    s_next: np.ndarray
    skill_id: int
    provenance: str = "real"        # "real" | "fake"

    def __post_init__(self):
        s, n = np.asarray(self.s_t, float), np.asarray(self.s_next, float)
        if s.shape != n.shape:
            raise ContractViolation("s_t and s_next must have equal length")
        if not (np.isfinite(s).all() and np.isfinite(n).all()):
            raise ContractViolation("non-finite transition sample")


@dataclass
class DiscriminatorBatch:
    """Arrays for one discriminator update: real, fake, and real-with-
    wrong-label (mismatched) transitions."""

    real_s: np.ndarray
    real_next: np.ndarray
    real_ids: np.ndarray
    fake_s: np.ndarray
    fake_next: np.ndarray
    fake_ids: np.ndarray
    mis_s: np.ndarray
    mis_next: np.ndarray
    mis_ids: np.ndarray             # deliberately wrong labels
    mis_true_ids: np.ndarray        # the samples' actual skills


@dataclass(frozen=True)
class DiscLossWeights:
    """Relative weights of the four discriminator loss terms."""

    imitation: float = 1.0
    condition_aware: float = 1.0
    weight_decay: float = 1e-4
    gradient_penalty: float = 5.0


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


class ConditionalDiscriminator:
    """MLP discriminator over [s_t || s_t+1 || onehot(skill)].

    In vanilla mode the head is a sigmoid probability, clamped to
    [eps, 1-eps] for log stability (the clamp affects reported values and
    rewards only; loss gradients use the exact sigmoid form). In
    least-squares mode the head is linear with +1/-1 targets. An optional
    per-feature affine normalizer is applied before the network; the
    gradient penalty is computed at the network input and only over the
    transition slots, never the condition one-hot.
    """

    def __init__(self, params: NetworkParameters, num_skills: int,
                 feature_dim: int, mode: str = MODE_VANILLA,
                 feature_shift=None, feature_scale=None):
        if mode not in (MODE_VANILLA, MODE_LEAST_SQUARES):
            raise ModeMismatch(f"unknown discriminator mode '{mode}'")
        expected_out = "sigmoid" if mode == MODE_VANILLA else "linear"
        if params.spec.output_activation != expected_out:
            raise ModeMismatch(
                f"{mode} mode needs a {expected_out} head, "
                f"checkpoint has {params.spec.output_activation}"
            )
        if params.spec.layer_sizes[0] != 2 * feature_dim + num_skills:
            raise ModeMismatch("network input does not fit 2F+K layout")
        self.params = params
        self.num_skills = num_skills
        self.feature_dim = feature_dim
        self.mode = mode
        self.feature_shift = (
            None if feature_shift is None else np.asarray(feature_shift, float)
        )
        self.feature_scale = (
            None if feature_scale is None else np.asarray(feature_scale, float)
        )
        self._eye = np.eye(num_skills)
        self._gp_mask = np.concatenate(
            [np.ones(2 * feature_dim), np.zeros(num_skills)]
        )

    @classmethod
    def create(cls, num_skills, feature_dim, hidden=(128, 64), seed=0,
               mode=MODE_VANILLA, feature_shift=None, feature_scale=None):
        spec = NetworkSpec(
            layer_sizes=(2 * feature_dim + num_skills, *hidden, 1),
            hidden_activation="tanh",   # twice differentiable for the penalty
            output_activation="sigmoid" if mode == MODE_VANILLA else "linear",
            seed=seed,
        )
        return cls(nets.init_params(spec), num_skills, feature_dim, mode,
                   feature_shift, feature_scale)

    # -- plumbing -----------------------------------------------------------

    def _normalize(self, f):
        if self.feature_shift is not None:
            f = f - self.feature_shift
        if self.feature_scale is not None:
            f = f / self.feature_scale
        return f

    def assemble_input(self, s, s_next, skill_ids) -> np.ndarray:
        s = np.atleast_2d(np.asarray(s, float))
        s_next = np.atleast_2d(np.asarray(s_next, float))
        ids = np.atleast_1d(np.asarray(skill_ids, int))
        if np.any(ids < 0) or np.any(ids >= self.num_skills):
            raise ContractViolation("skill id out of range")
        return np.concatenate(
            [self._normalize(s), self._normalize(s_next), self._eye[ids]], axis=1
        )

    def _forward(self, s, s_next, skill_ids):
        x = self.assemble_input(s, s_next, skill_ids)
        y, cache = nets.forward(self.params, x)
        return y[:, 0], cache, x

    def prob(self, s, s_next, skill_ids) -> np.ndarray:
        """Discriminator output: clamped probability (vanilla) or the raw
        linear value (least-squares)."""
        y, _, _ = self._forward(s, s_next, skill_ids)
        if self.mode == MODE_VANILLA:
            return np.clip(y, PROB_CLAMP_EPS, 1.0 - PROB_CLAMP_EPS)
        return y

    def prob_sample(self, sample: TransitionSample) -> float:
        return float(self.prob(sample.s_t, sample.s_next, [sample.skill_id])[0])

    # -- loss terms ---------------------------------------------------------

    def imitation_loss(self, real, fake):
        """-E_real log D - E_fake log(1-D), with exact logit gradients."""
        self._require_vanilla("imitation_loss")
        if len(real[0]) == 0 or len(fake[0]) == 0:
            raise EmptyBatchError("imitation loss needs real and fake samples")
        d_r, cache_r, _ = self._forward(*real)
        d_f, cache_f, _ = self._forward(*fake)
        val = float(
            -np.mean(np.log(np.clip(d_r, PROB_CLAMP_EPS, None)))
            - np.mean(np.log(np.clip(1.0 - d_f, PROB_CLAMP_EPS, None)))
        )
        g_r = ((d_r - 1.0) / len(d_r))[:, None]
        g_f = (d_f / len(d_f))[:, None]
        grads, _ = nets.backward(self.params, cache_r, g_r, wrt="logits")
        more, _ = nets.backward(self.params, cache_f, g_f, wrt="logits")
        return val, nets.add_grads(grads, more)

    def condition_aware_loss(self, mismatched, true_ids):
        """-E log(1 - D(s, s'|c_hat)) on real transitions with wrong labels."""
        self._require_vanilla("condition_aware_loss")
        mis_ids = np.atleast_1d(np.asarray(mismatched[2], int))
        true_ids = np.atleast_1d(np.asarray(true_ids, int))
        if self.num_skills < 2 or len(mis_ids) == 0:
            warnings.warn(
                "condition-aware loss is undefined with a single skill; using 0",
                stacklevel=2,
            )
            return 0.0, self.params.zeros_like()
        if np.any(mis_ids == true_ids):
            raise ContractViolation("mismatched sample carries its true label")
        d, cache, _ = self._forward(*mismatched)
        val = float(-np.mean(np.log(np.clip(1.0 - d, PROB_CLAMP_EPS, None))))
        grads, _ = nets.backward(
            self.params, cache, (d / len(d))[:, None], wrt="logits"
        )
        return val, grads

    def weight_decay_loss(self):
        """Sum of squared weight-matrix entries; biases excluded."""
        val = float(sum(np.sum(w * w) for w in self.params.weights))
        grads = self.params.zeros_like()
        for gw, w in zip(grads.weights, self.params.weights):
            gw += 2.0 * w
        return val, grads

    def gradient_penalty(self, real):
        """Mean squared input gradient over real samples, transition slots
        only (the condition one-hot is held fixed)."""
        x = self.assemble_input(*real)
        return nets.grad_penalty_param_grads(self.params, x, grad_mask=self._gp_mask)

    def total_loss(self, batch: DiscriminatorBatch,
                   weights: DiscLossWeights = DiscLossWeights()):
        """Weighted sum of the four terms (vanilla) or the least-squares
        pair loss plus the penalty. Returns (value, grads, components)."""
        real = (batch.real_s, batch.real_next, batch.real_ids)
        fake = (batch.fake_s, batch.fake_next, batch.fake_ids)
        if self.mode == MODE_LEAST_SQUARES:
            ls_val, grads = self.ls_pair_loss(real, fake)
            gp_val, gp_grads = self.gradient_penalty(real)
            total = ls_val + weights.gradient_penalty * gp_val
            nets.add_grads(grads, gp_grads, weights.gradient_penalty)
            return total, grads, {
                "ls_pair": ls_val, "gradient_penalty": gp_val,
            }
        li, grads = self.imitation_loss(real, fake)
        nets.scale_grads(grads, weights.imitation)
        lca, g_ca = self.condition_aware_loss(
            (batch.mis_s, batch.mis_next, batch.mis_ids), batch.mis_true_ids
        )
        nets.add_grads(grads, g_ca, weights.condition_aware)
        lwd, g_wd = self.weight_decay_loss()
        nets.add_grads(grads, g_wd, weights.weight_decay)
        lgp, g_gp = self.gradient_penalty(real)
        nets.add_grads(grads, g_gp, weights.gradient_penalty)
        total = (weights.imitation * li + weights.condition_aware * lca
                 + weights.weight_decay * lwd + weights.gradient_penalty * lgp)
        return total, grads, {
            "imitation": li, "condition_aware": lca,
            "weight_decay": lwd, "gradient_penalty": lgp,
        }

    def ls_pair_loss(self, real, fake):
        """mean (D_real - 1)^2 + mean (D_fake + 1)^2 with a linear head."""
        if self.mode != MODE_LEAST_SQUARES:
            raise ModeMismatch("ls_pair_loss requires least-squares mode")
        if len(real[0]) == 0 or len(fake[0]) == 0:
            raise EmptyBatchError("least-squares loss needs real and fake samples")
        d_r, cache_r, _ = self._forward(*real)
        d_f, cache_f, _ = self._forward(*fake)
        val = float(np.mean((d_r - 1.0) ** 2) + np.mean((d_f + 1.0) ** 2))
        g_r = (2.0 * (d_r - 1.0) / len(d_r))[:, None]
        g_f = (2.0 * (d_f + 1.0) / len(d_f))[:, None]
        grads, _ = nets.backward(self.params, cache_r, g_r)
        more, _ = nets.backward(self.params, cache_f, g_f)
        return val, nets.add_grads(grads, more)

    # -- rewards ------------------------------------------------------------

    def style_reward(self, s, s_next, skill_ids) -> np.ndarray:
        """Conditional style reward. Vanilla: -log(1 - D), in
        [~1e-7, -log eps]; least-squares: max(0, 1 - 0.25 (D - 1)^2)."""
        d = self.prob(s, s_next, skill_ids)
        if self.mode == MODE_VANILLA:
            return -np.log1p(-d)
        return np.maximum(0.0, 1.0 - 0.25 * (d - 1.0) ** 2)

    def style_reward_sample(self, sample: TransitionSample) -> float:
        return float(
            self.style_reward(sample.s_t, sample.s_next, [sample.skill_id])[0]
        )

    def _require_vanilla(self, what):
        if self.mode != MODE_VANILLA:
            raise ModeMismatch(f"{what} requires vanilla mode")

    # -- persistence --------------------------------------------------------

    def save(self, path):
        meta = {
            "mode": self.mode,
            "num_skills": self.num_skills,
            "feature_dim": self.feature_dim,
            "feature_shift": (
                None if self.feature_shift is None else list(map(float, self.feature_shift))
            ),
            "feature_scale": (
                None if self.feature_scale is None else list(map(float, self.feature_scale))
            ),
        }
        nets.save_network(self.params, path, role="discriminator", meta=meta)

    @classmethod
    def load(cls, path):
        params, role, meta = nets.load_network(path)
        if role != "discriminator":
            raise ModeMismatch(f"checkpoint role '{role}' is not a discriminator")
        return cls(
            params, int(meta["num_skills"]), int(meta["feature_dim"]),
            meta.get("mode", MODE_VANILLA),
            meta.get("feature_shift"), meta.get("feature_scale"),
        )


class FakeReplayBuffer:
    """Fixed-capacity FIFO ring of policy-generated transitions with
    uniform sampling. Only fake-provenance transitions may enter."""

    def __init__(self, capacity: int, feature_dim: int):
        self.capacity = int(capacity)
        self.s = np.empty((self.capacity, feature_dim))
        self.s_next = np.empty((self.capacity, feature_dim))
        self.skill_ids = np.empty(self.capacity, dtype=np.int64)
        self.size = 0
        self._head = 0

    def __len__(self):
        return self.size

    def push(self, s, s_next, skill_ids, provenance="fake"):
        if provenance != "fake":
            raise ContractViolation("replay buffer only stores fake transitions")
        s = np.atleast_2d(np.asarray(s, float))
        s_next = np.atleast_2d(np.asarray(s_next, float))
        ids = np.atleast_1d(np.asarray(skill_ids))
        n = len(ids)
        if n > self.capacity:  # only the newest fit
            s, s_next, ids = s[-self.capacity:], s_next[-self.capacity:], ids[-self.capacity:]
            n = self.capacity
        idx = (self._head + np.arange(n)) % self.capacity
        self.s[idx] = s
        self.s_next[idx] = s_next
        self.skill_ids[idx] = ids
        self._head = int((self._head + n) % self.capacity)
        self.size = min(self.size + n, self.capacity)

    def sample(self, n, rng: np.random.Generator):
        if self.size == 0:
            raise EmptyBatchError("replay buffer is empty")
        idx = rng.integers(self.size, size=n)
        return self.s[idx], self.s_next[idx], self.skill_ids[idx]


def sample_mismatched_ids(true_ids, num_skills, rng: np.random.Generator):
    """Uniform wrong labels: c_hat ~ U(C \\ {c})."""
    if num_skills < 2:
        raise ContractViolation("mismatch sampling needs at least 2 skills")
    true_ids = np.asarray(true_ids)
    return (true_ids + 1 + rng.integers(num_skills - 1, size=true_ids.shape)) % num_skills


def assemble_batch(
    dataset: ReferenceDataset,
    fake_buffer: FakeReplayBuffer | None,
    rng: np.random.Generator,
    sizes: tuple[int, int, int] = (128, 128, 128),
    fallback_fake=None,
) -> DiscriminatorBatch:
    """Sample one training batch.

    Real and mismatched transitions are drawn uniformly from the dataset's
    transition index (independent draws); fakes come from the replay
    buffer, or from ``fallback_fake`` (the current rollout's transitions)
    when the buffer is still empty.
    """
    n_real, n_fake, n_mis = sizes
    tr = dataset.transitions()
    p = len(tr.s)
    k = dataset.num_skills

    ri = rng.integers(p, size=n_real)
    real = (tr.s[ri], tr.s_next[ri], tr.skill_ids[ri])

    if fake_buffer is not None and len(fake_buffer) > 0:
        fake = fake_buffer.sample(n_fake, rng)
    elif fallback_fake is not None:
        fs, fn, fi = fallback_fake
        idx = rng.integers(len(fi), size=n_fake)
        fake = (fs[idx], fn[idx], fi[idx])
    else:
        raise EmptyBatchError("no fake transitions available yet")

    if k >= 2:
        mi = rng.integers(p, size=n_mis)
        true = tr.skill_ids[mi]
        mis = (tr.s[mi], tr.s_next[mi], sample_mismatched_ids(true, k, rng))
    else:
        f = dataset.feature_dim
        mis = (np.empty((0, f)), np.empty((0, f)), np.empty(0, dtype=np.int64))
        true = np.empty(0, dtype=np.int64)

    return DiscriminatorBatch(
        real_s=real[0], real_next=real[1], real_ids=real[2],
        fake_s=fake[0], fake_next=fake[1], fake_ids=np.asarray(fake[2], dtype=np.int64),
        mis_s=mis[0], mis_next=mis[1], mis_ids=mis[2], mis_true_ids=true,
    )
