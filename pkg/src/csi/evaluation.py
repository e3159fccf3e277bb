"""Quantitative evaluation of a trained multi-skill controller.

Skill classification works by motion matching: every state-transition pair
of a generated trajectory is matched to its nearest reference pair
(unnormalized squared Euclidean distance over [s_t || s_t+1]), and the clip
collecting the most matches names the trajectory's skill. On top of that
sit the coverage protocol (label-conditioned trajectories -> classified
skill frequencies), the transition protocol (switch the label mid
trajectory, classify both halves), and average pairwise distance (APD)
as the diversity score.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml
from scipy.spatial.distance import cdist, pdist

from .envs import VecEnv
from .skills import ReferenceDataset
from .training import ConditionedPolicy

PAPER_SCALE = {"n_traj": 2000, "traj_len": 200, "repeats": 10}


class EvaluationError(RuntimeError):
    pass


@dataclass
class Trajectory:
    """Generated motion: disc-feature frames plus the commanded segments."""

    frames: np.ndarray                          # (L, F)
    commanded: list[tuple[int, int]]            # (start_step, skill_id)

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        if len(self.frames) < 2:
            raise EvaluationError("a trajectory needs at least 2 frames")
        starts = [s for s, _ in self.commanded]
        if starts != sorted(starts):
            raise EvaluationError("commanded segments must be ordered")


@dataclass
class CoverageReport:
    frequencies: np.ndarray                     # (K,), sums to 1
    n_trajectories: int
    seed: int
    discarded: int = 0

    def entropy(self) -> float:
        p = self.frequencies[self.frequencies > 0]
        return float(-np.sum(p * np.log(p)))


@dataclass
class TransitionMatrix:
    matrix: np.ndarray                          # (K, K) row-stochastic
    row_counts: np.ndarray                      # (K,) samples per source row
    n_trajectories: int
    seed: int

    def zero_rows(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.row_counts == 0)]


def _pair_matrix(dataset: ReferenceDataset) -> np.ndarray:
    cache = getattr(dataset, "_pair_matrix_cache", None)
    if cache is None:
        tr = dataset.transitions()
        cache = np.concatenate([tr.s, tr.s_next], axis=1)
        dataset._pair_matrix_cache = cache
    return cache


def motion_match(pair, dataset: ReferenceDataset, standardize: bool = False):
    """Nearest reference transition for one (s_t, s_t+1) query.

    Exhaustive scan; distance is ||s_t - ref_s||^2 + ||s_t+1 - ref_next||^2
    on raw features (optionally standardized per dimension across the
    dataset); ties break to the lowest clip id. Returns (clip_id, distance).
    """
    s_t, s_next = pair
    q = np.concatenate([np.asarray(s_t, float), np.asarray(s_next, float)])
    clip_ids, dist = _match_queries(q[None, :], dataset, standardize)
    return int(clip_ids[0]), float(dist[0])


def _match_queries(queries, dataset, standardize=False):
    """Vectorized matcher: queries (Q, 2F) -> (clip_ids (Q,), distances).

    cdist computes the squared distances term by term (no dot-product
    shortcut), so verbatim copies score exactly 0 and argmin agrees with a
    brute-force scan; argmin's first-hit rule is the lowest-clip tie-break.
    """
    pairs = _pair_matrix(dataset)
    if len(pairs) == 0:
        raise EvaluationError("empty dataset")
    if standardize:
        mu = pairs.mean(axis=0)
        sd = pairs.std(axis=0)
        sd[sd == 0] = 1.0
        pairs = (pairs - mu) / sd
        queries = (queries - mu) / sd
    tr = dataset.transitions()
    d = cdist(np.atleast_2d(queries), pairs, "sqeuclidean")
    idx = np.argmin(d, axis=1)
    return tr.clip_ids[idx], d[np.arange(len(d)), idx]


def classify_trajectory(traj, dataset: ReferenceDataset,
                        standardize: bool = False) -> int:
    """Plurality vote of per-pair motion matches, aggregated by the matched
    clip's skill; ties go to the lowest skill id."""
    frames = traj.frames if isinstance(traj, Trajectory) else np.asarray(traj, float)
    queries = np.concatenate([frames[:-1], frames[1:]], axis=1)
    clip_ids, _ = _match_queries(queries, dataset, standardize)
    skill_votes = np.array([dataset.clips[c].skill.skill_id for c in clip_ids])
    counts = np.bincount(skill_votes, minlength=dataset.num_skills)
    return int(np.argmax(counts))


def apd(traj_set) -> float:
    """Average pairwise distance over equal-length trajectories:
    mean over ordered pairs of sqrt(sum_t ||s_t^i - s_t^j||^2)."""
    x = np.asarray(traj_set, dtype=float)
    if x.ndim != 3:
        raise EvaluationError("expected (N, L, F) trajectory stack")
    n = len(x)
    if n < 2:
        raise EvaluationError("APD needs at least two trajectories")
    flat = x.reshape(n, -1)
    return float(2.0 * np.sum(pdist(flat)) / (n * (n - 1)))


# ---------------------------------------------------------------------------
# trajectory generation
# ---------------------------------------------------------------------------

def rollout_trajectories(
    policy: ConditionedPolicy,
    dataset: ReferenceDataset,
    skill_schedule,
    length: int,
    rng: np.random.Generator,
    sim_params=None,
    stochastic: bool = True,
    max_retries: int = 20,
):
    """Roll N fixed-length trajectories in lockstep, one env per trajectory.

    ``skill_schedule`` is a list of (start_step, (N,) labels) entries.
    Diverged trajectories are re-rolled with fresh seeds (counted, not
    silently dropped). Returns (frames (N, L, F), discarded_count).
    """
    from .sim import SimParams

    params = sim_params or SimParams()
    schedule = sorted(skill_schedule, key=lambda e: e[0])
    n = len(schedule[0][1])
    env = VecEnv(n, dataset, rng, params, reset_mode="default", auto_reset=False)
    frames = np.empty((n, length, dataset.feature_dim))
    diverged = np.zeros(n, dtype=bool)
    switch = {start: np.asarray(ids, dtype=np.int64) for start, ids in schedule}
    for t in range(length):
        if t in switch:
            env.set_skills(switch[t])
        obs = env.observe_policy_base()
        act = policy.act(obs, env.skill_ids, rng=rng, stochastic=stochastic)
        out = env.step(act)
        frames[:, t, :] = out.disc_t
        diverged |= out.diverged
    discarded = 0
    for attempt in range(max_retries):
        bad = np.flatnonzero(diverged)
        if len(bad) == 0:
            break
        discarded += len(bad)
        redo_schedule = [(start, ids[bad]) for start, ids in schedule]
        redo, more = rollout_trajectories(
            policy, dataset, redo_schedule, length, rng, params,
            stochastic, max_retries=0,
        )
        frames[bad] = redo
        discarded += more
        diverged[:] = False
    else:
        if diverged.any():
            raise EvaluationError("trajectories kept diverging after retries")
    return frames, discarded


# ---------------------------------------------------------------------------
# protocols
# ---------------------------------------------------------------------------

def coverage_protocol(
    policy: ConditionedPolicy,
    dataset: ReferenceDataset,
    n_traj: int = 200,
    traj_len: int = 200,
    seed: int = 0,
    standardize: bool = False,
    stochastic: bool = True,
) -> CoverageReport:
    """Condition on uniformly sampled labels, classify each trajectory,
    report the classified-skill frequency distribution."""
    rng = np.random.default_rng(seed)
    k = dataset.num_skills
    labels = rng.integers(k, size=n_traj)
    frames, discarded = rollout_trajectories(
        policy, dataset, [(0, labels)], traj_len, rng, stochastic=stochastic
    )
    classes = [classify_trajectory(frames[i], dataset, standardize) for i in range(n_traj)]
    counts = np.bincount(classes, minlength=k)
    return CoverageReport(
        frequencies=counts / counts.sum(),
        n_trajectories=n_traj,
        seed=seed,
        discarded=discarded,
    )


def transition_protocol(
    policy: ConditionedPolicy,
    dataset: ReferenceDataset,
    n_traj: int = 200,
    segment_len: int = 200,
    seed: int = 0,
    standardize: bool = False,
    stochastic: bool = True,
) -> TransitionMatrix:
    """Command c1 for the first segment and c2 for the second, classify
    both halves, and accumulate a row-stochastic source->destination
    matrix. Rows with zero samples are flagged, not fabricated."""
    rng = np.random.default_rng(seed)
    k = dataset.num_skills
    c1 = rng.integers(k, size=n_traj)
    c2 = rng.integers(k, size=n_traj)
    frames, _ = rollout_trajectories(
        policy, dataset, [(0, c1), (segment_len, c2)], 2 * segment_len, rng,
        stochastic=stochastic,
    )
    counts = np.zeros((k, k))
    for i in range(n_traj):
        src = classify_trajectory(frames[i, :segment_len], dataset, standardize)
        dst = classify_trajectory(frames[i, segment_len:], dataset, standardize)
        counts[src, dst] += 1
    row_counts = counts.sum(axis=1)
    matrix = np.zeros_like(counts)
    nz = row_counts > 0
    matrix[nz] = counts[nz] / row_counts[nz, None]
    return TransitionMatrix(
        matrix=matrix, row_counts=row_counts.astype(np.int64),
        n_trajectories=n_traj, seed=seed,
    )


def apd_protocol(
    policy: ConditionedPolicy,
    dataset: ReferenceDataset,
    n_traj: int = 200,
    traj_len: int = 100,
    repeats: int = 10,
    seed: int = 0,
    stochastic: bool = True,
):
    """Mean APD over independent repetitions of equal-probability-label
    trajectory sets. Returns (mean, per-repeat list)."""
    per_repeat = []
    for r in range(repeats):
        rng = np.random.default_rng(np.random.SeedSequence((seed, r)))
        labels = rng.integers(dataset.num_skills, size=n_traj)
        frames, _ = rollout_trajectories(
            policy, dataset, [(0, labels)], traj_len, rng, stochastic=stochastic
        )
        per_repeat.append(apd(frames))
    return float(np.mean(per_repeat)), per_repeat


# ---------------------------------------------------------------------------
# report files
# ---------------------------------------------------------------------------

def write_coverage_report(report: CoverageReport, dataset, path):
    doc = {
        "n_trajectories": report.n_trajectories,
        "seed": report.seed,
        "discarded": report.discarded,
        "entropy": report.entropy(),
        "frequencies": {
            label.name: float(f)
            for label, f in zip(dataset.skills, report.frequencies)
        },
    }
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")


def write_transition_report(result: TransitionMatrix, dataset, path):
    names = [label.name for label in dataset.skills]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source\\destination"] + names)
        for i, name in enumerate(names):
            writer.writerow([name] + [repr(float(v)) for v in result.matrix[i]])


def write_apd_report(mean_apd: float, per_repeat, path):
    doc = {"mean_apd": float(mean_apd),
           "per_repeat": [float(v) for v in per_repeat]}
    Path(path).write_text(yaml.safe_dump(doc, sort_keys=False), encoding="utf-8")
