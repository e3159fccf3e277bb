"""Scripted motion skills and the reference transition dataset.

Each skill is a deterministic joint-target trajectory
``target_j(t) = A_j * sin(2*pi*f*t + phi_j) + b_j`` tracked by the PD
simulator. Rolling a skill through the simulator and recording the
discriminator features of every control step yields a labeled motion clip;
the set of clips is the reference dataset the discriminator treats as real.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import yaml

from . import sim
from .sim import AgentState, SimParams, SimulationDiverged

DATASET_FORMAT_VERSION = 1


class UnknownSkillError(KeyError):
    pass


class DatasetError(RuntimeError):
    pass


@dataclass(frozen=True)
class SkillLabel:
    """Identity of one integrated skill: index, short name, and the
    free-text caption used for language routing."""

    skill_id: int
    name: str
    caption: str

    def __post_init__(self):
        if not self.caption:
            raise ValueError("caption must be non-empty")


@dataclass(frozen=True)
class SkillSpec:
    """Parameters of one scripted expert."""

    name: str
    caption: str
    amplitude: tuple[float, ...]    # per-joint, radians
    frequency: float                # Hz
    phase: tuple[float, ...]        # per-joint, radians
    offset: tuple[float, ...]       # per-joint, radians


def _j4(value) -> tuple[float, ...]:
    arr = np.broadcast_to(np.asarray(value, dtype=float), (4,))
    return tuple(float(v) for v in arr)


def make_skill_spec(name, caption, amplitude, frequency, phase=0.0, offset=0.0):
    return SkillSpec(
        name=name,
        caption=caption,
        amplitude=_j4(amplitude),
        frequency=float(frequency),
        phase=_j4(phase),
        offset=_j4(offset),
    )


# The default eight-skill table. Gait joints are 0-1, steer joints 2-3.
# Skills are separated in transition space by distinct amplitude /
# frequency / relative-phase / offset signatures:
#   - walk-forward and walk-backward share A and f but differ in relative
#     gait phase (anti-phase vs in-phase), which are orthogonal limit
#     cycles in (q0, q1);
#   - run is larger and faster; turn-left/right hold opposite steer
#     offsets (constant heading rate of opposite sign);
#   - dance mixes all four joints with spread phases; wave moves only
#     joint 3; idle is the zero trajectory.
DEFAULT_SKILL_TABLE: tuple[SkillSpec, ...] = (
    make_skill_spec("walk-forward", "Walk Forward",
                    (0.4, 0.4, 0.0, 0.0), 1.0, (0.0, math.pi, 0.0, 0.0)),
    make_skill_spec("walk-backward", "Walk Backward",
                    (0.4, 0.4, 0.0, 0.0), 1.0, (0.0, 0.0, 0.0, 0.0)),
    make_skill_spec("run", "Run",
                    (0.7, 0.7, 0.0, 0.0), 2.0, (0.0, math.pi, 0.0, 0.0)),
    # steer offset 0.8 -> heading rate 1.28 rad/s, so a 5 s clip sweeps a
    # full circle and every heading appears in the reference distribution
    make_skill_spec("turn-left", "Turn Left",
                    (0.3, 0.3, 0.0, 0.0), 1.0, (0.0, math.pi, 0.0, 0.0),
                    (0.0, 0.0, 0.8, -0.8)),
    make_skill_spec("turn-right", "Turn Right",
                    (0.3, 0.3, 0.0, 0.0), 1.0, (0.0, math.pi, 0.0, 0.0),
                    (0.0, 0.0, -0.8, 0.8)),
    make_skill_spec("idle", "Stand Still", 0.0, 0.0),
    # f = 0.5 Hz keeps dance clear of the PD resonance (~0.71 Hz), so the
    # tracked response stays inside the joint limits
    make_skill_spec("dance", "Dance",
                    (0.45, 0.45, 0.35, 0.35), 0.5, (0.0, 2.1, 4.2, 1.05)),
    make_skill_spec("wave", "Wave Hello",
                    (0.0, 0.0, 0.0, 0.6), 1.5),
)


def skill_table_subset(names) -> tuple[SkillSpec, ...]:
    by_name = {s.name: s for s in DEFAULT_SKILL_TABLE}
    missing = [n for n in names if n not in by_name]
    if missing:
        raise UnknownSkillError(f"unknown skill names: {missing}")
    return tuple(by_name[n] for n in names)


def scripted_expert(spec: SkillSpec, t: float) -> np.ndarray:
    """Joint targets of the scripted expert at time ``t`` (seconds)."""
    a = np.asarray(spec.amplitude)
    phi = np.asarray(spec.phase)
    b = np.asarray(spec.offset)
    return a * np.sin(2.0 * math.pi * spec.frequency * t + phi) + b


@dataclass
class MotionClip:
    """One labeled reference clip of discriminator-feature frames."""

    skill: SkillLabel
    dt: float
    frames: np.ndarray              # (F, feature_dim)
    source: str = "scripted-expert"

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=float)
        if self.frames.ndim != 2 or len(self.frames) < 2:
            raise DatasetError("a clip needs at least 2 frames")
        if not np.isfinite(self.frames).all():
            raise DatasetError(f"non-finite frames in clip '{self.skill.name}'")

    @property
    def num_transitions(self) -> int:
        return len(self.frames) - 1


class TransitionArrays(NamedTuple):
    """Flat view of every consecutive frame pair in a dataset."""

    s: np.ndarray                   # (P, feature_dim)
    s_next: np.ndarray              # (P, feature_dim)
    skill_ids: np.ndarray           # (P,)
    clip_ids: np.ndarray            # (P,)


@dataclass
class ReferenceDataset:
    """All reference clips plus an index of every (s_t, s_t+1) pair."""

    clips: list[MotionClip]
    skills: list[SkillLabel]
    transition_index: list[tuple[int, int]] = field(default_factory=list)
    _cache: TransitionArrays | None = field(default=None, repr=False)
    _frames_cache: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        owned = {c.skill.skill_id for c in self.clips}
        for label in self.skills:
            if label.skill_id not in owned:
                raise DatasetError(f"skill {label.name} owns no clip")
        if not self.transition_index:
            self.transition_index = [
                (ci, fi)
                for ci, clip in enumerate(self.clips)
                for fi in range(clip.num_transitions)
            ]

    @property
    def num_skills(self) -> int:
        return len(self.skills)

    @property
    def feature_dim(self) -> int:
        return self.clips[0].frames.shape[1]

    def transitions(self) -> TransitionArrays:
        """Stacked transition pairs, cached after the first call."""
        if self._cache is None:
            s, s_next, sk, cl = [], [], [], []
            for ci, fi in self.transition_index:
                clip = self.clips[ci]
                s.append(clip.frames[fi])
                s_next.append(clip.frames[fi + 1])
                sk.append(clip.skill.skill_id)
                cl.append(ci)
            self._cache = TransitionArrays(
                np.asarray(s), np.asarray(s_next),
                np.asarray(sk, dtype=np.int64), np.asarray(cl, dtype=np.int64),
            )
        return self._cache

    def all_frames(self) -> np.ndarray:
        if self._frames_cache is None:
            self._frames_cache = np.concatenate(
                [c.frames for c in self.clips], axis=0
            )
        return self._frames_cache


DEFAULT_WARMUP = 10.0   # seconds of settle-in before recording starts


def rollout_expert(
    spec: SkillSpec,
    duration: float,
    params: SimParams,
    warmup: float = DEFAULT_WARMUP,
) -> np.ndarray:
    """Roll one scripted expert from the default state and record the
    discriminator features of each control step (duration * 50 frames).

    The first ``warmup`` seconds are stepped but not recorded, so clips
    hold the settled limit cycle rather than the shared ring-in transient
    from the default pose (which would alias across skills).
    """
    n_frames = round(duration / params.control_dt)
    n_warmup = round(warmup / params.control_dt)
    state = sim.default_state(params)
    frames = np.empty((n_frames, sim.DISC_FEATURE_DIM))
    for i in range(n_warmup + n_frames):
        if i >= n_warmup:
            frames[i - n_warmup] = sim.observe_disc(state)
        if i < n_warmup + n_frames - 1:
            try:
                state = sim.step(state, scripted_expert(spec, i * params.control_dt), params)
            except SimulationDiverged as exc:
                raise DatasetError(
                    f"expert '{spec.name}' diverged during synthesis"
                ) from exc
    return frames


def generate_reference_dataset(
    skill_specs=DEFAULT_SKILL_TABLE,
    params: SimParams = SimParams(),
    clip_duration: float = 5.0,
    warmup: float = DEFAULT_WARMUP,
    seed: int = 0,
) -> ReferenceDataset:
    """Synthesize the labeled reference dataset from the scripted experts.

    Synthesis is fully deterministic; ``seed`` only tags the dataset for
    bookkeeping parity with downstream consumers.
    """
    del seed  # expert rollouts are deterministic
    clips, labels = [], []
    for k, spec in enumerate(skill_specs):
        label = SkillLabel(skill_id=k, name=spec.name, caption=spec.caption)
        labels.append(label)
        clips.append(MotionClip(
            skill=label, dt=params.control_dt,
            frames=rollout_expert(spec, clip_duration, params, warmup),
        ))
    return ReferenceDataset(clips=clips, skills=labels)


# ---------------------------------------------------------------------------
# On-disk format: manifest.yaml + one CSV per clip. The CSV byte layout
# (header = feature order, one frame per line, repr'd floats) is the
# compatibility contract; floats round-trip exactly.
# ---------------------------------------------------------------------------

def _format_float(v: float) -> str:
    return repr(float(v))


def save_dataset(dataset: ReferenceDataset, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "version": DATASET_FORMAT_VERSION,
        "dt": dataset.clips[0].dt,
        "feature_order": list(sim.DISC_FEATURE_NAMES),
        "skills": [],
    }
    for clip in dataset.clips:
        fname = f"{clip.skill.skill_id:02d}_{clip.skill.name}.csv"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(sim.DISC_FEATURE_NAMES)
        for frame in clip.frames:
            writer.writerow([_format_float(v) for v in frame])
        (out / fname).write_text(buf.getvalue(), encoding="utf-8")
        manifest["skills"].append({
            "skill_id": clip.skill.skill_id,
            "name": clip.skill.name,
            "caption": clip.skill.caption,
            "file": fname,
            "frames": len(clip.frames),
        })
    with open(out / "manifest.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(manifest, fh, sort_keys=False)
    return out


def load_dataset(in_dir) -> ReferenceDataset:
    root = Path(in_dir)
    manifest_path = root / "manifest.yaml"
    if not manifest_path.exists():
        raise DatasetError(f"no manifest.yaml under {root}")
    manifest = yaml.safe_load(manifest_path.read_text(encoding="utf-8"))
    if manifest.get("version") != DATASET_FORMAT_VERSION:
        raise DatasetError(f"unsupported dataset version {manifest.get('version')}")
    if tuple(manifest["feature_order"]) != sim.DISC_FEATURE_NAMES:
        raise DatasetError("feature_order mismatch with this build")
    clips, labels = [], []
    for entry in manifest["skills"]:
        label = SkillLabel(
            skill_id=int(entry["skill_id"]),
            name=entry["name"],
            caption=entry["caption"],
        )
        with open(root / entry["file"], newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if tuple(header) != sim.DISC_FEATURE_NAMES:
                raise DatasetError(f"bad CSV header in {entry['file']}")
            frames = np.array([[float(v) for v in row] for row in reader])
        if len(frames) != entry["frames"]:
            raise DatasetError(f"frame count mismatch in {entry['file']}")
        labels.append(label)
        clips.append(MotionClip(skill=label, dt=float(manifest["dt"]), frames=frames))
    return ReferenceDataset(clips=clips, skills=labels)


# ---------------------------------------------------------------------------
# Episode initialization
# ---------------------------------------------------------------------------

REFERENCE_INIT_PROB = 0.7


class ResetResult(NamedTuple):
    state: AgentState
    skill: SkillLabel
    source: str                     # "reference" | "default"


def reset(
    mode: str,
    dataset: ReferenceDataset | None,
    rng: np.random.Generator,
    params: SimParams = SimParams(),
) -> ResetResult:
    """Draw an initial (state, skill) pair.

    ``mixed`` starts from a uniformly sampled reference frame with
    probability 0.7 and from the default state otherwise; the commanded
    skill is sampled uniformly and independently of the state's source, so
    state and label may come from different skills.
    """
    if mode not in ("mixed", "default", "from_reference"):
        raise ValueError(f"unknown reset mode '{mode}'")
    if dataset is None or not dataset.skills:
        raise DatasetError("reset requires a dataset with at least one skill")
    if mode != "default" and not dataset.clips:
        raise DatasetError(f"reset mode '{mode}' requires reference clips")

    if mode == "mixed":
        use_reference = rng.random() < REFERENCE_INIT_PROB
    else:
        use_reference = mode == "from_reference"

    if use_reference:
        frames = dataset.all_frames()
        state = sim.reconstruct_state(frames[rng.integers(len(frames))], params)
        source = "reference"
    else:
        state = sim.default_state(params)
        source = "default"

    skill = dataset.skills[rng.integers(dataset.num_skills)]
    return ResetResult(state=state, skill=skill, source=source)
