"""Structured configuration files.

One YAML document drives everything: training hyperparameters, simulator
constants, the scripted-skill table, language routing, and the live
service. User files overlay the packaged defaults; unknown keys are
rejected, missing keys inherit the documented defaults. Every run writes
the fully resolved document next to its outputs so reruns are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .sim import SimParams
from .skills import SkillSpec, make_skill_spec
from .training import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DatasetConfig:
    clip_duration: float
    warmup: float
    skills: tuple[SkillSpec, ...]


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    slowdown: float = 1.0
    stochastic: bool = False


@dataclass(frozen=True)
class AppConfig:
    train: TrainConfig
    sim: SimParams
    dataset: DatasetConfig
    nli_endpoint: str | None
    service: ServiceConfig
    resolved: dict                      # the merged YAML tree


def _default_tree() -> dict:
    text = resources.files("csi").joinpath("data/default_config.yaml").read_text("utf-8")
    return yaml.safe_load(text)


def packaged_config_path(name: str) -> Path:
    """Path of a configuration shipped with the package (e.g. 'desk4')."""
    p = resources.files("csi").joinpath(f"data/{name}_config.yaml")
    if not p.is_file():
        raise ConfigError(f"no packaged config named '{name}'")
    return Path(str(p))


def _merge(base: dict, overlay: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in overlay.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key '{here}'")
        if isinstance(base[key], dict) and isinstance(value, dict):
            out[key] = _merge(base[key], value, here)
        else:
            out[key] = value
    return out


def _parse_skills(entries) -> tuple[SkillSpec, ...]:
    if not entries:
        raise ConfigError("dataset.skills must list at least one skill")
    specs = []
    allowed = {"name", "caption", "amplitude", "frequency", "phase", "offset"}
    for e in entries:
        unknown = set(e) - allowed
        if unknown:
            raise ConfigError(f"unknown skill keys {sorted(unknown)} in {e.get('name')}")
        specs.append(make_skill_spec(
            e["name"], e["caption"], e.get("amplitude", 0.0),
            e.get("frequency", 0.0), e.get("phase", 0.0), e.get("offset", 0.0),
        ))
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError("skill names must be unique")
    return tuple(specs)


def load_config(path=None) -> AppConfig:
    """Load a config file on top of the packaged defaults (``path=None``
    loads the defaults alone)."""
    tree = _default_tree()
    if path is not None:
        user = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path} is not a mapping document")
        tree = _merge(tree, user)

    try:
        train = TrainConfig.from_dict(tree["train"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad train section: {exc}") from exc

    sim_tree = dict(tree["sim"])
    try:
        sim_params = SimParams(
            num_joints=int(sim_tree.pop("num_joints")),
            control_dt=float(sim_tree.pop("control_dt")),
            substeps=int(sim_tree.pop("substeps")),
            kp=float(sim_tree.pop("kp")),
            kd=float(sim_tree.pop("kd")),
            q_max=float(sim_tree.pop("q_max")),
            breach_margin=float(sim_tree.pop("breach_margin")),
            g_v=float(sim_tree.pop("g_v")),
            g_w=float(sim_tree.pop("g_w")),
            max_speed=float(sim_tree.pop("max_speed")),
            episode_horizon=int(sim_tree.pop("episode_horizon")),
        )
    except KeyError as exc:
        raise ConfigError(f"missing sim key {exc}") from exc
    if sim_tree:
        raise ConfigError(f"unknown sim keys {sorted(sim_tree)}")

    dataset = DatasetConfig(
        clip_duration=float(tree["dataset"]["clip_duration"]),
        warmup=float(tree["dataset"]["warmup"]),
        skills=_parse_skills(tree["dataset"]["skills"]),
    )
    service = ServiceConfig(
        host=str(tree["service"]["host"]),
        port=int(tree["service"]["port"]),
        slowdown=float(tree["service"]["slowdown"]),
        stochastic=bool(tree["service"]["stochastic"]),
    )
    return AppConfig(
        train=train,
        sim=sim_params,
        dataset=dataset,
        nli_endpoint=tree["language"]["nli_endpoint"],
        service=service,
        resolved=tree,
    )


def write_resolved_snapshot(config: AppConfig, path):
    Path(path).write_text(
        yaml.safe_dump(config.resolved, sort_keys=False), encoding="utf-8"
    )
