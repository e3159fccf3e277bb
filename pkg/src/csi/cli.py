"""Command-line entry point.

Subcommands: ``dataset gen``, ``train``, ``eval coverage|transitions|apd``,
``route``, ``serve``, ``inspect``. Every run writes a resolved-config
snapshot next to its outputs; failures exit nonzero with a single
machine-parsable ``error: ...`` line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import evaluation, language, skills
from .discriminator import MODE_LEAST_SQUARES, MODE_VANILLA
from .language import CaptionSet
from .service import ServiceSettings, serve_forever
from .training import Trainer, load_checkpoint_bundle


def _add_config_arg(p):
    p.add_argument("--config", type=Path, default=None,
                   help="YAML config overlaying the packaged defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csi",
        description="conditional multi-skill imitation on a planar toy agent",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ds = sub.add_parser("dataset", help="reference dataset tools")
    ds_sub = p_ds.add_subparsers(dest="dataset_command", required=True)
    p_gen = ds_sub.add_parser("gen", help="synthesize the scripted-expert dataset")
    _add_config_arg(p_gen)
    p_gen.add_argument("--out", type=Path, required=True)
    p_gen.add_argument("--seed", type=int, default=None)

    p_train = sub.add_parser("train", help="train the conditional controller")
    _add_config_arg(p_train)
    p_train.add_argument("--out", type=Path, required=True)
    p_train.add_argument("--dataset", type=Path, default=None,
                         help="load this dataset instead of synthesizing")
    p_train.add_argument("--seed", type=int, default=None)
    p_train.add_argument("--total-steps", type=int, default=None)
    p_train.add_argument("--ablate-ca", action="store_true",
                         help="zero the condition-aware loss weight")
    p_train.add_argument("--ablate-wd", action="store_true",
                         help="zero the weight-decay loss weight")
    p_train.add_argument("--loss-mode",
                         choices=[MODE_VANILLA, MODE_LEAST_SQUARES], default=None)

    p_eval = sub.add_parser("eval", help="evaluation protocols")
    p_eval.add_argument("protocol", choices=["coverage", "transitions", "apd"])
    p_eval.add_argument("--checkpoint", type=Path, required=True)
    p_eval.add_argument("--dataset", type=Path, required=True)
    p_eval.add_argument("--out", type=Path, default=None,
                        help="report directory (default: the checkpoint dir)")
    p_eval.add_argument("--paper-scale", action="store_true",
                        help="full protocol sizes (2000 trajectories, 200 steps, 10 repeats)")
    p_eval.add_argument("--n-traj", type=int, default=None)
    p_eval.add_argument("--seed", type=int, default=0)

    p_route = sub.add_parser("route", help="route one text command to a skill")
    p_route.add_argument("text")
    _add_config_arg(p_route)
    p_route.add_argument("--backend", choices=["builtin", "external"],
                         default="builtin")
    p_route.add_argument("--endpoint", default=None,
                         help="entailment service URL (external backend)")

    p_serve = sub.add_parser("serve", help="run the live steering service")
    p_serve.add_argument("--checkpoint", type=Path, required=True)
    p_serve.add_argument("--dataset", type=Path, required=True)
    _add_config_arg(p_serve)
    p_serve.add_argument("--host", default=None)
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--slowdown", type=float, default=None)

    p_inspect = sub.add_parser("inspect", help="summarize a checkpoint")
    p_inspect.add_argument("checkpoint", type=Path)
    return parser


def cmd_dataset_gen(args) -> int:
    cfg = config_mod.load_config(args.config)
    seed = args.seed if args.seed is not None else cfg.train.seed
    dataset = skills.generate_reference_dataset(
        cfg.dataset.skills, cfg.sim, cfg.dataset.clip_duration,
        cfg.dataset.warmup, seed=seed,
    )
    out = skills.save_dataset(dataset, args.out)
    config_mod.write_resolved_snapshot(cfg, out / "config_resolved.yaml")
    print(f"wrote {len(dataset.clips)} clips "
          f"({sum(len(c.frames) for c in dataset.clips)} frames) to {out}")
    return 0


def cmd_train(args) -> int:
    cfg = config_mod.load_config(args.config)
    train_cfg = cfg.train
    if args.seed is not None:
        train_cfg = replace(train_cfg, seed=args.seed)
    if args.total_steps is not None:
        train_cfg = replace(train_cfg, total_steps=args.total_steps)
    if args.ablate_ca:
        train_cfg = replace(train_cfg, condition_aware_loss_weight=0.0)
    if args.ablate_wd:
        train_cfg = replace(train_cfg, weight_decay_loss_weight=0.0)
    if args.loss_mode is not None:
        train_cfg = replace(train_cfg, loss_mode=args.loss_mode)

    if args.dataset is not None:
        dataset = skills.load_dataset(args.dataset)
    else:
        dataset = skills.generate_reference_dataset(
            cfg.dataset.skills, cfg.sim, cfg.dataset.clip_duration,
            cfg.dataset.warmup, seed=train_cfg.seed,
        )
        skills.save_dataset(dataset, Path(args.out) / "dataset")

    resolved = dict(cfg.resolved)
    resolved["train"] = train_cfg.to_dict()
    trainer = Trainer(train_cfg, dataset, args.out, sim_params=cfg.sim,
                      resolved_tree=resolved)
    result = trainer.train()
    print(f"trained {result.env_steps} env steps in {result.wall_seconds:.0f}s; "
          f"checkpoint at {result.checkpoint_dir}")
    return 0


def cmd_eval(args) -> int:
    bundle = load_checkpoint_bundle(args.checkpoint)
    dataset = skills.load_dataset(args.dataset)
    out_dir = Path(args.out) if args.out else Path(args.checkpoint)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.protocol == "coverage":
        n = args.n_traj or (2000 if args.paper_scale else 200)
        report = evaluation.coverage_protocol(
            bundle.policy, dataset, n_traj=n, traj_len=200, seed=args.seed
        )
        path = out_dir / "coverage.yaml"
        evaluation.write_coverage_report(report, dataset, path)
        freqs = ", ".join(
            f"{label.name}={f:.3f}"
            for label, f in zip(dataset.skills, report.frequencies)
        )
        print(f"coverage ({n} trajectories): {freqs}")
        print(f"entropy {report.entropy():.4f}; report at {path}")
    elif args.protocol == "transitions":
        n = args.n_traj or (2000 if args.paper_scale else 200)
        result = evaluation.transition_protocol(
            bundle.policy, dataset, n_traj=n, segment_len=200, seed=args.seed
        )
        path = out_dir / "transitions.csv"
        evaluation.write_transition_report(result, dataset, path)
        print(f"transition matrix over {n} trajectories; "
              f"zero rows {result.zero_rows() or 'none'}; report at {path}")
    else:
        n = args.n_traj or (2000 if args.paper_scale else 200)
        length = 200 if args.paper_scale else 100
        mean_apd, per_repeat = evaluation.apd_protocol(
            bundle.policy, dataset, n_traj=n, traj_len=length,
            repeats=10, seed=args.seed,
        )
        path = out_dir / "apd.yaml"
        evaluation.write_apd_report(mean_apd, per_repeat, path)
        print(f"mean APD {mean_apd:.4f} over 10 repeats "
              f"({n} x {length}); report at {path}")
    return 0


def cmd_route(args) -> int:
    cfg = config_mod.load_config(args.config)
    labels = [
        skills.SkillLabel(skill_id=i, name=s.name, caption=s.caption)
        for i, s in enumerate(cfg.dataset.skills)
    ]
    captions = CaptionSet.from_labels(labels)
    endpoint = args.endpoint or cfg.nli_endpoint
    if args.backend == "external":
        scores = language.external_score(args.text, captions, endpoint=endpoint)
    else:
        scores = language.builtin_score(args.text, captions)
    for label, score in zip(labels, scores.scores):
        print(f"  {score:.4f}  {label.name} ({label.caption!r})")
    skill_id = language.select_skill(scores.scores, captions)
    name = next(l.name for l in labels if l.skill_id == skill_id)
    print(f"routed to skill {skill_id} ({name}) via {scores.backend}")
    return 0


def cmd_serve(args) -> int:
    cfg = config_mod.load_config(args.config)
    bundle = load_checkpoint_bundle(args.checkpoint)
    dataset = skills.load_dataset(args.dataset)
    settings = ServiceSettings(
        host=args.host or cfg.service.host,
        port=args.port if args.port is not None else cfg.service.port,
        slowdown=args.slowdown if args.slowdown is not None else cfg.service.slowdown,
        stochastic=cfg.service.stochastic,
        nli_endpoint=cfg.nli_endpoint,
    )
    print(f"serving ws://{settings.host}:{settings.port} "
          f"(checkpoint {args.checkpoint}, {bundle.num_skills} skills)")
    serve_forever(bundle, dataset, settings, cfg.sim)
    return 0


def cmd_inspect(args) -> int:
    bundle = load_checkpoint_bundle(args.checkpoint)
    print(f"checkpoint {args.checkpoint}")
    print(f"  iteration {bundle.iteration}, env steps {bundle.env_steps}, "
          f"loss mode {bundle.loss_mode}")
    print(f"  skills ({bundle.num_skills}):")
    for s in bundle.skills:
        print(f"    [{s.skill_id}] {s.name} ({s.caption!r})")
    nets_info = [
        ("policy", bundle.policy.policy), ("value", bundle.value),
        ("encoder", bundle.policy.encoder), ("discriminator", bundle.disc.params),
    ]
    for role, params in nets_info:
        sizes = "x".join(str(s) for s in params.spec.layer_sizes)
        n = sum(w.size for w in params.weights) + sum(b.size for b in params.biases)
        print(f"  {role}: [{sizes}] {params.spec.hidden_activation}"
              f"/{params.spec.output_activation}, {n} parameters")
    print(f"  log_std: {np.round(bundle.policy.log_std, 4).tolist()}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "dataset": cmd_dataset_gen,
        "train": cmd_train,
        "eval": cmd_eval,
        "route": cmd_route,
        "serve": cmd_serve,
        "inspect": cmd_inspect,
    }
    try:
        return handlers[args.command](args)
    except KeyboardInterrupt:
        print("error: interrupted", file=sys.stderr)
        return 130
    except Exception as exc:  # one-line machine-parsable failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
