"""Train the conditional controller on the 4-skill desk benchmark.

A shortened run (300k env steps, ~25 s) that exercises the full loop:
rollout collection with mixed initialization, discriminator updates on
real/fake/mismatched batches, PPO with the latent-encoder gradient path,
metrics logging, and checkpointing. Pass --full for the 500k-step budget
used by the acceptance suite.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from csi import evaluation, skills
from csi.training import TrainConfig, Trainer, load_checkpoint_bundle

full = "--full" in sys.argv
steps = 500_000 if full else 300_000

dataset = skills.generate_reference_dataset(
    skills.skill_table_subset(["walk-forward", "walk-backward", "turn-left", "idle"])
)
print(f"dataset: {len(dataset.clips)} skills x {len(dataset.clips[0].frames)} frames")

out = Path(tempfile.mkdtemp(prefix="csi_demo_train_"))
cfg = TrainConfig(seed=0, total_steps=steps, checkpoint_interval=0)
trainer = Trainer(cfg, dataset, out)
print(f"training {steps} env steps "
      f"({cfg.env_count} envs x {cfg.horizon}-step rollouts) -> {out}")

result = trainer.train()
print(f"done in {result.wall_seconds:.0f}s, {result.iterations} iterations")

rows = result.metrics_path.read_text().strip().splitlines()
print("\nmetrics head:", rows[0])
for line in rows[1:3] + rows[-2:]:
    print("  ", line[:110])

bundle = load_checkpoint_bundle(result.checkpoint_dir)
print("\nlatent codes per skill (first 3 dims):")
for label in bundle.skills:
    z = bundle.policy._z[label.skill_id][:3]
    print(f"  {label.name:>13s}: {np.round(z, 3)}")

report = evaluation.coverage_protocol(bundle.policy, dataset,
                                      n_traj=100, traj_len=200, seed=0)
print("\ncoverage after training:")
for label, freq in zip(dataset.skills, report.frequencies):
    bar = "#" * int(freq * 40)
    print(f"  {label.name:>13s} {freq:5.3f} {bar}")
print(f"entropy {report.entropy():.3f} (uniform would be {np.log(4):.3f})")
if not full:
    print("\n(300k steps usually covers all four skills, less evenly than")
    print(" the acceptance-grade budget; rerun with --full for 500k)")
