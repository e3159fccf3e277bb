"""The three evaluation protocols on a freshly trained controller.

Motion-matching classification, label-conditioned coverage, the
transition matrix from mid-trajectory label switches, and average
pairwise distance (APD) diversity with its 10-repeat protocol.
"""

import tempfile

from csi import evaluation, skills
from csi.training import TrainConfig, Trainer, load_checkpoint_bundle

dataset = skills.generate_reference_dataset(
    skills.skill_table_subset(["walk-forward", "walk-backward", "turn-left", "idle"])
)
names = [s.name for s in dataset.skills]

print("training a 300k-step controller for the demo...")
cfg = TrainConfig(seed=0, total_steps=300_000, checkpoint_interval=0)
result = Trainer(cfg, dataset, tempfile.mkdtemp(prefix="csi_demo_eval_")).train()
bundle = load_checkpoint_bundle(result.checkpoint_dir)
print(f"done in {result.wall_seconds:.0f}s\n")

# --- motion matching ---------------------------------------------------------
clip = dataset.clips[2]
pair = (clip.frames[40], clip.frames[41])
cid, dist = evaluation.motion_match(pair, dataset)
print(f"a pair copied from clip 2 matches clip {cid} at distance {dist}")

noisy = (pair[0] + 0.05, pair[1] + 0.05)
cid, dist = evaluation.motion_match(noisy, dataset)
print(f"the same pair with noise matches clip {cid} at distance {dist:.4f}")

# --- coverage ----------------------------------------------------------------
report = evaluation.coverage_protocol(bundle.policy, dataset,
                                      n_traj=120, traj_len=200, seed=0)
print("\ncoverage frequencies (uniform commands):")
for name, f in zip(names, report.frequencies):
    print(f"  {name:>13s} {f:.3f}")
print(f"  entropy {report.entropy():.3f}")

# --- transitions ---------------------------------------------------------------
tm = evaluation.transition_protocol(bundle.policy, dataset,
                                    n_traj=80, segment_len=150, seed=0)
print("\ntransition matrix (rows = first-half class, cols = second-half):")
header = " ".join(f"{n[:7]:>8s}" for n in names)
print(f"  {'':>13s} {header}")
for i, name in enumerate(names):
    row = " ".join(f"{v:8.2f}" for v in tm.matrix[i])
    print(f"  {name:>13s} {row}   (n={tm.row_counts[i]})")

# --- APD -----------------------------------------------------------------------
mean_apd, per_repeat = evaluation.apd_protocol(
    bundle.policy, dataset, n_traj=60, traj_len=80, repeats=4, seed=0
)
print(f"\nAPD over 4 repeats: mean {mean_apd:.2f}, "
      f"per repeat {[round(v, 2) for v in per_repeat]}")
print("(the acceptance suite runs 200 trajectories x 100 steps x 10 repeats;")
print(" --paper-scale on the CLI switches to 2000 x 200 x 10)")
