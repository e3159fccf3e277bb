"""Record a scripted steering session into session_transcript.json.

The transcript drives the console's state machine in its tests: it holds
the exact encoded bytes the service emitted for a connect -> hello ->
set_skill -> command -> states... session, interleaved with the inbound
messages that caused them. Regenerate after any protocol change:

    python schema/generate_transcript.py
"""

import json
from pathlib import Path

from csi import skills, wire
from csi.service import ServiceSettings, SessionRuntime
from csi.training import TrainConfig, Trainer, load_checkpoint_bundle


def scripted_session():
    dataset = skills.generate_reference_dataset(
        skills.skill_table_subset(["walk-forward", "walk-backward", "turn-left", "idle"]),
        clip_duration=1.0,
    )
    cfg = TrainConfig(env_count=4, horizon=8, total_steps=256, minibatch_size=16,
                      discriminator_batch_size=8, checkpoint_interval=0, seed=11)
    result = Trainer(cfg, dataset, "/tmp/csi_transcript_ckpt").train()
    bundle = load_checkpoint_bundle(result.checkpoint_dir)
    runtime = SessionRuntime(bundle, dataset, settings=ServiceSettings())

    events = []

    def emit_out(msgs):
        for m in msgs:
            events.append({"dir": "out", "encoded": wire.encode_message(m)})

    def emit_in(msg, note=None):
        entry = {"dir": "in", "encoded": wire.encode_message(msg)}
        if note:
            entry["note"] = note
        events.append(entry)
        err = runtime.handle_message(msg)
        if err is not None:
            emit_out([err])

    emit_out([runtime.hello()])
    for _ in range(10):
        emit_out(runtime.step())
    emit_in({"type": "set_skill", "skill_id": 2}, "direct skill click")
    for _ in range(10):
        emit_out(runtime.step())
    emit_in({"type": "command", "text": "stand still"}, "routes to idle")
    for _ in range(30):
        emit_out(runtime.step())
    emit_in({"type": "set_skill", "skill_id": 99}, "rejected: out of range")
    for _ in range(5):
        emit_out(runtime.step())
    emit_in({"type": "command", "text": "quantum flapdoodle"}, "rejected: no route")
    for _ in range(5):
        emit_out(runtime.step())
    emit_in({"type": "reset"})
    for _ in range(45):
        emit_out(runtime.step())

    n_states = sum(
        1 for e in events
        if e["dir"] == "out" and '"type":"state"' in e["encoded"]
    )
    assert n_states >= 100, n_states
    return {
        "format_version": 1,
        "skills": [
            {"skill_id": s.skill_id, "name": s.name, "caption": s.caption}
            for s in bundle.skills
        ],
        "events": events,
    }


def main():
    doc = scripted_session()
    path = Path(__file__).parent / "session_transcript.json"
    path.write_text(json.dumps(doc, indent=1, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    n_out = sum(1 for e in doc["events"] if e["dir"] == "out")
    print(f"wrote {path} ({n_out} outbound messages)")


if __name__ == "__main__":
    main()
