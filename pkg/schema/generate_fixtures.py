"""Regenerate wire_fixtures.json, the shared codec contract fixture.

Run from the repo root after any schema change:

    python schema/generate_fixtures.py

Both test suites (Python service, TypeScript console) assert their codecs
reproduce these bytes exactly.
"""

import json
from pathlib import Path

from csi import wire
from csi.skills import SkillLabel

CASES = [
    ("hello_two_skills", wire.hello_message([
        SkillLabel(0, "walk-forward", "Walk Forward"),
        SkillLabel(1, "idle", "Stand Still"),
    ])),
    ("hello_unicode_caption", wire.hello_message([
        SkillLabel(0, "dance", "Dance ✨"),
    ])),
    ("state_plain", wire.state_message(
        t=0.02, root_pos=[0.0, 0.0], root_heading=0.0,
        joint_pos=[0.0, 0.0, 0.0, 0.0], active_skill=0, r_s=0.0,
    )),
    ("state_negative_values", wire.state_message(
        t=1.24, root_pos=[-0.523412, 0.000001], root_heading=-3.141593,
        joint_pos=[0.25, -0.25, 1.5, -1.5], active_skill=3,
        r_s=0.6931471805599453,
    )),
    ("state_routed", wire.state_message(
        t=2.0, root_pos=[0.1, 0.2], root_heading=0.5,
        joint_pos=[0.1, 0.2, 0.3, 0.4], active_skill=1, r_s=2.302585,
        routed_from="please walk forward now",
    )),
    ("state_rounding", wire.state_message(
        t=0.0000004, root_pos=[1e-7, 123.4567891], root_heading=0.9999995,
        joint_pos=[0.0000005, -0.0000005, 0.1234565, 0.1234575],
        active_skill=0, r_s=16.118095650958319,
    )),
    ("error_no_route", wire.error_message(
        "no-route", "no caption matches command (best score 0.000)",
    )),
    ("error_quotes", wire.error_message(
        "bad-message", 'field "type" must be a string \\ backslash',
    )),
    ("set_skill", {"type": "set_skill", "skill_id": 2}),
    ("command", {"type": "command", "text": "Show me your jumping skills"}),
    ("command_unicode", {"type": "command", "text": "tanze für mich ✨"}),
    ("reset", {"type": "reset"}),
    ("pause", {"type": "pause"}),
    ("resume", {"type": "resume"}),
]


def main():
    # store the canonical (post-quantization) decoded form, so both
    # encode(decoded) == encoded and decode(encoded) == decoded hold
    messages = []
    for name, msg in CASES:
        encoded = wire.encode_message(msg)
        messages.append({
            "name": name,
            "decoded": wire.decode_message(encoded),
            "encoded": encoded,
        })
    out = {"format_version": 1, "messages": messages}
    path = Path(__file__).parent / "wire_fixtures.json"
    path.write_text(json.dumps(out, indent=1, ensure_ascii=False) + "\n",
                    encoding="utf-8")
    print(f"wrote {path} ({len(CASES)} cases)")


if __name__ == "__main__":
    main()
