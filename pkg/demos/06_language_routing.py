"""Zero-shot command routing over the skill captions.

The builtin scorer canonicalizes tokens through a fixed synonym table and
ranks captions by set overlap; an external entailment service can be
swapped in without changing any calling code (set CSI_NLI_ENDPOINT).
"""

import numpy as np

from csi import language, skills
from csi.language import CaptionSet, NoRouteError

labels = skills.generate_reference_dataset(clip_duration=0.1, warmup=0.0).skills
captions = CaptionSet.from_labels(labels)
print("caption set:")
for skill_id, caption in captions.entries:
    print(f"  [{skill_id}] {caption!r}")

COMMANDS = [
    "please walk forward now",
    "move in reverse",
    "sprint as fast as you can",
    "rotate left",
    "stop moving",
    "show me a dance",
    "say hi",
    "Show me your jumping skills",     # no jump skill integrated here
]

print("\nbuiltin scores and routes:")
for text in COMMANDS:
    result = language.builtin_score(text, captions)
    order = np.argsort(result.scores)[::-1]
    top = ", ".join(
        f"{captions.captions[i]}={result.scores[i]:.2f}"
        for i in order[:3] if result.scores[i] > 0
    )
    try:
        skill_id = language.select_skill(result.scores, captions)
        routed = labels[skill_id].name
    except NoRouteError:
        routed = "(no route - skill kept)"
    print(f"  {text!r:40s} -> {routed:13s} [{top or 'all zero'}]")

print("\nbackend contract: external_score returns the same shape and range,")
print(f"reads its URL from the nli_endpoint config key or ${language.ENDPOINT_ENV_VAR},")
print("and falls back to the builtin scorer when the service is unreachable.")
