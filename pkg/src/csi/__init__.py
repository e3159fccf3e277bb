"""csi: conditional multi-skill imitation learning on a planar toy agent.

A single policy is trained to imitate several scripted motion skills via a
condition-aware adversarial discriminator, evaluated with motion-matching
coverage / transition / diversity protocols, and steered live from
natural-language commands routed through entailment scoring.
"""

__version__ = "0.1.0"
