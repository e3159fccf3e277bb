"""Routing free-text commands to skill labels.

Each skill carries a human-readable caption; a command is scored against
every caption and the argmax caption's skill becomes the active condition.
Two scoring backends share the same output contract: a deterministic
builtin scorer (token-set overlap plus a fixed synonym table, fully
offline) and a client for an external entailment-scoring web service whose
per-caption entailment probability is used as the score. The external
backend degrades to the builtin one when the service is unreachable.
"""

from __future__ import annotations

import logging
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np
import requests
import yaml

log = logging.getLogger(__name__)

ENDPOINT_ENV_VAR = "CSI_NLI_ENDPOINT"
BACKEND_BUILTIN = "builtin"
BACKEND_EXTERNAL = "external"
MAX_INFLIGHT_REQUESTS = 4

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class NoRouteError(RuntimeError):
    """No caption scored above zero; the caller keeps its current skill."""


class BackendError(RuntimeError):
    pass


@dataclass(frozen=True)
class CaptionSet:
    """Ordered (skill_id, caption) hypotheses, one per integrated skill."""

    entries: tuple[tuple[int, str], ...]

    def __post_init__(self):
        captions = [c for _, c in self.entries]
        if len(set(captions)) != len(captions):
            raise ValueError("captions must be unique")
        if any(not c for c in captions):
            raise ValueError("captions must be non-empty")

    @classmethod
    def from_labels(cls, labels) -> "CaptionSet":
        return cls(tuple((l.skill_id, l.caption) for l in labels))

    @property
    def captions(self) -> list[str]:
        return [c for _, c in self.entries]

    def skill_id_at(self, position: int) -> int:
        return self.entries[position][0]

    def __len__(self):
        return len(self.entries)


@dataclass
class EntailmentScores:
    scores: np.ndarray              # per caption, in [0, 1]
    backend: str

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if not np.isfinite(self.scores).all():
            raise BackendError("non-finite entailment scores")


def _load_synonym_map() -> dict[str, str]:
    text = resources.files("csi").joinpath("data/synonyms.yaml").read_text("utf-8")
    doc = yaml.safe_load(text)
    table = {}
    for canonical, variants in doc["synonyms"].items():
        for v in variants:
            table[v] = canonical
    return table


_SYNONYMS: dict[str, str] | None = None


def synonym_map() -> dict[str, str]:
    global _SYNONYMS
    if _SYNONYMS is None:
        _SYNONYMS = _load_synonym_map()
    return _SYNONYMS


def _token_set(text: str, synonyms: dict[str, str]) -> frozenset[str]:
    tokens = _TOKEN_RE.findall(text.lower())
    return frozenset(synonyms.get(t, t) for t in tokens)


def builtin_score(text: str, captions: CaptionSet) -> EntailmentScores:
    """Deterministic offline scorer: Jaccard overlap of canonicalized
    token sets. A command equal to a caption scores exactly 1.0."""
    if not text or not text.strip():
        raise ValueError("command text must be non-empty")
    syn = synonym_map()
    query = _token_set(text, syn)
    scores = np.zeros(len(captions))
    for i, caption in enumerate(captions.captions):
        ref = _token_set(caption, syn)
        union = query | ref
        if union:
            scores[i] = len(query & ref) / len(union)
    return EntailmentScores(scores=scores, backend=BACKEND_BUILTIN)


def _query_entailment(session, endpoint, premise, hypothesis, timeout):
    resp = session.post(
        endpoint,
        json={"premise": premise, "hypothesis": hypothesis},
        timeout=timeout,
    )
    resp.raise_for_status()
    try:
        doc = resp.json()
        score = float(doc["entailment"])
    except (ValueError, KeyError, TypeError) as exc:
        log.error("malformed entailment response: %r", resp.text[:500])
        raise BackendError(f"malformed response from {endpoint}") from exc
    if not 0.0 <= score <= 1.0:
        raise BackendError(f"entailment score {score} outside [0, 1]")
    return score


def external_score(
    text: str,
    captions: CaptionSet,
    endpoint: str | None = None,
    timeout: float = 5.0,
) -> EntailmentScores:
    """Score via an external entailment web service.

    One request per (premise=text, hypothesis=caption) pair, at most four
    in flight. Unreachable or timed-out services fall back to the builtin
    scorer with a logged warning; malformed responses raise BackendError.
    """
    if not text or not text.strip():
        raise ValueError("command text must be non-empty")
    endpoint = endpoint or os.environ.get(ENDPOINT_ENV_VAR)
    if not endpoint:
        raise BackendError(
            f"no endpoint configured (set {ENDPOINT_ENV_VAR} or nli_endpoint)"
        )
    session = requests.Session()
    try:
        with ThreadPoolExecutor(max_workers=MAX_INFLIGHT_REQUESTS) as pool:
            scores = list(pool.map(
                lambda cap: _query_entailment(session, endpoint, text, cap, timeout),
                captions.captions,
            ))
    except (requests.ConnectionError, requests.Timeout) as exc:
        log.warning("entailment service unreachable (%s); using builtin scorer", exc)
        return builtin_score(text, captions)
    finally:
        session.close()
    return EntailmentScores(scores=np.array(scores), backend=BACKEND_EXTERNAL)


def route_command(
    text: str,
    captions: CaptionSet,
    backend: str = BACKEND_BUILTIN,
    endpoint: str | None = None,
    min_score: float = 0.0,
) -> int:
    """Skill id of the highest-scoring caption; ties break to the lowest
    skill id. All-zero scores (or a best score below the optional
    ``min_score`` gate) raise NoRouteError so callers keep their skill."""
    if backend == BACKEND_BUILTIN:
        result = builtin_score(text, captions)
    elif backend == BACKEND_EXTERNAL:
        result = external_score(text, captions, endpoint=endpoint)
    else:
        raise ValueError(f"unknown backend '{backend}'")
    return select_skill(result.scores, captions, min_score=min_score)


def select_skill(scores, captions: CaptionSet, min_score: float = 0.0) -> int:
    scores = np.asarray(scores, dtype=float)
    if len(scores) != len(captions):
        raise ValueError("score vector does not match caption set")
    best = float(np.max(scores)) if len(scores) else 0.0
    if best <= 0.0 or best < min_score:
        raise NoRouteError(f"no caption matches command (best score {best:.3f})")
    # ties: among equal scores pick the lowest skill id
    candidates = [captions.skill_id_at(i) for i in np.flatnonzero(scores == best)]
    return min(candidates)
