"""Forward-only constrained decoding of K candidate futures.

Inference always runs the forward task, whatever mix the model was trained
on. At every step the next-token grammar mask is applied to the model's
distribution before argmax/sampling, so every candidate parses into exactly
z (verb, noun) actions by construction.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptySupport
from .model import Parameters, _forward_batch, _softmax
from .prompt import (
    BOS,
    EXPECT_VERB,
    EXPECT_NOUN,
    EXPECT_SEP_OR_EOS,
    SEP,
    EOS,
    TokenSpace,
    decode_actions,
    encode_preamble,
    next_token_mask,
)
from .sequence import FORWARD
from .vocab import ActionLabel

GREEDY_FIRST = "greedy_first"
ALL_SAMPLED = "all_sampled"
STRATEGIES = (GREEDY_FIRST, ALL_SAMPLED)


@dataclass
class GenerationConfig:
    """How many candidates to decode and how to randomize them."""

    k: int = 5
    temperature: float = 1.0
    strategy: str = GREEDY_FIRST
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.temperature <= 0:
            raise ConfigError("temperature must be > 0")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy: {self.strategy!r}")


@dataclass
class CandidateSet:
    """Exactly k decoded futures for one instance, each of length z."""

    instance_id: str
    candidates: list[tuple[ActionLabel, ...]]

    def __post_init__(self) -> None:
        lengths = {len(c) for c in self.candidates}
        if len(lengths) > 1:
            raise ConfigError(f"candidates have mixed lengths: {sorted(lengths)}")


def renormalize_masked(dist: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Restrict a distribution to the admitted tokens and rescale to sum 1."""
    kept = np.where(mask, dist, 0.0)
    total = kept.sum()
    if total <= 0.0:
        raise EmptySupport("mask admits no token with nonzero probability")
    return kept / total


def _candidate_rng(seed: int, instance_id: str, index: int) -> np.random.Generator:
    """Stream keyed by (seed, instance id, candidate index): order independent."""
    digest = hashlib.sha256(instance_id.encode("utf-8")).digest()[:8]
    return np.random.default_rng(
        np.random.SeedSequence([seed, int.from_bytes(digest, "big"), index])
    )


def _decode_one(
    params: Parameters,
    space: TokenSpace,
    prompt: list[int],
    z: int,
    greedy: bool,
    temperature: float,
    rng: np.random.Generator | None,
) -> list[int]:
    """Emit one grammar-masked target region; returns the emitted tokens."""
    tokens = list(prompt)
    emitted: list[int] = []
    state = EXPECT_VERB
    done = 0
    while True:
        arr = np.asarray(tokens, dtype=np.int64)
        logits, _ = _forward_batch(params, arr[None, :], keep_cache=False)
        mask = next_token_mask(space, state, done, z)
        # Mask before the softmax: at tiny temperatures the full-vocab softmax
        # underflows to a one-hot that may lie outside the grammar.
        scores = np.where(mask, logits[0, -1] / temperature, -np.inf)
        dist = renormalize_masked(_softmax(scores), mask)
        tok = int(np.argmax(dist)) if greedy else int(rng.choice(dist.size, p=dist))
        tokens.append(tok)
        emitted.append(tok)
        if state == EXPECT_VERB:
            state = EXPECT_NOUN
        elif state == EXPECT_NOUN:
            done += 1
            state = EXPECT_SEP_OR_EOS
        else:
            if tok == EOS:
                return emitted
            state = EXPECT_VERB


def generate_candidates(
    params: Parameters,
    space: TokenSpace,
    observed,
    z: int,
    cfg: GenerationConfig,
    mode: str,
    instance_id: str = "",
) -> CandidateSet:
    """Decode k constrained candidates from an observed action prefix."""
    if z < 1:
        raise ConfigError("z must be >= 1")
    prompt = [BOS] + encode_preamble(space, mode, FORWARD)
    for a in observed:
        prompt.extend((space.verb_token(a.verb), space.noun_token(a.noun), SEP))
    candidates = []
    for index in range(cfg.k):
        greedy = cfg.strategy == GREEDY_FIRST and index == 0
        rng = None if greedy else _candidate_rng(cfg.seed, instance_id, index)
        emitted = _decode_one(params, space, prompt, z, greedy, cfg.temperature, rng)
        candidates.append(tuple(decode_actions(space, emitted)))
    return CandidateSet(instance_id=instance_id, candidates=candidates)


def dump_candidates(path: str | Path, sets: list[CandidateSet]) -> None:
    """Append-style JSONL dump: one line per (instance, candidate)."""
    with open(path, "w", encoding="utf-8") as fh:
        for cs in sets:
            for index, cand in enumerate(cs.candidates):
                fh.write(json.dumps({
                    "instance_id": cs.instance_id,
                    "candidate_index": index,
                    "actions": [{"verb": a.verb, "noun": a.noun} for a in cand],
                }) + "\n")
