"""Token space, prompt encoding, and the output grammar.

Layout of the closed token space derived from a vocabulary:

    0 PAD   1 BOS   2 EOS   3 SEP   4 [forward]   5 [backward]
    [6, 6+Df)            forward task-description tokens
    [6+Df, 6+Df+Db)      backward task-description tokens
    [desc_end, +|verbs|) one token per verb
    [.., +|nouns|)       one token per noun

Every encoded instance is BOS, preamble, then (verb, noun, SEP) per observed
action, then (verb, noun, SEP) per future action with the final SEP replaced
by EOS. The loss mask is true exactly on the future-region tokens, i.e. the
positions the model is trained to emit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContextOverflow, GrammarViolation, TruncatedOutput, UnknownLabel
from .sequence import BACKWARD, FORWARD, AnticipationInstance
from .vocab import ActionLabel, Vocabulary

PAD = 0
BOS = 1
EOS = 2
SEP = 3
CTRL_FWD = 4
CTRL_BWD = 5
NUM_RESERVED = 6

SPECIAL_TOKEN = "special_token"
DETAILED_DESCRIPTION = "detailed_description"
PREAMBLE_MODES = (SPECIAL_TOKEN, DETAILED_DESCRIPTION)

EXPECT_VERB = "expect_verb"
EXPECT_NOUN = "expect_noun"
EXPECT_SEP_OR_EOS = "expect_sep_or_eos"


@dataclass
class TokenSpace:
    """Token-id layout bound to one vocabulary.

    The description blocks stand in for the natural-language task
    instructions of the full-scale system; at this scale each direction gets
    a fixed block of ``desc_len`` opaque tokens instead of prose.
    """

    vocab: Vocabulary
    desc_len_fwd: int = 8
    desc_len_bwd: int = 8

    def __post_init__(self) -> None:
        if self.desc_len_fwd < 1 or self.desc_len_bwd < 1:
            raise ConfigError("description blocks need at least one token")
        self.fwd_desc_start = NUM_RESERVED
        self.bwd_desc_start = self.fwd_desc_start + self.desc_len_fwd
        self.verb_start = self.bwd_desc_start + self.desc_len_bwd
        self.noun_start = self.verb_start + self.vocab.num_verbs
        self.size = self.noun_start + self.vocab.num_nouns

    @property
    def num_verbs(self) -> int:
        return self.vocab.num_verbs

    @property
    def num_nouns(self) -> int:
        return self.vocab.num_nouns

    def verb_token(self, verb: int) -> int:
        if not 0 <= verb < self.num_verbs:
            raise UnknownLabel(f"verb index {verb} out of range")
        return self.verb_start + verb

    def noun_token(self, noun: int) -> int:
        if not 0 <= noun < self.num_nouns:
            raise UnknownLabel(f"noun index {noun} out of range")
        return self.noun_start + noun

    def is_verb_token(self, tok: int) -> bool:
        return self.verb_start <= tok < self.noun_start

    def is_noun_token(self, tok: int) -> bool:
        return self.noun_start <= tok < self.size

    def verb_of(self, tok: int) -> int:
        return tok - self.verb_start

    def noun_of(self, tok: int) -> int:
        return tok - self.noun_start

    def token_name(self, tok: int) -> str:
        """Readable token name for debug dumps."""
        fixed = {PAD: "PAD", BOS: "BOS", EOS: "EOS", SEP: "SEP",
                 CTRL_FWD: "[forward]", CTRL_BWD: "[backward]"}
        if tok in fixed:
            return fixed[tok]
        if self.fwd_desc_start <= tok < self.bwd_desc_start:
            return f"fdesc{tok - self.fwd_desc_start}"
        if self.bwd_desc_start <= tok < self.verb_start:
            return f"bdesc{tok - self.bwd_desc_start}"
        if self.is_verb_token(tok):
            return self.vocab.verbs[self.verb_of(tok)]
        if self.is_noun_token(tok):
            return self.vocab.nouns[self.noun_of(tok)]
        return f"?{tok}"


@dataclass
class EncodedInstance:
    """Token ids plus the loss mask marking target-prediction positions."""

    tokens: np.ndarray
    loss_mask: np.ndarray
    prompt_len: int
    direction: str
    z: int
    instance_id: str = ""

    def target_region(self) -> np.ndarray:
        return self.tokens[self.prompt_len :]


def encode_preamble(space: TokenSpace, mode: str, direction: str) -> list[int]:
    """Tokens placed right after BOS to tell the model which task this is."""
    if direction not in (FORWARD, BACKWARD):
        raise ConfigError(f"unknown direction: {direction!r}")
    if mode == SPECIAL_TOKEN:
        return [CTRL_FWD if direction == FORWARD else CTRL_BWD]
    if mode == DETAILED_DESCRIPTION:
        if direction == FORWARD:
            return list(range(space.fwd_desc_start, space.fwd_desc_start + space.desc_len_fwd))
        return list(range(space.bwd_desc_start, space.bwd_desc_start + space.desc_len_bwd))
    raise ConfigError(f"unknown preamble mode: {mode!r}")


def encode_instance(
    space: TokenSpace,
    inst: AnticipationInstance,
    mode: str,
    max_len: int | None = None,
    loss_on_structure: bool = True,
) -> EncodedInstance:
    """Encode an instance as prompt + teacher-forced target tokens.

    The loss mask is false through the last observed SEP and true afterward,
    which charges loss on 2*|future| action tokens, |future|-1 SEPs, and the
    final EOS. With loss_on_structure=False the grammar-forced SEP/EOS
    positions are masked out and only the 2*|future| action tokens count.
    """
    for label in inst.observed + inst.future:
        space.verb_token(label.verb)
        space.noun_token(label.noun)
    ids: list[int] = [BOS]
    ids.extend(encode_preamble(space, mode, inst.direction))
    for a in inst.observed:
        ids.extend((space.verb_token(a.verb), space.noun_token(a.noun), SEP))
    prompt_len = len(ids)
    for i, a in enumerate(inst.future):
        last = i == len(inst.future) - 1
        ids.extend((space.verb_token(a.verb), space.noun_token(a.noun), EOS if last else SEP))
    if max_len is not None and len(ids) > max_len:
        raise ContextOverflow(f"encoded length {len(ids)} exceeds context length {max_len}")
    tokens = np.asarray(ids, dtype=np.int64)
    mask = np.zeros(len(ids), dtype=bool)
    mask[prompt_len:] = True
    if not loss_on_structure:
        mask[prompt_len + 2 :: 3] = False
    return EncodedInstance(
        tokens=tokens,
        loss_mask=mask,
        prompt_len=prompt_len,
        direction=inst.direction,
        z=len(inst.future),
        instance_id=inst.instance_id,
    )


def decode_actions(space: TokenSpace, generated) -> list[ActionLabel]:
    """Parse a target-region emission back into labels.

    Expects repeating (verb, noun, SEP) groups closed by (verb, noun, EOS).
    """
    actions: list[ActionLabel] = []
    state = EXPECT_VERB
    verb = -1
    tokens = [int(t) for t in generated]
    for pos, tok in enumerate(tokens):
        if state == EXPECT_VERB:
            if not space.is_verb_token(tok):
                raise GrammarViolation(
                    f"expected a verb token at position {pos}, got {space.token_name(tok)}"
                )
            verb = space.verb_of(tok)
            state = EXPECT_NOUN
        elif state == EXPECT_NOUN:
            if not space.is_noun_token(tok):
                raise GrammarViolation(
                    f"expected a noun token at position {pos}, got {space.token_name(tok)}"
                )
            actions.append(ActionLabel(verb, space.noun_of(tok)))
            state = EXPECT_SEP_OR_EOS
        else:
            if tok == SEP:
                state = EXPECT_VERB
            elif tok == EOS:
                if pos != len(tokens) - 1:
                    raise GrammarViolation(f"tokens continue after EOS at position {pos}")
                return actions
            else:
                raise GrammarViolation(
                    f"expected SEP or EOS at position {pos}, got {space.token_name(tok)}"
                )
    raise TruncatedOutput("emission ended without EOS")


def next_token_mask(space: TokenSpace, state: str, emitted_actions: int, target_len: int) -> np.ndarray:
    """Boolean mask over the token space of what the grammar admits next.

    In the separator state, SEP is admitted while fewer than ``target_len``
    actions are complete and EOS exactly when the count is reached, so every
    constrained generation has length exactly ``target_len``.
    """
    mask = np.zeros(space.size, dtype=bool)
    if state == EXPECT_VERB:
        mask[space.verb_start : space.noun_start] = True
    elif state == EXPECT_NOUN:
        mask[space.noun_start : space.size] = True
    elif state == EXPECT_SEP_OR_EOS:
        if emitted_actions < target_len:
            mask[SEP] = True
        else:
            mask[EOS] = True
    else:
        raise ConfigError(f"unknown grammar state: {state!r}")
    return mask


def dump_encoding(space: TokenSpace, enc: EncodedInstance) -> str:
    """One-line readable rendering of an encoded instance (debug aid)."""
    names = [space.token_name(int(t)) for t in enc.tokens]
    names.insert(enc.prompt_len, "|")
    return f"{enc.instance_id} [{enc.direction}] " + " ".join(names)
