"""Verb/noun vocabularies and the (verb, noun) action label atom.

Labels are index pairs internally; strings appear only at I/O boundaries
(annotation files, reports, prompts dumped for debugging). Vocabulary
documents are JSON objects ``{"verbs": [...], "nouns": [...]}`` and index
assignment always equals document order, so loading is deterministic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .errors import DuplicateName, EmptyVocabulary, ParseError, UnknownLabel


class ActionLabel(NamedTuple):
    """One video segment's activity as a (verb index, noun index) pair."""

    verb: int
    noun: int


@dataclass
class Vocabulary:
    """Ordered verb and noun name lists with stable 0-based indices.

    Immutable after construction; safe to share read-only across threads.
    Names are lowercased on construction (prompt text is case-normalized).
    """

    verbs: tuple[str, ...]
    nouns: tuple[str, ...]
    _verb_index: dict[str, int] = field(init=False, repr=False)
    _noun_index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.verbs = tuple(v.lower() for v in self.verbs)
        self.nouns = tuple(n.lower() for n in self.nouns)
        for kind, names in (("verb", self.verbs), ("noun", self.nouns)):
            if not names:
                raise EmptyVocabulary(f"{kind} list is empty")
            if any(not name or name != name.strip() for name in names):
                raise ParseError(f"blank or padded {kind} name in vocabulary")
            if len(set(names)) != len(names):
                dup = next(n for i, n in enumerate(names) if n in names[:i])
                raise DuplicateName(f"duplicate {kind} name: {dup!r}")
        self._verb_index = {name: i for i, name in enumerate(self.verbs)}
        self._noun_index = {name: i for i, name in enumerate(self.nouns)}

    @property
    def num_verbs(self) -> int:
        return len(self.verbs)

    @property
    def num_nouns(self) -> int:
        return len(self.nouns)

    @property
    def num_actions(self) -> int:
        """Size of the composite verb x noun label grid."""
        return self.num_verbs * self.num_nouns

    def contains(self, label: ActionLabel) -> bool:
        return 0 <= label.verb < self.num_verbs and 0 <= label.noun < self.num_nouns

    def require(self, label: ActionLabel) -> None:
        if not self.contains(label):
            raise UnknownLabel(
                f"label {tuple(label)} out of range for "
                f"{self.num_verbs} verbs x {self.num_nouns} nouns"
            )

    def verb_index(self, name: str) -> int:
        try:
            return self._verb_index[name.lower()]
        except KeyError:
            raise UnknownLabel(f"unknown verb: {name!r}") from None

    def noun_index(self, name: str) -> int:
        try:
            return self._noun_index[name.lower()]
        except KeyError:
            raise UnknownLabel(f"unknown noun: {name!r}") from None


def load_vocabulary(source: str | Path | dict) -> Vocabulary:
    """Build a Vocabulary from a JSON document (path or already-parsed dict).

    Index assignment equals document order. Duplicates raise DuplicateName,
    empty lists raise EmptyVocabulary, schema problems raise ParseError.
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{source}: not valid JSON ({exc})") from exc
    else:
        doc = source
    if not isinstance(doc, dict) or "verbs" not in doc or "nouns" not in doc:
        raise ParseError("vocabulary document must be an object with 'verbs' and 'nouns'")
    verbs, nouns = doc["verbs"], doc["nouns"]
    if not isinstance(verbs, list) or not isinstance(nouns, list):
        raise ParseError("'verbs' and 'nouns' must be arrays of names")
    if not all(isinstance(v, str) for v in verbs + nouns):
        raise ParseError("vocabulary names must be strings")
    return Vocabulary(verbs=tuple(verbs), nouns=tuple(nouns))


def save_vocabulary(vocab: Vocabulary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"verbs": list(vocab.verbs), "nouns": list(vocab.nouns)}, fh, indent=1)
        fh.write("\n")


def action_to_text(vocab: Vocabulary, a: ActionLabel) -> str:
    """Render a label as "<verb-name> <noun-name>" for reports and prompts."""
    vocab.require(a)
    return f"{vocab.verbs[a.verb]} {vocab.nouns[a.noun]}"


def parse_action(vocab: Vocabulary, s: str) -> ActionLabel:
    """Inverse of action_to_text: "<verb> <noun>" with a single space."""
    parts = s.lower().split(" ")
    if len(parts) != 2 or not all(parts):
        raise ParseError(f"expected '<verb> <noun>', got {s!r}")
    verb_name, noun_name = parts
    return ActionLabel(vocab.verb_index(verb_name), vocab.noun_index(noun_name))


# Small kitchen-flavored vocabulary shipped for tests and demos (8 x 12).
DEMO_VERBS = ("take", "put", "cut", "wash", "open", "close", "mix", "pour")
DEMO_NOUNS = (
    "knife", "cloth", "plate", "pan", "onion", "bottle",
    "drawer", "cup", "board", "towel", "spoon", "bowl",
)


def demo_vocabulary() -> Vocabulary:
    """The in-repo demo vocabulary: 8 verbs x 12 nouns."""
    return Vocabulary(verbs=DEMO_VERBS, nouns=DEMO_NOUNS)


def scaled_vocabulary(num_verbs: int = 117, num_nouns: int = 521) -> Vocabulary:
    """Generate a synthetic vocabulary at full benchmark scale (117/521 default)."""
    return Vocabulary(
        verbs=tuple(f"verb{i:03d}" for i in range(num_verbs)),
        nouns=tuple(f"noun{i:03d}" for i in range(num_nouns)),
    )
