"""Synthetic corpus with planted long-range scene structure, plus I/O.

Each video draws a latent scene type. Its early third repeats motifs
specific to that scene, the middle third mixes in shared motifs at
noise_rate, and the late third returns to the scene's motifs with
probability `coupling`. The late interval therefore carries scene
information that also governs the early interval, which is exactly the
signal a reversed-sequence prediction task can exploit and a forward-only
one never sees. coupling=0 removes that signal as a control.

Annotation files are a JSON array of {"id", "segments": [{"verb","noun"}]}
with text labels resolved against a vocabulary on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InsufficientVocabulary, ParseError, UnknownLabel
from .sequence import AnnotatedVideo, WindowConfig
from .vocab import ActionLabel, Vocabulary

TRAIN_FRACTION = 0.7
VAL_FRACTION = 0.1


@dataclass
class ScenarioConfig:
    """Knobs for the planted-structure generator."""

    num_scene_types: int = 4
    motifs_per_scene: int = 3
    motif_len_range: tuple[int, int] = (2, 4)
    video_len: int = 40
    num_videos: int = 200
    coupling: float = 0.8
    noise_rate: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.num_scene_types, self.motifs_per_scene, self.num_videos) < 1:
            raise ConfigError("counts must be >= 1")
        lo, hi = self.motif_len_range
        if not 1 <= lo <= hi:
            raise ConfigError(f"bad motif_len_range: {self.motif_len_range}")
        if not (0.0 <= self.coupling <= 1.0 and 0.0 <= self.noise_rate <= 1.0):
            raise ConfigError("coupling and noise_rate must be in [0, 1]")
        if self.video_len < WindowConfig().window_len:
            raise ConfigError(
                f"video_len {self.video_len} cannot fit the default "
                f"{WindowConfig().window_len}-segment window"
            )

    def as_dict(self) -> dict:
        return {
            "num_scene_types": self.num_scene_types,
            "motifs_per_scene": self.motifs_per_scene,
            "motif_len_range": list(self.motif_len_range),
            "video_len": self.video_len,
            "num_videos": self.num_videos,
            "coupling": self.coupling,
            "noise_rate": self.noise_rate,
            "seed": self.seed,
        }


@dataclass
class SyntheticCorpus:
    """Videos plus the index-disjoint 70/10/20 split and sanity metrics."""

    videos: list[AnnotatedVideo]
    train_ids: list[str]
    val_ids: list[str]
    test_ids: list[str]
    sanity: dict[str, float]
    config: ScenarioConfig
    motifs: dict = field(default_factory=dict, repr=False)

    def _subset(self, ids: list[str]) -> list[AnnotatedVideo]:
        members = set(ids)
        return [v for v in self.videos if v.id in members]

    @property
    def train(self) -> list[AnnotatedVideo]:
        return self._subset(self.train_ids)

    @property
    def val(self) -> list[AnnotatedVideo]:
        return self._subset(self.val_ids)

    @property
    def test(self) -> list[AnnotatedVideo]:
        return self._subset(self.test_ids)


def _draw_motifs(vocab: Vocabulary, cfg: ScenarioConfig, rng: np.random.Generator):
    """Disjoint motifs: scene sets plus one shared set, from one shuffle."""
    num_motifs = cfg.motifs_per_scene * (cfg.num_scene_types + 1)
    lengths = rng.integers(cfg.motif_len_range[0], cfg.motif_len_range[1] + 1, num_motifs)
    pool_size = vocab.num_verbs * vocab.num_nouns
    if int(lengths.sum()) > pool_size:
        raise InsufficientVocabulary(
            f"need {int(lengths.sum())} distinct actions for {num_motifs} motifs, "
            f"vocabulary offers {pool_size}"
        )
    pool = rng.permutation(pool_size)
    motifs = []
    start = 0
    for n in lengths:
        ids = pool[start : start + int(n)]
        motifs.append(tuple(ActionLabel(int(i) // vocab.num_nouns, int(i) % vocab.num_nouns)
                            for i in ids))
        start += int(n)
    scene_motifs = [motifs[s * cfg.motifs_per_scene : (s + 1) * cfg.motifs_per_scene]
                    for s in range(cfg.num_scene_types)]
    shared_motifs = motifs[cfg.num_scene_types * cfg.motifs_per_scene :]
    return scene_motifs, shared_motifs


def _build_video(index, scene, scene_motifs, shared_motifs, cfg, rng) -> AnnotatedVideo:
    segments: list[ActionLabel] = []
    third = cfg.video_len / 3.0
    own = scene_motifs[scene]
    while len(segments) < cfg.video_len:
        at = len(segments)
        if at < third:
            pick = own
        elif at < 2 * third:
            pick = shared_motifs if rng.random() < cfg.noise_rate else own
        else:
            pick = own if rng.random() < cfg.coupling else shared_motifs
        segments.extend(pick[rng.integers(len(pick))])
    return AnnotatedVideo(id=f"vid{index:04d}", segments=tuple(segments[: cfg.video_len]))


def _early_late_agreement(videos, scene_motifs, video_len) -> float:
    """Mean fraction of late-third actions drawn from the early-dominant scene."""
    action_to_scene = {}
    for s, motifs in enumerate(scene_motifs):
        for motif in motifs:
            for a in motif:
                action_to_scene[a] = s
    third = video_len // 3
    agreements = []
    for v in videos:
        early = [action_to_scene.get(a) for a in v.segments[:third]]
        counts = {}
        for s in early:
            if s is not None:
                counts[s] = counts.get(s, 0) + 1
        if not counts:
            continue
        dominant = max(counts, key=counts.get)
        late = v.segments[2 * third :]
        agreements.append(
            sum(1 for a in late if action_to_scene.get(a) == dominant) / len(late)
        )
    return float(np.mean(agreements)) if agreements else 0.0


def generate_corpus(vocab: Vocabulary, cfg: ScenarioConfig) -> SyntheticCorpus:
    """Deterministic corpus with per-video RNG streams and a 70/10/20 split."""
    motif_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    scene_motifs, shared_motifs = _draw_motifs(vocab, cfg, motif_rng)
    videos = []
    for i in range(cfg.num_videos):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1, i]))
        scene = int(rng.integers(cfg.num_scene_types))
        videos.append(_build_video(i, scene, scene_motifs, shared_motifs, cfg, rng))
    n_train = int(TRAIN_FRACTION * cfg.num_videos)
    n_val = int(VAL_FRACTION * cfg.num_videos)
    ids = [v.id for v in videos]
    sanity = {
        "early_late_agreement": _early_late_agreement(videos, scene_motifs, cfg.video_len),
    }
    return SyntheticCorpus(
        videos=videos,
        train_ids=ids[:n_train],
        val_ids=ids[n_train : n_train + n_val],
        test_ids=ids[n_train + n_val :],
        sanity=sanity,
        config=cfg,
        motifs={"scene": scene_motifs, "shared": shared_motifs},
    )


def save_annotations(videos: list[AnnotatedVideo], vocab: Vocabulary, path: str | Path) -> None:
    doc = [
        {
            "id": v.id,
            "segments": [
                {"verb": vocab.verbs[a.verb], "noun": vocab.nouns[a.noun]} for a in v.segments
            ],
        }
        for v in videos
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_annotations(path: str | Path, vocab: Vocabulary) -> list[AnnotatedVideo]:
    """Parse the annotation array; label text is resolved to indices."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ParseError(f"{path}: not valid JSON: {err}") from err
    if not isinstance(doc, list):
        raise ParseError(f"{path}: expected a JSON array of videos")
    videos = []
    for vi, entry in enumerate(doc):
        if not isinstance(entry, dict) or "id" not in entry or "segments" not in entry:
            raise ParseError(f"{path}: video #{vi} needs 'id' and 'segments'")
        vid = entry["id"]
        segments = []
        for si, seg in enumerate(entry["segments"]):
            if not isinstance(seg, dict) or "verb" not in seg or "noun" not in seg:
                raise ParseError(f"{path}: video {vid!r} segment #{si} needs 'verb' and 'noun'")
            try:
                segments.append(ActionLabel(vocab.verb_index(str(seg["verb"])),
                                            vocab.noun_index(str(seg["noun"]))))
            except UnknownLabel as err:
                raise UnknownLabel(f"video {vid!r} segment #{si}: {err}") from err
        videos.append(AnnotatedVideo(id=str(vid), segments=tuple(segments)))
    return videos


def save_corpus_meta(corpus: SyntheticCorpus, path: str | Path) -> None:
    doc = {
        "config": corpus.config.as_dict(),
        "split": {"train": corpus.train_ids, "val": corpus.val_ids, "test": corpus.test_ids},
        "sanity": corpus.sanity,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_corpus(annotations_path: str | Path, meta_path: str | Path,
                vocab: Vocabulary) -> SyntheticCorpus:
    """Rebuild a corpus from its annotation file and metadata sidecar."""
    videos = load_annotations(annotations_path, vocab)
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    try:
        cfg_doc = dict(meta["config"])
        cfg_doc["motif_len_range"] = tuple(cfg_doc["motif_len_range"])
        cfg = ScenarioConfig(**cfg_doc)
        split = meta["split"]
    except (KeyError, TypeError) as err:
        raise ParseError(f"{meta_path}: bad corpus metadata: {err}") from err
    return SyntheticCorpus(
        videos=videos,
        train_ids=list(split["train"]),
        val_ids=list(split["val"]),
        test_ids=list(split["test"]),
        sanity=dict(meta.get("sanity", {})),
        config=cfg,
    )
