"""One run-level config document with CLI-flag overrides.

A run is described by a single JSON object with optional sections; every
omitted field takes the shipped default. Component seeds are always derived
from the top-level seed (scenario s, model s+1, train s+2, generation s+3)
so a run is reproducible from one integer; per-section "seed" keys are
rejected to keep that rule visible.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .data import ScenarioConfig
from .errors import ConfigError, ParseError
from .evaluation import BY_Z, EdConfig
from .generate import GREEDY_FIRST, GenerationConfig
from .model import LossWeights, ModelConfig
from .prompt import DETAILED_DESCRIPTION, PREAMBLE_MODES, SPECIAL_TOKEN, TokenSpace
from .sequence import WindowConfig
from .train import TrainConfig
from .vocab import Vocabulary, demo_vocabulary, load_vocabulary, scaled_vocabulary

# Short flag spellings accepted for --preamble.
PREAMBLE_ALIASES = {
    "special": SPECIAL_TOKEN,
    "description": DETAILED_DESCRIPTION,
    SPECIAL_TOKEN: SPECIAL_TOKEN,
    DETAILED_DESCRIPTION: DETAILED_DESCRIPTION,
}


@dataclass
class RunConfig:
    """Everything one experiment needs, flat enough to echo as JSON."""

    out: str = "run"
    seed: int = 0
    vocab: str = "demo"
    preamble: str = SPECIAL_TOKEN
    eval_stride: int = 13
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    epochs: int = 8
    batch_size: int = 32
    lr: float = 3e-3
    label_noise: float = 0.0
    loss_on_structure: bool = True
    embed_dim: int = 32
    num_heads: int = 2
    num_layers: int = 1
    mlp_hidden: int = 64
    context_len: int = 96
    k: int = 5
    temperature: float = 1.0
    strategy: str = GREEDY_FIRST
    allow_transpositions: bool = False
    normalizer: str = BY_Z
    ablate_seeds: list[int] = field(default_factory=lambda: [0, 1, 2])
    workers: int = 1

    def __post_init__(self) -> None:
        if self.preamble not in PREAMBLE_MODES:
            raise ConfigError(f"unknown preamble mode: {self.preamble!r}")
        if self.eval_stride < 1:
            raise ConfigError("eval_stride must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.ablate_seeds:
            raise ConfigError("ablate_seeds must be nonempty")


_SECTION_FIELDS = {
    "scenario": ("num_scene_types", "motifs_per_scene", "motif_len_range", "video_len",
                 "num_videos", "coupling", "noise_rate"),
    "window": ("n_obs_fwd", "z_fwd", "n_obs_bwd", "stride"),
    "weights": ("alpha", "beta"),
    "train": ("epochs", "batch_size", "lr", "label_noise", "loss_on_structure"),
    "model": ("embed_dim", "num_heads", "num_layers", "mlp_hidden", "context_len"),
    "gen": ("k", "temperature", "strategy"),
    "ed": ("allow_transpositions", "normalizer"),
    "ablate": ("seeds", "workers"),
}
_TOP_FIELDS = ("out", "seed", "vocab", "preamble", "eval_stride")


def _check_keys(section: str, given: dict, allowed: tuple) -> None:
    unknown = set(given) - set(allowed)
    if "seed" in unknown:
        raise ConfigError(
            f"config section {section!r} must not set 'seed'; seeds derive from the top level"
        )
    if unknown:
        raise ConfigError(f"unknown keys in config section {section!r}: {sorted(unknown)}")


def run_config_from_document(doc: dict) -> RunConfig:
    """Build a RunConfig from a parsed JSON object; unknown keys are errors."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(doc) - set(_TOP_FIELDS) - set(_SECTION_FIELDS)
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    kwargs: dict = {k: doc[k] for k in _TOP_FIELDS if k in doc}
    for section, allowed in _SECTION_FIELDS.items():
        body = doc.get(section, {})
        if not isinstance(body, dict):
            raise ConfigError(f"config section {section!r} must be an object")
        _check_keys(section, body, allowed)
        if section == "scenario":
            part = dict(body)
            if "motif_len_range" in part:
                part["motif_len_range"] = tuple(part["motif_len_range"])
            kwargs["scenario"] = ScenarioConfig(**part)
        elif section == "window":
            kwargs["window"] = WindowConfig(**body)
        elif section == "weights":
            kwargs["weights"] = LossWeights(**body)
        elif section == "ablate":
            if "seeds" in body:
                kwargs["ablate_seeds"] = [int(s) for s in body["seeds"]]
            if "workers" in body:
                kwargs["workers"] = int(body["workers"])
        else:
            kwargs.update(body)
    return RunConfig(**kwargs)


def run_config_to_document(cfg: RunConfig) -> dict:
    return {
        "out": cfg.out,
        "seed": cfg.seed,
        "vocab": cfg.vocab,
        "preamble": cfg.preamble,
        "eval_stride": cfg.eval_stride,
        "scenario": {k: getattr(cfg.scenario, k) if k != "motif_len_range"
                     else list(cfg.scenario.motif_len_range)
                     for k in _SECTION_FIELDS["scenario"]},
        "window": {k: getattr(cfg.window, k) for k in _SECTION_FIELDS["window"]},
        "weights": {"alpha": cfg.weights.alpha, "beta": cfg.weights.beta},
        "train": {k: getattr(cfg, k) for k in _SECTION_FIELDS["train"]},
        "model": {k: getattr(cfg, k) for k in _SECTION_FIELDS["model"]},
        "gen": {"k": cfg.k, "temperature": cfg.temperature, "strategy": cfg.strategy},
        "ed": {"allow_transpositions": cfg.allow_transpositions, "normalizer": cfg.normalizer},
        "ablate": {"seeds": list(cfg.ablate_seeds), "workers": cfg.workers},
    }


def load_run_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ParseError(f"{path}: not valid JSON: {err}") from err
    return run_config_from_document(doc)


def save_run_config(cfg: RunConfig, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(run_config_to_document(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def apply_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply CLI-flag values (None means flag absent) on top of a config."""
    out = cfg
    simple = {k: v for k, v in overrides.items()
              if k in ("out", "seed", "eval_stride", "k", "workers") and v is not None}
    if simple:
        out = dataclasses.replace(out, **simple)
    if overrides.get("preamble") is not None:
        name = overrides["preamble"]
        if name not in PREAMBLE_ALIASES:
            raise ConfigError(f"unknown preamble mode: {name!r}")
        out = dataclasses.replace(out, preamble=PREAMBLE_ALIASES[name])
    alpha, beta = overrides.get("alpha"), overrides.get("beta")
    if alpha is not None or beta is not None:
        out = dataclasses.replace(out, weights=LossWeights(
            alpha if alpha is not None else out.weights.alpha,
            beta if beta is not None else out.weights.beta,
        ))
    if overrides.get("n_obs_bwd") is not None:
        out = dataclasses.replace(
            out, window=dataclasses.replace(out.window, n_obs_bwd=overrides["n_obs_bwd"])
        )
    return out


def resolve_vocab(cfg: RunConfig) -> Vocabulary:
    """'demo' and 'scaled' are built in; anything else is a document path."""
    if cfg.vocab == "demo":
        return demo_vocabulary()
    if cfg.vocab == "scaled":
        return scaled_vocabulary()
    return load_vocabulary(cfg.vocab)


def scenario_config(cfg: RunConfig) -> ScenarioConfig:
    return dataclasses.replace(cfg.scenario, seed=cfg.seed)


def model_config(cfg: RunConfig, space: TokenSpace) -> ModelConfig:
    return ModelConfig(
        vocab_size=space.size, context_len=cfg.context_len, embed_dim=cfg.embed_dim,
        num_heads=cfg.num_heads, num_layers=cfg.num_layers, mlp_hidden=cfg.mlp_hidden,
        seed=cfg.seed + 1,
    )


def train_config(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(
        window=cfg.window, weights=cfg.weights, preamble=cfg.preamble,
        epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr,
        seed=cfg.seed + 2, label_noise=cfg.label_noise,
        loss_on_structure=cfg.loss_on_structure,
    )


def gen_config(cfg: RunConfig) -> GenerationConfig:
    return GenerationConfig(k=cfg.k, temperature=cfg.temperature,
                            strategy=cfg.strategy, seed=cfg.seed + 3)


def ed_config(cfg: RunConfig) -> EdConfig:
    return EdConfig(allow_transpositions=cfg.allow_transpositions, normalizer=cfg.normalizer)


def eval_window(cfg: RunConfig) -> WindowConfig:
    return dataclasses.replace(cfg.window, stride=cfg.eval_stride)
