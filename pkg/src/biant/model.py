"""A small causal next-token model with exact analytic gradients.

One block of multi-head self-attention plus a GELU MLP over learned token
and position embeddings, all in float64 numpy. The backward pass is written
by hand so it can be checked against central finite differences to tight
tolerance; training is bitwise deterministic given the seeds.

Per-instance losses are teacher-forced cross-entropies summed over the
target positions; forward and backward anticipation instances use the same
loss, weighted alpha and beta respectively in the joint objective.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    ContextOverflow,
    NumericalDivergence,
    ParseError,
    ShapeMismatch,
)
from .prompt import EncodedInstance
from .sequence import BACKWARD, FORWARD

INIT_STD = 0.02
_GELU_C = math.sqrt(2.0 / math.pi)


@dataclass
class ModelConfig:
    """Shape and seed of the autoregressive model."""

    vocab_size: int
    context_len: int = 96
    embed_dim: int = 32
    num_heads: int = 2
    num_layers: int = 1
    mlp_hidden: int = 64
    seed: int = 0

    def __post_init__(self) -> None:
        if min(self.vocab_size, self.context_len, self.embed_dim,
               self.num_heads, self.num_layers, self.mlp_hidden) < 1:
            raise ConfigError("all model dimensions must be >= 1")
        if self.embed_dim % self.num_heads != 0:
            raise ConfigError(
                f"embed_dim={self.embed_dim} not divisible by num_heads={self.num_heads}"
            )


@dataclass
class LossWeights:
    """Weighting coefficients for the forward and backward task losses."""

    alpha: float = 1.0
    beta: float = 1.0

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0 or self.alpha + self.beta <= 0:
            raise ConfigError("need alpha >= 0, beta >= 0, alpha + beta > 0")

    def for_direction(self, direction: str) -> float:
        return self.alpha if direction == FORWARD else self.beta


@dataclass
class Parameters:
    """Named dense float64 arrays plus the config they were shaped from."""

    config: ModelConfig
    arrays: dict[str, np.ndarray]

    @property
    def num_params(self) -> int:
        return sum(a.size for a in self.arrays.values())

    def copy(self) -> "Parameters":
        return Parameters(self.config, {k: v.copy() for k, v in self.arrays.items()})

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.arrays.items()}


def init_params(cfg: ModelConfig) -> Parameters:
    """Deterministic init: weights ~ N(0, 0.02), biases zero."""
    rng = np.random.default_rng(cfg.seed)
    d, m, v = cfg.embed_dim, cfg.mlp_hidden, cfg.vocab_size

    def w(*shape: int) -> np.ndarray:
        return rng.normal(0.0, INIT_STD, shape)

    arrays: dict[str, np.ndarray] = {
        "tok_emb": w(v, d),
        "pos_emb": w(cfg.context_len, d),
    }
    for i in range(cfg.num_layers):
        # No key bias: softmax scores are invariant to a constant shift per
        # query row, so a key bias would be an unidentifiable direction.
        arrays[f"l{i}.wq"] = w(d, d)
        arrays[f"l{i}.bq"] = np.zeros(d)
        arrays[f"l{i}.wk"] = w(d, d)
        arrays[f"l{i}.wv"] = w(d, d)
        arrays[f"l{i}.bv"] = np.zeros(d)
        arrays[f"l{i}.wo"] = w(d, d)
        arrays[f"l{i}.bo"] = np.zeros(d)
        arrays[f"l{i}.w1"] = w(d, m)
        arrays[f"l{i}.b1"] = np.zeros(m)
        arrays[f"l{i}.w2"] = w(m, d)
        arrays[f"l{i}.b2"] = np.zeros(d)
    arrays["w_out"] = w(d, v)
    arrays["b_out"] = np.zeros(v)
    return Parameters(cfg, arrays)


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + np.tanh(_GELU_C * (x + 0.044715 * x**3)))


def _gelu_grad(x: np.ndarray) -> np.ndarray:
    u = _GELU_C * (x + 0.044715 * x**3)
    t = np.tanh(u)
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * _GELU_C * (1.0 + 3 * 0.044715 * x**2)


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _split_heads(x: np.ndarray, num_heads: int) -> np.ndarray:
    b, t, d = x.shape
    return x.reshape(b, t, num_heads, d // num_heads).transpose(0, 2, 1, 3)


def _merge_heads(x: np.ndarray) -> np.ndarray:
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def _forward_batch(params: Parameters, tokens: np.ndarray, keep_cache: bool):
    """Run the network on an int (B, T) batch; optionally keep activations."""
    cfg = params.config
    p = params.arrays
    b, t = tokens.shape
    if t > cfg.context_len:
        raise ContextOverflow(f"sequence length {t} exceeds context length {cfg.context_len}")
    dh = cfg.embed_dim // cfg.num_heads
    scale = 1.0 / math.sqrt(dh)
    causal_bias = np.triu(np.full((t, t), -np.inf), k=1)

    x = p["tok_emb"][tokens] + p["pos_emb"][:t]
    layers = []
    for i in range(cfg.num_layers):
        x_in = x
        q = x_in @ p[f"l{i}.wq"] + p[f"l{i}.bq"]
        k = x_in @ p[f"l{i}.wk"]
        v = x_in @ p[f"l{i}.wv"] + p[f"l{i}.bv"]
        qh = _split_heads(q, cfg.num_heads)
        kh = _split_heads(k, cfg.num_heads)
        vh = _split_heads(v, cfg.num_heads)
        attn = _softmax(qh @ kh.transpose(0, 1, 3, 2) * scale + causal_bias)
        ctx = _merge_heads(attn @ vh)
        x_mid = x_in + ctx @ p[f"l{i}.wo"] + p[f"l{i}.bo"]
        h_pre = x_mid @ p[f"l{i}.w1"] + p[f"l{i}.b1"]
        h = _gelu(h_pre)
        x = x_mid + h @ p[f"l{i}.w2"] + p[f"l{i}.b2"]
        if keep_cache:
            layers.append((x_in, qh, kh, vh, attn, ctx, x_mid, h_pre, h))
    logits = x @ p["w_out"] + p["b_out"]
    cache = (x, layers, scale) if keep_cache else None
    return logits, cache


def forward(params: Parameters, tokens) -> np.ndarray:
    """Per-position next-token distributions; row i conditions on tokens 0..i."""
    arr = np.asarray(tokens, dtype=np.int64)
    if arr.ndim != 1:
        raise ShapeMismatch(f"expected a 1-D token sequence, got shape {arr.shape}")
    logits, _ = _forward_batch(params, arr[None, :], keep_cache=False)
    return _softmax(logits[0])


def task_loss(dists: np.ndarray, enc: EncodedInstance) -> float:
    """Teacher-forced cross-entropy summed over the masked target positions.

    ``dists[i]`` is the model's distribution for the token at position i+1,
    so a mask-true position j is charged -log dists[j-1][tokens[j]].
    """
    n = len(enc.tokens)
    if dists.shape[0] != n or len(enc.loss_mask) != n:
        raise ShapeMismatch(
            f"dists rows {dists.shape[0]} vs tokens {n} vs mask {len(enc.loss_mask)}"
        )
    targets = np.nonzero(enc.loss_mask)[0]
    if targets.size and targets[0] == 0:
        raise ShapeMismatch("loss mask cannot be true at position 0")
    probs = dists[targets - 1, enc.tokens[targets]]
    return float(-np.log(probs).sum())


def combined_loss(l_fwd: float, l_bwd: float, w: LossWeights) -> float:
    """Weighted joint objective: alpha * forward loss + beta * backward loss."""
    return w.alpha * l_fwd + w.beta * l_bwd


def _stack_batch(batch: list[EncodedInstance]) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad a batch with PAD tokens; padded positions carry no loss."""
    t_max = max(len(e.tokens) for e in batch)
    tokens = np.zeros((len(batch), t_max), dtype=np.int64)
    mask = np.zeros((len(batch), t_max), dtype=bool)
    for i, e in enumerate(batch):
        tokens[i, : len(e.tokens)] = e.tokens
        mask[i, : len(e.loss_mask)] = e.loss_mask
    return tokens, mask


@dataclass
class BatchLosses:
    """Per-instance sums split by direction, plus the optimized objective."""

    objective: float
    per_instance: np.ndarray
    weights: np.ndarray
    directions: list[str]

    def direction_sums(self) -> tuple[float, int, float, int]:
        fwd = [l for l, d in zip(self.per_instance, self.directions) if d == FORWARD]
        bwd = [l for l, d in zip(self.per_instance, self.directions) if d != FORWARD]
        return float(sum(fwd)), len(fwd), float(sum(bwd)), len(bwd)


def batch_objective(params: Parameters, batch: list[EncodedInstance], w: LossWeights) -> float:
    """Mean over the batch of the direction-weighted per-instance losses."""
    return _batch_losses(params, batch, w).objective


def _batch_losses(params, batch, w) -> BatchLosses:
    if not batch:
        raise ShapeMismatch("empty batch")
    tokens, mask = _stack_batch(batch)
    logits, _ = _forward_batch(params, tokens, keep_cache=False)
    return _losses_from_logits(logits, tokens, mask, batch, w)


def _losses_from_logits(logits, tokens, mask, batch, w) -> BatchLosses:
    logp = logits - _logsumexp(logits)
    rows, cols = np.nonzero(mask)
    nll = -logp[rows, cols - 1, tokens[rows, cols]]
    per_instance = np.zeros(len(batch))
    np.add.at(per_instance, rows, nll)
    weights = np.array([w.for_direction(e.direction) for e in batch])
    objective = float((weights * per_instance).mean())
    return BatchLosses(objective, per_instance, weights, [e.direction for e in batch])


def _logsumexp(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    return m + np.log(np.exp(logits - m).sum(axis=-1, keepdims=True))


def gradient(
    params: Parameters, batch: list[EncodedInstance], w: LossWeights
) -> tuple[dict[str, np.ndarray], float]:
    """Exact gradient of the batch objective; returns (grads, objective)."""
    grads, losses = _gradient_detailed(params, batch, w)
    return grads, losses.objective


def _gradient_detailed(params, batch, w) -> tuple[dict[str, np.ndarray], BatchLosses]:
    if not batch:
        raise ShapeMismatch("empty batch")
    cfg = params.config
    p = params.arrays
    tokens, mask = _stack_batch(batch)
    b, t = tokens.shape
    logits, cache = _forward_batch(params, tokens, keep_cache=True)
    losses = _losses_from_logits(logits, tokens, mask, batch, w)
    if not np.isfinite(losses.objective):
        raise NumericalDivergence(f"non-finite loss ({losses.objective})")

    # d objective / d logits: softmax-CE rows at positions that predict a target.
    probs = np.exp(logits - _logsumexp(logits))
    rows, cols = np.nonzero(mask)
    coeff = losses.weights[rows] / b
    dlogits = np.zeros_like(logits)
    dlogits[rows, cols - 1, :] = probs[rows, cols - 1, :] * coeff[:, None]
    dlogits[rows, cols - 1, tokens[rows, cols]] -= coeff

    x_final, layers, scale = cache
    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    grads["w_out"] = np.einsum("btd,btv->dv", x_final, dlogits)
    grads["b_out"] = dlogits.sum((0, 1))
    dx = dlogits @ p["w_out"].T

    for i in reversed(range(cfg.num_layers)):
        x_in, qh, kh, vh, attn, ctx, x_mid, h_pre, h = layers[i]
        # MLP branch: x = x_mid + gelu(x_mid @ w1 + b1) @ w2 + b2
        grads[f"l{i}.w2"] = np.einsum("btm,btd->md", h, dx)
        grads[f"l{i}.b2"] = dx.sum((0, 1))
        dh_pre = (dx @ p[f"l{i}.w2"].T) * _gelu_grad(h_pre)
        grads[f"l{i}.w1"] = np.einsum("btd,btm->dm", x_mid, dh_pre)
        grads[f"l{i}.b1"] = dh_pre.sum((0, 1))
        dx_mid = dx + dh_pre @ p[f"l{i}.w1"].T
        # Attention branch: x_mid = x_in + (attn @ v) @ wo + bo
        grads[f"l{i}.wo"] = np.einsum("btd,bte->de", ctx, dx_mid)
        grads[f"l{i}.bo"] = dx_mid.sum((0, 1))
        dctx = _split_heads(dx_mid @ p[f"l{i}.wo"].T, cfg.num_heads)
        dattn = dctx @ vh.transpose(0, 1, 3, 2)
        dvh = attn.transpose(0, 1, 3, 2) @ dctx
        dscores = attn * (dattn - (dattn * attn).sum(-1, keepdims=True))
        dq = _merge_heads(dscores @ kh * scale)
        dk = _merge_heads(dscores.transpose(0, 1, 3, 2) @ qh * scale)
        dv = _merge_heads(dvh)
        grads[f"l{i}.wq"] = np.einsum("btd,bte->de", x_in, dq)
        grads[f"l{i}.bq"] = dq.sum((0, 1))
        grads[f"l{i}.wk"] = np.einsum("btd,bte->de", x_in, dk)
        grads[f"l{i}.wv"] = np.einsum("btd,bte->de", x_in, dv)
        grads[f"l{i}.bv"] = dv.sum((0, 1))
        dx = dx_mid + dq @ p[f"l{i}.wq"].T + dk @ p[f"l{i}.wk"].T + dv @ p[f"l{i}.wv"].T

    grads["pos_emb"][:t] = dx.sum(0)
    np.add.at(grads["tok_emb"], tokens.reshape(-1), dx.reshape(-1, cfg.embed_dim))
    return grads, losses


def finite_difference_gradient(
    params: Parameters,
    batch: list[EncodedInstance],
    w: LossWeights,
    epsilon: float = 1e-4,
) -> dict[str, np.ndarray]:
    """Central-difference gradient of the batch objective (the slow oracle)."""
    out = {}
    for name, arr in params.arrays.items():
        g = np.zeros_like(arr)
        flat = arr.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + epsilon
            up = batch_objective(params, batch, w)
            flat[j] = orig - epsilon
            down = batch_objective(params, batch, w)
            flat[j] = orig
            g.reshape(-1)[j] = (up - down) / (2.0 * epsilon)
        out[name] = g
    return out


def gradient_check(
    params: Parameters,
    batch: list[EncodedInstance],
    w: LossWeights,
    epsilon: float = 1e-4,
) -> float:
    """Max relative error between analytic and finite-difference gradients."""
    analytic, _ = gradient(params, batch, w)
    numeric = finite_difference_gradient(params, batch, w, epsilon)
    worst = 0.0
    for name in params.arrays:
        a, f = analytic[name], numeric[name]
        rel = np.abs(a - f) / np.maximum(np.maximum(np.abs(a), np.abs(f)), 1e-8)
        worst = max(worst, float(rel.max()))
    return worst


def make_gradcheck_case(seed: int = 0) -> tuple[Parameters, list[EncodedInstance], LossWeights]:
    """Tiny-model setup for the finite-difference check (vocab 12, embed 8).

    Parameters are drawn at a generic scale rather than the training init:
    near N(0, 0.02) the query/key gradients sit below the finite-difference
    noise floor and the relative-error criterion would measure noise.
    """
    cfg = ModelConfig(vocab_size=12, context_len=16, embed_dim=8,
                      num_heads=2, num_layers=1, mlp_hidden=16, seed=seed)
    params = init_params(cfg)
    rng = np.random.default_rng(seed + 1)
    for name, arr in params.arrays.items():
        scale = 0.1 if name.endswith(("bq", "bv", "bo", "b1", "b2", "b_out")) else 0.5
        params.arrays[name] = rng.normal(0.0, scale, arr.shape)
    batch = []
    for direction, length in ((FORWARD, 12), (BACKWARD, 10)):
        tokens = rng.integers(0, cfg.vocab_size, length)
        mask = np.zeros(length, dtype=bool)
        mask[length // 2 :] = True
        batch.append(EncodedInstance(
            tokens=tokens.astype(np.int64), loss_mask=mask,
            prompt_len=length // 2, direction=direction,
            z=0, instance_id=f"gradcheck:{direction}"))
    return params, batch, LossWeights(1.0, 0.5)


@dataclass
class AdamState:
    """First/second moment estimates and the step counter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0


def init_adam(params: Parameters) -> AdamState:
    return AdamState(m=params.zeros_like(), v=params.zeros_like(), step=0)


def optimizer_step(
    params: Parameters,
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[Parameters, AdamState]:
    """One deterministic Adam update; returns fresh params and state."""
    if set(grads) != set(params.arrays):
        raise ShapeMismatch("gradient keys do not match parameter keys")
    step = state.step + 1
    new_arrays: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name, arr in params.arrays.items():
        g = grads[name]
        if g.shape != arr.shape:
            raise ShapeMismatch(f"gradient shape {g.shape} != param shape {arr.shape} for {name}")
        m = beta1 * state.m[name] + (1 - beta1) * g
        v = beta2 * state.v[name] + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**step)
        v_hat = v / (1 - beta2**step)
        new_arrays[name] = arr - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name] = m
        new_v[name] = v
    return Parameters(params.config, new_arrays), AdamState(new_m, new_v, step)


CHECKPOINT_VERSION = 1


def save_checkpoint(params: Parameters, path: str | Path, meta: dict | None = None) -> None:
    """Write params + config as JSON; float64 repr round-trips bitwise."""
    doc = {
        "version": CHECKPOINT_VERSION,
        "model_config": {
            "vocab_size": params.config.vocab_size,
            "context_len": params.config.context_len,
            "embed_dim": params.config.embed_dim,
            "num_heads": params.config.num_heads,
            "num_layers": params.config.num_layers,
            "mlp_hidden": params.config.mlp_hidden,
            "seed": params.config.seed,
        },
        "meta": meta or {},
        "arrays": {name: arr.tolist() for name, arr in params.arrays.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> tuple[Parameters, dict]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ParseError(f"unsupported checkpoint version: {doc.get('version')!r}")
    cfg = ModelConfig(**doc["model_config"])
    reference = init_params(cfg)
    arrays = {}
    for name, expected in reference.arrays.items():
        if name not in doc["arrays"]:
            raise ParseError(f"checkpoint missing array {name!r}")
        arr = np.asarray(doc["arrays"][name], dtype=np.float64)
        if arr.shape != expected.shape:
            raise ParseError(f"array {name!r} has shape {arr.shape}, expected {expected.shape}")
        arrays[name] = arr
    return Parameters(cfg, arrays), doc.get("meta", {})
