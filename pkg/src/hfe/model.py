"""Multi-branch embedding network, backpropagation, Adam, and checkpoints.

Architecture: a shared fully connected backbone (ReLU after every layer)
feeding M attribute branches. Each branch is a linear embedding head
(H -> D) whose output is both the metric-learning embedding and the input
of a linear classifier head (D -> 1, sigmoid). All weights are float64.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .config import HFEConfig
from .errors import CheckpointError, NumericalError
from .losses import GradientSet
from .rng import rng_from_state, rng_state, spawn_rng

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
WEIGHT_DECAY = 5e-4  # decoupled, applied to weight matrices only

CHECKPOINT_MAGIC = b"HFECKPT\x00"
CHECKPOINT_VERSION = 1


def _param_layout(feature_dim: int, hidden_dims: tuple[int, ...], embed_dim: int,
                  num_attrs: int) -> list[tuple[str, tuple[int, ...]]]:
    """Canonical (name, shape) order for all parameters."""
    layout = []
    prev = feature_dim
    for i, h in enumerate(hidden_dims):
        layout.append((f"backbone.{i}.W", (prev, h)))
        layout.append((f"backbone.{i}.b", (h,)))
        prev = h
    for j in range(num_attrs):
        layout.append((f"branch.{j}.embed.W", (prev, embed_dim)))
        layout.append((f"branch.{j}.embed.b", (embed_dim,)))
        layout.append((f"branch.{j}.cls.W", (embed_dim, 1)))
        layout.append((f"branch.{j}.cls.b", (1,)))
    return layout


@dataclass
class Model:
    """Parameter container plus the dimensions that define the layout."""

    feature_dim: int
    hidden_dims: tuple[int, ...]
    embed_dim: int
    num_attrs: int
    params: dict[str, np.ndarray]

    def param_names(self) -> list[str]:
        return [name for name, _ in _param_layout(self.feature_dim, self.hidden_dims,
                                                  self.embed_dim, self.num_attrs)]

    def copy(self) -> "Model":
        return Model(self.feature_dim, tuple(self.hidden_dims), self.embed_dim,
                     self.num_attrs, {k: v.copy() for k, v in self.params.items()})


def init_model(config: HFEConfig, rng: np.random.Generator) -> Model:
    """Scaled-uniform initialization: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
    biases zero. Deterministic given the generator state."""
    params: dict[str, np.ndarray] = {}
    for name, shape in _param_layout(config.feature_dim, config.hidden_dims,
                                     config.embed_dim, config.num_attrs):
        if name.endswith(".W"):
            bound = 1.0 / math.sqrt(shape[0])
            params[name] = rng.uniform(-bound, bound, size=shape)
        else:
            params[name] = np.zeros(shape)
    return Model(config.feature_dim, config.hidden_dims, config.embed_dim,
                 config.num_attrs, params)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class ForwardCache:
    """Intermediate activations needed by the backward pass."""

    activations: list[np.ndarray]  # [input, post-ReLU per backbone layer]
    preacts: list[np.ndarray]      # pre-ReLU per backbone layer
    embeddings: list[np.ndarray]   # per attribute, B x D
    logits: np.ndarray             # B x M


def forward_cached(model: Model, X) -> tuple[list[np.ndarray], np.ndarray, ForwardCache]:
    X = np.asarray(getattr(X, "features", X), dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_dim:
        raise ValueError(f"expected batch of shape (B, {model.feature_dim}), got {X.shape}")
    p = model.params
    acts = [X]
    preacts = []
    h = X
    for i in range(len(model.hidden_dims)):
        z = h @ p[f"backbone.{i}.W"] + p[f"backbone.{i}.b"]
        preacts.append(z)
        h = np.maximum(z, 0.0)
        acts.append(h)
    embeddings = []
    logit_cols = []
    for j in range(model.num_attrs):
        e = h @ p[f"branch.{j}.embed.W"] + p[f"branch.{j}.embed.b"]
        embeddings.append(e)
        logit_cols.append(e @ p[f"branch.{j}.cls.W"][:, 0] + p[f"branch.{j}.cls.b"][0])
    logits = np.stack(logit_cols, axis=1)
    return embeddings, _sigmoid(logits), ForwardCache(acts, preacts, embeddings, logits)


def forward(model: Model, X) -> tuple[list[np.ndarray], np.ndarray]:
    """Per-attribute embeddings (M matrices of B x D) and probabilities (B x M)."""
    embeddings, probs, _ = forward_cached(model, X)
    return embeddings, probs


def backward(model: Model, cache: ForwardCache, grads: GradientSet) -> dict[str, np.ndarray]:
    """Backpropagate embedding and logit gradients to all parameters.

    The logit path re-enters each branch embedding through the classifier
    weights, so cross-entropy shapes the metric space as well.
    """
    p = model.params
    out: dict[str, np.ndarray] = {}
    h = cache.activations[-1]
    d_h = np.zeros_like(h)
    for j in range(model.num_attrs):
        e = cache.embeddings[j]
        d_logit = grads.d_logits[:, j]
        w_cls = p[f"branch.{j}.cls.W"]
        d_e = grads.d_embeddings[j] + np.outer(d_logit, w_cls[:, 0])
        out[f"branch.{j}.cls.W"] = (e.T @ d_logit)[:, None]
        out[f"branch.{j}.cls.b"] = np.array([d_logit.sum()])
        out[f"branch.{j}.embed.W"] = h.T @ d_e
        out[f"branch.{j}.embed.b"] = d_e.sum(axis=0)
        d_h += d_e @ p[f"branch.{j}.embed.W"].T
    for i in reversed(range(len(model.hidden_dims))):
        d_z = d_h * (cache.preacts[i] > 0.0)
        out[f"backbone.{i}.W"] = cache.activations[i].T @ d_z
        out[f"backbone.{i}.b"] = d_z.sum(axis=0)
        d_h = d_z @ p[f"backbone.{i}.W"].T
    return out


@dataclass
class TrainState:
    """Model plus optimizer moments, step counter, sampler stream, config."""

    model: Model
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int
    rng: np.random.Generator
    config: HFEConfig


def new_train_state(config: HFEConfig) -> TrainState:
    """Fresh state: substream 0 of the seed initializes weights, substream 1
    drives batch sampling."""
    model = init_model(config, spawn_rng(config.seed, 0))
    zeros = lambda: {k: np.zeros_like(w) for k, w in model.params.items()}
    return TrainState(model=model, m=zeros(), v=zeros(), step=0,
                      rng=spawn_rng(config.seed, 1), config=config)


def backward_and_step(state: TrainState, cache: ForwardCache, grads: GradientSet,
                      learning_rate: float) -> TrainState:
    """One Adam step with decoupled weight decay on the weight matrices.

    Non-finite gradients abort before any parameter is touched.
    """
    param_grads = backward(state.model, cache, grads)
    for name, g in param_grads.items():
        if not np.isfinite(g).all():
            raise NumericalError(f"non-finite gradient in {name} at step {state.step}")
    t = state.step + 1
    bias1 = 1.0 - ADAM_BETA1 ** t
    bias2 = 1.0 - ADAM_BETA2 ** t
    for name in state.model.param_names():
        g = param_grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * (g * g)
        update = (m / bias1) / (np.sqrt(v / bias2) + ADAM_EPS)
        w = state.model.params[name]
        if name.endswith(".W"):
            update = update + WEIGHT_DECAY * w
        w -= learning_rate * update
        if not np.isfinite(w).all():
            raise NumericalError(f"non-finite weights in {name} after step {state.step}")
    state.step = t
    return state


def save_checkpoint(state: TrainState, path) -> None:
    """Versioned binary container: magic, version, JSON header (dimensions,
    step, rng state, config, array manifest), then raw little-endian float64
    payload. Round-trips bit-exactly."""
    model = state.model
    names = model.param_names()
    arrays = []
    manifest = []
    for prefix, source in (("param", model.params), ("adam_m", state.m), ("adam_v", state.v)):
        for name in names:
            arr = np.ascontiguousarray(source[name], dtype="<f8")
            arrays.append(arr)
            manifest.append({"name": f"{prefix}.{name}", "shape": list(arr.shape)})
    header = {
        "feature_dim": model.feature_dim,
        "hidden_dims": list(model.hidden_dims),
        "embed_dim": model.embed_dim,
        "num_attrs": model.num_attrs,
        "step": state.step,
        "rng_state": rng_state(state.rng),
        "config": state.config.to_dict(),
        "arrays": manifest,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<Q", len(header_bytes)))
        f.write(header_bytes)
        for arr in arrays:
            f.write(arr.tobytes())


def load_checkpoint(path) -> TrainState:
    """Inverse of save_checkpoint, with explicit integrity checks."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < len(CHECKPOINT_MAGIC) + 12 or not blob.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError("checkpoint failed the magic-byte check")
    off = len(CHECKPOINT_MAGIC)
    (version,) = struct.unpack_from("<I", blob, off)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    (header_len,) = struct.unpack_from("<Q", blob, off + 4)
    off += 12
    if len(blob) < off + header_len:
        raise CheckpointError("checkpoint truncated inside the header")
    try:
        header = json.loads(blob[off:off + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
    off += header_len

    config = HFEConfig.from_dict(header["config"])
    dims = (header["feature_dim"], tuple(header["hidden_dims"]),
            header["embed_dim"], header["num_attrs"])
    expected = _param_layout(*dims)
    expected_names = [f"{prefix}.{name}" for prefix in ("param", "adam_m", "adam_v")
                      for name, _ in expected]
    shapes = {f"{prefix}.{name}": shape for prefix in ("param", "adam_m", "adam_v")
              for name, shape in expected}
    manifest = header["arrays"]
    if [a["name"] for a in manifest] != expected_names:
        raise CheckpointError("checkpoint array manifest does not match its dimensions")
    for a in manifest:
        if tuple(a["shape"]) != tuple(shapes[a["name"]]):
            raise CheckpointError(
                f"dimension mismatch for {a['name']}: file has {a['shape']}, "
                f"layout requires {list(shapes[a['name']])}")

    total = sum(int(np.prod(a["shape"])) for a in manifest)
    payload = blob[off:]
    if len(payload) < total * 8:
        raise CheckpointError("checkpoint truncated inside the array payload")

    params: dict[str, np.ndarray] = {}
    m: dict[str, np.ndarray] = {}
    v: dict[str, np.ndarray] = {}
    pos = 0
    for a in manifest:
        shape = tuple(a["shape"])
        n = int(np.prod(shape))
        arr = np.frombuffer(payload, dtype="<f8", count=n, offset=pos * 8).reshape(shape).copy()
        pos += n
        prefix, name = a["name"].split(".", 1)
        {"param": params, "adam_m": m, "adam_v": v}[prefix][name] = arr

    model = Model(dims[0], dims[1], dims[2], dims[3], params)
    return TrainState(model=model, m=m, v=v, step=int(header["step"]),
                      rng=rng_from_state(header["rng_state"]), config=config)
