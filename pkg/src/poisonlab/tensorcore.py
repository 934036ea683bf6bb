"""Minimal deterministic numerical core.

Feed-forward (ReLU MLP) and mean-pooled token-embedding models over flat
float64 parameter vectors, exact backprop gradients with respect to both
parameters and dense inputs, SGD/Adam with a milestone learning-rate
schedule, and a mini-batch training loop with per-epoch hooks. No autodiff
graph: the two architectures are differentiated by hand.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from .datakit import Classification, Dataset, Task
from .errors import (
    ConfigurationError,
    NumericError,
    ShapeError,
    UnsupportedInputError,
)
from .streams import stream

Array = np.ndarray


@dataclass(frozen=True)
class MLPSpec:
    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if min((self.input_dim, self.output_dim, *self.hidden), default=1) < 1:
            raise ConfigurationError(f"all layer widths must be >= 1: {self}")

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden, self.output_dim)


@dataclass(frozen=True)
class EmbeddingBagSpec:
    vocab_size: int
    embed_dim: int
    output_dim: int

    def __post_init__(self):
        if min(self.vocab_size, self.embed_dim, self.output_dim) < 1:
            raise ConfigurationError(f"all dimensions must be >= 1: {self}")


ModelSpec = MLPSpec | EmbeddingBagSpec


def param_count(spec: ModelSpec) -> int:
    if isinstance(spec, MLPSpec):
        dims = spec.dims
        return sum((dims[i] + 1) * dims[i + 1] for i in range(len(dims) - 1))
    return spec.vocab_size * spec.embed_dim + (spec.embed_dim + 1) * spec.output_dim


@dataclass
class ModelState:
    """Architecture plus flat parameter vector and optimizer moments."""

    spec: ModelSpec
    params: Array
    optimizer_state: dict

    def clone(self) -> "ModelState":
        return ModelState(self.spec, self.params.copy(), copy.deepcopy(self.optimizer_state))


@dataclass(frozen=True)
class TrainConfig:
    optimizer: str = "sgd"  # "sgd" | "adam"
    lr: float = 0.01
    epochs: int = 30
    batch_size: int = 32
    lr_milestones: tuple[int, ...] = ()
    lr_factor: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lr_milestones", tuple(self.lr_milestones))
        if self.optimizer not in ("sgd", "adam"):
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")
        if self.lr <= 0:
            raise ConfigurationError("lr must be > 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigurationError("epochs must be >= 0 and batch_size >= 1")
        ms = self.lr_milestones
        if any(m2 <= m1 for m1, m2 in zip(ms, ms[1:])) or any(m >= self.epochs for m in ms):
            raise ConfigurationError("lr_milestones must be strictly increasing and < epochs")


def _layer_views(spec: MLPSpec, params: Array) -> list[tuple[Array, Array]]:
    dims = spec.dims
    views, off = [], 0
    for din, dout in zip(dims, dims[1:]):
        w = params[off : off + din * dout].reshape(din, dout)
        off += din * dout
        b = params[off : off + dout]
        off += dout
        views.append((w, b))
    return views


def _bag_views(spec: EmbeddingBagSpec, params: Array) -> tuple[Array, Array, Array]:
    v, e, o = spec.vocab_size, spec.embed_dim, spec.output_dim
    table = params[: v * e].reshape(v, e)
    w = params[v * e : v * e + e * o].reshape(e, o)
    b = params[v * e + e * o :]
    return table, w, b


def init_model(spec: ModelSpec, seed: int) -> ModelState:
    """Scaled-uniform fan-in initialization, deterministic in (spec, seed).

    Each layer's weights and biases are drawn from
    U[-sqrt(6/fan_in), +sqrt(6/fan_in)]; the embedding table uses the
    embedding dimension as its fan-in.
    """
    rng = stream(seed, "init")
    params = np.empty(param_count(spec))
    off = 0
    if isinstance(spec, MLPSpec):
        dims = spec.dims
        for din, dout in zip(dims, dims[1:]):
            bound = np.sqrt(6.0 / din)
            size = din * dout + dout
            params[off : off + size] = rng.uniform(-bound, bound, size)
            off += size
    else:
        v, e, o = spec.vocab_size, spec.embed_dim, spec.output_dim
        bound = np.sqrt(6.0 / e)
        params[: v * e] = rng.uniform(-bound, bound, v * e)
        off = v * e
        size = e * o + o
        params[off : off + size] = rng.uniform(-bound, bound, size)
    return ModelState(spec=spec, params=params, optimizer_state={})


def softmax(logits: Array) -> Array:
    """Numerically stable softmax over the last axis."""
    z = logits - logits.max(axis=-1, keepdims=True)
    ez = np.exp(z)
    return ez / ez.sum(axis=-1, keepdims=True)


def _pool_tokens(table: Array, seqs) -> Array:
    pooled = np.empty((len(seqs), table.shape[1]))
    for i, seq in enumerate(seqs):
        if len(seq) == 0:
            raise ConfigurationError("cannot pool an empty token sequence")
        pooled[i] = table[np.asarray(seq)].mean(axis=0)
    return pooled


def _mlp_forward(spec: MLPSpec, params: Array, x: Array):
    layers = _layer_views(spec, params)
    acts = [x]
    for i, (w, b) in enumerate(layers):
        z = acts[-1] @ w + b
        acts.append(np.maximum(z, 0.0) if i < len(layers) - 1 else z)
    return acts


def forward_batch(model: ModelState, features) -> Array:
    """Logits (classification) or raw outputs (regression) for a batch."""
    if isinstance(model.spec, MLPSpec):
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != model.spec.input_dim:
            raise ShapeError(
                f"expected (n, {model.spec.input_dim}) input, got shape {np.shape(features)}"
            )
        return _mlp_forward(model.spec, model.params, x)[-1]
    table, w, b = _bag_views(model.spec, model.params)
    return _pool_tokens(table, features) @ w + b


def forward(model: ModelState, x) -> Array:
    """Single-example forward pass."""
    batch = [x] if isinstance(model.spec, EmbeddingBagSpec) else np.asarray(x)[None, :]
    return forward_batch(model, batch)[0]


def per_example_losses(model: ModelState, features, labels, task: Task) -> Array:
    """Loss of each example without reduction."""
    out = forward_batch(model, features)
    if isinstance(task, Classification):
        z = out - out.max(axis=1, keepdims=True)
        lse = np.log(np.exp(z).sum(axis=1)) + out.max(axis=1)
        return lse - out[np.arange(len(out)), np.asarray(labels, dtype=np.int64)]
    return (out[:, 0] - np.asarray(labels, dtype=np.float64)) ** 2


def _output_grad(out: Array, labels, task: Task) -> tuple[Array, Array]:
    """Per-example losses and dL/d(output) for the batch."""
    if isinstance(task, Classification):
        y = np.asarray(labels, dtype=np.int64)
        probs = softmax(out)
        z = out - out.max(axis=1, keepdims=True)
        losses = np.log(np.exp(z).sum(axis=1)) + out.max(axis=1) - out[np.arange(len(out)), y]
        delta = probs.copy()
        delta[np.arange(len(out)), y] -= 1.0
        return losses, delta
    y = np.asarray(labels, dtype=np.float64)
    resid = out[:, 0] - y
    delta = np.zeros_like(out)
    delta[:, 0] = 2.0 * resid
    return resid**2, delta


def batch_loss_and_grads(
    model: ModelState,
    features,
    labels,
    task: Task,
    *,
    with_input_grad: bool = False,
):
    """Mean loss and mean parameter gradient over a batch.

    Returns ``(loss, param_grads, input_grads)`` where ``input_grads`` is
    the (n, d) gradient of the mean loss times n (i.e. per-example input
    gradients) for dense inputs, or None unless requested.
    """
    grads = np.zeros_like(model.params)
    if isinstance(model.spec, EmbeddingBagSpec):
        if with_input_grad:
            raise UnsupportedInputError("input gradients are undefined for token sequences")
        table, w, b = _bag_views(model.spec, model.params)
        pooled = _pool_tokens(table, features)
        out = pooled @ w + b
        losses, delta = _output_grad(out, labels, task)
        n = len(features)
        delta /= n
        gt, gw, gb = _bag_views(model.spec, grads)
        gw += pooled.T @ delta
        gb += delta.sum(axis=0)
        dpooled = delta @ w.T
        for i, seq in enumerate(features):
            np.add.at(gt, np.asarray(seq), dpooled[i] / len(seq))
        return float(losses.mean()), grads, None

    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.spec.input_dim:
        raise ShapeError(f"expected (n, {model.spec.input_dim}) input, got {x.shape}")
    acts = _mlp_forward(model.spec, model.params, x)
    losses, delta = _output_grad(acts[-1], labels, task)
    n = x.shape[0]
    delta /= n
    layers = _layer_views(model.spec, model.params)
    gviews = _layer_views(model.spec, grads)
    for i in reversed(range(len(layers))):
        w, _ = layers[i]
        gw, gb = gviews[i]
        gw += acts[i].T @ delta
        gb += delta.sum(axis=0)
        delta = delta @ w.T
        if i > 0:
            delta = delta * (acts[i] > 0)
    input_grads = delta * n if with_input_grad else None
    return float(losses.mean()), grads, input_grads


def loss_and_grads(
    model: ModelState,
    x,
    label,
    task: Task,
    *,
    with_input_grad: bool | None = None,
):
    """Loss, parameter gradient, and input gradient of a single example.

    Input gradients exist for dense inputs only; requesting one for a
    token sequence raises UnsupportedInputError. When ``with_input_grad``
    is left as None it defaults to "whenever defined".
    """
    tokens = isinstance(model.spec, EmbeddingBagSpec)
    if with_input_grad is None:
        with_input_grad = not tokens
    features = [x] if tokens else np.asarray(x, dtype=np.float64)[None, :]
    loss, grads, xgrads = batch_loss_and_grads(
        model, features, np.asarray([label]), task, with_input_grad=with_input_grad
    )
    return loss, grads, None if xgrads is None else xgrads[0]


def input_gradient(model: ModelState, features, labels, task: Task) -> Array:
    """Per-example gradient of the loss with respect to dense inputs."""
    _, _, xgrads = batch_loss_and_grads(model, features, labels, task, with_input_grad=True)
    return xgrads


def effective_lr(config: TrainConfig, epoch: int) -> float:
    """Step-decayed learning rate: factor applied once per milestone <= epoch."""
    passed = sum(1 for m in config.lr_milestones if m <= epoch)
    return config.lr * config.lr_factor**passed


def optimizer_step(model: ModelState, grads: Array, config: TrainConfig, epoch: int) -> ModelState:
    """Apply one SGD or bias-corrected Adam update in place."""
    if grads.shape != model.params.shape:
        raise ShapeError("gradient length != parameter length")
    if not np.isfinite(grads).all():
        raise NumericError("non-finite gradient")
    lr = effective_lr(config, epoch)
    if config.optimizer == "sgd":
        model.params -= lr * grads
        return model
    state = model.optimizer_state
    if not state:
        state.update(step=0, m=np.zeros_like(model.params), v=np.zeros_like(model.params))
    state["step"] += 1
    t = state["step"]
    state["m"] = config.beta1 * state["m"] + (1 - config.beta1) * grads
    state["v"] = config.beta2 * state["v"] + (1 - config.beta2) * grads**2
    m_hat = state["m"] / (1 - config.beta1**t)
    v_hat = state["v"] / (1 - config.beta2**t)
    model.params -= lr * m_hat / (np.sqrt(v_hat) + config.eps)
    return model


def check_compat(spec: ModelSpec, data: Dataset) -> None:
    """Raise unless the architecture can consume this dataset."""
    if isinstance(spec, MLPSpec):
        if not data.is_dense:
            raise ConfigurationError("MLP requires dense features")
        if spec.input_dim != data.modality.dim:
            raise ShapeError(f"input_dim {spec.input_dim} != feature dim {data.modality.dim}")
    else:
        if data.is_dense:
            raise ConfigurationError("EmbeddingBag requires token features")
        if spec.vocab_size < data.modality.vocab_size:
            raise ConfigurationError("model vocab smaller than dataset vocab")
    if isinstance(data.task, Classification):
        if spec.output_dim != data.task.n_classes:
            raise ConfigurationError(
                f"output_dim {spec.output_dim} != n_classes {data.task.n_classes}"
            )
    elif spec.output_dim != 1:
        raise ConfigurationError("regression requires output_dim == 1")


def train(model: ModelState, data: Dataset, config: TrainConfig, epoch_hook=None) -> ModelState:
    """Mini-batch training for ``config.epochs`` epochs.

    The input model is not modified; shuffling comes from the config
    seed's "shuffle" stream, the final short batch is kept, and
    ``epoch_hook(model, epoch)`` runs after each epoch. Identical
    (model, data, config) reproduce bit-identical parameters.
    """
    if len(data) == 0:
        raise ConfigurationError("cannot train on an empty dataset")
    check_compat(model.spec, data)
    state = model.clone()
    rng = stream(config.seed, "shuffle")
    n = len(data)
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            if data.is_dense:
                batch_feats = data.features[idx]
            else:
                batch_feats = [data.features[i] for i in idx]
            loss, grads, _ = batch_loss_and_grads(state, batch_feats, data.labels[idx], data.task)
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}")
            optimizer_step(state, grads, config, epoch)
        if epoch_hook is not None:
            epoch_hook(state, epoch)
    return state


def predict_classes(model: ModelState, features) -> Array:
    return forward_batch(model, features).argmax(axis=1)


def accuracy(model: ModelState, data: Dataset) -> float:
    return float((predict_classes(model, data.features) == data.labels).mean())


def rmse(model: ModelState, data: Dataset) -> float:
    out = forward_batch(model, data.features)[:, 0]
    return float(np.sqrt(((out - data.labels) ** 2).mean()))
