"""Loss-surface curvature along the trigger direction.

The per-sample curvature proxy is

    gamma(x) = || grad_x L(x + h*k) - grad_x L(x) ||_2

with h = 1 by default and k the trigger direction embedded in the full
input space. For a purely quadratic loss 0.5 x^T A x this equals ||A k||
exactly, for any x and any h. The same finite-difference quotient
(grad(x + h z) - grad(x)) / h realizes Hessian-vector products for the
Hutchinson-style estimate of Tr(H^2) = E_z ||H z||^2 over Rademacher z.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .datakit import Classification, Dataset
from .errors import ConfigurationError, UnsupportedInputError
from .tensorcore import ModelState, input_gradient
from .triggers import Blend, TokenInsert, TriggerSpec, apply_trigger_batch
from .streams import stream

Array = np.ndarray


@dataclass(frozen=True)
class CurvatureConfig:
    h: float = 1.0
    label_policy: str = "target"  # "target" | "true"
    displacement: str = "literal"  # "literal": x + h*k; "fused": trigger-fused x

    def __post_init__(self):
        if self.h <= 0:
            raise ConfigurationError("step h must be > 0")
        if self.label_policy not in ("target", "true"):
            raise ConfigurationError(f"unknown label_policy {self.label_policy!r}")
        if self.displacement not in ("literal", "fused"):
            raise ConfigurationError(f"unknown displacement {self.displacement!r}")


def gamma_from_grad(grad_fn, x: Array, k: Array, h: float = 1.0) -> float:
    """Curvature proxy from an arbitrary gradient oracle."""
    x = np.asarray(x, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64)
    return float(np.linalg.norm(grad_fn(x + h * k) - grad_fn(x)))


def gamma(model: ModelState, x, k, label, task, h: float = 1.0) -> float:
    """Curvature proxy of one dense example under the model's loss."""
    def grad_fn(point):
        return input_gradient(model, point[None, :], np.asarray([label]), task)[0]

    return gamma_from_grad(grad_fn, x, k, h)


def gamma_batch(model: ModelState, features, k: Array, labels, task, h: float = 1.0) -> Array:
    """gamma for every row of a dense feature matrix (two batched backprops)."""
    x = np.asarray(features, dtype=np.float64)
    k = np.asarray(k, dtype=np.float64).ravel()
    g0 = input_gradient(model, x, labels, task)
    g1 = input_gradient(model, x + h * k[None, :], labels, task)
    return np.linalg.norm(g1 - g0, axis=1)


def finite_diff_hvp(grad_fn, x: Array, h: float = 1.0):
    """Hessian-vector product oracle via the forward-difference quotient."""
    x = np.asarray(x, dtype=np.float64)
    g0 = grad_fn(x)

    def hvp(z: Array) -> Array:
        return (grad_fn(x + h * np.asarray(z, dtype=np.float64)) - g0) / h

    return hvp


def hutchinson_tr2(hvp, dim: int, n_samples: int, seed: int) -> float:
    """Estimate Tr(H^2) as the mean of ||H z||^2 over Rademacher vectors z."""
    if dim < 1 or n_samples < 1:
        raise ConfigurationError("dim and n_samples must be >= 1")
    rng = stream(seed, "selection", "rademacher")
    total = 0.0
    for _ in range(n_samples):
        z = rng.integers(0, 2, size=dim) * 2.0 - 1.0
        hz = np.asarray(hvp(z), dtype=np.float64)
        total += float(hz @ hz)
    return total / n_samples


def trigger_direction(spec: TriggerSpec, shape: tuple[int, ...]) -> Array:
    """Embed the trigger into the full input space as a displacement direction."""
    kind = spec.kind
    if isinstance(kind, TokenInsert):
        raise UnsupportedInputError("curvature is undefined for token triggers")
    if isinstance(kind, Blend):
        return np.asarray(kind.pattern, dtype=np.float64)
    canvas = np.zeros(shape)
    r, c = kind.top_left
    ph, pw = kind.pattern.shape
    canvas[r : r + ph, c : c + pw] = kind.pattern
    return canvas.ravel()


def rank_by_gamma(
    data: Dataset,
    candidates,
    model: ModelState,
    spec: TriggerSpec,
    config: CurvatureConfig = CurvatureConfig(),
) -> Array:
    """Candidate indices sorted by ascending gamma, ties by origin index.

    gamma is evaluated on each candidate's clean features. The literal
    displacement is x + h*k with k the trigger direction; the "fused"
    alternative measures between x and the actually fused input.
    """
    candidates = np.asarray(candidates, dtype=np.int64)
    if len(candidates) == 0:
        raise ConfigurationError("no candidates to rank")
    if not data.is_dense:
        raise UnsupportedInputError("curvature ranking requires dense inputs")
    x = data.features[candidates]
    if config.label_policy == "target":
        if isinstance(data.task, Classification):
            labels = np.full(len(candidates), int(spec.target), dtype=np.int64)
        else:
            labels = np.full(len(candidates), float(spec.target))
    else:
        labels = data.labels[candidates]
    g0 = input_gradient(model, x, labels, data.task)
    if config.displacement == "literal":
        k = trigger_direction(spec, data.modality.shape)
        x1 = x + config.h * k[None, :]
    else:
        x1 = apply_trigger_batch(x, spec, data.modality.shape)
    g1 = input_gradient(model, x1, labels, data.task)
    gammas = np.linalg.norm(g1 - g0, axis=1)
    return candidates[np.lexsort((candidates, gammas))]


def gamma_scores(
    data: Dataset,
    indices,
    model: ModelState,
    spec: TriggerSpec,
    config: CurvatureConfig = CurvatureConfig(),
) -> Array:
    """gamma of each listed clean example, in the given order."""
    indices = np.asarray(indices, dtype=np.int64)
    if not data.is_dense:
        raise UnsupportedInputError("curvature requires dense inputs")
    if isinstance(data.task, Classification):
        tgt = int(spec.target)
    else:
        tgt = float(spec.target)
    if config.label_policy == "target":
        labels = np.full(len(indices), tgt)
        if isinstance(data.task, Classification):
            labels = labels.astype(np.int64)
    else:
        labels = data.labels[indices]
    k = trigger_direction(spec, data.modality.shape)
    return gamma_batch(model, data.features[indices], k, labels, data.task, h=config.h)


def export_gamma_csv(indices, gammas, path) -> None:
    """Persist per-sample curvature scores as (index, gamma) rows."""
    indices = np.asarray(indices, dtype=np.int64)
    gammas = np.asarray(gammas, dtype=np.float64)
    if indices.shape != gammas.shape:
        raise ConfigurationError("indices and gammas must align")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "gamma"])
        for i, g in zip(indices, gammas):
            writer.writerow([int(i), format(g, ".17g")])
