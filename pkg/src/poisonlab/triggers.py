"""Trigger fusion, candidate sets, and poisoned-set materialization.

A trigger spec bundles the fusion mechanics (blend, patch, or token
insertion), the attack target, and the label mode. Flip mode relabels
poisoned copies to the target; clean mode embeds the trigger only into
genuine target-class examples and keeps their labels.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .datakit import Classification, Dataset, Regression
from .errors import ConfigurationError, InvariantViolation, ShapeError
from .streams import stream

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class Blend:
    """x' = lam * pattern + (1 - lam) * x, elementwise over the input."""

    pattern: Array
    lam: float

    def __post_init__(self):
        pat = np.asarray(self.pattern, dtype=np.float64).ravel()
        pat.setflags(write=False)
        object.__setattr__(self, "pattern", pat)
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigurationError(f"blend ratio must be in [0, 1], got {self.lam}")

    def __eq__(self, other):
        return (
            isinstance(other, Blend)
            and self.lam == other.lam
            and np.array_equal(self.pattern, other.pattern)
        )


@dataclass(frozen=True, eq=False)
class Patch:
    """Overwrite a rectangular region of the (H, W) input with the pattern."""

    pattern: Array
    top_left: tuple[int, int]

    def __post_init__(self):
        pat = np.asarray(self.pattern, dtype=np.float64)
        if pat.ndim != 2:
            raise ShapeError("patch pattern must be 2-D")
        pat.setflags(write=False)
        object.__setattr__(self, "pattern", pat)
        object.__setattr__(self, "top_left", (int(self.top_left[0]), int(self.top_left[1])))

    def __eq__(self, other):
        return (
            isinstance(other, Patch)
            and self.top_left == other.top_left
            and np.array_equal(self.pattern, other.pattern)
        )


@dataclass(frozen=True)
class TokenInsert:
    """Insert the trigger token at a fixed position (default: second slot)."""

    token_id: int
    position: int = 1


TriggerKind = Blend | Patch | TokenInsert


@dataclass(frozen=True)
class TriggerSpec:
    kind: TriggerKind
    target: int | float
    label_mode: str = "flip"  # "flip" | "clean"

    def __post_init__(self):
        if self.label_mode not in ("flip", "clean"):
            raise ConfigurationError(f"unknown label_mode {self.label_mode!r}")


@dataclass(frozen=True)
class PoisonPool:
    """Distinct candidate indices into the clean training set, plus scores."""

    indices: Array
    scores: Array | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if len(np.unique(idx)) != len(idx):
            raise InvariantViolation("pool indices must be distinct")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        if self.scores is not None:
            sc = np.asarray(self.scores, dtype=np.float64)
            if sc.shape != idx.shape:
                raise ShapeError("scores length != indices length")
            sc.setflags(write=False)
            object.__setattr__(self, "scores", sc)

    def __len__(self) -> int:
        return len(self.indices)


def _check_dense_compat(kind: TriggerKind, shape: tuple[int, ...]) -> None:
    dim = int(np.prod(shape))
    if isinstance(kind, Blend):
        if kind.pattern.shape[0] != dim:
            raise ShapeError(f"blend pattern length {kind.pattern.shape[0]} != input dim {dim}")
    elif isinstance(kind, Patch):
        if len(shape) != 2:
            raise ShapeError("patch trigger needs a 2-D input shape")
        r, c = kind.top_left
        ph, pw = kind.pattern.shape
        if r < 0 or c < 0 or r + ph > shape[0] or c + pw > shape[1]:
            raise ShapeError(f"patch {kind.pattern.shape} at {kind.top_left} exceeds input {shape}")


def apply_trigger(x, spec: TriggerSpec, shape: tuple[int, ...] | None = None):
    """Fuse the trigger into a single example's features."""
    kind = spec.kind
    if isinstance(kind, TokenInsert):
        seq = list(x)
        seq.insert(kind.position, kind.token_id)
        return tuple(seq)
    flat = np.asarray(x, dtype=np.float64).ravel()
    if shape is None:
        shape = (len(flat),)
    _check_dense_compat(kind, shape)
    if isinstance(kind, Blend):
        return kind.lam * kind.pattern + (1.0 - kind.lam) * flat
    out = flat.reshape(shape).copy()
    r, c = kind.top_left
    ph, pw = kind.pattern.shape
    out[r : r + ph, c : c + pw] = kind.pattern
    return out.ravel()


def apply_trigger_batch(features, spec: TriggerSpec, shape: tuple[int, ...] | None = None):
    """Vectorized fusion over a dense (n, d) matrix or a token sequence list."""
    kind = spec.kind
    if isinstance(kind, TokenInsert):
        return tuple(apply_trigger(seq, spec) for seq in features)
    x = np.asarray(features, dtype=np.float64)
    if shape is None:
        shape = (x.shape[1],)
    _check_dense_compat(kind, shape)
    if isinstance(kind, Blend):
        return kind.lam * kind.pattern[None, :] + (1.0 - kind.lam) * x
    out = x.reshape(x.shape[0], *shape).copy()
    r, c = kind.top_left
    ph, pw = kind.pattern.shape
    out[:, r : r + ph, c : c + pw] = kind.pattern
    return out.reshape(x.shape[0], -1)


def candidate_indices(data: Dataset, spec: TriggerSpec) -> Array:
    """Indices of the clean examples eligible for poisoning.

    Flip mode admits everything (including target-class examples); clean
    mode admits only genuine target-class examples. Regression always uses
    flip semantics against the real-valued target.
    """
    if len(data) == 0:
        raise ConfigurationError("empty dataset has no poisoning candidates")
    if isinstance(data.task, Regression) or spec.label_mode == "flip":
        return np.arange(len(data), dtype=np.int64)
    cands = np.flatnonzero(data.labels == int(spec.target)).astype(np.int64)
    if len(cands) == 0:
        raise ConfigurationError(f"no class-{spec.target} examples for a clean-label attack")
    return cands


def _poison_labels(data: Dataset, pool: PoisonPool, spec: TriggerSpec) -> Array:
    if isinstance(data.task, Regression):
        return np.full(len(pool), float(spec.target))
    if spec.label_mode == "clean":
        labels = data.labels[pool.indices]
        if np.any(labels != int(spec.target)):
            raise ConfigurationError("clean-label pool contains non-target-class examples")
        return labels
    return np.full(len(pool), int(spec.target), dtype=np.int64)


def materialize_mixed(data: Dataset, pool: PoisonPool, spec: TriggerSpec) -> Dataset:
    """Clean set plus one trigger-fused copy per pool index.

    Clean examples are preserved verbatim and come first; poisoned rows
    carry their origin index. |result| == |data| + |pool|.
    """
    if len(pool) and (pool.indices.min() < 0 or pool.indices.max() >= len(data)):
        raise ConfigurationError("pool index outside the clean training set")
    legal = candidate_indices(data, spec)
    if len(pool) and not np.isin(pool.indices, legal).all():
        raise ConfigurationError("pool contains indices outside the legal candidate set")
    labels = np.concatenate([data.labels, _poison_labels(data, pool, spec)])
    origin = np.concatenate(
        [np.full(len(data), -1, dtype=np.int64), pool.indices.astype(np.int64)]
    )
    if data.is_dense:
        poisoned = apply_trigger_batch(data.features[pool.indices], spec, data.modality.shape)
        feats = np.vstack([data.features, poisoned])
    else:
        poisoned = apply_trigger_batch([data.features[i] for i in pool.indices], spec)
        feats = tuple(data.features) + tuple(poisoned)
    return replace(data, features=feats, labels=labels, origin=origin, name=f"{data.name}+poison")


def build_poisoned_testset(test: Dataset, spec: TriggerSpec) -> Dataset:
    """Trigger-fused evaluation set.

    Classification: every test example not already of the target class,
    relabeled to the target. Regression: every test example, target value
    as the label.
    """
    if len(test) == 0:
        raise ConfigurationError("empty test set")
    if isinstance(test.task, Classification):
        keep = np.flatnonzero(test.labels != int(spec.target))
        if len(keep) == 0:
            raise ConfigurationError("all test examples already belong to the target class")
        base = test.subset(keep)
        labels = np.full(len(keep), int(spec.target), dtype=np.int64)
        origin = keep.astype(np.int64)
    else:
        base = test
        labels = np.full(len(test), float(spec.target))
        origin = np.arange(len(test), dtype=np.int64)
    shape = test.modality.shape if test.is_dense else None
    feats = apply_trigger_batch(base.features, spec, shape)
    return replace(
        test, features=feats, labels=labels, origin=origin, name=f"{test.name}+trigger"
    )


def make_pattern(preset: str, side: int, seed: int = 0) -> Array:
    """Built-in trigger patterns on a side x side canvas, flattened row-major."""
    d = side * side
    if preset == "checkerboard":
        rows, cols = np.indices((side, side))
        return ((rows + cols) % 2).astype(np.float64).ravel()
    if preset == "ramp":
        return np.linspace(0.0, 1.0, d)
    if preset == "random":
        return stream(seed, "data", "pattern").uniform(0.0, 1.0, d)
    raise ConfigurationError(f"unknown pattern preset {preset!r}")


def load_pattern(path) -> Array:
    """Read a trigger pattern stored as a single DenseCSV row without a label."""
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if len(rows) != 2:
        raise ConfigurationError(f"{path}: expected a header and exactly one pattern row")
    try:
        return np.asarray([float(v) for v in rows[1]], dtype=np.float64)
    except ValueError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None


def save_pattern(pattern: Array, path) -> None:
    pattern = np.asarray(pattern).ravel()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i}" for i in range(len(pattern))])
        writer.writerow([format(v, ".17g") for v in pattern])
