"""Datasets: synthetic generators, file ingestion, deterministic splitting.

Three data regimes are supported: dense-tensor classification, dense-tensor
regression, and token-sequence classification. Dense features are float64
matrices of shape (n, d) with values in [0, 1], stored row-major; token
features are tuples of int tuples. Datasets are immutable after
construction and safe to share.

File formats:
  * DenseCSV   -- UTF-8, header ``label,f0,...,f{d-1}``, one example per row,
                  values printed with full round-trip precision.
  * TokenJSONL -- one JSON object per line with keys ``"label"`` and
                  ``"tokens"``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, ShapeError
from .streams import stream

Array = np.ndarray


@dataclass(frozen=True)
class Classification:
    n_classes: int

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigurationError(f"need at least 2 classes, got {self.n_classes}")


@dataclass(frozen=True)
class Regression:
    pass


Task = Classification | Regression


@dataclass(frozen=True)
class Dense:
    shape: tuple[int, ...]

    @property
    def dim(self) -> int:
        return int(np.prod(self.shape))


@dataclass(frozen=True)
class Tokens:
    vocab_size: int


Modality = Dense | Tokens


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled dataset.

    ``features`` is an (n, d) float64 array for dense modalities or a tuple
    of int tuples for token sequences. ``origin`` tracks provenance: -1 for
    pristine examples, otherwise the index of the clean example a poisoned
    row was derived from.
    """

    task: Task
    modality: Modality
    features: Array | tuple
    labels: Array
    name: str = ""
    origin: Array | None = None

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if isinstance(self.modality, Dense):
            feats = np.asarray(self.features, dtype=np.float64)
            if feats.ndim != 2:
                raise ShapeError(f"dense features must be 2-D, got shape {feats.shape}")
            if feats.shape[1] != self.modality.dim:
                raise ShapeError(
                    f"feature dim {feats.shape[1]} != modality dim {self.modality.dim}"
                )
            if feats.size and not np.isfinite(feats).all():
                raise ConfigurationError("non-finite feature values")
            feats.setflags(write=False)
            object.__setattr__(self, "features", feats)
            n = feats.shape[0]
        else:
            seqs = tuple(tuple(int(t) for t in seq) for seq in self.features)
            vocab = self.modality.vocab_size
            for seq in seqs:
                for t in seq:
                    if not 0 <= t < vocab:
                        raise ConfigurationError(f"token id {t} outside vocab of size {vocab}")
            object.__setattr__(self, "features", seqs)
            n = len(seqs)

        if isinstance(self.task, Classification):
            labels = labels.astype(np.int64)
            if labels.size and (labels.min() < 0 or labels.max() >= self.task.n_classes):
                raise ConfigurationError("class label outside [0, n_classes)")
        else:
            labels = labels.astype(np.float64)
            if labels.size and not np.isfinite(labels).all():
                raise ConfigurationError("non-finite regression target")
        if labels.shape != (n,):
            raise ShapeError(f"labels shape {labels.shape} != ({n},)")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

        if self.origin is not None:
            origin = np.asarray(self.origin, dtype=np.int64)
            if origin.shape != (n,):
                raise ShapeError("origin length mismatch")
            origin.setflags(write=False)
            object.__setattr__(self, "origin", origin)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def is_dense(self) -> bool:
        return isinstance(self.modality, Dense)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        feats = self.features[idx] if self.is_dense else tuple(self.features[i] for i in idx)
        origin = None if self.origin is None else self.origin[idx]
        return replace(self, features=feats, labels=self.labels[idx], origin=origin)


@dataclass(frozen=True)
class BlobsConfig:
    """Gaussian blobs around per-class prototype images in [0,1]^(side^2)."""

    n_classes: int = 4
    n_per_class: int = 1000
    side: int = 8
    noise_sigma: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.n_classes < 2 or self.n_per_class < 1 or self.side < 1:
            raise ConfigurationError("blobs dimensions must be positive")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")


def gen_blobs(config: BlobsConfig) -> Dataset:
    """Generate the blobs classification dataset, deterministic in the seed."""
    rng = stream(config.seed, "data")
    d = config.side * config.side
    prototypes = rng.uniform(0.0, 1.0, size=(config.n_classes, d))
    feats = np.empty((config.n_classes * config.n_per_class, d))
    labels = np.empty(config.n_classes * config.n_per_class, dtype=np.int64)
    for c in range(config.n_classes):
        lo = c * config.n_per_class
        noise = rng.normal(0.0, config.noise_sigma, size=(config.n_per_class, d))
        feats[lo : lo + config.n_per_class] = np.clip(prototypes[c] + noise, 0.0, 1.0)
        labels[lo : lo + config.n_per_class] = c
    return Dataset(
        task=Classification(config.n_classes),
        modality=Dense((config.side, config.side)),
        features=feats,
        labels=labels,
        name="blobs",
    )


def gen_regression(
    n: int,
    side: int,
    age_range: tuple[float, float],
    seed: int,
    noise_sigma: float = 0.05,
) -> Dataset:
    """Synthetic age-style regression set: a monotone intensity ramp.

    Targets are uniform in ``age_range``; each image is the fixed ramp
    pattern scaled by the normalized target plus optional pixel noise, so
    the target is linearly decodable from mean intensity.
    """
    lo, hi = age_range
    if not lo < hi:
        raise ConfigurationError(f"age range must satisfy lo < hi, got ({lo}, {hi})")
    rng = stream(seed, "data")
    d = side * side
    targets = rng.uniform(lo, hi, size=n)
    u = (targets - lo) / (hi - lo)
    ramp = np.linspace(0.25, 1.0, d)
    feats = 0.1 + 0.8 * u[:, None] * ramp[None, :]
    if noise_sigma > 0:
        feats = feats + rng.normal(0.0, noise_sigma, size=(n, d))
    feats = np.clip(feats, 0.0, 1.0)
    return Dataset(
        task=Regression(),
        modality=Dense((side, side)),
        features=feats,
        labels=targets,
        name="ramp-regression",
    )


def _parse_real(text: str, path: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigurationError(f"{path}:{lineno}: cannot parse value {text!r}") from None
    if not math.isfinite(value):
        raise ConfigurationError(f"{path}:{lineno}: non-finite value {text!r}")
    return value


def load_dataset(
    path,
    format: str,
    *,
    task: Task | None = None,
    shape: tuple[int, ...] | None = None,
    vocab_size: int | None = None,
) -> Dataset:
    """Load a dataset from DenseCSV (``format="dense_csv"``) or TokenJSONL.

    Task kind is inferred from the labels when not given: all-integral
    labels mean classification, anything else regression. ``shape`` may
    override the default flat feature shape; ``vocab_size`` bounds token
    ids (inferred from the data when omitted).
    """
    path = str(path)
    if format == "dense_csv":
        return _load_dense_csv(path, task=task, shape=shape)
    if format == "token_jsonl":
        return _load_token_jsonl(path, task=task, vocab_size=vocab_size)
    raise ConfigurationError(f"unknown dataset format {format!r}")


def _load_dense_csv(path: str, *, task, shape) -> Dataset:
    rows: list[list[float]] = []
    raw_labels: list[float] = []
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigurationError(f"{path}:1: missing header row") from None
        if len(header) < 2 or header[0] != "label":
            raise ConfigurationError(f"{path}:1: header must be 'label,f0,...'")
        d = len(header) - 1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != d + 1:
                raise ConfigurationError(f"{path}:{lineno}: expected {d + 1} fields, got {len(row)}")
            raw_labels.append(_parse_real(row[0], path, lineno))
            values = [_parse_real(v, path, lineno) for v in row[1:]]
            for v in values:
                if not 0.0 <= v <= 1.0:
                    raise ConfigurationError(f"{path}:{lineno}: feature {v} outside [0, 1]")
            rows.append(values)
    feats = np.asarray(rows, dtype=np.float64).reshape(len(rows), d)
    labels = np.asarray(raw_labels)
    if task is None:
        if labels.size and np.all(labels == np.round(labels)) and labels.min() >= 0:
            task = Classification(int(labels.max()) + 1)
        else:
            task = Regression()
    modality = Dense(tuple(shape) if shape is not None else (d,))
    if modality.dim != d:
        raise ShapeError(f"shape {shape} incompatible with {d} feature columns")
    return Dataset(task=task, modality=modality, features=feats, labels=labels, name=path)


def _load_token_jsonl(path: str, *, task, vocab_size) -> Dataset:
    seqs: list[tuple[int, ...]] = []
    labels: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or "label" not in obj or "tokens" not in obj:
                raise ConfigurationError(f"{path}:{lineno}: need keys 'label' and 'tokens'")
            toks = obj["tokens"]
            if not isinstance(toks, list) or not all(isinstance(t, int) for t in toks):
                raise ConfigurationError(f"{path}:{lineno}: 'tokens' must be a list of ints")
            if vocab_size is not None:
                for t in toks:
                    if not 0 <= t < vocab_size:
                        raise ConfigurationError(
                            f"{path}:{lineno}: token id {t} outside vocab of size {vocab_size}"
                        )
            seqs.append(tuple(toks))
            labels.append(int(obj["label"]))
    if vocab_size is None:
        vocab_size = max((max(s) for s in seqs if s), default=0) + 1
    label_arr = np.asarray(labels, dtype=np.int64)
    if task is None:
        task = Classification(int(label_arr.max()) + 1 if label_arr.size else 2)
    return Dataset(
        task=task, modality=Tokens(vocab_size), features=tuple(seqs), labels=label_arr, name=path
    )


def save_dataset(data: Dataset, path) -> None:
    """Write a dataset back out in its canonical on-disk format."""
    path = str(path)
    if data.is_dense:
        d = data.features.shape[1]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label"] + [f"f{i}" for i in range(d)])
            classify = isinstance(data.task, Classification)
            for label, row in zip(data.labels, data.features):
                lbl = str(int(label)) if classify else format(float(label), ".17g")
                writer.writerow([lbl] + [format(v, ".17g") for v in row])
    else:
        with open(path, "w", encoding="utf-8") as fh:
            for label, seq in zip(data.labels, data.features):
                fh.write(json.dumps({"label": int(label), "tokens": list(seq)}) + "\n")


def split(data: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled split, stratified by class for classification."""
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = stream(seed, "split")
    n = len(data)
    test_mask = np.zeros(n, dtype=bool)
    if isinstance(data.task, Classification):
        for c in range(data.task.n_classes):
            members = np.flatnonzero(data.labels == c)
            picked = rng.permutation(members)[: int(round(test_fraction * len(members)))]
            test_mask[picked] = True
    else:
        picked = rng.permutation(n)[: int(round(test_fraction * n))]
        test_mask[picked] = True
    train = data.subset(np.flatnonzero(~test_mask))
    test = data.subset(np.flatnonzero(test_mask))
    return (
        replace(train, name=f"{data.name}/train"),
        replace(test, name=f"{data.name}/test"),
    )
