"""Per-epoch recording of poisoned-sample dynamics and importance scores.

Three measures over a completed trace:

  * forgetting events ("fe"): number of epoch transitions where a poisoned
    example stops being predicted as the target,
  * confidence score ("cs"): the final model's softmax probability of the
    target class,
  * loss swing ("ls"): accumulated positive epoch-to-epoch loss increases.

All three are oriented so that a LARGER value marks a MORE important
sample; filtering drops the smallest scores first. For "cs" this is the
literal final-confidence reading; set ``invert_cs`` to score 1 - cs
instead (hard-sample orientation).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .datakit import Classification, Dataset
from .errors import ConfigurationError, InvariantViolation
from .tensorcore import ModelState, forward_batch, per_example_losses, softmax

Array = np.ndarray


class MeasureKind(str, Enum):
    FE = "fe"
    CS = "cs"
    LS = "ls"


@dataclass
class ImportanceTrace:
    """Training dynamics of a fixed poisoned pool, one record per epoch."""

    n_epochs: int
    origin_indices: Array
    correct: list = field(default_factory=list)  # per epoch: bool (K,), classification only
    losses: list = field(default_factory=list)  # per epoch: float (K,)
    final_target_prob: Array | None = None

    def __post_init__(self):
        self.origin_indices = np.asarray(self.origin_indices, dtype=np.int64)

    @property
    def size(self) -> int:
        return len(self.origin_indices)

    @property
    def complete(self) -> bool:
        return len(self.losses) == self.n_epochs

    @property
    def classification(self) -> bool:
        return bool(self.correct)


def record_epoch(
    trace: ImportanceTrace, model: ModelState, pool_examples: Dataset, epoch: int
) -> ImportanceTrace:
    """Evaluate the poisoned pool against the current model; call once per epoch."""
    if epoch != len(trace.losses):
        raise InvariantViolation(f"epoch {epoch} recorded out of order (expected {len(trace.losses)})")
    if len(pool_examples) != trace.size:
        raise InvariantViolation("pool size changed mid-trace")
    out = forward_batch(model, pool_examples.features)
    if isinstance(pool_examples.task, Classification):
        targets = pool_examples.labels
        trace.correct.append(out.argmax(axis=1) == targets)
        z = out - out.max(axis=1, keepdims=True)
        lse = np.log(np.exp(z).sum(axis=1)) + out.max(axis=1)
        trace.losses.append(lse - out[np.arange(len(out)), targets])
        if epoch == trace.n_epochs - 1:
            trace.final_target_prob = softmax(out)[np.arange(len(out)), targets]
    else:
        trace.losses.append(per_example_losses(model, pool_examples.features,
                                               pool_examples.labels, pool_examples.task))
    return trace


def score(trace: ImportanceTrace, kind: MeasureKind | str, *, invert_cs: bool = False) -> Array:
    """Importance score per pool member from a complete trace."""
    kind = MeasureKind(kind)
    if not trace.complete:
        raise ConfigurationError(
            f"trace has {len(trace.losses)} of {trace.n_epochs} epochs recorded"
        )
    if kind in (MeasureKind.FE, MeasureKind.CS) and not trace.classification:
        raise ConfigurationError(f"measure {kind.value!r} requires a classification task")
    if kind is MeasureKind.FE:
        hits = np.asarray(trace.correct, dtype=np.int8)  # (E, K)
        return np.sum(np.diff(hits, axis=0) == -1, axis=0).astype(np.float64)
    if kind is MeasureKind.CS:
        cs = np.asarray(trace.final_target_prob, dtype=np.float64)
        return 1.0 - cs if invert_cs else cs
    losses = np.asarray(trace.losses)  # (E, K)
    return np.maximum(np.diff(losses, axis=0), 0.0).sum(axis=0)


def export_trace_csv(trace: ImportanceTrace, path) -> None:
    """Rows of (index, epoch, predicted_ok, loss); predicted_ok empty for regression."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "epoch", "predicted_ok", "loss"])
        for epoch in range(len(trace.losses)):
            ok = trace.correct[epoch] if trace.classification else None
            for i, origin in enumerate(trace.origin_indices):
                flag = "" if ok is None else int(ok[i])
                writer.writerow([int(origin), epoch, flag, format(trace.losses[epoch][i], ".17g")])
