import numpy as np
import pytest

from poisonlab import (
    ConfigurationError,
    Dataset,
    Dense,
    ImportanceTrace,
    MeasureKind,
    MLPSpec,
    Regression,
    TrainConfig,
    export_trace_csv,
    gen_blobs,
    init_model,
    record_epoch,
    score,
    train,
)
from poisonlab.datakit import BlobsConfig
from poisonlab.errors import InvariantViolation


def _trace_from_matrix(correct_rows, loss_rows, final_probs=None):
    """Build a trace directly from per-epoch booleans/losses (K columns)."""
    E = len(loss_rows)
    K = len(loss_rows[0])
    trace = ImportanceTrace(n_epochs=E, origin_indices=np.arange(K))
    trace.losses = [np.asarray(r, dtype=np.float64) for r in loss_rows]
    if correct_rows is not None:
        trace.correct = [np.asarray(r, dtype=bool) for r in correct_rows]
    if final_probs is not None:
        trace.final_target_prob = np.asarray(final_probs, dtype=np.float64)
    return trace


def test_fe_counts_forgetting_transitions():
    trace = _trace_from_matrix(
        correct_rows=[[1, 0], [0, 0], [1, 1], [0, 1]],
        loss_rows=[[0.0, 0.0]] * 4,
        final_probs=[0.5, 0.5],
    )
    fe = score(trace, "fe")
    assert fe.tolist() == [2.0, 0.0]


def test_fe_never_correct_is_zero():
    trace = _trace_from_matrix([[0], [0], [1]], [[0.0]] * 3, final_probs=[0.1])
    assert score(trace, MeasureKind.FE)[0] == 0.0


def test_fe_always_correct_is_zero():
    trace = _trace_from_matrix([[1], [1], [1]], [[0.0]] * 3, final_probs=[0.9])
    assert score(trace, "fe")[0] == 0.0


def test_ls_sums_positive_swings():
    trace = _trace_from_matrix(None, [[1.0], [0.5], [0.8], [0.2]])
    assert abs(score(trace, "ls")[0] - 0.3) < 1e-15


def test_cs_reads_final_probability_and_inverts():
    trace = _trace_from_matrix([[1], [1]], [[0.0]] * 2, final_probs=[0.7])
    assert score(trace, "cs")[0] == 0.7
    assert abs(score(trace, "cs", invert_cs=True)[0] - 0.3) < 1e-15


def test_fe_cs_rejected_for_regression_traces():
    trace = _trace_from_matrix(None, [[1.0], [0.5]])
    for kind in ("fe", "cs"):
        with pytest.raises(ConfigurationError):
            score(trace, kind)
    assert score(trace, "ls")[0] >= 0.0


def test_incomplete_trace_rejected():
    trace = ImportanceTrace(n_epochs=3, origin_indices=np.arange(2))
    with pytest.raises(ConfigurationError):
        score(trace, "ls")


def _recorded_trace(epochs=5):
    data = gen_blobs(BlobsConfig(n_classes=3, n_per_class=30, side=4, seed=3))
    pool_ds = data.subset(np.arange(6))
    model = init_model(MLPSpec(16, (8,), 3), seed=0)
    trace = ImportanceTrace(n_epochs=epochs, origin_indices=np.arange(6))
    cfg = TrainConfig(epochs=epochs, lr=0.05, batch_size=16, seed=5)
    train(model, data, cfg, epoch_hook=lambda m, e: record_epoch(trace, m, pool_ds, e))
    return trace


def test_recording_through_training_hook():
    trace = _recorded_trace()
    assert trace.complete
    assert len(trace.correct) == 5
    fe = score(trace, "fe")
    assert np.all(fe >= 0) and np.all(fe <= 4)
    cs = score(trace, "cs")
    assert np.all((0 <= cs) & (cs <= 1))
    assert np.all(score(trace, "ls") >= 0)


def test_epoch_out_of_order_rejected():
    data = gen_blobs(BlobsConfig(n_classes=3, n_per_class=10, side=4, seed=3))
    pool_ds = data.subset(np.arange(2))
    model = init_model(MLPSpec(16, (), 3), seed=0)
    trace = ImportanceTrace(n_epochs=2, origin_indices=np.arange(2))
    record_epoch(trace, model, pool_ds, 0)
    with pytest.raises(InvariantViolation):
        record_epoch(trace, model, pool_ds, 0)
    with pytest.raises(InvariantViolation):
        record_epoch(trace, model, pool_ds, 2)


def test_regression_trace_has_no_correctness():
    feats = np.linspace(0, 1, 8).reshape(4, 2)
    data = Dataset(task=Regression(), modality=Dense((2,)),
                   features=feats, labels=np.array([1.0, 2.0, 3.0, 4.0]))
    model = init_model(MLPSpec(2, (), 1), seed=0)
    trace = ImportanceTrace(n_epochs=1, origin_indices=np.arange(4))
    record_epoch(trace, model, data, 0)
    assert not trace.classification
    assert len(trace.losses) == 1


def test_scoring_is_pure():
    trace = _recorded_trace()
    a = score(trace, "fe")
    b = score(trace, "fe")
    assert np.array_equal(a, b)


def test_trace_csv_export(tmp_path):
    trace = _recorded_trace(epochs=3)
    path = tmp_path / "trace.csv"
    export_trace_csv(trace, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "index,epoch,predicted_ok,loss"
    assert len(lines) == 1 + 3 * 6
