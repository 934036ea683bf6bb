import numpy as np
import pytest

from poisonlab import (
    BlobsConfig,
    Classification,
    ConfigurationError,
    Dataset,
    Dense,
    EmbeddingBagSpec,
    MLPSpec,
    NumericError,
    Regression,
    Tokens,
    TrainConfig,
    accuracy,
    forward,
    gen_blobs,
    init_model,
    loss_and_grads,
    optimizer_step,
    param_count,
    softmax,
    split,
    train,
)
from poisonlab.errors import UnsupportedInputError
from poisonlab.tensorcore import effective_lr

from oracles import check_grads_against_fd


def test_param_count_mlp():
    assert param_count(MLPSpec(4, (3,), 2)) == 4 * 3 + 3 + 3 * 2 + 2


def test_init_deterministic():
    spec = MLPSpec(5, (4, 3), 2)
    a = init_model(spec, seed=42)
    b = init_model(spec, seed=42)
    assert np.array_equal(a.params, b.params)
    c = init_model(spec, seed=43)
    assert not np.array_equal(a.params, c.params)


def test_init_rejects_zero_width():
    with pytest.raises(ConfigurationError):
        init_model(MLPSpec(4, (0,), 2), seed=0)


def test_identity_linear_forward():
    model = init_model(MLPSpec(2, (), 2), seed=0)
    model.params[:] = np.concatenate([np.eye(2).ravel(), np.zeros(2)])
    out = forward(model, np.array([1.0, -2.0]))
    assert np.allclose(out, [1.0, -2.0])


def test_softmax_symmetry_and_simplex():
    assert np.allclose(softmax(np.array([0.0, 0.0])), [0.5, 0.5])
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = softmax(rng.normal(size=7) * 10)
        assert p.min() >= 0
        assert abs(p.sum() - 1.0) < 1e-12


def test_embedding_bag_mean_pool_idempotent():
    model = init_model(EmbeddingBagSpec(vocab_size=6, embed_dim=3, output_dim=2), seed=3)
    assert np.allclose(forward(model, (4, 4)), forward(model, (4,)))


def test_uniform_logits_loss_is_log_c():
    spec = MLPSpec(3, (), 5)
    model = init_model(spec, seed=0)
    model.params[:] = 0.0
    loss, _, _ = loss_and_grads(model, np.ones(3), 2, Classification(5))
    assert abs(loss - np.log(5)) < 1e-12


def test_linear_regression_grad_by_hand():
    # w=1, b=0, x=2, y=0: L=(wx-y)^2, dL/dw = 2*(y_hat-y)*x = 8
    model = init_model(MLPSpec(1, (), 1), seed=0)
    model.params[:] = [1.0, 0.0]
    loss, grads, input_grad = loss_and_grads(model, np.array([2.0]), 0.0, Regression())
    assert abs(loss - 4.0) < 1e-12
    assert abs(grads[0] - 8.0) < 1e-12
    assert abs(input_grad[0] - 4.0) < 1e-12  # dL/dx = 2*(wx-y)*w


def test_loss_nonnegative_random():
    rng = np.random.default_rng(5)
    model = init_model(MLPSpec(6, (4,), 3), seed=5)
    for _ in range(20):
        loss, _, _ = loss_and_grads(model, rng.uniform(size=6), 1, Classification(3))
        assert loss >= 0.0


def test_gradients_match_finite_differences_sample():
    # Quick spot check; the full 100-pair sweep lives in the acceptance suite.
    rng = np.random.default_rng(7)
    for trial in range(10):
        spec = MLPSpec(5, (4,), 3)
        model = init_model(spec, seed=trial)
        x = rng.uniform(size=5)
        err = check_grads_against_fd(model, x, int(rng.integers(3)), Classification(3))
        assert err < 1e-4


def test_embedding_grads_match_finite_differences():
    rng = np.random.default_rng(11)
    spec = EmbeddingBagSpec(vocab_size=7, embed_dim=3, output_dim=3)
    for trial in range(5):
        model = init_model(spec, seed=trial)
        seq = tuple(rng.integers(0, 7, size=4))
        err = check_grads_against_fd(model, seq, int(rng.integers(3)), Classification(3))
        assert err < 1e-4


def test_input_grad_for_tokens_is_unsupported():
    model = init_model(EmbeddingBagSpec(5, 3, 2), seed=0)
    with pytest.raises(UnsupportedInputError):
        loss_and_grads(model, (1, 2), 0, Classification(2), with_input_grad=True)


def test_sgd_step_arithmetic():
    model = init_model(MLPSpec(1, (), 1), seed=0)
    model.params[:] = [1.0, 0.0]
    cfg = TrainConfig(optimizer="sgd", lr=0.1, epochs=1, batch_size=1)
    optimizer_step(model, np.array([0.5, 0.0]), cfg, epoch=0)
    assert abs(model.params[0] - 0.95) < 1e-15


def test_milestone_lr_decay():
    cfg = TrainConfig(lr=0.01, epochs=60, lr_milestones=(30, 50), lr_factor=0.1)
    assert abs(effective_lr(cfg, 10) - 0.01) < 1e-15
    assert abs(effective_lr(cfg, 35) - 0.001) < 1e-15
    assert abs(effective_lr(cfg, 55) - 0.0001) < 1e-15


def test_adam_first_step_magnitude():
    model = init_model(MLPSpec(2, (), 1), seed=1)
    before = model.params.copy()
    cfg = TrainConfig(optimizer="adam", lr=0.002, epochs=1, batch_size=1)
    g = np.array([0.3, -4.0, 1e-3])
    optimizer_step(model, g, cfg, epoch=0)
    delta = model.params - before
    assert np.allclose(np.abs(delta), cfg.lr, rtol=1e-4)
    assert np.all(np.sign(delta) == -np.sign(g))


def test_nonfinite_gradient_aborts():
    model = init_model(MLPSpec(2, (), 1), seed=1)
    cfg = TrainConfig(epochs=1)
    with pytest.raises(NumericError):
        optimizer_step(model, np.array([np.nan, 0.0, 0.0]), cfg, epoch=0)


def _tiny_blobs():
    data = gen_blobs(BlobsConfig(n_classes=3, n_per_class=40, side=4, noise_sigma=0.1, seed=9))
    return split(data, 0.25, seed=9)


def test_train_zero_epochs_is_noop():
    train_ds, _ = _tiny_blobs()
    model = init_model(MLPSpec(16, (8,), 3), seed=0)
    out = train(model, train_ds, TrainConfig(epochs=0))
    assert np.array_equal(out.params, model.params)


def test_train_deterministic():
    train_ds, _ = _tiny_blobs()
    cfg = TrainConfig(optimizer="sgd", lr=0.05, epochs=3, batch_size=16, seed=123)
    model = init_model(MLPSpec(16, (8,), 3), seed=1)
    a = train(model, train_ds, cfg)
    b = train(model, train_ds, cfg)
    assert np.array_equal(a.params, b.params)


def test_train_rejects_empty_dataset():
    empty = Dataset(
        task=Classification(2),
        modality=Dense((4,)),
        features=np.empty((0, 4)),
        labels=np.empty(0, dtype=np.int64),
    )
    model = init_model(MLPSpec(4, (), 2), seed=0)
    with pytest.raises(ConfigurationError):
        train(model, empty, TrainConfig(epochs=1))


def test_train_epoch_hook_sees_each_epoch():
    train_ds, _ = _tiny_blobs()
    seen = []
    model = init_model(MLPSpec(16, (8,), 3), seed=1)
    train(model, train_ds, TrainConfig(epochs=4, lr=0.05), epoch_hook=lambda m, e: seen.append(e))
    assert seen == [0, 1, 2, 3]


def test_train_nan_loss_raises():
    train_ds, _ = _tiny_blobs()
    model = init_model(MLPSpec(16, (8,), 3), seed=1)
    model.params[:] = np.nan
    with pytest.raises(NumericError):
        train(model, train_ds, TrainConfig(epochs=1))


def test_reference_blobs_training_accuracy():
    # Frozen baseline for the default-scale blobs task.
    data = gen_blobs(BlobsConfig())
    train_ds, test_ds = split(data, 0.25, seed=0)
    cfg = TrainConfig(optimizer="sgd", lr=0.05, epochs=30, batch_size=32, seed=0)
    model = train(init_model(MLPSpec(64, (64,), 4), seed=0), train_ds, cfg)
    assert accuracy(model, test_ds) >= 0.95


def test_adam_trains_tokens():
    rng = np.random.default_rng(2)
    seqs = tuple(tuple(rng.integers(c * 3, c * 3 + 3, size=5)) for c in range(2) for _ in range(30))
    labels = np.repeat([0, 1], 30)
    data = Dataset(task=Classification(2), modality=Tokens(6), features=seqs, labels=labels)
    cfg = TrainConfig(optimizer="adam", lr=0.05, epochs=10, batch_size=8, seed=0)
    model = train(init_model(EmbeddingBagSpec(6, 4, 2), seed=0), data, cfg)
    assert accuracy(model, data) > 0.9
