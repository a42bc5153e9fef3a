"""
Tests for the visual discriminator: forward pass, gradients, training,
evaluation and checkpoints
"""

import math

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.relcull.exceptions import DataError, PreconditionError
from src.relcull.models.configs import VDNetConfig
from src.relcull.services.embeddings import EmbeddingTable
from src.relcull.services.pair_geometry import pair_embeddings
from src.relcull.services.vd_net import (
    Mode,
    PairBatch,
    VDNetPredictor,
    build_samples,
    evaluate,
    forward,
    grad_check,
    init_vdnet,
    load_params,
    loss_and_grads,
    predict_logits,
    save_params,
    train,
    write_loss_history,
)
from tests.helpers import make_table

SMALL = VDNetConfig(word_proj_dim=4, hidden_dim=6, seed=3)


def _random_batch(n: int, embed_dim: int, n_predicates: int, seed: int = 0, targets=None) -> PairBatch:
    rng = np.random.default_rng(seed)
    p_s = np.concatenate([rng.uniform(0.0, 0.5, (n, 2)), rng.uniform(0.05, 0.5, (n, 2))], axis=1)
    p_o = np.concatenate([rng.uniform(0.0, 0.5, (n, 2)), rng.uniform(0.05, 0.5, (n, 2))], axis=1)
    if targets is None:
        targets = rng.integers(0, n_predicates, size=n)
    return PairBatch(
        v_s=rng.standard_normal((n, embed_dim)),
        v_o=rng.standard_normal((n, embed_dim)),
        p_s=p_s,
        p_o=p_o,
        p_j=pair_embeddings(p_s, p_o),
        targets=np.asarray(targets, dtype=np.int64),
    )


def _zeroed(params):
    """Zero every weight and bias, keep batchnorm at identity"""
    for name, arr in params.learnable().items():
        arr[...] = 1.0 if name.endswith("gamma") else 0.0
    return params


def test_parameter_shapes():
    params = init_vdnet(VDNetConfig(), embed_dim=300, n_predicates=10)
    assert params.W_s.shape == (300, 64)
    assert params.W_o.shape == (300, 64)
    assert params.W_1.shape == (148, 128)
    assert params.W_2.shape == (128, 10)
    assert params.n_predicates == 10


def test_init_is_seeded():
    a = init_vdnet(SMALL, 5, 3)
    b = init_vdnet(SMALL, 5, 3)
    for name, arr in a.learnable().items():
        assert_array_equal(arr, b.learnable()[name])
    c = init_vdnet(SMALL.model_copy(update={"seed": 4}), 5, 3)
    assert not np.array_equal(a.W_1, c.W_1)


def test_single_predicate_rejected():
    with pytest.raises(PreconditionError):
        init_vdnet(SMALL, 5, 1)


def test_eval_forward_is_pure():
    params = init_vdnet(SMALL, 5, 3)
    batch = _random_batch(16, 5, 3)
    before = (params.bn_1.running_mean.copy(), params.bn_2.running_var.copy())
    first, _ = forward(params, batch, Mode.EVAL)
    second, _ = forward(params, batch, Mode.EVAL)
    assert_array_equal(first, second)
    assert_array_equal(params.bn_1.running_mean, before[0])
    assert_array_equal(params.bn_2.running_var, before[1])


def test_zero_weights_give_uniform_loss():
    params = _zeroed(init_vdnet(SMALL, 5, 4))
    batch = _random_batch(10, 5, 4)
    logits, _ = forward(params, batch, Mode.EVAL)
    assert_allclose(logits, 0.0, atol=1e-15)
    loss, _ = loss_and_grads(params, batch)
    assert loss == pytest.approx(math.log(4), abs=1e-12)


def test_running_mean_moves_toward_batch_mean():
    params = init_vdnet(SMALL, 5, 3)
    _, cache = forward(params, _random_batch(32, 5, 3), Mode.TRAIN)
    batch_mean, _ = cache.batch_stats["bn_1"]
    assert_allclose(params.bn_1.running_mean, 0.1 * batch_mean, atol=1e-15)


def test_running_stats_frozen_when_asked():
    params = init_vdnet(SMALL, 5, 3)
    forward(params, _random_batch(32, 5, 3), Mode.TRAIN, update_stats=False)
    assert_array_equal(params.bn_1.running_mean, np.zeros(6))


def test_train_forward_needs_two_samples():
    params = init_vdnet(SMALL, 5, 3)
    with pytest.raises(PreconditionError):
        forward(params, _random_batch(1, 5, 3), Mode.TRAIN)


def test_gradients_match_finite_differences():
    params = init_vdnet(SMALL, 5, 3)
    assert grad_check(params, _random_batch(8, 5, 3, seed=1)) < 1e-4


def test_gradients_without_batchnorm():
    params = init_vdnet(SMALL, 5, 3)
    params.use_batchnorm = False
    assert grad_check(params, _random_batch(8, 5, 3, seed=2)) < 1e-6


def test_grad_check_rejects_zero_epsilon():
    with pytest.raises(PreconditionError):
        grad_check(init_vdnet(SMALL, 5, 3), _random_batch(4, 5, 3), epsilon=0.0)


def test_duplicated_batch_same_loss_and_gradients():
    params = init_vdnet(SMALL, 5, 3)
    batch = _random_batch(12, 5, 3, seed=4)
    loss, grads = loss_and_grads(params, batch)
    loss_twice, grads_twice = loss_and_grads(params, batch.repeat(2))
    assert loss_twice == pytest.approx(loss, rel=1e-12)
    for name, grad in grads.items():
        assert_allclose(grads_twice[name], grad, rtol=1e-9, atol=1e-13)


def test_zero_epochs_returns_init():
    params = init_vdnet(SMALL.model_copy(update={"epochs": 0}), 5, 3)
    trained, history = train(params, _random_batch(20, 5, 3), SMALL.model_copy(update={"epochs": 0}))
    assert history == []
    for name, arr in params.learnable().items():
        assert_array_equal(trained.learnable()[name], arr)


def test_single_sample_training_rejected():
    config = SMALL.model_copy(update={"epochs": 1})
    with pytest.raises(PreconditionError):
        train(init_vdnet(config, 5, 3), _random_batch(1, 5, 3), config)


def test_geometry_scaling_fitted_on_training_set():
    config = SMALL.model_copy(update={"epochs": 1, "batch_size": 8})
    batch = _random_batch(40, 5, 3, seed=8)
    params = init_vdnet(config, 5, 3)
    trained, _ = train(params, batch, config)
    assert not params.geo_fitted
    assert trained.geo_fitted
    assert_allclose(trained.geo_mean, batch.geometry().mean(axis=0))
    assert_allclose(trained.geo_std, batch.geometry().std(axis=0))
    scaled = (batch.geometry() - trained.geo_mean) / trained.geo_std
    assert_allclose(scaled.std(axis=0), 1.0)


def test_constant_geometry_column_keeps_unit_scale():
    config = SMALL.model_copy(update={"epochs": 0})
    batch = _random_batch(10, 5, 3)
    batch.p_s[:, 2] = 0.25
    trained, _ = train(init_vdnet(config, 5, 3), batch, config)
    assert trained.geo_std[2] == 1.0
    assert trained.geo_mean[2] == pytest.approx(0.25)


def test_geometry_scaling_can_be_disabled():
    config = SMALL.model_copy(update={"epochs": 1, "standardize_geometry": False})
    trained, _ = train(init_vdnet(config, 5, 3), _random_batch(20, 5, 3), config)
    assert not trained.geo_fitted
    assert_array_equal(trained.geo_mean, np.zeros(20))
    assert_array_equal(trained.geo_std, np.ones(20))


def _learnable_batch(n: int, seed: int) -> PairBatch:
    """Target is whether the subject center lies left of the object center"""
    batch = _random_batch(n, 4, 2, seed=seed, targets=np.zeros(n))
    targets = (batch.p_j[:, 6] < 0).astype(np.int64)
    return PairBatch(batch.v_s, batch.v_o, batch.p_s, batch.p_o, batch.p_j, targets)


def test_training_reduces_loss_and_does_not_mutate_input():
    config = VDNetConfig(word_proj_dim=4, hidden_dim=16, learning_rate=0.05, epochs=15, batch_size=32, seed=0)
    params = init_vdnet(config, 4, 2)
    original = params.W_1.copy()
    trained, history = train(params, _learnable_batch(512, seed=0), config)
    assert len(history) == 15
    assert history[-1] < history[0]
    assert_array_equal(params.W_1, original)
    assert evaluate(trained, _learnable_batch(512, seed=1)).overall_accuracy > 0.8


def test_same_seed_same_history():
    config = VDNetConfig(word_proj_dim=4, hidden_dim=8, learning_rate=0.05, epochs=3, batch_size=16, seed=7)
    data = _learnable_batch(100, seed=3)
    first = train(init_vdnet(config, 4, 2), data, config)
    second = train(init_vdnet(config, 4, 2), data, config)
    assert first[1] == second[1]
    assert_array_equal(first[0].W_2, second[0].W_2)


def test_constant_prediction_accuracy_report():
    params = _zeroed(init_vdnet(SMALL, 5, 3))
    params.bn_2.beta[:] = [0.0, 5.0, 0.0]
    batch = _random_batch(30, 5, 3, targets=[0] * 10 + [1] * 15 + [2] * 5)
    report = evaluate(params, batch)
    assert report.accuracies() == {0: 0.0, 1: 1.0, 2: 0.0}
    assert report.per_predicate[1].support == 15
    assert report.overall_accuracy == pytest.approx(0.5)


def test_coin_target_stays_at_chance():
    rng = np.random.default_rng(9)
    config = VDNetConfig(word_proj_dim=4, hidden_dim=16, learning_rate=0.02, epochs=3, batch_size=64, seed=1)
    train_set = _random_batch(1000, 4, 2, seed=5, targets=rng.integers(0, 2, 1000))
    test_set = _random_batch(4000, 4, 2, seed=6, targets=rng.integers(0, 2, 4000))
    trained, _ = train(init_vdnet(config, 4, 2), train_set, config)
    assert 0.44 < evaluate(trained, test_set).overall_accuracy < 0.56


def test_evaluate_rejects_empty():
    with pytest.raises(PreconditionError):
        evaluate(init_vdnet(SMALL, 5, 3), [])


def test_checkpoint_round_trip(tmp_path):
    config = VDNetConfig(word_proj_dim=4, hidden_dim=8, learning_rate=0.05, epochs=2, batch_size=16)
    trained, _ = train(init_vdnet(config, 4, 2), _learnable_batch(64, seed=0), config)
    path = tmp_path / "net.npz"
    save_params(trained, path)
    loaded = load_params(path)
    held_out = _learnable_batch(20, seed=1)
    assert_array_equal(predict_logits(loaded, held_out), predict_logits(trained, held_out))
    assert loaded.bn_momentum == trained.bn_momentum
    assert loaded.use_batchnorm
    assert loaded.geo_fitted
    assert_array_equal(loaded.geo_mean, trained.geo_mean)
    assert_array_equal(loaded.geo_std, trained.geo_std)


def test_checkpoint_version_checked(tmp_path):
    path = tmp_path / "bad.npz"
    np.savez(path, format_version=np.array(99))
    with pytest.raises(DataError):
        load_params(path)


def test_loss_history_csv(tmp_path):
    path = tmp_path / "loss.csv"
    write_loss_history([0.9, 0.5], path)
    frame = pd.read_csv(path)
    assert frame["epoch"].tolist() == [1, 2]
    assert frame["mean_loss"].tolist() == [0.9, 0.5]


def test_build_samples_from_dataset(man_nose_dataset):
    table = make_table({"man": [1.0, 0.0], "nose": [0.0, 1.0], "horse": [1.0, 1.0]})
    samples = build_samples(man_nose_dataset, table)
    assert len(samples) == man_nose_dataset.n_triplets == 5
    assert_array_equal(samples[0].v_s, [1.0, 0.0])
    assert_array_equal(samples[0].v_o, [0.0, 1.0])
    assert samples[0].p_s.w == pytest.approx(0.1)
    assert sorted({s.target for s in samples}) == [0, 1, 2]


def test_build_samples_needs_vectors(man_nose_dataset):
    with pytest.raises(DataError):
        build_samples(man_nose_dataset, EmbeddingTable({}, None))


def test_predictor_returns_distribution(man_nose_dataset):
    table = make_table({"man": [1.0, 0.0], "nose": [0.0, 1.0], "horse": [1.0, 1.0]})
    params = init_vdnet(VDNetConfig(word_proj_dim=3, hidden_dim=5), 2, 3)
    predictor = VDNetPredictor(params, table, man_nose_dataset.object_vocab.labels)
    image = man_nose_dataset.images[0]
    scores = predictor(image, image.instances[0], image.instances[1])
    assert scores.shape == (3,)
    assert scores.sum() == pytest.approx(1.0)
