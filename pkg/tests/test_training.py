import math

import numpy as np
import pytest
import torch
from torch.autograd import gradcheck
from torch.func import functional_call

from src.data import DatasetRecipe, ScalerParams, apply_scaler, fit_scaler, generate_dataset, split_train_test
from src.errors import ConfigError, DataError, TrainingDivergedError
from src.models import init_network
from src.physics import SpinChainParams
from src.training import (
    AdamState,
    TrainConfig,
    adam_step,
    curriculum_stages,
    ehrenfest_penalty,
    finite_difference,
    predict,
    total_loss,
    train,
)
from tests.conftest import synthetic_dataset

UNIT = ScalerParams(input_min=0.0, input_max=1.0, output_min=0.0, output_max=1.0)


def loose(**kwargs) -> TrainConfig:
    return TrainConfig(**{"enforce_ranges": False, **kwargs})


@pytest.fixture
def small_problem():
    """Five samples, N_T=10: four for training, one for testing."""
    dataset = synthetic_dataset((1.0,), 5, n_steps=10)
    train_idx, test_idx = split_train_test(dataset, seed=0)
    dataset = dataset.with_split(train_idx, test_idx, 0)
    return dataset.with_scaler(fit_scaler(dataset, train_idx))


def test_finite_difference_of_linear_series_is_exact():
    dt = 0.25
    series = 3.0 * np.arange(8) * dt
    torch.testing.assert_close(finite_difference(series, dt), torch.full((8,), 3.0, dtype=torch.float64))


def test_finite_difference_of_constant_is_zero():
    assert torch.count_nonzero(finite_difference(np.full(6, 2.5), 0.1)) == 0


def test_finite_difference_sine_error_bound():
    omega, dt = 1.7, 0.01
    t = np.arange(400) * dt
    derivative = finite_difference(np.sin(omega * t), dt).numpy()
    error = np.abs(derivative[1:-1] - omega * np.cos(omega * t[1:-1])).max()
    assert error <= omega ** 3 * dt ** 2 / 6 * 1.01


def test_finite_difference_works_along_last_axis():
    batch = torch.stack([torch.arange(5.0, dtype=torch.float64), torch.zeros(5, dtype=torch.float64)])
    result = finite_difference(batch, 1.0)
    assert result.shape == (2, 5)
    torch.testing.assert_close(result[0], torch.ones(5, dtype=torch.float64))


def test_finite_difference_needs_three_steps():
    with pytest.raises(ValueError):
        finite_difference(np.zeros(2), 0.1)


def test_penalty_vanishes_for_perfect_prediction():
    target = torch.rand(3, 6, dtype=torch.float64)
    assert ehrenfest_penalty(target, target, None, UNIT, 0.1, 1.0, 2.0) == 0


def test_penalty_vanishes_for_zero_lambda():
    pred, target = torch.rand(2, 6, dtype=torch.float64), torch.rand(2, 6, dtype=torch.float64)
    assert ehrenfest_penalty(pred, target, None, UNIT, 0.1, 0.0, 2.0, mode="measured_rhs") == 0


def test_measured_rhs_mode_requires_rhs():
    pred = torch.rand(2, 6, dtype=torch.float64)
    with pytest.raises(ValueError, match="RHS"):
        ehrenfest_penalty(pred, pred, None, UNIT, 0.1, 1.0, 2.0, mode="measured_rhs")


def test_penalty_shape_mismatch():
    with pytest.raises(ValueError):
        ehrenfest_penalty(torch.zeros(2, 5), torch.zeros(2, 6), None, UNIT, 0.1, 1.0, 2.0)


PRED = torch.tensor([[0.0, 1.0, 2.0, 3.0], [1.0, 1.0, 1.0, 1.0]], dtype=torch.float64)
TARGET = torch.tensor([[0.0, 0.0, 0.0, 0.0], [1.0, 1.0, 1.0, 1.0]], dtype=torch.float64)


def test_hand_computed_loss():
    # mse = (0 + 1 + 4 + 9) / 8; D pred = [1, 1, 1, 1] and [0, 0, 0, 0], D target = 0
    terms = total_loss(PRED, TARGET, None, UNIT, loose(lam=1.0, alpha=2.0), dt=1.0)
    assert float(terms.mse) == pytest.approx(1.75)
    assert float(terms.penalty) == pytest.approx(0.5)
    assert float(terms.total) == float(terms.mse) + float(terms.penalty)


def test_hand_computed_loss_with_measured_rhs():
    scaler = ScalerParams(input_min=0.0, input_max=1.0, output_min=0.0, output_max=2.0)
    rhs = torch.full((2, 4), 2.0, dtype=torch.float64)
    config = loose(lam=1.0, alpha=4.0, penalty_target="measured_rhs")
    terms = total_loss(PRED, TARGET, rhs, scaler, config, dt=1.0)
    # reference s_Y * rhs = 1: first row matches, second row misses by 1 everywhere
    assert float(terms.penalty) == pytest.approx(0.5)


def test_perfect_prediction_and_zero_lambda():
    assert float(total_loss(TARGET, TARGET, None, UNIT, loose(), dt=1.0).total) == 0.0
    terms = total_loss(PRED, TARGET, None, UNIT, loose(lam=0.0), dt=1.0)
    assert float(terms.total) == float((PRED - TARGET).pow(2).mean())


def test_total_loss_shape_mismatch():
    with pytest.raises(ValueError):
        total_loss(PRED, TARGET[:, :3], None, UNIT, loose(), dt=1.0)


@pytest.mark.parametrize("kind", ["spline", "wavelet"])
@pytest.mark.parametrize("mode", ["finite_difference", "measured_rhs"])
@pytest.mark.parametrize("lam", [0.0, 1.0])
@pytest.mark.parametrize("alpha", [2.0, 4.0])
def test_loss_gradients_match_finite_differences(kind, mode, lam, alpha):
    net = init_network((10, 5, 10), kind=kind, seed=1)
    generator = torch.Generator().manual_seed(2)
    x = torch.rand(3, 10, generator=generator, dtype=torch.float64)
    target = torch.rand(3, 10, generator=generator, dtype=torch.float64)
    rhs = torch.randn(3, 10, generator=generator, dtype=torch.float64)
    scaler = ScalerParams(input_min=0.0, input_max=1.0, output_min=-0.5, output_max=1.5)
    config = loose(lam=lam, alpha=alpha, penalty_target=mode)
    names = [n for n, _ in net.named_parameters()]

    def loss(*values):
        pred = functional_call(net, dict(zip(names, values)), (x,))
        return total_loss(pred, target, rhs, scaler, config, dt=0.2).total

    params = tuple(p.detach().clone().requires_grad_(True) for p in net.parameters())
    assert gradcheck(loss, params, eps=1e-6, atol=1e-7, rtol=1e-4)


def test_adam_zero_gradient_leaves_parameters():
    p = torch.tensor([1.0, -2.0], dtype=torch.float64, requires_grad=True)
    state = AdamState.create([p], 1e-3)
    adam_step([p], [torch.zeros(2, dtype=torch.float64)], state, 1e-3)
    torch.testing.assert_close(p.detach(), torch.tensor([1.0, -2.0], dtype=torch.float64), rtol=0, atol=0)
    assert state.step == 1


def test_adam_first_step_moves_by_learning_rate():
    p = torch.tensor([0.5, 0.5, 0.5], dtype=torch.float64, requires_grad=True)
    g = torch.tensor([3.0, -0.01, 200.0], dtype=torch.float64)
    state = AdamState.create([p], 1e-3)
    adam_step([p], [g], state, 1e-3)
    torch.testing.assert_close(p.detach(), 0.5 - 1e-3 * torch.sign(g), rtol=0, atol=1e-8)
    m, v = state.moments(p)
    assert m.shape == v.shape == p.shape


def _scripted_adam(p, grads, lr, b1=0.9, b2=0.999, eps=1e-8):
    m = np.zeros_like(p)
    v = np.zeros_like(p)
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p = p - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
    return p


def test_adam_matches_scripted_reference():
    start = np.array([0.3, -1.2, 2.0])
    g = np.array([0.4, 1.5, -0.02])
    p = torch.tensor(start, dtype=torch.float64, requires_grad=True)
    state = AdamState.create([p], 5e-4)
    for _ in range(2):
        adam_step([p], [torch.tensor(g)], state, 5e-4)
    np.testing.assert_allclose(p.detach().numpy(), _scripted_adam(start, [g, g], 5e-4), rtol=0, atol=1e-14)


def test_adam_rejects_non_finite_gradient():
    p = torch.zeros(2, dtype=torch.float64)
    state = AdamState.create([p], 1e-3)
    with pytest.raises(TrainingDivergedError, match="epoch 7") as excinfo:
        adam_step([p], [torch.tensor([1.0, math.nan], dtype=torch.float64)], state, 1e-3, epoch=7)
    assert excinfo.value.epoch == 7
    assert excinfo.value.exit_code == 4


def test_adam_rejects_shape_mismatch():
    p = torch.zeros(2, dtype=torch.float64)
    with pytest.raises(ValueError):
        adam_step([p], [torch.zeros(3, dtype=torch.float64)], AdamState.create([p], 1e-3), 1e-3)


def test_train_config_ranges():
    TrainConfig()
    with pytest.raises(ConfigError, match="learning_rate"):
        TrainConfig(learning_rate=1e-2)
    with pytest.raises(ConfigError, match="epochs"):
        TrainConfig(epochs=50)
    with pytest.raises(ConfigError, match="alpha"):
        TrainConfig(alpha=3.0)
    assert TrainConfig(epochs=50, alpha=3.0, enforce_ranges=False).epochs == 50
    with pytest.raises(ConfigError):
        TrainConfig(lam=-1.0)
    with pytest.raises(ConfigError):
        TrainConfig(penalty_target="exact")


def test_train_config_dict_round_trip():
    config = TrainConfig(lam=0.5, lambda_schedule="exponential", lambda_decay=0.99)
    data = config.to_dict()
    assert data["lambda"] == 0.5 and "lam" not in data
    assert TrainConfig.from_dict(data) == config
    with pytest.raises(ConfigError, match="momentum"):
        TrainConfig.from_dict({"momentum": 0.9})


def test_lambda_schedule_is_non_increasing():
    config = loose(lam=2.0, lambda_schedule="exponential", lambda_decay=0.9)
    values = [config.lambda_at(e) for e in range(100)]
    assert values[0] == 2.0
    assert all(b <= a for a, b in zip(values, values[1:]))
    assert loose(lambda_schedule="exponential", lambda_decay=1.0).lambda_at(500) == 1.0


def test_curriculum_stages_cover_budget():
    amplitudes = np.array([1.0, 1.0, 2.0, 2.0, 3.0])
    stages = curriculum_stages(amplitudes, 10)
    assert [n for n, _ in stages] == [3, 3, 4]
    assert [list(rows) for _, rows in stages] == [[0, 1], [0, 1, 2, 3], [0, 1, 2, 3, 4]]


def test_training_loss_decreases(small_problem):
    model = init_network((10, 5, 10), seed=0)
    result = train(model, small_problem, loose(learning_rate=1e-3, epochs=50, lam=0.0), progress=False)
    totals = [h.total for h in result.history]
    assert len(totals) == 50
    assert all(b < a for a, b in zip(totals, totals[1:]))
    assert all(h.penalty == 0.0 for h in result.history)


def test_training_is_deterministic(small_problem):
    config = loose(learning_rate=1e-3, epochs=20)
    first = train(init_network((10, 5, 10), seed=3), small_problem, config, progress=False)
    second = train(init_network((10, 5, 10), seed=3), small_problem, config, progress=False)
    assert [h.total for h in first.history] == [h.total for h in second.history]
    for a, b in zip(first.model.parameters(), second.model.parameters()):
        assert torch.equal(a, b)


def test_unit_decay_schedule_matches_constant(small_problem):
    constant = train(init_network((10, 5, 10), seed=1), small_problem, loose(epochs=15), progress=False)
    scheduled = train(
        init_network((10, 5, 10), seed=1), small_problem,
        loose(epochs=15, lambda_schedule="exponential", lambda_decay=1.0), progress=False,
    )
    assert [h.total for h in constant.history] == [h.total for h in scheduled.history]


def test_history_records_schedule_and_callbacks(small_problem):
    seen = []
    config = loose(epochs=6, lambda_schedule="exponential", lambda_decay=0.5)
    result = train(
        init_network((10, 5, 10), seed=0), small_problem, config,
        callbacks=[lambda epoch, terms, model: seen.append(epoch)], progress=False,
    )
    assert seen == list(range(6))
    assert result.lambdas == [0.5 ** e for e in range(6)]
    assert [h.epoch for h in result.history] == list(range(6))
    assert all(h.total == pytest.approx(h.mse + h.penalty) for h in result.history)
    assert result.wall_clock > 0


def test_minibatch_and_measured_rhs_training(small_problem):
    config = loose(epochs=5, batch_size=2, penalty_target="measured_rhs")
    result = train(init_network((10, 5, 10), seed=0), small_problem, config, progress=False)
    assert len(result.history) == 5
    assert all(np.isfinite(h.total) for h in result.history)


def test_curriculum_training_uses_full_budget():
    dataset = synthetic_dataset((0.5, 1.0, 1.5), 5, n_steps=10)
    train_idx, test_idx = split_train_test(dataset, seed=0)
    dataset = dataset.with_split(train_idx, test_idx, 0)
    dataset = dataset.with_scaler(fit_scaler(dataset, train_idx))
    result = train(init_network((10, 5, 10), seed=0), dataset, loose(epochs=7, curriculum=True), progress=False)
    assert len(result.history) == 7


def test_divergence_restores_last_good_state(small_problem):
    def poison(epoch, terms, model):
        if epoch == 2:
            with torch.no_grad():
                model.layers[0].base_weight.fill_(math.nan)

    model = init_network((10, 5, 10), seed=0)
    with pytest.raises(TrainingDivergedError) as excinfo:
        train(model, small_problem, loose(epochs=10), callbacks=[poison], progress=False)
    assert excinfo.value.epoch == 3
    assert excinfo.value.last_good_state is not None
    assert all(torch.isfinite(p).all() for p in model.parameters())


def test_training_requires_scaler_and_split():
    bare = synthetic_dataset((1.0,), 5, n_steps=10)
    with pytest.raises(DataError, match="scaler"):
        train(init_network((10, 5, 10)), bare, loose(epochs=1), progress=False)
    with pytest.raises(DataError):
        predict(init_network((10, 5, 10)), bare)


def test_predict_returns_scaled_rows(small_problem):
    predictions = predict(init_network((10, 5, 10), seed=0), small_problem, [0, 2])
    assert predictions.shape == (2, 10)


def test_simulator_targets_agree_with_measured_rhs():
    recipe = DatasetRecipe(
        amplitudes=(2.6,), n_frequencies=2, omega_min=0.4, omega_max=1.0, n_steps=500,
        chain=SpinChainParams(n_sites=3),
    )
    dataset = generate_dataset(recipe, progress=False)
    scaler = fit_scaler(dataset, [0, 1])
    target = apply_scaler(dataset.outputs(), scaler, "output")
    fd = finite_difference(target, dataset.dt).numpy()
    measured = dataset.rhs() * scaler.output_scale
    residual = np.abs(fd[:, 1:-1] - measured[:, 1:-1]).max()
    assert residual <= 0.05 * np.abs(measured).max()
    # the same data drives both penalty modes to nearly the same value
    pred = torch.from_numpy(target + 0.05 * np.sin(np.arange(500) * 0.3))
    a = ehrenfest_penalty(pred, torch.from_numpy(target), None, scaler, dataset.dt, 1.0, 2.0)
    b = ehrenfest_penalty(pred, torch.from_numpy(target), dataset.rhs(), scaler, dataset.dt, 1.0, 2.0, "measured_rhs")
    assert float(b) == pytest.approx(float(a), rel=0.1)
