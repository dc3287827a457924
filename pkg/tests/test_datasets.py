import math

import numpy as np
import pytest

from src.data import (
    DatasetRecipe,
    ScalerParams,
    amplitude_grid,
    apply_scaler,
    fit_scaler,
    frequency_grid,
    generate_dataset,
    invert_scaler,
    split_train_test,
)
from src.errors import DataError
from src.physics import SpinChainParams
from tests.conftest import synthetic_dataset


def test_frequency_grid_endpoints():
    np.testing.assert_array_equal(frequency_grid(0.4, 4.0, 2), [0.4, 4.0])
    grid = frequency_grid(0.4, 3.0, 200)
    assert grid[0] == 0.4 and grid[-1] == 3.0


def test_frequency_grid_spacing():
    grid = frequency_grid(0.4, 4.0, 200)
    np.testing.assert_allclose(np.diff(grid), (4.0 - 0.4) / 199, rtol=1e-12)
    assert np.diff(grid)[0] == pytest.approx(0.0181, abs=1e-4)


@pytest.mark.parametrize("args", [(0.4, 4.0, 1), (4.0, 0.4, 10), (1.0, 1.0, 5)])
def test_frequency_grid_rejects_invalid_range(args):
    with pytest.raises(ValueError):
        frequency_grid(*args)


def test_amplitude_grid_formula():
    grid = amplitude_grid(0.4, 2.6, 8)
    assert len(grid) == 8
    assert grid[1] - grid[0] == pytest.approx(2.2 / 7)
    assert grid[1] == pytest.approx(0.71429, abs=1e-5)
    np.testing.assert_allclose(amplitude_grid(1.0, 10.0, 10), np.arange(1, 11))
    np.testing.assert_array_equal(amplitude_grid(2.6, 2.6, 1), [2.6])


def test_amplitude_grid_rejects_zero_count():
    with pytest.raises(ValueError):
        amplitude_grid(1.0, 2.0, 0)


def test_recipe_time_grid():
    recipe = DatasetRecipe(amplitudes=(2.6,), n_frequencies=200, omega_min=0.4, omega_max=4.0)
    assert recipe.horizon == pytest.approx(15.70796, abs=1e-5)
    assert recipe.dt == pytest.approx(0.0314159, abs=1e-7)
    assert recipe.n_samples == 200


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(amplitudes=(), n_frequencies=10, omega_min=0.4, omega_max=4.0),
        dict(amplitudes=(2.0, 1.0), n_frequencies=10, omega_min=0.4, omega_max=4.0),
        dict(amplitudes=(1.0,), n_frequencies=1, omega_min=0.4, omega_max=4.0),
        dict(amplitudes=(1.0,), n_frequencies=10, omega_min=0.0, omega_max=4.0),
    ],
)
def test_recipe_invariants(kwargs):
    with pytest.raises(ValueError):
        DatasetRecipe(**kwargs)


def test_multi_amplitude_sample_count():
    recipe = DatasetRecipe(amplitudes=tuple(amplitude_grid(0.4, 2.6, 8)), n_frequencies=200, omega_min=0.4, omega_max=3.0)
    assert recipe.n_samples == 1600


def test_smoke_generation():
    recipe = DatasetRecipe(
        amplitudes=(1.0,), n_frequencies=2, omega_min=0.4, omega_max=1.0, n_steps=10,
        chain=SpinChainParams(n_sites=2),
    )
    dataset = generate_dataset(recipe, progress=False)
    assert len(dataset) == 2
    assert all(len(s.output) == 10 for s in dataset.samples)


def test_generation_is_amplitude_major_and_deterministic(tiny_recipe, tiny_dataset):
    np.testing.assert_array_equal(tiny_dataset.amplitudes(), [0.5] * 4 + [1.0] * 4)
    np.testing.assert_array_equal(tiny_dataset.omegas()[:4], tiny_recipe.frequencies())
    again = generate_dataset(tiny_recipe, progress=False)
    np.testing.assert_array_equal(again.outputs(), tiny_dataset.outputs())
    np.testing.assert_array_equal(again.rhs(), tiny_dataset.rhs())


def test_scaler_fit_on_training_subset():
    dataset = synthetic_dataset((2.6,), 20, n_steps=500)
    train, _ = split_train_test(dataset, seed=0)
    scaler = fit_scaler(dataset, train)
    inputs = dataset.inputs(train)
    assert scaler.input_min == inputs.min() and scaler.input_max == inputs.max()
    assert scaler.input_min == pytest.approx(-2.6, abs=1e-3)
    assert scaler.input_max == pytest.approx(2.6, abs=1e-3)

    scaled = apply_scaler(dataset.outputs(train), scaler, "output")
    assert scaled.min() == pytest.approx(0.0, abs=1e-15)
    assert scaled.max() == pytest.approx(1.0, abs=1e-15)


def test_scaler_transform_and_round_trip():
    scaler = ScalerParams(input_min=-2.0, input_max=2.0, output_min=1.0, output_max=3.0)
    np.testing.assert_allclose(apply_scaler(np.array([-2.0, 0.0, 2.0]), scaler, "input"), [0.0, 0.5, 1.0])
    values = np.array([[0.3, 1.7, 3.5], [-1.0, 2.0, 2.5]])
    np.testing.assert_allclose(invert_scaler(apply_scaler(values, scaler, "output"), scaler, "output"), values, atol=1e-12)
    # out-of-range values are not clipped
    assert apply_scaler(np.array([5.0]), scaler, "output")[0] == pytest.approx(2.0)


def test_rhs_channel_uses_output_scale_only():
    scaler = ScalerParams(input_min=0.0, input_max=1.0, output_min=1.0, output_max=5.0)
    np.testing.assert_allclose(apply_scaler(np.array([4.0, -2.0]), scaler, "rhs"), [1.0, -0.5])
    assert scaler.output_scale == 0.25


def test_degenerate_scaler_rejected():
    with pytest.raises(DataError):
        ScalerParams(input_min=1.0, input_max=1.0, output_min=0.0, output_max=1.0)
    with pytest.raises(DataError):
        fit_scaler(synthetic_dataset((1.0,), 4), [])


def test_single_amplitude_split_sizes():
    dataset = synthetic_dataset((2.6,), 200)
    train, test = split_train_test(dataset, 0.8, seed=3)
    assert (len(train), len(test)) == (160, 40)
    assert sorted(train + test) == list(range(200))
    assert train == sorted(train) and test == sorted(test)


def test_split_is_reproducible():
    dataset = synthetic_dataset((2.6,), 200)
    assert split_train_test(dataset, seed=5) == split_train_test(dataset, seed=5)
    assert split_train_test(dataset, seed=5) != split_train_test(dataset, seed=6)


def test_multi_amplitude_split_is_stratified():
    amplitudes = tuple(amplitude_grid(0.4, 2.6, 8))
    dataset = synthetic_dataset(amplitudes, 200, omega_max=3.0)
    train, test = split_train_test(dataset, seed=1)
    assert len(test) == 320
    counts = {a: 0 for a in amplitudes}
    for a in dataset.amplitudes(test):
        counts[a] += 1
    assert set(counts.values()) == {40}
    assert not set(train) & set(test)


def test_split_rejects_bad_fraction():
    dataset = synthetic_dataset((1.0,), 4)
    with pytest.raises(ValueError):
        split_train_test(dataset, 1.0)
    with pytest.raises(DataError):
        split_train_test(synthetic_dataset((1.0,), 2), 0.4)


def test_dataset_rejects_overlapping_split():
    dataset = synthetic_dataset((1.0,), 4)
    with pytest.raises(DataError):
        dataset.with_split([0, 1, 2], [2, 3])


def test_test_fraction_per_amplitude():
    dataset = synthetic_dataset((1.0, 2.0, 3.0), 30)
    _, test = split_train_test(dataset, seed=2)
    per_amplitude = np.unique(dataset.amplitudes(test), return_counts=True)[1]
    assert all(abs(c - 0.2 * 30) <= 1 for c in per_amplitude)
    assert math.isclose(len(test) / len(dataset), 0.2, abs_tol=1 / len(dataset))
