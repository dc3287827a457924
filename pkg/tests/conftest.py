import numpy as np
import pytest

from src.data import Dataset, DatasetRecipe, fit_scaler, generate_dataset, split_train_test
from src.physics import DriveSignal, SpinChainParams, TrajectorySample


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale reproduction tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def synthetic_dataset(amplitudes, n_frequencies, n_steps=10, omega_min=0.4, omega_max=4.0) -> Dataset:
    """Dataset with analytic series instead of simulated ones."""
    recipe = DatasetRecipe(
        amplitudes=tuple(amplitudes), n_frequencies=n_frequencies,
        omega_min=omega_min, omega_max=omega_max, n_steps=n_steps,
        chain=SpinChainParams(n_sites=2),
    )
    samples = []
    t = np.arange(1, n_steps + 1) * recipe.dt
    for a in recipe.amplitudes:
        for w in recipe.frequencies():
            drive = DriveSignal.sinusoid(a, w, recipe.dt, n_steps)
            output = 0.1 * a * np.sin(w * t) ** 2 + 0.05 * np.cos(0.5 * w * t)
            rhs = 0.2 * a * w * np.sin(w * t) * np.cos(w * t) - 0.025 * w * np.sin(0.5 * w * t)
            samples.append(TrajectorySample(drive=drive, output=output, ehrenfest_rhs=rhs))
    return Dataset(recipe=recipe, samples=tuple(samples))


@pytest.fixture(scope="session")
def tiny_recipe() -> DatasetRecipe:
    return DatasetRecipe(
        amplitudes=(0.5, 1.0), n_frequencies=4, omega_min=0.4, omega_max=2.0, n_steps=10,
        chain=SpinChainParams(n_sites=2),
    )


@pytest.fixture(scope="session")
def tiny_dataset(tiny_recipe) -> Dataset:
    return generate_dataset(tiny_recipe, progress=False)


@pytest.fixture
def prepared_dataset(tiny_dataset) -> Dataset:
    """Tiny simulated dataset with a seed-1 split and fitted scaler."""
    train, test = split_train_test(tiny_dataset, seed=1)
    dataset = tiny_dataset.with_split(train, test, 1)
    return dataset.with_scaler(fit_scaler(dataset, train))
