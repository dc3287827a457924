"""
Dataset recipes, generation, MinMax scaling and train/test splitting.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, Sequence

import numpy as np
from numpy.typing import NDArray
from sklearn.model_selection import train_test_split
from sklearn.preprocessing import MinMaxScaler
from tqdm import tqdm

from src.config import Config
from src.errors import DataError, SimulationError
from src.physics import DriveSignal, SpinChainParams, TrajectorySample, evolve_trajectory

logger = logging.getLogger(__name__)

Channel = Literal["input", "output", "rhs"]


@dataclass(frozen=True)
class DatasetRecipe:
    """Amplitude x frequency grid for sinusoidal drives A sin(omega t)."""
    amplitudes: tuple[float, ...]
    n_frequencies: int
    omega_min: float
    omega_max: float
    n_steps: int = 500
    chain: SpinChainParams = field(default_factory=SpinChainParams)

    def __post_init__(self):
        object.__setattr__(self, "amplitudes", tuple(float(a) for a in self.amplitudes))
        if not self.amplitudes:
            raise ValueError("A recipe needs at least one amplitude")
        if any(b <= a for a, b in zip(self.amplitudes, self.amplitudes[1:])):
            raise ValueError(f"Amplitudes must be strictly increasing, got {self.amplitudes}")
        if self.omega_min <= 0:
            raise ValueError(f"omega_min must be positive, got {self.omega_min}")
        if self.omega_max <= self.omega_min:
            raise ValueError(f"omega_max={self.omega_max} must exceed omega_min={self.omega_min}")
        if self.n_frequencies < 2:
            raise ValueError(f"n_frequencies must be >= 2, got {self.n_frequencies}")
        if self.n_steps < 2:
            raise ValueError(f"n_steps must be >= 2, got {self.n_steps}")

    @property
    def horizon(self) -> float:
        """T = 2*pi / omega_min."""
        return 2.0 * math.pi / self.omega_min

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def n_samples(self) -> int:
        return len(self.amplitudes) * self.n_frequencies

    def frequencies(self) -> NDArray[np.float64]:
        return frequency_grid(self.omega_min, self.omega_max, self.n_frequencies)

    def to_dict(self) -> dict:
        return {
            "amplitudes": list(self.amplitudes),
            "n_frequencies": self.n_frequencies,
            "omega_min": self.omega_min,
            "omega_max": self.omega_max,
            "n_steps": self.n_steps,
            "chain": self.chain.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetRecipe":
        return cls(
            amplitudes=tuple(data["amplitudes"]),
            n_frequencies=int(data["n_frequencies"]),
            omega_min=float(data["omega_min"]),
            omega_max=float(data["omega_max"]),
            n_steps=int(data["n_steps"]),
            chain=SpinChainParams(**data["chain"]),
        )


@dataclass(frozen=True)
class ScalerParams:
    """Global min/max of the input and output channels over the training subset."""
    input_min: float
    input_max: float
    output_min: float
    output_max: float

    def __post_init__(self):
        if not self.input_max > self.input_min:
            raise DataError(f"Degenerate input channel: min={self.input_min}, max={self.input_max}")
        if not self.output_max > self.output_min:
            raise DataError(f"Degenerate output channel: min={self.output_min}, max={self.output_max}")

    @property
    def output_scale(self) -> float:
        """s_Y = 1 / (output_max - output_min); scales derivatives of the output."""
        return 1.0 / (self.output_max - self.output_min)

    def to_sklearn(self, channel: Literal["input", "output"]) -> MinMaxScaler:
        lo, hi = (self.input_min, self.input_max) if channel == "input" else (self.output_min, self.output_max)
        return MinMaxScaler().fit(np.array([[lo], [hi]]))

    def to_dict(self) -> dict:
        return {
            "input_min": self.input_min,
            "input_max": self.input_max,
            "output_min": self.output_min,
            "output_max": self.output_max,
        }


@dataclass(frozen=True)
class Split:
    train: tuple[int, ...]
    test: tuple[int, ...]
    seed: int | None = None

    def to_dict(self) -> dict:
        return {"train": list(self.train), "test": list(self.test), "seed": self.seed}


@dataclass(frozen=True)
class Dataset:
    """Generated samples with optional fitted scaler and train/test split."""
    recipe: DatasetRecipe
    samples: tuple[TrajectorySample, ...]
    scaler: ScalerParams | None = None
    split: Split | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        for i, sample in enumerate(self.samples):
            if sample.drive.n_steps != self.recipe.n_steps:
                raise DataError(
                    f"Sample {i} has {sample.drive.n_steps} steps, recipe expects {self.recipe.n_steps}"
                )
        if self.split is not None:
            train, test = set(self.split.train), set(self.split.test)
            if train & test:
                raise DataError(f"Train and test indices overlap: {sorted(train & test)[:5]}")
            if any(i < 0 or i >= len(self.samples) for i in train | test):
                raise DataError("Split index out of range")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def dt(self) -> float:
        return self.recipe.dt

    def inputs(self, indices: Sequence[int] | None = None) -> NDArray[np.float64]:
        return np.stack([s.drive.samples for s in self._select(indices)])

    def outputs(self, indices: Sequence[int] | None = None) -> NDArray[np.float64]:
        return np.stack([s.output for s in self._select(indices)])

    def rhs(self, indices: Sequence[int] | None = None) -> NDArray[np.float64]:
        return np.stack([s.ehrenfest_rhs for s in self._select(indices)])

    def amplitudes(self, indices: Sequence[int] | None = None) -> NDArray[np.float64]:
        return np.array([s.drive.amplitude for s in self._select(indices)])

    def omegas(self, indices: Sequence[int] | None = None) -> NDArray[np.float64]:
        return np.array([s.drive.omega for s in self._select(indices)])

    def with_scaler(self, scaler: ScalerParams) -> "Dataset":
        return replace(self, scaler=scaler)

    def with_split(self, train: Iterable[int], test: Iterable[int], seed: int | None = None) -> "Dataset":
        return replace(self, split=Split(tuple(train), tuple(test), seed))

    def _select(self, indices: Sequence[int] | None) -> list[TrajectorySample]:
        if indices is None:
            return list(self.samples)
        return [self.samples[i] for i in indices]


def frequency_grid(omega_min: float, omega_max: float, n: int) -> NDArray[np.float64]:
    """n equispaced frequencies including both endpoints."""
    if n < 2:
        raise ValueError(f"A frequency grid needs n >= 2, got {n}")
    if not omega_max > omega_min:
        raise ValueError(f"Invalid frequency range [{omega_min}, {omega_max}]")
    return np.linspace(omega_min, omega_max, n)


def amplitude_grid(a1: float, am: float, m: int) -> NDArray[np.float64]:
    """A_j = A_1 + (j-1)(A_m - A_1)/(m-1), j = 1..m; m = 1 gives [A_1]."""
    if m < 1:
        raise ValueError(f"An amplitude grid needs m >= 1, got {m}")
    if am < a1:
        raise ValueError(f"A_m={am} must not be below A_1={a1}")
    if m == 1:
        return np.array([float(a1)])
    return np.linspace(a1, am, m)


def _simulate(args: tuple[SpinChainParams, float, float, float, int]) -> TrajectorySample:
    chain, amplitude, omega, dt, n_steps = args
    return evolve_trajectory(chain, DriveSignal.sinusoid(amplitude, omega, dt, n_steps))


def generate_dataset(recipe: DatasetRecipe, threads: int = 1, progress: bool = True) -> Dataset:
    """
    Simulate one trajectory per (amplitude, frequency) pair, amplitude-major.

    Args:
        recipe: Dataset recipe.
        threads: Worker processes; 1 runs in-process.
        progress: Show a tqdm bar.

    Returns:
        Dataset: Unscaled, unsplit dataset.

    Raises:
        SimulationError: Naming the (A, omega) pair whose trajectory failed.
    """
    jobs = [
        (recipe.chain, amplitude, float(omega), recipe.dt, recipe.n_steps)
        for amplitude in recipe.amplitudes
        for omega in recipe.frequencies()
    ]
    logger.info(
        "Generating %d trajectories (N=%d sites, N_T=%d, dt=%.6g) with %d worker(s)",
        len(jobs), recipe.chain.n_sites, recipe.n_steps, recipe.dt, threads,
    )

    samples = []
    executor = ProcessPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        results = executor.map(_simulate, jobs, chunksize=4) if executor else map(_simulate, jobs)
        bar = tqdm(total=len(jobs), desc="simulate", unit="traj", disable=not progress)
        for job in jobs:
            try:
                samples.append(next(results))
            except SimulationError as e:
                raise SimulationError(f"Trajectory A={job[1]}, omega={job[2]:.6g} failed: {e}") from e
            bar.update()
        bar.close()
    finally:
        if executor:
            executor.shutdown(cancel_futures=True)

    return Dataset(recipe=recipe, samples=tuple(samples))


def fit_scaler(dataset: Dataset, train_indices: Sequence[int]) -> ScalerParams:
    """Fit global MinMax parameters for the input and output channels on training samples."""
    if len(train_indices) == 0:
        raise DataError("Cannot fit a scaler on an empty training subset")
    inputs = MinMaxScaler().fit(dataset.inputs(train_indices).reshape(-1, 1))
    outputs = MinMaxScaler().fit(dataset.outputs(train_indices).reshape(-1, 1))
    return ScalerParams(
        input_min=float(inputs.data_min_[0]),
        input_max=float(inputs.data_max_[0]),
        output_min=float(outputs.data_min_[0]),
        output_max=float(outputs.data_max_[0]),
    )


def apply_scaler(series: NDArray, scaler: ScalerParams, channel: Channel) -> NDArray[np.float64]:
    """
    Map raw values into scaled space; values outside the fitted range are not clipped.

    The "rhs" channel holds time derivatives of the output, so it only picks up
    the output scale factor s_Y and no offset.
    """
    series = np.asarray(series, dtype=np.float64)
    if channel == "rhs":
        return series * scaler.output_scale
    return scaler.to_sklearn(channel).transform(series.reshape(-1, 1)).reshape(series.shape)


def invert_scaler(series: NDArray, scaler: ScalerParams, channel: Channel) -> NDArray[np.float64]:
    """Inverse of apply_scaler."""
    series = np.asarray(series, dtype=np.float64)
    if channel == "rhs":
        return series / scaler.output_scale
    return scaler.to_sklearn(channel).inverse_transform(series.reshape(-1, 1)).reshape(series.shape)


def split_train_test(dataset: Dataset, fraction: float = Config.TRAIN_FRACTION, seed: int = 0) -> tuple[list[int], list[int]]:
    """
    Random train/test partition, stratified by amplitude for multi-amplitude recipes.

    Returns:
        (train indices, test indices), each sorted ascending.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"Train fraction must lie in (0, 1), got {fraction}")
    n = len(dataset)
    n_train = math.floor(fraction * n)
    if n_train < 1 or n - n_train < 1:
        raise DataError(f"Split of {n} samples at fraction {fraction} leaves an empty side")

    indices = np.arange(n)
    amplitudes = dataset.amplitudes()
    stratify = amplitudes if len(np.unique(amplitudes)) > 1 else None
    train, test = train_test_split(indices, train_size=fraction, random_state=seed, shuffle=True, stratify=stratify)
    return sorted(int(i) for i in train), sorted(int(i) for i in test)
