"""
Exact state-vector simulation of the driven Ising chain.

    H(t) = -(J_z/4) sum_{i<N} s^z_i s^z_{i+1} - (h_x + f(t))/2 sum_i s^x_i - (h_z/2) sum_i s^z_i

Basis encoding: site i occupies bit i of the basis index and bit value 0 is
spin-up (+1 eigenvalue of s^z). The dense Kronecker helpers below follow the
same encoding, so the matrix-free and dense paths agree element by element.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator

import numpy as np
from numpy.typing import NDArray

from src.config import Config
from src.errors import SimulationError

logger = logging.getLogger(__name__)

QuantumState = NDArray[np.complex128]

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY = np.eye(2, dtype=np.complex128)


@dataclass(frozen=True)
class SpinChainParams:
    """Couplings and size of an open Ising chain."""
    jz: float = Config.JZ
    hx: float = Config.HX
    hz: float = Config.HZ
    n_sites: int = Config.DEFAULT_SITES
    open_boundary: bool = True

    def __post_init__(self):
        if not isinstance(self.n_sites, (int, np.integer)) or self.n_sites < 1:
            raise ValueError(f"n_sites must be a positive integer, got {self.n_sites!r}")
        if self.n_sites > Config.MAX_SITES:
            raise ValueError(f"n_sites={self.n_sites} exceeds the supported maximum {Config.MAX_SITES}")
        for name in ("jz", "hx", "hz"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite, got {getattr(self, name)!r}")
        if not self.open_boundary:
            raise ValueError("Only open boundary conditions are supported")

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def to_dict(self) -> dict:
        return {"jz": self.jz, "hx": self.hx, "hz": self.hz, "n_sites": self.n_sites}


@dataclass(frozen=True)
class DriveSignal:
    """Sampled drive h_k = A sin(omega * k * dt) for k = 1..N_T."""
    amplitude: float
    omega: float
    dt: float
    samples: NDArray[np.float64] = field(repr=False)

    @classmethod
    def sinusoid(cls, amplitude: float, omega: float, dt: float, n_steps: int) -> "DriveSignal":
        if n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {n_steps}")
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        times = np.arange(1, n_steps + 1, dtype=np.float64) * dt
        samples = amplitude * np.sin(omega * times)
        samples.flags.writeable = False
        return cls(amplitude=float(amplitude), omega=float(omega), dt=float(dt), samples=samples)

    @property
    def n_steps(self) -> int:
        return len(self.samples)

    def value(self, t: float) -> float:
        """Continuous drive f(t), used at RK4 sub-step times."""
        return self.amplitude * math.sin(self.omega * t)


@dataclass(frozen=True)
class TrajectorySample:
    """One input -> output pair plus the Ehrenfest right-hand side."""
    drive: DriveSignal
    output: NDArray[np.float64] = field(repr=False)
    ehrenfest_rhs: NDArray[np.float64] = field(repr=False)

    def __post_init__(self):
        n = self.drive.n_steps
        if len(self.output) != n or len(self.ehrenfest_rhs) != n:
            raise ValueError(
                f"Series lengths differ: drive={n}, output={len(self.output)}, "
                f"ehrenfest_rhs={len(self.ehrenfest_rhs)}"
            )


@dataclass(frozen=True)
class HamiltonianTerms:
    """The three term groups of the Hamiltonian with their prefactors."""
    bonds: tuple[tuple[int, int], ...]
    x_sites: tuple[int, ...]
    z_sites: tuple[int, ...]
    ising_coeff: float
    x_coeff: float
    z_coeff: float

    def x_coefficient(self, f_value: float) -> float:
        """Prefactor of sum_i s^x_i once the drive is added to h_x."""
        return self.x_coeff - 0.5 * f_value


def build_hamiltonian_terms(params: SpinChainParams) -> HamiltonianTerms:
    """
    Decompose H into Ising bonds, x-field sites and z-field sites.

    Args:
        params: Chain parameters.

    Returns:
        HamiltonianTerms: N-1 open-chain bonds, N x-sites and N z-sites.

    Raises:
        ValueError: If the chain has no sites.
    """
    n = params.n_sites
    if n < 1:
        raise ValueError("A chain needs at least one site")
    return HamiltonianTerms(
        bonds=tuple((i, i + 1) for i in range(n - 1)),
        x_sites=tuple(range(n)),
        z_sites=tuple(range(n)),
        ising_coeff=-params.jz / 4.0,
        x_coeff=-params.hx / 2.0,
        z_coeff=-params.hz / 2.0,
    )


@dataclass(frozen=True)
class _BasisTables:
    z_signs: NDArray[np.float64]  # (N, 2^N): +1 for spin-up at site i, -1 for spin-down
    flips: NDArray[np.intp]  # (N, 2^N): basis index with site i flipped


@lru_cache(maxsize=Config.MAX_SITES)
def _basis_tables(n_sites: int) -> _BasisTables:
    index = np.arange(1 << n_sites)
    masks = (1 << np.arange(n_sites))[:, None]
    bits = (index[None, :] & masks) != 0
    z_signs = 1.0 - 2.0 * bits
    flips = index[None, :] ^ masks
    z_signs.flags.writeable = False
    flips.flags.writeable = False
    return _BasisTables(z_signs=z_signs, flips=flips)


@lru_cache(maxsize=32)
def _diagonal(params: SpinChainParams) -> NDArray[np.float64]:
    """Diagonal (Ising + z-field) part of H in the computational basis."""
    terms = build_hamiltonian_terms(params)
    z = _basis_tables(params.n_sites).z_signs
    diag = terms.z_coeff * z.sum(axis=0)
    for i, j in terms.bonds:
        diag = diag + terms.ising_coeff * z[i] * z[j]
    diag.flags.writeable = False
    return diag


def _check_state(state: QuantumState, params: SpinChainParams) -> None:
    if state.ndim != 1 or state.shape[0] != params.dim:
        raise ValueError(
            f"State of shape {state.shape} does not match a {params.n_sites}-site chain (dim {params.dim})"
        )


def initial_state(n_sites: int) -> QuantumState:
    """Ferromagnetic product state |up...up>, i.e. basis index 0."""
    if n_sites < 1:
        raise ValueError(f"n_sites must be >= 1, got {n_sites}")
    state = np.zeros(1 << n_sites, dtype=np.complex128)
    state[0] = 1.0
    return state


def apply_hamiltonian(state: QuantumState, params: SpinChainParams, f_value: float) -> QuantumState:
    """Matrix-free H(f)|psi> (unnormalized)."""
    _check_state(state, params)
    tables = _basis_tables(params.n_sites)
    x_coeff = build_hamiltonian_terms(params).x_coefficient(f_value)
    return _diagonal(params) * state + x_coeff * state[tables.flips].sum(axis=0)


def apply_pauli_y(state: QuantumState, site: int, n_sites: int) -> QuantumState:
    """s^y_site |psi>: s^y|up> = i|down>, s^y|down> = -i|up>."""
    tables = _basis_tables(n_sites)
    return -1j * tables.z_signs[site] * state[tables.flips[site]]


def magnetization_x(state: QuantumState, params: SpinChainParams) -> float:
    """<Y_x> = sum_i <s^x_i>."""
    _check_state(state, params)
    flipped = state[_basis_tables(params.n_sites).flips]
    return float(np.real(np.sum(np.conj(state)[None, :] * flipped)))


def energy(state: QuantumState, params: SpinChainParams, f_value: float = 0.0) -> float:
    """<psi|H(f)|psi>."""
    return float(np.real(np.vdot(state, apply_hamiltonian(state, params, f_value))))


def ehrenfest_rhs(state: QuantumState, params: SpinChainParams) -> float:
    """
    Right-hand side of d<Y_x>/dt for the Ising chain.

        (J_z/2) sum_n <s^y_n s^z_{n+1} + s^z_n s^y_{n+1}> + h_z sum_i <s^y_i>

    Independent of the drive, which commutes with Y_x.

    Raises:
        SimulationError: If the expectation has an imaginary part above 1e-8.
    """
    _check_state(state, params)
    n = params.n_sites
    tables = _basis_tables(n)
    bra = np.conj(state)
    y_images = -1j * tables.z_signs * state[tables.flips]  # row i: s^y_i |psi>

    field_part = np.sum(bra[None, :] * y_images)
    bond_part = 0.0 + 0.0j
    for i, j in build_hamiltonian_terms(params).bonds:
        bond_part += np.sum(bra * tables.z_signs[j] * y_images[i])
        bond_part += np.sum(bra * tables.z_signs[i] * y_images[j])

    value = 0.5 * params.jz * bond_part + params.hz * field_part
    if abs(value.imag) > 1e-8:
        raise SimulationError(
            f"Ehrenfest RHS has imaginary part {value.imag:.3e}; operator implementation is inconsistent"
        )
    return float(value.real)


def site_operator(op: NDArray, site: int, n_sites: int) -> NDArray[np.complex128]:
    """Dense single-site operator; the leftmost Kronecker factor is site N-1."""
    result = np.ones((1, 1), dtype=np.complex128)
    for s in range(n_sites - 1, -1, -1):
        result = np.kron(result, op if s == site else IDENTITY)
    return result


def dense_hamiltonian(params: SpinChainParams, f_value: float = 0.0) -> NDArray[np.complex128]:
    """Dense H(f) built from explicit Kronecker products."""
    if params.n_sites > Config.MAX_DENSE_SITES:
        raise ValueError(f"Dense construction refused for n_sites={params.n_sites} > {Config.MAX_DENSE_SITES}")
    terms = build_hamiltonian_terms(params)
    n = params.n_sites
    zs = [site_operator(PAULI_Z, i, n) for i in range(n)]
    xs = [site_operator(PAULI_X, i, n) for i in range(n)]
    h = np.zeros((params.dim, params.dim), dtype=np.complex128)
    for i, j in terms.bonds:
        h += terms.ising_coeff * zs[i] @ zs[j]
    h += terms.x_coefficient(f_value) * sum(xs[i] for i in terms.x_sites)
    h += terms.z_coeff * sum(zs[i] for i in terms.z_sites)
    return h


def dense_magnetization_x(n_sites: int) -> NDArray[np.complex128]:
    """Dense Y_x = sum_i s^x_i."""
    return sum(site_operator(PAULI_X, i, n_sites) for i in range(n_sites))


def commutator_oracle(params: SpinChainParams, state: QuantumState) -> float:
    """
    i<psi|[H, Y_x]|psi> from dense matrices; reference for ehrenfest_rhs.

    Raises:
        ValueError: For chains longer than six sites.
    """
    if params.n_sites > Config.MAX_DENSE_SITES:
        raise ValueError(
            f"commutator_oracle is limited to {Config.MAX_DENSE_SITES} sites, got {params.n_sites}"
        )
    _check_state(state, params)
    h = dense_hamiltonian(params)
    y = dense_magnetization_x(params.n_sites)
    value = 1j * np.vdot(state, (h @ y - y @ h) @ state)
    return float(value.real)


def hamiltonian_norm_bound(params: SpinChainParams, max_drive: float) -> float:
    """Upper bound on ||H(t)|| from the sum of absolute term coefficients."""
    n = params.n_sites
    return (
        abs(params.jz) / 4.0 * (n - 1)
        + (abs(params.hx) + abs(max_drive)) / 2.0 * n
        + abs(params.hz) / 2.0 * n
    )


def choose_substeps(dt: float, norm_bound: float, n_steps: int, budget: float = Config.NORM_BUDGET) -> int:
    """
    RK4 sub-steps per recorded step so the worst-case norm loss stays in budget.

    For an eigenphase x = lambda*h the RK4 amplification loses x^6/72 of squared
    norm per step; over n_steps*s sub-steps of size x0/s that totals
    n_steps * x0 * x^5 / 72.
    """
    x0 = dt * norm_bound
    if x0 == 0.0:
        return 1
    x_max = (72.0 * budget / (n_steps * x0)) ** 0.2
    return max(1, math.ceil(x0 / x_max))


def _rk4_step(state: QuantumState, t: float, h: float, params: SpinChainParams, drive: DriveSignal) -> QuantumState:
    """Classical RK4 for i d|psi>/dt = H(t)|psi>, drive sampled at t, t+h/2, t+h."""
    f0 = drive.value(t)
    f_mid = drive.value(t + 0.5 * h)
    f1 = drive.value(t + h)
    k1 = -1j * apply_hamiltonian(state, params, f0)
    k2 = -1j * apply_hamiltonian(state + 0.5 * h * k1, params, f_mid)
    k3 = -1j * apply_hamiltonian(state + 0.5 * h * k2, params, f_mid)
    k4 = -1j * apply_hamiltonian(state + h * k3, params, f1)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def iterate_states(params: SpinChainParams, drive: DriveSignal, substeps: int | None = None) -> Iterator[QuantumState]:
    """Yield |psi(t_k)> for k = 1..N_T, starting from |up...up> at t = 0."""
    if substeps is None:
        substeps = choose_substeps(drive.dt, hamiltonian_norm_bound(params, drive.amplitude), drive.n_steps)
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    h = drive.dt / substeps
    state = initial_state(params.n_sites)
    for k in range(drive.n_steps):
        for s in range(substeps):
            state = _rk4_step(state, (k * substeps + s) * h, h, params, drive)
        yield state


def evolve_trajectory(
    params: SpinChainParams,
    drive: DriveSignal,
    substeps: int | None = None,
    tolerance: float = Config.NORM_TOLERANCE,
) -> TrajectorySample:
    """
    Integrate the Schrödinger equation from |up...up> and record observables.

    The state is recorded at t_k = k*dt for k = 1..N_T. Each recorded step is
    split into `substeps` RK4 steps (chosen from the Hamiltonian norm bound
    when not given).

    Args:
        params: Chain parameters.
        drive: Sampled drive; its continuous form is evaluated at sub-step times.
        substeps: RK4 sub-steps per recorded step.
        tolerance: Maximum allowed |<psi|psi> - 1| along the trajectory.

    Returns:
        TrajectorySample: drive, <Y_x>(t_k) and Ehrenfest RHS at t_k.

    Raises:
        SimulationError: If the norm drifts beyond tolerance.
    """
    n_steps = drive.n_steps
    if n_steps < 2:
        raise ValueError(f"A trajectory needs at least 2 steps, got {n_steps}")
    if substeps is None:
        substeps = choose_substeps(drive.dt, hamiltonian_norm_bound(params, drive.amplitude), n_steps)

    output = np.empty(n_steps)
    rhs = np.empty(n_steps)
    max_drift = 0.0

    for k, state in enumerate(iterate_states(params, drive, substeps)):
        drift = abs(float(np.vdot(state, state).real) - 1.0)
        max_drift = max(max_drift, drift)
        if drift > tolerance:
            raise SimulationError(
                f"Norm drift {drift:.3e} exceeds {tolerance:.0e} at step {k + 1}/{n_steps} "
                f"(A={drive.amplitude}, omega={drive.omega}, dt={drive.dt:.4g}, substeps={substeps}); "
                f"step size too large"
            )
        output[k] = magnetization_x(state, params)
        rhs[k] = ehrenfest_rhs(state, params)

    logger.debug(
        "Trajectory A=%.4g omega=%.4g: %d steps x %d substeps, max norm drift %.2e",
        drive.amplitude, drive.omega, n_steps, substeps, max_drift,
    )
    output.flags.writeable = False
    rhs.flags.writeable = False
    return TrajectorySample(drive=drive, output=output, ehrenfest_rhs=rhs)
