"""
Physics module - exact driven Ising-chain simulation.
"""
from .spin_chain import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DriveSignal,
    HamiltonianTerms,
    QuantumState,
    SpinChainParams,
    TrajectorySample,
    apply_hamiltonian,
    apply_pauli_y,
    build_hamiltonian_terms,
    choose_substeps,
    commutator_oracle,
    dense_hamiltonian,
    dense_magnetization_x,
    ehrenfest_rhs,
    energy,
    evolve_trajectory,
    hamiltonian_norm_bound,
    initial_state,
    iterate_states,
    magnetization_x,
    site_operator,
)

__all__ = [
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "DriveSignal",
    "HamiltonianTerms",
    "QuantumState",
    "SpinChainParams",
    "TrajectorySample",
    "apply_hamiltonian",
    "apply_pauli_y",
    "build_hamiltonian_terms",
    "choose_substeps",
    "commutator_oracle",
    "dense_hamiltonian",
    "dense_magnetization_x",
    "ehrenfest_rhs",
    "energy",
    "evolve_trajectory",
    "hamiltonian_norm_bound",
    "initial_state",
    "iterate_states",
    "magnetization_x",
    "site_operator",
]
