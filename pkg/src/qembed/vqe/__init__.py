"""Variational quantum eigensolver on a statevector simulator."""

from .ansatz import (
    EmptyAnsatzError,
    Excitation,
    ReferenceState,
    UccsdAnsatz,
    apply_ansatz,
    build_uccsd,
    enumerate_excitations,
)
from .driver import Backend, VqeRecord, VqeTrace, run_vqe
from .optimize import MinimizeResult, minimize
from .sampling import Estimate, qubitwise_commuting_groups, sample_expectation
from .statevector import apply_rotation, basis_index, basis_state, expectation

__all__ = [
    "Backend", "EmptyAnsatzError", "Estimate", "Excitation", "MinimizeResult", "ReferenceState",
    "UccsdAnsatz", "VqeRecord", "VqeTrace", "apply_ansatz", "apply_rotation", "basis_index",
    "basis_state", "build_uccsd", "enumerate_excitations", "expectation", "minimize",
    "qubitwise_commuting_groups", "run_vqe", "sample_expectation",
]
