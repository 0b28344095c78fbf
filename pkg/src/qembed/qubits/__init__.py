"""Qubit operators, fermion encodings and parity tapering."""

from .mapping import (
    ENCODINGS,
    EncodingError,
    encode_occupations,
    encoding_matrix,
    ladder_operators,
    map_fermion_term,
    map_hamiltonian,
    number_operator,
)
from .pauli import PauliOperator, QubitCountMismatch, add, multiply, simplify, to_dense
from .tapering import (
    SymmetryViolation,
    parity_eigenvalues,
    parity_tapered_qubits,
    sector_parities,
    taper,
    taper_parity,
    tapered_bits,
    z_symmetries,
)

__all__ = [
    "ENCODINGS", "EncodingError", "PauliOperator", "QubitCountMismatch", "SymmetryViolation",
    "add", "encode_occupations", "encoding_matrix", "ladder_operators", "map_fermion_term",
    "map_hamiltonian", "multiply", "number_operator", "parity_eigenvalues",
    "parity_tapered_qubits", "sector_parities", "simplify", "taper", "taper_parity",
    "tapered_bits", "to_dense", "z_symmetries",
]
