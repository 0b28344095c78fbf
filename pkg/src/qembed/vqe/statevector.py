"""Exact statevector backend."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..qubits.pauli import PauliOperator, QubitCountMismatch


def basis_index(bits: Sequence[int]) -> int:
    """Index of a computational basis state; qubit 0 is the most significant bit."""
    n = len(bits)
    return sum(int(b) << (n - 1 - k) for k, b in enumerate(bits))


def basis_state(bits: Sequence[int]) -> np.ndarray:
    psi = np.zeros(1 << len(bits), dtype=complex)
    psi[basis_index(bits)] = 1.0
    return psi


def expectation(psi: np.ndarray, op: PauliOperator, check_hermitian: bool = True) -> float:
    """<psi|op|psi> (real part); the imaginary part must vanish for Hermitian ``op``."""
    if psi.shape[0] != 1 << op.n_qubits:
        raise QubitCountMismatch(f"statevector of length {psi.shape[0]} for {op.n_qubits} qubits")
    val = np.vdot(psi, op.apply(psi))
    if check_hermitian and abs(val.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary part {val.imag:.3g}; operator not Hermitian?")
    return float(val.real)


def apply_rotation(psi: np.ndarray, generator: PauliOperator, theta: float) -> np.ndarray:
    """exp(theta G) psi for an anti-Hermitian G with G^3 = -G.

    Fermionic excitation generators T - T+ satisfy this identity, so
    exp(theta G) = 1 + sin(theta) G + (1 - cos(theta)) G^2 exactly.
    """
    g1 = generator.apply(psi)
    g2 = generator.apply(g1)
    return psi + np.sin(theta) * g1 + (1.0 - np.cos(theta)) * g2
