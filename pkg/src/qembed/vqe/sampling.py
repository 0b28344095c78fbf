"""Finite-shot estimation of Pauli-sum expectation values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..qubits.pauli import PauliOperator, QubitCountMismatch, _parity, _reverse_bits

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1, -1j])
# rotate the X or Y eigenbasis onto Z
_ROTATION = {"X": _H, "Y": _H @ _SDG}


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    shots: int

    def __iter__(self):
        yield self.value
        yield self.stderr


def qubitwise_commuting_groups(op: PauliOperator) -> list[tuple[dict[int, str], list[tuple[int, int, float]]]]:
    """Greedy grouping of non-identity terms into (measurement basis, members).

    Deterministic: terms are visited in mask order.
    """
    groups: list[tuple[dict[int, str], list]] = []
    n = op.n_qubits
    for (x, z), c in sorted(op.terms.items()):
        if x == 0 and z == 0:
            continue
        basis = {}
        for k in range(n):
            bx, bz = x >> k & 1, z >> k & 1
            if bx or bz:
                basis[k] = "Y" if bx and bz else "X" if bx else "Z"
        for gbasis, members in groups:
            if all(gbasis.get(k, b) == b for k, b in basis.items()):
                gbasis.update(basis)
                members.append((x, z, c.real))
                break
        else:
            groups.append((basis, [(x, z, c.real)]))
    return groups


def _rotate(psi: np.ndarray, basis: dict[int, str], n: int) -> np.ndarray:
    psi = psi.reshape((2,) * n)
    for k, b in basis.items():
        if b == "Z":
            continue
        psi = np.moveaxis(np.tensordot(_ROTATION[b], psi, axes=([1], [k])), 0, k)
    return psi.reshape(-1)


def sample_expectation(
    psi: np.ndarray, op: PauliOperator, shots: int, seed: int | np.random.Generator | None = None
) -> Estimate:
    """Shot-noise estimate of <psi|op|psi> and its standard error.

    Terms are measured in qubit-wise commuting groups; each group gets
    ``shots`` samples drawn from the exact outcome distribution in its rotated
    basis. The identity coefficient is added exactly. Deterministic for a given
    integer seed.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    n = op.n_qubits
    if psi.shape[0] != 1 << n:
        raise QubitCountMismatch(f"statevector of length {psi.shape[0]} for {n} qubits")
    rng = np.random.default_rng(seed)
    total = float(op.identity_coefficient.real)
    var = 0.0
    idx = np.arange(1 << n, dtype=np.int64)
    for basis, members in qubitwise_commuting_groups(op):
        rotated = _rotate(psi, basis, n)
        probs = np.abs(rotated) ** 2
        probs /= probs.sum()
        counts = rng.multinomial(shots, probs)
        values = np.zeros(1 << n)
        for x, z, c in members:
            support = _reverse_bits(x | z, n)
            values += c * (1 - 2 * _parity(idx & support))
        hit = counts > 0
        mean = float(np.dot(counts[hit], values[hit]) / shots)
        total += mean
        if shots > 1:
            var += float(np.dot(counts[hit], (values[hit] - mean) ** 2) / (shots - 1)) / shots
    return Estimate(total, float(np.sqrt(var)), shots)
