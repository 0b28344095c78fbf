"""Removal of qubits that carry conserved Z-type quantum numbers."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .pauli import DROP_TOL, PauliOperator


class SymmetryViolation(ValueError):
    """The operator does not commute with a Z on a qubit being tapered."""


def taper(op: PauliOperator, eigenvalues: Mapping[int, int], tol: float = DROP_TOL) -> PauliOperator:
    """Replace Z on each listed qubit by its eigenvalue (+1/-1) and drop the qubit."""
    n = op.n_qubits
    for q, ev in eigenvalues.items():
        if not 0 <= q < n:
            raise ValueError(f"qubit {q} out of range for {n} qubits")
        if ev not in (1, -1):
            raise ValueError(f"eigenvalue for qubit {q} must be +1 or -1, got {ev}")
    removed = sorted(eigenvalues)
    kept = [k for k in range(n) if k not in eigenvalues]
    rmask = sum(1 << q for q in removed)

    def compress(mask: int) -> int:
        out = 0
        for new, old in enumerate(kept):
            if mask >> old & 1:
                out |= 1 << new
        return out

    terms: dict[tuple[int, int], complex] = {}
    for (x, z), c in op.terms.items():
        if abs(c) < tol:
            continue
        if x & rmask:
            bad = [q for q in removed if x >> q & 1]
            raise SymmetryViolation(
                f"term with coefficient {c:.3g} flips tapered qubit(s) {bad}"
            )
        for q in removed:
            if z >> q & 1:
                c = c * eigenvalues[q]
        key = (compress(x), compress(z))
        terms[key] = terms.get(key, 0) + c
    return PauliOperator(len(kept), terms).simplify(tol)


def parity_tapered_qubits(n_orb: int) -> tuple[int, int]:
    """Qubits holding (N_alpha mod 2) and (N mod 2) in the parity encoding."""
    return n_orb - 1, 2 * n_orb - 1


def parity_eigenvalues(n_orb: int, alpha_parity: int, beta_parity: int) -> dict[int, int]:
    qa, qt = parity_tapered_qubits(n_orb)
    return {qa: alpha_parity, qt: alpha_parity * beta_parity}


def sector_parities(n_alpha: int, n_beta: int) -> tuple[int, int]:
    return (-1) ** n_alpha, (-1) ** n_beta


def taper_parity(op: PauliOperator, alpha_parity: int, beta_parity: int) -> PauliOperator:
    """Two-qubit reduction of a parity-encoded, number- and S_z-conserving operator.

    Args:
        op: operator on 2*n_orb qubits in the parity encoding.
        alpha_parity: (-1)^N_alpha of the target sector.
        beta_parity: (-1)^N_beta of the target sector.

    Returns:
        Operator on 2*n_orb - 2 qubits.

    Raises:
        SymmetryViolation: ``op`` changes a tapered parity.
    """
    if op.n_qubits % 2 or op.n_qubits < 2:
        raise ValueError("parity tapering needs an even number of qubits >= 2")
    n_orb = op.n_qubits // 2
    return taper(op, parity_eigenvalues(n_orb, alpha_parity, beta_parity))


def tapered_bits(bits, n_orb: int) -> np.ndarray:
    """Drop the two parity qubits from a parity-encoded bitstring."""
    qa, qt = parity_tapered_qubits(n_orb)
    return np.array([b for k, b in enumerate(bits) if k not in (qa, qt)], dtype=np.int64)


def z_symmetries(op: PauliOperator) -> list[int]:
    """Basis of Z-only Pauli strings (as z-masks) commuting with every term of ``op``.

    A Z-string with mask ``s`` commutes with a term ``(x, z)`` iff popcount(s & x)
    is even, so the symmetries are the GF(2) null space of the stacked x-masks.
    """
    n = op.n_qubits
    rows = [x for (x, _z), c in op.terms.items() if abs(c) >= DROP_TOL and x]
    A = np.array([[x >> k & 1 for k in range(n)] for x in rows], dtype=np.int64).reshape(-1, n)
    # row-reduce over GF(2)
    pivots = []
    r = 0
    for col in range(n):
        nz = [i for i in range(r, A.shape[0]) if A[i, col]]
        if not nz:
            continue
        A[[r, nz[0]]] = A[[nz[0], r]]
        for i in range(A.shape[0]):
            if i != r and A[i, col]:
                A[i] ^= A[r]
        pivots.append(col)
        r += 1
        if r == A.shape[0]:
            break
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        vec = [0] * n
        vec[f] = 1
        for i, pc in enumerate(pivots):
            if A[i, f]:
                vec[pc] = 1
        basis.append(sum(b << k for k, b in enumerate(vec)))
    return basis
