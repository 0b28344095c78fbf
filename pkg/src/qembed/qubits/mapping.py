"""Fermion-to-qubit encodings.

All three encodings are linear binary codes: the qubit register holds
``b = B n (mod 2)`` for the occupation vector ``n``. Jordan-Wigner uses the
identity, parity the lower-triangular all-ones matrix, and Bravyi-Kitaev the
Fenwick-tree matrix (valid for any number of modes). From ``B`` we read off
the update, parity and occupation sets, and the ladder operators follow as

    a+_j = X_{update(j)} (I + Z_{occupation(j)})/2 Z_{parity(j)}
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..integrals import ActiveSpace, OrbitalIntegrals, active_integrals
from .pauli import PauliOperator

ENCODINGS = ("jw", "parity", "bk")


class EncodingError(ValueError):
    pass


def _check_encoding(encoding: str) -> str:
    key = encoding.lower()
    aliases = {"jordan_wigner": "jw", "bravyi_kitaev": "bk"}
    key = aliases.get(key, key)
    if key not in ENCODINGS:
        raise EncodingError(f"unsupported encoding {encoding!r}; choose from {ENCODINGS}")
    return key


def encoding_matrix(n_modes: int, encoding: str) -> np.ndarray:
    """Binary matrix B with qubits = B @ occupations (mod 2)."""
    encoding = _check_encoding(encoding)
    if encoding == "jw":
        return np.eye(n_modes, dtype=np.int64)
    if encoding == "parity":
        return np.tril(np.ones((n_modes, n_modes), dtype=np.int64))
    B = np.zeros((n_modes, n_modes), dtype=np.int64)
    for j in range(n_modes):
        # Fenwick node j+1 (1-based) stores modes (j+1-lowbit(j+1), j+1]
        low = (j + 1) & -(j + 1)
        B[j, j + 1 - low: j + 1] = 1
    return B


def gf2_inverse(B: np.ndarray) -> np.ndarray:
    n = B.shape[0]
    A = np.concatenate([B % 2, np.eye(n, dtype=np.int64)], axis=1)
    row = 0
    for col in range(n):
        pivots = np.nonzero(A[row:, col])[0]
        if len(pivots) == 0:
            raise EncodingError("encoding matrix is singular over GF(2)")
        p = row + pivots[0]
        A[[row, p]] = A[[p, row]]
        for r in range(n):
            if r != row and A[r, col]:
                A[r] ^= A[row]
        row += 1
    return A[:, n:]


def encode_occupations(occupations, encoding: str) -> np.ndarray:
    """Qubit bits for an occupation vector (spin-orbital order)."""
    n = np.asarray(occupations, dtype=np.int64)
    return encoding_matrix(len(n), encoding) @ n % 2


def _mask(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


@lru_cache(maxsize=64)
def _ladder_masks(n_modes: int, encoding: str) -> tuple[tuple[int, int, int], ...]:
    B = encoding_matrix(n_modes, encoding)
    Binv = gf2_inverse(B)
    lower = np.tril(np.ones((n_modes, n_modes), dtype=np.int64), -1)
    P = lower @ Binv % 2
    out = []
    for j in range(n_modes):
        update = _mask(np.nonzero(B[:, j])[0])
        occ = _mask(np.nonzero(Binv[j])[0])
        par = _mask(np.nonzero(P[j])[0])
        out.append((update, occ, par))
    return tuple(out)


def ladder_operators(n_modes: int, encoding: str) -> tuple[list[PauliOperator], list[PauliOperator]]:
    """(creation, annihilation) operators for each fermionic mode."""
    encoding = _check_encoding(encoding)
    creation, annihilation = [], []
    for update, occ, par in _ladder_masks(n_modes, encoding):
        flip = PauliOperator(n_modes, {(update, 0): 1.0})
        proj = PauliOperator(n_modes, {(0, 0): 0.5, (0, occ): 0.5})
        sign = PauliOperator(n_modes, {(0, par): 1.0})
        cdag = (flip * proj * sign).simplify()
        creation.append(cdag)
        annihilation.append(cdag.adjoint())
    return creation, annihilation


def map_fermion_term(
    term: list[tuple[int, bool]], n_modes: int, encoding: str
) -> PauliOperator:
    """Map a product of ladder operators given as ``[(mode, is_creation), ...]``."""
    cdag, ann = ladder_operators(n_modes, encoding)
    out = PauliOperator.identity(n_modes)
    for mode, dag in term:
        out = out * (cdag[mode] if dag else ann[mode])
    return out.simplify()


def map_hamiltonian(
    ints: OrbitalIntegrals,
    active: ActiveSpace | None = None,
    encoding: str = "jw",
) -> PauliOperator:
    """Qubit Hamiltonian on 2*n_orb qubits (alpha block, then beta block).

    Uses a+_P a+_R a_S a_Q = E_PQ E_RS - delta_QR E_PS with E_PQ = a+_P a_Q, so
    only one-body products are formed.
    """
    encoding = _check_encoding(encoding)
    if active is not None:
        ints = active_integrals(ints, active)
    n = ints.n_orb
    modes = 2 * n
    cdag, ann = ladder_operators(modes, encoding)
    E = {}
    for s in (0, 1):
        for p in range(n):
            for q in range(n):
                E[(p + s * n, q + s * n)] = (cdag[p + s * n] * ann[q + s * n]).simplify()

    k1 = ints.t - 0.5 * np.einsum("prrq->pq", ints.v)
    H = PauliOperator.identity(modes, ints.e0)
    for s in (0, 1):
        for p in range(n):
            for q in range(n):
                if k1[p, q] != 0.0:
                    H = H + E[(p + s * n, q + s * n)] * k1[p, q]
    for s in (0, 1):
        for p in range(n):
            for q in range(n):
                F = PauliOperator(modes)
                for t in (0, 1):
                    for r in range(n):
                        for u in range(n):
                            val = ints.v[p, q, r, u]
                            if val != 0.0:
                                F = F + E[(r + t * n, u + t * n)] * (0.5 * val)
                if len(F):
                    H = H + E[(p + s * n, q + s * n)] * F.simplify()
    return H.simplify()


def number_operator(n_modes: int, encoding: str, modes=None) -> PauliOperator:
    cdag, ann = ladder_operators(n_modes, encoding)
    out = PauliOperator(n_modes)
    for j in range(n_modes) if modes is None else modes:
        out = out + cdag[j] * ann[j]
    return out.simplify()
