"""Full configuration interaction in the Slater-determinant basis.

Spin-orbitals are ordered alpha block first: spin-orbital ``P`` is spatial
orbital ``P % n_orb`` with spin ``P // n_orb`` (0 = alpha, 1 = beta). A
determinant with occupied spin-orbitals ``P1 < P2 < ... < Pk`` is the state
``a+_P1 a+_P2 ... a+_Pk |vac>``, which is exactly the Jordan-Wigner
computational basis state with the same occupations (no extra phase).
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .integrals import ActiveSpace, OrbitalIntegrals, active_integrals

log = logging.getLogger(__name__)

HARTREE_TO_EV = 27.211386245988
MAX_DIMENSION = 10_000_000
DENSE_FALLBACK_DIMENSION = 2000


class FciError(RuntimeError):
    pass


class Determinant(NamedTuple):
    """Occupation bitstrings; bit ``i`` set means spatial orbital ``i`` occupied."""

    alpha: int
    beta: int

    def spin_orbital_bits(self, n_orb: int) -> int:
        return self.alpha | (self.beta << n_orb)

    def label(self, n_orb: int, names: Sequence[str] | None = None) -> str:
        """Compact occupation string, e.g. ``'2ab'``; with names, ``'a a~ ex ey~'``."""
        if names is None:
            out = []
            for i in range(n_orb):
                a, b = self.alpha >> i & 1, self.beta >> i & 1
                out.append("2" if a and b else "a" if a else "b" if b else "0")
            return "".join(out)
        parts = []
        for i in range(n_orb):
            if self.alpha >> i & 1:
                parts.append(names[i])
            if self.beta >> i & 1:
                parts.append(names[i] + "~")
        return " ".join(parts)


def _strings(n_orb: int, n_elec: int) -> list[int]:
    return [sum(1 << i for i in occ) for occ in itertools.combinations(range(n_orb), n_elec)]


def enumerate_basis(active: ActiveSpace) -> list[Determinant]:
    """All determinants of the sector, alpha-major, lexicographic in occupied tuples."""
    n = active.n_orb
    dim = math.comb(n, active.n_alpha) * math.comb(n, active.n_beta)
    if dim > MAX_DIMENSION:
        raise FciError(f"determinant space of dimension {dim} exceeds {MAX_DIMENSION}")
    alphas = _strings(n, active.n_alpha)
    betas = _strings(n, active.n_beta)
    return [Determinant(a, b) for a in alphas for b in betas]


# -- fermionic sign helpers -------------------------------------------------


def _popcount(x: int) -> int:
    return bin(x).count("1")


def annihilate(bits: int, p: int) -> tuple[int, int] | None:
    """Apply a_p to an occupation bitstring; returns (bits, sign) or None."""
    if not bits >> p & 1:
        return None
    sign = -1 if _popcount(bits & ((1 << p) - 1)) & 1 else 1
    return bits ^ (1 << p), sign


def create(bits: int, p: int) -> tuple[int, int] | None:
    """Apply a+_p to an occupation bitstring; returns (bits, sign) or None."""
    if bits >> p & 1:
        return None
    sign = -1 if _popcount(bits & ((1 << p) - 1)) & 1 else 1
    return bits | (1 << p), sign


def apply_string(bits: int, ops: Sequence[tuple[int, bool]]) -> tuple[int, int] | None:
    """Apply a product of ladder operators, rightmost first.

    ``ops`` lists ``(index, is_creation)`` in written (left-to-right) order.
    """
    sign = 1
    for p, dag in reversed(ops):
        res = create(bits, p) if dag else annihilate(bits, p)
        if res is None:
            return None
        bits, s = res
        sign *= s
    return bits, sign


def _occupied(bits: int) -> list[int]:
    out = []
    i = 0
    while bits:
        if bits & 1:
            out.append(i)
        bits >>= 1
        i += 1
    return out


# -- Slater-Condon ----------------------------------------------------------


def matrix_element(d1: Determinant, d2: Determinant, ints: OrbitalIntegrals) -> float:
    """<d1|H|d2> from the Slater-Condon rules."""
    n = ints.n_orb
    t, v = ints.t, ints.v

    def h(P, Q):
        return t[P % n, Q % n] if P // n == Q // n else 0.0

    def g(P, Q, R, S):
        # <PQ|RS> = (pr|qs) for matching spins
        if P // n != R // n or Q // n != S // n:
            return 0.0
        return v[P % n, R % n, Q % n, S % n]

    def anti(P, Q, R, S):
        return g(P, Q, R, S) - g(P, Q, S, R)

    b1 = d1.spin_orbital_bits(n)
    b2 = d2.spin_orbital_bits(n)
    if _popcount(b1) != _popcount(b2):
        return 0.0
    particles = _occupied(b1 & ~b2)
    holes = _occupied(b2 & ~b1)
    if len(particles) > 2:
        return 0.0

    if not particles:
        occ = _occupied(b1)
        val = ints.e0 + sum(h(P, P) for P in occ)
        val += 0.5 * sum(anti(P, Q, P, Q) for P in occ for Q in occ)
        return float(val)

    if len(particles) == 1:
        (m,), (p,) = particles, holes
        _, sign = apply_string(b2, [(m, True), (p, False)])
        common = _occupied(b1 & b2)
        val = h(m, p) + sum(anti(m, k, p, k) for k in common)
        return float(sign * val)

    m, nn = particles
    p, q = holes
    _, sign = apply_string(b2, [(m, True), (nn, True), (q, False), (p, False)])
    return float(sign * anti(m, nn, p, q))


# -- string-driven Hamiltonian action -----------------------------------------


class _StringLinks:
    """For each (p, q): arrays I, J, sign with a+_p a_q |J> = sign |I>."""

    def __init__(self, n_orb: int, n_elec: int):
        self.strings = _strings(n_orb, n_elec)
        index = {s: k for k, s in enumerate(self.strings)}
        self.links: dict[tuple[int, int], tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
        rows: dict[tuple[int, int], list[tuple[int, int, int]]] = {
            (p, q): [] for p in range(n_orb) for q in range(n_orb)
        }
        for J, s in enumerate(self.strings):
            for q in _occupied(s):
                for p in range(n_orb):
                    res = apply_string(s, [(p, True), (q, False)])
                    if res is not None:
                        rows[p, q].append((index[res[0]], J, res[1]))
        for key, entries in rows.items():
            arr = np.array(entries, dtype=np.int64).reshape(-1, 3)
            self.links[key] = (arr[:, 0], arr[:, 1], arr[:, 2].astype(float))
        occ = np.zeros((len(self.strings), n_orb))
        for k, s in enumerate(self.strings):
            for i in _occupied(s):
                occ[k, i] = 1.0
        self.occupations = occ


class FciHamiltonian:
    """Matrix-free Hamiltonian on one (n_alpha, n_beta) sector."""

    def __init__(self, ints: OrbitalIntegrals, n_alpha: int, n_beta: int):
        self.ints = ints
        self.n_orb = n = ints.n_orb
        self.n_alpha, self.n_beta = n_alpha, n_beta
        self._a = _StringLinks(n, n_alpha)
        self._b = _StringLinks(n, n_beta)
        self.shape_ab = (len(self._a.strings), len(self._b.strings))
        self.dim = self.shape_ab[0] * self.shape_ab[1]
        if self.dim > MAX_DIMENSION:
            raise FciError(f"determinant space of dimension {self.dim} exceeds {MAX_DIMENSION}")
        self.k1 = ints.t - 0.5 * np.einsum("prrq->pq", ints.v)

    @property
    def basis(self) -> list[Determinant]:
        return [Determinant(a, b) for a in self._a.strings for b in self._b.strings]

    def _excite(self, C: np.ndarray) -> np.ndarray:
        """D[p, q] = E_pq C for C of shape (na, nb, m)."""
        n = self.n_orb
        D = np.zeros((n, n) + C.shape)
        for (p, q), (I, J, s) in self._a.links.items():
            if len(I):
                D[p, q][I] += s[:, None, None] * C[J]
        for (p, q), (I, J, s) in self._b.links.items():
            if len(I):
                D[p, q][:, I] += s[None, :, None] * C[:, J]
        return D

    def _excite_contract(self, G: np.ndarray) -> np.ndarray:
        """sum_pq E_pq G[p, q]."""
        out = np.zeros(G.shape[2:])
        for (p, q), (I, J, s) in self._a.links.items():
            if len(I):
                out[I] += s[:, None, None] * G[p, q][J]
        for (p, q), (I, J, s) in self._b.links.items():
            if len(I):
                out[:, I] += s[None, :, None] * G[p, q][:, J]
        return out

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """H x for a vector (dim,) or a block (dim, m)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = x.reshape(self.shape_ab + (-1,))
        D = self._excite(X)
        sigma = self.ints.e0 * X + np.einsum("pq,pq...->...", self.k1, D)
        G = np.einsum("pqrs,rs...->pq...", self.ints.v, D)
        sigma += 0.5 * self._excite_contract(G)
        sigma = sigma.reshape(self.dim, -1)
        return sigma[:, 0] if single else sigma

    def diagonal(self) -> np.ndarray:
        ints = self.ints
        na = self._a.occupations
        nb = self._b.occupations
        J = np.einsum("iijj->ij", ints.v)
        K = np.einsum("ijji->ij", ints.v)
        ta = na @ np.diag(ints.t)
        tb = nb @ np.diag(ints.t)
        # same-spin Coulomb-minus-exchange, opposite-spin Coulomb
        ea = 0.5 * np.einsum("xi,ij,xj->x", na, J - K, na)
        eb = 0.5 * np.einsum("yi,ij,yj->y", nb, J - K, nb)
        eab = na @ J @ nb.T
        diag = ints.e0 + (ta + ea)[:, None] + (tb + eb)[None, :] + eab
        return diag.reshape(-1)

    def dense(self, chunk: int = 512) -> np.ndarray:
        if self.dim > 20_000:
            raise FciError(f"refusing to build a dense {self.dim}x{self.dim} matrix")
        H = np.empty((self.dim, self.dim))
        eye = np.eye(self.dim)
        for start in range(0, self.dim, chunk):
            H[:, start:start + chunk] = self.matvec(eye[:, start:start + chunk])
        return 0.5 * (H + H.T)


def hamiltonian_matrix(ints: OrbitalIntegrals, active: ActiveSpace) -> np.ndarray:
    """Dense H over :func:`enumerate_basis` (frozen orbitals folded in)."""
    sub = active_integrals(ints, active)
    return FciHamiltonian(sub, active.n_alpha, active.n_beta).dense()


# -- eigensolvers ------------------------------------------------------------


def davidson(
    matvec,
    diag: np.ndarray,
    k: int = 1,
    tol: float = 1e-8,
    max_subspace: int = 30,
    restart_size: int = 5,
    max_iter: int = 500,
    guess: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray, bool]:
    """Lowest ``k`` eigenpairs of a symmetric operator.

    Diagonal (Jacobi) preconditioner; the subspace is collapsed onto the
    current Ritz vectors when it exceeds ``max_subspace``.

    Returns:
        (eigenvalues, eigenvectors as columns, converged flag)
    """
    dim = len(diag)
    k = min(k, dim)
    restart_size = max(restart_size, k)
    max_subspace = max(max_subspace, 2 * restart_size)
    if guess is None:
        n0 = min(dim, max(k + 2, restart_size))
        order = np.argsort(diag, kind="stable")[:n0]
        V = np.zeros((dim, n0))
        V[order, np.arange(n0)] = 1.0
    else:
        V, _ = np.linalg.qr(guess)
    AV = matvec(V)
    theta = np.zeros(k)
    X = V[:, :k]
    for it in range(max_iter):
        S = V.T @ AV
        S = 0.5 * (S + S.T)
        w, y = np.linalg.eigh(S)
        theta = w[:k]
        X = V @ y[:, :k]
        R = AV @ y[:, :k] - X * theta
        norms = np.linalg.norm(R, axis=0)
        if np.all(norms < tol):
            return theta, X, True
        if V.shape[1] == dim:
            # exhausted the full space: Ritz pairs are exact up to rounding
            return theta, X, bool(np.all(norms < max(tol, 1e-10)))
        new = []
        for j in np.nonzero(norms >= tol)[0]:
            denom = theta[j] - diag
            denom = np.where(np.abs(denom) < 1e-8, np.copysign(1e-8, denom), denom)
            new.append(R[:, j] / denom)
        T = np.array(new).T
        if V.shape[1] + T.shape[1] > max_subspace:
            keep = min(restart_size, V.shape[1])
            V = V @ y[:, :keep]
            AV = AV @ y[:, :keep]
        for _ in range(2):
            T -= V @ (V.T @ T)
        T, _ = np.linalg.qr(T)
        T = T[:, np.linalg.norm(T, axis=0) > 1e-10]
        for _ in range(2):
            T -= V @ (V.T @ T)
        good = np.linalg.norm(T, axis=0) > 1e-8
        if not np.any(good):
            return theta, X, bool(np.all(norms < tol))
        T = T[:, good] / np.linalg.norm(T[:, good], axis=0)
        V = np.hstack([V, T])
        AV = np.hstack([AV, matvec(T)])
    return theta, X, False


# -- states and spin -----------------------------------------------------------


@dataclass(frozen=True)
class CiVector:
    n_orb: int
    basis: tuple[Determinant, ...]
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (len(self.basis),):
            raise ValueError("coefficient count does not match basis size")
        c.setflags(write=False)
        object.__setattr__(self, "basis", tuple(Determinant(*d) for d in self.basis))
        object.__setattr__(self, "coeffs", c)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def leading(self, threshold: float = 0.05) -> list[tuple[Determinant, float]]:
        order = np.argsort(-np.abs(self.coeffs), kind="stable")
        return [(self.basis[i], float(self.coeffs[i])) for i in order if abs(self.coeffs[i]) >= threshold]


def spin_lowering(state: CiVector) -> dict[Determinant, float]:
    """S- |state> as a sparse map over determinants of the lowered sector."""
    n = state.n_orb
    out: dict[Determinant, float] = {}
    for det, c in zip(state.basis, state.coeffs):
        if c == 0.0:
            continue
        bits = det.spin_orbital_bits(n)
        for i in range(n):
            res = apply_string(bits, [(i + n, True), (i, False)])
            if res is None:
                continue
            nb, sign = res
            new = Determinant(nb & ((1 << n) - 1), nb >> n)
            out[new] = out.get(new, 0.0) + sign * c
    return out


def s_squared(state: CiVector) -> float:
    """<S^2> = |S- psi|^2 + Sz^2 - Sz for a normalized state of fixed Sz."""
    if not state.basis:
        return 0.0
    sz_values = {(_popcount(d.alpha) - _popcount(d.beta)) / 2 for d in state.basis}
    if len(sz_values) != 1:
        raise ValueError("state mixes M_S sectors")
    sz = sz_values.pop()
    lowered = spin_lowering(state)
    norm2 = float(sum(c * c for c in lowered.values()))
    return norm2 + sz * sz - sz


# -- driver --------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    states: tuple[CiVector, ...]
    s_squared: np.ndarray
    sz: float
    n_alpha: int
    n_beta: int
    orbital_names: tuple[str, ...] | None = None

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    def spin_labels(self) -> list[float]:
        """Total spin S of each state from <S^2> = S(S+1)."""
        return [0.5 * (-1.0 + math.sqrt(1.0 + 4.0 * max(s2, 0.0))) for s2 in self.s_squared]

    def to_dict(self, threshold: float = 0.05) -> dict:
        e0 = float(self.energies[0])
        states = []
        for k, (e, st, s2) in enumerate(zip(self.energies, self.states, self.s_squared)):
            states.append(
                {
                    "index": k,
                    "energy_hartree": float(e),
                    "energy_ev": float(e) * HARTREE_TO_EV,
                    "excitation_ev": (float(e) - e0) * HARTREE_TO_EV,
                    "s_squared": float(s2),
                    "leading_determinants": [
                        {
                            "occupation": d.label(st.n_orb),
                            "label": d.label(st.n_orb, self.orbital_names) if self.orbital_names else None,
                            "amplitude": c,
                        }
                        for d, c in st.leading(threshold)
                    ],
                }
            )
        return {
            "n_alpha": self.n_alpha,
            "n_beta": self.n_beta,
            "ms": self.sz,
            "states": states,
        }

    def to_json(self, threshold: float = 0.05) -> str:
        return json.dumps(self.to_dict(threshold), indent=2, sort_keys=True)


def solve(
    ints: OrbitalIntegrals,
    active: ActiveSpace,
    k: int = 1,
    method: str = "dense",
    tol: float = 1e-8,
) -> Spectrum:
    """Lowest ``k`` eigenpairs of the active-space Hamiltonian in one sector.

    ``method`` is ``"dense"`` or ``"davidson"``. A Davidson run that does not
    converge falls back to dense diagonalization when the dimension is at
    most 2000.
    """
    sub = active_integrals(ints, active)
    ham = FciHamiltonian(sub, active.n_alpha, active.n_beta)
    if k < 1 or k > ham.dim:
        raise FciError(f"requested {k} states but the sector has dimension {ham.dim}")
    if method == "dense":
        w, X = np.linalg.eigh(ham.dense())
        w, X = w[:k], X[:, :k]
    elif method == "davidson":
        w, X, ok = davidson(ham.matvec, ham.diagonal(), k=k, tol=tol)
        if not ok:
            if ham.dim <= DENSE_FALLBACK_DIMENSION:
                log.warning("Davidson did not converge; falling back to dense diagonalization")
                w, X = np.linalg.eigh(ham.dense())
                w, X = w[:k], X[:, :k]
            else:
                raise FciError("Davidson did not converge")
    else:
        raise ValueError(f"unknown method {method!r}; expected 'dense' or 'davidson'")

    basis = tuple(ham.basis)
    states = []
    for j in range(X.shape[1]):
        x = X[:, j]
        # deterministic sign: largest component positive
        pivot = int(np.argmax(np.abs(x)))
        if x[pivot] < 0:
            x = -x
        states.append(CiVector(sub.n_orb, basis, x))
    s2 = np.array([s_squared(st) for st in states])
    names = sub.orbital_names
    return Spectrum(
        np.asarray(w, dtype=float),
        tuple(states),
        s2,
        (active.n_alpha - active.n_beta) / 2,
        active.n_alpha,
        active.n_beta,
        names,
    )


def sector_ground_energies(
    ints: OrbitalIntegrals, n_orb: int, n_electrons: int, ms2_values: Iterable[int]
) -> dict[int, float]:
    """Ground energy of each requested 2*M_S sector at fixed electron count."""
    out = {}
    for ms2 in ms2_values:
        na = (n_electrons + ms2) // 2
        nb = n_electrons - na
        active = ActiveSpace.full(n_orb, na, nb)
        out[ms2] = solve(ints, active, k=1).ground_energy
    return out
