"""Unitary coupled-cluster singles and doubles on top of a reference determinant."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..fci import Determinant
from ..integrals import ActiveSpace
from ..qubits.mapping import encode_occupations, map_fermion_term
from ..qubits.pauli import PauliOperator
from ..qubits.tapering import (
    parity_eigenvalues,
    sector_parities,
    taper,
    tapered_bits,
    z_symmetries,
)
from .statevector import apply_rotation, basis_state

SCREENING_LEVELS = ("off", "spin", "symmetry")


class EmptyAnsatzError(ValueError):
    """No excitation generator survived screening."""


@dataclass(frozen=True)
class ReferenceState:
    """A determinant expressed in the qubit basis actually simulated.

    ``bits`` are post-encoding (and post-tapering) qubit values;
    ``occupations`` are the underlying spin-orbital occupations, alpha block first.
    """

    bits: tuple[int, ...]
    occupations: tuple[int, ...]
    encoding: str
    tapered: bool

    @property
    def n_qubits(self) -> int:
        return len(self.bits)

    @property
    def n_orb(self) -> int:
        return len(self.occupations) // 2

    def statevector(self) -> np.ndarray:
        return basis_state(self.bits)

    @classmethod
    def from_occupations(
        cls, alpha: Sequence[int], beta: Sequence[int], n_orb: int, encoding: str = "parity", taper: bool = False
    ) -> "ReferenceState":
        """Build from occupied spatial orbital lists per spin."""
        occ = [0] * (2 * n_orb)
        for i in alpha:
            occ[i] = 1
        for i in beta:
            occ[n_orb + i] = 1
        bits = encode_occupations(occ, encoding)
        if taper:
            if encoding != "parity":
                raise ValueError("two-qubit tapering requires the parity encoding")
            bits = tapered_bits(bits, n_orb)
        return cls(tuple(int(b) for b in bits), tuple(occ), encoding, taper)

    @classmethod
    def from_determinant(cls, det: Determinant, n_orb: int, encoding: str = "parity", taper: bool = False):
        alpha = [i for i in range(n_orb) if det.alpha >> i & 1]
        beta = [i for i in range(n_orb) if det.beta >> i & 1]
        return cls.from_occupations(alpha, beta, n_orb, encoding, taper)

    @property
    def n_alpha(self) -> int:
        return sum(self.occupations[: self.n_orb])

    @property
    def n_beta(self) -> int:
        return sum(self.occupations[self.n_orb:])


@dataclass(frozen=True)
class Excitation:
    """Spin-orbital excitation ``occupied -> virtual`` (indices alpha block first)."""

    occupied: tuple[int, ...]
    virtual: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.occupied)

    def delta_ms2(self, n_orb: int) -> int:
        def twice_sz(P):
            return 1 if P < n_orb else -1

        return sum(twice_sz(a) for a in self.virtual) - sum(twice_sz(i) for i in self.occupied)

    def fermion_term(self) -> list[tuple[int, bool]]:
        """T as [(mode, is_creation)]: a+_a (a+_b) (a_j) a_i."""
        creators = [(a, True) for a in self.virtual]
        annihilators = [(i, False) for i in reversed(self.occupied)]
        return creators + annihilators

    def label(self, n_orb: int, names: Sequence[str] | None = None) -> str:
        def name(P):
            spatial = names[P % n_orb] if names else str(P % n_orb)
            return spatial + ("~" if P >= n_orb else "")

        return ",".join(name(i) for i in self.occupied) + "->" + ",".join(name(a) for a in self.virtual)


@dataclass(frozen=True)
class UccsdAnsatz:
    """Ordered anti-Hermitian generators, one parameter each."""

    reference: ReferenceState
    excitations: tuple[Excitation, ...]
    generators: tuple[PauliOperator, ...]
    screening: str
    dropped: dict = field(default_factory=dict)

    @property
    def n_parameters(self) -> int:
        return len(self.generators)

    @property
    def n_qubits(self) -> int:
        return self.reference.n_qubits

    def convention(self) -> str:
        return (
            "spin-orbital UCCSD: singles i->a and doubles (i<j)->(a<b) from occupied to "
            f"virtual spin-orbitals of the reference; screening={self.screening}; "
            "U(theta) = prod_k exp(theta_k G_k) in list order (last generator acts first)"
        )


def enumerate_excitations(occupations: Sequence[int]) -> list[Excitation]:
    """Singles then doubles, each lexicographic in (occupied, virtual)."""
    occ = [P for P, o in enumerate(occupations) if o]
    virt = [P for P, o in enumerate(occupations) if not o]
    singles = [Excitation((i,), (a,)) for i in occ for a in virt]
    doubles = [
        Excitation(ij, ab)
        for ij in itertools.combinations(occ, 2)
        for ab in itertools.combinations(virt, 2)
    ]
    return singles + doubles


def build_uccsd(
    reference: ReferenceState,
    active: ActiveSpace | None = None,
    screening: str = "spin",
    hamiltonian: PauliOperator | None = None,
) -> UccsdAnsatz:
    """Excitation generators G = T - T+ mapped (and tapered) like the reference.

    Screening levels:
        ``off``: keep every occupied -> virtual excitation. A tapered reference
            still loses the S_z-changing ones, which leave the tapered sector.
        ``spin``: drop excitations that change S_z, and generators that act
            trivially (vanish after mapping/tapering or annihilate the reference).
        ``symmetry``: as ``spin``, and also drop generators that do not commute
            with the Z-type symmetries of ``hamiltonian`` (they would lead out of the
            reference's symmetry sector).

    Raises:
        EmptyAnsatzError: nothing survived.
    """
    if screening == "on":
        screening = "symmetry" if hamiltonian is not None else "spin"
    if screening not in SCREENING_LEVELS:
        raise ValueError(f"unknown screening {screening!r}; choose from {SCREENING_LEVELS}")
    if screening == "symmetry" and hamiltonian is None:
        raise ValueError("symmetry screening needs the qubit Hamiltonian")
    n_orb = reference.n_orb
    if active is not None and (active.n_orb, active.n_alpha, active.n_beta) != (
        n_orb, reference.n_alpha, reference.n_beta
    ):
        raise ValueError("reference determinant is not in the active-space sector")
    modes = 2 * n_orb
    ref_psi = reference.statevector()
    symmetries = z_symmetries(hamiltonian) if screening == "symmetry" else []

    kept_exc, kept_gen = [], []
    dropped: dict[str, list[str]] = {"spin": [], "trivial": [], "symmetry": []}
    for exc in enumerate_excitations(reference.occupations):
        if (screening != "off" or reference.tapered) and exc.delta_ms2(n_orb) != 0:
            dropped["spin"].append(exc.label(n_orb))
            continue
        T = map_fermion_term(exc.fermion_term(), modes, reference.encoding)
        G = (T - T.adjoint()).simplify()
        if reference.tapered:
            ev = parity_eigenvalues(n_orb, *sector_parities(reference.n_alpha, reference.n_beta))
            G = taper(G, ev)
        if screening != "off":
            if len(G) == 0 or np.linalg.norm(G.apply(ref_psi)) < 1e-12:
                dropped["trivial"].append(exc.label(n_orb))
                continue
            if any(not _commutes_with_z(G, s) for s in symmetries):
                dropped["symmetry"].append(exc.label(n_orb))
                continue
        kept_exc.append(exc)
        kept_gen.append(G)
    if not kept_gen:
        raise EmptyAnsatzError("no excitation generator survived screening")
    return UccsdAnsatz(reference, tuple(kept_exc), tuple(kept_gen), screening, dropped)


def _commutes_with_z(op: PauliOperator, zmask: int) -> bool:
    return all(bin(x & zmask).count("1") % 2 == 0 for (x, _z) in op.terms)


def apply_ansatz(ansatz: UccsdAnsatz, params: Sequence[float]) -> np.ndarray:
    """exp(theta_1 G_1) ... exp(theta_K G_K) |reference>."""
    params = np.asarray(params, dtype=float)
    if params.shape != (ansatz.n_parameters,):
        raise ValueError(f"expected {ansatz.n_parameters} parameters, got {params.shape}")
    psi = ansatz.reference.statevector()
    for G, theta in zip(reversed(ansatz.generators), reversed(params)):
        if theta != 0.0:
            psi = apply_rotation(psi, G, theta)
    return psi
