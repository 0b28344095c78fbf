"""Static constrained-RPA screening of a model host and active-space downfolding.

A :class:`ModelHost` is a finite lattice model: a mean-field one-body matrix in
a site basis, its eigenpairs, aufbau occupations and a bare site-site
interaction ``v_bare``. The environment polarizability excludes transitions
between two active orbitals, and the screened interaction

    W = (1 - v chi)^-1 v

defines the effective two-body integrals of the active orbitals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import jsonschema
import numpy as np
import yaml

from .integrals import ActiveSpace, OrbitalIntegrals

DC_SCHEMES = ("none", "hf")
MEAN_FIELDS = ("tight_binding", "hartree_fock")
DEGENERACY_TOL = 1e-10
CONDITION_LIMIT = 1e12


class ScreeningError(ValueError):
    """Base class for host and screening failures."""


class HostValidationError(ScreeningError):
    """The host violates an invariant or its config is malformed."""


class IllConditionedHost(ScreeningError):
    """An occupied and an empty orbital are degenerate, so chi diverges."""


class ScreeningDivergence(ScreeningError):
    """1 - v chi is singular to working precision."""


@dataclass(frozen=True)
class ModelHost:
    """Mean-field description of a finite host.

    Attributes:
        orbitals: ``(n_sites, n_orbitals)`` column-orthonormal eigenvectors.
        energies: nondecreasing orbital energies (Hartree).
        occupations: spin-summed occupations in {0, 1, 2}, nonincreasing.
        v_bare: symmetric ``(n_sites, n_sites)`` bare interaction (Hartree).
        h_mf: mean-field one-body matrix in the site basis; defaults to
            ``orbitals @ diag(energies) @ orbitals.T``.
        mean_field: label recorded in metadata.
    """

    orbitals: np.ndarray
    energies: np.ndarray
    occupations: np.ndarray
    v_bare: np.ndarray
    h_mf: np.ndarray | None = None
    mean_field: str = "tight_binding"

    def __post_init__(self):
        C = np.array(self.orbitals, dtype=float)
        eps = np.array(self.energies, dtype=float)
        f = np.array(self.occupations, dtype=float)
        v = np.array(self.v_bare, dtype=float)
        if C.ndim != 2:
            raise HostValidationError("orbitals must be a 2-d array")
        n_sites, n_mo = C.shape
        if eps.shape != (n_mo,) or f.shape != (n_mo,):
            raise HostValidationError(f"energies/occupations must have length {n_mo}")
        if v.shape != (n_sites, n_sites):
            raise HostValidationError(f"v_bare must be {n_sites}x{n_sites}, got {v.shape}")
        if not np.allclose(C.T @ C, np.eye(n_mo), atol=1e-10, rtol=0):
            raise HostValidationError("orbitals are not column-orthonormal within 1e-10")
        if np.any(np.diff(eps) < -1e-12):
            raise HostValidationError("orbital energies must be nondecreasing")
        if not np.all(np.isin(f, (0.0, 1.0, 2.0))):
            raise HostValidationError("occupations must be 0, 1 or 2")
        if np.any(np.diff(f) > 0):
            raise HostValidationError("occupations must be nonincreasing (aufbau)")
        if np.max(np.abs(v - v.T), initial=0.0) > 1e-12:
            raise HostValidationError("v_bare is not symmetric within 1e-12")
        h = C @ np.diag(eps) @ C.T if self.h_mf is None else np.array(self.h_mf, dtype=float)
        if h.shape != (n_sites, n_sites):
            raise HostValidationError("h_mf must be n_sites x n_sites")
        for a in (C, eps, f, v, h):
            a.setflags(write=False)
        object.__setattr__(self, "orbitals", C)
        object.__setattr__(self, "energies", eps)
        object.__setattr__(self, "occupations", f)
        object.__setattr__(self, "v_bare", v)
        object.__setattr__(self, "h_mf", h)

    @property
    def n_sites(self) -> int:
        return self.orbitals.shape[0]

    @property
    def n_orbitals(self) -> int:
        return self.orbitals.shape[1]

    @property
    def n_electrons(self) -> int:
        return int(round(self.occupations.sum()))

    def density_matrix(self) -> np.ndarray:
        """Spin-summed site-basis density matrix."""
        return (self.orbitals * self.occupations) @ self.orbitals.T


@dataclass(frozen=True)
class Polarizability:
    chi: np.ndarray
    excluded: tuple[int, ...] = ()
    n_transitions: int = 0


@dataclass(frozen=True)
class ScreenedInteraction:
    w: np.ndarray
    condition_number: float = 1.0


@dataclass(frozen=True)
class Downfolding:
    """Result of the host -> active-space pipeline."""

    integrals: OrbitalIntegrals
    chi: Polarizability
    w: ScreenedInteraction
    metadata: dict = field(default_factory=dict)


def aufbau_occupations(energies: np.ndarray, n_electrons: int, tol: float = 1e-8) -> np.ndarray:
    """Fill orbitals from the bottom; a partly filled degenerate shell is shared evenly.

    Raises:
        HostValidationError: too many electrons, or an even share would not be
            0, 1 or 2 per orbital.
    """
    eps = np.asarray(energies, dtype=float)
    n = len(eps)
    if not 0 <= n_electrons <= 2 * n:
        raise HostValidationError(f"{n_electrons} electrons do not fit {n} orbitals")
    f = np.zeros(n)
    left = n_electrons
    start = 0
    while left > 0:
        stop = start + 1
        while stop < n and eps[stop] - eps[start] < tol:
            stop += 1
        size = stop - start
        if left >= 2 * size:
            f[start:stop] = 2.0
            left -= 2 * size
        else:
            if left % size:
                raise HostValidationError(
                    f"{left} electrons cannot be shared evenly over a {size}-fold degenerate shell "
                    f"at {eps[start]:.6g} Ha"
                )
            f[start:stop] = left // size
            left = 0
        start = stop
    return f


def canonical_eigh(h: np.ndarray, tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Eigenpairs with a reproducible basis inside degenerate blocks.

    Degenerate blocks are rotated to diagonalize the site-index operator, and
    each vector is signed so its largest-magnitude component is positive.
    """
    eps, C = np.linalg.eigh(h)
    n = len(eps)
    position = np.diag(np.arange(n, dtype=float))
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and eps[stop] - eps[start] < tol:
            stop += 1
        if stop - start > 1:
            block = C[:, start:stop]
            _, U = np.linalg.eigh(block.T @ position @ block)
            C[:, start:stop] = block @ U
            eps[start:stop] = eps[start:stop].mean()
        start = stop
    for k in range(n):
        p = np.argmax(np.abs(C[:, k]) - 1e-9 * np.arange(n))
        if C[p, k] < 0:
            C[:, k] = -C[:, k]
    return eps, C


def hartree_fock(
    h: np.ndarray, v: np.ndarray, n_electrons: int, max_iter: int = 500, tol: float = 1e-10, damping: float = 0.5
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Restricted mean field for ``H = sum h c+c + 1/2 sum_pq v_pq n_p n_q``.

    The Fock matrix is ``F = h + diag(v @ n) - 1/2 v * D`` with ``D`` the
    spin-summed density and ``n = diag(D)``.

    Returns:
        (energies, orbitals, fock) at self-consistency.

    Raises:
        HostValidationError: no convergence within ``max_iter`` iterations.
    """
    eps, C = canonical_eigh(h)
    D = (C * aufbau_occupations(eps, n_electrons)) @ C.T
    for _ in range(max_iter):
        F = h + np.diag(v @ np.diag(D)) - 0.5 * v * D
        eps, C = canonical_eigh(F)
        D_new = (C * aufbau_occupations(eps, n_electrons)) @ C.T
        delta = np.max(np.abs(D_new - D))
        D = (1 - damping) * D_new + damping * D
        if delta < tol:
            F = h + np.diag(v @ np.diag(D_new)) - 0.5 * v * D_new
            eps, C = canonical_eigh(F)
            return eps, C, F
    raise HostValidationError(f"Hartree-Fock did not converge in {max_iter} iterations")


def host_from_one_body(
    h: np.ndarray, v_bare: np.ndarray, n_electrons: int, mean_field: str = "tight_binding"
) -> ModelHost:
    """Diagonalize a site-basis one-body matrix and fill orbitals by aufbau."""
    h = np.asarray(h, dtype=float)
    v_bare = np.asarray(v_bare, dtype=float)
    if np.max(np.abs(h - h.T), initial=0.0) > 1e-12:
        raise HostValidationError("one-body matrix is not symmetric")
    if mean_field == "tight_binding":
        eps, C = canonical_eigh(h)
        h_mf = h
    elif mean_field == "hartree_fock":
        eps, C, h_mf = hartree_fock(h, v_bare, n_electrons)
    else:
        raise HostValidationError(f"unknown mean field {mean_field!r}; choose from {MEAN_FIELDS}")
    f = aufbau_occupations(eps, n_electrons)
    return ModelHost(C, eps, f, v_bare, h_mf=h_mf, mean_field=mean_field)


def softened_coulomb(positions: np.ndarray, u: float, a: float) -> np.ndarray:
    """``v_pq = u / sqrt(1 + (r_pq / a)^2)``; positive definite for distinct sites."""
    r = np.linalg.norm(positions[:, None, :] - positions[None, :, :], axis=-1)
    return u / np.sqrt(1.0 + (r / a) ** 2)


# -- cRPA -------------------------------------------------------------------


def static_polarizability(host: ModelHost, exclude: ActiveSpace | Sequence[int] | None = None) -> Polarizability:
    """Static independent-particle polarizability with cRPA exclusion.

    Every orbital pair with different occupations contributes

        2 (f_i - f_j) / (e_i - e_j) * rho_ij rho_ij^T,  rho_ij(p) = phi_i(p) phi_j(p)

    which is ``4 / (e_i - e_a)`` for a doubly occupied ``i`` and empty ``a``.
    Pairs with both orbitals in ``exclude`` are skipped.

    Args:
        host: the model host.
        exclude: active orbitals (host orbital indices) whose internal
            transitions are left out.

    Returns:
        A symmetric negative semi-definite ``Polarizability``.

    Raises:
        IllConditionedHost: two orbitals with different occupations are degenerate.
    """
    if exclude is None:
        excluded: tuple[int, ...] = ()
    elif isinstance(exclude, ActiveSpace):
        excluded = exclude.orbital_indices
    else:
        excluded = tuple(int(i) for i in exclude)
    for i in excluded:
        if not 0 <= i < host.n_orbitals:
            raise HostValidationError(f"excluded orbital {i} is not a host orbital")
    f, eps, C = host.occupations, host.energies, host.orbitals
    i, j = np.triu_indices(host.n_orbitals, k=1)
    keep = f[i] != f[j]
    if excluded:
        in_active = np.isin(np.arange(host.n_orbitals), excluded)
        keep &= ~(in_active[i] & in_active[j])
    i, j = i[keep], j[keep]
    gap = eps[i] - eps[j]
    bad = np.abs(gap) < DEGENERACY_TOL
    if np.any(bad):
        k = int(np.argmax(bad))
        raise IllConditionedHost(
            f"orbitals {i[k]} (f={f[i[k]]:g}) and {j[k]} (f={f[j[k]]:g}) are degenerate at "
            f"{eps[i[k]]:.6g} Ha; the static polarizability diverges"
        )
    weight = 2.0 * (f[i] - f[j]) / gap
    rho = C[:, i] * C[:, j]
    chi = (rho * weight) @ rho.T
    chi = 0.5 * (chi + chi.T)
    chi.setflags(write=False)
    return Polarizability(chi, excluded, int(len(i)))


def screened_interaction(v_bare: np.ndarray, chi: Polarizability | np.ndarray) -> ScreenedInteraction:
    """Static RPA resummation ``W = (1 - v chi)^-1 v``.

    Raises:
        ScreeningDivergence: ``1 - v chi`` has condition number above 1e12.
    """
    v = np.asarray(v_bare, dtype=float)
    c = chi.chi if isinstance(chi, Polarizability) else np.asarray(chi, dtype=float)
    if v.shape != c.shape or v.ndim != 2 or v.shape[0] != v.shape[1]:
        raise ValueError(f"shape mismatch: v {v.shape}, chi {c.shape}")
    if not c.any():
        w = v.copy()
        w.setflags(write=False)
        return ScreenedInteraction(w, 1.0)
    M = np.eye(len(v)) - v @ c
    cond = float(np.linalg.cond(M))
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise ScreeningDivergence(f"1 - v chi is singular (condition number {cond:.3g})")
    w = np.linalg.solve(M, v)
    w = 0.5 * (w + w.T)
    w.setflags(write=False)
    return ScreenedInteraction(w, cond)


def effective_integrals(
    host: ModelHost,
    active: ActiveSpace,
    w: ScreenedInteraction | np.ndarray,
    dc_scheme: str = "none",
) -> OrbitalIntegrals:
    """Active-space integrals from a screened site interaction.

    ``(ij|kl) = sum_pq phi_i(p) phi_j(p) w_pq phi_k(q) phi_l(q)`` and
    ``t = phi^T h_mf phi - DC``. With ``dc_scheme="hf"``,

        DC_ij = sum_kl [(ij|kl) - 1/2 (ik|jl)] D_lk

    where ``D`` is the mean-field density restricted to the active orbitals.
    ``e0`` is zero: energies are relative to the frozen environment.
    """
    if dc_scheme not in DC_SCHEMES:
        raise ValueError(f"unknown double-counting scheme {dc_scheme!r}; choose from {DC_SCHEMES}")
    idx = list(active.orbital_indices)
    for i in idx:
        if not 0 <= i < host.n_orbitals:
            raise HostValidationError(f"active orbital {i} is not a host orbital")
    W = w.w if isinstance(w, ScreenedInteraction) else np.asarray(w, dtype=float)
    phi = host.orbitals[:, idx]
    rho = np.einsum("pi,pj->ijp", phi, phi)
    v = np.einsum("ijp,pq,klq->ijkl", rho, W, rho)
    t = phi.T @ host.h_mf @ phi
    if dc_scheme == "hf":
        D = phi.T @ host.density_matrix() @ phi
        t = t - (np.einsum("ijkl,lk->ij", v, D) - 0.5 * np.einsum("ikjl,lk->ij", v, D))
    t = 0.5 * (t + t.T)
    return OrbitalIntegrals(
        0.0, t, v, n_elec=active.n_electrons, ms2=active.ms2,
        orbital_names=tuple(f"o{i}" for i in idx),
    )


def downfold(host: ModelHost, active: ActiveSpace, dc_scheme: str = "none", screen: bool = True) -> Downfolding:
    """Run polarizability, screening and projection; record what was done."""
    if screen:
        chi = static_polarizability(host, active)
    else:
        chi = Polarizability(np.zeros((host.n_sites, host.n_sites)), active.orbital_indices, 0)
    w = screened_interaction(host.v_bare, chi)
    ints = effective_integrals(host, active, w, dc_scheme)
    eig = np.linalg.eigvalsh(host.v_bare @ chi.chi) if screen else np.zeros(1)
    metadata = {
        "mean_field": host.mean_field,
        "dc_scheme": dc_scheme,
        "screening": "crpa_static" if screen else "none",
        "n_sites": host.n_sites,
        "n_electrons_host": host.n_electrons,
        "active_orbitals": list(active.orbital_indices),
        "active_energies_hartree": [float(host.energies[i]) for i in active.orbital_indices],
        "n_alpha": active.n_alpha,
        "n_beta": active.n_beta,
        "n_transitions": chi.n_transitions,
        "condition_number": w.condition_number,
        "spectral_radius_v_chi": float(np.max(np.abs(eig))),
        "one_body_reference": "host mean field projected on active orbitals",
    }
    return Downfolding(ints, chi, w, metadata)


# -- host config --------------------------------------------------------------

_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
HOST_SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["sites", "n_electrons", "interaction", "active"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "sites": {"type": "integer", "minimum": 1},
        "positions": {"type": "array", "items": {"type": "array", "items": {"type": "number"}, "minItems": 3, "maxItems": 3}},
        "onsite": {"type": "array", "items": {"type": "number"}},
        "hoppings": {
            "type": "array",
            "items": {"type": "array", "prefixItems": [{"type": "integer"}, {"type": "integer"}, {"type": "number"}], "minItems": 3, "maxItems": 3},
        },
        "one_body": _MATRIX,
        "interaction": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "matrix": _MATRIX,
                "softened_coulomb": {
                    "type": "object",
                    "required": ["u", "a"],
                    "additionalProperties": False,
                    "properties": {"u": {"type": "number"}, "a": {"type": "number", "exclusiveMinimum": 0}},
                },
            },
            "minProperties": 1,
            "maxProperties": 1,
        },
        "n_electrons": {"type": "integer", "minimum": 0},
        "mean_field": {"enum": list(MEAN_FIELDS)},
        "active": {
            "type": "object",
            "required": ["orbitals", "n_alpha", "n_beta"],
            "additionalProperties": False,
            "properties": {
                "orbitals": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "n_alpha": {"type": "integer", "minimum": 0},
                "n_beta": {"type": "integer", "minimum": 0},
            },
        },
        "dc": {"enum": list(DC_SCHEMES)},
    },
}


@dataclass(frozen=True)
class HostConfig:
    host: ModelHost
    active: ActiveSpace
    dc_scheme: str
    raw: dict


def parse_host_config(doc: Mapping[str, Any]) -> HostConfig:
    """Validate a host document against :data:`HOST_SCHEMA` and build the host.

    Raises:
        HostValidationError: schema or consistency failure, with the offending path.
    """
    try:
        jsonschema.validate(doc, HOST_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise HostValidationError(f"host config invalid at {where}: {exc.message}") from None
    n = doc["sites"]
    if ("one_body" in doc) == ("hoppings" in doc):
        raise HostValidationError("give exactly one of 'one_body' or 'hoppings'")
    if "one_body" in doc:
        h = np.array(doc["one_body"], dtype=float)
        if h.shape != (n, n):
            raise HostValidationError(f"one_body must be {n}x{n}")
    else:
        h = np.zeros((n, n))
        for p, q, t in doc["hoppings"]:
            if not (0 <= p < n and 0 <= q < n) or p == q:
                raise HostValidationError(f"bad hopping ({p}, {q}) for {n} sites")
            h[p, q] = h[q, p] = t
    if "onsite" in doc:
        if len(doc["onsite"]) != n:
            raise HostValidationError(f"onsite must have {n} entries")
        h = h + np.diag(doc["onsite"])
    inter = doc["interaction"]
    if "matrix" in inter:
        v = np.array(inter["matrix"], dtype=float)
        if v.shape != (n, n):
            raise HostValidationError(f"interaction matrix must be {n}x{n}")
    else:
        if "positions" not in doc or len(doc["positions"]) != n:
            raise HostValidationError(f"softened_coulomb needs {n} site positions")
        sc = inter["softened_coulomb"]
        v = softened_coulomb(np.array(doc["positions"], dtype=float), sc["u"], sc["a"])
    host = host_from_one_body(h, v, doc["n_electrons"], doc.get("mean_field", "tight_binding"))
    act = doc["active"]
    try:
        active = ActiveSpace(tuple(act["orbitals"]), act["n_alpha"], act["n_beta"])
    except ValueError as exc:
        raise HostValidationError(f"active space: {exc}") from None
    for i in active.orbital_indices:
        if i >= host.n_orbitals:
            raise HostValidationError(f"active orbital {i} is not a host orbital")
    return HostConfig(host, active, doc.get("dc", "none"), dict(doc))


def load_host_config(path: str | Path) -> HostConfig:
    """Read a YAML (or JSON) host document."""
    path = Path(path)
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise HostValidationError(f"{path}: not valid YAML/JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise HostValidationError(f"{path}: expected a mapping at top level")
    return parse_host_config(doc)
