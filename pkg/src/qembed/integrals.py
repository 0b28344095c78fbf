"""Active-space effective Hamiltonian coefficients.

Two-body integrals are stored in chemist notation, ``v[i, j, k, l] = (ij|kl)``,
so that the Hamiltonian reads

    H = e0 + sum_{ij,s} t_ij a+_is a_js
           + 1/2 sum_{ijkl,st} (ij|kl) a+_is a+_kt a_lt a_js

The physicist-ordered coefficient of ``a+_i a+_j a_k a_l`` is ``(il|jk)``; see
:func:`physicist_two_body`. All integrals are real.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

SYMMETRY_TOL = 1e-10


class IntegralError(ValueError):
    """Raised for malformed or inconsistent integral data."""


class FcidumpParseError(IntegralError):
    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class OrbitalIntegrals:
    """One- and two-body coefficients (Hartree) over ``n_orb`` spatial orbitals."""

    e0: float
    t: np.ndarray
    v: np.ndarray
    n_elec: int | None = None
    ms2: int = 0
    orbital_names: tuple[str, ...] | None = None

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        v = np.array(self.v, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] < 1:
            raise IntegralError(f"one-body block must be square with n_orb >= 1, got {t.shape}")
        n = t.shape[0]
        if v.shape != (n,) * 4:
            raise IntegralError(f"two-body block has shape {v.shape}, expected {(n,) * 4}")
        if self.orbital_names is not None and len(self.orbital_names) != n:
            raise IntegralError("orbital_names length does not match n_orb")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "e0", float(self.e0))
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)

    @property
    def n_orb(self) -> int:
        return self.t.shape[0]

    def replace(self, **changes) -> "OrbitalIntegrals":
        fields = dict(
            e0=self.e0, t=self.t, v=self.v, n_elec=self.n_elec, ms2=self.ms2,
            orbital_names=self.orbital_names,
        )
        fields.update(changes)
        return OrbitalIntegrals(**fields)

    def subset(self, indices: Sequence[int]) -> "OrbitalIntegrals":
        """Restrict to the listed orbitals (no folding of the rest)."""
        idx = np.asarray(list(indices), dtype=int)
        names = None
        if self.orbital_names is not None:
            names = tuple(self.orbital_names[i] for i in idx)
        return self.replace(
            t=self.t[np.ix_(idx, idx)],
            v=self.v[np.ix_(idx, idx, idx, idx)],
            orbital_names=names,
        )

    @classmethod
    def zeros(cls, n_orb: int, e0: float = 0.0) -> "OrbitalIntegrals":
        return cls(e0, np.zeros((n_orb, n_orb)), np.zeros((n_orb,) * 4))


@dataclass(frozen=True)
class ActiveSpace:
    """Orbitals and electron counts of a correlated subspace."""

    orbital_indices: tuple[int, ...]
    n_alpha: int
    n_beta: int
    frozen_indices: tuple[int, ...] = ()

    def __post_init__(self):
        orbs = tuple(int(i) for i in self.orbital_indices)
        frozen = tuple(int(i) for i in self.frozen_indices)
        object.__setattr__(self, "orbital_indices", orbs)
        object.__setattr__(self, "frozen_indices", frozen)
        if len(set(orbs)) != len(orbs):
            raise IntegralError(f"duplicate active orbital indices: {orbs}")
        if len(set(frozen)) != len(frozen):
            raise IntegralError(f"duplicate frozen orbital indices: {frozen}")
        if set(orbs) & set(frozen):
            raise IntegralError(f"active and frozen orbitals overlap: {sorted(set(orbs) & set(frozen))}")
        n = len(orbs)
        if not (0 <= self.n_alpha <= n and 0 <= self.n_beta <= n):
            raise IntegralError(
                f"electron counts ({self.n_alpha}, {self.n_beta}) do not fit {n} orbitals"
            )

    @property
    def n_orb(self) -> int:
        return len(self.orbital_indices)

    @property
    def n_electrons(self) -> int:
        return self.n_alpha + self.n_beta

    @property
    def ms2(self) -> int:
        return self.n_alpha - self.n_beta

    @classmethod
    def full(cls, n_orb: int, n_alpha: int, n_beta: int) -> "ActiveSpace":
        return cls(tuple(range(n_orb)), n_alpha, n_beta)


def expand_8fold(v: np.ndarray) -> np.ndarray:
    """Fill in all permutations (ij|kl)=(ji|kl)=(ij|lk)=(kl|ij)=... of sparse entries.

    Each nonzero entry is copied to its 8 symmetry partners. Two nonzero
    partners that disagree is an error.
    """
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    for i, j, k, l in zip(*np.nonzero(v)):
        val = v[i, j, k, l]
        for p in _perms8(i, j, k, l):
            if out[p] != 0.0 and abs(out[p] - val) > SYMMETRY_TOL:
                raise IntegralError(
                    f"conflicting values for symmetry-equivalent integrals {(i, j, k, l)} and {p}"
                )
            out[p] = val
    return out


def _perms8(i, j, k, l):
    return {
        (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
        (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
    }


def physicist_two_body(v: np.ndarray) -> np.ndarray:
    """Coefficients g[i,j,k,l] of a+_i a+_j a_k a_l: g_ijkl = (il|jk)."""
    return np.ascontiguousarray(np.transpose(v, (0, 2, 3, 1)))


@dataclass(frozen=True)
class SymmetryReport:
    hermiticity_deviation: float
    permutation_deviation: float
    tol: float = SYMMETRY_TOL
    passed: bool = field(init=False)

    def __post_init__(self):
        ok = self.hermiticity_deviation <= self.tol and self.permutation_deviation <= self.tol
        object.__setattr__(self, "passed", bool(ok))


def validate(ints: OrbitalIntegrals, tol: float = SYMMETRY_TOL) -> SymmetryReport:
    t, v = ints.t, ints.v
    herm = float(np.max(np.abs(t - t.T))) if t.size else 0.0
    perm = 0.0
    for axes in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
        perm = max(perm, float(np.max(np.abs(v - np.transpose(v, axes)))))
    return SymmetryReport(herm, perm, tol)


# -- FCIDUMP ---------------------------------------------------------------

_HEADER_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _parse_header(text: str) -> dict[str, list[int]]:
    body = re.sub(r"&\s*FCI", " ", text, flags=re.IGNORECASE)
    body = re.sub(r"&END|/", " ", body, flags=re.IGNORECASE)
    keys = list(_HEADER_KEY.finditer(body))
    out: dict[str, list[int]] = {}
    for m, nxt in zip(keys, keys[1:] + [None]):
        raw = body[m.end(): nxt.start() if nxt else len(body)]
        vals = [tok for tok in re.split(r"[,\s]+", raw) if tok]
        try:
            out[m.group(1).upper()] = [int(tok) for tok in vals]
        except ValueError:
            out[m.group(1).upper()] = []
    return out


def load_fcidump(path: str | Path) -> OrbitalIntegrals:
    """Read an FCIDUMP file.

    Integral lines are ``value i j k l`` with 1-based indices. ``i j 0 0`` is a
    one-body entry and ``0 0 0 0`` the scalar offset. Entries absent from the
    file are zero; listed entries are expanded to their symmetry partners.

    Raises:
        FcidumpParseError: malformed header or integral line.
        IntegralError: index out of range or non-symmetric one-body input.
    """
    path = Path(path)
    lines = path.read_text().splitlines()

    header_lines = []
    body_start = None
    for lineno, line in enumerate(lines, start=1):
        header_lines.append(line)
        stripped = line.strip().upper()
        if stripped.endswith("/") or stripped.endswith("&END") or stripped == "/":
            body_start = lineno
            break
    if body_start is None:
        raise FcidumpParseError("no header terminator ('/' or '&END') found")
    header = _parse_header(" ".join(header_lines))
    if "NORB" not in header or len(header["NORB"]) != 1:
        raise FcidumpParseError("header is missing NORB", 1)
    n = header["NORB"][0]
    if n < 1:
        raise FcidumpParseError(f"NORB must be positive, got {n}", 1)
    n_elec = header["NELEC"][0] if header.get("NELEC") else None
    ms2 = header["MS2"][0] if header.get("MS2") else 0

    e0 = 0.0
    t = np.zeros((n, n))
    v = np.zeros((n,) * 4)
    t_seen = np.zeros((n, n), dtype=bool)
    for lineno in range(body_start + 1, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FcidumpParseError(f"expected 'value i j k l', got {line!r}", lineno)
        try:
            val = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError:
            raise FcidumpParseError(f"cannot parse {line!r}", lineno) from None
        if any(idx < 0 or idx > n for idx in (i, j, k, l)):
            raise IntegralError(f"line {lineno}: index out of range 1..{n} in {line!r}")
        if i == j == k == l == 0:
            e0 = val
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                # orbital-energy lines ("e i 0 0 0") carry no Hamiltonian data
                continue
            a, b = i - 1, j - 1
            if t_seen[b, a] and abs(t[b, a] - val) > SYMMETRY_TOL:
                raise IntegralError(
                    f"line {lineno}: one-body entry ({i},{j}) = {val} differs from "
                    f"its transpose {t[b, a]} (non-Hermitian input)"
                )
            t[a, b] = t[b, a] = val
            t_seen[a, b] = t_seen[b, a] = True
        elif 0 in (i, j, k, l):
            raise FcidumpParseError(f"mixed zero/nonzero indices in {line!r}", lineno)
        else:
            p = (i - 1, j - 1, k - 1, l - 1)
            for q in _perms8(*p):
                if v[q] != 0.0 and abs(v[q] - val) > SYMMETRY_TOL:
                    raise IntegralError(
                        f"line {lineno}: two-body entry {(i, j, k, l)} = {val} conflicts "
                        f"with symmetry-equivalent value {v[q]}"
                    )
            for q in _perms8(*p):
                v[q] = val
    return OrbitalIntegrals(e0, t, v, n_elec=n_elec, ms2=ms2)


def write_fcidump(
    ints: OrbitalIntegrals,
    path: str | Path,
    n_elec: int | None = None,
    ms2: int | None = None,
    tol: float = 0.0,
) -> None:
    """Write the unique integrals (i>=j, k>=l, ij>=kl) of ``ints``.

    Values are written with ``repr`` so a read-back is exact.
    """
    n = ints.n_orb
    if n_elec is None:
        n_elec = ints.n_elec if ints.n_elec is not None else 0
    if ms2 is None:
        ms2 = ints.ms2
    out = [
        f"&FCI NORB={n},NELEC={n_elec},MS2={ms2},",
        " ORBSYM=" + ",".join("1" for _ in range(n)) + ",",
        " ISYM=1,",
        "&END",
    ]
    pairs = [(i, j) for i in range(n) for j in range(i + 1)]
    for a, (i, j) in enumerate(pairs):
        for k, l in pairs[: a + 1]:
            val = ints.v[i, j, k, l]
            if val != 0.0 and abs(val) > tol:
                out.append(f"{float(val)!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i, j in pairs:
        val = ints.t[i, j]
        if val != 0.0 and abs(val) > tol:
            out.append(f"{float(val)!r} {i + 1} {j + 1} 0 0")
    out.append(f"{float(ints.e0)!r} 0 0 0 0")
    Path(path).write_text("\n".join(out) + "\n")


# -- core folding ----------------------------------------------------------


def freeze_core(
    ints: OrbitalIntegrals,
    frozen: Sequence[int],
    active: Sequence[int] | None = None,
) -> OrbitalIntegrals:
    """Fold doubly occupied orbitals into the scalar and one-body terms.

    With ``f, g`` running over ``frozen``:

        e0' = e0 + sum_f 2 t_ff + sum_fg [2 (ff|gg) - (fg|gf)]
        t'_ij = t_ij + sum_f [2 (ij|ff) - (if|fj)]

    The two-body block is restricted to the surviving orbitals, which are
    ``active`` if given, otherwise all non-frozen orbitals in order.
    """
    n = ints.n_orb
    frozen = [int(f) for f in frozen]
    if len(set(frozen)) != len(frozen):
        raise IntegralError(f"duplicate frozen indices: {frozen}")
    for f in frozen:
        if not 0 <= f < n:
            raise IntegralError(f"frozen index {f} out of range for {n} orbitals")
    if active is None:
        keep = [i for i in range(n) if i not in frozen]
    else:
        keep = [int(i) for i in active]
        for i in keep:
            if not 0 <= i < n:
                raise IntegralError(f"active index {i} out of range for {n} orbitals")
        clash = sorted(set(keep) & set(frozen))
        if clash:
            raise IntegralError(f"frozen orbitals {clash} overlap the active orbitals")
    if not frozen:
        return ints.subset(keep) if keep != list(range(n)) else ints

    t, v = ints.t, ints.v
    fz = np.asarray(frozen)
    e0 = ints.e0 + 2.0 * np.trace(t[np.ix_(fz, fz)])
    e0 += 2.0 * np.einsum("ffgg->", v[np.ix_(fz, fz, fz, fz)])
    e0 -= np.einsum("fggf->", v[np.ix_(fz, fz, fz, fz)])
    core = 2.0 * np.einsum("ijff->ij", v[:, :, fz][:, :, :, fz]) - np.einsum(
        "iffj->ij", v[:, fz][:, :, fz]
    )
    t_new = t + core
    kp = np.asarray(keep, dtype=int)
    n_elec = ints.n_elec - 2 * len(frozen) if ints.n_elec is not None else None
    names = None
    if ints.orbital_names is not None:
        names = tuple(ints.orbital_names[i] for i in kp)
    return OrbitalIntegrals(
        e0,
        t_new[np.ix_(kp, kp)],
        v[np.ix_(kp, kp, kp, kp)],
        n_elec=n_elec,
        ms2=ints.ms2,
        orbital_names=names,
    )


def random_integrals(
    n_orb: int, rng: np.random.Generator | int | None = None, scale: float = 0.5
) -> OrbitalIntegrals:
    """Random real integrals with the full 8-fold symmetry (for tests and demos)."""
    rng = np.random.default_rng(rng)
    t = rng.normal(scale=scale, size=(n_orb, n_orb))
    t = 0.5 * (t + t.T)
    # (ij|kl) = sum_Q L_ij^Q L_kl^Q keeps v positive semidefinite as a pair matrix
    n_aux = n_orb * (n_orb + 1) // 2
    L = rng.normal(scale=scale, size=(n_aux, n_orb, n_orb))
    L = 0.5 * (L + np.transpose(L, (0, 2, 1)))
    v = np.einsum("qij,qkl->ijkl", L, L) / n_aux
    return OrbitalIntegrals(float(rng.normal(scale=scale)), t, v)



def active_integrals(ints: OrbitalIntegrals, active: ActiveSpace) -> OrbitalIntegrals:
    """Integrals over ``active.orbital_indices`` with frozen orbitals folded in."""
    if active.frozen_indices:
        return freeze_core(ints, active.frozen_indices, active.orbital_indices)
    if active.orbital_indices == tuple(range(ints.n_orb)):
        return ints
    for i in active.orbital_indices:
        if not 0 <= i < ints.n_orb:
            raise IntegralError(f"active index {i} out of range for {ints.n_orb} orbitals")
    return ints.subset(active.orbital_indices)
