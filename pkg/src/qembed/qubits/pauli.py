"""Pauli-string operators in symplectic (x-mask, z-mask) form.

A string with masks ``(x, z)`` is the tensor product of single-qubit factors
I (0,0), X (1,0), Z (0,1), Y (1,1); equivalently ``i^{|x&z|} X^x Z^z``.
Bit ``k`` of a mask refers to qubit ``k``. In labels, character ``k`` is
qubit ``k`` (``"XIZ"`` is X on qubit 0, Z on qubit 2), and in dense
matrices qubit 0 is the most significant tensor factor.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Mapping

import numpy as np

DROP_TOL = 1e-12
MAX_DENSE_QUBITS = 14

_CHAR = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
_BITS = {v: k for k, v in _CHAR.items()}


class QubitCountMismatch(ValueError):
    pass


def _popcount(x: int) -> int:
    return bin(x).count("1")


def multiply_strings(x1: int, z1: int, x2: int, z2: int) -> tuple[int, int, int]:
    """Product of two Pauli strings as (x, z, power of i mod 4)."""
    x3, z3 = x1 ^ x2, z1 ^ z2
    k = _popcount(x1 & z1) + _popcount(x2 & z2) + 2 * _popcount(z1 & x2) - _popcount(x3 & z3)
    return x3, z3, k % 4


_IPOW = (1, 1j, -1, -1j)


def label_to_masks(label: str) -> tuple[int, int]:
    x = z = 0
    for k, ch in enumerate(label.upper()):
        try:
            bx, bz = _BITS[ch]
        except KeyError:
            raise ValueError(f"invalid Pauli character {ch!r} in {label!r}") from None
        x |= bx << k
        z |= bz << k
    return x, z


def masks_to_label(x: int, z: int, n_qubits: int) -> str:
    return "".join(_CHAR[(x >> k & 1, z >> k & 1)] for k in range(n_qubits))


def _reverse_bits(mask: int, n: int) -> int:
    out = 0
    for k in range(n):
        if mask >> k & 1:
            out |= 1 << (n - 1 - k)
    return out


def _parity(arr: np.ndarray) -> np.ndarray:
    a = arr.copy()
    shift = 32
    while shift:
        a ^= a >> shift
        shift >>= 1
    return a & 1


class PauliOperator:
    """Weighted sum of Pauli strings on ``n_qubits`` qubits.

    Instances are treated as immutable; arithmetic returns new operators.
    """

    __slots__ = ("n_qubits", "_terms")

    def __init__(self, n_qubits: int, terms: Mapping[tuple[int, int], complex] | None = None):
        if n_qubits < 0:
            raise ValueError("n_qubits must be non-negative")
        self.n_qubits = int(n_qubits)
        self._terms: dict[tuple[int, int], complex] = {}
        limit = 1 << self.n_qubits
        for (x, z), c in (terms or {}).items():
            if x >= limit or z >= limit or x < 0 or z < 0:
                raise ValueError(f"mask ({x}, {z}) does not fit {n_qubits} qubits")
            self._terms[(int(x), int(z))] = self._terms.get((int(x), int(z)), 0) + complex(c)

    # construction -------------------------------------------------------

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliOperator":
        return cls(n_qubits, {(0, 0): coeff})

    @classmethod
    def from_label(cls, label: str, coeff: complex = 1.0) -> "PauliOperator":
        return cls(len(label), {label_to_masks(label): coeff})

    @classmethod
    def from_list(cls, items: Iterable[tuple[str, complex]], n_qubits: int | None = None) -> "PauliOperator":
        items = list(items)
        if n_qubits is None:
            if not items:
                raise ValueError("n_qubits required for an empty list")
            n_qubits = len(items[0][0])
        op = cls(n_qubits)
        for label, c in items:
            if len(label) != n_qubits:
                raise QubitCountMismatch(f"label {label!r} does not have {n_qubits} qubits")
            key = label_to_masks(label)
            op._terms[key] = op._terms.get(key, 0) + complex(c)
        return op

    @classmethod
    def single(cls, n_qubits: int, qubit: int, pauli: str, coeff: complex = 1.0) -> "PauliOperator":
        bx, bz = _BITS[pauli.upper()]
        return cls(n_qubits, {(bx << qubit, bz << qubit): coeff})

    # access -------------------------------------------------------------

    @property
    def terms(self) -> dict[tuple[int, int], complex]:
        return dict(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[str, complex]]:
        for (x, z), c in sorted(self._terms.items()):
            yield masks_to_label(x, z, self.n_qubits), c

    def coefficient(self, label: str) -> complex:
        return self._terms.get(label_to_masks(label), 0.0)

    @property
    def identity_coefficient(self) -> complex:
        return self._terms.get((0, 0), 0.0)

    def __repr__(self) -> str:
        body = " + ".join(f"({c:.6g}) {lab}" for lab, c in self) or "0"
        return f"PauliOperator({self.n_qubits}: {body})"

    # algebra ------------------------------------------------------------

    def _check(self, other: "PauliOperator") -> None:
        if other.n_qubits != self.n_qubits:
            raise QubitCountMismatch(f"{self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            other = PauliOperator.identity(self.n_qubits, other)
        if not isinstance(other, PauliOperator):
            return NotImplemented
        self._check(other)
        out = dict(self._terms)
        for k, c in other._terms.items():
            out[k] = out.get(k, 0) + c
        return PauliOperator._raw(self.n_qubits, out)

    __radd__ = __add__

    def __neg__(self):
        return PauliOperator._raw(self.n_qubits, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return PauliOperator._raw(self.n_qubits, {k: c * other for k, c in self._terms.items()})
        if not isinstance(other, PauliOperator):
            return NotImplemented
        self._check(other)
        out: dict[tuple[int, int], complex] = {}
        for (x1, z1), c1 in self._terms.items():
            for (x2, z2), c2 in other._terms.items():
                x3, z3, k = multiply_strings(x1, z1, x2, z2)
                out[(x3, z3)] = out.get((x3, z3), 0) + _IPOW[k] * c1 * c2
        return PauliOperator._raw(self.n_qubits, out)

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self * other
        return NotImplemented

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    @classmethod
    def _raw(cls, n_qubits: int, terms: dict) -> "PauliOperator":
        op = cls.__new__(cls)
        op.n_qubits = n_qubits
        # exact cancellations vanish; near-zero residues wait for simplify()
        op._terms = {k: c for k, c in terms.items() if c != 0}
        return op

    def simplify(self, tol: float = DROP_TOL) -> "PauliOperator":
        """Drop terms with |c| < tol and imaginary/real parts below tol."""
        out = {}
        for k, c in self._terms.items():
            re = c.real if abs(c.real) >= tol else 0.0
            im = c.imag if abs(c.imag) >= tol else 0.0
            if re or im:
                out[k] = complex(re, im)
        return PauliOperator._raw(self.n_qubits, out)

    def adjoint(self) -> "PauliOperator":
        return PauliOperator._raw(self.n_qubits, {k: np.conj(c) for k, c in self._terms.items()})

    def is_hermitian(self, tol: float = DROP_TOL) -> bool:
        return all(abs(c.imag) < tol for c in self.simplify(tol)._terms.values())

    def max_imag(self) -> float:
        return max((abs(c.imag) for c in self._terms.values()), default=0.0)

    def real(self) -> "PauliOperator":
        return PauliOperator._raw(self.n_qubits, {k: complex(c.real) for k, c in self._terms.items()})

    def commutes_with(self, other: "PauliOperator", tol: float = DROP_TOL) -> bool:
        comm = (self * other - other * self).simplify(tol)
        return len(comm) == 0

    def equals(self, other: "PauliOperator", tol: float = 1e-10) -> bool:
        self._check(other)
        diff = (self - other).simplify(tol)
        return len(diff) == 0

    def norm1(self) -> float:
        return float(sum(abs(c) for c in self._terms.values()))

    # numerics -----------------------------------------------------------

    def to_dense(self) -> np.ndarray:
        n = self.n_qubits
        if n > MAX_DENSE_QUBITS:
            raise ValueError(f"dense matrices are limited to {MAX_DENSE_QUBITS} qubits, got {n}")
        dim = 1 << n
        idx = np.arange(dim, dtype=np.int64)
        M = np.zeros((dim, dim), dtype=complex)
        for (x, z), c in self._terms.items():
            xi, zi = _reverse_bits(x, n), _reverse_bits(z, n)
            sign = 1 - 2 * _parity(idx & zi)
            M[idx ^ xi, idx] += c * _IPOW[_popcount(x & z) % 4] * sign
        return M

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Matrix-free action on a statevector of length 2**n_qubits."""
        n = self.n_qubits
        psi = np.asarray(psi)
        if psi.shape[0] != 1 << n:
            raise QubitCountMismatch(f"statevector of length {psi.shape[0]} for {n} qubits")
        idx = np.arange(1 << n, dtype=np.int64)
        out = np.zeros(psi.shape, dtype=complex)
        for (x, z), c in self._terms.items():
            xi, zi = _reverse_bits(x, n), _reverse_bits(z, n)
            sign = 1 - 2 * _parity(idx & zi)
            out[idx ^ xi] += (c * _IPOW[_popcount(x & z) % 4]) * sign * psi
        return out

    # text form ----------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for label, c in self:
            coeff = repr(c.real) if c.imag == 0 else repr(c)
            lines.append(f"{coeff} {label}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "PauliOperator":
        items = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                coeff, label = line.split()
                items.append((label, complex(coeff)))
            except ValueError:
                raise ValueError(f"line {lineno}: expected 'coefficient label', got {line!r}") from None
        return cls.from_list(items, n_qubits)


def add(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    return a + b


def multiply(a: PauliOperator, b: PauliOperator) -> PauliOperator:
    return a * b


def simplify(a: PauliOperator, tol: float = DROP_TOL) -> PauliOperator:
    return a.simplify(tol)


def to_dense(op: PauliOperator) -> np.ndarray:
    return op.to_dense()
