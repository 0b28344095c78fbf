"""VQE loop: ansatz + backend + optimizer, with a per-evaluation trace."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..fci import HARTREE_TO_EV
from ..qubits.pauli import PauliOperator
from .ansatz import UccsdAnsatz, apply_ansatz
from .optimize import minimize
from .sampling import sample_expectation
from .statevector import expectation


@dataclass(frozen=True)
class Backend:
    """``exact`` statevector expectation or ``shots`` sampling.

    ``depolarizing`` applies E -> (1 - p) E + p tr(H)/2^n to every evaluation.
    """

    kind: str = "exact"
    shots: int | None = None
    seed: int | None = None
    depolarizing: float = 0.0

    def __post_init__(self):
        if self.kind not in ("exact", "shots"):
            raise ValueError(f"unknown backend {self.kind!r}")
        if self.kind == "shots" and (self.shots is None or self.shots < 1):
            raise ValueError("shots backend needs shots >= 1")
        if not 0.0 <= self.depolarizing <= 1.0:
            raise ValueError("depolarizing probability must lie in [0, 1]")

    @classmethod
    def exact(cls, depolarizing: float = 0.0) -> "Backend":
        return cls("exact", depolarizing=depolarizing)

    @classmethod
    def sampled(cls, shots: int, seed: int = 0, depolarizing: float = 0.0) -> "Backend":
        return cls("shots", shots, seed, depolarizing)

    def describe(self) -> dict:
        out = {"kind": self.kind, "depolarizing": self.depolarizing}
        if self.kind == "shots":
            out.update(shots=self.shots, seed=self.seed)
        return out


@dataclass(frozen=True)
class VqeRecord:
    iteration: int
    params: tuple[float, ...]
    energy: float
    best_energy: float
    exact_energy: float
    stderr: float = 0.0
    shots: int = 0


@dataclass
class VqeTrace:
    records: list[VqeRecord]
    final_params: np.ndarray
    final_energy: float
    final_stderr: float
    final_exact_energy: float
    reference_energy: float
    converged: bool
    exhausted: bool
    backend: Backend
    algorithm: str
    n_parameters: int
    tol: float
    x0: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def energies(self) -> np.ndarray:
        return np.array([r.energy for r in self.records])

    @property
    def gap(self) -> float:
        return self.final_energy - self.reference_energy

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        shots = self.backend.kind == "shots"
        header = ["iteration", "energy_hartree", "energy_ev", "best_energy_hartree"]
        if shots:
            header.append("stderr_hartree")
        w.writerow(header)
        for r in self.records:
            row = [r.iteration, repr(r.energy), repr(r.energy * HARTREE_TO_EV), repr(r.best_energy)]
            if shots:
                row.append(repr(r.stderr))
            w.writerow(row)
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "final_energy_hartree": self.final_energy,
            "final_energy_ev": self.final_energy * HARTREE_TO_EV,
            "final_stderr_hartree": self.final_stderr,
            "final_exact_energy_hartree": self.final_exact_energy,
            "reference_energy_hartree": self.reference_energy,
            "gap_hartree": self.gap,
            "gap_mev": self.gap * HARTREE_TO_EV * 1000.0,
            "converged": self.converged,
            "max_evaluations_exhausted": self.exhausted,
            "n_evaluations": len(self.records),
            "n_parameters": self.n_parameters,
            "parameters": [float(x) for x in self.final_params],
            "initial_parameters": [float(x) for x in self.x0],
            "algorithm": self.algorithm,
            "backend": self.backend.describe(),
            "tolerance_hartree": self.tol,
        }


def _initial_point(x0, n: int, seed: int | None) -> np.ndarray:
    if isinstance(x0, str):
        if x0 == "zero":
            return np.zeros(n)
        if x0 == "random":
            return np.random.default_rng(seed).uniform(-np.pi, np.pi, n)
        raise ValueError(f"unknown initial point {x0!r}; use 'zero', 'random' or an array")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (n,):
        raise ValueError(f"initial point has shape {x0.shape}, expected ({n},)")
    return x0


def run_vqe(
    ham: PauliOperator,
    ansatz: UccsdAnsatz,
    backend: Backend | str = "exact",
    algorithm: str = "cobyla",
    x0: str | Sequence[float] = "zero",
    seed: int | None = None,
    tol: float = 1e-6,
    max_evaluations: int = 500,
    reference_energy: float | None = None,
    rhobeg: float = 0.5,
) -> VqeTrace:
    """Minimize <psi(theta)|H|psi(theta)> over the ansatz parameters.

    ``reference_energy`` defaults to the lowest eigenvalue of ``ham``. An
    exact-backend run is flagged converged when its final energy is within
    ``tol`` of it; a shots run when the final estimate is within five
    standard errors.
    """
    if isinstance(backend, str):
        backend = Backend(backend)
    if ham.n_qubits != ansatz.n_qubits:
        raise ValueError(f"Hamiltonian on {ham.n_qubits} qubits, ansatz on {ansatz.n_qubits}")
    if reference_energy is None:
        reference_energy = float(np.linalg.eigvalsh(ham.to_dense())[0])
    p = backend.depolarizing
    trace_mixed = float(ham.identity_coefficient.real)
    x_init = _initial_point(x0, ansatz.n_parameters, seed)
    shot_rng = np.random.default_rng(backend.seed)
    records: list[VqeRecord] = []

    def evaluate(x):
        psi = apply_ansatz(ansatz, x)
        exact = expectation(psi, ham)
        if backend.kind == "exact":
            value, err, shots = exact, 0.0, 0
        else:
            est = sample_expectation(psi, ham, backend.shots, int(shot_rng.integers(2**63)))
            value, err, shots = est.value, est.stderr, backend.shots
        value = (1 - p) * value + p * trace_mixed
        return value, (1 - p) * err, shots, exact

    def objective(x):
        value, err, shots, exact = evaluate(x)
        best = min(value, records[-1].best_energy) if records else value
        records.append(VqeRecord(len(records), tuple(float(v) for v in x), value, best, exact, err, shots))
        return value

    res = minimize(objective, x_init, algorithm, max_evaluations=max_evaluations, rhobeg=rhobeg, rhoend=tol)
    x_best = res.x
    if backend.kind == "exact":
        final, final_err, _, final_exact = evaluate(x_best)
        converged = abs(final - reference_energy) < tol
    else:
        # fresh shots at the chosen point; the minimum over noisy evaluations is biased low
        final, final_err, _, final_exact = evaluate(x_best)
        converged = abs(final - reference_energy) <= max(5 * final_err, tol)
    return VqeTrace(
        records=records,
        final_params=np.asarray(x_best),
        final_energy=float(final),
        final_stderr=float(final_err),
        final_exact_energy=float(final_exact),
        reference_energy=float(reference_energy),
        converged=bool(converged),
        exhausted=res.exhausted,
        backend=backend,
        algorithm=algorithm,
        n_parameters=ansatz.n_parameters,
        tol=tol,
        x0=x_init,
    )
