"""Derivative-free minimizers with an evaluation history."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

ALGORITHMS = ("cobyla", "nelder_mead")


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    nfev: int
    exhausted: bool
    history: list[tuple[np.ndarray, float]] = field(default_factory=list)
    message: str = ""

    @property
    def best_so_far(self) -> np.ndarray:
        return np.minimum.accumulate([f for _, f in self.history]) if self.history else np.array([])


def minimize(
    objective: Callable[[np.ndarray], float],
    x0,
    algorithm: str = "cobyla",
    max_evaluations: int = 500,
    rhobeg: float = 0.5,
    rhoend: float = 1e-6,
    fatol: float = 1e-10,
) -> MinimizeResult:
    """Minimize ``objective`` from ``x0`` and keep every evaluation.

    ``cobyla`` stops once the trust radius falls below ``rhoend``;
    ``nelder_mead`` once the simplex is smaller than ``rhoend`` in x and
    ``fatol`` in f. Both stop after ``max_evaluations`` evaluations, in which
    case ``exhausted`` is set and the best point so far is still returned.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    history: list[tuple[np.ndarray, float]] = []

    def wrapped(x):
        x = np.array(x, dtype=float)
        if len(history) >= max_evaluations:
            # never evaluate past the budget, even if the backend asks
            return history[-1][1]
        f = float(objective(x))
        history.append((x, f))
        return f

    if algorithm == "cobyla":
        res = optimize.minimize(
            wrapped, x0, method="COBYLA",
            options=dict(rhobeg=rhobeg, tol=rhoend, maxiter=max_evaluations),
        )
    elif algorithm == "nelder_mead":
        simplex = np.vstack([x0] + [x0 + rhobeg * e for e in np.eye(len(x0))])
        res = optimize.minimize(
            wrapped, x0, method="Nelder-Mead",
            options=dict(initial_simplex=simplex, xatol=rhoend, fatol=fatol, maxfev=max_evaluations),
        )
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")

    if not history:
        raise RuntimeError("optimizer made no evaluations")
    best = int(np.argmin([f for _, f in history]))
    return MinimizeResult(
        x=history[best][0],
        fun=history[best][1],
        nfev=len(history),
        exhausted=len(history) >= max_evaluations,
        history=history,
        message=str(res.message),
    )
