"""Active-space embedding toolkit: integrals, cRPA screening, FCI and UCCSD-VQE."""

from importlib.resources import files
from pathlib import Path

from .fci import HARTREE_TO_EV, Spectrum, solve
from .integrals import ActiveSpace, OrbitalIntegrals, freeze_core, load_fcidump, validate, write_fcidump
from .qubits import PauliOperator, map_hamiltonian, taper_parity
from .screening import ModelHost, downfold, effective_integrals, screened_interaction, static_polarizability
from .vqe import build_uccsd, run_vqe

__version__ = "0.1.0"


def data_path(name: str) -> Path:
    """Path of a bundled data file (``nv_like.fcidump``, ``host8.yaml``, run configs)."""
    path = Path(str(files(__name__) / "data" / name))
    if not path.is_file():
        raise FileNotFoundError(f"no bundled data file {name!r}")
    return path


__all__ = [
    "HARTREE_TO_EV", "ActiveSpace", "ModelHost", "OrbitalIntegrals", "PauliOperator", "Spectrum",
    "build_uccsd", "data_path", "downfold", "effective_integrals", "freeze_core", "load_fcidump",
    "map_hamiltonian", "run_vqe", "screened_interaction", "solve", "static_polarizability",
    "taper_parity", "validate", "write_fcidump",
]
