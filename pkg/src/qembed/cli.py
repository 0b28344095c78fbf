"""Command-line front end: screen, fci, map, vqe and report.

Each command reads a YAML run config (flags override its fields), validates
it, computes everything in memory and only then writes its outputs, so a
failed run leaves no partial files behind. Outputs contain no timestamps and
are byte-identical for identical inputs and seeds.

Exit codes:
    0  success
    2  invalid config or flags
    3  unreadable or invalid input data
    4  convergence failure (VQE not within tolerance, eigensolver failure)
    1  anything else
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import jsonschema
import numpy as np
import yaml

from . import fci as fci_mod
from .fci import HARTREE_TO_EV
from .integrals import (
    ActiveSpace,
    IntegralError,
    OrbitalIntegrals,
    active_integrals,
    load_fcidump,
    write_fcidump,
)
from .qubits import ENCODINGS, map_hamiltonian, sector_parities, taper_parity
from .screening import DC_SCHEMES, ScreeningError, downfold, load_host_config
from .vqe import Backend, ReferenceState, build_uccsd, run_vqe
from .vqe.ansatz import SCREENING_LEVELS, EmptyAnsatzError
from .vqe.optimize import ALGORITHMS

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_CONVERGENCE = 4


class ConfigError(Exception):
    pass


class InputError(Exception):
    pass


class ConvergenceError(Exception):
    pass


_INDEX_LIST = {"type": "array", "items": {"type": "integer", "minimum": 0}}
CONFIG_SCHEMA: dict[str, Any] = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "input": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "fcidump": {"type": "string"},
                "host": {"type": "string"},
                "orbital_names": {"type": "array", "items": {"type": "string"}},
            },
        },
        "active": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "orbitals": _INDEX_LIST,
                "frozen": _INDEX_LIST,
                "n_alpha": {"type": "integer", "minimum": 0},
                "n_beta": {"type": "integer", "minimum": 0},
            },
        },
        "dc": {"enum": list(DC_SCHEMES)},
        "screen": {"type": "boolean"},
        "encoding": {"enum": list(ENCODINGS)},
        "taper": {"type": "boolean"},
        "fci": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": {"type": "integer", "minimum": 1},
                "method": {"enum": ["dense", "davidson"]},
            },
        },
        "ansatz": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "reference": {
                    "type": "object",
                    "required": ["alpha", "beta"],
                    "additionalProperties": False,
                    "properties": {"alpha": _INDEX_LIST, "beta": _INDEX_LIST},
                },
                "screening": {"enum": list(SCREENING_LEVELS)},
            },
        },
        "optimizer": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "algorithm": {"enum": list(ALGORITHMS)},
                "max_evaluations": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "rhobeg": {"type": "number", "exclusiveMinimum": 0},
                "x0": {"enum": ["zero", "random"]},
            },
        },
        "backend": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["exact", "shots"]},
                "shots": {"type": "integer", "minimum": 1},
                "depolarizing": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
    },
}

DEFAULTS: dict[str, Any] = {
    "input": {},
    "active": {},
    "screen": True,
    "encoding": "parity",
    "taper": True,
    "fci": {"k": 4, "method": "dense"},
    "ansatz": {"screening": "spin"},
    "optimizer": {"algorithm": "cobyla", "max_evaluations": 500, "tol": 1e-6, "rhobeg": 0.5, "x0": "zero"},
    "backend": {"kind": "exact", "shots": 10000, "depolarizing": 0.0},
    "seed": 0,
    "output": "qembed_out",
}


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _parse_orbitals(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()] if text.strip() else []


def _flag_overrides(args: argparse.Namespace) -> dict:
    over: dict[str, Any] = {}

    def put(path: str, value):
        if value is None:
            return
        node = over
        *head, last = path.split(".")
        for key in head:
            node = node.setdefault(key, {})
        node[last] = value

    cwd = Path.cwd()
    if getattr(args, "fcidump", None):
        put("input.fcidump", str((cwd / args.fcidump).resolve()))
    if getattr(args, "host", None):
        put("input.host", str((cwd / args.host).resolve()))
    put("seed", getattr(args, "seed", None))
    put("encoding", getattr(args, "encoding", None))
    put("dc", getattr(args, "dc", None))
    put("fci.k", getattr(args, "k", None))
    put("fci.method", getattr(args, "method", None))
    put("ansatz.screening", getattr(args, "screening", None))
    put("optimizer.algorithm", getattr(args, "algorithm", None))
    put("optimizer.max_evaluations", getattr(args, "max_evaluations", None))
    put("optimizer.tol", getattr(args, "tol", None))
    put("optimizer.x0", getattr(args, "x0", None))
    put("backend.depolarizing", getattr(args, "depolarizing", None))
    if getattr(args, "shots", None) is not None:
        put("backend.kind", "shots" if args.shots > 0 else "exact")
        if args.shots > 0:
            put("backend.shots", args.shots)
    if getattr(args, "no_taper", False):
        put("taper", False)
    if getattr(args, "no_screen", False):
        put("screen", False)
    if getattr(args, "reference", None):
        try:
            a, b = args.reference.split(":")
            put("ansatz.reference", {"alpha": _parse_orbitals(a), "beta": _parse_orbitals(b)})
        except ValueError:
            raise ConfigError(f"--reference expects ALPHA:BETA orbital lists, got {args.reference!r}") from None
    if getattr(args, "output", None):
        put("output", str((cwd / args.output).resolve()))
    return over


def load_config(args: argparse.Namespace) -> dict:
    """Config file (if any) merged over defaults, then flags; paths made absolute.

    Input paths in a config are relative to the config file; ``output`` is
    relative to the working directory.
    """
    doc: dict = {}
    base_dir = Path.cwd()
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise InputError(f"config file not found: {path}")
        try:
            doc = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: expected a mapping at top level")
        base_dir = path.resolve().parent
    for key in ("fcidump", "host"):
        if key in doc.get("input", {}) and isinstance(doc["input"][key], str):
            doc["input"][key] = str((base_dir / doc["input"][key]).resolve())
    # outputs land under the working directory, not next to the config
    if isinstance(doc.get("output"), str):
        doc["output"] = str((Path.cwd() / doc["output"]).resolve())
    cfg = _merge(doc, _flag_overrides(args))
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    cfg = _merge(DEFAULTS, cfg)
    if "output" not in doc and not getattr(args, "output", None):
        cfg["output"] = str((Path.cwd() / DEFAULTS["output"]).resolve())
    inp = cfg["input"]
    if ("fcidump" in inp) == ("host" in inp):
        raise ConfigError("give exactly one input: input.fcidump or input.host (or --fcidump/--host)")
    for key in ("fcidump", "host"):
        if key in inp and not Path(inp[key]).is_file():
            raise InputError(f"{key} file not found: {inp[key]}")
    return cfg


# -- pipeline stages ----------------------------------------------------------


@dataclass
class Problem:
    ints: OrbitalIntegrals
    n_alpha: int
    n_beta: int
    names: tuple[str, ...]
    provenance: dict


def build_problem(cfg: dict) -> Problem:
    """Integrals over the active orbitals plus the electron sector."""
    inp, act = cfg["input"], cfg["active"]
    if "host" in inp:
        hc = load_host_config(inp["host"])
        dc = cfg.setdefault("dc", hc.dc_scheme)
        result = downfold(hc.host, hc.active, dc, screen=cfg["screen"])
        ints = result.integrals
        na, nb = hc.active.n_alpha, hc.active.n_beta
        provenance = {"source": "host", "host": Path(inp["host"]).name, "screening": result.metadata}
        if act.get("orbitals") or act.get("frozen"):
            raise ConfigError("active.orbitals/frozen apply to FCIDUMP input; a host config defines its own active space")
    else:
        full = load_fcidump(inp["fcidump"])
        n = full.n_orb
        frozen = act.get("frozen", [])
        orbitals = act.get("orbitals") or [i for i in range(n) if i not in frozen]
        for i in list(orbitals) + list(frozen):
            if i >= n:
                raise ConfigError(f"orbital index {i} out of range for {n} orbitals")
        n_elec = full.n_elec
        if "n_alpha" in act and "n_beta" in act:
            na, nb = act["n_alpha"], act["n_beta"]
        elif n_elec is not None:
            active_elec = n_elec - 2 * len(frozen)
            if (active_elec + full.ms2) % 2:
                raise ConfigError("NELEC and MS2 have inconsistent parity")
            na, nb = (active_elec + full.ms2) // 2, (active_elec - full.ms2) // 2
        else:
            raise ConfigError("electron counts unknown: set active.n_alpha and active.n_beta")
        try:
            space = ActiveSpace(tuple(orbitals), na, nb, tuple(frozen))
        except IntegralError as exc:
            raise ConfigError(str(exc)) from None
        ints = active_integrals(full, space)
        provenance = {
            "source": "fcidump",
            "fcidump": Path(inp["fcidump"]).name,
            "active_orbitals": list(orbitals),
            "frozen_orbitals": list(frozen),
        }
    names = inp.get("orbital_names")
    if names is not None:
        if "fcidump" in inp:
            full_names = list(names)
            if len(full_names) == full.n_orb:
                names = [full_names[i] for i in orbitals]
        if len(names) != ints.n_orb:
            raise ConfigError(f"orbital_names must name the {ints.n_orb} active orbitals")
    else:
        names = list(ints.orbital_names) if ints.orbital_names else [str(i) for i in range(ints.n_orb)]
    ints = ints.replace(orbital_names=tuple(names))
    return Problem(ints, na, nb, tuple(names), provenance)


def _system_label(problem: Problem) -> str:
    prov = problem.provenance
    if prov["source"] == "host":
        meta = prov["screening"]
        return f"{prov['host']} (screening={meta['screening']}, dc={meta['dc_scheme']})"
    label = f"{prov['fcidump']} active={prov['active_orbitals']}"
    if prov["frozen_orbitals"]:
        label += f" frozen={prov['frozen_orbitals']}"
    return label


def _sector(problem: Problem) -> dict:
    return {
        "system": _system_label(problem),
        "n_alpha": problem.n_alpha,
        "n_beta": problem.n_beta,
        "ms": (problem.n_alpha - problem.n_beta) / 2,
        "n_orb": problem.ints.n_orb,
    }


def qubit_hamiltonian(problem: Problem, cfg: dict):
    ham = map_hamiltonian(problem.ints, encoding=cfg["encoding"])
    info = {"encoding": cfg["encoding"], "n_qubits_mapped": ham.n_qubits, "tapered": False}
    if cfg["taper"]:
        if cfg["encoding"] != "parity":
            raise ConfigError("tapering requires encoding 'parity' (or pass --no-taper)")
        pa, pb = sector_parities(problem.n_alpha, problem.n_beta)
        ham = taper_parity(ham, pa, pb)
        info.update(tapered=True, alpha_parity=pa, beta_parity=pb)
    info["n_qubits"] = ham.n_qubits
    info["n_terms"] = len(ham)
    return ham, info


def fci_reference(problem: Problem, cfg: dict) -> "fci_mod.Spectrum":
    space = ActiveSpace.full(problem.ints.n_orb, problem.n_alpha, problem.n_beta)
    dim = len(fci_mod.enumerate_basis(space))
    k = cfg["fci"]["k"]
    if k > dim:
        raise ConfigError(f"fci.k = {k} exceeds the sector dimension {dim}")
    try:
        return fci_mod.solve(problem.ints, space, k=k, method=cfg["fci"]["method"])
    except fci_mod.FciError as exc:
        raise ConvergenceError(str(exc)) from None


# -- output -------------------------------------------------------------------


def _dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _commit(outdir: Path, files: dict[str, str]) -> None:
    """Write all files, each atomically; nothing is written if rendering failed earlier."""
    outdir.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        fd, tmp = tempfile.mkstemp(dir=outdir, prefix=f".{name}.")
        try:
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, outdir / name)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise


def _run_config_record(cfg: dict) -> dict:
    rec = copy.deepcopy(cfg)
    for key in ("fcidump", "host"):
        if key in rec["input"]:
            rec["input"][key] = Path(rec["input"][key]).name
    rec["output"] = Path(rec["output"]).name
    return rec


def spectrum_document(spectrum: "fci_mod.Spectrum", problem: Problem, cfg: dict) -> dict:
    doc = spectrum.to_dict()
    doc.update(
        kind="fci",
        sector=_sector(problem),
        provenance=problem.provenance,
        config=_run_config_record(cfg),
    )
    return doc


# -- commands -----------------------------------------------------------------


def cmd_screen(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    if "host" not in cfg["input"]:
        raise ConfigError("screen needs a host input (input.host or --host)")
    problem = build_problem(cfg)
    outdir = Path(cfg["output"])
    with tempfile.TemporaryDirectory() as tmp:
        dump = Path(tmp) / "effective.fcidump"
        write_fcidump(problem.ints, dump, n_elec=problem.n_alpha + problem.n_beta,
                      ms2=problem.n_alpha - problem.n_beta, tol=1e-14)
        fcidump_text = dump.read_text()
    meta = dict(problem.provenance["screening"])
    meta.update(kind="screen", config=_run_config_record(cfg), orbital_names=list(problem.names))
    _commit(outdir, {"effective.fcidump": fcidump_text, "screen.json": _dumps(meta)})
    print(f"wrote {outdir / 'effective.fcidump'} ({problem.ints.n_orb} orbitals, dc={meta['dc_scheme']}, "
          f"cond(1 - v chi) = {meta['condition_number']:.4g})")
    return EXIT_OK


def cmd_fci(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    problem = build_problem(cfg)
    spectrum = fci_reference(problem, cfg)
    doc = spectrum_document(spectrum, problem, cfg)
    outdir = Path(cfg["output"])
    _commit(outdir, {"fci.json": _dumps(doc)})
    print(format_spectrum(doc))
    return EXIT_OK


def format_spectrum(doc: dict) -> str:
    s = doc["sector"]
    lines = [f"FCI  n_alpha={s['n_alpha']} n_beta={s['n_beta']} M_S={s['ms']:+g}",
             f"{'state':>5} {'E (Ha)':>16} {'E (eV)':>14} {'<S^2>':>8}  leading determinants"]
    for i, st in enumerate(doc["states"]):
        lead = ", ".join(f"{d['label'] or d['occupation']}:{d['amplitude']:+.4f}" for d in st["leading_determinants"][:3])
        lines.append(f"{i:>5} {st['energy_hartree']:>16.10f} {st['energy_ev']:>14.6f} {st['s_squared']:>8.4f}  {lead}")
    return "\n".join(lines)


def cmd_map(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    problem = build_problem(cfg)
    ham, info = qubit_hamiltonian(problem, cfg)
    info.update(kind="map", sector=_sector(problem), provenance=problem.provenance,
                config=_run_config_record(cfg), max_imag=ham.max_imag())
    outdir = Path(cfg["output"])
    _commit(outdir, {"hamiltonian.txt": ham.real().to_text(), "map.json": _dumps(info)})
    print(f"{info['encoding']} encoding, {info['n_qubits']} qubits, {info['n_terms']} Pauli terms")
    return EXIT_OK


def _default_reference(problem: Problem) -> dict:
    return {"alpha": list(range(problem.n_alpha)), "beta": list(range(problem.n_beta))}


def cmd_vqe(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    problem = build_problem(cfg)
    spectrum = fci_reference(problem, cfg)
    ham, map_info = qubit_hamiltonian(problem, cfg)
    ref_cfg = cfg["ansatz"].get("reference") or _default_reference(problem)
    cfg["ansatz"]["reference"] = ref_cfg
    n = problem.ints.n_orb
    for i in ref_cfg["alpha"] + ref_cfg["beta"]:
        if i >= n:
            raise ConfigError(f"reference orbital {i} out of range for {n} active orbitals")
    if (len(set(ref_cfg["alpha"])), len(set(ref_cfg["beta"]))) != (problem.n_alpha, problem.n_beta):
        raise ConfigError(
            f"reference occupies {len(ref_cfg['alpha'])} alpha / {len(ref_cfg['beta'])} beta orbitals, "
            f"sector has {problem.n_alpha} / {problem.n_beta}"
        )
    reference = ReferenceState.from_occupations(
        ref_cfg["alpha"], ref_cfg["beta"], n, cfg["encoding"], taper=cfg["taper"]
    )
    screening = cfg["ansatz"]["screening"]
    try:
        ansatz = build_uccsd(reference, screening=screening, hamiltonian=ham if screening == "symmetry" else None)
    except EmptyAnsatzError as exc:
        raise ConfigError(str(exc)) from None
    b = cfg["backend"]
    backend = Backend.exact(b["depolarizing"]) if b["kind"] == "exact" else Backend.sampled(
        b["shots"], cfg["seed"], b["depolarizing"]
    )
    opt = cfg["optimizer"]
    trace = run_vqe(
        ham, ansatz, backend, algorithm=opt["algorithm"], x0=opt["x0"], seed=cfg["seed"],
        tol=opt["tol"], max_evaluations=opt["max_evaluations"],
        reference_energy=spectrum.ground_energy, rhobeg=opt["rhobeg"],
    )
    names = problem.names
    ref_label = fci_mod.Determinant(
        sum(1 << i for i in ref_cfg["alpha"]), sum(1 << i for i in ref_cfg["beta"])
    ).label(n, names)
    summary = trace.summary()
    summary.update(
        kind="vqe",
        sector=_sector(problem),
        seed=cfg["seed"],
        fci_ground_energy_hartree=spectrum.ground_energy,
        fci_ground_s_squared=float(spectrum.s_squared[0]),
        reference_determinant=ref_label,
        reference_bits="".join(str(x) for x in reference.bits),
        n_parameters=ansatz.n_parameters,
        parameter_convention=ansatz.convention(),
        parameter_statement=(
            f"{ansatz.n_parameters} variational parameter(s) from reference {ref_label} "
            f"under screening level '{screening}'"
        ),
        excitations=[e.label(n, names) for e in ansatz.excitations],
        dropped_excitations={k: [_relabel(x, n, names) for x in v] for k, v in ansatz.dropped.items()},
        qubits=map_info,
        provenance=problem.provenance,
        config=_run_config_record(cfg),
    )
    outdir = Path(cfg["output"])
    _commit(outdir, {"vqe_trace.csv": trace.to_csv(), "vqe_summary.json": _dumps(summary)})
    status = "converged" if trace.converged else "NOT converged"
    print(f"VQE {status}: E = {trace.final_energy:.10f} Ha, FCI = {spectrum.ground_energy:.10f} Ha, "
          f"gap = {summary['gap_mev']:.4g} meV, {ansatz.n_parameters} parameter(s), "
          f"{len(trace.records)} evaluations")
    if not trace.converged:
        return EXIT_CONVERGENCE
    return EXIT_OK


def _relabel(label: str, n: int, names: Sequence[str]) -> str:
    def one(tok: str) -> str:
        bar = tok.endswith("~")
        return names[int(tok.rstrip("~"))] + ("~" if bar else "")

    occ, virt = label.split("->")
    return ",".join(one(t) for t in occ.split(",")) + "->" + ",".join(one(t) for t in virt.split(","))


def collect_runs(paths: Sequence[Path]) -> list[tuple[Path, dict]]:
    found = []
    for root in paths:
        if not root.exists():
            raise InputError(f"run directory not found: {root}")
        files = [root] if root.is_file() else sorted(
            p for p in root.rglob("*.json") if p.name in ("fci.json", "vqe_summary.json")
        )
        for p in files:
            try:
                doc = json.loads(p.read_text())
            except json.JSONDecodeError as exc:
                raise InputError(f"{p}: not valid JSON: {exc}") from None
            if doc.get("kind") in ("fci", "vqe"):
                found.append((p, doc))
    if not found:
        raise InputError("no fci.json or vqe_summary.json found in " + ", ".join(str(p) for p in paths))
    return found


def build_report(runs: Sequence[tuple[Path, dict]], base: Path) -> dict:
    """Group FCI and VQE results by system and (n_alpha, n_beta, M_S), with eV gaps.

    Gaps are measured from the lowest FCI energy of each group.
    """
    groups: dict[tuple, dict] = {}
    for path, doc in runs:
        s = doc["sector"]
        key = (s.get("system", ""), s["n_alpha"], s["n_beta"], s["ms"])
        g = groups.setdefault(
            key, {"system": key[0], "n_alpha": key[1], "n_beta": key[2], "ms": key[3], "fci": [], "vqe": []}
        )
        rel = os.path.relpath(path, base)
        if doc["kind"] == "fci":
            g["fci"].append({"run": rel, "energies_hartree": [st["energy_hartree"] for st in doc["states"]],
                             "s_squared": [st["s_squared"] for st in doc["states"]]})
        else:
            g["vqe"].append({
                "run": rel,
                "energy_hartree": doc["final_energy_hartree"],
                "stderr_hartree": doc["final_stderr_hartree"],
                "fci_ground_energy_hartree": doc["fci_ground_energy_hartree"],
                "converged": doc["converged"],
                "n_parameters": doc["n_parameters"],
                "parameter_statement": doc["parameter_statement"],
                "parameter_convention": doc["parameter_convention"],
                "backend": doc["backend"]["kind"],
                "n_evaluations": doc["n_evaluations"],
            })
    out = []
    for key in sorted(groups):
        g = groups[key]
        ground = min([e for f in g["fci"] for e in f["energies_hartree"]]
                     + [v["fci_ground_energy_hartree"] for v in g["vqe"]])
        g["fci_ground_energy_hartree"] = ground
        for f in g["fci"]:
            f["gaps_ev"] = [(e - ground) * HARTREE_TO_EV for e in f["energies_hartree"]]
        for v in g["vqe"]:
            v["gap_ev"] = (v["energy_hartree"] - ground) * HARTREE_TO_EV
        g["fci"].sort(key=lambda r: r["run"])
        g["vqe"].sort(key=lambda r: r["run"])
        out.append(g)
    return {"kind": "report", "hartree_to_ev": HARTREE_TO_EV, "sectors": out}


def format_report(rep: dict) -> str:
    lines = []
    for g in rep["sectors"]:
        lines.append(f"## {g['system']}: n_alpha={g['n_alpha']} n_beta={g['n_beta']} M_S={g['ms']:+g}  "
                     f"(FCI ground {g['fci_ground_energy_hartree']:.10f} Ha)")
        lines.append("")
        lines.append("| run | method | E (Ha) | E - E_FCI (eV) | notes |")
        lines.append("|---|---|---|---|---|")
        for f in g["fci"]:
            for i, (e, gap, s2) in enumerate(zip(f["energies_hartree"], f["gaps_ev"], f["s_squared"])):
                lines.append(f"| {f['run']} | FCI state {i} | {e:.10f} | {gap:.6f} | <S^2> = {s2:.4f} |")
        for v in g["vqe"]:
            note = f"{v['backend']}, {v['n_evaluations']} evals, {'converged' if v['converged'] else 'not converged'}; {v['parameter_statement']}"
            lines.append(f"| {v['run']} | VQE | {v['energy_hartree']:.10f} | {v['gap_ev']:.6f} | {note} |")
        lines.append("")
        conventions = sorted({v["parameter_convention"] for v in g["vqe"]})
        for conv in conventions:
            lines.append(f"Parameter counting: {conv}")
        if conventions:
            lines.append("")
    return "\n".join(lines)


def cmd_report(args: argparse.Namespace) -> int:
    paths = [Path(p) for p in args.runs]
    runs = collect_runs(paths)
    base = paths[0] if paths[0].is_dir() else paths[0].parent
    rep = build_report(runs, base)
    text = format_report(rep)
    if args.output:
        outdir = Path(args.output)
        _commit(outdir, {"report.json": _dumps(rep), "report.md": text})
    print(text, end="")
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", nargs="?", help="YAML run config; flags override its fields")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--fcidump", help="integral file input")
    src.add_argument("--host", help="model host config input")
    p.add_argument("-o", "--output", help="output directory")
    p.add_argument("--seed", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qembed", description="Active-space embedding: screening, FCI and VQE.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("screen", help="downfold a model host to active-space integrals")
    _add_common(p)
    p.add_argument("--dc", choices=DC_SCHEMES)
    p.add_argument("--no-screen", action="store_true", help="use the bare interaction (W = v)")
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("fci", help="exact diagonalization in one (n_alpha, n_beta) sector")
    _add_common(p)
    p.add_argument("--dc", choices=DC_SCHEMES)
    p.add_argument("--no-screen", action="store_true")
    p.add_argument("-k", type=int, help="number of states")
    p.add_argument("--method", choices=["dense", "davidson"])
    p.set_defaults(func=cmd_fci)

    p = sub.add_parser("map", help="write the qubit Hamiltonian")
    _add_common(p)
    p.add_argument("--dc", choices=DC_SCHEMES)
    p.add_argument("--no-screen", action="store_true")
    p.add_argument("--encoding", choices=ENCODINGS)
    p.add_argument("--no-taper", action="store_true")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("vqe", help="run UCCSD-VQE against the FCI reference")
    _add_common(p)
    p.add_argument("--dc", choices=DC_SCHEMES)
    p.add_argument("--no-screen", action="store_true")
    p.add_argument("--encoding", choices=ENCODINGS)
    p.add_argument("--no-taper", action="store_true")
    p.add_argument("--shots", type=int, help="shots per measurement group; 0 selects the exact backend")
    p.add_argument("--depolarizing", type=float)
    p.add_argument("--reference", help="reference determinant as ALPHA:BETA orbital lists, e.g. 0:1")
    p.add_argument("--screening", choices=SCREENING_LEVELS)
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--max-evaluations", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--x0", choices=["zero", "random"])
    p.set_defaults(func=cmd_vqe)

    p = sub.add_parser("report", help="merge fci/vqe results into one table")
    p.add_argument("runs", nargs="+", help="run directories or result files")
    p.add_argument("-o", "--output", help="also write report.json and report.md here")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, IntegralError, ScreeningError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
