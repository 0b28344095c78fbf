from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest
import yaml

from oracles import NV_TRIPLET_ENERGY, brute_force_chi, jw_sector_matrix, nv_like
from qembed import data_path
from qembed.cli import main
from qembed.fci import HARTREE_TO_EV
from qembed.integrals import OrbitalIntegrals, load_fcidump
from qembed.qubits import PauliOperator

NV = str(data_path("nv_like.fcidump"))
HOST8 = str(data_path("host8.yaml"))


def run(*argv) -> int:
    return main([str(a) for a in argv])


def files(d: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir())}


def test_fci_on_packaged_model(tmp_path, capsys):
    assert run("fci", data_path("nv_fci.yaml"), "-o", tmp_path) == 0
    doc = json.loads((tmp_path / "fci.json").read_text())
    st = doc["states"]
    assert len(st) == 4
    expect = np.linalg.eigvalsh(jw_sector_matrix(nv_like(), 2, 2))[:4]
    np.testing.assert_allclose([s["energy_hartree"] for s in st], expect, atol=1e-10)
    assert st[0]["s_squared"] == pytest.approx(2.0, abs=1e-8)
    assert st[0]["energy_ev"] == pytest.approx(st[0]["energy_hartree"] * HARTREE_TO_EV)
    assert "<S^2>" in capsys.readouterr().out


def test_fci_flags_only(tmp_path):
    assert run("fci", "--fcidump", NV, "-o", tmp_path, "-k", 2, "--method", "davidson") == 0
    doc = json.loads((tmp_path / "fci.json").read_text())
    assert len(doc["states"]) == 2
    assert doc["sector"]["n_alpha"] == 2 and doc["sector"]["n_beta"] == 2


def test_vqe_b_config(tmp_path):
    assert run("vqe", data_path("nv_vqe_b.yaml"), "-o", tmp_path) == 0
    rows = list(csv.DictReader((tmp_path / "vqe_trace.csv").open()))
    summ = json.loads((tmp_path / "vqe_summary.json").read_text())
    assert summ["n_parameters"] == 1
    assert summ["converged"]
    assert summ["reference_determinant"] == "ex ey~"
    assert float(rows[-1]["best_energy_hartree"]) == pytest.approx(summ["fci_ground_energy_hartree"], abs=1e-6)
    assert len(rows) <= 500
    assert "parameter" in summ["parameter_statement"]
    assert summ["dropped_excitations"]["symmetry"]


def test_vqe_a_config(tmp_path):
    assert run("vqe", data_path("nv_vqe_a.yaml"), "-o", tmp_path) == 0
    summ = json.loads((tmp_path / "vqe_summary.json").read_text())
    assert summ["n_parameters"] == 3
    assert summ["gap_mev"] < 1e-3 * HARTREE_TO_EV


def test_vqe_symmetry_screened_a_exits_4_with_outputs(tmp_path):
    code = run("vqe", data_path("nv_vqe_a.yaml"), "-o", tmp_path, "--screening", "symmetry")
    assert code == 4
    summ = json.loads((tmp_path / "vqe_summary.json").read_text())
    assert summ["n_parameters"] == 1 and not summ["converged"]


def test_reruns_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert run("vqe", data_path("nv_vqe_a.yaml"), "-o", tmp_path / name / "out",
                   "--shots", 2000, "--seed", 5, "--x0", "random") in (0, 4)
    assert files(tmp_path / "a" / "out") == files(tmp_path / "b" / "out")
    header = (tmp_path / "a" / "out" / "vqe_trace.csv").read_text().splitlines()[0]
    assert header.endswith("stderr_hartree")


def test_different_seed_changes_shots_trace(tmp_path):
    for seed in (1, 2):
        run("vqe", data_path("nv_vqe_b.yaml"), "-o", tmp_path / str(seed), "--shots", 500, "--seed", seed)
    assert (tmp_path / "1" / "vqe_trace.csv").read_bytes() != (tmp_path / "2" / "vqe_trace.csv").read_bytes()


def test_missing_input_exit_3_and_no_outputs(tmp_path):
    out = tmp_path / "out"
    assert run("fci", "--fcidump", tmp_path / "nope.fcidump", "-o", out) == 3
    assert not out.exists()
    assert run("vqe", tmp_path / "nope.yaml", "-o", out) == 3
    assert not out.exists()


def test_malformed_fcidump_exit_3(tmp_path):
    bad = tmp_path / "bad.fcidump"
    bad.write_text("&FCI NORB=2,NELEC=2,MS2=0\n&END\n0.5 1 1 x 1\n")
    assert run("fci", "--fcidump", bad, "-o", tmp_path / "out") == 3
    assert not (tmp_path / "out").exists()


def test_config_errors_exit_2(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump({"input": {"fcidump": NV}, "encoding": "ternary"}))
    assert run("fci", cfg, "-o", tmp_path / "o") == 2
    cfg.write_text(yaml.safe_dump({"input": {"fcidump": NV}, "mystery": 1}))
    assert run("fci", cfg, "-o", tmp_path / "o") == 2
    cfg.write_text("input: [unclosed\n")
    assert run("fci", cfg, "-o", tmp_path / "o") == 2
    assert run("fci", "-o", tmp_path / "o") == 2
    assert run("fci", "--fcidump", NV, "--host", HOST8) == 2
    assert run("bogus") == 2
    assert run("vqe", "--fcidump", NV, "--reference", "0,1", "-o", tmp_path / "o") == 2
    assert not (tmp_path / "o").exists()


def test_k_larger_than_sector(tmp_path):
    # 3 orbitals, 2 alpha and 2 beta electrons: 9 determinants
    assert run("fci", "--fcidump", NV, "-k", 9, "-o", tmp_path / "ok") == 0
    assert run("fci", "--fcidump", NV, "-k", 10, "-o", tmp_path / "bad") == 2
    assert not (tmp_path / "bad").exists()


def test_reference_outside_sector(tmp_path):
    code = run("vqe", data_path("nv_vqe_b.yaml"), "--reference", "0,1:1", "-o", tmp_path)
    assert code == 2


def test_map_writes_two_qubits(tmp_path):
    assert run("map", data_path("nv_vqe_b.yaml"), "-o", tmp_path) == 0
    op = PauliOperator.from_text((tmp_path / "hamiltonian.txt").read_text())
    assert op.n_qubits == 2
    w = np.linalg.eigvalsh(op.to_dense())
    assert w[0] == pytest.approx(NV_TRIPLET_ENERGY, abs=1e-12)
    assert run("map", data_path("nv_vqe_b.yaml"), "--no-taper", "--encoding", "bk", "-o", tmp_path / "bk") == 0
    op4 = PauliOperator.from_text((tmp_path / "bk" / "hamiltonian.txt").read_text())
    assert op4.n_qubits == 4


def test_screen_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert run("screen", "--host", HOST8, "-o", tmp_path / name / "out") == 0
    assert files(tmp_path / "a" / "out") == files(tmp_path / "b" / "out")
    meta = json.loads((tmp_path / "a" / "out" / "screen.json").read_text())
    assert meta["screening"] == "crpa_static"
    eff = load_fcidump(tmp_path / "a" / "out" / "effective.fcidump")
    assert eff.n_orb == 2


def test_screening_reduces_interaction(tmp_path):
    run("screen", "--host", HOST8, "-o", tmp_path / "w")
    run("screen", "--host", HOST8, "--no-screen", "-o", tmp_path / "v")
    w = load_fcidump(tmp_path / "w" / "effective.fcidump").v
    v = load_fcidump(tmp_path / "v" / "effective.fcidump").v
    assert w[0, 0, 0, 0] < v[0, 0, 0, 0]
    assert json.loads((tmp_path / "v" / "screen.json").read_text())["screening"] == "none"


def test_fully_active_host_matches_bare_projection(tmp_path):
    # every orbital is active, so no transition is left to screen
    host = {
        "name": "dimer", "sites": 2, "hoppings": [[0, 1, -0.5]],
        "interaction": {"matrix": [[1.0, 0.4], [0.4, 1.0]]}, "n_electrons": 2,
        "active": {"orbitals": [0, 1], "n_alpha": 1, "n_beta": 1},
    }
    path = tmp_path / "dimer.yaml"
    path.write_text(yaml.safe_dump(host))
    run("screen", "--host", path, "-o", tmp_path / "w")
    run("screen", "--host", path, "--no-screen", "-o", tmp_path / "v")
    assert (tmp_path / "w" / "effective.fcidump").read_bytes() == (tmp_path / "v" / "effective.fcidump").read_bytes()
    eff = load_fcidump(tmp_path / "w" / "effective.fcidump")
    s = 1 / np.sqrt(2)
    phi = np.array([[s, s], [s, -s]])
    vbare = np.array([[1.0, 0.4], [0.4, 1.0]])
    rho = np.einsum("pi,pj->ijp", phi, phi)
    expect = np.einsum("ijp,pq,klq->ijkl", rho, vbare, rho)
    np.testing.assert_allclose(eff.v, expect, atol=1e-12)


def test_host_pipeline_vqe(tmp_path):
    assert run("vqe", data_path("host8_run.yaml"), "-o", tmp_path) == 0
    summ = json.loads((tmp_path / "vqe_summary.json").read_text())
    assert summ["converged"]
    assert summ["sector"]["system"] != ""


def test_report_groups_and_gaps(tmp_path, capsys):
    runs = tmp_path / "runs"
    run("fci", data_path("nv_fci.yaml"), "-o", runs / "fci")
    run("fci", data_path("nv_vqe_b.yaml"), "-o", runs / "pair_fci")
    run("vqe", data_path("nv_vqe_b.yaml"), "-o", runs / "b")
    run("vqe", data_path("nv_vqe_a.yaml"), "-o", runs / "a")
    capsys.readouterr()
    assert run("report", runs, "-o", tmp_path / "rep") == 0
    text = capsys.readouterr().out
    rep = json.loads((tmp_path / "rep" / "report.json").read_text())
    sectors = rep["sectors"]
    assert len(sectors) == 2
    pair = next(g for g in sectors if g["n_alpha"] == 1)
    assert len(pair["vqe"]) == 2 and len(pair["fci"]) == 1
    assert pair["fci"][0]["gaps_ev"][0] == 0.0
    for v in pair["vqe"]:
        assert abs(v["gap_ev"]) < 1e-6 * HARTREE_TO_EV
    assert "Parameter counting:" in text
    assert (tmp_path / "rep" / "report.md").read_text() == text
    # the singlets sit above the triplet
    gaps = pair["fci"][0]["gaps_ev"]
    assert gaps[1] == pytest.approx(0.0396 * HARTREE_TO_EV, abs=1e-6)


def test_report_empty_directory(tmp_path):
    assert run("report", tmp_path) == 3
    assert run("report", tmp_path / "missing") == 3


GOLDEN = Path(__file__).parent / "golden" / "host8_effective.fcidump"


def test_bundled_host_matches_golden(tmp_path):
    # frozen after checking its active-space spectrum against the independent pipeline below
    assert run("screen", "--host", HOST8, "-o", tmp_path) == 0
    assert (tmp_path / "effective.fcidump").read_bytes() == GOLDEN.read_bytes()


def test_golden_spectrum_matches_independent_pipeline():
    doc = yaml.safe_load(Path(HOST8).read_text())
    h = np.zeros((8, 8))
    for i, j, t in doc["hoppings"]:
        h[i, j] = h[j, i] = t
    pos = np.array(doc["positions"])
    d = np.linalg.norm(pos[:, None] - pos[None], axis=-1)
    v = 0.25 / np.sqrt(d**2 + 1.0)
    eps, C = np.linalg.eigh(h)
    occ = np.array([2.0, 1, 1, 0, 0, 0, 0, 0])
    w = np.linalg.solve(np.eye(8) - v @ brute_force_chi(C, eps, occ, (1, 2)), v)
    phi = C[:, [1, 2]]
    rho = np.einsum("pi,pj->ijp", phi, phi)
    ref = OrbitalIntegrals(0.0, phi.T @ h @ phi, np.einsum("ijp,pq,klq->ijkl", rho, w, rho))
    # the degenerate pair may be rotated differently; the spectrum is invariant
    e_ref = np.linalg.eigvalsh(jw_sector_matrix(ref, 1, 1))
    e_gold = np.linalg.eigvalsh(jw_sector_matrix(load_fcidump(GOLDEN), 1, 1))
    np.testing.assert_allclose(e_gold, e_ref, atol=1e-12)


def test_fci_hubbard_dimer_closed_form(tmp_path):
    t, U = 0.7, 2.3
    path = tmp_path / "dimer.fcidump"
    path.write_text(
        "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n"
        f"{U} 1 1 1 1\n{U} 2 2 2 2\n{-t} 2 1 0 0\n0.0 0 0 0 0\n"
    )
    assert run("fci", "--fcidump", path, "-k", 1, "-o", tmp_path / "out") == 0
    e0 = json.loads((tmp_path / "out" / "fci.json").read_text())["states"][0]["energy_hartree"]
    assert e0 == pytest.approx((U - np.sqrt(U * U + 16 * t * t)) / 2, abs=1e-10)
