from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_chi, neumann_series
from qembed import data_path
from qembed.fci import solve
from qembed.integrals import ActiveSpace, validate
from qembed.screening import (
    HostValidationError,
    IllConditionedHost,
    ModelHost,
    ScreeningDivergence,
    aufbau_occupations,
    canonical_eigh,
    downfold,
    effective_integrals,
    hartree_fock,
    host_from_one_body,
    load_host_config,
    parse_host_config,
    screened_interaction,
    softened_coulomb,
    static_polarizability,
)

BOND = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)


def dimer_host(f_bonding: float, v=None) -> ModelHost:
    v = np.array([[1.0, 0.5], [0.5, 1.0]]) if v is None else v
    return ModelHost(BOND, [-1.0, 1.0], [f_bonding, 0.0], v)


def random_host(seed: int, n_sites: int = 6, n_electrons: int | None = None) -> ModelHost:
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(n_sites, n_sites))
    h = 0.5 * (h + h.T)
    pos = rng.normal(scale=2.0, size=(n_sites, 3))
    v = softened_coulomb(pos, 0.3, 1.0)
    eps, C = np.linalg.eigh(h)
    if n_electrons is None:
        n_electrons = int(rng.integers(0, 2 * n_sites + 1))
    return ModelHost(C, eps, aufbau_occupations(eps, n_electrons), v)


# -- polarizability ---------------------------------------------------------------


def test_all_occupied_gives_zero_chi():
    host = ModelHost(BOND, [-1.0, 1.0], [2.0, 2.0], np.eye(2))
    chi = static_polarizability(host).chi
    assert np.array_equal(chi, np.zeros((2, 2)))


def test_two_site_singly_occupied_bonding():
    # one transition, weight 2 (f_i - f_a) / (e_i - e_a) = -1, rho = (1/2, -1/2)
    chi = static_polarizability(dimer_host(1.0)).chi
    np.testing.assert_allclose(chi, [[-0.25, 0.25], [0.25, -0.25]], atol=1e-12, rtol=0)


def test_two_site_doubly_occupied_bonding():
    # closed shell: 4 / (e_i - e_a) * (1/2)(1/2) = -0.5
    chi = static_polarizability(dimer_host(2.0)).chi
    np.testing.assert_allclose(chi, [[-0.5, 0.5], [0.5, -0.5]], atol=1e-12, rtol=0)


def test_both_orbitals_active_excludes_everything():
    chi = static_polarizability(dimer_host(2.0), ActiveSpace((0, 1), 1, 1))
    assert np.array_equal(chi.chi, np.zeros((2, 2)))
    assert chi.n_transitions == 0


def test_degenerate_boundary_is_ill_conditioned():
    host = ModelHost(np.eye(2), [0.0, 0.0], [2.0, 0.0], np.eye(2))
    with pytest.raises(IllConditionedHost):
        static_polarizability(host)


@pytest.mark.parametrize("seed", range(5))
def test_chi_matches_brute_force(seed):
    host = random_host(seed)
    for exclude in ((), (1, 2), (0, 3, 4)):
        got = static_polarizability(host, list(exclude)).chi
        ref = brute_force_chi(host.orbitals, host.energies, host.occupations, exclude)
        np.testing.assert_allclose(got, ref, atol=1e-12, rtol=0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 7))
def test_chi_symmetric_negative_semidefinite(seed, n_sites):
    host = random_host(seed, n_sites)
    chi = static_polarizability(host).chi
    assert np.array_equal(chi, chi.T)
    assert np.linalg.eigvalsh(chi).max() <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_exclusion_is_monotone_in_loewner_order(seed):
    host = random_host(seed, 6)
    rng = np.random.default_rng(seed)
    order = list(rng.permutation(6))
    prev = static_polarizability(host).chi
    for k in range(1, 7):
        cur = static_polarizability(host, order[:k]).chi
        # prev <= cur <= 0
        assert np.linalg.eigvalsh(cur - prev).min() >= -1e-12
        assert np.linalg.eigvalsh(cur).max() <= 1e-12
        assert np.linalg.norm(cur) <= np.linalg.norm(prev) + 1e-12
        prev = cur


# -- screened interaction ---------------------------------------------------------


def test_zero_chi_returns_v_exactly(rng):
    v = softened_coulomb(rng.normal(size=(5, 3)), 0.4, 0.8)
    w = screened_interaction(v, np.zeros((5, 5)))
    assert np.array_equal(w.w, v)


def test_scalar_screening():
    w = screened_interaction(np.array([[1.0]]), np.array([[-0.5]]))
    assert w.w[0, 0] == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_two_site_matches_neumann_series():
    host = dimer_host(1.0)
    chi = static_polarizability(host)
    assert max(abs(np.linalg.eigvals(host.v_bare @ chi.chi))) < 0.9
    w = screened_interaction(host.v_bare, chi)
    np.testing.assert_allclose(w.w, neumann_series(host.v_bare, chi.chi), atol=1e-8, rtol=0)
    np.testing.assert_allclose(w.w, w.w.T, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_neumann_oracle_on_random_hosts(seed):
    host = random_host(seed, 5)
    chi = static_polarizability(host).chi
    radius = max(abs(np.linalg.eigvals(host.v_bare @ chi)))
    if radius >= 0.9:
        chi = chi * (0.5 / radius)
    w = screened_interaction(host.v_bare, chi).w
    np.testing.assert_allclose(w, neumann_series(host.v_bare, chi), atol=1e-8, rtol=0)


def test_singular_screening_diverges():
    # 1 - v chi = 0 for v = 1, chi = 1
    with pytest.raises(ScreeningDivergence):
        screened_interaction(np.array([[1.0]]), np.array([[1.0]]))


def test_screening_reduces_interaction():
    host = dimer_host(2.0)
    w = screened_interaction(host.v_bare, static_polarizability(host))
    assert np.linalg.eigvalsh(host.v_bare - w.w).min() >= -1e-12
    assert w.condition_number >= 1.0


# -- effective integrals ------------------------------------------------------------


def test_single_site_orbitals_get_u():
    u = 0.7
    host = ModelHost(np.eye(3), [-1.0, 0.0, 1.0], [2.0, 0.0, 0.0], np.eye(3))
    ints = effective_integrals(host, ActiveSpace((0, 2), 1, 0), u * np.eye(3))
    assert ints.v[0, 0, 0, 0] == pytest.approx(u, abs=1e-15)
    assert ints.v[1, 1, 1, 1] == pytest.approx(u, abs=1e-15)
    assert ints.v[0, 0, 1, 1] == 0.0


def test_diagonal_w_gives_fourth_power_sum():
    u = 0.3
    host = dimer_host(2.0)
    ints = effective_integrals(host, ActiveSpace((0,), 1, 1), u * np.eye(2))
    assert ints.v[0, 0, 0, 0] == pytest.approx(u * np.sum(BOND[:, 0] ** 4), abs=1e-15)


def test_dc_none_with_bare_interaction_projects_mean_field(rng):
    host = random_host(7, 6, 6)
    active = ActiveSpace((2, 3), 1, 1)
    ints = effective_integrals(host, active, host.v_bare, "none")
    phi = host.orbitals[:, [2, 3]]
    np.testing.assert_allclose(ints.t, phi.T @ host.h_mf @ phi, atol=1e-14)
    np.testing.assert_allclose(ints.t, np.diag(host.energies[[2, 3]]), atol=1e-12)


def test_hf_double_counting_hand_formula():
    host = random_host(11, 6, 6)
    active = ActiveSpace((2, 3), 1, 1)
    w = host.v_bare
    none = effective_integrals(host, active, w, "none")
    hf = effective_integrals(host, active, w, "hf")
    v = none.v
    D = np.diag(host.occupations[[2, 3]])
    dc = np.zeros((2, 2))
    for i, j, k, l in np.ndindex(2, 2, 2, 2):
        dc[i, j] += (v[i, j, k, l] - 0.5 * v[i, k, j, l]) * D[l, k]
    np.testing.assert_allclose(hf.t, none.t - dc, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_effective_integrals_have_8fold_symmetry(seed):
    host = random_host(seed, 6)
    w = screened_interaction(host.v_bare, static_polarizability(host, [1, 2, 3]))
    ints = effective_integrals(host, ActiveSpace((1, 2, 3), 1, 1), w)
    assert validate(ints).passed


def test_effective_integrals_errors():
    host = dimer_host(2.0)
    with pytest.raises(ValueError):
        effective_integrals(host, ActiveSpace((0,), 1, 1), host.v_bare, "bogus")
    with pytest.raises(HostValidationError):
        effective_integrals(host, ActiveSpace((5,), 1, 1), host.v_bare)


# -- host construction ----------------------------------------------------------------


def test_host_invariants():
    with pytest.raises(HostValidationError):
        ModelHost(np.array([[1.0, 1.0], [0.0, 1.0]]), [0, 1], [2, 0], np.eye(2))
    with pytest.raises(HostValidationError):
        ModelHost(BOND, [1.0, -1.0], [2, 0], np.eye(2))
    with pytest.raises(HostValidationError):
        ModelHost(BOND, [-1.0, 1.0], [0, 2], np.eye(2))
    with pytest.raises(HostValidationError):
        ModelHost(BOND, [-1.0, 1.0], [2, 0], np.array([[1.0, 0.1], [0.0, 1.0]]))
    with pytest.raises(HostValidationError):
        ModelHost(BOND, [-1.0, 1.0], [1.5, 0], np.eye(2))


def test_aufbau_shares_degenerate_shell():
    np.testing.assert_array_equal(aufbau_occupations([-1, 0, 0, 1], 4), [2, 1, 1, 0])
    np.testing.assert_array_equal(aufbau_occupations([-1, 0, 1], 3), [2, 1, 0])
    with pytest.raises(HostValidationError):
        aufbau_occupations([-1, 0, 0, 1], 3)
    with pytest.raises(HostValidationError):
        aufbau_occupations([0.0], 3)


def test_canonical_eigh_is_reproducible():
    n = 8
    h = np.zeros((n, n))
    for p in range(n):
        h[p, (p + 1) % n] = h[(p + 1) % n, p] = -1.0
    e1, C1 = canonical_eigh(h)
    e2, C2 = canonical_eigh(h.copy())
    np.testing.assert_array_equal(C1, C2)
    np.testing.assert_allclose(C1.T @ h @ C1, np.diag(e1), atol=1e-12)
    # degenerate pairs are rotated to diagonalize the site-index operator
    X = np.diag(np.arange(n, dtype=float))
    for k in (1, 3, 5):
        block = C1[:, k:k + 2]
        m = block.T @ X @ block
        assert abs(m[0, 1]) < 1e-10


def test_hartree_fock_self_consistency():
    n = 6
    h = np.zeros((n, n))
    for p in range(n - 1):
        h[p, p + 1] = h[p + 1, p] = -0.3
    h[0, 0] = 0.1
    v = softened_coulomb(np.c_[np.arange(n), np.zeros(n), np.zeros(n)].astype(float), 0.4, 1.0)
    eps, C, F = hartree_fock(h, v, 6)
    f = aufbau_occupations(eps, 6)
    D = (C * f) @ C.T
    np.testing.assert_allclose(F, h + np.diag(v @ np.diag(D)) - 0.5 * v * D, atol=1e-8)
    np.testing.assert_allclose(C.T @ F @ C, np.diag(eps), atol=1e-10)
    host = host_from_one_body(h, v, 6, "hartree_fock")
    assert host.mean_field == "hartree_fock"
    assert np.trace(host.density_matrix()) == pytest.approx(6.0)


def test_softened_coulomb_positive_definite(rng):
    v = softened_coulomb(rng.normal(size=(7, 3)), 0.5, 1.0)
    assert np.linalg.eigvalsh(v).min() > 0
    assert np.all(np.diag(v) == 0.5)


# -- bundled host and config --------------------------------------------------------------


def test_bundled_host_pipeline_screening_lowers_splitting():
    cfg = load_host_config(data_path("host8.yaml"))
    assert cfg.host.n_sites == 8
    assert cfg.active.orbital_indices == (1, 2)
    gaps = {}
    for screen in (False, True):
        d = downfold(cfg.host, cfg.active, "none", screen=screen)
        assert validate(d.integrals).passed
        sp = solve(d.integrals, ActiveSpace.full(2, 1, 1), k=4)
        gaps[screen] = sp.energies[-1] - sp.energies[0]
        assert sp.s_squared[0] == pytest.approx(2.0, abs=1e-8)
        assert d.metadata["dc_scheme"] == "none"
    assert gaps[True] < gaps[False]
    d = downfold(cfg.host, cfg.active, "none")
    bare = downfold(cfg.host, cfg.active, "none", screen=False)
    assert d.integrals.v[0, 0, 0, 0] < bare.integrals.v[0, 0, 0, 0]


def test_pipeline_is_deterministic():
    cfg = load_host_config(data_path("host8.yaml"))
    a = downfold(cfg.host, cfg.active, "hf")
    b = downfold(load_host_config(data_path("host8.yaml")).host, cfg.active, "hf")
    assert np.array_equal(a.integrals.v, b.integrals.v)
    assert np.array_equal(a.integrals.t, b.integrals.t)


def _ring_doc(**over):
    doc = {
        "sites": 2,
        "one_body": [[0.0, -1.0], [-1.0, 0.0]],
        "interaction": {"matrix": [[1.0, 0.5], [0.5, 1.0]]},
        "n_electrons": 2,
        "active": {"orbitals": [0], "n_alpha": 1, "n_beta": 1},
    }
    doc.update(over)
    return doc


def test_config_builds_dimer():
    cfg = parse_host_config(_ring_doc())
    np.testing.assert_allclose(cfg.host.energies, [-1.0, 1.0])
    np.testing.assert_array_equal(cfg.host.occupations, [2.0, 0.0])
    assert cfg.dc_scheme == "none"


@pytest.mark.parametrize(
    "bad",
    [
        {"sites": 0},
        {"mean_field": "dft"},
        {"interaction": {}},
        {"interaction": {"softened_coulomb": {"u": 1.0, "a": 1.0}}},
        {"hoppings": [[0, 1, -1.0]]},
        {"one_body": [[0.0]]},
        {"active": {"orbitals": [0], "n_alpha": 2, "n_beta": 0}},
        {"active": {"orbitals": [4], "n_alpha": 1, "n_beta": 0}},
        {"extra": 1},
    ],
)
def test_config_rejects(bad):
    with pytest.raises(HostValidationError):
        parse_host_config(_ring_doc(**bad))


def test_config_file_errors(tmp_path):
    p = tmp_path / "h.yaml"
    p.write_text("[1, 2]\n")
    with pytest.raises(HostValidationError):
        load_host_config(p)
    p.write_text("sites: [\n")
    with pytest.raises(HostValidationError):
        load_host_config(p)
