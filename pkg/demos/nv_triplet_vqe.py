# %% [markdown]
# # Triplet ground state of the NV-like defect model with UCCSD-VQE
#
# The bundled model has three defect orbitals (a, e_x, e_y) holding four
# electrons. We freeze the doubly occupied a orbital, map the remaining
# two-orbital problem to qubits with the parity encoding, taper the two spin
# parity qubits, and run VQE from two different reference determinants.

# %%
from __future__ import annotations

import numpy as np

from qembed import data_path
from qembed.fci import HARTREE_TO_EV, solve
from qembed.integrals import ActiveSpace, active_integrals, load_fcidump
from qembed.qubits import map_hamiltonian, sector_parities, taper_parity
from qembed.vqe import Backend, ReferenceState, apply_ansatz, build_uccsd, run_vqe

full = load_fcidump(data_path("nv_like.fcidump"))
print(f"{full.n_orb} orbitals, {full.n_elec} electrons, core energy {full.e0} Ha")

# %% [markdown]
# ## Exact reference
#
# Full configuration interaction in the M_S = 0 sector of the full model. The
# lowest state has <S^2> = 2: the M_S = 0 component of a triplet.

# %%
spectrum = solve(full, ActiveSpace.full(3, 2, 2), k=4)
for e, s2 in zip(spectrum.energies, spectrum.s_squared):
    print(f"E = {e:.6f} Ha   gap = {(e - spectrum.ground_energy) * HARTREE_TO_EV * 1000:7.1f} meV   <S^2> = {s2:.3f}")

# %% [markdown]
# ## Freeze a and taper
#
# Folding the frozen orbital into the one-body part leaves a 2-orbital,
# 2-electron problem: 4 spin orbitals, so 4 qubits, and 2 after tapering.

# %%
pair_space = ActiveSpace((1, 2), 1, 1, frozen_indices=(0,))
pair = active_integrals(full, pair_space)
ham = taper_parity(map_hamiltonian(pair, encoding="parity"), *sector_parities(1, 1))
print(ham.to_text())
e_fci = solve(pair, ActiveSpace.full(2, 1, 1)).ground_energy
print(f"FCI in the e pair: {e_fci:.6f} Ha (frozen-core total agrees: {spectrum.ground_energy:.6f})")

# %% [markdown]
# ## Reference B: |e_x e_y~>
#
# With symmetry screening only the exchange double survives, so a single angle
# rotates B into the triplet.

# %%
ref_b = ReferenceState.from_occupations([0], [1], 2, "parity", taper=True)
ans_b = build_uccsd(ref_b, screening="symmetry", hamiltonian=ham)
print(ans_b.n_parameters, "parameter:", [e.label(2) for e in ans_b.excitations])
trace_b = run_vqe(ham, ans_b, reference_energy=e_fci)
print(f"E = {trace_b.final_energy:.8f} Ha after {len(trace_b.records)} evaluations")
print("populations:", np.round(np.abs(apply_ansatz(ans_b, trace_b.final_params)) ** 2, 6))

# %% [markdown]
# ## Reference A: |e_x e_x~>
#
# A shares no Z-symmetry sector with the triplet, so symmetry screening would
# trap it among the singlets. S_z screening keeps three generators and lets the
# optimizer reach the triplet.

# %%
ref_a = ReferenceState.from_occupations([0], [0], 2, "parity", taper=True)
stuck = run_vqe(ham, build_uccsd(ref_a, screening="symmetry", hamiltonian=ham), reference_energy=e_fci)
print(f"symmetry screening: E = {stuck.final_energy:.6f} Ha (converged: {stuck.converged})")
ans_a = build_uccsd(ref_a, screening="spin")
trace_a = run_vqe(ham, ans_a, reference_energy=e_fci)
print(f"S_z screening, {ans_a.n_parameters} parameters: E = {trace_a.final_energy:.8f} Ha, "
      f"{len(trace_a.records)} evaluations")
print(ans_a.convention())

# %% [markdown]
# ## Finite shots and noise
#
# With 10^4 shots per measurement group the final estimate carries a standard
# error. A depolarizing channel pulls every energy towards tr(H)/2^n.

# %%
noisy = run_vqe(ham, ans_b, backend=Backend.sampled(10_000, seed=1), reference_energy=e_fci)
print(f"shots: E = {noisy.final_energy:.6f} +/- {noisy.final_stderr:.1e} Ha")
for p in (0.01, 0.05):
    dep = run_vqe(ham, ans_b, backend=Backend.exact(depolarizing=p), reference_energy=e_fci)
    print(f"depolarizing p = {p}: offset {dep.gap * HARTREE_TO_EV * 1000:.1f} meV")
