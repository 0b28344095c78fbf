# %% [markdown]
# # Screening a two-orbital active space embedded in a ring
#
# The bundled host is an 8-site ring with nearest-neighbour hopping and a
# softened Coulomb interaction. Four electrons fill the lowest orbital and half
# fill the degenerate pair above it. That pair is the active space; all other
# particle-hole transitions screen the interaction between its electrons.

# %%
from __future__ import annotations

import numpy as np

from qembed import data_path
from qembed.fci import HARTREE_TO_EV, solve
from qembed.integrals import ActiveSpace
from qembed.screening import downfold, load_host_config, screened_interaction, static_polarizability

cfg = load_host_config(data_path("host8.yaml"))
host = cfg.host
print("orbital energies:", np.round(host.energies, 4))
print("occupations:     ", host.occupations)

# %% [markdown]
# ## Environment polarizability
#
# Transitions inside the active pair are excluded. The remaining static
# polarizability is symmetric and negative semi-definite.

# %%
chi = static_polarizability(host, cfg.active)
print(f"{chi.n_transitions} transitions kept, eigenvalues of chi:", np.round(np.linalg.eigvalsh(chi.chi), 4))
w = screened_interaction(host.v_bare, chi)
print(f"cond(1 - v chi) = {w.condition_number:.3f}")
print("on-site v:", round(host.v_bare[0, 0], 4), " screened W:", round(w.w[0, 0], 4))

# %% [markdown]
# ## Effective integrals, bare and screened
#
# Projecting v or W onto the active orbitals gives two versions of the
# active-space Hamiltonian. The screened one has weaker interactions, which
# shows up as a smaller spread of the low-lying multiplets.

# %%
for screen in (False, True):
    d = downfold(host, cfg.active, cfg.dc_scheme, screen=screen)
    ints = d.integrals
    spectrum = solve(ints, ActiveSpace.full(2, 1, 1), k=4)
    spread = (spectrum.energies[-1] - spectrum.energies[0]) * HARTREE_TO_EV
    print(f"screen={screen!s:5}  (00|00) = {ints.v[0, 0, 0, 0]:.4f} Ha  "
          f"multiplet spread = {spread:.3f} eV  ground <S^2> = {spectrum.s_squared[0]:.3f}")
