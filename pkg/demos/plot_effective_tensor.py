"""
Effective stiffness of a perforated cell
========================================

A 2 x 1 cell with a centred hole of radius 1/4, plane strain with E = 1 and
nu = 0.3. The three unit strains give the columns of B*.
"""

import numpy as np

import cellhom as ch

np.set_printoptions(precision=4, suppress=True)

# geometry and a moderately fine mesh
cell = ch.paper_cell()
mesh = ch.generate_mesh(cell, 64)
print("elements:", mesh.n_elements, " material area:", round(mesh.area(), 5))

# local moduli from engineering constants
m = ch.moduli_from_engineering(1.0, 0.3, "plane_strain")
res = ch.effective_stiffness(cell, m, mesh=mesh)

print("B* =\n", res.B_star.array)
print("symmetry class:", res.symmetry)

# the energy route gives the same matrix up to the solver tolerance
print("energy route gap:", np.abs(res.B_energy - res.B_star.array).max())

# the mirror-symmetric cell under affine Dirichlet data is stiffer
rep = ch.bc_mode_comparison(cell, m, 32)
print("smallest eigenvalue of B*(dirichlet) - B*(periodic):", rep.min_eigenvalue)
