# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Quadrature and assembly on curved elements
#
# Shape functions live on the reference triangle.  Every integral is pulled
# back there, so the only thing a curved element changes is the Jacobian at
# each quadrature point.

# %%
import numpy as np

from curvedfem.fem import FeSpace, assemble
from curvedfem.mesh import Triangulation, disk_mesh
from curvedfem.quadrature import rule

# %% [markdown]
# ## Rules
#
# Symmetric positive-weight rules up to degree 8.  The degree-8 rule has 16 points.

# %%
for d in (1, 2, 4, 5, 6, 8):
    q = rule(d)
    print(f"degree {d}: {len(q):2d} points, weight sum {q.weights.sum():.16f}")

# %% [markdown]
# ## The reference stiffness matrix

# %%
ref = Triangulation.from_arrays([[0, 0], [1, 0], [0, 1]], [(0, 1, 2)])
system = assemble(FeSpace(ref), lambda x: np.full(x.shape[:-1], 4.0))
print(system.stiffness.toarray())
print("load:", system.load)

# %% [markdown]
# ## The same on the disk
#
# With the exact arc, the quadrature weights (which include `|det DF|`) add
# up to the area of the unit disk.

# %%
for geo in ("order1", "order2", "exact_arc"):
    space = FeSpace(disk_mesh(2, geo))
    w = space.geometry(rule(8)).weights
    print(f"{geo:10s} area {w.sum():.15f}  error {abs(w.sum() - np.pi):.3e}")
