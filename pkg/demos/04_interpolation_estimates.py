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
# # Interpolation estimates with transported directions
#
# On a curved element the edge directions of the core are carried along by
# the correction: `tau_i = DPsi r_i`.  The interpolation error is compared
# with derivatives of `v` along these fields, weighted by the local lengths
# `h_1`, `h_2`, plus a curvature term from the second derivatives of the
# correction.  The ratio of the two sides should not depend on the mesh.

# %%
import numpy as np

from curvedfem.analysis import (
    affine_core_h1_check,
    grad_sincos,
    hess_sincos,
    interpolation_bound_check,
    sincos,
)
from curvedfem.geometry import AffineCore
from curvedfem.mesh import disk_mesh

# %%
for level in range(4):
    rep = interpolation_bound_check(disk_mesh(level, "exact_arc"), sincos, grad_sincos, hess_sincos)
    print(f"level {level}: max L2 ratio {rep.max_ratio_l2:.4f}, max H1 ratio {rep.max_ratio_h1:.4f}")

# %% [markdown]
# ## Thin triangles
#
# On a straight triangle the H1 estimate carries the factor `H_T / h_T`, which
# stays bounded for thin right triangles.  The observed ratio levels off as
# the aspect ratio grows.

# %%
for ar in (1, 3, 10, 30, 100):
    core = AffineCore.from_points(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0 / ar]]))
    lhs, rhs = affine_core_h1_check(core, sincos, grad_sincos, hess_sincos)
    print(f"aspect {ar:>4}: |v - Iv|_1 = {lhs:.3e}, bound = {rhs:.3e}, ratio {lhs / rhs:.4f}")
