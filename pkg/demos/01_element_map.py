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
# # One curved element, taken apart
#
# A curved element is the image of the reference triangle under two maps.
# The affine map sends the reference triangle onto a straight triangle (the
# core); a smooth correction then bends one core edge onto the unit circle
# while leaving the other two edges where they are.

# %%
import numpy as np

from curvedfem.geometry import AffineCore, ArcBlend, ElementMap, PolyEdgeBlend

# %% [markdown]
# ## The affine core
#
# Vertices are relabeled so that the edge opposite the first vertex is the
# longest one, and the two edges at that vertex give the two local lengths
# and unit directions used in the estimates.

# %%
ta, tb = 0.0, np.pi / 8
a = np.array([np.cos(ta), np.sin(ta)])
b = np.array([np.cos(tb), np.sin(tb)])
c = 0.75 * np.array([np.cos(tb / 2), np.sin(tb / 2)])

core = AffineCore.from_points(np.array([c, a, b]))
print("h1, h2, hT:", core.h1, core.h2, core.hT)
print("r1, r2:", core.r1, core.r2)
print("H_T / h_T:", core.HT / core.hT)

# %% [markdown]
# ## Bending the chord onto the arc
#
# The correction adds `la * lb * e(sigma)` to a core point, where `la`, `lb`
# are its barycentric weights at the edge endpoints.  On the chord this
# reproduces the arc exactly; on the two other edges the product vanishes.

# %%
arc = ArcBlend(a, b, c, ta, tb)
s = np.linspace(0, 1, 9)
on_arc = arc.edge_point(s)
print("radius along the image of the chord:", np.linalg.norm(on_arc, axis=1))

quad = PolyEdgeBlend(a, b, c, ta, tb, 2)
print("largest radial error of the quadratic edge:",
      np.abs(np.linalg.norm(quad.edge_point(np.linspace(0, 1, 201)), axis=1) - 1).max())

# %% [markdown]
# ## Derivatives of the composite map
#
# `DF = DPsi(Phi(xhat)) A`.  The correction is a small perturbation of the
# identity, so its Jacobian stays close to `I` and its determinant positive.

# %%
emap = ElementMap(core.affine, arc)
xhat = np.array([[0.2, 0.2], [0.45, 0.45], [0.1, 0.7]])
print("det DPsi:", np.linalg.det(arc.jacobian(core.affine(xhat))))
print("round trip G(F(xhat)) - xhat:", np.abs(emap.inverse(emap(xhat)) - xhat).max())
