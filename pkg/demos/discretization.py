# %% [markdown]
# # How much does a coarse price mesh cost?
#
# Restrict a pricing problem to multiples of eps and compare its LP value
# with a fine 1/1000 grid. The loss is at most eps * d * B.

# %%
import numpy as np

from bwk.discretization import additive_mesh, fine_grid, hyperbolic_mesh, mesh_study, theorem_bound
from bwk.envs import DemandCurve

rng = np.random.default_rng(0)
demand = DemandCurve(np.sort(rng.random(5)), rng.dirichlet(np.ones(5)))
B, T = 50, 500

for eps in (0.2, 0.1, 0.05):
    st = mesh_study("pricing", demand, additive_mesh(eps), B, T, grid=fine_grid(1000))
    print(f"eps {eps:<5} mesh size {len(st.mesh):3d}  covers grid {st.is_discretization()}  "
          f"error {st.error():7.3f}  bound {theorem_bound(eps, st.latent.resources, B):6.1f}")

# %% [markdown]
# Procurement rewards scale like 1/p, so the mesh should be denser at low
# prices: the hyperbolic mesh {1/(1 + eps l)} does exactly that.

# %%
p0 = 0.1
mesh = hyperbolic_mesh(0.1, p0)
st = mesh_study("procurement", demand, mesh, B, T, grid=fine_grid(1000, p0))
print("hyperbolic mesh", len(mesh), "points; top end", np.round(mesh.points[-5:], 3))
print("covers grid", st.is_discretization(), " error", round(st.error(), 4))
