"""
One defeaturing cell, end to end
================================

The full pipeline for a single Dirichlet boundary feature: mesh the
simplified domain, solve there, compare against the exact domain, and
check that the boundary-trace estimator brackets the true error.
"""
import numpy as np

from defeatr import boundary, estimators, fem
from defeatr.mesh import FeatureGeometry, extract_exact_submesh, generate_template

# 1. one conformal template covers both geometries
geom = FeatureGeometry(shape="disk", placement="boundary", size=0.125)
template = generate_template(geom, h=0.04)

# the feature straddles the top side; its center is the midpoint of the
# two gamma endpoints, and the data below is the angle around it
ids, _ = boundary.chain_node_ids(template, "gamma")
cx, cy = 0.5 * (template.nodes[ids[0]] + template.nodes[ids[-1]])


def g_gamma(x, y):
    # Dirichlet data prescribed on the feature boundary gamma; the
    # defeatured problem never sees it, which is the whole error source.
    # sin(theta)^2 vanishes at the junctions, matching the outer data
    theta = np.arctan2(y - cy, x - cx)
    return np.sin(theta) ** 2

# 2. defeatured problem: the feature is simply filled in, gamma0 takes
#    the outer data
u0 = fem.solve_poisson(
    template, fem.PoissonProblem(source=1.0, dirichlet={"GammaD": 0.0, "gamma0": 0.0})
)

# 3. exact problem: delete the feature triangles, gamma becomes real
#    boundary and carries its own data
exact_mesh, node_map = extract_exact_submesh(template)
u_exact = fem.solve_poisson(
    exact_mesh, fem.PoissonProblem(source=1.0, dirichlet={"GammaD": 0.0, "gamma": g_gamma})
)

# 4. the true defeaturing error, measured where both solutions live
error = fem.defeaturing_error(u_exact, u0, node_map)

# 5. the estimator sees only the boundary defect d = g - u0 on gamma
d = boundary.boundary_error(g_gamma, u0, "gamma")
estimate = estimators.estimator_dd(d)

print(f"defeatured dofs   {template.num_nodes}")
print(f"exact dofs        {exact_mesh.num_nodes}")
print(f"H1 error          {error:.6f}")
print(f"estimate          {estimate:.6f}")
print(f"effectivity       {estimate / error:.3f}")
print(f"|d| on gamma      L2 {boundary.l2_norm(d):.4f}, "
      f"mean {boundary.average(d):.4f}")
