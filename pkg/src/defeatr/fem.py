"""P1 finite elements for the Poisson problem on tagged triangle meshes.

Boundary data is attached per facet tag.  Dirichlet values are imposed by
nodal interpolation and eliminated symmetrically, so the reduced system
stays symmetric positive definite and is solved with diagonally
preconditioned conjugate gradients in a fixed iteration order; identical
inputs therefore yield bitwise identical solutions.
"""
from __future__ import annotations

import inspect
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import MeshError, SolveError
from .mesh.core import Mesh, boundary_edges, edge_to_triangle_map, signed_areas

BoundaryValue = "float | callable"


@dataclass
class PoissonProblem:
    """-laplace(u) = source, with boundary data keyed by facet tag.

    ``dirichlet`` and ``neumann`` map tag names to constants or callables
    ``f(x, y)`` taking coordinate arrays.  A Neumann callable may instead
    take ``f(x, y, nx, ny)`` to see the outward unit normal.
    """

    source: object = 0.0
    dirichlet: dict = field(default_factory=dict)
    neumann: dict = field(default_factory=dict)


@dataclass
class FEFunction:
    mesh: Mesh
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.values.size != self.mesh.num_nodes:
            raise MeshError("nodal value count does not match the mesh")


def _as_field(data):
    if callable(data):
        return data
    val = float(data)
    return lambda x, y: np.full_like(np.asarray(x, dtype=float), val)


def _wants_normal(fn) -> bool:
    if not callable(fn):
        return False
    try:
        params = inspect.signature(fn).parameters
    except (TypeError, ValueError):
        return False
    required = [
        p for p in params.values()
        if p.default is inspect.Parameter.empty
        and p.kind in (p.POSITIONAL_ONLY, p.POSITIONAL_OR_KEYWORD)
    ]
    return len(required) >= 4


def assemble_stiffness(mesh: Mesh) -> sp.csr_matrix:
    """Stiffness matrix for piecewise linear elements."""
    tri = mesh.triangles
    p = mesh.nodes[tri]
    area = signed_areas(mesh)
    if np.any(area <= 0):
        raise MeshError("stiffness assembly needs positively oriented triangles")
    # gradient coefficients: b_i = y_j - y_k, c_i = x_k - x_j (cyclic)
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    k_local = (
        b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]
    ) / (4.0 * area[:, None, None])
    rows = np.repeat(tri, 3, axis=1).reshape(-1)
    cols = np.tile(tri, (1, 3)).reshape(-1)
    A = sp.coo_matrix(
        (k_local.reshape(-1), (rows, cols)),
        shape=(mesh.num_nodes, mesh.num_nodes),
    )
    return A.tocsr()


def assemble_load(mesh: Mesh, source) -> np.ndarray:
    """Load vector by the three-midpoint rule (exact for quadratic sources)."""
    f = _as_field(source)
    tri = mesh.triangles
    p = mesh.nodes[tri]
    area = signed_areas(mesh)
    mids = 0.5 * (p + np.roll(p, -1, axis=1))  # midpoints of (01, 12, 20)
    fv = f(mids[..., 0], mids[..., 1])
    fv = np.broadcast_to(np.asarray(fv, dtype=float), mids.shape[:2])
    # basis i is 1/2 on the two midpoints of its adjacent edges
    contrib = np.empty_like(fv)
    contrib[:, 0] = fv[:, 0] + fv[:, 2]
    contrib[:, 1] = fv[:, 0] + fv[:, 1]
    contrib[:, 2] = fv[:, 1] + fv[:, 2]
    contrib *= (area / 6.0)[:, None]
    b = np.zeros(mesh.num_nodes)
    np.add.at(b, tri.reshape(-1), contrib.reshape(-1))
    return b


_GAUSS3_T = np.array([0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)])
_GAUSS3_W = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


def _outward_normals(mesh: Mesh, edges: np.ndarray) -> np.ndarray:
    """Unit normals pointing away from the adjacent triangle of each edge."""
    e2t = edge_to_triangle_map(mesh)
    normals = np.empty((edges.shape[0], 2))
    for i, (a, b) in enumerate(edges):
        tris = e2t.get((int(min(a, b)), int(max(a, b))))
        if not tris or len(tris) != 1:
            raise MeshError("neumann edge is not a boundary edge")
        t = mesh.triangles[tris[0]]
        other = [v for v in t if v != a and v != b][0]
        pa, pb, po = mesh.nodes[a], mesh.nodes[b], mesh.nodes[other]
        tang = pb - pa
        n = np.array([tang[1], -tang[0]])
        if np.dot(n, po - pa) > 0:
            n = -n
        normals[i] = n / np.hypot(n[0], n[1])
    return normals


def assemble_neumann(mesh: Mesh, edges: np.ndarray, data) -> np.ndarray:
    """Boundary load from flux data, three point Gauss per edge."""
    b = np.zeros(mesh.num_nodes)
    if edges.size == 0:
        return b
    g = _as_field(data)
    with_normal = _wants_normal(data)
    normals = _outward_normals(mesh, edges) if with_normal else None
    pa = mesh.nodes[edges[:, 0]]
    pb = mesh.nodes[edges[:, 1]]
    lengths = np.hypot(*(pb - pa).T)
    for t, w in zip(_GAUSS3_T, _GAUSS3_W):
        q = pa + t * (pb - pa)
        if with_normal:
            gv = g(q[:, 0], q[:, 1], normals[:, 0], normals[:, 1])
        else:
            gv = g(q[:, 0], q[:, 1])
        gv = np.broadcast_to(np.asarray(gv, dtype=float), (edges.shape[0],))
        np.add.at(b, edges[:, 0], w * lengths * gv * (1.0 - t))
        np.add.at(b, edges[:, 1], w * lengths * gv * t)
    return b


def _pcg(A: sp.csr_matrix, b: np.ndarray, tol: float, maxiter: int) -> np.ndarray:
    """Jacobi preconditioned conjugate gradients, deterministic."""
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise SolveError("system diagonal is not positive")
    minv = 1.0 / diag
    x = np.zeros_like(b)
    r = b.copy()
    bnorm = float(np.sqrt(r @ r))
    if bnorm == 0.0:
        return x
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    for _ in range(maxiter):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if float(np.sqrt(r @ r)) <= tol * bnorm:
            return x
        z = minv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolveError(
        f"conjugate gradients did not reach tol={tol:g} in {maxiter} iterations"
    )


def solve_poisson(
    mesh: Mesh,
    problem: PoissonProblem,
    tol: float = 1e-10,
    maxiter: int | None = None,
) -> FEFunction:
    """Solve the tagged Poisson problem; every boundary edge needs data.

    Raises SolveError for an all-Neumann problem, MeshError when a
    boundary edge is not covered by exactly one data tag or when two
    Dirichlet tags disagree at a shared node.
    """
    for tag in list(problem.dirichlet) + list(problem.neumann):
        if tag not in mesh.facet_tags:
            raise MeshError(f"boundary data references unknown tag {tag!r}")

    bedges = boundary_edges(mesh)
    bkeys = set(
        (int(min(a, b)), int(max(a, b))) for a, b in bedges
    )
    covered = set()
    for tag in list(problem.dirichlet) + list(problem.neumann):
        for a, b in mesh.facet_tags[tag]:
            k = (int(min(a, b)), int(max(a, b)))
            if k not in bkeys:
                raise MeshError(
                    f"tag {tag!r} has an edge that is not on the mesh boundary"
                )
            if k in covered:
                raise MeshError("boundary edge covered by two data tags")
            covered.add(k)
    if covered != bkeys:
        raise MeshError(
            f"{len(bkeys) - len(covered)} boundary edges have no boundary data"
        )
    if not problem.dirichlet:
        raise SolveError("pure Neumann problem is singular; need Dirichlet data")

    n = mesh.num_nodes
    g = np.zeros(n)
    is_dir = np.zeros(n, dtype=bool)
    assigned = np.zeros(n, dtype=bool)
    for tag, data in problem.dirichlet.items():
        fn = _as_field(data)
        nodes = np.unique(mesh.facet_tags[tag])
        vals = np.broadcast_to(
            np.asarray(fn(mesh.nodes[nodes, 0], mesh.nodes[nodes, 1]), dtype=float),
            (nodes.size,),
        )
        clash = assigned[nodes]
        if np.any(clash):
            if not np.allclose(g[nodes[clash]], vals[clash], atol=1e-12, rtol=0.0):
                raise MeshError("dirichlet tags disagree at a shared node")
        g[nodes] = vals
        is_dir[nodes] = True
        assigned[nodes] = True

    A = assemble_stiffness(mesh)
    b = assemble_load(mesh, problem.source)
    for tag, data in problem.neumann.items():
        b += assemble_neumann(mesh, mesh.facet_tags[tag], data)

    free = np.nonzero(~is_dir)[0]
    x = g.copy()
    if free.size:
        Aff = A[free][:, free].tocsr()
        rhs = b[free] - A[free][:, is_dir] @ g[is_dir]
        if maxiter is None:
            maxiter = int(np.ceil(20.0 * np.sqrt(free.size)))
        x[free] = _pcg(Aff, rhs, tol, maxiter)
    return FEFunction(mesh, x)


def h1_seminorm(u: FEFunction) -> float:
    """Energy seminorm |u|_{H1} = sqrt(int |grad u|^2)."""
    mesh = u.mesh
    tri = mesh.triangles
    p = mesh.nodes[tri]
    v = u.values[tri]
    area = signed_areas(mesh)
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    gx = np.sum(b * v, axis=1) / (2.0 * area)
    gy = np.sum(c * v, axis=1) / (2.0 * area)
    return float(np.sqrt(np.sum((gx * gx + gy * gy) * area)))


def l2_norm_domain(u: FEFunction) -> float:
    """L2 norm via exact integration of the quadratic nodal interpolant."""
    mesh = u.mesh
    v = u.values[mesh.triangles]
    area = signed_areas(mesh)
    # exact mass contribution: area/12 * ((sum v)^2 + sum v^2)
    s = np.sum(v, axis=1)
    q = np.sum(v * v, axis=1)
    return float(np.sqrt(np.sum(area / 12.0 * (s * s + q))))


def defeaturing_error(
    u_exact: FEFunction, u_defeatured: FEFunction, node_map: np.ndarray
) -> float:
    """Energy norm of (exact - defeatured) on the exact domain.

    Both solutions must share node locations: node_map carries each exact
    domain node to its parent index, so the difference is formed nodally
    and the seminorm is evaluated on the exact mesh only.
    """
    node_map = np.asarray(node_map).reshape(-1)
    if node_map.size != u_exact.mesh.num_nodes:
        raise MeshError("node_map length does not match the exact mesh")
    if node_map.max() >= u_defeatured.mesh.num_nodes:
        raise MeshError("node_map references nodes outside the defeatured mesh")
    diff = u_exact.values - u_defeatured.values[node_map]
    return h1_seminorm(FEFunction(u_exact.mesh, diff))


def residual_norm(A: sp.csr_matrix, u: FEFunction, rhs: np.ndarray,
                  free: np.ndarray) -> float:
    r = rhs[free] - (A @ u.values)[free]
    return float(np.sqrt(r @ r))


def check_discrete_maximum(u: FEFunction, warn: bool = True) -> bool:
    """Diagnostic: with zero source the extrema should sit on the boundary."""
    bnodes = np.unique(boundary_edges(u.mesh))
    inner = np.setdiff1d(np.arange(u.mesh.num_nodes), bnodes)
    if inner.size == 0:
        return True
    tol = 1e-12 * max(1.0, float(np.max(np.abs(u.values))))
    ok = (
        u.values[inner].max() <= u.values[bnodes].max() + tol
        and u.values[inner].min() >= u.values[bnodes].min() - tol
    )
    if not ok and warn:
        warnings.warn("interior extremum: discrete maximum principle violated")
    return ok
