"""Traces on tagged boundary chains and their norms.

Traces are piecewise linear along a chain of mesh edges.  The L2 norm,
mean and tangential gradient use closed forms per edge.  The fractional
H^{1/2} seminorm is the double integral of |t(x)-t(y)|^2 / |x-y|^2 over
all edge pairs: same-edge blocks are exact, pairs sharing a node are
integrated after a two-level geometric subdivision toward the shared
node, and separated pairs use a 3x3 Gauss product rule.  The whole
seminorm is assembled once as a quadratic form in the nodal values, so
many traces over the same chain are cheap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .errors import TraceError
from .fem import FEFunction
from .mesh.core import Mesh, signed_areas

_G3 = np.array([0.5 - 0.5 * np.sqrt(0.6), 0.5, 0.5 + 0.5 * np.sqrt(0.6)])
_W3 = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
# two-level geometric splitting toward a shared endpoint
_SPLIT = ((0.0, 0.25), (0.25, 0.5), (0.5, 1.0))


@dataclass
class BoundaryTrace:
    """Piecewise linear function on an ordered chain of boundary points."""

    points: np.ndarray
    values: np.ndarray
    closed: bool = False

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.values = np.asarray(self.values, dtype=float).reshape(-1)
        if self.points.shape[0] != self.values.size:
            raise TraceError("point and value counts differ")
        if self.points.shape[0] < 2:
            raise TraceError("a trace needs at least two points")
        a, b = self.edge_arrays()
        if np.any(np.hypot(*(b - a).T) <= 0.0):
            raise TraceError("trace chain contains a zero-length edge")

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Start and end coordinates of every edge."""
        if self.closed:
            return self.points, np.roll(self.points, -1, axis=0)
        return self.points[:-1], self.points[1:]

    def edge_values(self) -> tuple[np.ndarray, np.ndarray]:
        if self.closed:
            return self.values, np.roll(self.values, -1)
        return self.values[:-1], self.values[1:]

    def edge_index_pairs(self) -> np.ndarray:
        m = self.points.shape[0]
        if self.closed:
            i = np.arange(m)
            return np.column_stack([i, (i + 1) % m])
        i = np.arange(m - 1)
        return np.column_stack([i, i + 1])

    def edge_lengths(self) -> np.ndarray:
        a, b = self.edge_arrays()
        return np.hypot(*(b - a).T)

    @property
    def num_edges(self) -> int:
        return self.points.shape[0] if self.closed else self.points.shape[0] - 1


def _resolve_edges(mesh: Mesh, tag) -> np.ndarray:
    if isinstance(tag, str):
        if tag not in mesh.facet_tags:
            raise TraceError(f"no facet tag {tag!r}")
        edges = mesh.facet_tags[tag]
    else:
        edges = np.asarray(tag, dtype=np.int64).reshape(-1, 2)
    if edges.shape[0] == 0:
        raise TraceError("tag has no edges")
    return edges


def chain_node_ids(mesh: Mesh, tag) -> tuple[np.ndarray, bool]:
    """Order the tagged edges into a single chain of node ids.

    Follows the stored edge orientation when it is consistent, otherwise
    walks the undirected adjacency.  Raises TraceError for branching or
    disconnected tags.
    """
    edges = _resolve_edges(mesh, tag)
    heads = edges[:, 0]
    if np.unique(heads).size == edges.shape[0]:
        nxt = {int(a): int(b) for a, b in edges}
        tails = set(map(int, edges[:, 1]))
        starts = [a for a in nxt if a not in tails]
        if len(starts) == 1 or len(starts) == 0:
            start = starts[0] if starts else int(edges[:, 0].min())
            ids = [start]
            seen = set()
            cur = start
            while cur in nxt and cur not in seen:
                seen.add(cur)
                cur = nxt[cur]
                ids.append(cur)
            closed = ids[0] == ids[-1]
            if closed:
                ids = ids[:-1]
            if len(seen) == edges.shape[0]:
                return np.array(ids, dtype=np.int64), closed

    # undirected fallback
    nbrs: dict[int, list[int]] = {}
    for a, b in edges:
        nbrs.setdefault(int(a), []).append(int(b))
        nbrs.setdefault(int(b), []).append(int(a))
    degs = {n: len(v) for n, v in nbrs.items()}
    if any(d > 2 for d in degs.values()):
        raise TraceError("tagged edges branch; not a chain")
    ends = sorted(n for n, d in degs.items() if d == 1)
    if len(ends) not in (0, 2):
        raise TraceError("tagged edges do not form a single chain")
    closed = len(ends) == 0
    if closed:
        start = min(nbrs)
        prev = None
        cur = start
    else:
        start = ends[0]
        prev = None
        cur = start
    ids = [cur]
    while True:
        cands = [n for n in nbrs[cur] if n != prev]
        if not cands:
            break
        if prev is None and closed:
            cands = [min(cands)]
        prev, cur = cur, cands[0]
        if closed and cur == start:
            break
        ids.append(cur)
    if len(ids) != (edges.shape[0] if closed else edges.shape[0] + 1):
        raise TraceError("tagged edges do not form a single chain")
    return np.array(ids, dtype=np.int64), closed


def trace_of(u: FEFunction, tag) -> BoundaryTrace:
    """Restrict a nodal field to a tagged chain."""
    ids, closed = chain_node_ids(u.mesh, tag)
    return BoundaryTrace(u.mesh.nodes[ids], u.values[ids], closed)


def boundary_error(g_gamma, u: FEFunction, tag="gamma") -> BoundaryTrace:
    """Trace of (boundary data - solution) on the tagged chain.

    This is the only input the defeaturing estimators need: the mismatch
    between the data the exact problem prescribes on gamma and what the
    defeatured solution happens to take there.
    """
    t = trace_of(u, tag)
    if callable(g_gamma):
        g = np.asarray(g_gamma(t.points[:, 0], t.points[:, 1]), dtype=float)
        g = np.broadcast_to(g, t.values.shape)
    else:
        g = np.full_like(t.values, float(g_gamma))
    return BoundaryTrace(t.points, g - t.values, t.closed)


def l2_norm(t: BoundaryTrace) -> float:
    """Exact L2 norm of the piecewise linear trace."""
    a, b = t.edge_values()
    ell = t.edge_lengths()
    return float(np.sqrt(np.sum(ell / 3.0 * (a * a + a * b + b * b))))


def average(t: BoundaryTrace) -> float:
    a, b = t.edge_values()
    ell = t.edge_lengths()
    return float(np.sum(0.5 * ell * (a + b)) / np.sum(ell))


def tangential_gradient_l2(t: BoundaryTrace) -> float:
    """L2 norm of the edgewise-constant tangential derivative."""
    a, b = t.edge_values()
    ell = t.edge_lengths()
    return float(np.sqrt(np.sum((b - a) ** 2 / ell)))


def trace_length(t: BoundaryTrace) -> float:
    return float(np.sum(t.edge_lengths()))


def length(mesh: Mesh, tag) -> float:
    edges = _resolve_edges(mesh, tag)
    d = mesh.nodes[edges[:, 1]] - mesh.nodes[edges[:, 0]]
    return float(np.sum(np.hypot(d[:, 0], d[:, 1])))


def diameter(mesh: Mesh, tag) -> float:
    edges = _resolve_edges(mesh, tag)
    pts = mesh.nodes[np.unique(edges)]
    if pts.shape[0] > 3:
        pts = pts[ConvexHull(pts).vertices]
    d2 = np.max(np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2))
    return float(np.sqrt(d2))


def barycenter(mesh: Mesh, region: str) -> np.ndarray:
    """Area-weighted centroid of a tagged triangle region."""
    if region not in mesh.element_tags:
        raise TraceError(f"no element tag {region!r}")
    idx = mesh.element_tags[region]
    if idx.size == 0:
        raise TraceError(f"element tag {region!r} is empty")
    areas = signed_areas(mesh)[idx]
    cent = mesh.nodes[mesh.triangles[idx]].mean(axis=1)
    return np.asarray(np.sum(cent * areas[:, None], axis=0) / np.sum(areas))


def distance(point, mesh: Mesh, tag) -> float:
    """Distance from a point to the tagged edge set."""
    p = np.asarray(point, dtype=float).reshape(2)
    edges = _resolve_edges(mesh, tag)
    a = mesh.nodes[edges[:, 0]]
    b = mesh.nodes[edges[:, 1]]
    ab = b - a
    denom = np.sum(ab * ab, axis=1)
    s = np.clip(np.sum((p[None, :] - a) * ab, axis=1) / denom, 0.0, 1.0)
    proj = a + s[:, None] * ab
    return float(np.min(np.hypot(proj[:, 0] - p[0], proj[:, 1] - p[1])))


def fractional_gram(points: np.ndarray, closed: bool) -> np.ndarray:
    """Quadratic form Q with t^T Q t = |t|^2 in the H^{1/2} seminorm.

    Constants are exactly in the null space of Q by construction.
    """
    t = BoundaryTrace(points, np.zeros(points.shape[0]), closed)
    pairs = t.edge_index_pairs()
    pa, pb = t.edge_arrays()
    m = t.points.shape[0]
    ne = pairs.shape[0]
    Q = np.zeros((m, m))

    # same-edge blocks: integral equals (b - a)^2 exactly
    i, j = pairs[:, 0], pairs[:, 1]
    np.add.at(Q, (i, i), 1.0)
    np.add.at(Q, (j, j), 1.0)
    np.add.at(Q, (i, j), -1.0)
    np.add.at(Q, (j, i), -1.0)

    if ne < 2:
        return Q

    # classify unordered pairs by shared node count
    e_idx, f_idx = np.triu_indices(ne, k=1)
    pe = pairs[e_idx]
    pf = pairs[f_idx]
    shared_ef = (
        (pe[:, 0] == pf[:, 0]) | (pe[:, 0] == pf[:, 1])
        | (pe[:, 1] == pf[:, 0]) | (pe[:, 1] == pf[:, 1])
    )

    def scatter(rows_e, rows_f, w, se, te):
        """Accumulate w * phi phi^T where phi = ((1-se), se, -(1-te), -te)."""
        idx = (
            pairs[rows_e, 0], pairs[rows_e, 1],
            pairs[rows_f, 0], pairs[rows_f, 1],
        )
        phi = (1.0 - se, se, -(1.0 - te), -te)
        for aix in range(4):
            for bix in range(4):
                np.add.at(Q, (idx[aix], idx[bix]), w * phi[aix] * phi[bix])

    def gauss_block(rows_e, rows_f, ea, eb, fa, fb, se0, se1, te0, te1):
        """3x3 Gauss over sub-rectangle [se0,se1]x[te0,te1] in edge params."""
        le = np.hypot(*(eb - ea).T)
        lf = np.hypot(*(fb - fa).T)
        jac = (se1 - se0) * (te1 - te0) * le * lf
        for qs, ws in zip(_G3, _W3):
            se = se0 + qs * (se1 - se0)
            xq = ea + se[:, None] * (eb - ea)
            for qt, wt in zip(_G3, _W3):
                te = te0 + qt * (te1 - te0)
                yq = fa + te[:, None] * (fb - fa)
                r2 = np.sum((xq - yq) ** 2, axis=1)
                w = 2.0 * ws * wt * jac / r2  # factor 2: (e,f) and (f,e)
                scatter(rows_e, rows_f, w, se, te)

    far_e = e_idx[~shared_ef]
    far_f = f_idx[~shared_ef]
    if far_e.size:
        ones = np.ones(far_e.size)
        gauss_block(
            far_e, far_f,
            pa[far_e], pb[far_e], pa[far_f], pb[far_f],
            0.0 * ones, 1.0 * ones, 0.0 * ones, 1.0 * ones,
        )

    adj_e = e_idx[shared_ef]
    adj_f = f_idx[shared_ef]
    if adj_e.size:
        pe = pairs[adj_e]
        pf = pairs[adj_f]
        # edge param of the shared node on each edge: 0 or 1
        shared_at_e0 = (pe[:, 0] == pf[:, 0]) | (pe[:, 0] == pf[:, 1])
        shared_at_f0 = (pf[:, 0] == pe[:, 0]) | (pf[:, 0] == pe[:, 1])
        ones = np.ones(adj_e.size)
        for s0, s1 in _SPLIT:
            # tau in [s0,s1] measured from the shared node on edge e
            se0 = np.where(shared_at_e0, s0, 1.0 - s1)
            se1 = np.where(shared_at_e0, s1, 1.0 - s0)
            for t0, t1 in _SPLIT:
                te0 = np.where(shared_at_f0, t0, 1.0 - t1)
                te1 = np.where(shared_at_f0, t1, 1.0 - t0)
                gauss_block(
                    adj_e, adj_f,
                    pa[adj_e], pb[adj_e], pa[adj_f], pb[adj_f],
                    se0 * ones, se1 * ones, te0 * ones, te1 * ones,
                )
    return Q


def fractional_seminorm_half(t: BoundaryTrace, gram: np.ndarray | None = None) -> float:
    """H^{1/2} seminorm of the trace; pass a precomputed gram to reuse it."""
    Q = fractional_gram(t.points, t.closed) if gram is None else gram
    return float(np.sqrt(max(0.0, t.values @ Q @ t.values)))


def verify_interpolation_inequality(
    t: BoundaryTrace, gram: np.ndarray | None = None
) -> float:
    """Ratio |t - avg|_{1/2} / sqrt(||t - avg|| * ||grad_t t||).

    Finite for any non-constant trace; blowing up under refinement would
    signal a broken seminorm.  Raises TraceError for constant traces.
    """
    dev = BoundaryTrace(t.points, t.values - average(t), t.closed)
    denom = np.sqrt(l2_norm(dev) * tangential_gradient_l2(dev))
    if denom == 0.0:
        raise TraceError("interpolation ratio undefined for constant traces")
    return fractional_seminorm_half(dev, gram) / denom
