"""Triangle mesh container and conforming mesh operations.

Meshes are plain node/triangle arrays plus two tag maps: ``facet_tags``
assigns names to oriented edge lists (boundary pieces such as ``gamma``,
``gamma0``, ``GammaD``, ``GammaN``) and ``element_tags`` assigns names to
triangle index sets (``feature``, ``exterior``).  A defeatured domain and
its exact counterpart live in the same mesh: the exact domain is obtained
by dropping the ``feature`` triangles, so nodal fields on the two domains
can be compared without interpolation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

from ..errors import MeshError

# Facet tag names with reserved meaning.  Other names are carried through
# untouched.
RESERVED_FACET_TAGS = ("gamma", "gamma0", "GammaD", "GammaN")
RESERVED_ELEMENT_TAGS = ("feature", "exterior")


@dataclass
class Mesh:
    nodes: np.ndarray
    triangles: np.ndarray
    facet_tags: dict[str, np.ndarray] = field(default_factory=dict)
    element_tags: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.nodes = np.ascontiguousarray(self.nodes, dtype=float)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int32)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise MeshError("nodes must be an (n, 2) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise MeshError("triangles must be an (m, 3) array")
        self.facet_tags = {
            k: np.ascontiguousarray(v, dtype=np.int32).reshape(-1, 2)
            for k, v in self.facet_tags.items()
        }
        self.element_tags = {
            k: np.ascontiguousarray(v, dtype=np.int32).reshape(-1)
            for k, v in self.element_tags.items()
        }

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]


def signed_areas(mesh: Mesh) -> np.ndarray:
    """Signed area of every triangle (positive for CCW node order)."""
    p = mesh.nodes[mesh.triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def orient_ccw(triangles: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Flip triangles with negative signed area in place-free fashion."""
    tri = np.array(triangles, dtype=np.int32)
    p = nodes[tri]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    neg = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) < 0
    tri[neg] = tri[neg][:, [0, 2, 1]]
    return tri


def _directed_edges(triangles: np.ndarray) -> np.ndarray:
    """All directed triangle edges, shape (3m, 2); triangle i owns rows 3i..3i+2."""
    return np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=0
    ).reshape(3, -1, 2).transpose(1, 0, 2).reshape(-1, 2)


def _undirected_key(edges: np.ndarray) -> np.ndarray:
    lo = np.minimum(edges[:, 0], edges[:, 1]).astype(np.int64)
    hi = np.maximum(edges[:, 0], edges[:, 1]).astype(np.int64)
    return lo << 32 | hi


def boundary_edges(mesh: Mesh) -> np.ndarray:
    """Directed edges that belong to exactly one triangle.

    With CCW triangles the returned edges wind counterclockwise around the
    domain, i.e. the domain lies on their left.
    """
    de = _directed_edges(mesh.triangles)
    key = _undirected_key(de)
    order = np.argsort(key, kind="stable")
    sk = key[order]
    uniq, start, count = np.unique(sk, return_index=True, return_counts=True)
    single = start[count == 1]
    rows = order[single]
    return de[np.sort(rows)]


def edge_to_triangle_map(mesh: Mesh) -> dict[tuple[int, int], list[int]]:
    """Map undirected edge (lo, hi) to the list of adjacent triangle indices."""
    out: dict[tuple[int, int], list[int]] = {}
    tri = mesh.triangles
    for t in range(tri.shape[0]):
        a, b, c = tri[t]
        for u, v in ((a, b), (b, c), (c, a)):
            k = (int(min(u, v)), int(max(u, v)))
            out.setdefault(k, []).append(t)
    return out


def validate(mesh: Mesh) -> None:
    """Check structural invariants; raise MeshError on the first violation.

    Checks: strictly positive signed areas, conforming edges (an interior
    edge is shared by exactly two triangles, once per orientation), the
    reserved facet tags are mutually disjoint, tagged facets are actual
    triangle edges, and every ``gamma`` edge separates feature from
    exterior triangles or lies on the domain boundary.
    """
    if mesh.num_triangles == 0:
        raise MeshError("mesh has no triangles")
    if np.any(mesh.triangles < 0) or np.any(mesh.triangles >= mesh.num_nodes):
        raise MeshError("triangle references a node out of range")
    areas = signed_areas(mesh)
    if np.any(areas <= 0.0):
        k = int(np.argmin(areas))
        raise MeshError(f"triangle {k} has non-positive area {areas[k]:.3e}")

    de = _directed_edges(mesh.triangles)
    key = _undirected_key(de)
    dkey = de[:, 0].astype(np.int64) << 32 | de[:, 1].astype(np.int64)
    uniq, counts = np.unique(key, return_counts=True)
    if np.any(counts > 2):
        raise MeshError("non-manifold edge: shared by more than two triangles")
    # An undirected edge seen twice must appear with both orientations, so
    # every directed key must be distinct.
    if np.unique(dkey).size != dkey.size:
        raise MeshError("edge shared by two triangles with equal orientation")

    edge_set = set(map(int, uniq))
    for name, edges in mesh.facet_tags.items():
        if edges.size == 0:
            continue
        if np.any(edges < 0) or np.any(edges >= mesh.num_nodes):
            raise MeshError(f"facet tag {name!r} references a node out of range")
        ek = _undirected_key(edges)
        if np.unique(ek).size != ek.size:
            raise MeshError(f"facet tag {name!r} contains duplicate edges")
        for k in ek:
            if int(k) not in edge_set:
                raise MeshError(f"facet tag {name!r} contains a non-mesh edge")

    present = [t for t in RESERVED_FACET_TAGS if t in mesh.facet_tags]
    seen: dict[int, str] = {}
    for name in present:
        for k in _undirected_key(mesh.facet_tags[name]):
            k = int(k)
            if k in seen:
                raise MeshError(f"facet tags {seen[k]!r} and {name!r} overlap")
            seen[k] = name

    for name, idx in mesh.element_tags.items():
        if idx.size and (idx.min() < 0 or idx.max() >= mesh.num_triangles):
            raise MeshError(f"element tag {name!r} references a triangle out of range")

    if "gamma" in mesh.facet_tags and all(
        t in mesh.element_tags for t in RESERVED_ELEMENT_TAGS
    ):
        side = np.zeros(mesh.num_triangles, dtype=np.int8)
        side[mesh.element_tags["feature"]] = 1
        side[mesh.element_tags["exterior"]] = 2
        e2t = edge_to_triangle_map(mesh)
        for u, v in mesh.facet_tags["gamma"]:
            tris = e2t[(int(min(u, v)), int(max(u, v)))]
            if len(tris) == 2:
                if {int(side[tris[0]]), int(side[tris[1]])} != {1, 2}:
                    raise MeshError(
                        "gamma edge does not separate feature from exterior"
                    )
            # a single adjacent triangle means the edge is on the domain
            # boundary, which is fine for an already-defeatured mesh


def triangle_quality(mesh: Mesh) -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle minimum interior angle (radians) and minimum edge length."""
    p = mesh.nodes[mesh.triangles]
    v0 = p[:, 1] - p[:, 0]
    v1 = p[:, 2] - p[:, 1]
    v2 = p[:, 0] - p[:, 2]
    l0 = np.hypot(v0[:, 0], v0[:, 1])
    l1 = np.hypot(v1[:, 0], v1[:, 1])
    l2 = np.hypot(v2[:, 0], v2[:, 1])
    # law of cosines per corner
    def ang(a, b, c):  # angle opposite side a
        cosv = (b * b + c * c - a * a) / (2.0 * b * c)
        return np.arccos(np.clip(cosv, -1.0, 1.0))

    a0 = ang(l1, l0, l2)
    a1 = ang(l2, l0, l1)
    a2 = ang(l0, l1, l2)
    angles = np.minimum(np.minimum(a0, a1), a2)
    lengths = np.minimum(np.minimum(l0, l1), l2)
    return angles, lengths


def refine_uniform(mesh: Mesh) -> Mesh:
    """Split every triangle into four by edge midpoints.

    Tags follow: a tagged edge becomes its two halves in the same
    orientation, a tagged triangle becomes its four children.  Node
    numbering keeps the parent nodes first, then midpoints ordered by
    their sorted endpoint pair, so the result is deterministic.
    """
    tri = mesh.triangles
    de = np.concatenate(
        [tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]], axis=0
    )
    key = _undirected_key(de)
    uniq, inverse = np.unique(key, return_inverse=True)
    lo = (uniq >> 32).astype(np.int64)
    hi = (uniq & 0xFFFFFFFF).astype(np.int64)
    mid = 0.5 * (mesh.nodes[lo] + mesh.nodes[hi])
    nodes = np.concatenate([mesh.nodes, mid], axis=0)
    midpoint_id = mesh.num_nodes + np.arange(uniq.size, dtype=np.int64)

    m = tri.shape[0]
    mab = midpoint_id[inverse[0:m]]
    mbc = midpoint_id[inverse[m:2 * m]]
    mca = midpoint_id[inverse[2 * m:3 * m]]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    children = np.empty((4 * m, 3), dtype=np.int64)
    children[0::4] = np.column_stack([a, mab, mca])
    children[1::4] = np.column_stack([mab, b, mbc])
    children[2::4] = np.column_stack([mca, mbc, c])
    children[3::4] = np.column_stack([mab, mbc, mca])

    edge_mid: dict[int, int] = {int(k): int(i) for k, i in zip(uniq, midpoint_id)}
    facet_tags = {}
    for name, edges in mesh.facet_tags.items():
        if edges.size == 0:
            facet_tags[name] = edges.copy()
            continue
        ek = _undirected_key(edges)
        mids = np.array([edge_mid[int(k)] for k in ek], dtype=np.int64)
        halves = np.empty((2 * edges.shape[0], 2), dtype=np.int64)
        halves[0::2, 0] = edges[:, 0]
        halves[0::2, 1] = mids
        halves[1::2, 0] = mids
        halves[1::2, 1] = edges[:, 1]
        facet_tags[name] = halves
    element_tags = {}
    for name, idx in mesh.element_tags.items():
        element_tags[name] = (4 * idx[:, None] + np.arange(4)[None, :]).reshape(-1)
    return Mesh(nodes, children, facet_tags, element_tags)


def _connected(triangles: np.ndarray, n_nodes: int) -> bool:
    """True when the triangles form one node-connected component."""
    if triangles.shape[0] == 0:
        return False
    parent = np.arange(n_nodes, dtype=np.int64)

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for t in triangles:
        r = find(int(t[0]))
        for j in (int(t[1]), int(t[2])):
            rj = find(j)
            if rj != r:
                parent[rj] = r
    used = np.unique(triangles)
    roots = {find(int(i)) for i in used}
    return len(roots) == 1


def extract_exact_submesh(mesh: Mesh) -> tuple[Mesh, np.ndarray]:
    """Drop the feature triangles and renumber.

    Returns the submesh together with ``node_map`` such that
    ``submesh.nodes == mesh.nodes[node_map]``; nodal fields transfer by
    ``values[node_map]``.  Facet tags are filtered to surviving edges.
    """
    for t in RESERVED_ELEMENT_TAGS:
        if t not in mesh.element_tags:
            raise MeshError(f"element tag {t!r} missing; cannot extract")
    keep = np.sort(mesh.element_tags["exterior"])
    if keep.size == 0:
        raise MeshError("exterior region is empty")
    tri = mesh.triangles[keep]
    node_map = np.unique(tri)
    renum = np.full(mesh.num_nodes, -1, dtype=np.int64)
    renum[node_map] = np.arange(node_map.size)
    new_tri = renum[tri]
    if not _connected(new_tri, node_map.size):
        raise MeshError("exact domain is disconnected")

    kept_keys = set(map(int, np.unique(_undirected_key(np.concatenate(
        [new_tri[:, [0, 1]], new_tri[:, [1, 2]], new_tri[:, [2, 0]]], axis=0)))))
    facet_tags = {}
    for name, edges in mesh.facet_tags.items():
        if edges.size == 0:
            continue
        ok = (renum[edges[:, 0]] >= 0) & (renum[edges[:, 1]] >= 0)
        mapped = renum[edges[ok]]
        if mapped.size:
            inmesh = np.array(
                [int(k) in kept_keys for k in _undirected_key(mapped)], dtype=bool
            )
            mapped = mapped[inmesh]
        if mapped.size:
            facet_tags[name] = mapped
    element_tags = {
        "feature": np.empty(0, dtype=np.int64),
        "exterior": np.arange(tri.shape[0], dtype=np.int64),
    }
    sub = Mesh(mesh.nodes[node_map], new_tri, facet_tags, element_tags)
    return sub, node_map


def region_area(mesh: Mesh, region: str) -> float:
    idx = mesh.element_tags.get(region)
    if idx is None:
        raise MeshError(f"no element tag {region!r}")
    return float(np.sum(signed_areas(mesh)[idx]))


def feature_isotropy_ratio(mesh: Mesh) -> float:
    """diam(F)^2 / |F| over the feature triangles; 4/pi for a disk."""
    idx = mesh.element_tags.get("feature")
    if idx is None or idx.size == 0:
        raise MeshError("mesh has no feature triangles")
    area = float(np.sum(signed_areas(mesh)[idx]))
    pts = mesh.nodes[np.unique(mesh.triangles[idx])]
    if pts.shape[0] > 3:
        pts = pts[ConvexHull(pts).vertices]
    d2 = np.max(
        np.sum((pts[:, None, :] - pts[None, :, :]) ** 2, axis=2)
    )
    return float(d2 / area)


def structured_rectangle_mesh(
    nx: int,
    ny: int,
    lower: tuple[float, float] = (0.0, 0.0),
    upper: tuple[float, float] = (1.0, 1.0),
    neumann_top: bool = False,
) -> Mesh:
    """Structured right-triangle mesh of a rectangle.

    The whole boundary is tagged ``GammaD``, or the top side ``GammaN``
    when ``neumann_top`` is set.  Mainly for tests and convergence runs.
    """
    x = np.linspace(lower[0], upper[0], nx + 1)
    y = np.linspace(lower[1], upper[1], ny + 1)
    X, Y = np.meshgrid(x, y, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            n00, n10 = nid(i, j), nid(i + 1, j)
            n01, n11 = nid(i, j + 1), nid(i + 1, j + 1)
            tris.append((n00, n10, n11))
            tris.append((n00, n11, n01))
    tris = np.array(tris, dtype=np.int64)

    bottom = [(nid(i, 0), nid(i + 1, 0)) for i in range(nx)]
    top = [(nid(i + 1, ny), nid(i, ny)) for i in range(nx)][::-1]
    left = [(nid(0, j + 1), nid(0, j)) for j in range(ny)][::-1]
    right = [(nid(nx, j), nid(nx, j + 1)) for j in range(ny)]
    if neumann_top:
        facets = {
            "GammaD": np.array(bottom + right + left, dtype=np.int64),
            "GammaN": np.array(top, dtype=np.int64),
        }
    else:
        facets = {"GammaD": np.array(bottom + right + top + left, dtype=np.int64)}
    element_tags = {
        "feature": np.empty(0, dtype=np.int64),
        "exterior": np.arange(tris.shape[0], dtype=np.int64),
    }
    return Mesh(nodes, tris, facets, element_tags)
