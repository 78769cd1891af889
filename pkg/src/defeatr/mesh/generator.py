"""Graded conforming triangulation of an outer polygon with one feature.

Strategy: lay down hexagonal point lattices at geometrically growing
spacings, keeping each lattice only where a sizing field (distance to the
feature, clamped to the background size h) matches its spacing; then
Delaunay-triangulate, recover any missing constraint edges by midpoint
insertion, and relax interior points.  The feature outline and the outer
boundary are constraint chains whose segments must appear as mesh edges,
so the triangles inside the feature outline form an exactly removable
region.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay, cKDTree

from ..errors import MeshError, TriangulationError
from .core import Mesh, orient_ccw, signed_areas, triangle_quality, validate
from .shapes import (
    FeatureGeometry,
    FeatureLayout,
    build_layout,
    points_in_polygon,
)

GRADING = 0.3            # sizing growth per unit distance from the feature
MIN_ANGLE_DEG = 20.0     # quality gate, sharp input corners exempt
_CLEAR_GEN = 0.75        # candidate-to-constraint clearance, in local sizes
_CLEAR_MOVE = 0.70       # same during smoothing
_CLEAR_CROSS = 0.62      # candidate-to-accepted-candidate clearance
_CLEAR_FIX = 0.50        # repair insertions squeeze closer than fresh points
_CLEAR_FIX_FREE = 0.42
_LEVEL_RATIO = 1.5


class _SizingField:
    """min over attractors of (radius + GRADING * distance), clamped to h."""

    def __init__(self, h: float):
        self.h = float(h)
        self.pts: list[np.ndarray] = []
        self.radii: list[float] = []
        self._tree: cKDTree | None = None

    def add(self, point, radius: float) -> None:
        self.pts.append(np.asarray(point, dtype=float))
        self.radii.append(float(radius))
        self._tree = None

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        if not self.pts:
            return np.full(pts.shape[0], self.h)
        if self._tree is None:
            self._tree = cKDTree(np.array(self.pts))
            self._radii = np.array(self.radii)
        k = min(12, len(self.pts))
        d, idx = self._tree.query(pts, k=k)
        if k == 1:
            d = d[:, None]
            idx = idx[:, None]
        val = np.min(self._radii[idx] + GRADING * d, axis=1)
        return np.minimum(val, self.h)

    @property
    def min_radius(self) -> float:
        return min(self.radii) if self.radii else self.h


class _PointPool:
    """Deduplicating registry for constraint points (exact coordinates)."""

    def __init__(self):
        self.coords: list[tuple[float, float]] = []
        self._index: dict[tuple[float, float], int] = {}

    def add(self, p) -> int:
        key = (float(p[0]), float(p[1]))
        i = self._index.get(key)
        if i is None:
            i = len(self.coords)
            self.coords.append(key)
            self._index[key] = i
        return i

    def array(self) -> np.ndarray:
        return np.array(self.coords, dtype=float)


def _hex_candidates(bbox, sigma: float, parity_anchor=(0.0, 0.0)) -> np.ndarray:
    (xmin, ymin), (xmax, ymax) = bbox
    ax = parity_anchor[0] + 0.5 * sigma
    ay = parity_anchor[1] + 0.25 * np.sqrt(3.0) * sigma
    dy = 0.5 * np.sqrt(3.0) * sigma
    j0 = int(np.floor((ymin - ay) / dy)) - 1
    j1 = int(np.ceil((ymax - ay) / dy)) + 1
    i0 = int(np.floor((xmin - ax) / sigma)) - 1
    i1 = int(np.ceil((xmax - ax) / sigma)) + 1
    jj = np.arange(j0, j1 + 1)
    ii = np.arange(i0, i1 + 1)
    I, J = np.meshgrid(ii, jj, indexing="xy")
    X = ax + sigma * (I + 0.5 * (J % 2))
    Y = ay + dy * J
    pts = np.column_stack([X.ravel(), Y.ravel()])
    keep = (
        (pts[:, 0] >= xmin) & (pts[:, 0] <= xmax)
        & (pts[:, 1] >= ymin) & (pts[:, 1] <= ymax)
    )
    return pts[keep]


def _walk_side(p0: np.ndarray, p1: np.ndarray, field: _SizingField) -> np.ndarray:
    """Subdivide the straight segment p0->p1 with spacing from the field."""
    length = float(np.hypot(*(p1 - p0)))
    direction = (p1 - p0) / length
    offsets = [0.0]
    while offsets[-1] < length:
        here = p0 + offsets[-1] * direction
        step = float(field(here[None, :])[0])
        offsets.append(offsets[-1] + step)
    off = np.array(offsets)
    if off.size == 2:
        return np.vstack([p0, p1])
    off *= length / off[-1]
    pts = p0[None, :] + off[:, None] * direction[None, :]
    pts[0] = p0
    pts[-1] = p1
    return pts


class _Triangulator:
    def __init__(self, outer: np.ndarray, h: float):
        self.outer = np.asarray(outer, dtype=float)
        self.h = float(h)
        self.pool = _PointPool()
        self.segments: list[list[int]] = []
        self.chains: list[tuple[str, list[int], bool]] = []
        self.field = _SizingField(h)
        self.free = np.empty((0, 2))
        self._tri: Delaunay | None = None

    # -- constraint setup -------------------------------------------------

    def add_chain(self, name: str, pts: np.ndarray, closed: bool) -> list[int]:
        ids = [self.pool.add(p) for p in pts]
        self.chains.append((name, ids, closed))
        pairs = list(zip(ids, ids[1:]))
        if closed:
            pairs.append((ids[-1], ids[0]))
        for a, b in pairs:
            self.segments.append([a, b])
        return ids

    def add_feature_attractors(self, chain_ids: list[int]) -> None:
        coords = self.pool.array()
        for pos, i in enumerate(chain_ids):
            nbrs = []
            if pos > 0:
                nbrs.append(chain_ids[pos - 1])
            if pos + 1 < len(chain_ids):
                nbrs.append(chain_ids[pos + 1])
            r = min(
                float(np.hypot(*(coords[i] - coords[j]))) for j in nbrs
            )
            self.field.add(coords[i], r)

    # -- free point placement ---------------------------------------------

    def place_free_points(self) -> None:
        h = self.h
        lmin = self.field.min_radius
        levels = max(0, int(np.ceil(np.log(h / lmin) / np.log(_LEVEL_RATIO))))
        sigmas = [h / _LEVEL_RATIO ** (levels - k) for k in range(levels + 1)]
        fixed = self.pool.array()
        clearance = cKDTree(fixed)
        olo = self.outer.min(axis=0)
        ohi = self.outer.max(axis=0)
        if self.field.pts:
            apts = np.array(self.field.pts)
            arad = np.array(self.field.radii)
        accepted: list[np.ndarray] = []
        trees: list[cKDTree | None] = []
        for k, sigma in enumerate(sigmas):
            if k < levels:
                # field values below sigma_{k+1} only occur near attractors
                # whose own radius is that small, so the lattice can hug them
                sel = arad < sigmas[k + 1]
                if not np.any(sel):
                    accepted.append(np.empty((0, 2)))
                    trees.append(None)
                    continue
                alo = apts[sel].min(axis=0)
                ahi = apts[sel].max(axis=0)
                reach = sigmas[k + 1] / GRADING + 2.0 * sigma
                bbox = (np.maximum(alo - reach, olo), np.minimum(ahi + reach, ohi))
            else:
                bbox = (olo, ohi)
            cand = _hex_candidates(bbox, sigma)
            if cand.size == 0:
                accepted.append(np.empty((0, 2)))
                trees.append(None)
                continue
            v = self.field(cand)
            if k < levels:
                band = (v >= sigma) & (v < sigmas[k + 1])
            else:
                band = v >= sigma * (1.0 - 1e-12)
            cand, v = cand[band], v[band]
            if cand.size:
                inside = points_in_polygon(cand, self.outer)
                cand, v = cand[inside], v[inside]
            if cand.size:
                d, _ = clearance.query(cand)
                keep = d >= _CLEAR_GEN * v
                cand, v = cand[keep], v[keep]
            if cand.size:
                for back in (k - 1, k - 2):
                    if back >= 0 and trees[back] is not None and cand.size:
                        d, _ = trees[back].query(cand)
                        keep = d >= _CLEAR_CROSS * v
                        cand, v = cand[keep], v[keep]
            accepted.append(cand)
            trees.append(cKDTree(cand) if cand.size else None)
        self.free = (
            np.concatenate([a for a in accepted if a.size], axis=0)
            if any(a.size for a in accepted)
            else np.empty((0, 2))
        )

    # -- triangulate, recover, smooth ---------------------------------------

    def _points(self) -> np.ndarray:
        fixed = self.pool.array()
        if self.free.size:
            return np.concatenate([fixed, self.free], axis=0)
        return fixed

    def _split_segment(self, seg_index: int) -> int:
        a, b = self.segments[seg_index]
        coords = self.pool.array()
        mid = 0.5 * (coords[a] + coords[b])
        m = self.pool.add(mid)
        self.segments[seg_index] = [a, m]
        self.segments.append([m, b])
        for name, ids, closed in self.chains:
            n = len(ids)
            last = n if closed else n - 1
            for pos in range(last):
                u, v = ids[pos], ids[(pos + 1) % n]
                if (u, v) == (a, b) or (u, v) == (b, a):
                    ids.insert(pos + 1, m)
                    break
            else:
                continue
            break
        # keep the sizing field aware of the finer local spacing
        if self.field.pts:
            self.field.add(mid, 0.5 * float(np.hypot(*(coords[b] - coords[a]))))
        return m

    def triangulate_with_recovery(self, max_rounds: int = 15) -> Delaunay:
        for _ in range(max_rounds):
            pts = self._points()
            tri = Delaunay(pts)
            have = set(
                map(int, np.unique(self._edge_keys(tri.simplices)))
            )
            missing = [
                i
                for i, (a, b) in enumerate(self.segments)
                if (min(a, b) << 32 | max(a, b)) not in have
            ]
            if not missing:
                self._tri = tri
                return tri
            kill: list[int] = []
            to_split: list[int] = []
            coords = self.pool.array()
            for i in missing:
                a, b = self.segments[i]
                mid = 0.5 * (coords[a] + coords[b])
                rad = 0.5 * float(np.hypot(*(coords[b] - coords[a])))
                enc: list[int] = []
                if self.free.size:
                    d = np.hypot(
                        self.free[:, 0] - mid[0], self.free[:, 1] - mid[1]
                    )
                    enc = np.nonzero(d < rad * 0.999)[0].tolist()
                if enc:
                    # a free point blocks the segment: remove it rather
                    # than split, which would break the local grading
                    kill.extend(enc)
                else:
                    to_split.append(i)
            for i in to_split:
                self._split_segment(i)
            if kill:
                keep = np.ones(self.free.shape[0], dtype=bool)
                keep[kill] = False
                self.free = self.free[keep]
        bad = self.segments[missing[0]]
        raise TriangulationError(
            f"could not recover constraint segment between nodes {bad}"
        )

    @staticmethod
    def _edge_keys(simplices: np.ndarray) -> np.ndarray:
        e = np.concatenate(
            [simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [2, 0]]],
            axis=0,
        ).astype(np.int64)
        lo = np.minimum(e[:, 0], e[:, 1])
        hi = np.maximum(e[:, 0], e[:, 1])
        return lo << 32 | hi

    def smooth(self, rounds: int = 3, relax: float = 0.65) -> None:
        n_fixed = len(self.pool.coords)
        for _ in range(rounds):
            tri = self.triangulate_with_recovery()
            n_fixed = len(self.pool.coords)
            if self.free.shape[0] == 0:
                return
            pts = self._points()
            e = np.concatenate(
                [tri.simplices[:, [0, 1]], tri.simplices[:, [1, 2]],
                 tri.simplices[:, [2, 0]]], axis=0
            ).astype(np.int64)
            lo = np.minimum(e[:, 0], e[:, 1])
            hi = np.maximum(e[:, 0], e[:, 1])
            uniq = np.unique(lo << 32 | hi)
            ua = (uniq >> 32).astype(np.int64)
            ub = (uniq & 0xFFFFFFFF).astype(np.int64)
            acc = np.zeros_like(pts)
            cnt = np.zeros(pts.shape[0])
            np.add.at(acc, ua, pts[ub])
            np.add.at(acc, ub, pts[ua])
            np.add.at(cnt, ua, 1.0)
            np.add.at(cnt, ub, 1.0)
            target = acc / np.maximum(cnt, 1.0)[:, None]
            moved = pts[n_fixed:] + relax * (target[n_fixed:] - pts[n_fixed:])
            ok = points_in_polygon(moved, self.outer)
            clearance = cKDTree(self.pool.array())
            d, _ = clearance.query(moved)
            ok &= d >= _CLEAR_MOVE * self.field(moved)
            self.free = np.where(ok[:, None], moved, pts[n_fixed:])
        self.triangulate_with_recovery()

    def improve_quality(
        self,
        exempt_pts: np.ndarray | None,
        exempt_radius: float,
        max_rounds: int = 8,
    ) -> None:
        min_angle = np.deg2rad(MIN_ANGLE_DEG)
        for _ in range(max_rounds):
            tri = self.triangulate_with_recovery()
            pts = self._points()
            simplices = orient_ccw(tri.simplices.astype(np.int64), pts)
            mesh = Mesh(pts, simplices)
            angles, _ = triangle_quality(mesh)
            bad = angles < min_angle
            bad &= ~_sharp_zone_mask(pts, simplices, exempt_pts, exempt_radius)
            if not np.any(bad):
                return
            bad_tris = simplices[bad]
            p = pts[bad_tris]
            # circumcenters of the offending triangles
            a, b, c = p[:, 0], p[:, 1], p[:, 2]
            d = 2.0 * (
                a[:, 0] * (b[:, 1] - c[:, 1])
                + b[:, 0] * (c[:, 1] - a[:, 1])
                + c[:, 0] * (a[:, 1] - b[:, 1])
            )
            a2 = np.sum(a * a, axis=1)
            b2 = np.sum(b * b, axis=1)
            c2 = np.sum(c * c, axis=1)
            ux = (a2 * (b[:, 1] - c[:, 1]) + b2 * (c[:, 1] - a[:, 1])
                  + c2 * (a[:, 1] - b[:, 1])) / d
            uy = (a2 * (c[:, 0] - b[:, 0]) + b2 * (a[:, 0] - c[:, 0])
                  + c2 * (b[:, 0] - a[:, 0])) / d
            cand = np.column_stack([ux, uy])
            okc = points_in_polygon(cand, self.outer)
            clearance = cKDTree(self.pool.array())
            dd, _ = clearance.query(cand)
            okc &= dd >= _CLEAR_FIX * self.field(cand)
            if self.free.size:
                dd, _ = cKDTree(self.free).query(cand)
                okc &= dd >= _CLEAR_FIX_FREE * self.field(cand)
            progressed = bool(np.any(okc))
            if progressed:
                self.free = np.concatenate([self.free, cand[okc]], axis=0)
            # circumcenter rejected (outside the domain or crowding a
            # neighbor): split the triangle's constrained edge instead,
            # the usual way out for slivers pinned to the boundary
            if not np.all(okc):
                progressed |= self._split_blocked(pts, bad_tris[~okc])
            if not progressed:
                return

    def _split_blocked(self, pts: np.ndarray, tris: np.ndarray) -> bool:
        seg_index = {
            (min(a, b), max(a, b)): i for i, (a, b) in enumerate(self.segments)
        }
        n_fixed = len(self.pool.coords)
        consumed: set[tuple[int, int]] = set()
        extra: list[np.ndarray] = []
        progressed = False
        for t in tris:
            edges = [(int(t[0]), int(t[1])), (int(t[1]), int(t[2])),
                     (int(t[2]), int(t[0]))]
            edges.sort(key=lambda e: -float(np.hypot(*(pts[e[1]] - pts[e[0]]))))
            done = False
            for u, v in edges:
                key = (min(u, v), max(u, v))
                si = seg_index.get(key)
                if si is None or key in consumed:
                    continue
                consumed.add(key)
                self._split_segment(si)
                progressed = True
                done = True
                break
            if done:
                continue
            (u, v) = edges[0]
            if u < n_fixed and v < n_fixed:
                continue  # fixed but unconstrained edge: leave it alone
            mid = 0.5 * (pts[u] + pts[v])
            if not points_in_polygon(mid[None, :], self.outer)[0]:
                continue
            fld = float(self.field(mid[None, :])[0])
            dp, _ = cKDTree(self.pool.array()).query(mid)
            if dp < 0.3 * fld:
                continue
            if self.free.size:
                df, _ = cKDTree(self.free).query(mid)
                if df < 0.3 * fld:
                    continue
            extra.append(mid)
            progressed = True
        if extra:
            self.free = np.concatenate([self.free, np.array(extra)], axis=0)
        return progressed


def _sharp_zone_mask(
    pts: np.ndarray,
    simplices: np.ndarray,
    exempt_pts: np.ndarray | None,
    radius: float,
) -> np.ndarray:
    """Triangles with a vertex near a too-sharp input corner.

    A wedge of opening angle alpha has width alpha*d at distance d from
    its tip, so within one target edge of the tip no isotropic point set
    can avoid angles below the gate; those triangles are excused.
    """
    if exempt_pts is None or exempt_pts.size == 0:
        return np.zeros(simplices.shape[0], dtype=bool)
    node = np.zeros(pts.shape[0], dtype=bool)
    for e in np.atleast_2d(exempt_pts):
        node |= np.hypot(pts[:, 0] - e[0], pts[:, 1] - e[1]) <= radius
    return node[simplices].any(axis=1)


def _finalize(
    tr: _Triangulator,
    feature_loop: np.ndarray | None,
    tag_of_chain: dict[int, str],
    size_cap: float | None,
    exempt_pts: np.ndarray | None,
    exempt_radius: float,
) -> Mesh:
    tri = tr.triangulate_with_recovery()
    pts = tr._points()
    simplices = orient_ccw(tri.simplices.astype(np.int64), pts)

    centroids = pts[simplices].mean(axis=1)
    inside_outer = points_in_polygon(centroids, tr.outer)
    if not np.all(inside_outer):
        keepers = np.nonzero(inside_outer)[0]
        simplices = simplices[keepers]
        centroids = centroids[keepers]

    used = np.unique(simplices)
    if used.size != pts.shape[0]:
        renum = np.full(pts.shape[0], -1, dtype=np.int64)
        renum[used] = np.arange(used.size)
        pts = pts[used]
        simplices = renum[simplices]
        idmap = renum
    else:
        idmap = np.arange(pts.shape[0], dtype=np.int64)

    if feature_loop is not None:
        in_feat = points_in_polygon(centroids, feature_loop)
    else:
        in_feat = np.zeros(simplices.shape[0], dtype=bool)
    element_tags = {
        "feature": np.nonzero(in_feat)[0].astype(np.int64),
        "exterior": np.nonzero(~in_feat)[0].astype(np.int64),
    }

    facet_tags: dict[str, list] = {}
    for ci, (name, ids, closed) in enumerate(tr.chains):
        tag = tag_of_chain.get(ci, name)
        pairs = list(zip(ids, ids[1:]))
        if closed:
            pairs.append((ids[-1], ids[0]))
        facet_tags.setdefault(tag, []).extend(
            (int(idmap[a]), int(idmap[b])) for a, b in pairs
        )
    facets = {k: np.array(v, dtype=np.int64) for k, v in facet_tags.items()}

    mesh = Mesh(pts, simplices, facets, element_tags)
    validate(mesh)

    angles, _ = triangle_quality(mesh)
    bad = angles < np.deg2rad(MIN_ANGLE_DEG) * (1.0 - 1e-9)
    bad &= ~_sharp_zone_mask(pts, simplices, exempt_pts, exempt_radius)
    if np.any(bad):
        worst = float(np.rad2deg(angles[bad].min()))
        raise TriangulationError(
            f"quality gate failed: minimum angle {worst:.2f} degrees"
        )
    if size_cap is not None and "gamma" in facets:
        ge = facets["gamma"]
        lens = np.hypot(*(mesh.nodes[ge[:, 1]] - mesh.nodes[ge[:, 0]]).T)
        if float(lens.max()) > size_cap * (1.0 + 1e-9):
            raise TriangulationError("gamma edge exceeds the target edge length")
    return mesh


def generate_template(
    geometry: FeatureGeometry,
    h: float,
    *,
    neumann_top: bool = False,
    grade_center: bool = False,
) -> Mesh:
    """Mesh the outer domain with the feature outline built in.

    Returns a mesh of the full outer polygon whose triangles are tagged
    ``feature`` inside the feature outline and ``exterior`` outside, with
    facet tags ``gamma`` (and ``gamma0`` for boundary features) on the
    outline and ``GammaD``/``GammaN`` on the outer boundary.  The exact
    domain is obtained with :func:`extract_exact_submesh`.
    """
    if not (0.0 < h < 1.0):
        raise MeshError("mesh size h must be in (0, 1)")
    layout = build_layout(geometry, h)
    tr = _Triangulator(geometry.outer, h)

    tag_of_chain: dict[int, str] = {}
    for chain in layout.chains:
        ci = len(tr.chains)
        ids = tr.add_chain(chain.name, chain.points, chain.closed)
        tag_of_chain[ci] = chain.name
        tr.add_feature_attractors(ids)

    if grade_center and geometry.placement == "internal":
        loop = layout.loop
        d2 = np.sum((loop[:, None, :] - loop[None, :, :]) ** 2, axis=2)
        diam = float(np.sqrt(d2.max()))
        tr.field.add(np.array([0.0, 0.0]), diam / 8.0)

    # outer boundary, walked CCW starting from the first polygon vertex
    outer = geometry.outer
    top = float(np.max(outer[:, 1]))
    nv = outer.shape[0]
    for i in range(nv):
        p0, p1 = outer[i], outer[(i + 1) % nv]
        side_tag = "GammaN" if (
            neumann_top and p0[1] == top and p1[1] == top
        ) else "GammaD"
        if (
            layout.top_gap is not None
            and p0[1] == top and p1[1] == top
        ):
            xl, xr = layout.top_gap
            # CCW walk traverses the top side from +x to -x
            a = np.array([xr, top])
            b = np.array([xl, top])
            ci = len(tr.chains)
            tr.add_chain(side_tag, _walk_side(p0, a, tr.field), False)
            tag_of_chain[ci] = side_tag
            ci = len(tr.chains)
            tr.add_chain(side_tag, _walk_side(b, p1, tr.field), False)
            tag_of_chain[ci] = side_tag
        else:
            ci = len(tr.chains)
            tr.add_chain(side_tag, _walk_side(p0, p1, tr.field), False)
            tag_of_chain[ci] = side_tag

    exempt_pts = layout.exempt_points if layout.exempt_points.size else None
    exempt_radius = 0.5 * h * geometry.size

    tr.place_free_points()
    tr.triangulate_with_recovery()
    tr.smooth()
    tr.improve_quality(exempt_pts, exempt_radius)
    tr.smooth(rounds=1)
    tr.improve_quality(exempt_pts, exempt_radius)

    return _finalize(
        tr,
        layout.loop,
        tag_of_chain,
        size_cap=h * geometry.size,
        exempt_pts=exempt_pts,
        exempt_radius=exempt_radius,
    )


def polygon_mesh(vertices: np.ndarray, h: float, tag: str = "GammaD") -> Mesh:
    """Uniform unstructured mesh of a polygon, whole boundary under one tag."""
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim != 2 or vertices.shape[0] < 3:
        raise MeshError("polygon needs at least three vertices")
    tr = _Triangulator(vertices, h)
    tag_of_chain: dict[int, str] = {}
    nv = vertices.shape[0]
    for i in range(nv):
        ci = len(tr.chains)
        tr.add_chain(tag, _walk_side(vertices[i], vertices[(i + 1) % nv], tr.field), False)
        tag_of_chain[ci] = tag
    tr.place_free_points()
    tr.triangulate_with_recovery()
    tr.smooth()
    tr.improve_quality(None, 0.0)
    tr.smooth(rounds=1)
    tr.improve_quality(None, 0.0)
    return _finalize(
        tr, None, tag_of_chain, size_cap=None, exempt_pts=None, exempt_radius=0.0
    )
