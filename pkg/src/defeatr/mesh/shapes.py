"""Feature geometries: reference shapes normalized to a target boundary length.

A feature is described by the polyline chains that bound it.  Internal
features contribute a single closed chain tagged ``gamma``.  Boundary
features sit on the top side of the outer square and contribute an open
``gamma`` chain (the part of the feature boundary that belongs to the
exact domain) plus an open ``gamma0`` chain along the top side (the part
that only exists on the defeatured domain).  Curved shapes are polygons
fixed at generation time; later mesh refinement does not reproject them.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import MeshError

INTERNAL_SHAPES = ("disk", "square", "star", "c_shape", "l_shape")
BOUNDARY_SHAPES = ("disk", "square", "triangle")

UNIT_SQUARE = np.array(
    [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]], dtype=float
)


@dataclass
class FeatureGeometry:
    """What to cut out of the outer domain.

    ``size`` is the target length of gamma (the defeatured boundary).
    ``segments_per_unit`` controls how finely curved outlines are
    polygonized: that many segments per unit of gamma length, doubled
    until the segment length is below the mesh size h.
    """

    shape: str
    placement: str
    size: float
    alpha_deg: float = 15.0
    outer: np.ndarray = field(default_factory=lambda: UNIT_SQUARE.copy())
    segments_per_unit: int = 64

    def __post_init__(self) -> None:
        self.outer = np.asarray(self.outer, dtype=float)
        if self.placement not in ("internal", "boundary"):
            raise MeshError(f"unknown placement {self.placement!r}")
        allowed = INTERNAL_SHAPES if self.placement == "internal" else BOUNDARY_SHAPES
        if self.shape not in allowed:
            raise MeshError(
                f"shape {self.shape!r} not supported for {self.placement} features"
            )
        if not (self.size > 0.0):
            raise MeshError("feature size must be positive")
        if self.shape == "triangle" and not (0.0 < self.alpha_deg < 180.0):
            raise MeshError("triangle opening angle must be in (0, 180) degrees")


@dataclass
class Chain:
    name: str
    points: np.ndarray  # (k, 2); for closed chains the last point != first
    closed: bool


@dataclass
class FeatureLayout:
    chains: list[Chain]
    loop: np.ndarray            # closed CCW polygon bounding the feature
    top_gap: tuple[float, float] | None  # (x_left, x_right) removed from top side
    exempt_points: np.ndarray   # corners where the input angle is too sharp
    min_edge: float             # smallest constraint edge on the feature


def _curve_segments(geom: FeatureGeometry, h: float) -> int:
    n = int(geom.segments_per_unit)
    while h < 1.0 / n:
        n *= 2
    return n


def _subdivide(p0: np.ndarray, p1: np.ndarray, max_len: float) -> np.ndarray:
    """Points from p0 to p1 inclusive with spacing <= max_len.

    Endpoints are copied bit-exactly so shared chain junctions coincide.
    """
    length = float(np.hypot(*(p1 - p0)))
    n = max(1, int(np.ceil(length / max_len - 1e-12)))
    t = np.linspace(0.0, 1.0, n + 1)
    pts = p0[None, :] + t[:, None] * (p1 - p0)[None, :]
    pts[0] = p0
    pts[-1] = p1
    return pts


def _subdivide_polyline(pts: np.ndarray, max_len: float, close: bool) -> np.ndarray:
    segs = []
    m = pts.shape[0]
    last = m if close else m - 1
    for i in range(last):
        piece = _subdivide(pts[i], pts[(i + 1) % m], max_len)
        segs.append(piece[:-1] if (i < last - 1 or close) else piece)
    return np.concatenate(segs, axis=0)


def _arc(center, radius, phi0, phi1, nseg):
    phi = np.linspace(phi0, phi1, nseg + 1)
    return np.column_stack(
        [center[0] + radius * np.cos(phi), center[1] + radius * np.sin(phi)]
    )


def _polygon_area_centroid(pts: np.ndarray) -> tuple[float, np.ndarray]:
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    return area, np.array([cx, cy])


def _graded_offsets(length: float, s_min: float, slope: float, cap: float) -> np.ndarray:
    """Offsets 0..length with steps growing geometrically away from zero.

    Each step matches slope*d, the gap between the two legs of a sharp
    wedge at distance d from its tip, so the strip between the legs fills
    with near-square cells instead of slivers.  Steps saturate at cap.
    """
    out = [0.0]
    d = s_min
    while d < length:
        out.append(d)
        d = min(d + cap, d * (1.0 + slope))
    out.append(d)
    off = np.array(out)
    off *= length / off[-1]
    return off


def points_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd containment test, vectorized over pts."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(pts.shape[0], dtype=bool)
    m = poly.shape[0]
    for i in range(m):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % m]
        straddles = (y0 > y) != (y1 > y)
        if not np.any(straddles):
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= straddles & (x < xi)
    return inside


# internal outlines are centered on their area centroid; sample them finely
# enough that data varying on the centroid-clearance scale is resolved
_DATA_RESOLVE = 8.0


def _origin_clearance(loop: np.ndarray) -> float:
    """Distance from the origin to a closed polyline."""
    a = loop
    b = np.roll(loop, -1, axis=0)
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    t = np.clip(-np.einsum("ij,ij->i", a, ab) / np.maximum(denom, 1e-300), 0.0, 1.0)
    closest = a + t[:, None] * ab
    return float(np.min(np.hypot(closest[:, 0], closest[:, 1])))


def _internal_disk(size: float, nseg: int) -> np.ndarray:
    r = size / (2.0 * np.pi)
    phi = 2.0 * np.pi * np.arange(nseg) / nseg
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def _internal_square(size: float, ell: float) -> np.ndarray:
    s = size / 4.0
    corners = 0.5 * s * np.array([[1, -1], [1, 1], [-1, 1], [-1, -1]], dtype=float)
    return _subdivide_polyline(corners, ell, close=True)


def _internal_star(size: float, ell: float) -> np.ndarray:
    # five-point star, inner radius half the outer radius
    k = np.arange(10)
    phi = np.pi / 2.0 + np.pi * k / 5.0
    rad = np.where(k % 2 == 0, 1.0, 0.5)
    unit = np.column_stack([rad * np.cos(phi), rad * np.sin(phi)])
    per_unit = float(np.sum(np.hypot(*np.diff(
        np.vstack([unit, unit[:1]]), axis=0).T)))
    r_out = size / per_unit
    return _subdivide_polyline(unit * r_out, ell, close=True)


def _internal_c_shape(size: float, nseg: int) -> np.ndarray:
    # half annulus opening to +x, wall thickness one fifth of the outer
    # radius, rounded caps; total outline length is exactly 2*pi*r_out
    r_out = size / (2.0 * np.pi)
    r_in = 0.8 * r_out
    r_cap = 0.1 * r_out
    n_out = max(4, round(0.50 * nseg))
    n_in = max(4, round(0.40 * nseg))
    n_cap = max(3, round(0.05 * nseg))
    outer = _arc((0.0, 0.0), r_out, np.pi / 2, 3 * np.pi / 2, n_out)
    cap_lo = _arc((0.0, -0.9 * r_out), r_cap, -np.pi / 2, np.pi / 2, n_cap)
    inner = _arc((0.0, 0.0), r_in, 3 * np.pi / 2, np.pi / 2, n_in)
    cap_hi = _arc((0.0, 0.9 * r_out), r_cap, -np.pi / 2, np.pi / 2, n_cap)
    loop = np.concatenate(
        [outer[:-1], cap_lo[:-1], inner[:-1], cap_hi[:-1]], axis=0
    )
    _, c = _polygon_area_centroid(loop)
    return loop - c[None, :]


def _internal_l_shape(size: float, ell: float) -> np.ndarray:
    u = size / 30.0
    corners = u * np.array(
        [[0, 0], [5, 0], [5, 2], [2, 2], [2, 10], [0, 10]], dtype=float
    )
    _, c = _polygon_area_centroid(corners)
    return _subdivide_polyline(corners - c[None, :], ell, close=True)


def build_layout(geom: FeatureGeometry, h: float) -> FeatureLayout:
    """Produce the constraint chains of a feature at mesh size h."""
    size = geom.size
    ell = h * size
    nseg = _curve_segments(geom, h)
    top = float(np.max(geom.outer[:, 1]))  # boundary features sit on y = top

    if geom.placement == "internal":
        if geom.shape == "disk":
            loop = _internal_disk(size, nseg)
        elif geom.shape == "square":
            loop = _internal_square(size, ell)
        elif geom.shape == "star":
            loop = _internal_star(size, ell)
        elif geom.shape == "c_shape":
            loop = _internal_c_shape(size, nseg)
        else:
            loop = _internal_l_shape(size, ell)
        # theta-parameterized data varies on the scale of the centroid
        # clearance, so the outline sampling must go below that scale or
        # trace integrals stall at a mesh-independent resolution error
        cap = _origin_clearance(loop) / _DATA_RESOLVE
        loop = _subdivide_polyline(loop, cap, close=True)
        lo = loop.min(axis=0)
        hi = loop.max(axis=0)
        olo = geom.outer.min(axis=0)
        ohi = geom.outer.max(axis=0)
        margin = float(
            min(lo[0] - olo[0], lo[1] - olo[1], ohi[0] - hi[0], ohi[1] - hi[1])
        )
        if margin <= 0.0:
            raise MeshError("internal feature reaches the outer boundary")
        if margin < h:
            raise MeshError("internal feature closer than h to the outer boundary")
        d = np.diff(np.vstack([loop, loop[:1]]), axis=0)
        min_edge = float(np.min(np.hypot(d[:, 0], d[:, 1])))
        return FeatureLayout(
            chains=[Chain("gamma", loop, closed=True)],
            loop=loop,
            top_gap=None,
            exempt_points=np.empty((0, 2)),
            min_edge=min_edge,
        )

    # boundary features on the top side
    exempt = np.empty((0, 2))
    if geom.shape == "disk":
        r = size / np.pi
        n = max(4, nseg)
        gamma = _arc((0.0, top), r, np.pi, 2.0 * np.pi, n)
        gamma[0] = (-r, top)
        gamma[-1] = (r, top)
    elif geom.shape == "square":
        s = size / 3.0
        corners = np.array(
            [[-0.5 * s, top], [-0.5 * s, top - s], [0.5 * s, top - s], [0.5 * s, top]]
        )
        gamma = _subdivide_polyline(corners, ell, close=False)
    else:  # triangle wedge with opening angle alpha at the buried tip
        alpha = np.deg2rad(geom.alpha_deg)
        leg = 0.5 * size
        w = leg * np.sin(0.5 * alpha)
        depth = leg * np.cos(0.5 * alpha)
        tip = np.array([0.0, top - depth])
        s_min = ell * max(np.sin(0.5 * alpha), 1e-3)
        off = _graded_offsets(leg, s_min, 2.0 * np.sin(0.5 * alpha), ell)
        left = np.array([-w, top])
        right = np.array([w, top])
        leg_l = tip[None, :] + (off / leg)[:, None] * (left - tip)[None, :]
        leg_r = tip[None, :] + (off / leg)[:, None] * (right - tip)[None, :]
        leg_l[0] = tip
        leg_l[-1] = left
        leg_r[0] = tip
        leg_r[-1] = right
        gamma = np.concatenate([leg_l[::-1], leg_r[1:]], axis=0)
        if geom.alpha_deg < 40.0:
            exempt = tip[None, :]

    xl, xr = float(gamma[0, 0]), float(gamma[-1, 0])
    if not (xl < xr):
        raise MeshError("degenerate boundary feature")
    if xr - xl >= 0.9 * (geom.outer[:, 0].max() - geom.outer[:, 0].min()):
        raise MeshError("boundary feature too wide for the outer domain")
    if float(np.min(gamma[:, 1])) <= geom.outer[:, 1].min() + 0.05 * (
        geom.outer[:, 1].max() - geom.outer[:, 1].min()
    ):
        raise MeshError("boundary feature too deep for the outer domain")

    # gamma0 runs right to left along the top, matching the CCW outer walk
    gamma0 = _subdivide(np.array([xr, top]), np.array([xl, top]), ell)
    loop = np.concatenate([gamma, gamma0[1:-1]], axis=0)
    d = np.diff(gamma, axis=0)
    min_edge = float(np.min(np.hypot(d[:, 0], d[:, 1])))
    return FeatureLayout(
        chains=[Chain("gamma", gamma, closed=False),
                Chain("gamma0", gamma0, closed=False)],
        loop=loop,
        top_gap=(xl, xr),
        exempt_points=exempt,
        min_edge=min_edge,
    )
