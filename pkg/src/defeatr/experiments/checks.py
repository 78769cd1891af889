"""Self-contained verification suites behind ``defeatr verify``.

Each suite exercises one invariant the rest of the package leans on:
solver exactness on linears, the H1 convergence rate, the exact scaling
laws of the trace quantities, stability of the Poincare and interpolation
ratios under trace refinement, estimator homogeneity, and a miniature
reliability run of the DD pipeline.  Everything is seeded, so the report
is identical across runs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import boundary, estimators, fem
from ..boundary import BoundaryTrace, fractional_gram, fractional_seminorm_half
from ..mesh import (
    FeatureGeometry,
    extract_exact_submesh,
    generate_template,
    signed_areas,
    structured_rectangle_mesh,
)
from .catalog import g_sin_top

DEFAULT_SEED = 0x5EED
N_TRACES = 200
MAX_DRIFT = 0.20


@dataclass(frozen=True)
class SuiteResult:
    suite: str
    passed: bool
    detail: str


def _h1_error(u: fem.FEFunction, grad_exact) -> float:
    """H1-seminorm distance to a smooth field, edge-midpoint quadrature."""
    mesh = u.mesh
    p = mesh.nodes[mesh.triangles]
    v = u.values[mesh.triangles]
    area = signed_areas(mesh)
    x, y = p[..., 0], p[..., 1]
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    gx = np.sum(b * v, axis=1) / (2.0 * area)
    gy = np.sum(c * v, axis=1) / (2.0 * area)
    mids = 0.5 * (p + np.roll(p, -1, axis=1))
    ex, ey = grad_exact(mids[..., 0], mids[..., 1])
    dx = gx[:, None] - ex
    dy = gy[:, None] - ey
    return float(np.sqrt(np.sum(area[:, None] / 3.0 * (dx * dx + dy * dy))))


def patch_test() -> SuiteResult:
    mesh = structured_rectangle_mesh(8, 8)
    exact = lambda x, y: 1.0 + 2.0 * x + 3.0 * y
    u = fem.solve_poisson(mesh, fem.PoissonProblem(0.0, {"GammaD": exact}), tol=1e-14)
    err = float(np.max(np.abs(u.values - exact(mesh.nodes[:, 0], mesh.nodes[:, 1]))))
    return SuiteResult("patch_test", err <= 1e-10, f"max nodal error {err:.3e}")


def convergence() -> SuiteResult:
    def source(x, y):
        return 2.0 * np.pi ** 2 * np.sin(np.pi * x) * np.sin(np.pi * y)

    def grad(x, y):
        return (np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
                np.pi * np.sin(np.pi * x) * np.cos(np.pi * y))

    hs, errs = [], []
    for nx in (8, 16, 32, 64):
        mesh = structured_rectangle_mesh(nx, nx)
        u = fem.solve_poisson(mesh, fem.PoissonProblem(source, {"GammaD": 0.0}))
        hs.append(1.0 / nx)
        errs.append(_h1_error(u, grad))
    rate = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return SuiteResult(
        "convergence", abs(rate - 1.0) <= 0.15,
        f"H1 rate {rate:.3f} over h=1/8..1/64"
    )


def _wiggly_open_trace(rng: np.random.Generator, m: int = 33) -> BoundaryTrace:
    s = np.linspace(0.0, 1.0, m)
    pts = np.column_stack([s, 0.1 * np.sin(2.0 * np.pi * s)])
    return BoundaryTrace(pts, rng.uniform(-1.0, 1.0, m))


def scaling(seed: int = DEFAULT_SEED) -> SuiteResult:
    rng = np.random.default_rng(seed)
    t = _wiggly_open_trace(rng)
    base = (
        boundary.l2_norm(t),
        boundary.tangential_gradient_l2(t),
        fractional_seminorm_half(t),
    )
    worst = 0.0
    for lam in (0.1, 1.0, 10.0):
        ts = BoundaryTrace(lam * t.points, t.values)
        got = (
            boundary.l2_norm(ts),
            boundary.tangential_gradient_l2(ts),
            fractional_seminorm_half(ts),
        )
        want = (base[0] * lam ** 0.5, base[1] * lam ** -0.5, base[2])
        worst = max(worst, max(abs(g - w) / w for g, w in zip(got, want)))
    return SuiteResult(
        "scaling", worst <= 1e-9,
        f"max relative deviation {worst:.2e} over lambda in 0.1,1,10"
    )


def _square_loop(per_side: int) -> np.ndarray:
    t = np.arange(per_side) / per_side
    one = np.ones_like(t)
    return np.concatenate([
        np.column_stack([t, 0.0 * one]),
        np.column_stack([one, t]),
        np.column_stack([1.0 - t, one]),
        np.column_stack([0.0 * one, 1.0 - t]),
    ])


def _circle_loop(m: int, radius: float) -> np.ndarray:
    ang = 2.0 * np.pi * np.arange(m) / m
    return radius * np.column_stack([np.cos(ang), np.sin(ang)])


def _refine_closed(points: np.ndarray, values: np.ndarray):
    """Midpoint refinement carrying the same piecewise-linear function."""
    nxt_p = np.roll(points, -1, axis=0)
    pts = np.empty((2 * points.shape[0], 2))
    pts[0::2] = points
    pts[1::2] = 0.5 * (points + nxt_p)
    vals = np.empty(2 * values.size)
    vals[0::2] = values
    vals[1::2] = 0.5 * (values + np.roll(values, -1))
    return pts, vals


def _drift_suite(name, ratios0, ratios1, extra=""):
    r0 = np.asarray(ratios0)
    r1 = np.asarray(ratios1)
    finite = bool(np.all(np.isfinite(r0)) and np.all(np.isfinite(r1)))
    drift = float(np.max(np.abs(r1 - r0) / r0)) if finite else float("inf")
    ok = finite and drift <= MAX_DRIFT
    detail = (
        f"{r0.size} traces, max ratio {np.max(r0):.3g}, "
        f"refinement drift {drift:.1%}{extra}"
    )
    return SuiteResult(name, ok, detail)


def poincare_open(seed: int = DEFAULT_SEED, n_traces: int = N_TRACES) -> SuiteResult:
    """Zero-extended data on a piece of the boundary loop: the L2 norm of
    the piece is controlled by |gamma|^(1/2) times the half seminorm of
    the extension over the whole loop."""
    rng = np.random.default_rng(seed)
    per_side = 12
    k = per_side  # gamma = the bottom side, length 1
    loops, grams, spans = [], [], []
    pts = _square_loop(4 * per_side)
    for level in range(2):
        loops.append(pts)
        grams.append(fractional_gram(pts, closed=True))
        spans.append(k * 2 ** level)
        pts, _ = _refine_closed(pts, np.zeros(pts.shape[0]))
    ratios = [[], []]
    for _ in range(n_traces):
        v0 = np.zeros(loops[0].shape[0])
        v0[1:k] = rng.uniform(-1.0, 1.0, k - 1)
        values = v0
        for level in range(2):
            kk = spans[level]
            t_loop = BoundaryTrace(loops[level], values, closed=True)
            t_gamma = BoundaryTrace(loops[level][: kk + 1], values[: kk + 1])
            semi = fractional_seminorm_half(t_loop, grams[level])
            ratios[level].append(boundary.l2_norm(t_gamma) / semi)
            if level == 0:
                _, values = _refine_closed(loops[0], values)
    return _drift_suite("poincare_open", ratios[0], ratios[1])


def poincare_closed(seed: int = DEFAULT_SEED, n_traces: int = N_TRACES) -> SuiteResult:
    """On a closed feature boundary the mean-free part is controlled by
    |gamma|^(1/2) times the half seminorm on gamma itself."""
    rng = np.random.default_rng(seed)
    pts0 = _circle_loop(32, 1.0 / (2.0 * np.pi))
    pts1, _ = _refine_closed(pts0, np.zeros(32))
    grams = [fractional_gram(pts0, True), fractional_gram(pts1, True)]
    ratios = [[], []]
    for _ in range(n_traces):
        v0 = rng.uniform(-1.0, 1.0, 32)
        values = v0
        for level, pts in enumerate((pts0, pts1)):
            t = BoundaryTrace(pts, values, closed=True)
            avg = boundary.average(t)
            dev = BoundaryTrace(pts, values - avg, closed=True)
            glen = boundary.trace_length(t)
            semi = fractional_seminorm_half(t, grams[level])
            ratios[level].append(boundary.l2_norm(dev) / (np.sqrt(glen) * semi))
            if level == 0:
                _, values = _refine_closed(pts0, values)
    return _drift_suite("poincare_closed", ratios[0], ratios[1])


def interpolation(seed: int = DEFAULT_SEED, n_traces: int = N_TRACES) -> SuiteResult:
    """Half seminorm of the mean-free part against the geometric mean of
    its L2 norm and the tangential-gradient norm."""
    rng = np.random.default_rng(seed)
    pts0 = _circle_loop(32, 1.0 / (2.0 * np.pi))
    pts1, _ = _refine_closed(pts0, np.zeros(32))
    grams = [fractional_gram(pts0, True), fractional_gram(pts1, True)]
    ratios = [[], []]
    for _ in range(n_traces):
        v0 = rng.uniform(-1.0, 1.0, 32)
        values = v0
        for level, pts in enumerate((pts0, pts1)):
            t = BoundaryTrace(pts, values, closed=True)
            avg = boundary.average(t)
            dev = BoundaryTrace(pts, values - avg, closed=True)
            semi = fractional_seminorm_half(dev, grams[level])
            denom = np.sqrt(
                boundary.l2_norm(dev) * boundary.tangential_gradient_l2(t)
            )
            ratios[level].append(semi / denom)
            if level == 0:
                _, values = _refine_closed(pts0, values)
    return _drift_suite("interpolation", ratios[0], ratios[1])


def homogeneity(seed: int = DEFAULT_SEED) -> SuiteResult:
    rng = np.random.default_rng(seed)
    t_open = _wiggly_open_trace(rng)
    pts = _circle_loop(24, 0.2)
    t_closed = BoundaryTrace(pts, rng.uniform(-1.0, 1.0, 24), closed=True)

    def run(fn, t):
        base = fn(t)
        worst = 0.0
        for c in (-3.0, 0.25, 7.5):
            scaled = fn(BoundaryTrace(t.points, c * t.values, t.closed))
            worst = max(worst, abs(scaled - abs(c) * base) / (abs(c) * abs(base)))
        return worst

    worst = max(
        run(lambda t: estimators.estimator_dd(t), t_open),
        run(lambda t: estimators.estimator_dn(t), t_open),
        run(lambda t: estimators.estimator_internal(t, 1.5), t_closed),
    )
    return SuiteResult(
        "homogeneity", worst <= 1e-12,
        f"max relative deviation {worst:.2e} under value scaling"
    )


def dd_reliability() -> SuiteResult:
    """Miniature DD cell: disk of size 1/8 on the top side, h = 0.08.

    Routes the estimate through estimator_dd itself, so a corrupted
    estimator shows up here even when symmetric checks still pass.
    """
    geom = FeatureGeometry(shape="disk", placement="boundary", size=0.125)
    template = generate_template(geom, 0.08)
    u0 = fem.solve_poisson(template, fem.PoissonProblem(
        1.0, {"GammaD": 0.0, "gamma0": 0.0}))
    sub, node_map = extract_exact_submesh(template)
    u_ex = fem.solve_poisson(sub, fem.PoissonProblem(
        1.0, {"GammaD": 0.0, "gamma": g_sin_top}))
    error = fem.defeaturing_error(u_ex, u0, node_map)
    d = boundary.boundary_error(g_sin_top, u0, "gamma")
    estimate = estimators.estimator_dd(d)
    eff = estimate / error
    return SuiteResult(
        "dd_reliability", 0.3 <= eff <= 10.0,
        f"effectivity {eff:.3f} (bracket [0.3, 10])"
    )


def verify(seed: int = DEFAULT_SEED) -> list[SuiteResult]:
    return [
        patch_test(),
        convergence(),
        scaling(seed),
        poincare_open(seed),
        poincare_closed(seed),
        interpolation(seed),
        homogeneity(seed),
        dd_reliability(),
    ]


def format_report(results) -> str:
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'} {r.suite}: {r.detail}")
    n_bad = sum(not r.passed for r in results)
    lines.append(
        f"{len(results) - n_bad}/{len(results)} suites passed"
        if n_bad else f"all {len(results)} suites passed"
    )
    return "\n".join(lines)
