"""Trace extraction and boundary calculus, including the closed-form
oracles for the fractional seminorm and the scaling laws."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defeatr.errors import TraceError
from defeatr.mesh import extract_exact_submesh, structured_rectangle_mesh
from defeatr import boundary, fem
from defeatr.boundary import BoundaryTrace


def open_trace(values, length=1.0, n=None):
    values = np.asarray(values, dtype=float)
    if n is None:
        n = values.size
    s = np.linspace(0.0, length, n)
    return BoundaryTrace(
        points=np.column_stack([s, np.zeros_like(s)]), values=values, closed=False
    )


def circle_trace(values, radius):
    values = np.asarray(values, dtype=float)
    phi = 2.0 * np.pi * np.arange(values.size) / values.size
    pts = radius * np.column_stack([np.cos(phi), np.sin(phi)])
    return BoundaryTrace(points=pts, values=values, closed=True)


class TestElementary:
    def test_l2_of_linear(self):
        s = np.linspace(0.0, 1.0, 101)
        t = open_trace(s)
        assert boundary.l2_norm(t) == pytest.approx(1.0 / np.sqrt(3.0), rel=1e-12)

    def test_average_is_length_weighted(self):
        # two edges of unequal length, values 0 / 0 / 3
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [4.0, 0.0]])
        t = BoundaryTrace(points=pts, values=np.array([0.0, 0.0, 3.0]), closed=False)
        # integral = 0 + 3*3/2, length 4
        assert boundary.average(t) == pytest.approx(9.0 / 8.0, rel=1e-12)

    def test_tangential_gradient(self):
        s = np.linspace(0.0, 1.0, 33)
        t = open_trace(2.0 * s)
        assert boundary.tangential_gradient_l2(t) == pytest.approx(2.0, rel=1e-12)

    def test_length(self):
        t = circle_trace(np.zeros(64), radius=2.0)
        perim = 64 * 2.0 * 2.0 * np.sin(np.pi / 64)
        assert boundary.trace_length(t) == pytest.approx(perim, rel=1e-12)

    def test_degenerate_trace_rejected(self):
        with pytest.raises(TraceError):
            BoundaryTrace(points=np.zeros((1, 2)), values=np.zeros(1), closed=False)


class TestFractionalSeminorm:
    def test_linear_on_unit_edge_is_one(self):
        # |s|_{1/2}^2 on (0,1) integrates (ds/dr)^2 / r^2 r dr exactly to 1
        for n in (3, 9, 65):
            t = open_trace(np.linspace(0.0, 1.0, n))
            assert boundary.fractional_seminorm_half(t) == pytest.approx(
                1.0, abs=1e-6
            )

    def test_constants_have_zero_seminorm(self):
        # singular quadrature cancels constants to roundoff of the pair sums
        t = circle_trace(np.ones(32), radius=1.0)
        assert boundary.fractional_seminorm_half(t) == pytest.approx(0.0, abs=1e-5)

    def test_gram_reuse_matches(self):
        gen = np.random.default_rng(3)
        vals = gen.normal(size=24)
        t = circle_trace(vals, radius=0.5)
        gram = boundary.fractional_gram(t.points, closed=True)
        a = boundary.fractional_seminorm_half(t)
        b = boundary.fractional_seminorm_half(t, gram=gram)
        assert a == pytest.approx(b, rel=1e-12)

    def test_scaling_invariance(self):
        gen = np.random.default_rng(11)
        vals = gen.normal(size=40)
        base = open_trace(vals, length=1.0)
        for lam in (0.1, 10.0):
            scaled = open_trace(vals, length=lam)
            assert boundary.fractional_seminorm_half(scaled) == pytest.approx(
                boundary.fractional_seminorm_half(base), rel=1e-9
            )


class TestScalingLaws:
    # under x -> lam x: L2 ~ lam^{1/2}, tangential gradient ~ lam^{-1/2}
    @pytest.mark.parametrize("lam", [0.1, 10.0])
    def test_l2_and_gradient(self, lam):
        gen = np.random.default_rng(7)
        vals = gen.normal(size=50)
        t1 = open_trace(vals, length=1.0)
        t2 = open_trace(vals, length=lam)
        assert boundary.l2_norm(t2) == pytest.approx(
            np.sqrt(lam) * boundary.l2_norm(t1), rel=1e-9
        )
        assert boundary.tangential_gradient_l2(t2) == pytest.approx(
            boundary.tangential_gradient_l2(t1) / np.sqrt(lam), rel=1e-9
        )


class TestInterpolationRatio:
    def test_linear_trace_closed_form(self):
        # for t(s) = s the ratio |t - avg|_{1/2} / sqrt(||t - avg|| |t'|)
        # equals 1 / sqrt(1/sqrt(12)) = 12^{1/4}
        t = open_trace(np.linspace(0.0, 1.0, 65))
        dev = t.values - boundary.average(t)
        devt = BoundaryTrace(points=t.points, values=dev, closed=False)
        num = boundary.fractional_seminorm_half(devt)
        den = np.sqrt(
            boundary.l2_norm(devt) * boundary.tangential_gradient_l2(devt)
        )
        assert num / den == pytest.approx(12.0 ** 0.25, rel=1e-6)

    def test_verifier_agrees(self):
        t = open_trace(np.linspace(0.0, 1.0, 65))
        ratio = boundary.verify_interpolation_inequality(t)
        assert np.isfinite(ratio) and ratio > 0


class TestChainsAndTraces:
    def test_open_chain_order(self):
        mesh = structured_rectangle_mesh(4, 4)
        ids, closed = boundary.chain_node_ids(mesh, "GammaD")
        assert closed  # the whole square boundary is one loop
        pts = mesh.nodes[ids]
        steps = np.hypot(*np.diff(np.vstack([pts, pts[:1]]), axis=0).T)
        assert np.max(steps) == pytest.approx(0.25, rel=1e-12)

    def test_trace_of_solution(self, disk_boundary_template):
        # gamma sits on the boundary only after the feature is cut away
        mesh, _ = extract_exact_submesh(disk_boundary_template)
        problem = fem.PoissonProblem(
            source=0.0,
            dirichlet={t: (lambda x, y: x) for t in mesh.facet_tags},
        )
        u = fem.solve_poisson(mesh, problem)
        t = boundary.trace_of(u, "gamma")
        ids, _ = boundary.chain_node_ids(mesh, "gamma")
        assert t.values == pytest.approx(mesh.nodes[ids, 0], abs=1e-12)
        assert boundary.trace_length(t) == pytest.approx(
            boundary.length(mesh, "gamma"), rel=1e-12
        )

    def test_boundary_error_subtracts(self, disk_boundary_template):
        mesh, _ = extract_exact_submesh(disk_boundary_template)
        problem = fem.PoissonProblem(
            source=0.0, dirichlet={t: 0.25 for t in mesh.facet_tags}
        )
        u = fem.solve_poisson(mesh, problem)
        d = boundary.boundary_error(lambda x, y: x, u, "gamma")
        ids, _ = boundary.chain_node_ids(mesh, "gamma")
        assert d.values == pytest.approx(mesh.nodes[ids, 0] - 0.25, abs=1e-12)

    def test_unknown_tag(self, disk_boundary_template):
        with pytest.raises(TraceError):
            boundary.chain_node_ids(disk_boundary_template, "nope")


class TestGeometryQueries:
    def test_diameter_and_distance(self, disk_internal_template):
        mesh = disk_internal_template
        diam = boundary.diameter(mesh, "gamma")
        assert diam == pytest.approx(2 * 0.25 / (2 * np.pi), rel=0.01)
        center = boundary.barycenter(mesh, "feature")
        assert center == pytest.approx([0.0, 0.0], abs=0.01)
        dist = boundary.distance(center, mesh, "GammaD")
        assert dist == pytest.approx(0.5, rel=0.02)


@settings(max_examples=30, deadline=None)
@given(
    n=st.integers(min_value=3, max_value=40),
    seed=st.integers(min_value=0, max_value=2**31),
    closed=st.booleans(),
)
def test_random_trace_invariants(n, seed, closed):
    gen = np.random.default_rng(seed)
    vals = gen.normal(size=n)
    t = circle_trace(vals, 1.0) if closed else open_trace(vals)
    dev = t.values - boundary.average(t)
    devt = BoundaryTrace(points=t.points, values=dev, closed=closed)
    # removing the average never increases the L2 norm
    assert boundary.l2_norm(devt) <= boundary.l2_norm(t) + 1e-12
    assert boundary.fractional_seminorm_half(t) >= 0.0
    # the seminorm ignores constant shifts
    shifted = BoundaryTrace(points=t.points, values=t.values + 4.2, closed=closed)
    assert boundary.fractional_seminorm_half(shifted) == pytest.approx(
        boundary.fractional_seminorm_half(t), rel=1e-9, abs=1e-12
    )
