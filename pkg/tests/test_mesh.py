"""Mesh generation: validity, tagging, grading, refinement, determinism."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defeatr.errors import MeshError
from defeatr.mesh import (
    BOUNDARY_SHAPES,
    INTERNAL_SHAPES,
    FeatureGeometry,
    Mesh,
    boundary_edges,
    extract_exact_submesh,
    feature_isotropy_ratio,
    generate_template,
    points_in_polygon,
    polygon_mesh,
    refine_uniform,
    region_area,
    signed_areas,
    structured_rectangle_mesh,
    triangle_quality,
    validate,
)
from defeatr import boundary


def total_area(mesh: Mesh) -> float:
    return float(np.sum(signed_areas(mesh)))


class TestStructuredRectangle:
    def test_counts_and_area(self):
        mesh = structured_rectangle_mesh(8, 8)
        assert mesh.num_nodes == 81
        assert mesh.num_triangles == 128
        assert total_area(mesh) == pytest.approx(1.0, abs=1e-14)

    def test_boundary_fully_tagged(self):
        mesh = structured_rectangle_mesh(5, 7)
        tagged = sum(len(v) for v in mesh.facet_tags.values())
        assert tagged == len(boundary_edges(mesh))

    def test_validates(self):
        validate(structured_rectangle_mesh(4, 4))


class TestMeshValidation:
    def test_rejects_bad_shapes(self):
        with pytest.raises(MeshError):
            Mesh(np.zeros((4, 3)), np.zeros((1, 3), dtype=int))
        with pytest.raises(MeshError):
            Mesh(np.zeros((4, 2)), np.zeros((1, 4), dtype=int))

    def test_rejects_inverted_triangle(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        mesh = Mesh(nodes, np.array([[0, 2, 1]]))
        with pytest.raises(MeshError):
            validate(mesh)

    def test_rejects_out_of_range_node(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        mesh = Mesh(nodes, np.array([[0, 1, 7]]))
        with pytest.raises(MeshError):
            validate(mesh)

    def test_rejects_nonmesh_tagged_edge(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        tris = np.array([[0, 1, 2], [1, 3, 2]])
        mesh = Mesh(nodes, tris, facet_tags={"GammaD": np.array([[0, 3]])})
        with pytest.raises(MeshError):
            validate(mesh)


class TestBoundaryTemplates:
    @pytest.mark.parametrize("shape", sorted(BOUNDARY_SHAPES))
    def test_regions_and_tags(self, shape):
        geom = FeatureGeometry(shape, "boundary", 0.25)
        mesh = generate_template(geom, 0.06)
        validate(mesh)
        for tag in ("gamma", "gamma0", "GammaD"):
            assert tag in mesh.facet_tags and len(mesh.facet_tags[tag]) > 0
        a_feat = region_area(mesh, "feature")
        a_ext = region_area(mesh, "exterior")
        assert a_feat > 0 and a_ext > 0
        assert a_feat + a_ext == pytest.approx(total_area(mesh), rel=1e-12)

    def test_disk_quality_gate(self, disk_boundary_template):
        angles, _ = triangle_quality(disk_boundary_template)
        assert np.degrees(np.min(angles)) >= 20.0 - 1e-9

    def test_triangle_tip_is_exempt_not_broken(self, triangle_boundary_template):
        # the 15 degree wedge forces a few slivers near the tip; they must
        # stay confined there and never invert
        mesh = triangle_boundary_template
        angles, _ = triangle_quality(mesh)
        assert np.degrees(np.min(angles)) > 5.0
        assert np.all(signed_areas(mesh) > 0)

    def test_gamma_length_matches_size(self, disk_boundary_template):
        assert boundary.length(disk_boundary_template, "gamma") == pytest.approx(
            0.25, rel=0.02
        )

    def test_feature_area_scales(self):
        sizes = (0.25, 0.125)
        areas = []
        for s in sizes:
            mesh = generate_template(FeatureGeometry("square", "boundary", s), 0.06)
            areas.append(region_area(mesh, "feature"))
        assert areas[0] == pytest.approx(4 * areas[1], rel=0.05)

    def test_deterministic(self):
        geom = FeatureGeometry("disk", "boundary", 0.25)
        a = generate_template(geom, 0.06)
        b = generate_template(geom, 0.06)
        assert np.array_equal(a.nodes, b.nodes)
        assert np.array_equal(a.triangles, b.triangles)
        for tag in a.facet_tags:
            assert np.array_equal(a.facet_tags[tag], b.facet_tags[tag])


class TestInternalTemplates:
    @pytest.mark.parametrize("shape", sorted(INTERNAL_SHAPES))
    def test_closed_loop_and_area(self, shape):
        geom = FeatureGeometry(shape, "internal", 0.25)
        mesh = generate_template(geom, 0.05)
        validate(mesh)
        _, closed = boundary.chain_node_ids(mesh, "gamma")
        assert closed, "internal feature boundary must be a closed loop"
        assert region_area(mesh, "feature") > 0
        assert "gamma0" not in mesh.facet_tags

    @pytest.mark.parametrize("shape", sorted(INTERNAL_SHAPES))
    def test_circumference_normalization(self, shape):
        # every internal shape is scaled so gamma has the requested length
        geom = FeatureGeometry(shape, "internal", 0.25)
        mesh = generate_template(geom, 0.05)
        assert boundary.length(mesh, "gamma") == pytest.approx(0.25, rel=0.02)

    def test_grade_center_refines_toward_barycenter(self):
        geom = FeatureGeometry("disk", "internal", 0.125)
        mesh = generate_template(geom, 0.05, grade_center=True)
        center = boundary.barycenter(mesh, "feature")
        d = np.linalg.norm(mesh.nodes - center, axis=1)
        near = mesh.nodes[d < 0.25 * 0.125]
        assert len(near) >= 3
        diam = boundary.diameter(mesh, "gamma")
        _, min_edges = triangle_quality(mesh)
        tri_centers = mesh.nodes[mesh.triangles].mean(axis=1)
        td = np.linalg.norm(tri_centers - center, axis=1)
        assert np.min(min_edges[td < diam]) <= diam / 8

    def test_isotropy_ratio_sane(self, disk_internal_template):
        r = feature_isotropy_ratio(disk_internal_template)
        assert 1.0 <= r < 10.0


class TestExactSubmesh:
    def test_removes_feature(self, disk_boundary_template):
        exact, node_map = extract_exact_submesh(disk_boundary_template)
        validate(exact)
        a_exterior = region_area(disk_boundary_template, "exterior")
        assert total_area(exact) == pytest.approx(a_exterior, rel=1e-12)
        # node_map carries exact-mesh nodes back to template ids
        assert np.array_equal(
            exact.nodes, disk_boundary_template.nodes[node_map]
        )

    def test_gamma_preserved(self, disk_internal_template):
        exact, _ = extract_exact_submesh(disk_internal_template)
        assert "gamma" in exact.facet_tags
        n_template = len(disk_internal_template.facet_tags["gamma"])
        assert len(exact.facet_tags["gamma"]) == n_template


class TestRefineUniform:
    def test_counts_and_area(self, disk_boundary_template):
        fine = refine_uniform(disk_boundary_template)
        assert fine.num_triangles == 4 * disk_boundary_template.num_triangles
        assert total_area(fine) == pytest.approx(
            total_area(disk_boundary_template), rel=1e-12
        )
        validate(fine)

    def test_tags_refined(self, disk_boundary_template):
        fine = refine_uniform(disk_boundary_template)
        for tag, edges in disk_boundary_template.facet_tags.items():
            assert len(fine.facet_tags[tag]) == 2 * len(edges)
        assert boundary.length(fine, "gamma") == pytest.approx(
            boundary.length(disk_boundary_template, "gamma"), rel=1e-12
        )


class TestPolygonMesh:
    def test_unit_square(self):
        square = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        mesh = polygon_mesh(square, 0.1)
        validate(mesh)
        assert total_area(mesh) == pytest.approx(1.0, rel=1e-12)
        assert set(mesh.facet_tags) == {"GammaD"}

    def test_too_few_vertices(self):
        with pytest.raises(MeshError):
            polygon_mesh(np.array([[0.0, 0.0], [1.0, 0.0]]), 0.1)


class TestGeometryValidation:
    def test_unknown_placement(self):
        with pytest.raises(MeshError):
            FeatureGeometry("disk", "floating", 0.25)

    def test_shape_placement_mismatch(self):
        with pytest.raises(MeshError):
            FeatureGeometry("star", "boundary", 0.25)

    def test_nonpositive_size(self):
        with pytest.raises(MeshError):
            FeatureGeometry("disk", "internal", 0.0)

    def test_bad_angle(self):
        with pytest.raises(MeshError):
            FeatureGeometry("triangle", "boundary", 0.25, alpha_deg=180.0)


@settings(max_examples=25, deadline=None)
@given(
    n=st.integers(min_value=3, max_value=9),
    radius=st.floats(min_value=0.2, max_value=3.0),
    seed=st.integers(min_value=0, max_value=2**31),
)
def test_points_in_polygon_convex(n, radius, seed):
    gen = np.random.default_rng(seed)
    phis = np.sort(gen.uniform(0, 2 * np.pi, n))
    if np.min(np.diff(phis)) < 1e-3:
        return
    poly = radius * np.column_stack([np.cos(phis), np.sin(phis)])
    centroid = poly.mean(axis=0, keepdims=True)
    far = np.array([[10 * radius, 0.0]])
    assert points_in_polygon(centroid, poly)[0]
    assert not points_in_polygon(far, poly)[0]
