"""Shared fixtures.  Template meshes are the expensive part of most tests,
so the common ones are built once per session."""
import numpy as np
import pytest

from defeatr.mesh import FeatureGeometry, generate_template


@pytest.fixture(scope="session")
def disk_boundary_template():
    return generate_template(FeatureGeometry("disk", "boundary", 0.25), 0.06)


@pytest.fixture(scope="session")
def triangle_boundary_template():
    return generate_template(FeatureGeometry("triangle", "boundary", 0.25), 0.06)


@pytest.fixture(scope="session")
def disk_internal_template():
    return generate_template(FeatureGeometry("disk", "internal", 0.25), 0.06)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(0x5EED)
