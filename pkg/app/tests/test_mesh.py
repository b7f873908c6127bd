"""
Test module for triangulation, mesh invariants and the plain-text mesh format.
"""

import logging

import numpy as np
import pytest

from app.core.errors import MeshingError
from app.core.geometry import EdgeMarker, Region, subtract_obstacle
from app.core.mesh import (
    check_mesh,
    connector_size_field,
    mesh_dumbbell,
    mesh_quality,
    read_mesh,
    triangulate,
    unique_edges,
    vertical_crossings,
    write_mesh,
)
from app.core.obstacle import square_obstacle
from app.tests.conftest import COARSE

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def test_square_mesh_invariants(unit_square, square_mesh):
    problems = check_mesh(square_mesh, unit_square, min_angle=20.0)
    assert problems == []
    assert square_mesh.area == pytest.approx(1.0, abs=1e-12)
    assert square_mesh.min_angle_achieved >= 20.0 - 1e-6
    assert np.all(square_mesh.areas > 0.0)
    # without a dumbbell every element is tagged Omega1
    assert set(square_mesh.triangle_region.tolist()) == {Region.OMEGA1.value}


def test_triangulate_rejects_bad_parameters(unit_square):
    with pytest.raises(MeshingError):
        triangulate(unit_square, 0.0)
    with pytest.raises(MeshingError):
        triangulate(unit_square, 0.1, min_angle=40.0)


def test_dumbbell_mesh_invariants(dumbbell_spec, dumbbell_mesh):
    problems = check_mesh(dumbbell_mesh, dumbbell_spec.domain, min_angle=COARSE.min_angle)
    logger.info(f"Dumbbell mesh: {dumbbell_mesh.n_vertices} vertices, problems {problems}")
    assert problems == []
    regions = set(dumbbell_mesh.triangle_region.tolist())
    assert regions == {Region.OMEGA1.value, Region.OMEGA2.value, Region.CONNECTOR.value}


def test_connector_is_resolved(dumbbell_mesh):
    """Several element layers across the connector everywhere along it."""
    for x in np.linspace(-0.9, 0.9, 7):
        assert vertical_crossings(dumbbell_mesh, x) >= 4


def test_connector_size_field(dumbbell_spec):
    size = connector_size_field(dumbbell_spec, 0.08, factor=0.25, grading=1.5)
    values = size(np.array([[0.0, 0.0], [-2.0, 0.0], [1.0, 0.16]]))
    assert values[0] == pytest.approx(0.02)
    assert values[1] == pytest.approx(0.08)
    assert values[2] == pytest.approx(0.02)
    with pytest.raises(MeshingError):
        connector_size_field(dumbbell_spec, 0.08, grading=1.0)


def test_perforated_mesh(dumbbell_spec):
    domain = subtract_obstacle(dumbbell_spec.domain, square_obstacle(0.4), (-2.0, 0.0))
    mesh = mesh_dumbbell(domain, dumbbell_spec, COARSE)
    assert check_mesh(mesh, domain, min_angle=COARSE.min_angle) == []
    edges, _ = unique_edges(mesh.triangles)
    assert mesh.n_vertices - len(edges) + mesh.n_triangles == 0
    assert EdgeMarker.OBSTACLE in mesh.boundary_markers


def test_mesh_quality(dumbbell_mesh):
    quality = mesh_quality(dumbbell_mesh)
    assert sum(quality.region_counts.values()) == dumbbell_mesh.n_triangles
    assert sum(quality.edge_histogram) == len(unique_edges(dumbbell_mesh.triangles)[0])
    assert quality.min_angle >= 20.0 - 1e-6
    assert quality.max_edge <= dumbbell_mesh.h_max_used + 1e-12


def test_mesh_file(tmp_path, dumbbell_spec, dumbbell_mesh):
    path = write_mesh(dumbbell_mesh, tmp_path / "mesh.txt")
    loaded = read_mesh(path, spec=dumbbell_spec)
    assert np.array_equal(loaded.vertices, dumbbell_mesh.vertices)
    assert np.array_equal(loaded.triangles, dumbbell_mesh.triangles)
    assert loaded.boundary_markers == dumbbell_mesh.boundary_markers
    assert np.array_equal(loaded.triangle_region, dumbbell_mesh.triangle_region)


def test_read_mesh_rejects_garbage(tmp_path):
    path = tmp_path / "broken.txt"
    path.write_text("3 0 1\n0 0 Omega1\n")
    with pytest.raises(MeshingError):
        read_mesh(path)
