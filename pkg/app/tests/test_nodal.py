"""
Test module for nodal-line extraction and the containment test.
"""

import logging

import numpy as np
import pytest

from app.core.errors import AnalysisError
from app.core.fem import BoundaryCondition, SignConvention, fix_sign, solve_eigs
from app.core.geometry import subregions
from app.core.nodal import NodalComponent, NodalPath, excursion_distance, nodal_containment, nodal_set
from app.tests.conftest import make_spec

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def test_straight_nodal_line(square_mesh):
    u = square_mesh.vertices[:, 0] - 0.4
    path = nodal_set(u, square_mesh)
    assert path.boundary_intersections == 2
    assert path.closed_components == 0
    assert len(path.components) == 1
    component = path.components[0]
    assert component.end_flags == ("boundary", "boundary")
    # P1 interpolation of a linear function is exact
    assert np.allclose(component.points[:, 0], 0.4, atol=1e-12)


def test_closed_nodal_line(square_mesh):
    x, y = square_mesh.vertices[:, 0], square_mesh.vertices[:, 1]
    u = (x - 0.5) ** 2 + (y - 0.5) ** 2 - 0.09
    path = nodal_set(u, square_mesh)
    assert path.boundary_intersections == 0
    assert path.closed_components == 1
    component = path.components[0]
    assert component.closed
    assert np.array_equal(component.points[0], component.points[-1])
    radii = np.hypot(component.points[:, 0] - 0.5, component.points[:, 1] - 0.5)
    assert np.all(np.abs(radii - 0.3) < 0.02)


def test_no_sign_change(square_mesh):
    path = nodal_set(np.ones(square_mesh.n_vertices), square_mesh)
    assert path.is_empty
    assert path.points.shape == (0, 2)
    with pytest.raises(AnalysisError):
        nodal_set(np.zeros(square_mesh.n_vertices), square_mesh)


def test_containment():
    spec = make_spec(0.05)
    layout = subregions(spec, 0.3, 0.3)
    inside = NodalPath(
        components=[NodalComponent(np.array([[-1.1, 0.0], [0.0, 0.0], [1.2, 0.1]]), False, ("boundary", "boundary"))]
    )
    result = nodal_containment(inside, layout, spec)
    assert result.contained
    assert result.worst_point is None

    outside = NodalPath(
        components=[NodalComponent(np.array([[0.0, 0.0], [-2.0, 0.0]]), False, ("boundary", "interior"))]
    )
    result = nodal_containment(outside, layout, spec)
    assert not result.contained
    assert result.worst_point == (-2.0, 0.0)
    assert result.worst_distance == pytest.approx(0.7)
    assert excursion_distance(np.array([[0.0, 0.0]]), layout, spec)[0] == 0.0


def test_neumann_nodal_line_crosses_the_connector(dumbbell_system, dumbbell_spec):
    mesh, K, M = dumbbell_system
    result = fix_sign(
        solve_eigs(K, M, BoundaryCondition.NEUMANN, 2, mesh=mesh), SignConvention.NEUMANN2_NEGATIVE_ON_OMEGA1
    )
    path = nodal_set(result.vectors[:, 1], mesh)
    logger.info(f"Nodal path: {path.boundary_intersections} boundary hits, {path.closed_components} closed")
    assert path.boundary_intersections == 2
    assert path.closed_components == 0
    # the sign change happens inside the connector span
    assert np.all(np.abs(path.points[:, 0]) <= 1.0 + 0.3)
