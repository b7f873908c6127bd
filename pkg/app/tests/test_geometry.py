"""
Test module for the dumbbell geometry: bump profile, connector, stitching, classification,
obstacles and half-disk subregions.
"""

import json
import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.core.errors import GeometryError, InfeasiblePlacementError
from app.core.geometry import (
    BumpProfile,
    EdgeMarker,
    ObstacleShape,
    PolygonDomain,
    Region,
    build_connector,
    classify_point,
    connector_halfwidth,
    half_dumbbell,
    subregions,
    resolve_clearance,
    subtract_obstacle,
)
from app.core.obstacle import square_obstacle
from app.tests.conftest import make_spec

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def test_default_bump_profile():
    """The default profile is flat on [-2, -1], reaches 2 at 0 and never decreases."""
    rho = BumpProfile.default()
    assert rho(-2.0) == 1.0
    assert rho(-1.0) == 1.0
    assert rho(0.0) == 2.0
    q = np.linspace(-2.0, 0.0, 201)
    values = rho(q)
    assert np.all(np.diff(values) >= -1e-12)
    assert np.all((values >= 1.0) & (values <= 2.0))


def test_bump_profile_rejects_bad_samples():
    with pytest.raises(GeometryError):
        BumpProfile(((-2.0, 1.0), (-1.0, 1.0), (0.0, 1.5)))
    with pytest.raises(GeometryError):
        BumpProfile(((-2.0, 1.0), (-1.0, 1.2), (0.0, 2.0)))


def test_connector_shape():
    """Connector area lies between the straight strip and twice of it, with two seam edges."""
    eps = 0.05
    conn = build_connector(eps, BumpProfile.default(), 16)
    logger.info(f"Connector area at eps={eps}: {conn.area:.6f}")
    assert 4.0 * eps <= conn.area <= 8.0 * eps
    markers = conn.edge_markers[0]
    assert markers.count(EdgeMarker.SYNTHETIC) == 2
    xmin, ymin, xmax, ymax = conn.bounds
    assert (xmin, xmax) == (-1.0, 1.0)
    assert ymax == pytest.approx(2.0 * eps, abs=1e-15)
    assert ymin == pytest.approx(-2.0 * eps, abs=1e-15)


def test_connector_rejects_bad_parameters():
    rho = BumpProfile.default()
    with pytest.raises(GeometryError):
        build_connector(0.0, rho, 16)
    with pytest.raises(GeometryError):
        build_connector(0.6, rho, 16)
    with pytest.raises(GeometryError):
        build_connector(0.05, rho, 4)


def test_dumbbell_area_is_additive():
    spec = make_spec(0.05)
    domain = spec.domain
    expected = spec.omega1.area + spec.omega2.area + spec.connector.area
    assert domain.area == pytest.approx(expected, rel=1e-12)
    assert domain.polygon.is_valid
    assert len(domain.holes) == 0


def test_dumbbell_requires_room_for_the_connector():
    # 2 eps >= 3 xi
    with pytest.raises(GeometryError):
        make_spec(0.3, xi=0.15)


@given(st.floats(min_value=0.01, max_value=0.2))
def test_dumbbell_family_is_valid(eps):
    spec = make_spec(eps)
    domain = spec.domain
    assert domain.polygon.is_valid
    assert 5.0 + 4.0 * eps <= domain.area <= 5.0 + 8.0 * eps + 1e-12


def test_classify_point():
    spec = make_spec(0.05)
    assert classify_point((-2.0, 0.0), spec) is Region.OMEGA1
    assert classify_point((0.0, 0.0), spec) is Region.CONNECTOR
    assert classify_point((1.5, 0.0), spec) is Region.OMEGA2
    assert classify_point((0.0, 0.5), spec) is Region.OUTSIDE
    # seam points belong to the connector, the rest of the flat edge to the base domain
    assert classify_point((-1.0, 0.0), spec) is Region.CONNECTOR
    assert classify_point((-1.0, 0.5), spec) is Region.OMEGA1


def test_connector_halfwidth():
    spec = make_spec(0.05)
    assert connector_halfwidth(0.0, spec) == pytest.approx(0.05)
    assert connector_halfwidth(-1.0, spec) == pytest.approx(0.1)
    assert connector_halfwidth(1.0, spec) == pytest.approx(0.1)
    assert connector_halfwidth(1.5, spec) == 0.0


def test_half_dumbbell_area():
    spec = make_spec(0.05)
    half = half_dumbbell(spec)
    assert half.area == pytest.approx(spec.omega1.area + spec.connector.area, rel=1e-12)


def test_polygon_validation():
    with pytest.raises(GeometryError):
        # clockwise outer ring
        PolygonDomain((np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]),))
    with pytest.raises(GeometryError):
        # bow tie
        PolygonDomain((np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]),))


def test_obstacle_shape_validation():
    with pytest.raises(GeometryError):
        ObstacleShape(np.array([[-0.1, -0.1], [-0.1, 0.1], [0.1, 0.1], [0.1, -0.1]]))
    with pytest.raises(GeometryError):
        ObstacleShape(np.array([[0.0, 0.0], [0.2, 0.0], [0.2, 0.2], [0.0, 0.2]]))


def test_subtract_obstacle():
    spec = make_spec(0.05)
    shape = square_obstacle(0.4)
    perforated = subtract_obstacle(spec.domain, shape, (-2.0, 0.0))
    assert perforated.area == pytest.approx(spec.domain.area - 0.16, rel=1e-12)
    assert perforated.edge_markers[1] == tuple([EdgeMarker.OBSTACLE] * 4)

    # Test case: overlaps the connector mouth
    with pytest.raises(InfeasiblePlacementError):
        subtract_obstacle(spec.domain, shape, (-1.1, 0.0))

    # Test case: 0.05 away from the left edge
    subtract_obstacle(spec.domain, shape, (-2.75, 0.0), clearance=0.0)
    with pytest.raises(InfeasiblePlacementError):
        subtract_obstacle(spec.domain, shape, (-2.75, 0.0), clearance=0.08)


def test_obstacle_clearance_defaults_to_two_mesh_widths():
    spec = make_spec(0.05)
    shape = square_obstacle(0.4)
    assert resolve_clearance(None) == pytest.approx(0.08)
    assert resolve_clearance(None, 0.02) == pytest.approx(0.04)
    assert resolve_clearance(0.0, 0.02) == 0.0
    with pytest.raises(InfeasiblePlacementError):
        subtract_obstacle(spec.domain, shape, (-2.75, 0.0))
    perforated = subtract_obstacle(spec.domain, shape, (-2.75, 0.0), h_max=0.02)
    assert len(perforated.holes) == 1


def test_subregions():
    spec = make_spec(0.05)
    layout = subregions(spec, 0.3, 0.3)
    n = spec.connector_samples
    half_polygon = 0.5 * 0.3**2 * n * np.sin(np.pi / n)
    assert layout.omega1_prime.area == pytest.approx(4.0 - half_polygon, rel=1e-9)
    assert layout.omega2_prime.area == pytest.approx(1.0 - half_polygon, rel=1e-9)
    assert EdgeMarker.SYNTHETIC in layout.omega1_prime.edge_markers[0]

    inside = layout.in_half_disks(np.array([[-1.1, 0.0], [-0.9, 0.0], [1.2, 0.0], [-2.0, 0.0]]))
    assert inside.tolist() == [True, False, True, False]
    assert layout.distance_to_half_disks(np.array([[-2.0, 0.0]]))[0] == pytest.approx(0.7)


def test_subregions_rejects_bad_radii():
    spec = make_spec(0.05)
    with pytest.raises(GeometryError):
        subregions(spec, 0.1, 0.3)
    with pytest.raises(GeometryError):
        subregions(spec, 0.3, 0.8)


def test_polygon_json_round_trip():
    spec = make_spec(0.05)
    perforated = subtract_obstacle(spec.domain, square_obstacle(0.4), (-2.0, 0.0))
    restored = PolygonDomain.from_json(json.loads(json.dumps(perforated.to_json())))
    assert len(restored.rings) == 2
    assert all(np.array_equal(a, b) for a, b in zip(restored.rings, perforated.rings))
    assert restored.edge_markers == perforated.edge_markers
    assert set(restored.edge_markers[1]) == {EdgeMarker.OBSTACLE}
    assert restored.area == pytest.approx(perforated.area, rel=1e-15)

    with pytest.raises(GeometryError):
        PolygonDomain.from_json({})
    with pytest.raises(GeometryError):
        PolygonDomain.from_json({"rings": [[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]], "markers": [["outer", "seam", "outer"]]})
