"""
Shared fixtures: small oracle and dumbbell meshes that keep the unit tests fast.
"""

import logging

import pytest
from hypothesis import HealthCheck, settings

from app.core.fem import assemble
from app.core.geometry import DumbbellSpec, rectangle_domain
from app.core.mesh import MeshParams, mesh_dumbbell, triangulate

# Configure logging
logging.basicConfig(level=logging.INFO)

settings.register_profile("lab", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")

COARSE = MeshParams(h_max=0.08, min_angle=20.0, connector_factor=0.25, grading=1.5)


def make_spec(eps: float = 0.08, xi: float = 0.15) -> DumbbellSpec:
    return DumbbellSpec(
        omega1=rectangle_domain(-3.0, -1.0, -1.0, 1.0),
        omega2=rectangle_domain(1.0, 2.0, -0.5, 0.5),
        epsilon=eps,
        xi=xi,
    )


@pytest.fixture(scope="session")
def unit_square():
    return rectangle_domain(0.0, 1.0, 0.0, 1.0)


@pytest.fixture(scope="session")
def square_mesh(unit_square):
    return triangulate(unit_square, 0.1)


@pytest.fixture(scope="session")
def square_system(square_mesh):
    K, M = assemble(square_mesh)
    return square_mesh, K, M


@pytest.fixture(scope="session")
def dumbbell_spec():
    return make_spec(0.08)


@pytest.fixture(scope="session")
def dumbbell_mesh(dumbbell_spec):
    return mesh_dumbbell(dumbbell_spec.domain, dumbbell_spec, COARSE)


@pytest.fixture(scope="session")
def dumbbell_system(dumbbell_mesh):
    K, M = assemble(dumbbell_mesh)
    return dumbbell_mesh, K, M
