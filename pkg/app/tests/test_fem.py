"""
Test module for P1 assembly, the generalized eigensolver and the sign conventions.
"""

import logging

import numpy as np
import pytest

from app.core.errors import MeshingError, SignConventionError, SolverError
from app.core.fem import (
    BoundaryCondition,
    SignConvention,
    assemble,
    dense_eigh,
    fix_sign,
    rayleigh_quotients,
    solve_eigs,
)
from app.core.geometry import Region
from app.core.mesh import Mesh, triangulate

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def test_assembly_properties(square_system):
    mesh, K, M = square_system
    assert abs(K - K.T).max() < 1e-12
    assert abs(M - M.T).max() < 1e-15
    # constants are in the kernel of K and M integrates 1 to the area
    assert np.max(np.abs(K @ np.ones(mesh.n_vertices))) < 1e-10
    assert M.sum() == pytest.approx(1.0, abs=1e-12)


def test_single_right_triangle():
    mesh = Mesh(
        vertices=np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        triangles=np.array([[0, 1, 2]]),
        boundary_edges=np.array([[0, 1], [1, 2], [0, 2]]),
        boundary_markers=[],
        vertex_region=np.array(["Omega1"] * 3),
        triangle_region=np.array(["Omega1"]),
        h_max_used=1.0,
        min_angle_achieved=45.0,
    )
    K, M = assemble(mesh)
    expected_k = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    expected_m = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 24.0
    assert np.allclose(K.toarray(), expected_k, rtol=0.0, atol=1e-15)
    assert np.allclose(M.toarray(), expected_m, rtol=0.0, atol=1e-15)


def test_degenerate_triangle_is_rejected():
    mesh = Mesh(
        vertices=np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]),
        triangles=np.array([[0, 1, 2]]),
        boundary_edges=np.array([[0, 1], [1, 2], [0, 2]]),
        boundary_markers=[],
        vertex_region=np.array(["Omega1"] * 3),
        triangle_region=np.array(["Omega1"]),
        h_max_used=2.0,
        min_angle_achieved=0.0,
    )
    with pytest.raises(MeshingError):
        assemble(mesh)


def test_unit_square_dirichlet(unit_square):
    mesh = triangulate(unit_square, 0.05)
    K, M = assemble(mesh)
    result = solve_eigs(K, M, BoundaryCondition.DIRICHLET, 3, mesh=mesh)
    exact = 2.0 * np.pi**2
    logger.info(f"Unit square Dirichlet eigenvalues: {result.eigenvalues}")
    # conforming P1 approximates from above
    assert exact < result.eigenvalues[0] < 1.02 * exact
    assert np.all(np.diff(result.eigenvalues) >= 0.0)
    assert np.all(result.residuals <= 1e-9)
    assert np.all(result.vectors[mesh.boundary_vertices] == 0.0)
    gram = result.vectors.T @ (M @ result.vectors)
    assert np.allclose(gram, np.eye(3), atol=1e-8)


def test_unit_square_neumann(unit_square):
    mesh = triangulate(unit_square, 0.05)
    K, M = assemble(mesh)
    result = solve_eigs(K, M, BoundaryCondition.NEUMANN, 3, mesh=mesh)
    assert abs(result.eigenvalues[0]) < 1e-8
    assert result.eigenvalues[1] == pytest.approx(np.pi**2, rel=0.02)
    # the first Neumann mode is constant
    u0 = result.vectors[:, 0]
    assert np.ptp(u0) < 1e-6 * np.max(np.abs(u0))


def test_sparse_matches_dense(square_system):
    mesh, K, M = square_system
    result = solve_eigs(K, M, BoundaryCondition.NEUMANN, 4, mesh=mesh)
    values, _ = dense_eigh(K, M, 4)
    assert result.method == "shift-invert"
    assert np.allclose(result.eigenvalues, values, rtol=1e-8, atol=1e-9)


def test_rayleigh_quotients(square_system):
    mesh, K, M = square_system
    result = solve_eigs(K, M, BoundaryCondition.DIRICHLET, 2, mesh=mesh)
    q = rayleigh_quotients(result, K, M)
    assert np.allclose(q, result.eigenvalues, rtol=1e-8)


def test_solver_argument_errors(square_system):
    mesh, K, M = square_system
    with pytest.raises(SolverError):
        solve_eigs(K, M, BoundaryCondition.DIRICHLET, 2)
    with pytest.raises(SolverError):
        solve_eigs(K, M, BoundaryCondition.NEUMANN, 0, mesh=mesh)
    with pytest.raises(SolverError):
        solve_eigs(K, M, BoundaryCondition.NEUMANN, 2, tol=0.0, mesh=mesh)
    with pytest.raises(SolverError):
        solve_eigs(K, M, BoundaryCondition.NEUMANN, mesh.n_vertices + 1, mesh=mesh)


def test_seed_reproducibility(square_system):
    mesh, K, M = square_system
    a = solve_eigs(K, M, BoundaryCondition.DIRICHLET, 3, mesh=mesh, seed=7)
    b = solve_eigs(K, M, BoundaryCondition.DIRICHLET, 3, mesh=mesh, seed=7)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.vectors, b.vectors)


def test_ground_state_sign(square_system):
    mesh, K, M = square_system
    result = solve_eigs(K, M, BoundaryCondition.DIRICHLET, 2, mesh=mesh)
    result.vectors[:, 0] *= -1.0
    fixed = fix_sign(result, SignConvention.GROUND_STATE_POSITIVE)
    assert fixed.vectors[:, 0].min() >= 0.0
    # the input is left untouched
    assert result.vectors[:, 0].max() <= 0.0


def test_ground_state_sign_rejects_mixed_sign(square_system):
    mesh, K, M = square_system
    result = solve_eigs(K, M, BoundaryCondition.DIRICHLET, 2, mesh=mesh)
    result.vectors[:, 0] = result.vectors[:, 1]
    with pytest.raises(SignConventionError):
        fix_sign(result, SignConvention.GROUND_STATE_POSITIVE)


def test_neumann_second_sign(dumbbell_system):
    mesh, K, M = dumbbell_system
    result = solve_eigs(K, M, BoundaryCondition.NEUMANN, 2, mesh=mesh)
    fixed = fix_sign(result, SignConvention.NEUMANN2_NEGATIVE_ON_OMEGA1)
    psi = fixed.vectors[:, 1]
    assert psi[mesh.region_vertices(Region.OMEGA1)].mean() < 0.0
    assert psi[mesh.region_vertices(Region.OMEGA2)].mean() > 0.0
    with pytest.raises(SignConventionError):
        fix_sign(solve_eigs(K, M, BoundaryCondition.NEUMANN, 1, mesh=mesh), SignConvention.NEUMANN2_NEGATIVE_ON_OMEGA1)
