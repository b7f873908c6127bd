"""
Test module for the closed-form spectra, the limit spectrum and the dense reference solve.
"""

import logging

import numpy as np
import pytest
from scipy import sparse
from scipy.integrate import trapezoid

from app.core.errors import OracleError
from app.core.fem import BoundaryCondition, solve_eigs
from app.core.oracle import (
    compare_with_dense,
    dense_reference_eigs,
    interval_dirichlet,
    interval_spectrum,
    limit_spectrum,
    m_subspace_angle,
    rectangle_spectrum,
)

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)

PI2 = np.pi**2


def test_rectangle_spectrum_dirichlet():
    spectrum = rectangle_spectrum(1.0, 1.0, BoundaryCondition.DIRICHLET, 3)
    assert np.allclose(spectrum.eigenvalues, [2 * PI2, 5 * PI2, 5 * PI2])
    assert spectrum.indices[0] == (1, 1)


def test_rectangle_spectrum_neumann():
    spectrum = rectangle_spectrum(2.0, 1.0, BoundaryCondition.NEUMANN, 4)
    assert np.allclose(spectrum.eigenvalues, [0.0, PI2 / 4, PI2, PI2])
    with pytest.raises(OracleError):
        rectangle_spectrum(0.0, 1.0, BoundaryCondition.NEUMANN, 2)


def test_eigenfunctions_are_normalized():
    spectrum = rectangle_spectrum(2.0, 1.0, BoundaryCondition.DIRICHLET, 2, origin=(-3.0, -1.0))
    n = 400
    xs = -3.0 + (np.arange(n) + 0.5) * 2.0 / n
    ys = -1.0 + (np.arange(n) + 0.5) * 1.0 / n
    X, Y = np.meshgrid(xs, ys)
    cell = (2.0 / n) * (1.0 / n)
    for index in range(2):
        values = spectrum.eigenfunction(index, X, Y)
        assert np.sum(values**2) * cell == pytest.approx(1.0, rel=1e-3)
    # vanishes on the left edge of the shifted rectangle
    assert spectrum.eigenfunction(0, -3.0, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_interval_spectrum():
    assert np.allclose(interval_dirichlet(2.0, 3), [PI2 / 4, PI2, 9 * PI2 / 4])
    segment = interval_spectrum(2.0, 2)
    x = np.linspace(0.0, 2.0, 2001)
    values = segment.eigenfunction(1, x)
    assert trapezoid(values**2, x) == pytest.approx(1.0, rel=1e-5)


def test_limit_spectrum():
    dirichlet = limit_spectrum((2.0, 2.0), (1.0, 1.0), BoundaryCondition.DIRICHLET, 3)
    assert dirichlet.values[0] == pytest.approx(PI2 / 2)
    assert dirichlet.labels[0] == "Omega1"
    assert "Connector" not in dirichlet.labels

    neumann = limit_spectrum((2.0, 2.0), (1.0, 1.0), BoundaryCondition.NEUMANN, 5)
    assert np.allclose(neumann.values[:2], [0.0, 0.0])
    assert sorted(neumann.labels[:2]) == ["Omega1", "Omega2"]
    assert "Connector" in neumann.labels
    assert np.allclose(neumann.values[2:5], PI2 / 4)


def test_dense_reference_limits():
    big = sparse.identity(2001, format="csr")
    with pytest.raises(OracleError):
        dense_reference_eigs(big, big, 1)
    small = sparse.identity(5, format="csr")
    with pytest.raises(OracleError):
        dense_reference_eigs(small, small, 0)


def test_sparse_solver_against_dense(square_system):
    mesh, K, M = square_system
    for bc in (BoundaryCondition.DIRICHLET, BoundaryCondition.NEUMANN):
        result = solve_eigs(K, M, bc, 4, mesh=mesh)
        boundary = mesh.boundary_vertices if bc is BoundaryCondition.DIRICHLET else None
        values, vectors = dense_reference_eigs(K, M, 4, boundary)
        comparison = compare_with_dense(result, values, vectors, M)
        logger.info(f"{bc.value}: {comparison.to_json()}")
        assert comparison.max_relative_error <= 1e-7
        assert comparison.min_alignment >= 1.0 - 1e-6
        assert comparison.max_subspace_angle <= 1e-5


def test_subspace_angle_ignores_basis(square_system):
    mesh, K, M = square_system
    result = solve_eigs(K, M, BoundaryCondition.NEUMANN, 3, mesh=mesh)
    U = result.vectors[:, 1:3]
    rotated = U @ np.array([[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]])
    assert m_subspace_angle(U, rotated, M) < 1e-6
