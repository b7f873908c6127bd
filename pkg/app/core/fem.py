"""
This module assembles P1 stiffness and consistent mass matrices and solves the generalized
symmetric eigenproblem K u = lambda M u for the smallest Dirichlet or Neumann eigenpairs.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh, splu

from app.core.errors import MeshingError, SignConventionError, SolverConvergenceError, SolverError
from app.core.geometry import Region
from app.core.mesh import Mesh

logger = logging.getLogger(__name__)

DENSE_LIMIT = 2000
ITERATION_BUDGET = 50_000
MAX_RESTARTS = 3
CLUSTER_RTOL = 1e-8
GROUND_STATE_NOISE = 1e-6


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class SignConvention(str, Enum):
    GROUND_STATE_POSITIVE = "ground_state_positive"
    NEUMANN2_NEGATIVE_ON_OMEGA1 = "neumann2_negative_on_omega1"


@dataclass(eq=False)
class EigenResult:
    bc: BoundaryCondition
    eigenvalues: np.ndarray
    vectors: np.ndarray  # (n_vertices, k), M-orthonormal columns
    residuals: np.ndarray
    mesh: Optional[Mesh] = None
    clusters: List[List[int]] = field(default_factory=list)
    method: str = "shift-invert"

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    @property
    def pairs(self) -> List[Tuple[float, np.ndarray]]:
        return [(float(lam), self.vectors[:, i]) for i, lam in enumerate(self.eigenvalues)]

    def to_json(self) -> Dict:
        return {
            "bc": self.bc.value,
            "method": self.method,
            "eigenvalues": self.eigenvalues.tolist(),
            "residuals": self.residuals.tolist(),
            "clusters": self.clusters,
            "n_vertices": int(self.vectors.shape[0]),
        }


def assemble(mesh: Mesh) -> Tuple[sparse.csr_matrix, sparse.csr_matrix]:
    """Standard P1 stiffness K and consistent mass M in CSR form."""
    p = mesh.vertices[mesh.triangles]  # (nt, 3, 2)
    x, y = p[:, :, 0], p[:, :, 1]
    # gradient coefficients of the barycentric basis, cyclic in (i, j, k)
    b = np.roll(y, -1, axis=1) - np.roll(y, -2, axis=1)
    c = np.roll(x, -2, axis=1) - np.roll(x, -1, axis=1)
    area = 0.5 * (b[:, 0] * c[:, 1] - b[:, 1] * c[:, 0])
    scale = max(float(np.max(np.abs(mesh.vertices))), 1.0) ** 2
    bad = np.abs(area) <= 1e-14 * scale
    if np.any(bad):
        t = int(np.flatnonzero(bad)[0])
        raise MeshingError(f"degenerate triangle {t} with area {area[t]:.3e}")

    k_loc = (b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]) / (4.0 * np.abs(area))[:, None, None]
    m_loc = (np.abs(area) / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))[None, :, :]

    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    n = mesh.n_vertices
    K = sparse.coo_matrix((k_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sparse.coo_matrix((m_loc.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def _clusters(values: np.ndarray) -> List[List[int]]:
    groups: List[List[int]] = []
    for i, lam in enumerate(values):
        if groups and abs(lam - values[groups[-1][-1]]) <= CLUSTER_RTOL * max(abs(lam), 1.0):
            groups[-1].append(i)
        else:
            groups.append([i])
    return [g for g in groups if len(g) > 1]


def _gauge(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _residuals(K, M, values: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """||K u - lambda M u|| in the lumped-mass inverse norm, relative to max(1, |lambda|)."""
    lumped = np.asarray(M.sum(axis=1)).ravel()
    r = K @ vectors - (M @ vectors) * values[None, :]
    norms = np.sqrt(np.sum(r * r / lumped[:, None], axis=0))
    return norms / np.maximum(1.0, np.abs(values))


def dense_eigh(K, M, k: int) -> Tuple[np.ndarray, np.ndarray]:
    Kd = K.toarray() if sparse.issparse(K) else np.asarray(K)
    Md = M.toarray() if sparse.issparse(M) else np.asarray(M)
    values, vectors = scipy.linalg.eigh(Kd, Md, subset_by_index=[0, k - 1])
    return values, vectors


def _shift_invert(K, M, nev: int, sigma: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    n = K.shape[0]
    lu = None
    for attempt in range(MAX_RESTARTS + 1):
        try:
            lu = splu((K - sigma * M).tocsc())
            break
        except RuntimeError as e:
            logger.warning(f"Factorization of K - ({sigma}) M failed ({e}); moving the shift")
            sigma = sigma - 1.0 if sigma != 0.0 else -1.0
    if lu is None:
        raise SolverError("factorization failed; shift adjustment exhausted")

    op_inv = LinearOperator(matvec=lu.solve, shape=K.shape, dtype=K.dtype)
    ncv = min(n, max(2 * nev + 1, 20))
    maxiter = max(1, ITERATION_BUDGET // ncv)
    last_error: Optional[Exception] = None
    for attempt in range(MAX_RESTARTS + 1):
        v0 = np.random.default_rng(seed + attempt).standard_normal(n)
        try:
            values, vectors = eigsh(
                K, nev, M, sigma=sigma, which="LM", OPinv=op_inv, v0=v0, ncv=ncv, maxiter=maxiter, tol=0.0
            )
            break
        except (ArpackNoConvergence, ArpackError) as e:
            last_error = e
            logger.warning(f"ARPACK attempt {attempt + 1} failed: {e}")
    else:
        raise SolverConvergenceError(f"shift-invert Lanczos did not converge after {MAX_RESTARTS + 1} starts: {last_error}")

    # one block inverse-iteration step followed by Rayleigh-Ritz
    W = lu.solve(np.asarray(M @ vectors))
    Kr = W.T @ (K @ W)
    Mr = W.T @ (M @ W)
    Kr = 0.5 * (Kr + Kr.T)
    Mr = 0.5 * (Mr + Mr.T)
    values, Z = scipy.linalg.eigh(Kr, Mr)
    return values, W @ Z


def solve_eigs(
    K,
    M,
    bc: BoundaryCondition,
    k: int,
    tol: float = 1e-9,
    *,
    mesh: Optional[Mesh] = None,
    boundary: Optional[np.ndarray] = None,
    seed: int = 0,
    sigma: Optional[float] = None,
) -> EigenResult:
    """
    Compute the k smallest eigenpairs of K u = lambda M u.

    Args:
        K: Stiffness matrix
        M: Consistent mass matrix
        bc: Dirichlet eliminates the boundary vertices, Neumann leaves the system untouched
        k: Number of eigenpairs
        tol: Relative residual tolerance
        mesh: Mesh the matrices belong to; supplies the boundary vertices for Dirichlet
        boundary: Explicit boundary vertex indices, overriding the mesh
        seed: Seed for the Lanczos start vectors
        sigma: Shift; defaults to 0 for Dirichlet and -1 for Neumann

    Returns:
        EigenResult: Ascending eigenvalues with M-orthonormal vertex vectors
    """
    bc = BoundaryCondition(bc)
    if k < 1:
        raise SolverError(f"k must be >= 1, got {k}")
    if not tol > 0.0:
        raise SolverError(f"tol must be positive, got {tol}")
    K = sparse.csr_matrix(K)
    M = sparse.csr_matrix(M)
    n = K.shape[0]

    if bc is BoundaryCondition.DIRICHLET:
        if boundary is None:
            if mesh is None:
                raise SolverError("Dirichlet solves need the mesh or explicit boundary vertices")
            boundary = mesh.boundary_vertices
        mask = np.ones(n, dtype=bool)
        mask[np.asarray(boundary, dtype=np.int64)] = False
        free = np.flatnonzero(mask)
        Kf, Mf = K[free][:, free], M[free][:, free]
        shift = 0.0 if sigma is None else sigma
    else:
        free = np.arange(n)
        Kf, Mf = K, M
        shift = -1.0 if sigma is None else sigma

    nf = len(free)
    if k > nf:
        raise SolverError(f"requested {k} eigenpairs from a system of dimension {nf}")

    nev = min(k + 2, nf)
    method = "shift-invert"
    if nev >= nf - 1:
        if nf > DENSE_LIMIT:
            raise SolverError(f"dimension {nf} too large for the dense path")
        values, vectors = dense_eigh(Kf, Mf, nev)
        method = "dense"
    else:
        try:
            values, vectors = _shift_invert(Kf, Mf, nev, shift, seed)
        except SolverError:
            if nf > DENSE_LIMIT:
                raise
            logger.warning(f"Falling back to the dense solver for dimension {nf}")
            values, vectors = dense_eigh(Kf, Mf, nev)
            method = "dense"

    order = np.argsort(values, kind="stable")[:k]
    values, vectors = values[order], vectors[:, order]
    vectors = _gauge(vectors)
    residuals = _residuals(Kf, Mf, values, vectors)

    full = np.zeros((n, k))
    full[free] = vectors
    result = EigenResult(
        bc=bc,
        eigenvalues=values,
        vectors=full,
        residuals=residuals,
        mesh=mesh,
        clusters=_clusters(values),
        method=method,
    )
    if np.any(residuals > tol):
        raise SolverConvergenceError(
            f"eigenpairs missed the residual tolerance {tol}: worst {float(residuals.max()):.3e}", residuals.tolist()
        )
    logger.info(f"{bc.value} eigenvalues ({method}, n={nf}): {np.array2string(values, precision=6)}")
    return result


def solve_mesh(mesh: Mesh, bc: BoundaryCondition, k: int, tol: float = 1e-9, seed: int = 0) -> EigenResult:
    K, M = assemble(mesh)
    return solve_eigs(K, M, bc, k, tol, mesh=mesh, seed=seed)


def rayleigh_quotients(result: EigenResult, K, M) -> np.ndarray:
    U = result.vectors
    return np.einsum("ij,ij->j", U, K @ U) / np.einsum("ij,ij->j", U, M @ U)


def fix_sign(result: EigenResult, convention: SignConvention) -> EigenResult:
    """Return a copy whose eigenvector signs follow the requested convention."""
    convention = SignConvention(convention)
    vectors = result.vectors.copy()
    if convention is SignConvention.GROUND_STATE_POSITIVE:
        u = vectors[:, 0]
        if abs(u.min()) > abs(u.max()):
            u = -u
        floor = GROUND_STATE_NOISE * float(np.max(np.abs(u)))
        if u.min() < -floor:
            raise SignConventionError(
                f"ground state has mixed sign: min {u.min():.3e} against noise floor {floor:.3e}"
            )
        vectors[:, 0] = u
    else:
        if result.k < 2:
            raise SignConventionError("the second eigenfunction was not computed")
        if result.mesh is None:
            raise SignConventionError("region tags are needed to orient the second eigenfunction")
        omega1 = result.mesh.region_vertices(Region.OMEGA1)
        if len(omega1) == 0:
            raise SignConventionError("mesh has no Omega1 vertices")
        if vectors[omega1, 1].mean() > 0.0:
            vectors[:, 1] = -vectors[:, 1]
    return replace(result, vectors=vectors)


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-9
    seed: int = 0
