"""
Closed-form eigenpairs for rectangles and segments, limit spectra of the dumbbell family and a
dense brute-force reference solve used to validate the sparse eigensolver.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
from scipy import sparse

from app.core.errors import OracleError
from app.core.fem import DENSE_LIMIT, BoundaryCondition, EigenResult, dense_eigh

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class AnalyticSpectrum:
    """Sorted separable spectrum of a rectangle [x0, x0+a] x [y0, y0+b] or a segment of length L."""

    kind: str
    dims: Tuple[float, ...]
    bc: BoundaryCondition
    eigenvalues: np.ndarray
    indices: List[Tuple[int, ...]]
    origin: Tuple[float, float] = (0.0, 0.0)

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @staticmethod
    def _factor(m: int, length: float, t: np.ndarray, bc: BoundaryCondition) -> np.ndarray:
        w = m * np.pi / length
        if bc is BoundaryCondition.DIRICHLET:
            return np.sqrt(2.0 / length) * np.sin(w * t)
        if m == 0:
            return np.full_like(t, 1.0 / np.sqrt(length))
        return np.sqrt(2.0 / length) * np.cos(w * t)

    def eigenfunction(self, index: int, x, y=None) -> np.ndarray:
        """L2-normalized eigenfunction number `index` (0-based) at the given points."""
        x = np.asarray(x, dtype=float)
        if self.kind == "interval":
            (m,) = self.indices[index]
            return self._factor(m, self.dims[0], x - self.origin[0], self.bc)
        m, n = self.indices[index]
        a, b = self.dims
        y = np.asarray(y, dtype=float)
        return self._factor(m, a, x - self.origin[0], self.bc) * self._factor(n, b, y - self.origin[1], self.bc)


def rectangle_spectrum(
    a: float, b: float, bc: BoundaryCondition, k: int, origin: Tuple[float, float] = (0.0, 0.0)
) -> AnalyticSpectrum:
    """k smallest values of pi^2 (m^2/a^2 + n^2/b^2); m, n >= 1 (Dirichlet) or >= 0 (Neumann)."""
    if not (a > 0.0 and b > 0.0):
        raise OracleError(f"rectangle sides must be positive, got {a} x {b}")
    if k < 1:
        raise OracleError(f"k must be >= 1, got {k}")
    bc = BoundaryCondition(bc)
    start = 1 if bc is BoundaryCondition.DIRICHLET else 0
    entries = []
    for m in range(start, start + k):
        for n in range(start, start + k):
            entries.append((np.pi**2 * (m * m / (a * a) + n * n / (b * b)), m, n))
    entries.sort()
    entries = entries[:k]
    return AnalyticSpectrum(
        kind="rectangle",
        dims=(float(a), float(b)),
        bc=bc,
        eigenvalues=np.array([e[0] for e in entries]),
        indices=[(e[1], e[2]) for e in entries],
        origin=(float(origin[0]), float(origin[1])),
    )


def interval_dirichlet(L: float, k: int) -> np.ndarray:
    """eta_j = (j pi / L)^2 for j = 1..k."""
    if not L > 0.0:
        raise OracleError(f"segment length must be positive, got {L}")
    j = np.arange(1, k + 1, dtype=float)
    return (j * np.pi / L) ** 2


def interval_spectrum(L: float, k: int) -> AnalyticSpectrum:
    return AnalyticSpectrum(
        kind="interval",
        dims=(float(L),),
        bc=BoundaryCondition.DIRICHLET,
        eigenvalues=interval_dirichlet(L, k),
        indices=[(j,) for j in range(1, k + 1)],
    )


@dataclass
class LimitSpectrum:
    values: np.ndarray
    labels: List[str]

    def to_json(self) -> Dict:
        return {"values": self.values.tolist(), "labels": self.labels}


def limit_spectrum(
    rect1: Tuple[float, float],
    rect2: Tuple[float, float],
    bc: BoundaryCondition,
    k: int,
    connector_length: float = 2.0,
) -> LimitSpectrum:
    """
    Limit of the k smallest dumbbell eigenvalues as the connector closes.

    Dirichlet: the base-domain spectra merged. Neumann: both base spectra merged with the
    Dirichlet spectrum of the connector segment.
    """
    bc = BoundaryCondition(bc)
    parts = [
        (rectangle_spectrum(rect1[0], rect1[1], bc, k).eigenvalues, "Omega1"),
        (rectangle_spectrum(rect2[0], rect2[1], bc, k).eigenvalues, "Omega2"),
    ]
    if bc is BoundaryCondition.NEUMANN:
        parts.append((interval_dirichlet(connector_length, k), "Connector"))
    merged = sorted((float(v), label) for values, label in parts for v in values)[:k]
    return LimitSpectrum(values=np.array([m[0] for m in merged]), labels=[m[1] for m in merged])


def dense_reference_eigs(
    K, M, k: int, boundary: Optional[Sequence[int]] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Brute-force generalized symmetric-definite solve; boundary rows are eliminated when given."""
    n = K.shape[0]
    free = np.arange(n)
    if boundary is not None:
        mask = np.ones(n, dtype=bool)
        mask[np.asarray(boundary, dtype=np.int64)] = False
        free = np.flatnonzero(mask)
    if len(free) > DENSE_LIMIT:
        raise OracleError(f"dense reference limited to dimension {DENSE_LIMIT}, got {len(free)}")
    if not 1 <= k <= len(free):
        raise OracleError(f"k = {k} outside [1, {len(free)}]")
    K = sparse.csr_matrix(K)
    M = sparse.csr_matrix(M)
    values, vectors = dense_eigh(K[free][:, free], M[free][:, free], k)
    full = np.zeros((n, k))
    full[free] = vectors
    return values, full


@dataclass
class OracleComparison:
    relative_errors: np.ndarray
    alignments: Dict[int, float] = field(default_factory=dict)
    subspace_angles: Dict[str, float] = field(default_factory=dict)

    @property
    def max_relative_error(self) -> float:
        return float(np.max(self.relative_errors))

    @property
    def min_alignment(self) -> float:
        return min(self.alignments.values()) if self.alignments else 1.0

    @property
    def max_subspace_angle(self) -> float:
        return max(self.subspace_angles.values()) if self.subspace_angles else 0.0

    def to_json(self) -> Dict:
        return {
            "relative_errors": self.relative_errors.tolist(),
            "alignments": {str(i): a for i, a in self.alignments.items()},
            "subspace_angles": self.subspace_angles,
        }


def m_subspace_angle(U: np.ndarray, V: np.ndarray, M) -> float:
    """Largest principal angle between span(U) and span(V) in the M inner product."""
    def orthonormal(A):
        G = A.T @ (M @ A)
        L = scipy.linalg.cholesky(0.5 * (G + G.T), lower=True)
        return scipy.linalg.solve_triangular(L, A.T, lower=True).T

    Uo, Vo = orthonormal(U), orthonormal(V)
    s = scipy.linalg.svdvals(Uo.T @ (M @ Vo))
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))


def compare_with_dense(
    result: EigenResult,
    dense_values: np.ndarray,
    dense_vectors: np.ndarray,
    M,
    groups: Optional[List[List[int]]] = None,
    cluster_rtol: float = 1e-6,
) -> OracleComparison:
    """Eigenvalue errors, M-alignment for simple values and subspace angles for clusters."""
    k = min(result.k, len(dense_values))
    lam_s, lam_d = result.eigenvalues[:k], np.asarray(dense_values)[:k]
    rel = np.abs(lam_s - lam_d) / np.maximum(np.abs(lam_d), 1.0)

    if groups is None:
        groups = []
        for i in range(k):
            if groups and abs(lam_d[i] - lam_d[groups[-1][-1]]) <= cluster_rtol * max(abs(lam_d[i]), 1.0):
                groups[-1].append(i)
            else:
                groups.append([i])
    report = OracleComparison(relative_errors=rel)
    clustered = set()
    for g in groups:
        if len(g) > 1:
            angle = m_subspace_angle(result.vectors[:, g], dense_vectors[:, g], M)
            report.subspace_angles["-".join(str(i) for i in g)] = angle
            clustered.update(g)
    for i in range(k):
        if i not in clustered:
            report.alignments[i] = float(abs(result.vectors[:, i] @ (M @ dense_vectors[:, i])))
    return report
