"""
This module sweeps translates of a convex obstacle through a dumbbell, maximizes the first
Dirichlet eigenvalue of the perforated domain and estimates the boundary asymmetry constant.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import shapely
from shapely.geometry import Point

from app.core.errors import AnalysisError, InfeasiblePlacementError, LabError
from app.core.fem import BoundaryCondition, SolverParams, solve_mesh
from app.core.geometry import DEFAULT_H_MAX, DumbbellSpec, ObstacleShape, PolygonDomain, resolve_clearance, subtract_obstacle
from app.core.mesh import MeshParams, mesh_dumbbell

logger = logging.getLogger(__name__)

TIE_RTOL = 1e-10


def square_obstacle(side: float) -> ObstacleShape:
    h = 0.5 * side
    return ObstacleShape(np.array([[-h, -h], [h, -h], [h, h], [-h, h]], dtype=float))


def regular_obstacle(n: int, radius: float) -> ObstacleShape:
    theta = 2.0 * np.pi * np.arange(n) / n - 0.5 * np.pi
    return ObstacleShape(radius * np.column_stack([np.cos(theta), np.sin(theta)]))


def placement_grid(
    domain: PolygonDomain,
    shape: ObstacleShape,
    spacing: float,
    clearance: Optional[float] = None,
    h_max: float = DEFAULT_H_MAX,
) -> List[Tuple[float, float]]:
    """Lattice translates k * spacing that pass the placement test, in lexicographic order."""
    clearance = resolve_clearance(clearance, h_max)
    if not spacing > 0.0:
        raise AnalysisError(f"spacing must be positive, got {spacing}")
    xmin, ymin, xmax, ymax = domain.bounds
    kx = np.arange(np.ceil(xmin / spacing - 1e-9), np.floor(xmax / spacing + 1e-9) + 1)
    ky = np.arange(np.ceil(ymin / spacing - 1e-9), np.floor(ymax / spacing + 1e-9) + 1)
    feasible = []
    for i in kx:
        for j in ky:
            y = (round(float(i * spacing), 12), round(float(j * spacing), 12))
            try:
                subtract_obstacle(domain, shape, y, clearance)
            except InfeasiblePlacementError:
                continue
            feasible.append(y)
    if not feasible:
        raise InfeasiblePlacementError(f"no feasible placement at spacing {spacing} with clearance {clearance}")
    logger.info(f"Placement grid: {len(feasible)} feasible translates at spacing {spacing}")
    return feasible


@dataclass
class PlacementRecord:
    y: Tuple[float, float]
    feasible: bool
    lambda1: float = float("nan")
    n_tri: int = 0
    residual: float = float("nan")
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.feasible and self.error is None and np.isfinite(self.lambda1)


@dataclass
class ObstacleSweepResult:
    placements: List[PlacementRecord]
    baseline_lambda1: float
    y_star: Optional[Tuple[float, float]]
    lambda_star: float
    dist_to_x0: float
    largeness_ratio: float
    ties: List[Tuple[float, float]] = field(default_factory=list)
    x0: Tuple[float, float] = (-2.0, 0.0)
    baseline_error: float = 0.0

    @property
    def monotonicity_floor(self) -> float:
        """Extrapolated unperforated eigenvalue; P1 eigenvalues bound their limits from above."""
        return self.baseline_lambda1 - self.baseline_error

    @property
    def monotonicity_violations(self) -> List[Tuple[float, float]]:
        return [p.y for p in self.placements if p.ok and p.lambda1 <= self.monotonicity_floor]

    @property
    def worst_ratio(self) -> float:
        """Smallest lambda1 over the baseline; below 1 only within the discretization error."""
        values = [p.lambda1 for p in self.placements if p.ok]
        return float(min(values) / self.baseline_lambda1) if values else float("nan")

    @property
    def failures(self) -> List[PlacementRecord]:
        return [p for p in self.placements if p.feasible and p.error is not None]

    def mirror_defect(self) -> float:
        """Largest relative gap between lambda1(y1, y2) and lambda1(y1, -y2) over mirrored pairs."""
        values = {p.y: p.lambda1 for p in self.placements if p.ok}
        gaps = [
            abs(lam - values[(y1, -y2)]) / lam
            for (y1, y2), lam in values.items()
            if (y1, -y2) in values
        ]
        return float(max(gaps)) if gaps else 0.0

    def to_json(self) -> Dict:
        return {
            "baseline_lambda1": self.baseline_lambda1,
            "baseline_error": self.baseline_error,
            "worst_ratio": self.worst_ratio,
            "y_star": list(self.y_star) if self.y_star is not None else None,
            "lambda_star": self.lambda_star,
            "dist_to_x0": self.dist_to_x0,
            "largeness_ratio": self.largeness_ratio,
            "ties": [list(t) for t in self.ties],
            "x0": list(self.x0),
            "n_placements": len(self.placements),
            "n_failures": len(self.failures),
            "monotonicity_violations": [list(y) for y in self.monotonicity_violations],
        }


def _evaluate_placement(task) -> PlacementRecord:
    spec, shape, y, clearance, mesh_params, solver_params = task
    try:
        domain = subtract_obstacle(spec.domain, shape, y, clearance)
    except InfeasiblePlacementError as e:
        return PlacementRecord(y=y, feasible=False, error=str(e))
    try:
        mesh = mesh_dumbbell(domain, spec, mesh_params)
        result = solve_mesh(mesh, BoundaryCondition.DIRICHLET, 1, solver_params.tol, solver_params.seed)
    except LabError as e:
        logger.warning(f"Placement {y} failed: {e}")
        return PlacementRecord(y=y, feasible=True, error=f"{type(e).__name__}: {e}")
    return PlacementRecord(
        y=y,
        feasible=True,
        lambda1=float(result.eigenvalues[0]),
        n_tri=mesh.n_triangles,
        residual=float(result.residuals[0]),
    )


def unperforated_lambda1(spec: DumbbellSpec, mesh_params: MeshParams, solver_params: SolverParams) -> float:
    mesh = mesh_dumbbell(spec.domain, spec, mesh_params)
    result = solve_mesh(mesh, BoundaryCondition.DIRICHLET, 1, solver_params.tol, solver_params.seed)
    return float(result.eigenvalues[0])


def discretization_error(
    spec: DumbbellSpec, mesh_params: MeshParams, solver_params: SolverParams, coarse: Optional[float] = None
) -> float:
    """Richardson estimate of lambda_h - lambda for the unperforated dumbbell from a second solve at h/2."""
    if coarse is None:
        coarse = unperforated_lambda1(spec, mesh_params, solver_params)
    fine = unperforated_lambda1(spec, replace(mesh_params, h_max=0.5 * mesh_params.h_max), solver_params)
    error = abs(coarse - fine) * 4.0 / 3.0
    logger.info(f"Unperforated lambda1 {coarse:.10g} at h, {fine:.10g} at h/2; error estimate {error:.3e}")
    return error


def sweep(
    spec: DumbbellSpec,
    shape: ObstacleShape,
    grid: Sequence[Tuple[float, float]],
    mesh_params: MeshParams,
    solver_params: SolverParams,
    clearance: Optional[float] = None,
    x0: Tuple[float, float] = (-2.0, 0.0),
    jobs: int = 1,
) -> ObstacleSweepResult:
    """
    Evaluate lambda1 of the perforated dumbbell for each translate and pick the maximizer.

    Args:
        spec: Dumbbell description
        shape: Obstacle shape centred at the origin
        grid: Translates to try, usually from placement_grid
        mesh_params: Mesh size and quality settings
        solver_params: Eigensolver tolerance and seed
        clearance: Minimum distance between the obstacle and the boundary, 2 * h_max when None
        x0: Reference hot spot for the proximity distance
        jobs: Number of worker processes

    Returns:
        ObstacleSweepResult: Per-placement records in grid order and the optimum
    """
    clearance = resolve_clearance(clearance, mesh_params.h_max)
    baseline = unperforated_lambda1(spec, mesh_params, solver_params)
    baseline_error = discretization_error(spec, mesh_params, solver_params, baseline)
    tasks = [(spec, shape, (float(y[0]), float(y[1])), clearance, mesh_params, solver_params) for y in grid]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_evaluate_placement, tasks))
    else:
        records = [_evaluate_placement(t) for t in tasks]

    good = [r for r in records if r.ok]
    x0 = (float(x0[0]), float(x0[1]))
    if not good:
        logger.error("No placement produced an eigenvalue")
        return ObstacleSweepResult(
            placements=records,
            baseline_lambda1=baseline,
            y_star=None,
            lambda_star=float("nan"),
            dist_to_x0=float("nan"),
            largeness_ratio=float("nan"),
            x0=x0,
            baseline_error=baseline_error,
        )

    best = max(r.lambda1 for r in good)
    tied = [r for r in good if r.lambda1 >= best * (1.0 - TIE_RTOL)]

    def distance(r: PlacementRecord) -> float:
        return float(Point(x0).distance(shape.translated(r.y)))

    winner = min(tied, key=distance)
    if len(tied) > 1:
        logger.info(f"{len(tied)} placements tie at lambda1 = {best:.10g}; picked the one nearest x0")
    result = ObstacleSweepResult(
        placements=records,
        baseline_lambda1=baseline,
        y_star=winner.y,
        lambda_star=winner.lambda1,
        dist_to_x0=distance(winner),
        largeness_ratio=winner.lambda1 / baseline,
        ties=[r.y for r in tied] if len(tied) > 1 else [],
        x0=x0,
        baseline_error=baseline_error,
    )
    logger.info(
        f"Obstacle sweep: y* = {result.y_star}, lambda* = {result.lambda_star:.6f}, "
        f"baseline {baseline:.6f}, d(x0, y*+D) = {result.dist_to_x0:.4f}"
    )
    return result


# ---------------------------------------------------------------------------
# asymmetry


def ball_exterior_fraction(
    domain: PolygonDomain, x: Sequence[float], r: float, n: int, rng: np.random.Generator
) -> Tuple[float, float]:
    """Monte Carlo estimate of Vol(B(x, r) minus Omega) / Vol(B(x, r)) with its standard error."""
    radius = r * np.sqrt(rng.random(n))
    theta = 2.0 * np.pi * rng.random(n)
    px = x[0] + radius * np.cos(theta)
    py = x[1] + radius * np.sin(theta)
    outside = ~shapely.contains_xy(domain.polygon, px, py)
    fraction = float(np.mean(outside))
    return fraction, float(np.sqrt(max(fraction * (1.0 - fraction), 1e-300) / n))


@dataclass
class AsymmetryEstimate:
    alpha: float
    standard_error: float
    worst_point: Tuple[float, float]
    worst_radius: float
    n_balls: int

    def to_json(self) -> Dict:
        return {
            "alpha": self.alpha,
            "standard_error": self.standard_error,
            "worst_point": list(self.worst_point),
            "worst_radius": self.worst_radius,
            "n_balls": self.n_balls,
        }


def estimate_asymmetry(
    domain: PolygonDomain,
    radii: Sequence[float],
    n_boundary_samples: int = 200,
    n_volume_samples: int = 2000,
    seed: int = 0,
) -> AsymmetryEstimate:
    """Lower envelope of the exterior ball fraction over boundary points (polygon corners included) and radii."""
    radii = [float(r) for r in radii]
    if not radii or any(r <= 0.0 for r in radii):
        raise AnalysisError("radii must be a non-empty list of positive values")
    if n_boundary_samples < 100 or n_volume_samples < 100:
        raise AnalysisError("sample counts must be at least 100")
    rng = np.random.default_rng(seed)
    boundary = domain.polygon.boundary
    distances = rng.random(n_boundary_samples) * boundary.length
    sampled = np.array([boundary.interpolate(d).coords[0] for d in np.sort(distances)])
    corners = np.vstack(domain.rings)
    centres = np.vstack([corners, sampled])

    best = (np.inf, 0.0, (0.0, 0.0), 0.0)
    for c in centres:
        for r in radii:
            frac, se = ball_exterior_fraction(domain, c, r, n_volume_samples, rng)
            if frac < best[0]:
                best = (frac, se, (float(c[0]), float(c[1])), r)
    estimate = AsymmetryEstimate(
        alpha=best[0], standard_error=best[1], worst_point=best[2], worst_radius=best[3], n_balls=len(centres) * len(radii)
    )
    logger.info(f"Asymmetry estimate alpha = {estimate.alpha:.4f} +/- {estimate.standard_error:.4f} at {estimate.worst_point}")
    return estimate
