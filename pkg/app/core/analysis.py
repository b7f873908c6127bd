"""
Diagnostics on computed eigenfunctions: L2 localization, the Neumann limit coefficients,
hot spots, sup-norm deviations and the decay of cross-section norms along the connector.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import shapely
from scipy.integrate import simpson
from shapely.geometry import LineString

from app.core.errors import AnalysisError, InapplicableHypothesisError
from app.core.fem import GROUND_STATE_NOISE, EigenResult
from app.core.geometry import DumbbellSpec, Region
from app.core.mesh import Mesh
from app.core.oracle import LimitSpectrum

logger = logging.getLogger(__name__)

BETA = 1.0 / np.sqrt(2.0)
_Z_NUDGE = 1e-10
# cross-section norms below this fraction of max|u| count as solver noise
DECAY_NOISE_FLOOR = 1e-9
MIN_RESOLVED_STATIONS = 3


def region_mass(u: np.ndarray, mesh: Mesh, region: Union[Region, str]) -> float:
    """Exact integral of the P1 interpolant squared over triangles whose centroid lies in region."""
    mask = mesh.triangle_region == Region(region).value
    if not np.any(mask):
        raise AnalysisError(f"mesh has no elements in region {Region(region).value}")
    ut = np.asarray(u, dtype=float)[mesh.triangles[mask]]
    squares = np.sum(ut * ut, axis=1)
    cross = ut[:, 0] * ut[:, 1] + ut[:, 1] * ut[:, 2] + ut[:, 2] * ut[:, 0]
    return float(np.sum(mesh.areas[mask] / 6.0 * (squares + cross)))


def region_masses(u: np.ndarray, mesh: Mesh) -> Dict[str, float]:
    """Masses over Omega1, Omega2 and the connector; absent regions contribute 0."""
    out = {}
    for region in (Region.OMEGA1, Region.OMEGA2, Region.CONNECTOR):
        try:
            out[region.value] = region_mass(u, mesh, region)
        except AnalysisError:
            out[region.value] = 0.0
    return out


def neumann_coefficients(area1: float, area2: float) -> Tuple[float, float]:
    """Limit coefficients (alpha1, alpha2) of the second Neumann eigenfunction on the two base domains."""
    if not (area1 > 0.0 and area2 > 0.0):
        raise AnalysisError(f"areas must be positive, got {area1}, {area2}")
    total = area1 + area2
    return -float(np.sqrt(area2 / total)), float(np.sqrt(area1 / total))


def sup_deviation(
    u: np.ndarray,
    mesh: Mesh,
    reference: Union[float, np.ndarray, Callable[[np.ndarray], np.ndarray]],
    region: Optional[Union[Region, str]] = None,
    mask: Optional[np.ndarray] = None,
) -> float:
    """max |u - reference| over vertices selected by region and/or a boolean mask."""
    selected = np.ones(mesh.n_vertices, dtype=bool)
    if region is not None:
        selected &= mesh.vertex_region == Region(region).value
    if mask is not None:
        selected &= np.asarray(mask, dtype=bool)
    if not np.any(selected):
        raise AnalysisError("no vertices selected for the sup-norm deviation")
    if callable(reference):
        ref = np.asarray(reference(mesh.vertices[selected]), dtype=float)
    else:
        ref = np.broadcast_to(np.asarray(reference, dtype=float), mesh.vertices.shape[:1])[selected]
    return float(np.max(np.abs(np.asarray(u)[selected] - ref)))


@dataclass
class LocalizationReport:
    masses: Dict[str, float]
    alpha1: float
    alpha2: float
    deep_values: Tuple[float, float]
    deviations: Tuple[float, float]
    relative_deviations: Tuple[float, float]
    sup_deviations: Tuple[float, float]
    deep_counts: Tuple[int, int]
    margins: Tuple[float, float]

    @property
    def mass_total(self) -> float:
        return float(sum(self.masses.values()))

    def to_json(self) -> Dict:
        return {
            "masses": self.masses,
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "deep_values": list(self.deep_values),
            "deviations": list(self.deviations),
            "relative_deviations": list(self.relative_deviations),
            "sup_deviations": list(self.sup_deviations),
            "deep_counts": list(self.deep_counts),
            "margins": list(self.margins),
        }


def deep_vertices(mesh: Mesh, spec: DumbbellSpec, region: Region, margin: float) -> np.ndarray:
    """Boolean mask of region vertices at distance >= margin from the connector."""
    in_region = mesh.vertex_region == region.value
    dist = shapely.distance(shapely.points(mesh.vertices), spec.connector.polygon)
    return in_region & (dist >= margin)


def localization_report(
    u: np.ndarray,
    mesh: Mesh,
    spec: DumbbellSpec,
    r1: float = 0.3,
    r2: float = 0.3,
    h_max: Optional[float] = None,
) -> LocalizationReport:
    """Compare a Neumann second eigenfunction against its limit alpha_i / sqrt(|Omega_i|) away from the seam."""
    h = mesh.h_max_used if h_max is None else h_max
    a1, a2 = spec.omega1.area, spec.omega2.area
    alpha1, alpha2 = neumann_coefficients(a1, a2)
    targets = (alpha1 / np.sqrt(a1), alpha2 / np.sqrt(a2))
    margins = (max(2.0 * h, 0.5 * r1), max(2.0 * h, 0.5 * r2))

    deep, devs, rels, sups, counts = [], [], [], [], []
    for region, target, margin in zip((Region.OMEGA1, Region.OMEGA2), targets, margins):
        mask = deep_vertices(mesh, spec, region, margin)
        if not np.any(mask):
            raise AnalysisError(f"no {region.value} vertices deeper than {margin} from the connector")
        value = float(np.mean(u[mask]))
        deep.append(value)
        devs.append(abs(value - target))
        rels.append(abs(value - target) / abs(target))
        sups.append(sup_deviation(u, mesh, target, mask=mask))
        counts.append(int(np.sum(mask)))
    return LocalizationReport(
        masses=region_masses(u, mesh),
        alpha1=alpha1,
        alpha2=alpha2,
        deep_values=tuple(deep),
        deviations=tuple(devs),
        relative_deviations=tuple(rels),
        sup_deviations=tuple(sups),
        deep_counts=tuple(counts),
        margins=margins,
    )


@dataclass
class PairLocalization:
    index: int
    eigenvalue: float
    region: str
    mass: float


def eigenpair_localization(result: EigenResult, mesh: Optional[Mesh] = None) -> List[PairLocalization]:
    """Dominant region and its L2 mass for every computed pair."""
    mesh = mesh or result.mesh
    if mesh is None:
        raise AnalysisError("eigenpair localization needs the mesh")
    out = []
    for i, (lam, u) in enumerate(result.pairs):
        masses = region_masses(u, mesh)
        region = max(masses, key=masses.get)
        out.append(PairLocalization(index=i, eigenvalue=lam, region=region, mass=masses[region]))
    return out


@dataclass
class LimitMatch:
    value: float
    limit: float
    label: str
    relative_gap: float


def match_limit_spectrum(eigenvalues: Sequence[float], limit: LimitSpectrum) -> List[LimitMatch]:
    """Nearest limit value (and its origin label) for each computed eigenvalue."""
    if len(limit.values) == 0:
        raise AnalysisError("empty limit spectrum")
    out = []
    for lam in eigenvalues:
        j = int(np.argmin(np.abs(limit.values - lam)))
        nearest = float(limit.values[j])
        out.append(
            LimitMatch(
                value=float(lam),
                limit=nearest,
                label=limit.labels[j],
                relative_gap=abs(lam - nearest) / max(abs(nearest), 1.0),
            )
        )
    return out


# ---------------------------------------------------------------------------
# hot spots


@dataclass
class HotSpotReport:
    max_value: float
    argmax_set: np.ndarray
    argmax_points: np.ndarray
    x0: Tuple[float, float]
    distance: float
    inner_radius_diag: Optional[float] = None
    inradius_at_max: Optional[float] = None
    inradius_ratio: Optional[float] = None
    peak_point: Optional[Tuple[float, float]] = None
    peak_distance: Optional[float] = None
    local_h: Optional[float] = None

    def to_json(self) -> Dict:
        return {
            "max_value": self.max_value,
            "argmax_set": self.argmax_set.tolist(),
            "argmax_points": self.argmax_points.tolist(),
            "x0": list(self.x0),
            "distance": self.distance,
            "inner_radius_diag": self.inner_radius_diag,
            "inradius_at_max": self.inradius_at_max,
            "inradius_ratio": self.inradius_ratio,
            "peak_point": None if self.peak_point is None else list(self.peak_point),
            "peak_distance": self.peak_distance,
            "local_h": self.local_h,
        }


def boundary_lines(mesh: Mesh):
    segments = mesh.vertices[mesh.boundary_edges]
    return shapely.multilinestrings(shapely.linestrings(segments))


def refine_peak(u: np.ndarray, mesh: Mesh, vertex: int) -> Tuple[Tuple[float, float], float]:
    """Maximum of a least-squares quadratic through the two-ring patch of vertex.

    Returns the refined point and the mean edge length at the vertex. Falls back to the vertex
    itself when the fit is not concave or its maximum lies more than 1.5 edge lengths away.
    """
    ring1 = np.unique(mesh.triangles[np.any(mesh.triangles == vertex, axis=1)])
    ring2 = np.unique(mesh.triangles[np.any(np.isin(mesh.triangles, ring1), axis=1)])
    p = mesh.vertices[vertex]
    local_h = float(np.mean(np.hypot(*(mesh.vertices[ring1[ring1 != vertex]] - p).T)))
    if len(ring2) < 6:
        return (float(p[0]), float(p[1])), local_h
    d = (mesh.vertices[ring2] - p) / local_h
    design = np.column_stack([np.ones(len(d)), d[:, 0], d[:, 1], d[:, 0] ** 2, d[:, 0] * d[:, 1], d[:, 1] ** 2])
    coef = np.linalg.lstsq(design, u[ring2], rcond=None)[0]
    hessian = np.array([[2.0 * coef[3], coef[4]], [coef[4], 2.0 * coef[5]]])
    if np.any(np.linalg.eigvalsh(hessian) >= 0.0):
        return (float(p[0]), float(p[1])), local_h
    step = -np.linalg.solve(hessian, coef[1:3])
    if np.hypot(*step) > 1.5:
        return (float(p[0]), float(p[1])), local_h
    q = p + local_h * step
    return (float(q[0]), float(q[1])), local_h


def hot_spots(
    u: np.ndarray,
    mesh: Mesh,
    tol_rel: float = 1e-3,
    x0: Sequence[float] = (-2.0, 0.0),
    eigenvalue: Optional[float] = None,
) -> HotSpotReport:
    """Vertices within tol_rel of the maximum, their distance to x0 and the inscribed-ball diagnostic."""
    u = np.asarray(u, dtype=float)
    max_value = float(u.max())
    if max_value <= GROUND_STATE_NOISE * float(np.max(np.abs(u))):
        raise AnalysisError("hot spots need a positively oriented eigenfunction")
    members = np.flatnonzero(u >= (1.0 - tol_rel) * max_value)
    points = mesh.vertices[members]
    x0 = (float(x0[0]), float(x0[1]))
    distance = float(np.min(np.hypot(points[:, 0] - x0[0], points[:, 1] - x0[1])))

    top = int(np.argmax(u))
    peak = mesh.vertices[top]
    inradius = float(shapely.distance(shapely.points(peak), boundary_lines(mesh)))
    peak_point, local_h = refine_peak(u, mesh, top)
    report = HotSpotReport(
        max_value=max_value,
        argmax_set=members,
        argmax_points=points,
        x0=x0,
        distance=distance,
        inradius_at_max=inradius,
        peak_point=peak_point,
        peak_distance=float(np.hypot(peak_point[0] - x0[0], peak_point[1] - x0[1])),
        local_h=local_h,
    )
    if eigenvalue is not None and eigenvalue > 0.0:
        report.inner_radius_diag = float(1.0 / np.sqrt(eigenvalue))
        report.inradius_ratio = float(inradius * np.sqrt(eigenvalue))
    return report


def check_vanishing_on_omega2(u: np.ndarray, mesh: Mesh) -> float:
    idx = mesh.region_vertices(Region.OMEGA2)
    if len(idx) == 0:
        return 0.0
    return float(np.max(np.abs(np.asarray(u)[idx])))


# ---------------------------------------------------------------------------
# connector decay


def cross_section_norm(u: np.ndarray, mesh: Mesh, z: float) -> float:
    """L2 norm of the P1 interpolant along the vertical chords of the mesh at x1 = z."""
    u = np.asarray(u, dtype=float)
    x = mesh.vertices[:, 0]
    while np.any(np.abs(x - z) < 0.5 * _Z_NUDGE):
        z = z + _Z_NUDGE
    s = x[mesh.triangles] - z
    cut = (s.min(axis=1) < 0.0) & (s.max(axis=1) > 0.0)
    if not np.any(cut):
        raise AnalysisError(f"empty cross-section at x1 = {z}")
    tri = mesh.triangles[cut]
    s = s[cut]
    ys, us, hits = [], [], []
    for a, b in ((0, 1), (1, 2), (2, 0)):
        sa, sb = s[:, a], s[:, b]
        crossing = sa * sb < 0.0
        t = np.where(crossing, sa / np.where(crossing, sa - sb, 1.0), 0.0)
        pa, pb = mesh.vertices[tri[:, a]], mesh.vertices[tri[:, b]]
        ys.append(pa[:, 1] + t * (pb[:, 1] - pa[:, 1]))
        us.append(u[tri[:, a]] + t * (u[tri[:, b]] - u[tri[:, a]]))
        hits.append(crossing)
    ys, us, hits = np.column_stack(ys), np.column_stack(us), np.column_stack(hits)
    # the two crossing edges of each cut triangle, in edge order
    order = np.argsort(~hits, axis=1, kind="stable")[:, :2]
    rows = np.arange(len(tri))[:, None]
    y2, u2 = ys[rows, order], us[rows, order]
    length = np.abs(y2[:, 1] - y2[:, 0])
    integral = length / 3.0 * (u2[:, 0] ** 2 + u2[:, 0] * u2[:, 1] + u2[:, 1] ** 2)
    return float(np.sqrt(np.sum(integral)))


def cross_section_widths(spec: DumbbellSpec, z: float) -> List[float]:
    """Lengths of the connected pieces of the domain's vertical cross-section at x1 = z."""
    poly = spec.domain.polygon
    _, ymin, _, ymax = poly.bounds
    chord = poly.intersection(LineString([(z, ymin - 1.0), (z, ymax + 1.0)]))
    if chord.is_empty:
        return []
    parts = getattr(chord, "geoms", [chord])
    return [float(p.length) for p in parts if p.length > 0.0]


def cross_section_mu(spec: DumbbellSpec, z: float) -> float:
    """First Dirichlet eigenvalue of C(z): pi^2 over the squared length of its longest piece."""
    widths = cross_section_widths(spec, z)
    if not widths:
        return float("inf")
    return float(np.pi**2 / max(widths) ** 2)


@dataclass
class DecayReport:
    z_grid: np.ndarray
    norms: np.ndarray
    mu_of_z: np.ndarray
    mu: float
    lam: float
    z0: float
    beta: float
    envelope: np.ndarray
    fitted_slope: float
    bound_violations: int
    aggregate_D: float
    aggregate_lhs: float
    aggregate_rhs: float
    aggregate_holds: bool
    hypothesis_mu_argmin: float
    tol: float = 0.05
    noise_floor: float = 0.0
    n_resolved: int = 0

    @property
    def resolved(self) -> bool:
        """Enough stations above the noise floor, starting at z0, for the envelope to mean anything."""
        return bool(self.norms[0] > self.noise_floor and self.n_resolved >= MIN_RESOLVED_STATIONS)

    def to_json(self) -> Dict:
        return {
            "z_grid": self.z_grid.tolist(),
            "norms": self.norms.tolist(),
            "mu_of_z": self.mu_of_z.tolist(),
            "mu": self.mu,
            "lambda": self.lam,
            "z0": self.z0,
            "beta": self.beta,
            "envelope": self.envelope.tolist(),
            "fitted_slope": self.fitted_slope,
            "bound_violations": self.bound_violations,
            "aggregate_D": self.aggregate_D,
            "aggregate_lhs": self.aggregate_lhs,
            "aggregate_rhs": self.aggregate_rhs,
            "aggregate_holds": self.aggregate_holds,
            "hypothesis_mu_argmin": self.hypothesis_mu_argmin,
            "tol": self.tol,
            "noise_floor": self.noise_floor,
            "n_resolved": self.n_resolved,
            "resolved": self.resolved,
        }


def branch_mu(spec: DumbbellSpec, z0: float, z_grid: np.ndarray) -> Tuple[float, float]:
    """inf of mu(z) over (z0, z2) and where it is attained.

    The longest-piece width is piecewise linear between polygon vertex abscissae, so checking
    those abscissae together with the grid finds the infimum.
    """
    _, z2 = spec.x0_bounds
    ring_x = np.concatenate([r[:, 0] for r in spec.domain.rings])
    candidates = np.unique(np.concatenate([z_grid, ring_x]))
    candidates = candidates[(candidates > z0) & (candidates <= z2)]
    values = np.array([cross_section_mu(spec, z) for z in candidates])
    j = int(np.argmin(values))
    return float(values[j]), float(candidates[j])


def decay_check(
    u: np.ndarray,
    mesh: Mesh,
    spec: DumbbellSpec,
    lam: float,
    z0: Optional[float] = None,
    tol: float = 0.05,
    n_stations: int = 64,
) -> DecayReport:
    """
    Test the exponential cross-section envelope and the aggregate bound for an Omega1-localized eigenfunction.

    Args:
        u: Eigenfunction vertex values, M-normalized
        mesh: Mesh of the dumbbell
        spec: Dumbbell description
        lam: Eigenvalue belonging to u
        z0: Starting abscissa of the branch, the mouth of the straight connector part when None
        tol: Multiplicative slack on the envelope
        n_stations: Number of uniform stations on [z0, z2)

    Returns:
        DecayReport: Norms, envelope, violation count, fitted slope, aggregate check and the number of
            stations resolved above the noise floor

    Raises:
        InapplicableHypothesisError: when lam >= mu or u is not localized on Omega1
    """
    u = np.asarray(u, dtype=float)
    z0 = spec.straight_bounds[0] if z0 is None else float(z0)
    _, z2 = spec.x0_bounds
    if not z0 < z2:
        raise AnalysisError(f"z0 = {z0} lies beyond the branch end {z2}")
    z_grid = np.linspace(z0, z2, n_stations, endpoint=False)
    mu, mu_at = branch_mu(spec, z0, z_grid)
    if not lam < mu:
        raise InapplicableHypothesisError(f"lambda = {lam:.6g} >= mu = {mu:.6g} (attained at x1 = {mu_at:.6g})")
    omega1_mass = region_mass(u, mesh, Region.OMEGA1)
    if not omega1_mass > 0.5:
        raise InapplicableHypothesisError(f"eigenfunction not localized on Omega1 (mass {omega1_mass:.4f})")

    norms = np.array([cross_section_norm(u, mesh, z) for z in z_grid])
    mu_of_z = np.array([cross_section_mu(spec, z) for z in z_grid])
    rate = BETA * np.sqrt(mu - lam)
    envelope = norms[0] * np.exp(-rate * (z_grid - z0))
    floor = DECAY_NOISE_FLOOR * float(np.max(np.abs(u)))
    above = norms > floor
    violations = int(np.sum(above & (norms > envelope * (1.0 + tol))))

    s0, s1 = spec.straight_bounds
    straight = (z_grid >= s0) & (z_grid <= s1) & above
    if np.sum(straight) >= 2:
        fitted_slope = float(np.polyfit(z_grid[straight], np.log(norms[straight]), 1)[0])
    else:
        fitted_slope = float("nan")

    root = np.sqrt(2.0 * (mu - lam))
    D = float((1.0 / root) * (1.0 - np.exp(-root)))
    z_end = min(z0 + 1.0, z2)
    z_agg = np.linspace(z0, z_end, 2 * (n_stations // 2) + 1)
    lhs = float(simpson(np.array([cross_section_norm(u, mesh, z) ** 2 for z in z_agg]), x=z_agg))
    rhs = float(D * norms[0] ** 2)
    report = DecayReport(
        z_grid=z_grid,
        norms=norms,
        mu_of_z=mu_of_z,
        mu=mu,
        lam=float(lam),
        z0=float(z0),
        beta=float(BETA),
        envelope=envelope,
        fitted_slope=fitted_slope,
        bound_violations=violations,
        aggregate_D=D,
        aggregate_lhs=lhs,
        aggregate_rhs=rhs,
        aggregate_holds=bool(lhs <= rhs * (1.0 + tol)),
        hypothesis_mu_argmin=mu_at,
        tol=tol,
        noise_floor=floor,
        n_resolved=int(np.sum(above)),
    )
    logger.info(
        f"Decay check: mu={mu:.4f}, lambda={lam:.4f}, violations={violations}, slope={fitted_slope:.3f}, "
        f"resolved {report.n_resolved}/{n_stations}, aggregate {lhs:.3e} <= {rhs:.3e}: {report.aggregate_holds}"
    )
    return report
