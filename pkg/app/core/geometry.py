"""
This module builds the one-parameter dumbbell family, convex obstacles and the half-disk
subregions used by the nodal-line analysis. It also answers point-membership queries.

Coordinates are (x1, x') with the connector running along the x1 axis between the flat
edges {x1 = -1} of Omega1 and {x1 = +1} of Omega2.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import shapely
from scipy.interpolate import PchipInterpolator
from shapely.geometry import LinearRing, Point, Polygon, box
from shapely.geometry.polygon import orient

from app.core.errors import GeometryError, InfeasiblePlacementError

logger = logging.getLogger(__name__)

# absolute tolerance for "lies on" tests in length units
ON_TOL = 1e-10
DEFAULT_H_MAX = 0.04


class Region(str, Enum):
    OMEGA1 = "Omega1"
    OMEGA2 = "Omega2"
    CONNECTOR = "Connector"
    OUTSIDE = "Outside"


class EdgeMarker(str, Enum):
    OUTER = "outer"
    OBSTACLE = "obstacle"
    SYNTHETIC = "synthetic"


def signed_area(ring: np.ndarray) -> float:
    """Shoelace area; positive for counter-clockwise loops."""
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _clean_ring(ring: Sequence[Sequence[float]]) -> np.ndarray:
    pts = np.asarray(ring, dtype=float).reshape(-1, 2)
    if len(pts) > 1 and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    pts = pts[keep]
    if len(pts) > 1 and np.array_equal(pts[0], pts[-1]):
        pts = pts[:-1]
    return pts


# ---------------------------------------------------------------------------
# bump profile


@dataclass(frozen=True)
class BumpProfile:
    """Monotone piecewise-cubic profile rho on q in [-2, 0].

    rho(0) = 2 and rho = 1 on [-2, -1]; the connector half-width near the flat edges is
    epsilon * rho((-1 - x1) / epsilon).
    """

    samples: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple(sorted((float(q), float(v)) for q, v in self.samples))
        object.__setattr__(self, "samples", pts)
        q = np.array([p[0] for p in pts])
        v = np.array([p[1] for p in pts])
        if len(pts) < 3 or len(np.unique(q)) != len(q):
            raise GeometryError("bump profile needs at least 3 distinct abscissae")
        if q[0] != -2.0 or q[-1] != 0.0 or -1.0 not in q:
            raise GeometryError("bump profile samples must include q = -2, -1 and 0")
        if v[-1] != 2.0:
            raise GeometryError(f"bump profile must satisfy rho(0) = 2, got {v[-1]}")
        if np.any(v[q <= -1.0] != 1.0):
            raise GeometryError("bump profile must equal 1 on [-2, -1]")
        if np.any(~np.isfinite(v)) or np.any(v <= 0.0):
            raise GeometryError("bump profile must be positive")

    @cached_property
    def _interpolant(self) -> PchipInterpolator:
        q = np.array([p[0] for p in self.samples])
        v = np.array([p[1] for p in self.samples])
        return PchipInterpolator(q, v, extrapolate=False)

    def __call__(self, q):
        q = np.clip(np.asarray(q, dtype=float), -2.0, 0.0)
        values = np.asarray(self._interpolant(q), dtype=float)
        values = np.where(q <= -1.0, 1.0, values)
        return np.where(q == 0.0, 2.0, values)

    @classmethod
    def default(cls) -> "BumpProfile":
        """Smoothstep rise from 1 at q = -1 to 2 at q = 0, flat below."""
        q = np.linspace(-1.0, 0.0, 9)
        s = q + 1.0
        values = 1.0 + s * s * (3.0 - 2.0 * s)
        samples = [(-2.0, 1.0), (-1.5, 1.0)] + list(zip(q.tolist(), values.tolist()))
        return cls(tuple(samples))


# ---------------------------------------------------------------------------
# polygons


@dataclass(frozen=True, eq=False)
class PolygonDomain:
    """Outer ring (counter-clockwise) plus hole rings (clockwise), with one marker per edge.

    Edge k of a ring joins vertex k to vertex k + 1 (cyclically).
    """

    rings: Tuple[np.ndarray, ...]
    edge_markers: Tuple[Tuple[EdgeMarker, ...], ...] = ()

    def __post_init__(self):
        rings = []
        for ring in self.rings:
            pts = _clean_ring(ring)
            pts.setflags(write=False)
            rings.append(pts)
        if not rings:
            raise GeometryError("polygon needs an outer ring")
        markers = list(self.edge_markers) or [
            tuple([EdgeMarker.OUTER] * len(rings[0]))
        ] + [tuple([EdgeMarker.OBSTACLE] * len(r)) for r in rings[1:]]
        markers = [tuple(EdgeMarker(m) for m in ring_markers) for ring_markers in markers]
        object.__setattr__(self, "rings", tuple(rings))
        object.__setattr__(self, "edge_markers", tuple(markers))
        self._validate()

    def _validate(self):
        if len(self.edge_markers) != len(self.rings):
            raise GeometryError("one marker list per ring is required")
        for k, (ring, ring_markers) in enumerate(zip(self.rings, self.edge_markers)):
            if len(ring) < 3 or not np.all(np.isfinite(ring)):
                raise GeometryError(f"ring {k} is degenerate")
            if len(ring_markers) != len(ring):
                raise GeometryError(f"ring {k} has {len(ring)} edges but {len(ring_markers)} markers")
            if not LinearRing(ring).is_simple:
                raise GeometryError(f"ring {k} self-intersects")
        if signed_area(self.rings[0]) <= 0.0:
            raise GeometryError("outer ring must be counter-clockwise with positive area")
        outer = Polygon(self.rings[0])
        holes = [Polygon(h) for h in self.rings[1:]]
        for k, (hole, ring) in enumerate(zip(holes, self.rings[1:]), start=1):
            if signed_area(ring) >= 0.0:
                raise GeometryError(f"hole {k} must be clockwise")
            if not outer.contains(hole):
                raise GeometryError(f"hole {k} is not strictly inside the outer ring")
        for a in range(len(holes)):
            for b in range(a + 1, len(holes)):
                if holes[a].intersects(holes[b]):
                    raise GeometryError(f"holes {a + 1} and {b + 1} intersect")

    @property
    def outer(self) -> np.ndarray:
        return self.rings[0]

    @property
    def holes(self) -> Tuple[np.ndarray, ...]:
        return self.rings[1:]

    @property
    def area(self) -> float:
        return sum(signed_area(r) for r in self.rings)

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        return self.polygon.bounds

    @cached_property
    def polygon(self) -> Polygon:
        poly = Polygon(self.rings[0], [r for r in self.rings[1:]])
        shapely.prepare(poly)
        return poly

    def segments(self) -> List[Tuple[np.ndarray, np.ndarray, EdgeMarker]]:
        """All edges as (start, end, marker)."""
        out = []
        for ring, ring_markers in zip(self.rings, self.edge_markers):
            for k, marker in enumerate(ring_markers):
                out.append((ring[k], ring[(k + 1) % len(ring)], marker))
        return out

    def to_json(self) -> Dict:
        return {
            "rings": [ring.tolist() for ring in self.rings],
            "markers": [[m.value for m in ring_markers] for ring_markers in self.edge_markers],
        }

    @classmethod
    def from_json(cls, data: Dict) -> "PolygonDomain":
        try:
            rings = tuple(np.asarray(r, dtype=float) for r in data["rings"])
            markers = tuple(tuple(EdgeMarker(m) for m in ms) for ms in data.get("markers", ()))
        except (KeyError, TypeError, ValueError) as e:
            raise GeometryError(f"malformed polygon JSON: {e}") from e
        return cls(rings, markers)


def rectangle_domain(x_min: float, x_max: float, y_min: float, y_max: float) -> PolygonDomain:
    if not (x_max > x_min and y_max > y_min):
        raise GeometryError(f"empty rectangle [{x_min}, {x_max}] x [{y_min}, {y_max}]")
    ring = np.array([[x_min, y_min], [x_max, y_min], [x_max, y_max], [x_min, y_max]], dtype=float)
    return PolygonDomain((ring,))


def polygon_from_shapely(poly, synthetic_arcs: Sequence[Tuple[Tuple[float, float], float]] = ()) -> PolygonDomain:
    """Convert a shapely polygon, marking edges that lie on any of the given circles as synthetic."""
    if poly.geom_type != "Polygon" or poly.is_empty:
        raise GeometryError(f"expected a single polygon, got {poly.geom_type}")
    poly = orient(poly, sign=1.0)
    rings = [np.asarray(poly.exterior.coords)[:-1]] + [np.asarray(r.coords)[:-1] for r in poly.interiors]
    markers = []
    for k, ring in enumerate(rings):
        ring = _clean_ring(ring)
        rings[k] = ring
        nxt = np.roll(ring, -1, axis=0)
        ring_markers = []
        for a, b in zip(ring, nxt):
            on_arc = any(
                abs(np.hypot(*(a - c)) - r) <= 1e-9 and abs(np.hypot(*(b - c)) - r) <= 1e-9
                for c, r in synthetic_arcs
            )
            if on_arc:
                ring_markers.append(EdgeMarker.SYNTHETIC)
            else:
                ring_markers.append(EdgeMarker.OUTER if k == 0 else EdgeMarker.OBSTACLE)
        markers.append(tuple(ring_markers))
    return PolygonDomain(tuple(rings), tuple(markers))


# ---------------------------------------------------------------------------
# dumbbell


def _find_flat_edge(ring: np.ndarray, x_edge: float, upward: bool) -> int:
    """Index k of the edge ring[k] -> ring[k+1] lying on {x1 = x_edge} and crossing x' = 0."""
    n = len(ring)
    for k in range(n):
        a, b = ring[k], ring[(k + 1) % n]
        if abs(a[0] - x_edge) > ON_TOL or abs(b[0] - x_edge) > ON_TOL:
            continue
        lo, hi = (a[1], b[1]) if upward else (b[1], a[1])
        if lo < 0.0 < hi and ((b[1] > a[1]) == upward):
            return k
    raise GeometryError(f"no flat boundary edge on x1 = {x_edge} crossing x' = 0")


@dataclass(frozen=True, eq=False)
class DumbbellSpec:
    """Parametric description of Omega_eps = Omega1 u Q_eps u Omega2."""

    omega1: PolygonDomain
    omega2: PolygonDomain
    epsilon: float
    xi: float
    rho: BumpProfile = field(default_factory=BumpProfile.default)
    connector_samples: int = 16

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise GeometryError(f"epsilon must be positive, got {self.epsilon}")
        if not self.xi > 0.0:
            raise GeometryError(f"xi must be positive, got {self.xi}")
        if not 2.0 * self.epsilon < 3.0 * self.xi:
            raise GeometryError(
                f"connector does not fit the flat segment: 2*eps = {2 * self.epsilon} >= 3*xi = {3 * self.xi}"
            )
        if int(self.connector_samples) < 8:
            raise GeometryError(f"connector_samples must be >= 8, got {self.connector_samples}")
        b1, b2 = self.omega1.bounds, self.omega2.bounds
        if b1[2] > -1.0 + ON_TOL or b2[0] < 1.0 - ON_TOL:
            raise GeometryError("Omega1 must lie in {x1 <= -1} and Omega2 in {x1 >= 1}")
        for name, dom, x_edge, upward in (("Omega1", self.omega1, -1.0, True), ("Omega2", self.omega2, 1.0, False)):
            ring = dom.outer
            k = _find_flat_edge(ring, x_edge, upward)
            lo, hi = sorted((ring[k][1], ring[(k + 1) % len(ring)][1]))
            if lo > -3.0 * self.xi + ON_TOL or hi < 3.0 * self.xi - ON_TOL:
                raise GeometryError(f"{name} flat edge [{lo}, {hi}] does not cover |x'| < 3 xi")

    @cached_property
    def connector(self) -> PolygonDomain:
        return build_connector(self.epsilon, self.rho, self.connector_samples)

    @cached_property
    def connector_upper(self) -> Tuple[np.ndarray, np.ndarray]:
        """Upper connector boundary as increasing abscissae and half-widths."""
        ring = self.connector.outer
        upper = ring[ring[:, 1] > 0.0]
        order = np.argsort(upper[:, 0], kind="stable")
        return upper[order, 0], upper[order, 1]

    @cached_property
    def domain(self) -> PolygonDomain:
        return build_dumbbell(self)

    @property
    def straight_bounds(self) -> Tuple[float, float]:
        """x1 extent of the straight connector part L(eps)."""
        return -1.0 + 2.0 * self.epsilon, 1.0 - 2.0 * self.epsilon

    @property
    def x0_bounds(self) -> Tuple[float, float]:
        """x1 extent of the whole dumbbell (z1, z2)."""
        return self.omega1.bounds[0], self.omega2.bounds[2]


def build_connector(epsilon: float, rho: BumpProfile, samples: int) -> PolygonDomain:
    """Closed polyline of Q_eps = Q1(eps) u L(eps) u Q2(eps), counter-clockwise.

    The two vertical closing edges on x1 = -1 and x1 = +1 are marked synthetic; they are
    seams, not boundary, once the connector is stitched into a dumbbell.
    """
    if not epsilon > 0.0:
        raise GeometryError(f"epsilon must be positive, got {epsilon}")
    if epsilon > 0.5:
        raise GeometryError(f"epsilon = {epsilon} leaves no straight connector part")
    if int(samples) < 8:
        raise GeometryError(f"samples must be >= 8, got {samples}")
    if not isinstance(rho, BumpProfile):
        raise GeometryError("rho must be a BumpProfile")

    x_left = np.linspace(-1.0, -1.0 + 2.0 * epsilon, int(samples))
    hw_left = epsilon * rho((-1.0 - x_left) / epsilon)
    x_right = -x_left[::-1]
    hw_right = hw_left[::-1]
    if x_left[-1] == x_right[0]:
        x_right, hw_right = x_right[1:], hw_right[1:]
    xs = np.concatenate([x_left, x_right])
    hw = np.concatenate([hw_left, hw_right])

    lower = np.column_stack([xs, -hw])
    upper = np.column_stack([xs[::-1], hw[::-1]])
    ring = np.vstack([lower, upper])
    n_lower = len(lower)
    markers = [EdgeMarker.OUTER] * len(ring)
    markers[n_lower - 1] = EdgeMarker.SYNTHETIC  # (1, -2eps) -> (1, 2eps)
    markers[-1] = EdgeMarker.SYNTHETIC  # (-1, 2eps) -> (-1, -2eps)
    return PolygonDomain((ring,), (tuple(markers),))


def _rotate(ring: np.ndarray, markers: Sequence[EdgeMarker], start: int):
    idx = (np.arange(len(ring)) + start) % len(ring)
    return ring[idx], [markers[i] for i in idx]


def build_dumbbell(spec: DumbbellSpec) -> PolygonDomain:
    """Stitch Omega1, the connector and Omega2 into one simple polygon.

    The flat edges are split at x' = -/+ 2 eps and the connector polyline is spliced in, so
    seam vertices coincide exactly with the connector end points.
    """
    eps = spec.epsilon
    r1, m1 = spec.omega1.outer, spec.omega1.edge_markers[0]
    r2, m2 = spec.omega2.outer, spec.omega2.edge_markers[0]
    k1 = _find_flat_edge(r1, -1.0, upward=True)
    k2 = _find_flat_edge(r2, 1.0, upward=False)
    for ring, k, name in ((r1, k1, "Omega1"), (r2, k2, "Omega2")):
        lo, hi = sorted((ring[k][1], ring[(k + 1) % len(ring)][1]))
        if lo > -2.0 * eps or hi < 2.0 * eps or hi - lo < 4.0 * eps:
            raise GeometryError(f"{name} flat edge [{lo}, {hi}] is too short for a connector of half-width {2 * eps}")

    conn = spec.connector.outer
    n_lower = int(np.sum(conn[:, 1] < 0.0))
    lower, upper = conn[:n_lower], conn[n_lower:]

    # Omega1 from the top of its flat edge round to the bottom of it
    seq1, mk1 = _rotate(r1, m1, k1 + 1)
    seq2, mk2 = _rotate(r2, m2, k2 + 1)

    points: List[np.ndarray] = []
    markers: List[EdgeMarker] = []

    def extend(pts, edge_markers):
        for p, m in zip(pts, edge_markers):
            if points and np.array_equal(points[-1], p):
                markers[-1] = m
                continue
            points.append(np.asarray(p, dtype=float))
            markers.append(m)

    # the last edge of each rotated base ring is the flat edge being split
    extend(seq1, mk1[:-1] + [EdgeMarker.OUTER])
    extend(lower, [EdgeMarker.OUTER] * len(lower))
    extend(seq2, mk2[:-1] + [EdgeMarker.OUTER])
    extend(upper, [EdgeMarker.OUTER] * len(upper))
    if np.array_equal(points[-1], points[0]):
        points.pop()
        markers.pop()

    ring = np.array(points)
    if not LinearRing(ring).is_simple:
        raise GeometryError("stitching produced a self-intersecting polygon")
    rings = (ring,) + spec.omega1.holes + spec.omega2.holes
    edge_markers = (tuple(markers),) + spec.omega1.edge_markers[1:] + spec.omega2.edge_markers[1:]
    domain = PolygonDomain(rings, edge_markers)
    logger.debug(f"Dumbbell eps={eps}: {len(ring)} outer vertices, area {domain.area:.6f}")
    return domain


def half_dumbbell(spec: DumbbellSpec) -> PolygonDomain:
    """Omega1 u Q_eps as one polygon."""
    merged = spec.omega1.polygon.union(spec.connector.polygon)
    return polygon_from_shapely(merged)


def connector_halfwidth(x, spec: DumbbellSpec) -> np.ndarray:
    ux, uy = spec.connector_upper
    x = np.asarray(x, dtype=float)
    inside = (x >= -1.0) & (x <= 1.0)
    return np.where(inside, np.interp(x, ux, uy), 0.0)


def classify_points(points, spec: DumbbellSpec) -> np.ndarray:
    """Region tag per point; boundary points between a base domain and the connector go to the connector."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    out = np.full(len(pts), Region.OUTSIDE.value, dtype="<U9")
    in_conn = (x >= -1.0) & (x <= 1.0) & (np.abs(y) <= connector_halfwidth(x, spec) + ON_TOL)
    in_o1 = shapely.intersects_xy(spec.omega1.polygon, x, y) & ~in_conn
    in_o2 = shapely.intersects_xy(spec.omega2.polygon, x, y) & ~in_conn
    out[in_o1] = Region.OMEGA1.value
    out[in_o2] = Region.OMEGA2.value
    out[in_conn] = Region.CONNECTOR.value
    return out


def classify_point(p, spec: DumbbellSpec) -> Region:
    return Region(classify_points([p], spec)[0])


# ---------------------------------------------------------------------------
# obstacles


@dataclass(frozen=True, eq=False)
class ObstacleShape:
    """Convex counter-clockwise vertex loop D with centroid at the origin."""

    vertices: np.ndarray

    def __post_init__(self):
        v = _clean_ring(self.vertices)
        if len(v) < 3:
            raise GeometryError("obstacle needs at least 3 vertices")
        e = np.roll(v, -1, axis=0) - v
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        if np.any(cross <= 0.0):
            raise GeometryError("obstacle must be a convex counter-clockwise loop")
        centroid = np.asarray(Polygon(v).centroid.coords[0])
        scale = float(np.max(np.abs(v)))
        if np.hypot(*centroid) > 1e-9 * max(scale, 1.0):
            raise GeometryError(f"obstacle centroid must be at the origin, got {tuple(centroid)}")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def translated(self, y) -> Polygon:
        return Polygon(self.vertices + np.asarray(y, dtype=float))


def resolve_clearance(clearance: Optional[float], h_max: float = DEFAULT_H_MAX) -> float:
    """Obstacle-to-boundary clearance; two mesh widths unless given."""
    return 2.0 * h_max if clearance is None else float(clearance)


def subtract_obstacle(
    domain: PolygonDomain, shape: ObstacleShape, y, clearance: Optional[float] = None, h_max: float = DEFAULT_H_MAX
) -> PolygonDomain:
    """Omega minus closure(y + D), adding one clockwise hole ring marked obstacle.

    The obstacle must keep clearance from the boundary, 2 * h_max when clearance is None.
    """
    clearance = resolve_clearance(clearance, h_max)
    y = np.asarray(y, dtype=float).reshape(2)
    obstacle = shape.translated(y)
    poly = domain.polygon
    if not poly.contains(obstacle):
        raise InfeasiblePlacementError(f"obstacle at y={tuple(y)} is not strictly inside the domain", y, clearance)
    gap = poly.boundary.distance(obstacle)
    if gap <= 0.0 or gap < clearance - 1e-9:
        raise InfeasiblePlacementError(
            f"obstacle at y={tuple(y)} has clearance {gap:.6g} < required {clearance:.6g}", y, clearance
        )
    hole = (shape.vertices + y)[::-1]
    rings = domain.rings + (hole,)
    markers = domain.edge_markers + (tuple([EdgeMarker.OBSTACLE] * len(hole)),)
    return PolygonDomain(rings, markers)


# ---------------------------------------------------------------------------
# half-disk subregions


@dataclass(frozen=True, eq=False)
class SubregionLayout:
    """Half-disks D_{r_i} centred at the connector ends and the complements Omega_i'."""

    r1: float
    r2: float
    omega1_prime: PolygonDomain
    omega2_prime: PolygonDomain
    semicircle1: np.ndarray
    semicircle2: np.ndarray

    centers: Tuple[Tuple[float, float], Tuple[float, float]] = ((-1.0, 0.0), (1.0, 0.0))

    def in_half_disks(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        d1 = np.hypot(pts[:, 0] + 1.0, pts[:, 1])
        d2 = np.hypot(pts[:, 0] - 1.0, pts[:, 1])
        left = (pts[:, 0] <= -1.0 + ON_TOL) & (d1 <= self.r1 + ON_TOL)
        right = (pts[:, 0] >= 1.0 - ON_TOL) & (d2 <= self.r2 + ON_TOL)
        return left | right

    def distance_to_half_disks(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        out = np.full(len(pts), np.inf)
        for (cx, cy), r, side in ((self.centers[0], self.r1, -1.0), (self.centers[1], self.r2, 1.0)):
            # nearest point of the half-disk: the disk projection if on the disk's side, else the diameter
            dx, dy = pts[:, 0] - cx, pts[:, 1] - cy
            on_side = side * dx >= 0.0
            d_disk = np.maximum(np.hypot(dx, dy) - r, 0.0)
            d_diam = np.hypot(np.abs(dx), np.maximum(np.abs(dy) - r, 0.0))
            out = np.minimum(out, np.where(on_side, d_disk, d_diam))
        return out


def _semicircle(center: Tuple[float, float], r: float, side: float, n: int) -> np.ndarray:
    if side < 0:
        theta = np.linspace(0.5 * np.pi, 1.5 * np.pi, n + 1)
    else:
        theta = np.linspace(-0.5 * np.pi, 0.5 * np.pi, n + 1)
    pts = np.column_stack([center[0] + r * np.cos(theta), center[1] + r * np.sin(theta)])
    pts[0, 0] = pts[-1, 0] = center[0]
    return pts


def subregions(spec: DumbbellSpec, r1: float, r2: float) -> SubregionLayout:
    n = spec.connector_samples
    primes, arcs = [], []
    for name, dom, center, r, side in (
        ("Omega1", spec.omega1, (-1.0, 0.0), r1, -1.0),
        ("Omega2", spec.omega2, (1.0, 0.0), r2, 1.0),
    ):
        if not r > 0.0:
            raise GeometryError(f"half-disk radius for {name} must be positive, got {r}")
        if r <= 2.0 * spec.epsilon:
            raise GeometryError(f"half-disk radius {r} does not enclose the connector mouth of half-width {2 * spec.epsilon}")
        for radius in (r, 0.5 * r):
            disk = Point(center).buffer(radius, quad_segs=64)
            half = disk.intersection(box(center[0] - radius, -radius, center[0], radius) if side < 0
                                     else box(center[0], -radius, center[0] + radius, radius))
            if not dom.polygon.buffer(ON_TOL).covers(half):
                raise GeometryError(f"half-disk of radius {radius} exits {name}")
        arc = _semicircle(center, r, side, n)
        prime = dom.polygon.difference(Polygon(arc))
        if prime.geom_type != "Polygon":
            raise GeometryError(f"semicircle of radius {r} does not leave a single component in {name}")
        primes.append(polygon_from_shapely(prime, synthetic_arcs=[(np.asarray(center), r)]))
        arcs.append(arc)
    return SubregionLayout(r1=r1, r2=r2, omega1_prime=primes[0], omega2_prime=primes[1],
                           semicircle1=arcs[0], semicircle2=arcs[1])
