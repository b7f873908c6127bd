"""
Zero level sets of P1 eigenfunctions by marching triangles, and the test that a nodal line
stays inside the half-disks and the connector.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import shapely

from app.core.errors import AnalysisError
from app.core.geometry import DumbbellSpec, Region, SubregionLayout, classify_points
from app.core.mesh import Mesh

logger = logging.getLogger(__name__)


@dataclass
class NodalComponent:
    points: np.ndarray
    closed: bool
    end_flags: Tuple[str, str]


@dataclass
class NodalPath:
    components: List[NodalComponent] = field(default_factory=list)
    boundary_intersections: int = 0
    closed_components: int = 0

    @property
    def points(self) -> np.ndarray:
        if not self.components:
            return np.empty((0, 2))
        return np.vstack([c.points for c in self.components])

    @property
    def is_empty(self) -> bool:
        return not self.components

    def to_json(self) -> Dict:
        return {
            "boundary_intersections": self.boundary_intersections,
            "closed_components": self.closed_components,
            "components": [
                {"closed": c.closed, "end_flags": list(c.end_flags), "points": c.points.tolist()}
                for c in self.components
            ],
        }


def _edge_table(triangles: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unique edges, their use counts and the (n_triangles, 3) edge ids of each triangle."""
    nt = len(triangles)
    local = np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    edges, inverse, counts = np.unique(np.sort(local, axis=1), axis=0, return_inverse=True, return_counts=True)
    tri_edges = np.asarray(inverse).reshape(-1).reshape(3, nt).T
    return edges, counts, tri_edges


def nodal_set(u: np.ndarray, mesh: Mesh, noise_floor: Optional[float] = None) -> NodalPath:
    """
    Extract the zero level set of u as polylines.

    Args:
        u: Vertex values
        mesh: Mesh the values live on
        noise_floor: Values with |u| <= noise_floor count as positive; defaults to 1e-9 max|u|

    Returns:
        NodalPath: Chained polylines with boundary-intersection and closed-component counts
    """
    u = np.asarray(u, dtype=float)
    scale = float(np.max(np.abs(u))) if u.size else 0.0
    nf = 1e-9 * scale if noise_floor is None else float(noise_floor)
    if scale == 0.0 or scale <= nf:
        raise AnalysisError("eigenfunction is identically below the noise floor")
    v = np.where(np.abs(u) <= nf, nf, u)
    positive = v > 0.0

    edges, counts, tri_edges = _edge_table(mesh.triangles)
    changed = positive[edges[:, 0]] != positive[edges[:, 1]]
    node_of_edge = np.full(len(edges), -1, dtype=np.int64)
    node_of_edge[changed] = np.arange(int(np.sum(changed)))

    ea, eb = edges[changed, 0], edges[changed, 1]
    t = v[ea] / (v[ea] - v[eb])
    points = mesh.vertices[ea] + t[:, None] * (mesh.vertices[eb] - mesh.vertices[ea])
    on_boundary = counts[changed] == 1

    # each mixed-sign triangle has exactly two sign-changing edges
    tri_nodes = node_of_edge[tri_edges]
    mixed = np.sum(tri_nodes >= 0, axis=1) == 2
    pairs = np.sort(tri_nodes[mixed], axis=1)[:, 1:]

    n_nodes = len(points)
    neighbours: List[List[int]] = [[] for _ in range(n_nodes)]
    for a, b in pairs.tolist():
        neighbours[a].append(b)
        neighbours[b].append(a)

    visited = np.zeros(n_nodes, dtype=bool)
    components: List[NodalComponent] = []

    def walk(start: int) -> List[int]:
        chain = [start]
        visited[start] = True
        prev, cur = -1, start
        while True:
            nxt = [n for n in neighbours[cur] if n != prev and not visited[n]]
            if not nxt:
                return chain
            prev, cur = cur, nxt[0]
            visited[cur] = True
            chain.append(cur)

    ends = [i for i in range(n_nodes) if len(neighbours[i]) == 1]
    for start in ends:
        if visited[start]:
            continue
        chain = walk(start)
        flags = tuple("boundary" if on_boundary[i] else "interior" for i in (chain[0], chain[-1]))
        components.append(NodalComponent(points=points[chain], closed=False, end_flags=flags))

    closed = 0
    for start in range(n_nodes):
        if visited[start] or not neighbours[start]:
            continue
        chain = walk(start)
        components.append(NodalComponent(points=points[chain + chain[:1]], closed=True, end_flags=("interior", "interior")))
        closed += 1

    path = NodalPath(
        components=components,
        boundary_intersections=int(np.sum(on_boundary)),
        closed_components=closed,
    )
    logger.debug(
        f"Nodal set: {len(components)} components, {path.boundary_intersections} boundary hits, {closed} closed"
    )
    return path


@dataclass
class ContainmentResult:
    contained: bool
    worst_point: Optional[Tuple[float, float]]
    worst_distance: float

    def to_json(self) -> Dict:
        return {
            "contained": self.contained,
            "worst_point": list(self.worst_point) if self.worst_point is not None else None,
            "worst_distance": self.worst_distance,
        }


def excursion_distance(points: np.ndarray, layout: SubregionLayout, spec: DumbbellSpec) -> np.ndarray:
    """Distance from each point to D_{r1} u Q_eps u D_{r2}."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    d_disks = layout.distance_to_half_disks(pts)
    d_conn = shapely.distance(shapely.points(pts), spec.connector.polygon)
    return np.minimum(d_disks, d_conn)


def nodal_containment(path: NodalPath, layout: SubregionLayout, spec: DumbbellSpec) -> ContainmentResult:
    pts = path.points
    if len(pts) == 0:
        return ContainmentResult(contained=True, worst_point=None, worst_distance=0.0)
    allowed = layout.in_half_disks(pts) | (classify_points(pts, spec) == Region.CONNECTOR.value)
    dist = np.where(allowed, 0.0, excursion_distance(pts, layout, spec))
    j = int(np.argmax(dist))
    contained = bool(np.all(allowed))
    return ContainmentResult(
        contained=contained,
        worst_point=None if contained else (float(pts[j, 0]), float(pts[j, 1])),
        worst_distance=float(dist[j]),
    )
