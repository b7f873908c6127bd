"""
This module produces conforming, quality-bounded triangulations of polygon domains.

Meshes come from Triangle's constrained conforming Delaunay refinement with a minimum-angle
bound, followed by area-driven refinement passes that honour a size field (fine in and around
the dumbbell connector, h_max elsewhere).
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
import shapely
import triangle
from shapely.geometry import Polygon

from app.core.errors import MeshingError, MeshQualityError
from app.core.geometry import DEFAULT_H_MAX, DumbbellSpec, EdgeMarker, PolygonDomain, Region, classify_points

logger = logging.getLogger(__name__)

SizeField = Callable[[np.ndarray], np.ndarray]

# integer segment markers handed to Triangle; 0 is reserved for unmarked edges
_MARKER_CODES = {EdgeMarker.OUTER: 1, EdgeMarker.OBSTACLE: 2, EdgeMarker.SYNTHETIC: 3}
_CODE_MARKERS = {1: EdgeMarker.OUTER, 2: EdgeMarker.OBSTACLE, 3: EdgeMarker.OUTER}

_MAX_REFINE_PASSES = 8


def equilateral_area(h) -> np.ndarray:
    return np.sqrt(3.0) / 4.0 * np.asarray(h, dtype=float) ** 2


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Signed areas; positive for counter-clockwise triangles."""
    p0, p1, p2 = (vertices[triangles[:, i]] for i in range(3))
    d1, d2 = p1 - p0, p2 - p0
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def triangle_angles(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Interior angles in degrees, shape (n_triangles, 3); column i is the angle at vertex i."""
    out = np.empty((len(triangles), 3))
    for i in range(3):
        a = vertices[triangles[:, i]]
        b = vertices[triangles[:, (i + 1) % 3]]
        c = vertices[triangles[:, (i + 2) % 3]]
        u, v = b - a, c - a
        cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        dot = np.einsum("ij,ij->i", u, v)
        out[:, i] = np.degrees(np.arctan2(cross, dot))
    return out


def unique_edges(triangles: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted undirected edges and the number of triangles sharing each."""
    edges = np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    edges = np.sort(edges, axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    return uniq, counts


@dataclass(eq=False)
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_markers: List[EdgeMarker]
    vertex_region: np.ndarray
    triangle_region: np.ndarray
    h_max_used: float
    min_angle_achieved: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def areas(self) -> np.ndarray:
        return triangle_areas(self.vertices, self.triangles)

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @property
    def area(self) -> float:
        return float(np.sum(self.areas))

    def region_vertices(self, region: Union[Region, str]) -> np.ndarray:
        return np.flatnonzero(self.vertex_region == Region(region).value)


@dataclass
class MeshQuality:
    min_angle: float
    max_angle: float
    min_edge: float
    max_edge: float
    edge_histogram: List[int]
    edge_bins: List[float]
    region_counts: Dict[str, int]
    n_vertices: int
    n_triangles: int

    def to_json(self) -> Dict:
        return {
            "min_angle": self.min_angle,
            "max_angle": self.max_angle,
            "min_edge": self.min_edge,
            "max_edge": self.max_edge,
            "edge_histogram": self.edge_histogram,
            "edge_bins": self.edge_bins,
            "region_counts": self.region_counts,
            "n_vertices": self.n_vertices,
            "n_triangles": self.n_triangles,
        }


def connector_size_field(spec: DumbbellSpec, h_max: float, factor: float = 0.25, grading: float = 1.5) -> SizeField:
    """epsilon * factor inside the connector bounding box, growing with slope (grading - 1) up to h_max."""
    if not h_max > 0.0 or not factor > 0.0 or not grading > 1.0:
        raise MeshingError(f"invalid size field parameters h_max={h_max}, factor={factor}, grading={grading}")
    eps = spec.epsilon
    h_min = min(eps * factor, h_max)
    half_height = 2.0 * eps

    def size(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        dx = np.maximum(np.abs(pts[:, 0]) - 1.0, 0.0)
        dy = np.maximum(np.abs(pts[:, 1]) - half_height, 0.0)
        return np.minimum(h_max, h_min + (grading - 1.0) * np.hypot(dx, dy))

    return size


def _planar_graph(domain: PolygonDomain) -> Dict:
    vertices, segments, markers = [], [], []
    offset = 0
    for ring, ring_markers in zip(domain.rings, domain.edge_markers):
        n = len(ring)
        vertices.append(ring)
        idx = np.arange(n) + offset
        segments.append(np.column_stack([idx, np.roll(idx, -1)]))
        markers.extend(_MARKER_CODES[m] for m in ring_markers)
        offset += n
    graph = {
        "vertices": np.vstack(vertices),
        "segments": np.vstack(segments).astype(np.int32),
        "segment_markers": np.asarray(markers, dtype=np.int32).reshape(-1, 1),
    }
    if domain.holes:
        graph["holes"] = np.array([Polygon(h).representative_point().coords[0] for h in domain.holes])
    return graph


def _run_triangle(graph: Dict, opts: str) -> Dict:
    try:
        out = triangle.triangulate(graph, opts)
    except Exception as e:
        raise MeshingError(f"Triangle failed with options '{opts}': {e}") from e
    if "triangles" not in out or len(out["triangles"]) == 0:
        raise MeshingError(f"Triangle produced no elements with options '{opts}'")
    return out


def triangulate(
    domain: PolygonDomain,
    h_max: float,
    size_field: Optional[SizeField] = None,
    min_angle: float = 20.0,
    spec: Optional[DumbbellSpec] = None,
) -> Mesh:
    """
    Mesh a polygon domain.

    Args:
        domain: Polygon with holes to triangulate
        h_max: Target edge length away from refinement zones
        size_field: Optional callable giving the local target edge length at points
        min_angle: Minimum interior angle bound in degrees
        spec: Dumbbell description used to tag vertex and triangle regions; without it every
            element is tagged Omega1

    Returns:
        Mesh: Conforming mesh whose boundary edges carry the domain's edge markers
    """
    if not h_max > 0.0 or not np.isfinite(h_max):
        raise MeshingError(f"h_max must be positive, got {h_max}")
    if not 0.0 < min_angle <= 34.0:
        raise MeshingError(f"min_angle must lie in (0, 34] degrees, got {min_angle}")

    graph = _planar_graph(domain)
    opts = f"pzQDq{min_angle:.6g}a{float(equilateral_area(h_max)):.12f}"
    out = _run_triangle(graph, opts)

    if size_field is not None:
        for step in range(_MAX_REFINE_PASSES):
            verts, tris = out["vertices"], out["triangles"]
            centroids = verts[tris].mean(axis=1)
            target = np.minimum(equilateral_area(size_field(centroids)), equilateral_area(h_max))
            areas = np.abs(triangle_areas(verts, tris))
            if np.all(areas <= target * (1.0 + 1e-9)):
                break
            refine = {
                "vertices": verts,
                "triangles": tris,
                "segments": out["segments"],
                "segment_markers": out["segment_markers"],
                "triangle_max_area": target,
            }
            out = _run_triangle(refine, f"rpzQDq{min_angle:.6g}a")
            logger.debug(f"Refinement pass {step + 1}: {len(out['triangles'])} triangles")

    vertices = np.asarray(out["vertices"], dtype=float)
    triangles = np.asarray(out["triangles"], dtype=np.int64)
    flip = triangle_areas(vertices, triangles) < 0.0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]

    boundary_edges = np.sort(np.asarray(out["segments"], dtype=np.int64), axis=1)
    codes = np.asarray(out["segment_markers"]).ravel()
    boundary_markers = [_CODE_MARKERS.get(int(c), EdgeMarker.OUTER) for c in codes]

    angles = triangle_angles(vertices, triangles)
    achieved = float(angles.min())
    if achieved < min_angle - 1e-6:
        worst = int(np.argmin(angles.min(axis=1)))
        feature = vertices[triangles[worst]].mean(axis=0)
        raise MeshQualityError(
            f"minimum angle {achieved:.3f} deg below bound {min_angle} near {tuple(feature)}", achieved, feature
        )

    centroids = vertices[triangles].mean(axis=1)
    if spec is not None:
        vertex_region = classify_points(vertices, spec)
        triangle_region = classify_points(centroids, spec)
    else:
        vertex_region = np.full(len(vertices), Region.OMEGA1.value, dtype="<U9")
        triangle_region = np.full(len(triangles), Region.OMEGA1.value, dtype="<U9")

    edges, _ = unique_edges(triangles)
    lengths = np.linalg.norm(vertices[edges[:, 0]] - vertices[edges[:, 1]], axis=1)
    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=boundary_edges,
        boundary_markers=boundary_markers,
        vertex_region=vertex_region,
        triangle_region=triangle_region,
        h_max_used=float(lengths.max()),
        min_angle_achieved=achieved,
    )
    logger.info(f"Meshed domain: {mesh.n_vertices} vertices, {mesh.n_triangles} triangles, min angle {achieved:.2f}")
    return mesh


def mesh_quality(mesh: Mesh, bins: int = 10) -> MeshQuality:
    angles = triangle_angles(mesh.vertices, mesh.triangles)
    edges, _ = unique_edges(mesh.triangles)
    lengths = np.linalg.norm(mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1)
    counts, bin_edges = np.histogram(lengths, bins=bins)
    regions, region_counts = np.unique(mesh.triangle_region, return_counts=True)
    return MeshQuality(
        min_angle=float(angles.min()),
        max_angle=float(angles.max()),
        min_edge=float(lengths.min()),
        max_edge=float(lengths.max()),
        edge_histogram=counts.tolist(),
        edge_bins=bin_edges.tolist(),
        region_counts={str(r): int(c) for r, c in zip(regions, region_counts)},
        n_vertices=mesh.n_vertices,
        n_triangles=mesh.n_triangles,
    )


def check_mesh(mesh: Mesh, domain: PolygonDomain, min_angle: Optional[float] = None) -> List[str]:
    """Violated mesh invariants as human-readable strings; empty when the mesh is sound."""
    problems = []
    areas = mesh.areas
    if np.any(areas <= 0.0):
        problems.append(f"{int(np.sum(areas <= 0.0))} triangles with non-positive area")

    edges, counts = unique_edges(mesh.triangles)
    if np.any(counts > 2):
        problems.append(f"{int(np.sum(counts > 2))} edges shared by more than two triangles")
    open_edges = {tuple(e) for e in edges[counts == 1]}
    declared = {tuple(e) for e in np.sort(mesh.boundary_edges, axis=1)}
    if open_edges != declared:
        problems.append(
            f"boundary mismatch: {len(open_edges - declared)} undeclared open edges, "
            f"{len(declared - open_edges)} declared edges not on the boundary"
        )

    bverts = mesh.vertices[mesh.boundary_vertices]
    dist = shapely.distance(shapely.points(bverts), domain.polygon.boundary)
    if dist.size and float(dist.max()) > 1e-10:
        problems.append(f"boundary vertex off the polygon boundary by {float(dist.max()):.3e}")

    euler = mesh.n_vertices - len(edges) + mesh.n_triangles
    expected = 1 - len(domain.holes)
    if euler != expected:
        problems.append(f"Euler characteristic {euler} != {expected}")

    if abs(mesh.area - domain.area) > 1e-10 * domain.area:
        problems.append(f"mesh area {mesh.area:.15g} != polygon area {domain.area:.15g}")

    if min_angle is not None and mesh.min_angle_achieved < min_angle - 1e-6:
        problems.append(f"minimum angle {mesh.min_angle_achieved:.3f} below {min_angle}")
    return problems


def mesh_text(mesh: Mesh) -> str:
    """Plain-text mesh: `V E T`, then `x y region`, `i j k` and `i j marker` lines."""
    lines = [f"{mesh.n_vertices} {len(mesh.boundary_edges)} {mesh.n_triangles}"]
    lines += [f"{x!r} {y!r} {r}" for (x, y), r in zip(mesh.vertices.tolist(), mesh.vertex_region)]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    lines += [f"{i} {j} {m.value}" for (i, j), m in zip(mesh.boundary_edges.tolist(), mesh.boundary_markers)]
    return "\n".join(lines) + "\n"


def write_mesh(mesh: Mesh, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(mesh_text(mesh))
    return path


def read_mesh(path: Union[str, Path], spec: Optional[DumbbellSpec] = None) -> Mesh:
    """Inverse of write_mesh.

    Triangle regions are re-classified from centroids when a spec is given, otherwise taken as
    the majority tag of the three vertices.
    """
    try:
        rows = Path(path).read_text().split("\n")
        n_v, n_e, n_t = (int(v) for v in rows[0].split())
        vrows = [r.split() for r in rows[1 : 1 + n_v]]
        trows = rows[1 + n_v : 1 + n_v + n_t]
        erows = [r.split() for r in rows[1 + n_v + n_t : 1 + n_v + n_t + n_e]]
        vertices = np.array([[float(r[0]), float(r[1])] for r in vrows])
        vertex_region = np.array([r[2] for r in vrows], dtype="<U9")
        triangles = np.array([[int(v) for v in r.split()] for r in trows], dtype=np.int64).reshape(-1, 3)
        boundary_edges = np.array([[int(r[0]), int(r[1])] for r in erows], dtype=np.int64).reshape(-1, 2)
        boundary_markers = [EdgeMarker(r[2]) for r in erows]
    except (OSError, ValueError, IndexError) as e:
        raise MeshingError(f"cannot read mesh file {path}: {e}") from e

    if spec is not None:
        triangle_region = classify_points(vertices[triangles].mean(axis=1), spec)
    else:
        tags = vertex_region[triangles]
        triangle_region = np.where(tags[:, 1] == tags[:, 2], tags[:, 1], tags[:, 0])
    edges, _ = unique_edges(triangles)
    lengths = np.linalg.norm(vertices[edges[:, 0]] - vertices[edges[:, 1]], axis=1)
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=boundary_edges,
        boundary_markers=boundary_markers,
        vertex_region=vertex_region,
        triangle_region=np.asarray(triangle_region, dtype="<U9"),
        h_max_used=float(lengths.max()),
        min_angle_achieved=float(triangle_angles(vertices, triangles).min()),
    )


def vertical_crossings(mesh: Mesh, x: float) -> int:
    """Number of mesh edges crossed by the vertical line {x1 = x} (edges on the line excluded)."""
    edges, _ = unique_edges(mesh.triangles)
    xa = mesh.vertices[edges[:, 0], 0] - x
    xb = mesh.vertices[edges[:, 1], 0] - x
    return int(np.sum(xa * xb < 0.0))


@dataclass(frozen=True)
class MeshParams:
    h_max: float = DEFAULT_H_MAX
    min_angle: float = 20.0
    connector_factor: float = 0.25
    grading: float = 1.5


def mesh_dumbbell(domain: PolygonDomain, spec: DumbbellSpec, params: MeshParams) -> Mesh:
    """Mesh a dumbbell (possibly perforated) with connector refinement and region tags."""
    size = connector_size_field(spec, params.h_max, params.connector_factor, params.grading)
    return triangulate(domain, params.h_max, size, params.min_angle, spec=spec)
