"""
Deterministic SVG figures: domain outline, filled contour bands, nodal polylines and half-disk arcs.
"""

import io
from dataclasses import dataclass
from typing import Optional

import matplotlib
import numpy as np
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure
from matplotlib.tri import Triangulation

from app.core.geometry import SubregionLayout
from app.core.mesh import Mesh
from app.core.nodal import NodalPath

N_BANDS = 12


@dataclass(frozen=True)
class RenderStyle:
    width: float = 8.0
    height: float = 4.0
    cmap: str = "RdBu_r"
    outline_color: str = "black"
    nodal_color: str = "white"
    arc_color: str = "tab:orange"
    line_width: float = 0.8
    title: Optional[str] = None


def render_svg(
    mesh: Mesh,
    u: Optional[np.ndarray] = None,
    path: Optional[NodalPath] = None,
    style: RenderStyle = RenderStyle(),
    layout: Optional[SubregionLayout] = None,
) -> str:
    """SVG text for the mesh outline with optional contour bands of u, nodal overlay and arcs."""
    fig = Figure(figsize=(style.width, style.height))
    ax = fig.add_subplot(1, 1, 1)
    ax.set_aspect("equal")
    ax.set_axis_off()

    if u is not None:
        u = np.asarray(u, dtype=float)
        lo, hi = float(u.min()), float(u.max())
        if hi > lo:
            tri = Triangulation(mesh.vertices[:, 0], mesh.vertices[:, 1], mesh.triangles)
            ax.tricontourf(tri, u, levels=np.linspace(lo, hi, N_BANDS + 1), cmap=style.cmap)

    outline = LineCollection(
        mesh.vertices[mesh.boundary_edges], colors=style.outline_color, linewidths=style.line_width
    )
    ax.add_collection(outline)

    if path is not None:
        for component in path.components:
            ax.plot(component.points[:, 0], component.points[:, 1], color=style.nodal_color, linewidth=1.5 * style.line_width)

    if layout is not None:
        for arc in (layout.semicircle1, layout.semicircle2):
            ax.plot(arc[:, 0], arc[:, 1], color=style.arc_color, linewidth=style.line_width, linestyle="--")

    if style.title:
        ax.set_title(style.title)
    xmin, ymin = mesh.vertices.min(axis=0)
    xmax, ymax = mesh.vertices.max(axis=0)
    pad = 0.02 * max(xmax - xmin, ymax - ymin)
    ax.set_xlim(xmin - pad, xmax + pad)
    ax.set_ylim(ymin - pad, ymax + pad)

    buffer = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": "dumbbell-lab", "svg.fonttype": "none"}):
        fig.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue().decode("utf-8")
