"""
Test module for SVG figure rendering.
"""

import logging

import numpy as np

from app.cli.render import RenderStyle, render_svg
from app.core.geometry import subregions
from app.core.nodal import nodal_set

# Configure logging
logging.basicConfig(level=logging.INFO)
logger = logging.getLogger(__name__)


def test_outline_only(square_mesh):
    svg = render_svg(square_mesh)
    assert svg.lstrip().startswith("<?xml")
    assert "<svg" in svg and svg.rstrip().endswith("</svg>")


def test_rendering_is_deterministic(square_mesh):
    u = square_mesh.vertices[:, 0] - 0.4
    path = nodal_set(u, square_mesh)
    first = render_svg(square_mesh, u, path, RenderStyle(title="x - 0.4"))
    second = render_svg(square_mesh, u, path, RenderStyle(title="x - 0.4"))
    assert first == second
    assert "x - 0.4" in first
    assert len(first) > len(render_svg(square_mesh))


def test_constant_field_skips_contours(square_mesh):
    assert render_svg(square_mesh, np.ones(square_mesh.n_vertices)) == render_svg(square_mesh)


def test_half_disk_overlay(dumbbell_mesh, dumbbell_spec):
    layout = subregions(dumbbell_spec, 0.3, 0.3)
    svg = render_svg(dumbbell_mesh, layout=layout)
    logger.info(f"Overlay figure: {len(svg)} characters")
    assert svg != render_svg(dumbbell_mesh)
