"""SVG rendering of maps, roadmaps, and solution paths.

Obstacles are blue, step obstacles light/dark blue, roadmap edges gray, the
solution path black, start green, goal red. Output is plain SVG built with
ElementTree so it is always well-formed XML and diffable in tests.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .envgen import CellClass, EnvironmentMap
from .planner import PlanPath, Roadmap

COLOR_WALL = "#3465a4"
COLOR_STEP_LOW = "#8ab4dc"
COLOR_STEP_HIGH = "#204a87"
COLOR_EDGE = "#999999"
COLOR_PATH = "#000000"
COLOR_START = "#4e9a06"
COLOR_GOAL = "#cc0000"

_CELL_COLORS = {
    CellClass.WALL: COLOR_WALL,
    CellClass.STEP_LOW: COLOR_STEP_LOW,
    CellClass.STEP_HIGH: COLOR_STEP_HIGH,
}


def _fmt(value: float) -> str:
    return f"{value:.2f}".rstrip("0").rstrip(".")


def render_svg(env: EnvironmentMap, roadmap: Roadmap | None, path: PlanPath | None,
               start, goal, out_path: str, scale: int = 8) -> None:
    """Write one SVG figure of the scene; roadmap and path may be None."""
    width_px = env.width * scale
    height_px = env.height * scale
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg",
                     width=str(width_px), height=str(height_px),
                     viewBox=f"0 0 {width_px} {height_px}")
    ET.SubElement(svg, "rect", x="0", y="0", width=str(width_px),
                  height=str(height_px), fill="#ffffff")

    cells = np.asarray(env.cells)
    obstacles = ET.SubElement(svg, "g")
    for klass, color in _CELL_COLORS.items():
        for y, x in np.argwhere(cells == klass):
            ET.SubElement(obstacles, "rect", x=str(int(x) * scale), y=str(int(y) * scale),
                          width=str(scale), height=str(scale), fill=color)

    if roadmap is not None and roadmap.edges:
        edges = ET.SubElement(svg, "g", stroke=COLOR_EDGE,
                              **{"stroke-width": _fmt(scale * 0.12)})
        for i, j, _ in roadmap.edges:
            a, b = roadmap.nodes[i], roadmap.nodes[j]
            ET.SubElement(edges, "line",
                          x1=_fmt(a[0] * scale), y1=_fmt(a[1] * scale),
                          x2=_fmt(b[0] * scale), y2=_fmt(b[1] * scale))

    if path is not None and len(path.nodes) >= 2:
        points = " ".join(f"{_fmt(x * scale)},{_fmt(y * scale)}" for x, y in path.nodes)
        ET.SubElement(svg, "polyline", points=points, fill="none",
                      stroke=COLOR_PATH, **{"stroke-width": _fmt(scale * 0.3)})

    for pos, color in ((start, COLOR_START), (goal, COLOR_GOAL)):
        if pos is None:
            continue
        ET.SubElement(svg, "circle", cx=_fmt(pos[0] * scale), cy=_fmt(pos[1] * scale),
                      r=_fmt(scale * 0.8), fill=color)

    ET.ElementTree(svg).write(out_path, encoding="unicode", xml_declaration=True)
