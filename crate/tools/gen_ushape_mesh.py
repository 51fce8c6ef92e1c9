"""Generate the U-shaped obstacle mesh fixture.

Writes crates/core/fixtures/ushape.mesh in the solver's text mesh format.
Requires the `triangle` package (pip install triangle).
"""

import math
import pathlib

import numpy as np
import triangle

OUTER_RADIUS = 3.0
OUTER_POINTS = 96
SPACING = 0.15
MAX_AREA = 0.06

U_SHAPE = [
    (-2.0, -0.7),
    (2.2, -0.7),
    (2.2, 0.7),
    (-2.0, 0.7),
    (-2.0, 0.3),
    (1.7, 0.3),
    (1.7, -0.3),
    (-2.0, -0.3),
]


def subdivide(polygon, spacing):
    points = []
    for (x0, y0), (x1, y1) in zip(polygon, polygon[1:] + polygon[:1]):
        pieces = max(1, math.ceil(math.hypot(x1 - x0, y1 - y0) / spacing))
        for k in range(pieces):
            s = k / pieces
            points.append((x0 + s * (x1 - x0), y0 + s * (y1 - y0)))
    return points


def main():
    circle = [
        (OUTER_RADIUS * math.cos(2 * math.pi * k / OUTER_POINTS),
         OUTER_RADIUS * math.sin(2 * math.pi * k / OUTER_POINTS))
        for k in range(OUTER_POINTS)
    ]
    obstacle = subdivide(U_SHAPE, SPACING)
    vertices = circle + obstacle
    markers = [2] * len(circle) + [1] * len(obstacle)

    def ring(offset, count):
        return [(offset + k, offset + (k + 1) % count) for k in range(count)]

    segments = ring(0, len(circle)) + ring(len(circle), len(obstacle))
    geometry = {
        "vertices": np.array(vertices),
        "vertex_markers": np.array(markers).reshape(-1, 1),
        "segments": np.array(segments),
        "segment_markers": np.array([2] * len(circle) + [1] * len(obstacle)).reshape(-1, 1),
        "holes": np.array([[2.0, 0.0]]),
    }
    # Y: no Steiner points on the boundary, so outer vertices stay on the circle
    mesh = triangle.triangulate(geometry, f"pq30Ya{MAX_AREA}")

    pts = mesh["vertices"]
    tags = mesh["vertex_markers"].ravel()
    tris = mesh["triangles"]
    # restore exact circle coordinates
    for k, (x, y) in enumerate(circle):
        pts[k] = (x, y)

    lines = [f"vertices {len(pts)} triangles {len(tris)}"]
    for (x, y), tag in zip(pts, tags):
        lines.append(f"{float(x)!r} {float(y)!r} {int(tag)}")
    for a, b, c in tris:
        (xa, ya), (xb, yb), (xc, yc) = pts[a], pts[b], pts[c]
        if (xb - xa) * (yc - ya) - (xc - xa) * (yb - ya) < 0:
            b, c = c, b
        lines.append(f"{a} {b} {c}")

    out = pathlib.Path(__file__).resolve().parent.parent / "crates/core/fixtures/ushape.mesh"
    out.write_text("\n".join(lines) + "\n")
    print(f"{out}: {len(pts)} vertices, {len(tris)} triangles")


if __name__ == "__main__":
    main()
