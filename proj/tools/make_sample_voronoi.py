#!/usr/bin/env python3
"""Write a small centroidal Voronoi mesh of the unit square in vhimesh format."""

import argparse

import numpy as np
from scipy.spatial import Voronoi


def bounded_cells(seeds):
    # Mirror the seeds across the four sides so every original cell is closed
    # and clipped exactly to the square.
    mirrored = [seeds,
                np.column_stack([-seeds[:, 0], seeds[:, 1]]),
                np.column_stack([2.0 - seeds[:, 0], seeds[:, 1]]),
                np.column_stack([seeds[:, 0], -seeds[:, 1]]),
                np.column_stack([seeds[:, 0], 2.0 - seeds[:, 1]])]
    vor = Voronoi(np.vstack(mirrored))
    cells = []
    for i in range(len(seeds)):
        region = vor.regions[vor.point_region[i]]
        cells.append(vor.vertices[region])
    return cells


def polygon_centroid(p):
    x, y = p[:, 0], p[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    c = x * yn - xn * y
    a = c.sum() / 2.0
    return np.array([((x + xn) * c).sum(), ((y + yn) * c).sum()]) / (6.0 * a)


def lloyd(seeds, iterations):
    for _ in range(iterations):
        seeds = np.array([polygon_centroid(orient(c)) for c in bounded_cells(seeds)])
    return seeds


def orient(p):
    x, y = p[:, 0], p[:, 1]
    area = 0.5 * (x * np.roll(y, -1) - np.roll(x, -1) * y).sum()
    return p if area > 0 else p[::-1]


def snap(v, tol):
    v = v.copy()
    for target in (0.0, 1.0):
        v[np.abs(v - target) < tol] = target
    return v


def build_mesh(cells, tol=1e-9):
    vertices, index, polys = [], {}, []
    for cell in cells:
        poly = []
        for p in orient(cell):
            p = snap(p, tol)
            key = (round(p[0] / tol), round(p[1] / tol))
            if key not in index:
                index[key] = len(vertices)
                vertices.append(p)
            v = index[key]
            if not poly or poly[-1] != v:
                poly.append(v)
        if poly[0] == poly[-1]:
            poly.pop()
        polys.append(poly)
    return np.array(vertices), polys


def write(path, vertices, polys):
    with open(path, "w") as f:
        f.write("vhimesh 1\n")
        f.write("# centroidal Voronoi sample mesh of the unit square\n")
        f.write(f"vertices {len(vertices)}\n")
        for x, y in vertices:
            f.write(f"{x:.17g} {y:.17g}\n")
        f.write(f"cells {len(polys)}\n")
        for poly in polys:
            f.write(f"{len(poly)} " + " ".join(str(v) for v in poly) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=64)
    ap.add_argument("--lloyd", type=int, default=30)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("out")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    seeds = lloyd(rng.uniform(0.05, 0.95, size=(args.cells, 2)), args.lloyd)
    vertices, polys = build_mesh(bounded_cells(seeds))
    write(args.out, vertices, polys)


if __name__ == "__main__":
    main()
