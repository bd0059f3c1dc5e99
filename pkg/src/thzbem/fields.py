"""Field evaluation away from the boundary: incident waves plus layer
potentials radiated by solved surface densities.

Conventions (matching the solver unknowns; t̂ = ẑ x n̂, e^{+jwt}):

    PEC, exterior scattered:        E_z = -j k0 eta0 * Spot[j_z]
    dielectric, exterior scattered: E_z = +j k0 eta0 * Spot[j_z] - Dpot[m_t]
    dielectric, interior total:     E_z = -j k1 eta1 * Spot1[j_z] + Dpot1[m_t]

Evaluation points closer to the boundary than one local segment length
are excluded (near-singular quadrature is out of scope) and tagged.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import BoundaryMesh
from .media import Medium
from .quadrature import GAUSS_ORDER, gauss_rule

REGION_EXTERIOR = "exterior"
REGION_INTERIOR = "interior"
REGION_EXCLUDED = "on-boundary-excluded"

GRID_DEFAULT = 256
BOX_SCALE = 3.0


@dataclass
class FieldGrid:
    """Sample points with complex field values and region tags."""

    points: np.ndarray           # (m, 2)
    values: np.ndarray           # (m,) complex; NaN where excluded
    regions: np.ndarray          # (m,) str tags


def _point_in_polygon(points: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Even-odd crossing test, vectorized over points."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    x1, y1 = nodes[:, 0], nodes[:, 1]
    x2, y2 = np.roll(x1, -1), np.roll(y1, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        for ax, ay, bx, by in zip(x1, y1, x2, y2):
            straddles = (ay > y) != (by > y)
            cross = straddles & (x < ax + (y - ay) * (bx - ax) / (by - ay))
            inside ^= cross
    return inside


def _distance_to_segments(points: np.ndarray, mesh: BoundaryMesh) -> np.ndarray:
    """Min distance from each point to the polyline, in local-h units."""
    a = mesh.nodes
    d = np.roll(a, -1, axis=0) - a
    L2 = (d ** 2).sum(axis=1)
    best = np.full(len(points), np.inf)
    block = max(1, int(2e6 // max(len(a), 1)))
    for i0 in range(0, len(points), block):
        p = points[i0:i0 + block]
        w = p[:, None, :] - a[None, :, :]
        t = np.clip((w * d[None, :, :]).sum(-1) / L2[None, :], 0.0, 1.0)
        proj = w - t[:, :, None] * d[None, :, :]
        dist = np.sqrt((proj ** 2).sum(-1))
        ratio = dist / mesh.seg_lengths[None, :]
        best[i0:i0 + block] = ratio.min(axis=1)
    return best


def classify_points(mesh: BoundaryMesh, points: np.ndarray) -> np.ndarray:
    """Region tags with a one-segment-length exclusion band along Γ."""
    regions = np.where(_point_in_polygon(points, mesh.nodes),
                       REGION_INTERIOR, REGION_EXTERIOR).astype(object)
    near = _distance_to_segments(points, mesh) < 1.0
    regions[near] = REGION_EXCLUDED
    return regions.astype(str)


def _potentials(mesh: BoundaryMesh, k: complex, points: np.ndarray,
                single_density: np.ndarray | None,
                double_density: np.ndarray | None,
                order: int = GAUSS_ORDER) -> np.ndarray:
    """Spot[sigma] and/or Dpot[mu] at points, hat-interpolated densities."""
    t, w = gauss_rule(order)
    q = len(t)
    n = mesh.n_nodes
    pts = mesh.quad_points(t).reshape(-1, 2)
    h = mesh.seg_lengths

    def node_values_at_quads(coef):
        coef_next = np.roll(coef, -1)
        return (coef[:, None] * (1.0 - t)[None, :] + coef_next[:, None] * t[None, :])

    out = np.zeros(len(points), dtype=complex)
    wq = (w[None, :] * h[:, None]).ravel()
    sig = (node_values_at_quads(single_density).ravel() * wq
           if single_density is not None else None)
    mu = (node_values_at_quads(double_density).ravel() * wq
          if double_density is not None else None)
    nsrc = np.repeat(mesh.outward_normals, q, axis=0)

    block = max(1, int(4e6 // max(n * q, 1)))
    for i0 in range(0, len(points), block):
        p = points[i0:i0 + block]
        dx = p[:, 0:1] - pts[None, :, 0]
        dy = p[:, 1:2] - pts[None, :, 1]
        r = np.hypot(dx, dy)
        h0, h1 = _kernels.hankel2_01(k * r)
        if sig is not None:
            out[i0:i0 + block] += (-0.25j) * (h0 @ sig)
        if mu is not None:
            wgeo = -(dx * nsrc[None, :, 0] + dy * nsrc[None, :, 1]) / r
            out[i0:i0 + block] += (0.25j * k) * ((h1 * wgeo) @ mu)
    return out


def incident_field(points: np.ndarray, wave, medium0: Medium) -> np.ndarray:
    d = wave.direction
    return wave.amplitude * np.exp(-1j * medium0.k.real * (points @ d))


def radiate(mesh: BoundaryMesh, currents, medium: Medium, points: np.ndarray,
            region: str, pec: bool = False, order: int = GAUSS_ORDER) -> FieldGrid:
    """Scattered (exterior) or total (interior) E_z from solved densities.

    `currents` is a SolveResult-like object with j_z_m (PEC) or
    j_z_s / m_t_s (dielectric) coefficient vectors.
    """
    points = np.asarray(points, dtype=float)
    regions = classify_points(mesh, points)
    values = np.full(len(points), np.nan + 0j)
    live = regions == region
    if np.any(live):
        p = points[live]
        k = medium.k
        if pec:
            vals = (-1j * k * medium.eta) * _potentials(
                mesh, k, p, currents.j_z_m, None, order=order)
        elif region == REGION_EXTERIOR:
            vals = ((1j * k * medium.eta) * _potentials(mesh, k, p, currents.j_z_s,
                                                        None, order=order)
                    - _potentials(mesh, k, p, None, currents.m_t_s, order=order))
        else:
            vals = ((-1j * k * medium.eta) * _potentials(mesh, k, p, currents.j_z_s,
                                                         None, order=order)
                    + _potentials(mesh, k, p, None, currents.m_t_s, order=order))
        values[live] = vals
    return FieldGrid(points=points, values=values, regions=regions)


def rectangular_grid(mesh: BoundaryMesh, n_side: int = GRID_DEFAULT,
                     box_scale: float = BOX_SCALE) -> np.ndarray:
    """n_side^2 points over a box `box_scale` times the mesh bounding box."""
    lo = mesh.nodes.min(axis=0)
    hi = mesh.nodes.max(axis=0)
    center = 0.5 * (lo + hi)
    half = 0.5 * box_scale * (hi - lo)
    xs = np.linspace(center[0] - half[0], center[0] + half[0], n_side)
    ys = np.linspace(center[1] - half[1], center[1] + half[1], n_side)
    X, Y = np.meshgrid(xs, ys)
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def field_map_skin(mesh: BoundaryMesh, currents, medium0: Medium, medium1: Medium,
                   wave, n_side: int = GRID_DEFAULT, csv_path=None,
                   order: int = GAUSS_ORDER) -> FieldGrid:
    """Magnitude map of scattered E_z around (and total inside) the sample."""
    points = rectangular_grid(mesh, n_side=n_side)
    regions = classify_points(mesh, points)
    values = np.full(len(points), np.nan + 0j)
    ext = regions == REGION_EXTERIOR
    if np.any(ext):
        values[ext] = ((1j * medium0.k * medium0.eta)
                       * _potentials(mesh, medium0.k, points[ext], currents.j_z_s,
                                     None, order=order)
                       - _potentials(mesh, medium0.k, points[ext], None,
                                     currents.m_t_s, order=order))
    itr = regions == REGION_INTERIOR
    if np.any(itr):
        values[itr] = ((-1j * medium1.k * medium1.eta)
                       * _potentials(mesh, medium1.k, points[itr], currents.j_z_s,
                                     None, order=order)
                       + _potentials(mesh, medium1.k, points[itr], None,
                                     currents.m_t_s, order=order))
    grid = FieldGrid(points=points, values=values, regions=regions)
    if csv_path is not None:
        write_field_csv(grid, csv_path)
    return grid


def write_field_csv(grid: FieldGrid, path) -> None:
    """CSV contract: x_m,y_m,region,re_V_per_m,im_V_per_m,abs_V_per_m."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x_m", "y_m", "region", "re_V_per_m", "im_V_per_m",
                         "abs_V_per_m"])
        for (x, y), v, tag in zip(grid.points, grid.values, grid.regions):
            if tag == REGION_EXCLUDED:
                writer.writerow([f"{x:.17g}", f"{y:.17g}", tag, "", "", ""])
            else:
                writer.writerow([f"{x:.17g}", f"{y:.17g}", tag,
                                 f"{v.real:.17g}", f"{v.imag:.17g}",
                                 f"{abs(v):.17g}"])
