"""Closed 2D boundary curves and their piecewise-linear discretization.

A `BoundaryMesh` is a single closed polyline loop, counter-clockwise,
with outward unit normals per segment.  Node-based hat functions form
the discretization basis: node i owns the hat that is 1 at node i and
falls linearly to 0 at its two neighbours, so N nodes = N segments =
N unknowns.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ellipe

from .errors import MeshError

MIN_ELEMENTS = 8
DEFAULT_DENSITY = 18.0  # unknowns per wavelength

# Joukowsky source-circle parameters: centre offset, circle through (1, 0).
_JOUKOWSKY_CENTER = -0.1 + 0.1j


@dataclass(frozen=True)
class CurveSpec:
    """Geometry request: curve family plus target perimeter in meters."""

    kind: str  # circle | ellipse | airfoil
    perimeter: float
    n_elements: int
    aspect_ratio: float = 1.0

    def __post_init__(self):
        if self.kind not in ("circle", "ellipse", "airfoil"):
            raise MeshError(f"unknown curve kind {self.kind!r}")
        if self.n_elements < MIN_ELEMENTS:
            raise MeshError(f"n_elements must be >= {MIN_ELEMENTS}, got {self.n_elements}")
        if self.perimeter <= 0:
            raise MeshError("perimeter must be positive")
        if self.aspect_ratio < 1.0:
            raise MeshError("aspect_ratio must be >= 1")


@dataclass(frozen=True)
class BoundaryMesh:
    """Closed CCW polyline with per-segment geometry data.

    nodes[i] connects to nodes[(i+1) % n]; segment i spans exactly that
    pair, so `segments` is implied but stored explicitly for clarity.
    """

    nodes: np.ndarray            # (n, 2) meters
    segments: np.ndarray         # (n, 2) node index pairs
    outward_normals: np.ndarray  # (n, 2) unit, per segment
    tangents: np.ndarray         # (n, 2) unit, along arclength
    seg_lengths: np.ndarray      # (n,)
    perimeter: float
    curvature_radius_avg: float
    node_arclengths: np.ndarray = field(repr=False, default=None)  # (n,), node i position

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def quad_points(self, t: np.ndarray):
        """Points x(t) on every segment for parameter values t in [0, 1].

        Returns an (n, len(t), 2) array.
        """
        a = self.nodes
        b = np.roll(self.nodes, -1, axis=0)
        return a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]


def _validate_and_build(nodes: np.ndarray) -> BoundaryMesh:
    n = len(nodes)
    if n < MIN_ELEMENTS:
        raise MeshError(f"mesh needs at least {MIN_ELEMENTS} nodes")
    d = np.roll(nodes, -1, axis=0) - nodes
    lengths = np.hypot(d[:, 0], d[:, 1])
    if np.any(lengths == 0):
        raise MeshError("coincident consecutive nodes")
    # enforce CCW orientation
    area2 = np.sum(nodes[:, 0] * np.roll(nodes[:, 1], -1) - np.roll(nodes[:, 0], -1) * nodes[:, 1])
    if area2 < 0:
        nodes = nodes[::-1].copy()
        d = np.roll(nodes, -1, axis=0) - nodes
        lengths = np.hypot(d[:, 0], d[:, 1])
    if _self_intersects(nodes):
        raise MeshError("curve is non-simple (self-intersecting polyline)")
    tangents = d / lengths[:, None]
    normals = np.stack([tangents[:, 1], -tangents[:, 0]], axis=1)  # CCW -> outward
    perimeter = float(lengths.sum())
    segs = np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1)
    arcl = np.concatenate([[0.0], np.cumsum(lengths)[:-1]])
    for arr in (nodes, segs, normals, tangents, lengths, arcl):
        arr.setflags(write=False)
    return BoundaryMesh(
        nodes=nodes,
        segments=segs,
        outward_normals=normals,
        tangents=tangents,
        seg_lengths=lengths,
        perimeter=perimeter,
        curvature_radius_avg=perimeter / (2.0 * np.pi),
        node_arclengths=arcl,
    )


def _self_intersects(nodes: np.ndarray) -> bool:
    """Brute-force proper-intersection test over non-adjacent segment pairs."""
    n = len(nodes)
    a = nodes
    b = np.roll(nodes, -1, axis=0)

    def cross(o, p, q):
        return (p[..., 0] - o[..., 0]) * (q[..., 1] - o[..., 1]) - (
            p[..., 1] - o[..., 1]
        ) * (q[..., 0] - o[..., 0])

    block = max(1, int(2.0e6 // n))
    for i0 in range(0, n, block):
        i1 = min(n, i0 + block)
        ii = np.arange(i0, i1)[:, None]
        jj = np.arange(n)[None, :]
        # skip self and wrap-adjacent pairs, and each unordered pair once
        mask = (jj > ii + 1) & ~((ii == 0) & (jj == n - 1))
        p1 = a[i0:i1, None, :]
        p2 = b[i0:i1, None, :]
        q1 = a[None, :, :]
        q2 = b[None, :, :]
        d1 = cross(p1, p2, q1)
        d2 = cross(p1, p2, q2)
        d3 = cross(q1, q2, p1)
        d4 = cross(q1, q2, p2)
        proper = (d1 * d2 < 0) & (d3 * d4 < 0)
        if np.any(proper & mask):
            return True
    return False


def _circle_nodes(perimeter: float, n: int) -> np.ndarray:
    r = perimeter / (2.0 * np.pi)
    th = 2.0 * np.pi * np.arange(n) / n
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=1)


def ellipse_semiaxes(perimeter: float, aspect_ratio: float):
    """Semi-axes (a, b) of the ellipse with the given perimeter and a/b ratio."""
    if aspect_ratio == 1.0:
        r = perimeter / (2.0 * np.pi)
        return r, r
    m = 1.0 - 1.0 / aspect_ratio**2  # elliptic parameter for semi-major a
    a = perimeter / (4.0 * ellipe(m))
    return a, a / aspect_ratio


def _ellipse_nodes(perimeter: float, aspect_ratio: float, n: int) -> np.ndarray:
    a, b = ellipse_semiaxes(perimeter, aspect_ratio)

    def speed(th):
        return np.sqrt((a * np.sin(th)) ** 2 + (b * np.cos(th)) ** 2)

    # dense cumulative arclength, then Newton refinement of each node angle
    m = max(4096, 32 * n)
    th = np.linspace(0.0, 2.0 * np.pi, m + 1)
    sp = speed(th)
    s = np.concatenate([[0.0], np.cumsum(0.5 * (sp[1:] + sp[:-1]) * np.diff(th))])
    total = s[-1]
    targets = total * np.arange(n) / n
    ang = np.interp(targets, s, th)
    for _ in range(4):
        si = np.interp(ang, th, s)  # fine-grid arclength is smooth enough to reuse
        ang = ang - (si - targets) / speed(ang)
    return np.stack([a * np.cos(ang), b * np.sin(ang)], axis=1)


def _airfoil_nodes(perimeter: float, n: int) -> np.ndarray:
    c0 = _JOUKOWSKY_CENTER
    radius = abs(1.0 - c0)
    start = np.angle(1.0 - c0)  # trailing edge lands exactly on a node
    th = start + 2.0 * np.pi * np.arange(n) / n
    zeta = c0 + radius * np.exp(1j * th)
    z = zeta + 1.0 / zeta
    pts = np.stack([z.real, z.imag], axis=1)
    pts -= pts.mean(axis=0)
    raw_per = np.hypot(*(np.roll(pts, -1, axis=0) - pts).T).sum()
    return pts * (perimeter / raw_per)


def build_mesh(spec: CurveSpec) -> BoundaryMesh:
    """Discretize the requested curve into a closed CCW polyline mesh."""
    if spec.kind == "circle":
        nodes = _circle_nodes(spec.perimeter, spec.n_elements)
    elif spec.kind == "ellipse":
        nodes = _ellipse_nodes(spec.perimeter, spec.aspect_ratio, spec.n_elements)
    else:
        nodes = _airfoil_nodes(spec.perimeter, spec.n_elements)
    return _validate_and_build(nodes)


def average_curvature_radius(mesh: BoundaryMesh) -> float:
    """Radius of the equi-perimeter circle, perimeter / (2 pi)."""
    return mesh.perimeter / (2.0 * np.pi)


def elements_for_wavenumber(perimeter: float, k0: float, density: float = DEFAULT_DENSITY) -> int:
    """Element count giving `density` unknowns per wavelength 2 pi / k0."""
    n = int(np.ceil(density * perimeter * k0 / (2.0 * np.pi)))
    return max(MIN_ELEMENTS, n)


def hat_basis_eval(mesh: BoundaryMesh, node_index: int, arclength) -> np.ndarray:
    """Evaluate hat function `node_index` at arclength positions along the loop."""
    n = mesh.n_nodes
    if not 0 <= node_index < n:
        raise IndexError(f"node index {node_index} out of range for {n} nodes")
    s = np.asarray(arclength, dtype=float) % mesh.perimeter
    s_node = mesh.node_arclengths[node_index]
    h_prev = mesh.seg_lengths[node_index - 1]  # segment ending at the node
    h_next = mesh.seg_lengths[node_index]
    d = (s - s_node + 0.5 * mesh.perimeter) % mesh.perimeter - 0.5 * mesh.perimeter
    rising = np.clip(1.0 + d / h_prev, 0.0, 1.0) * (d <= 0)
    falling = np.clip(1.0 - d / h_next, 0.0, 1.0) * (d > 0)
    return rising + falling


def save_mesh(mesh: BoundaryMesh, path) -> None:
    """Write the text format: header `perimeter n_nodes`, then `x y` rows."""
    with open(path, "w") as f:
        f.write(f"{mesh.perimeter:.17g} {mesh.n_nodes}\n")
        for x, y in mesh.nodes:
            f.write(f"{x:.17g} {y:.17g}\n")


def load_mesh(path) -> BoundaryMesh:
    """Read the text format written by `save_mesh`; loop closure is implicit."""
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise MeshError(f"bad mesh header in {path}")
        declared_perimeter, n = float(header[0]), int(header[1])
        nodes = np.loadtxt(f, dtype=float, max_rows=n)
    if nodes.shape != (n, 2):
        raise MeshError(f"expected {n} nodes in {path}, got shape {nodes.shape}")
    mesh = _validate_and_build(nodes)
    if abs(mesh.perimeter - declared_perimeter) > 1e-9 * declared_perimeter:
        raise MeshError("mesh header perimeter disagrees with node data")
    return mesh
