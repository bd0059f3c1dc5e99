import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import ellipe

from thzbem import geometry
from thzbem.errors import MeshError
from thzbem.geometry import (CurveSpec, average_curvature_radius, build_mesh,
                             elements_for_wavenumber, hat_basis_eval,
                             load_mesh, save_mesh)


def test_circle_nodes_on_radius():
    mesh = build_mesh(CurveSpec("circle", 2 * np.pi, 64))
    r = np.hypot(*(mesh.nodes - mesh.nodes.mean(axis=0)).T)
    assert np.max(np.abs(r - 1.0)) < 1e-12


def test_ellipse_semiaxes_and_perimeter():
    mesh = build_mesh(CurveSpec("ellipse", 2 * np.pi, 512, aspect_ratio=1.5))
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    a, b = x.max(), y.max()
    assert a / b == pytest.approx(1.5, rel=1e-6)
    # independent elliptic-perimeter oracle via adaptive quadrature
    per, _ = quad(lambda t: np.hypot(a * np.sin(t), b * np.cos(t)), 0.0, 2 * np.pi,
                  limit=200)
    assert per == pytest.approx(2 * np.pi, rel=1e-6)


def test_ellipse_equal_arclength_spacing():
    mesh = build_mesh(CurveSpec("ellipse", 2 * np.pi, 256, aspect_ratio=1.5))
    h = mesh.seg_lengths
    assert np.ptp(h) / h.mean() < 1e-3


def test_airfoil_simple_closed_winding():
    mesh = build_mesh(CurveSpec("airfoil", 2 * np.pi, 256))
    # independent simplicity check
    from shapely.geometry import LineString
    ring = LineString(np.vstack([mesh.nodes, mesh.nodes[:1]]))
    assert ring.is_simple
    # winding number about the centroid
    c = mesh.nodes.mean(axis=0)
    ang = np.arctan2(mesh.nodes[:, 1] - c[1], mesh.nodes[:, 0] - c[0])
    dw = np.diff(np.concatenate([ang, ang[:1]]))
    dw = (dw + np.pi) % (2 * np.pi) - np.pi
    assert round(dw.sum() / (2 * np.pi)) == 1
    assert mesh.perimeter == pytest.approx(2 * np.pi, rel=1e-12)


def test_airfoil_sharp_trailing_edge():
    mesh = build_mesh(CurveSpec("airfoil", 2 * np.pi, 256))
    t = mesh.tangents
    turn = np.arccos(np.clip(np.einsum("ij,ij->i", t, np.roll(t, -1, axis=0)), -1, 1))
    sharp = np.sum(turn > np.radians(120.0))
    assert sharp == 1


def test_average_curvature_radius():
    for kind, aspect in (("circle", 1.0), ("ellipse", 1.5), ("airfoil", 1.0)):
        mesh = build_mesh(CurveSpec(kind, 2 * np.pi, 128, aspect_ratio=aspect))
        assert average_curvature_radius(mesh) == pytest.approx(
            mesh.perimeter / (2 * np.pi), rel=1e-14)


def test_normals_unit_and_orthogonal():
    mesh = build_mesh(CurveSpec("ellipse", 2 * np.pi, 128, aspect_ratio=1.5))
    nn = np.linalg.norm(mesh.outward_normals, axis=1)
    assert np.max(np.abs(nn - 1.0)) < 1e-12
    dots = np.einsum("ij,ij->i", mesh.outward_normals, mesh.tangents)
    assert np.max(np.abs(dots)) < 1e-12
    # outward for a convex curve: positive projection on the radial direction
    mids = 0.5 * (mesh.nodes + np.roll(mesh.nodes, -1, axis=0))
    assert np.all(np.einsum("ij,ij->i", mesh.outward_normals, mids) > 0)


def test_perimeter_second_order_convergence():
    exact = 2 * np.pi
    errs = []
    for n in (32, 64, 128, 256):
        a, b = geometry.ellipse_semiaxes(exact, 1.5)
        mesh = build_mesh(CurveSpec("ellipse", exact, n, aspect_ratio=1.5))
        per_analytic = 4 * a * ellipe(1 - (b / a) ** 2)
        errs.append(abs(mesh.perimeter - per_analytic))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.8)


def test_hat_basis_nodal_values_and_partition_of_unity():
    mesh = build_mesh(CurveSpec("ellipse", 2 * np.pi, 64, aspect_ratio=1.5))
    s_nodes = mesh.node_arclengths
    assert hat_basis_eval(mesh, 5, s_nodes[5]) == pytest.approx(1.0, abs=1e-12)
    assert hat_basis_eval(mesh, 5, s_nodes[4]) == pytest.approx(0.0, abs=1e-12)
    assert hat_basis_eval(mesh, 5, s_nodes[6]) == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(0)
    s = rng.uniform(0, mesh.perimeter, 100)
    total = sum(hat_basis_eval(mesh, i, s) for i in range(mesh.n_nodes))
    np.testing.assert_allclose(total, 1.0, atol=1e-12)
    with pytest.raises(IndexError):
        hat_basis_eval(mesh, mesh.n_nodes, 0.0)


def test_segment_sum_matches_perimeter():
    mesh = build_mesh(CurveSpec("airfoil", 2 * np.pi, 128))
    assert mesh.seg_lengths.sum() == pytest.approx(mesh.perimeter, rel=1e-12)


def test_rejects_too_few_elements():
    with pytest.raises(MeshError):
        CurveSpec("circle", 2 * np.pi, 7)


def test_rejects_self_intersection():
    # limacon with an inner loop crosses itself away from any node
    t = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    r = 0.5 + np.cos(t)
    nodes = np.stack([r * np.cos(t), r * np.sin(t)], axis=1)
    with pytest.raises(MeshError):
        geometry._validate_and_build(nodes)


def test_mesh_io_roundtrip(tmp_path):
    mesh = build_mesh(CurveSpec("ellipse", 2 * np.pi, 64, aspect_ratio=1.5))
    path = tmp_path / "mesh.txt"
    save_mesh(mesh, path)
    again = load_mesh(path)
    np.testing.assert_allclose(again.nodes, mesh.nodes, rtol=0, atol=1e-15)
    assert again.perimeter == pytest.approx(mesh.perimeter, rel=1e-12)
    bad = tmp_path / "bad.txt"
    bad.write_text("not a header\n")
    with pytest.raises(MeshError):
        load_mesh(bad)


def test_elements_for_wavenumber_default_density():
    assert elements_for_wavenumber(2 * np.pi, 25.0) == 450
    assert elements_for_wavenumber(2 * np.pi, 200.0) == 3600
    assert elements_for_wavenumber(2 * np.pi, 0.01) == geometry.MIN_ELEMENTS
