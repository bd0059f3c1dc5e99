import numpy as np
import pytest
import scipy.special as sp
from scipy.integrate import quad

from thzbem.errors import ConfigError
from thzbem.formulations import (PlaneWave, assemble_cfie,
                                 assemble_cfie_preconditioned, assemble_pmchwt,
                                 assemble_rhs, build_block_system,
                                 complexified_wavenumber)
from thzbem.geometry import CurveSpec, build_mesh, elements_for_wavenumber
from thzbem.media import air, from_permittivity, skin_debye
from thzbem.operators import OperatorKind as K, assemble, assemble_gram, assemble_many


def test_cfie_is_sum_of_parts(circle64):
    k = 3.0
    C = assemble_cfie(circle64, k)
    ops = assemble_many(circle64, [(K.SINGLE_LAYER, k), (K.ADJOINT_DOUBLE_LAYER, k)])
    G = assemble_gram(circle64)
    S = ops[(K.SINGLE_LAYER, complex(k))].entries
    Ds = ops[(K.ADJOINT_DOUBLE_LAYER, complex(k))].entries
    np.testing.assert_allclose(C - 0.5 * G - Ds, S, atol=1e-14)


def test_half_gram_row_sums(circle64):
    G = assemble_gram(circle64)
    h = circle64.seg_lengths
    node_measure = 0.5 * (h + np.roll(h, 1))
    np.testing.assert_allclose((0.5 * G).sum(axis=1), 0.5 * node_measure, rtol=1e-12)


def test_complexified_wavenumber_formula():
    kt = complexified_wavenumber(100.0, 2.0)
    assert kt == pytest.approx(100.0 - 0.4j * 100.0 ** (1 / 3) * 2.0 ** (-2 / 3))


def _cond(M):
    sv = np.linalg.svd(M, compute_uv=False)
    return sv[0] / sv[-1]


def test_cfie_suppresses_resonance_spike(circle128):
    # classical combined-field behavior at the first zero of J1: the single
    # layer spikes, the combined matrix does not
    from scipy.special import jn_zeros
    G = assemble_gram(circle128)
    Gi = np.linalg.inv(G)

    def cond_s(k):
        return _cond(Gi @ assemble(K.SINGLE_LAYER, circle128, k).entries)

    k_res = float(jn_zeros(1, 1)[0])
    k_off = k_res + 0.18
    assert cond_s(k_res) > 10 * cond_s(k_off)
    cond_c_res = _cond(Gi @ assemble_cfie(circle128, k_res))
    cond_c_off = _cond(Gi @ assemble_cfie(circle128, k_off))
    assert cond_c_res < 3 * cond_c_off


def test_equal_weight_cfie_near_zero_at_j01(circle128):
    # the unit-coupled sum S + I/2 + D* is NOT uniformly resonance-free:
    # its azimuthal-order-1 symbol s1 + 1/2 + d1 nearly vanishes at the
    # first zero of J0, so the plain combined matrix still spikes there,
    # while the damped-regularizer product stays flat
    from scipy.special import jn_zeros
    G = assemble_gram(circle128)
    Gi = np.linalg.inv(G)
    k_res = float(jn_zeros(0, 1)[0])
    k_off = k_res + 0.18
    cond_c_res = _cond(Gi @ assemble_cfie(circle128, k_res))
    cond_c_off = _cond(Gi @ assemble_cfie(circle128, k_off))
    assert cond_c_res > 50 * cond_c_off
    cp_res = _cond(Gi @ assemble_cfie_preconditioned(circle128, k_res).preconditioned)
    cp_off = _cond(Gi @ assemble_cfie_preconditioned(circle128, k_off).preconditioned)
    assert 0.5 < cp_res / cp_off < 2.0


def test_preconditioning_improves_conditioning():
    k0 = 50.0
    n = elements_for_wavenumber(2 * np.pi, k0)
    mesh = build_mesh(CurveSpec("ellipse", 2 * np.pi, n, aspect_ratio=1.5))
    cc = assemble_cfie_preconditioned(mesh, k0)
    G = assemble_gram(mesh)
    Gi = np.linalg.inv(G)
    assert _cond(Gi @ cc.preconditioned) < _cond(Gi @ cc.cfie)


def test_circle_symbol_matches_analytic_calderon_combination():
    # with the damping switched off the symbol has a closed form; the
    # discrete symbol approaches it under refinement
    k = 10.0
    errs = []
    for n in (128, 256):
        mesh = build_mesh(CurveSpec("circle", 2 * np.pi, n))
        cc = assemble_cfie_preconditioned(mesh, k, k_tilde=complex(k))
        G = assemble_gram(mesh)
        m = np.minimum(np.arange(n), n - np.arange(n))
        z = k * 1.0
        s = -(1j * np.pi / 2) * sp.jv(m, z) * sp.hankel2(m, z)
        d = -(1j * np.pi * k / 4) * (sp.jvp(m, z) * sp.hankel2(m, z)
                                     + sp.jv(m, z) * sp.h2vp(m, z))
        nn = (1j * np.pi * k * k / 2) * sp.jvp(m, z) * sp.h2vp(m, z)
        ref = nn * s + (0.5 - d) * (0.5 + d)
        sym = np.fft.fft(cc.preconditioned[:, 0]) / np.fft.fft(G[:, 0])
        low = m <= 12
        errs.append(np.max(np.abs(sym[low] - ref[low])) / np.max(np.abs(ref[low])))
        if n == 256:
            # Fourier leakage: the matrix is circulant, off-diagonal ~ 0
            F = np.fft.fft(np.eye(n)) / np.sqrt(n)
            X = F.conj().T @ (np.linalg.inv(G) @ cc.preconditioned) @ F
            off = np.abs(X - np.diag(np.diag(X)))
            assert off.max() ** 2 < 1e-6 * np.max(np.abs(np.diag(X))) ** 2
    assert errs[1] < errs[0] / 3.0
    assert errs[1] < 2e-3


def test_preconditioned_spectrum_bounded_below_across_resonances(circle128):
    G = assemble_gram(circle128)
    Gi = np.linalg.inv(G)
    for k in np.linspace(2.2, 4.2, 9):
        cc = assemble_cfie_preconditioned(circle128, float(k))
        sv = np.linalg.svd(Gi @ cc.preconditioned, compute_uv=False)
        assert sv[-1] > 1e-2


def test_pmchwt_collapse_when_media_match(circle64):
    f = 1.0e9
    m0 = air(f)
    sysm = assemble_pmchwt(circle64, m0, m0)
    k0 = m0.k.real
    ops = assemble_many(circle64, [(K.DOUBLE_LAYER, k0), (K.ADJOINT_DOUBLE_LAYER, k0)])
    D = ops[(K.DOUBLE_LAYER, complex(k0))].entries
    Ds = ops[(K.ADJOINT_DOUBLE_LAYER, complex(k0))].entries
    np.testing.assert_allclose(sysm.p12, 2 * D, rtol=1e-12)
    np.testing.assert_allclose(sysm.p21, -2 * Ds, rtol=1e-12)
    np.testing.assert_allclose(sysm.p21, -sysm.p12.T, rtol=1e-12)


def test_rhs_zero_amplitude(circle64):
    wave = PlaneWave(amplitude=0.0, angle=0.3, frequency=1e9)
    e, h = assemble_rhs(circle64, wave, air(1e9), "dielectric")
    assert np.all(e == 0) and np.all(h == 0)


def test_rhs_reflection_symmetry():
    # normal incidence along x on a reflection-symmetric ellipse
    f = 1.0e9
    m0 = air(f)
    n = 64
    mesh = build_mesh(CurveSpec("ellipse", 2 * np.pi, n, aspect_ratio=1.5))
    wave = PlaneWave(amplitude=1.0, angle=0.0, frequency=f)
    e, h = assemble_rhs(mesh, wave, m0, "dielectric")
    # node i maps to node n-i under y -> -y
    flip = (n - np.arange(n)) % n
    np.testing.assert_allclose(e, e[flip], rtol=1e-10)
    np.testing.assert_allclose(h, h[flip], rtol=1e-10)


def test_rhs_against_adaptive_quadrature(circle64):
    f = 2.0e9
    m0 = air(f)
    k0 = m0.k.real
    wave = PlaneWave(amplitude=1.0, angle=0.7, frequency=f)
    e, h = assemble_rhs(circle64, wave, m0, "dielectric")
    d = wave.direction
    s_nodes = circle64.node_arclengths
    per = circle64.perimeter
    from thzbem.geometry import hat_basis_eval

    def pos(s):
        # piecewise-linear point on the polyline at arclength s
        s = s % per
        i = np.searchsorted(circle64.node_arclengths, s, side="right") - 1
        t = (s - circle64.node_arclengths[i]) / circle64.seg_lengths[i]
        a = circle64.nodes[i]
        b = circle64.nodes[(i + 1) % circle64.n_nodes]
        return a + t * (b - a)

    for i in (0, 17, 40):
        lo = s_nodes[i - 1] if i else -circle64.seg_lengths[-1]
        hi = s_nodes[(i + 1) % circle64.n_nodes] if i + 1 < circle64.n_nodes else per

        def integrand_re(s):
            p = pos(s)
            return (hat_basis_eval(circle64, i, s)
                    * np.exp(-1j * k0 * (p @ d))).real

        def integrand_im(s):
            p = pos(s)
            return (hat_basis_eval(circle64, i, s)
                    * np.exp(-1j * k0 * (p @ d))).imag

        re, _ = quad(integrand_re, lo, hi, limit=400)
        im, _ = quad(integrand_im, lo, hi, limit=400)
        assert abs((re + 1j * im) - e[i]) < 1e-8 * max(abs(e[i]), 1e-3)


def test_te_rhs_rejected(circle64):
    wave = PlaneWave(amplitude=1.0, angle=0.0, frequency=1e9, polarization="te")
    with pytest.raises(ConfigError):
        assemble_rhs(circle64, wave, air(1e9), "pec")


def test_block_system_structurally_uncoupled(circle64):
    f = 1.0e9
    m0 = air(f)
    m1 = from_permittivity(4.0 - 0.4j, f)
    wave = PlaneWave(amplitude=1.0, angle=0.0, frequency=f)
    mesh_s = build_mesh(CurveSpec("circle", 2 * np.pi, 64))
    system = build_block_system(wave, m0, mesh_m=circle64, mesh_s=mesh_s, medium1=m1)
    field_names = set(vars(system))
    assert not any("coupling" in name for name in field_names)
    # the two blocks have independent sizes and no cross storage
    assert system.pec.preconditioned.shape == (64, 64)
    assert system.dielectric.full_matrix().shape == (128, 128)


def test_pmchwt_absorbed_power_positive():
    f = 1.0e12
    m0 = air(f)
    m1 = skin_debye(f)
    k0 = m0.k.real
    a = 4.0 / k0
    per = 2 * np.pi * a
    n = elements_for_wavenumber(per, abs(m1.k.real))
    mesh = build_mesh(CurveSpec("circle", per, n))
    wave = PlaneWave(amplitude=1.0, angle=0.25, frequency=f)
    system = build_block_system(wave, m0, mesh_s=mesh, medium1=m1)
    from thzbem.fds import solve_scenario
    res = solve_scenario(system, method="dense")
    G = assemble_gram(mesh)
    # P_abs = (1/2) Re oint E_z H_t^* ds with E_z = -m_t, H_t = -j_z
    p_abs = 0.5 * np.real(res.m_t_s @ (G @ np.conj(res.j_z_s)))
    assert p_abs > 0
