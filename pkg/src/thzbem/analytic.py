"""Series reference solutions for plane-wave scattering by circular cylinders.

TM polarization, incident field E_z^inc = A exp(-j k0 d.r) with d the
propagation direction.  With the azimuthal expansion

    E_z^inc = A sum_n (-j)^n J_n(k0 rho) e^{j n (phi - alpha)}

the scattered field carries H_n^(2)(k0 rho) and the transmitted field
J_n(k1 rho).  The returned boundary traces use the same unknown
conventions as the integral-equation solver:

    PEC:        j_z = H_t               (tangent ẑ x n̂, exterior trace)
    dielectric: j_z = -H_t,  m_t = -E_z

with H_t = (1/(j w mu)) dE_z/dn.  These are the densities that satisfy
the solver's equations exactly, which is what the comparisons need.
"""

from dataclasses import dataclass

import numpy as np

from . import specfun
from .errors import DomainError
from .media import MU0, Medium

TRUNCATION_MARGIN = 15
TAIL_TOL = 1e-12


def _orders(k0: complex, radius: float, n_terms: int | None) -> np.ndarray:
    if n_terms is None:
        n_terms = int(np.ceil(abs(k0) * radius)) + TRUNCATION_MARGIN
    if n_terms < 1:
        raise DomainError("need at least one series term")
    return np.arange(n_terms + 1)


def _check_tail(coeffs: np.ndarray, what: str) -> None:
    scale = np.max(np.abs(coeffs))
    if scale > 0 and abs(coeffs[-1]) > TAIL_TOL * scale:
        raise DomainError(f"{what} series not converged: last-term ratio "
                          f"{abs(coeffs[-1]) / scale:.2e}")


def _angular_sum(coeffs: np.ndarray, phi: np.ndarray, alpha: float) -> np.ndarray:
    """sum_n coeffs_n cos-folded: c_0 + sum_{n>=1} c_n 2 cos(n (phi-alpha)).

    Valid for coefficient sequences even in the order index, which holds
    for every series used here.
    """
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    n = np.arange(len(coeffs))
    basis = np.cos(np.outer(phi - alpha, n))
    weights = np.where(n == 0, 1.0, 2.0)
    return basis @ (weights * coeffs)


@dataclass(frozen=True)
class CylinderSeries:
    """Container for one scattering problem's modal coefficients."""

    radius: float
    k0: complex
    k1: complex
    n_terms: int
    scattered: np.ndarray    # multipliers of H_n^(2)(k0 rho)
    transmitted: np.ndarray  # multipliers of J_n(k1 rho), zero for PEC


def pec_cylinder_current(radius: float, k0: float, n_terms: int | None = None,
                         angle: float = 0.0, amplitude: float = 1.0,
                         frequency: float | None = None):
    """Surface current j_z(phi) on a PEC circular cylinder under a TM wave.

    Returns (current_callable, series).  The scattered-mode coefficients are
    a_n = -J_n(k0 a)/H_n^(2)(k0 a); the current follows from the Wronskian
    as j_z(phi) = 2 A /(pi a w mu0) sum (-j)^n e^{jn(phi-alpha)} / H_n^(2)(k0 a).
    """
    if frequency is None:
        # consistent free-space dispersion w = k0 c
        from .media import C0
        frequency = k0 * C0 / (2.0 * np.pi)
    w = 2.0 * np.pi * frequency
    n = _orders(k0, radius, n_terms)
    jn = specfun.bessel_j_many(n, k0 * radius)
    hn = specfun.hankel2_many(n, k0 * radius)
    a_n = -jn / hn
    _check_tail(a_n, "PEC cylinder")
    cur = (2.0 * amplitude / (np.pi * radius * w * MU0)) * ((-1j) ** n) / hn

    series = CylinderSeries(radius=radius, k0=complex(k0), k1=0j,
                            n_terms=len(n) - 1,
                            scattered=amplitude * ((-1j) ** n) * a_n,
                            transmitted=np.zeros_like(a_n))

    def current(phi):
        return _angular_sum(cur, phi, angle)

    return current, series


def _dielectric_coeffs(radius, k0, k1, n_terms):
    n = _orders(k0, radius, n_terms)
    z0 = k0 * radius
    z1 = k1 * radius
    j0n = specfun.bessel_j_many(n, z0)
    h0n = specfun.hankel2_many(n, z0)
    j1n = specfun.bessel_j_many(n, z1)
    j0p = np.array([specfun.bessel_j_prime(int(m), z0) for m in n])
    h0p = np.array([specfun.hankel2_prime(int(m), z0) for m in n])
    j1p = np.array([specfun.bessel_j_prime(int(m), z1) for m in n])
    # continuity of E_z and of (1/mu) dE_z/dn across rho = a (mu equal):
    #   J + b H = c J1;  k0 (J' + b H') = k1 c J1'
    det = k0 * h0p * j1n - k1 * h0n * j1p
    b_n = (k1 * j0n * j1p - k0 * j0p * j1n) / det
    c_n = (j0n + b_n * h0n) / j1n
    return n, b_n, c_n


def dielectric_cylinder_fields(radius: float, medium0: Medium, medium1: Medium,
                               n_terms: int | None = None, angle: float = 0.0,
                               amplitude: float = 1.0):
    """Transmission-problem series for a penetrable circular cylinder.

    Returns a dict of callables:
      traces_j, traces_m : solver-convention boundary densities of phi
      e_z                : total field at (x, y) arrays (interior + exterior)
      e_z_scattered      : scattered field, exterior points only
    plus the `CylinderSeries`.
    """
    k0 = medium0.k
    k1 = medium1.k
    w = 2.0 * np.pi * medium0.frequency
    n, b_n, c_n = _dielectric_coeffs(radius, k0, k1, n_terms)
    _check_tail(b_n, "dielectric cylinder")
    phase = (-1j) ** n

    z0 = k0 * radius
    z1 = k1 * radius
    j1n = specfun.bessel_j_many(n, z1)
    j1p = np.array([specfun.bessel_j_prime(int(m), z1) for m in n])

    # boundary traces from the interior side (equal to exterior by continuity)
    ez_c = amplitude * phase * c_n * j1n
    dEdn_c = amplitude * phase * c_n * k1 * j1p
    ht_c = dEdn_c / (1j * w * MU0)

    series = CylinderSeries(radius=radius, k0=complex(k0), k1=complex(k1),
                            n_terms=len(n) - 1,
                            scattered=amplitude * phase * b_n,
                            transmitted=amplitude * phase * c_n)

    def traces_j(phi):
        # solver convention j_z = -H_t
        return -_angular_sum(ht_c, phi, angle)

    def traces_m(phi):
        # solver convention m_t = -E_z
        return -_angular_sum(ez_c, phi, angle)

    def e_z(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        rho = np.hypot(x, y)
        phi = np.arctan2(y, x)
        out = np.empty(rho.shape, dtype=complex)
        inside = rho <= radius
        if np.any(inside):
            rr, pp = rho[inside], phi[inside]
            vals = np.zeros(rr.shape, dtype=complex)
            for m in n:
                rad = specfun.bessel_j_array(int(m), k1 * rr)
                mult = 1.0 if m == 0 else 2.0
                vals += mult * amplitude * phase[m] * c_n[m] * rad * np.cos(m * (pp - angle))
            out[inside] = vals
        if np.any(~inside):
            rr, pp = rho[~inside], phi[~inside]
            vals = np.zeros(rr.shape, dtype=complex)
            for m in n:
                rad = (b_n[m] * specfun.hankel2_array(int(m), k0 * rr)
                       + specfun.bessel_j_array(int(m), k0 * rr))
                mult = 1.0 if m == 0 else 2.0
                vals += mult * amplitude * phase[m] * rad * np.cos(m * (pp - angle))
            out[~inside] = vals
        return out

    def e_z_scattered(x, y):
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        rho = np.hypot(x, y)
        phi = np.arctan2(y, x)
        vals = np.zeros(rho.shape, dtype=complex)
        for m in n:
            rad = specfun.hankel2_array(int(m), k0 * rho)
            mult = 1.0 if m == 0 else 2.0
            vals += mult * amplitude * phase[m] * b_n[m] * rad * np.cos(m * (phi - angle))
        return vals

    return {
        "traces_j": traces_j,
        "traces_m": traces_m,
        "e_z": e_z,
        "e_z_scattered": e_z_scattered,
        "series": series,
    }


def far_field_amplitude(series: CylinderSeries, theta, angle: float = 0.0) -> np.ndarray:
    """Angular factor F(theta) of the scattered far field.

    E_z^scat ~ sqrt(2/(pi k0 rho)) e^{-j(k0 rho - pi/4)} F(theta) with
    F(theta) = sum_n j^n coeff_n e^{jn(theta-angle)} folded over +-n.
    """
    nn = np.arange(len(series.scattered))
    coef = (1j) ** nn * series.scattered
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    weights = np.where(nn == 0, 1.0, 2.0)
    return np.cos(np.outer(theta - angle, nn)) @ (weights * coef)


def absorbed_power_balance(radius: float, medium0: Medium, medium1: Medium,
                           n_terms: int | None = None, angle: float = 0.0,
                           amplitude: float = 1.0, n_rho: int = 400):
    """Absorbed power two ways: volume loss integral vs inward Poynting flux.

    Returns (p_volume, p_flux) in W/m.  Equality is a strong internal
    consistency check of the series and of the trace conventions.
    """
    k1 = medium1.k
    w = 2.0 * np.pi * medium0.frequency
    from scipy.constants import epsilon_0
    n, b_n, c_n = _dielectric_coeffs(radius, medium0.k, k1, n_terms)
    phase = (-1j) ** n
    coef = amplitude * phase * c_n

    # volume integral: p = -(w eps0 Im(eps_r)/2) int |E|^2, by modal orthogonality
    x, wq = np.polynomial.legendre.leggauss(n_rho)
    rho = 0.5 * radius * (x + 1.0)
    wrho = 0.5 * radius * wq
    p_vol = 0.0
    for m in n:
        jn = specfun.bessel_j_array(int(m), k1 * rho)
        mult = 1.0 if m == 0 else 2.0
        p_vol += mult * np.abs(coef[m]) ** 2 * np.sum(np.abs(jn) ** 2 * rho * wrho)
    p_vol *= -(w * epsilon_0 * medium1.eps_r.imag / 2.0) * 2.0 * np.pi

    # flux: P = (1/2) Re oint E_z H_t^* ds with H_t = dE/dn / (j w mu)
    j1n = specfun.bessel_j_many(n, k1 * radius)
    j1p = np.array([specfun.bessel_j_prime(int(m), k1 * radius) for m in n])
    ez_m = coef * j1n
    ht_m = coef * k1 * j1p / (1j * w * MU0)
    mult = np.where(n == 0, 1.0, 2.0)
    p_flux = 0.5 * np.real(np.sum(mult * ez_m * np.conj(ht_m))) * 2.0 * np.pi * radius
    return p_vol, p_flux
