"""Discrete boundary-integral formulations: CFIE, its Calderón-stabilized
variant, the PMCHWT transmission blocks, and plane-wave excitation vectors.

TM unknowns and their trace identifications (tangent ẑ x n̂, e^{+jwt}):

    PEC:        j_z =  H_t        solves  [S + G/2 + D*] j = e_z/(j k0 eta0) + h_t
    dielectric: j_z = -H_t, m_t = -E_z solve the transmission block

    P11 = -j k0 eta0 S_k0 - j k1 eta1 S_k1      P12 =  D_k0 + D_k1
    P21 = -(D*_k0 + D*_k1)                      P22 = -N_k0/(j k0 eta0) - N_k1/(j k1 eta1)

The Calderón-stabilized PEC operator is

    C_p = N_kt G^-1 S_k0 + (G/2 - D*_kt) G^-1 (G/2 + D*_k0)

with the damped wavenumber kt = k0 - 0.4j k0^(1/3) a^(-2/3) and `a` the
equi-perimeter-circle radius.  The TE dual swaps S <-> N and D* <-> D.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .errors import ConfigError
from .geometry import BoundaryMesh, average_curvature_radius
from .media import Medium
from .operators import OperatorKind as OK, assemble_gram, assemble_many
from .quadrature import GAUSS_ORDER, gauss_rule

DAMPING_COEFF = 0.4


@dataclass(frozen=True)
class PlaneWave:
    """TM/TE plane wave: E (or H) along z, propagation direction at `angle`."""

    amplitude: float
    angle: float
    frequency: float
    polarization: str = "tm"

    def __post_init__(self):
        if self.polarization not in ("tm", "te"):
            raise ConfigError(f"unknown polarization {self.polarization!r}")

    @property
    def direction(self) -> np.ndarray:
        return np.array([np.cos(self.angle), np.sin(self.angle)])


def complexified_wavenumber(k0: float, radius_avg: float) -> complex:
    """Damped regularizer wavenumber k0 - 0.4 j k0^(1/3) a^(-2/3)."""
    return k0 - 0.4j * k0 ** (1.0 / 3.0) * radius_avg ** (-2.0 / 3.0)


def gram_solver(mesh: BoundaryMesh):
    """LU-backed solver closure for the sparse cyclic-tridiagonal Gram matrix."""
    n = mesh.n_nodes
    h = mesh.seg_lengths
    idx = np.arange(n)
    nxt = (idx + 1) % n
    rows = np.concatenate([idx, nxt, idx, nxt])
    cols = np.concatenate([idx, nxt, nxt, idx])
    vals = np.concatenate([h / 3.0, h / 3.0, h / 6.0, h / 6.0]).astype(complex)
    G = sps.csc_matrix((vals, (rows, cols)), shape=(n, n))
    lu = spla.splu(G)
    return lu.solve


@dataclass
class CalderonCfie:
    """Assembled PEC system: plain CFIE C (optional), stabilized C_p, and
    the pieces needed to precondition right-hand sides consistently."""

    mesh: BoundaryMesh
    k0: float
    k_tilde: complex
    polarization: str
    cfie: np.ndarray | None
    preconditioned: np.ndarray
    regularizer: np.ndarray          # N_kt (TM) or S_kt (TE)
    half_minus_dual: np.ndarray      # G/2 - D*_kt (TM) or G/2 - D_kt (TE)
    gram: np.ndarray
    gram_solve: object = field(repr=False, default=None)

    def precondition_rhs(self, rhs_first: np.ndarray, rhs_second: np.ndarray) -> np.ndarray:
        """Map (first-kind rhs, second-kind rhs) to the C_p right-hand side."""
        return (self.regularizer @ self.gram_solve(rhs_first)
                + self.half_minus_dual @ self.gram_solve(rhs_second))


def assemble_cfie(mesh: BoundaryMesh, k0: float, polarization: str = "tm",
                  order: int = GAUSS_ORDER) -> np.ndarray:
    """Plain combined-field matrix: S + G/2 + D* (TM) or N + G/2 + D (TE)."""
    first = OK.SINGLE_LAYER if polarization == "tm" else OK.HYPERSINGULAR
    dual = OK.ADJOINT_DOUBLE_LAYER if polarization == "tm" else OK.DOUBLE_LAYER
    ops = assemble_many(mesh, [(first, k0), (dual, k0)], order=order)
    G = assemble_gram(mesh)
    return ops[(first, complex(k0))].entries + 0.5 * G + ops[(dual, complex(k0))].entries


def assemble_cfie_preconditioned(mesh: BoundaryMesh, k0: float, polarization: str = "tm",
                                 order: int = GAUSS_ORDER,
                                 k_tilde: complex | None = None,
                                 keep_cfie: bool = True) -> CalderonCfie:
    """Calderón-stabilized PEC system for one mesh and wavenumber.

    keep_cfie=False skips the plain combined-field matrix and recycles
    buffers, dropping peak memory from ~7 to ~5 dense matrices.
    """
    if polarization not in ("tm", "te"):
        raise ConfigError(f"unknown polarization {polarization!r}")
    a = average_curvature_radius(mesh)
    if k_tilde is None:
        k_tilde = complexified_wavenumber(k0, a)
    first = OK.SINGLE_LAYER if polarization == "tm" else OK.HYPERSINGULAR
    reg_kind = OK.HYPERSINGULAR if polarization == "tm" else OK.SINGLE_LAYER
    dual = OK.ADJOINT_DOUBLE_LAYER if polarization == "tm" else OK.DOUBLE_LAYER

    ops = assemble_many(mesh, [(first, k0), (dual, k0), (reg_kind, k_tilde), (dual, k_tilde)],
                        order=order)
    entries = {key: op.entries for key, op in ops.items()}
    return combine_calderon(mesh, k0, k_tilde, polarization, entries,
                            keep_cfie=keep_cfie)


def combine_calderon(mesh: BoundaryMesh, k0: float, k_tilde: complex,
                     polarization: str, entries: dict,
                     keep_cfie: bool = True) -> CalderonCfie:
    """Form C_p from pre-assembled operator entries {(kind, k): ndarray}.

    The two dual-operator buffers are recycled in place; callers sharing an
    assembly across polarizations must not reuse them afterwards.
    """
    first = OK.SINGLE_LAYER if polarization == "tm" else OK.HYPERSINGULAR
    reg_kind = OK.HYPERSINGULAR if polarization == "tm" else OK.SINGLE_LAYER
    dual = OK.ADJOINT_DOUBLE_LAYER if polarization == "tm" else OK.DOUBLE_LAYER
    G = assemble_gram(mesh)
    gsolve = gram_solver(mesh)

    first_m = entries[(first, complex(k0))]
    dual_m = entries.pop((dual, complex(k0)))
    reg_m = entries[(reg_kind, complex(k_tilde))]
    key_t = (dual, complex(k_tilde))
    # degenerate k_tilde == k0 (undamped regularizer) shares one assembly
    dual_t = entries.pop(key_t) if key_t in entries else dual_m.copy()

    cfie = first_m + 0.5 * G + dual_m if keep_cfie else None
    b = gsolve(first_m)
    cp = reg_m @ b
    del b
    dual_t *= -1.0
    dual_t += 0.5 * G
    half_minus = dual_t
    dual_m += 0.5 * G
    b = gsolve(dual_m)
    cp += half_minus @ b
    del b, dual_m
    return CalderonCfie(mesh=mesh, k0=k0, k_tilde=k_tilde, polarization=polarization,
                        cfie=cfie, preconditioned=cp, regularizer=reg_m,
                        half_minus_dual=half_minus, gram=G, gram_solve=gsolve)


@dataclass
class PmchwtSystem:
    """2x2 transmission block on the dielectric boundary."""

    mesh: BoundaryMesh
    medium0: Medium
    medium1: Medium
    p11: np.ndarray
    p12: np.ndarray
    p21: np.ndarray
    p22: np.ndarray

    def full_matrix(self) -> np.ndarray:
        return np.block([[self.p11, self.p12], [self.p21, self.p22]])


def assemble_pmchwt(mesh: BoundaryMesh, medium0: Medium, medium1: Medium,
                    order: int = GAUSS_ORDER) -> PmchwtSystem:
    """PMCHWT blocks for a penetrable cylinder in a background medium."""
    k0, k1 = medium0.k, medium1.k
    e0, e1 = medium0.eta, medium1.eta
    req = []
    for k in (k0, k1):
        req += [(OK.SINGLE_LAYER, k), (OK.DOUBLE_LAYER, k),
                (OK.ADJOINT_DOUBLE_LAYER, k), (OK.HYPERSINGULAR, k)]
    ops = assemble_many(mesh, req, order=order)

    def m(kind, k):
        return ops[(kind, complex(k))].entries

    p11 = -1j * k0 * e0 * m(OK.SINGLE_LAYER, k0) - 1j * k1 * e1 * m(OK.SINGLE_LAYER, k1)
    p12 = m(OK.DOUBLE_LAYER, k0) + m(OK.DOUBLE_LAYER, k1)
    p21 = -(m(OK.ADJOINT_DOUBLE_LAYER, k0) + m(OK.ADJOINT_DOUBLE_LAYER, k1))
    p22 = (-1.0 / (1j * k0 * e0)) * m(OK.HYPERSINGULAR, k0) \
        + (-1.0 / (1j * k1 * e1)) * m(OK.HYPERSINGULAR, k1)
    return PmchwtSystem(mesh=mesh, medium0=medium0, medium1=medium1,
                        p11=p11, p12=p12, p21=p21, p22=p22)


def incident_field_values(wave: PlaneWave, medium0: Medium, points: np.ndarray,
                          normals: np.ndarray):
    """(E_z^inc, H_t^inc) of the plane wave at boundary quadrature points.

    H_t = H . (ẑ x n̂) = (1/(j w mu)) dE_z/dn = -(d̂ . n̂ / eta0) E_z.
    """
    d = wave.direction
    k0 = medium0.k.real
    ez = wave.amplitude * np.exp(-1j * k0 * (points @ d))
    ht = -(normals @ d) / medium0.eta * ez
    return ez, ht


def assemble_rhs(mesh: BoundaryMesh, wave: PlaneWave, medium0: Medium,
                 target: str = "pec", order: int = GAUSS_ORDER):
    """Galerkin excitation vectors.

    target 'pec': returns (rhs_e, rhs_h, combined) with
        rhs_e = (l_i, E_z^inc)/(j k0 eta0), rhs_h = (l_i, H_t^inc),
        combined = rhs_e + rhs_h.
    target 'dielectric': returns (e_z, h_t) without the 1/(j k0 eta0) scale.
    """
    if wave.polarization != "tm":
        raise ConfigError("only the TM excitation is wired to a solve path")
    if target not in ("pec", "dielectric"):
        raise ConfigError(f"unknown rhs target {target!r}")
    t, w = gauss_rule(order)
    pts = mesh.quad_points(t)                # (n, q, 2)
    n = mesh.n_nodes
    nrm = np.repeat(mesh.outward_normals[:, None, :], len(t), axis=1)
    ez, ht = incident_field_values(wave, medium0, pts.reshape(-1, 2), nrm.reshape(-1, 2))
    ez = ez.reshape(n, len(t))
    ht = ht.reshape(n, len(t))

    phi_start = (w * (1.0 - t))[None, :]
    phi_end = (w * t)[None, :]
    h = mesh.seg_lengths[:, None]

    def project(vals):
        out = np.zeros(n, dtype=complex)
        out += (vals * phi_start * h).sum(axis=1)
        out += np.roll((vals * phi_end * h).sum(axis=1), 1)
        return out

    e_vec = project(ez)
    h_vec = project(ht)
    if target == "dielectric":
        return e_vec, h_vec
    k0 = medium0.k.real
    rhs_e = e_vec / (1j * k0 * medium0.eta)
    return rhs_e, h_vec, rhs_e + h_vec


@dataclass
class BlockSystem:
    """Block-diagonal composite system: PEC block and/or dielectric block.

    Coupling between the two boundaries is structurally absent: no storage
    for cross blocks exists.
    """

    wave: PlaneWave
    medium0: Medium
    pec: CalderonCfie | None = None
    pec_rhs_e: np.ndarray | None = None
    pec_rhs_h: np.ndarray | None = None
    dielectric: PmchwtSystem | None = None
    diel_rhs: np.ndarray | None = None


def build_block_system(wave: PlaneWave, medium0: Medium,
                       mesh_m: BoundaryMesh | None = None,
                       mesh_s: BoundaryMesh | None = None,
                       medium1: Medium | None = None,
                       order: int = GAUSS_ORDER,
                       keep_cfie: bool = True) -> BlockSystem:
    """Assemble the composite system for a scenario (either block optional)."""
    sys = BlockSystem(wave=wave, medium0=medium0)
    if mesh_m is not None:
        k0 = medium0.k.real
        sys.pec = assemble_cfie_preconditioned(mesh_m, k0, wave.polarization, order=order,
                                               keep_cfie=keep_cfie)
        rhs_e, rhs_h, _ = assemble_rhs(mesh_m, wave, medium0, "pec", order=order)
        sys.pec_rhs_e = rhs_e
        sys.pec_rhs_h = rhs_h
    if mesh_s is not None:
        if medium1 is None:
            raise ConfigError("dielectric boundary requires an interior medium")
        sys.dielectric = assemble_pmchwt(mesh_s, medium0, medium1, order=order)
        e_vec, h_vec = assemble_rhs(mesh_s, wave, medium0, "dielectric", order=order)
        sys.diel_rhs = np.concatenate([e_vec, h_vec])
    return sys
