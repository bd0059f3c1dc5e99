"""Galerkin assembly of the 2D Helmholtz layer operators on closed polylines.

Assembled matrices (hat basis lambda_i, real L2 pairing):

    S   single layer          kernel G_k(r) = -(j/4) H0^(2)(k r)
    D   double layer          kernel  d G_k / d n(y)   (p.v.)
    D*  adjoint double layer  kernel  d G_k / d n(x)   (p.v.)
    N   hypersingular, assembled in integration-by-parts form
        (l_i, N_k l_j) = II G_k l_i' l_j' - k^2 II G_k (n.n') l_i l_j
    G   Gram (mass) matrix, assembled exactly

Smooth segment pairs use tensor Gauss-Legendre; self and adjacent pairs
split the kernel as K = Kreg + Klog * ln(r) (Kreg, Klog entire in r^2)
and integrate the logarithmic part with a generalized Gauss rule for the
weight -ln(x), via a Duffy corner split on adjacent pairs.  On flat
segments the p.v. kernels of D and D* vanish identically, so their self
terms are zero.
"""

import enum
import struct
from dataclasses import dataclass

import numpy as np

from . import _kernels, quadrature
from .errors import AssemblyError
from .geometry import BoundaryMesh

SELFCHECK_TOL = 1e-8
_EULER = _kernels.EULER_GAMMA
_LN2 = float(np.log(2.0))
# the singular-pair series pieces are accurate for |k| r up to ~12
_SERIES_SAFE = 11.0


class OperatorKind(enum.IntEnum):
    SINGLE_LAYER = 0
    DOUBLE_LAYER = 1
    ADJOINT_DOUBLE_LAYER = 2
    HYPERSINGULAR = 3
    GRAM = 4


@dataclass(frozen=True)
class OperatorMatrix:
    kind: OperatorKind
    wavenumber: complex
    entries: np.ndarray
    mesh: BoundaryMesh

    @property
    def shape(self):
        return self.entries.shape


def matvec(op: OperatorMatrix, x: np.ndarray) -> np.ndarray:
    """Dense y = A x."""
    x = np.asarray(x)
    if x.shape[0] != op.entries.shape[1]:
        raise ValueError(f"dimension mismatch: {op.entries.shape} @ {x.shape}")
    return op.entries @ x


# ---------------------------------------------------------------------------
# small-argument series pieces (entire in z^2, valid for |z| <= ~12)
# ---------------------------------------------------------------------------

def _horner(coeffs, w):
    acc = np.full_like(w, coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * w + c
    return acc


def _j0(z):
    return _horner(_kernels._C_J0, 0.25 * z * z)


def _j1(z):
    return 0.5 * z * _horner(_kernels._C_J1, 0.25 * z * z)


def _y0reg(z):
    """Y0(z) - (2/pi) ln(z) J0(z), entire."""
    w = 0.25 * z * z
    return (2.0 / np.pi) * ((_EULER - _LN2) * _horner(_kernels._C_J0, w)
                            + _horner(_kernels._C_S0, w))


def _y1reg(z):
    """Y1(z) - (2/pi) ln(z) J1(z) + 2/(pi z), entire."""
    w = 0.25 * z * z
    return ((2.0 / np.pi) * (_EULER - _LN2) * _j1(z)
            - (z / (2.0 * np.pi)) * _horner(_kernels._C_S1, w))


def _green_split(k, r):
    """(Kreg, Klog) with G_k(r) = Kreg(r) + Klog(r) ln(r) for small |k r|."""
    z = k * r
    j0 = _j0(z)
    lnk = np.log(complex(k))
    kreg = -0.25j * j0 - 0.25 * _y0reg(z) - (lnk / (2.0 * np.pi)) * j0
    klog = -(1.0 / (2.0 * np.pi)) * j0
    return kreg, klog


def _dlayer_split(k, r, w_geo):
    """(Kreg, Klog) of the normal-derivative kernel with geometry factor w_geo.

    Full kernel: (jk/4) H1^(2)(k r) * (w_geo / r); w_geo is (y-x).n(y) for D
    and (x-y).n(x) for D*.  w_geo vanishes linearly at the corner, keeping
    both parts bounded along Duffy rays.
    """
    z = k * r
    j1 = _j1(z)
    lnk = np.log(complex(k))
    wr = w_geo / r
    kreg = (-(1.0 / (2.0 * np.pi)) * w_geo / (r * r)
            + (k / (2.0 * np.pi)) * lnk * j1 * wr
            + 0.25j * k * j1 * wr
            + 0.25 * k * _y1reg(z) * wr)
    klog = (k / (2.0 * np.pi)) * j1 * wr
    return kreg, klog


# ---------------------------------------------------------------------------
# smooth sweep over well-separated segment pairs
# ---------------------------------------------------------------------------

def _hat_weights(order):
    t, w = quadrature.gauss_rule(order)
    wphi = np.stack([w * (1.0 - t), w * t], axis=1)  # start-node / end-node hat
    return t, w, wphi.astype(np.complex128)


def _reduce_source(K, n, q, wphi, h):
    """Contract the source quad axis: (rows, n*q) -> (rows, n) nodal columns."""
    rows = K.shape[0]
    A = (K.reshape(rows * n, q) @ wphi).reshape(rows, n, 2)
    out = A[:, :, 0] * h[None, :]
    out += np.roll(A[:, :, 1] * h[None, :], 1, axis=1)
    return out


def _reduce_source_const(K, n, q, w):
    """Contract the source quad axis against arclength-derivative densities."""
    rows = K.shape[0]
    C = (K.reshape(rows * n, q) @ w.astype(np.complex128)).reshape(rows, n)
    # hat'(node m) is -1/h on segment m and +1/h on segment m-1; h cancels
    return np.roll(C, 1, axis=1) - C


def _scatter_obs(M, KW, p0, p1, q, wphi, h):
    """Contract the obs quad axis for block segments [p0, p1) and add into M."""
    B = p1 - p0
    n = M.shape[0]
    R = (KW.reshape(B, q, n).transpose(0, 2, 1).reshape(B * n, q) @ wphi).reshape(B, n, 2)
    hb = h[p0:p1]
    rows_start = np.arange(p0, p1) % n
    rows_end = (rows_start + 1) % n
    M[rows_start] += R[:, :, 0] * hb[:, None]
    M[rows_end] += R[:, :, 1] * hb[:, None]


def _scatter_obs_const(M, KW, p0, p1, q, w):
    B = p1 - p0
    n = M.shape[0]
    R = (KW.reshape(B, q, n).transpose(0, 2, 1).reshape(B * n, q)
         @ w.astype(np.complex128)).reshape(B, n)
    rows_start = np.arange(p0, p1) % n
    rows_end = (rows_start + 1) % n
    M[rows_start] += -R
    M[rows_end] += R


def _smooth_sweep(mesh: BoundaryMesh, k: complex, kinds, order: int, mats: dict):
    n = mesh.n_nodes
    q = order
    t, w, wphi = _hat_weights(q)
    pts = mesh.quad_points(t).reshape(n * q, 2)
    h = mesh.seg_lengths
    nrm = mesh.outward_normals

    B = max(1, min(n, int(1.25e5 // max(n, 1)) or 1))
    seg_idx = np.arange(n)
    want_s = OperatorKind.SINGLE_LAYER in kinds
    want_n = OperatorKind.HYPERSINGULAR in kinds
    want_d = OperatorKind.DOUBLE_LAYER in kinds
    want_ds = OperatorKind.ADJOINT_DOUBLE_LAYER in kinds

    src_nx = np.repeat(nrm[:, 0], q)[None, :]
    src_ny = np.repeat(nrm[:, 1], q)[None, :]

    for p0 in range(0, n, B):
        p1 = min(n, p0 + B)
        rb = slice(p0 * q, p1 * q)
        xo = pts[rb]
        dx = xo[:, 0:1] - pts[None, :, 0]
        dy = xo[:, 1:2] - pts[None, :, 1]
        r = np.hypot(dx, dy)
        np.maximum(r, 1e-300, out=r)

        obs = seg_idx[p0:p1][:, None]
        src = seg_idx[None, :]
        near = (src == obs) | (src == (obs + 1) % n) | (src == (obs - 1) % n)
        mask = np.repeat(np.repeat(near, q, axis=0), q, axis=1)

        h0, h1 = _kernels.hankel2_01(k * r)
        h0[mask] = 0.0
        h1[mask] = 0.0

        if want_s or want_n:
            KS = -0.25j * h0
        if want_s:
            KW = _reduce_source(KS, n, q, wphi, h)
            _scatter_obs(mats[OperatorKind.SINGLE_LAYER], KW, p0, p1, q, wphi, h)
        if want_n:
            M = mats[OperatorKind.HYPERSINGULAR]
            KW = _reduce_source_const(KS, n, q, w)
            _scatter_obs_const(M, KW, p0, p1, q, w)
            ndot = nrm[p0:p1] @ nrm.T
            K2 = KS * np.repeat(np.repeat(ndot, q, axis=0), q, axis=1)
            K2 *= -(k * k)
            KW = _reduce_source(K2, n, q, wphi, h)
            _scatter_obs(M, KW, p0, p1, q, wphi, h)
        if want_d:
            wgeo = -(dx * src_nx + dy * src_ny)
            KD = (0.25j * k) * h1 * (wgeo / r)
            KW = _reduce_source(KD, n, q, wphi, h)
            _scatter_obs(mats[OperatorKind.DOUBLE_LAYER], KW, p0, p1, q, wphi, h)
        if want_ds:
            nx = np.repeat(nrm[p0:p1, 0], q)[:, None]
            ny = np.repeat(nrm[p0:p1, 1], q)[:, None]
            wgeo = dx * nx + dy * ny
            KD = (0.25j * k) * h1 * (wgeo / r)
            KW = _reduce_source(KD, n, q, wphi, h)
            _scatter_obs(mats[OperatorKind.ADJOINT_DOUBLE_LAYER], KW, p0, p1, q, wphi, h)


# ---------------------------------------------------------------------------
# singular corrections: self pairs
# ---------------------------------------------------------------------------

def _self_core(mesh: BoundaryMesh, k: complex, kinds, order: int, segs: np.ndarray):
    """Hat-pair integrals over coincident segments `segs`.

    Returns (selfS, selfN1, selfN2): (m,2,2) single-layer blocks, (m,) unit
    double integrals of G, and (m,2,2) hat blocks of -k^2 G; entries are
    None for kinds not requested.

    The log part integrates along diagonals u = |s - t|, where the kernel
    factor is constant and the hat-product cross-correlation is a cubic
    polynomial, so the -ln(u) rule is exact up to the kernel series.
    """
    want_s = OperatorKind.SINGLE_LAYER in kinds
    want_n = OperatorKind.HYPERSINGULAR in kinds
    if not (want_s or want_n):
        return None, None, None
    h = mesh.seg_lengths[segs]
    t, w = quadrature.gauss_rule(order)
    tl, wl = quadrature.log_rule(order)
    phi = np.stack([1.0 - t, t], axis=1)
    ww = w[:, None] * w[None, :]

    # smooth part: tensor GL of (Kreg + Klog ln h), entire in (s - t)^2
    r = h[:, None, None] * np.abs(t[:, None] - t[None, :])[None, :, :]
    kreg, klog = _green_split(k, r)
    smooth = kreg + klog * np.log(h)[:, None, None]

    def hat_reduce(F):
        return np.einsum("pab,ae,bf,ab->pef", F, phi, phi, ww, optimize=True)

    selfS = hat_reduce(smooth) * (h**2)[:, None, None] if want_s else None
    selfN1 = np.einsum("pab,ab->p", smooth, ww, optimize=True) if want_n else None
    selfN2 = hat_reduce(smooth) * (-(k * k) * h**2)[:, None, None] if want_n else None

    # log part: II phi phi Klog(h|s-t|) ln|s-t| = int_0^1 ln(u) Klog(h u) P(u) du
    # with P(u) the two-sided hat cross-correlation, evaluated per log node
    # by exact GL over the diagonal strip s in [u, 1].
    su = tl[:, None] + (1.0 - tl[:, None]) * t[None, :]   # s nodes per u node
    length = 1.0 - tl
    pcorr = np.zeros((2, 2, len(tl)))
    punit = np.zeros(len(tl))
    for i, u in enumerate(tl):
        s = su[i]
        phis = np.stack([1.0 - s, s], axis=0)             # hats at s
        phitm = np.stack([1.0 - (s - u), s - u], axis=0)  # hats at s - u
        both = np.einsum("ea,fa,a->ef", phis, phitm, w) \
            + np.einsum("ea,fa,a->ef", phitm, phis, w)
        pcorr[:, :, i] = both * length[i]
        punit[i] = 2.0 * length[i]
    klog_u = -(1.0 / (2.0 * np.pi)) * _j0(k * h[:, None] * tl[None, :])  # (m, q)
    log_blocks = -np.einsum("pi,efi,i->pef", klog_u, pcorr, wl, optimize=True)
    if want_s:
        selfS += log_blocks * (h**2)[:, None, None]
    if want_n:
        selfN1 += -np.einsum("pi,i,i->p", klog_u, punit, wl, optimize=True)
        selfN2 += log_blocks * (-(k * k) * h**2)[:, None, None]
    return selfS, selfN1, selfN2


def _self_pairs(mesh: BoundaryMesh, k: complex, kinds, order: int, mats: dict):
    n = mesh.n_nodes
    selfS, selfN1, selfN2 = _self_core(mesh, k, kinds, order, np.arange(n))
    if selfS is None and selfN1 is None:
        return
    idx = np.arange(n)
    nxt = (idx + 1) % n

    def scatter(M, vals):
        np.add.at(M, (idx, idx), vals[:, 0, 0])
        np.add.at(M, (idx, nxt), vals[:, 0, 1])
        np.add.at(M, (nxt, idx), vals[:, 1, 0])
        np.add.at(M, (nxt, nxt), vals[:, 1, 1])

    if selfS is not None:
        scatter(mats[OperatorKind.SINGLE_LAYER], selfS)
    if selfN1 is not None:
        M = mats[OperatorKind.HYPERSINGULAR]
        # slope products: (-1/h)(-1/h) h^2 = +1 on (p,p) and (p+1,p+1), -1 across
        np.add.at(M, (idx, idx), selfN1)
        np.add.at(M, (idx, nxt), -selfN1)
        np.add.at(M, (nxt, idx), -selfN1)
        np.add.at(M, (nxt, nxt), selfN1)
        scatter(M, selfN2)


# ---------------------------------------------------------------------------
# singular corrections: adjacent pairs (Duffy corner split)
# ---------------------------------------------------------------------------

def _adjacent_core(mesh: BoundaryMesh, k: complex, kinds, order: int,
                   p: np.ndarray, obs_first: bool):
    """Duffy integrals for the ordered adjacent pairs indexed by p.

    obs_first: obs segment p, src segment p+1 (corner node p+1); otherwise
    roles are swapped.  Returns (contrib, contribN1): contrib maps kind to
    (m,2,2) blocks ordered by [hat(obs seg), hat(obs seg + 1)] by
    [hat(src seg), hat(src seg + 1)], already scaled by the h_obs h_src
    jacobian; contribN1 is the plain unit-density double integral of G
    times h_obs h_src (slope signs applied by the caller).
    """
    wanted = [kk for kk in kinds if kk != OperatorKind.GRAM]
    if not wanted:
        return {}, None
    n = mesh.n_nodes
    h = mesh.seg_lengths
    t, w = quadrature.gauss_rule(order)
    tl, wl = quadrature.log_rule(order)

    if obs_first:
        po, ps = p, (p + 1) % n
        eo = -(mesh.tangents[po] * h[po][:, None])  # x(a) = corner + a eo
        es = mesh.tangents[ps] * h[ps][:, None]     # y(b) = corner + b es
    else:
        po, ps = (p + 1) % n, p
        eo = mesh.tangents[po] * h[po][:, None]
        es = -(mesh.tangents[ps] * h[ps][:, None])
    no = mesh.outward_normals[po]
    ns = mesh.outward_normals[ps]
    ndot = np.einsum("pi,pi->p", no, ns)

    m = len(p)
    contrib = {kk: np.zeros((m, 2, 2), dtype=np.complex128) for kk in wanted}
    contribN1 = (np.zeros(m, dtype=np.complex128)
                 if OperatorKind.HYPERSINGULAR in wanted else None)

    for tri in (0, 1):
        for radial_nodes, radial_w, is_log in ((t, w, False), (tl, wl, True)):
            A = radial_nodes[:, None] * np.ones_like(t)[None, :]
            U = np.ones_like(radial_nodes)[:, None] * t[None, :]
            if tri == 0:
                aa, bb = A, A * U
            else:
                aa, bb = A * U, A
            dxv = aa[None] * eo[:, 0, None, None] - bb[None] * es[:, 0, None, None]
            dyv = aa[None] * eo[:, 1, None, None] - bb[None] * es[:, 1, None, None]
            rr = np.hypot(dxv, dyv)
            rho = rr / A[None]
            wq = (A * radial_w[:, None] * w[None, :])[None]  # Duffy jac * weights
            if is_log:
                wq = -wq  # log rule integrates against -ln(radial)

            for kind in wanted:
                if kind in (OperatorKind.SINGLE_LAYER, OperatorKind.HYPERSINGULAR):
                    kreg, klog = _green_split(k, rr)
                elif kind == OperatorKind.DOUBLE_LAYER:
                    wg = -(dxv * ns[:, 0, None, None] + dyv * ns[:, 1, None, None])
                    kreg, klog = _dlayer_split(k, rr, wg)
                else:
                    wg = dxv * no[:, 0, None, None] + dyv * no[:, 1, None, None]
                    kreg, klog = _dlayer_split(k, rr, wg)
                F = (klog if is_log else kreg + klog * np.log(rho)) * wq
                if obs_first:
                    phio = np.stack([aa, 1.0 - aa], axis=0)   # obs seg po: t = 1 - a
                    phis = np.stack([1.0 - bb, bb], axis=0)   # src seg ps: t = b
                else:
                    phio = np.stack([1.0 - aa, aa], axis=0)   # obs seg po: t = a
                    phis = np.stack([bb, 1.0 - bb], axis=0)   # src seg ps: t = 1 - b
                if kind == OperatorKind.HYPERSINGULAR:
                    contribN1 += F.sum(axis=(1, 2))
                    F = F * (-(k * k) * ndot[:, None, None])
                contrib[kind] += np.einsum("pab,eab,fab->pef", F, phio, phis,
                                           optimize=True)

    hh = (h[po] * h[ps])[:, None, None]
    for kind in contrib:
        contrib[kind] = contrib[kind] * hh
    if contribN1 is not None:
        contribN1 = contribN1 * h[po] * h[ps]
    return contrib, contribN1


def _adjacent_pairs(mesh: BoundaryMesh, k: complex, kinds, order: int, mats: dict):
    n = mesh.n_nodes
    h = mesh.seg_lengths
    p = np.arange(n)
    for obs_first in (True, False):
        po = p if obs_first else (p + 1) % n
        ps = (p + 1) % n if obs_first else p
        contrib, contribN1 = _adjacent_core(mesh, k, kinds, order, p, obs_first)
        row_nodes = [po, (po + 1) % n]
        col_nodes = [ps, (ps + 1) % n]
        for kind, vals in contrib.items():
            M = mats[kind]
            for e in range(2):
                for f in range(2):
                    np.add.at(M, (row_nodes[e], col_nodes[f]), vals[:, e, f])
        if contribN1 is not None:
            M = mats[OperatorKind.HYPERSINGULAR]
            srow = np.stack([-1.0 / h[po], 1.0 / h[po]])
            scol = np.stack([-1.0 / h[ps], 1.0 / h[ps]])
            for e in range(2):
                for f in range(2):
                    np.add.at(M, (row_nodes[e], col_nodes[f]), contribN1 * srow[e] * scol[f])


# ---------------------------------------------------------------------------
# public assembly
# ---------------------------------------------------------------------------

def assemble_gram(mesh: BoundaryMesh) -> np.ndarray:
    """Exact cyclic-tridiagonal mass matrix of hat functions on the polyline."""
    n = mesh.n_nodes
    h = mesh.seg_lengths
    G = np.zeros((n, n))
    idx = np.arange(n)
    nxt = (idx + 1) % n
    np.add.at(G, (idx, idx), h / 3.0)
    np.add.at(G, (nxt, nxt), h / 3.0)
    np.add.at(G, (idx, nxt), h / 6.0)
    np.add.at(G, (nxt, idx), h / 6.0)
    return G


def assemble_many(mesh: BoundaryMesh, requests, order: int = quadrature.GAUSS_ORDER,
                  selfcheck: bool = False) -> dict:
    """Assemble several operators in one pass, sharing kernel sweeps per k.

    `requests` is an iterable of (OperatorKind, wavenumber); the wavenumber
    is ignored (pass 0) for the Gram matrix.  Returns a dict keyed by
    (kind, wavenumber).
    """
    requests = list(requests)
    out = {}
    by_k = {}
    for kind, k in requests:
        kind = OperatorKind(kind)
        if kind == OperatorKind.GRAM:
            out[(kind, 0j)] = OperatorMatrix(kind, 0j, assemble_gram(mesh), mesh)
            continue
        if k == 0:
            raise ValueError("layer operators need a nonzero wavenumber")
        by_k.setdefault(complex(k), set()).add(kind)

    for k, kinds in by_k.items():
        if 2.0 * np.max(np.abs(k) * mesh.seg_lengths) > _SERIES_SAFE:
            raise AssemblyError("mesh too coarse: |k| h exceeds the singular-series range")
        mats = {kind: np.zeros((mesh.n_nodes, mesh.n_nodes), dtype=np.complex128)
                for kind in kinds}
        _smooth_sweep(mesh, k, kinds, order, mats)
        _self_pairs(mesh, k, kinds, order, mats)
        _adjacent_pairs(mesh, k, kinds, order, mats)
        for kind, M in mats.items():
            out[(kind, k)] = OperatorMatrix(kind, k, M, mesh)

    if selfcheck:
        keys = [key for key in out if key[0] != OperatorKind.GRAM]
        fine = assemble_many(mesh, keys, order=2 * order, selfcheck=False)
        for key in keys:
            ref = fine[key].entries
            err = np.linalg.norm(out[key].entries - ref) / np.linalg.norm(ref)
            if err > SELFCHECK_TOL:
                raise AssemblyError(
                    f"quadrature self-check failed for {key[0].name} at k={key[1]:.6g}: "
                    f"relative discrepancy {err:.3e}")
    return out


def assemble(kind, mesh: BoundaryMesh, k: complex = 0j,
             order: int = quadrature.GAUSS_ORDER, selfcheck: bool = False) -> OperatorMatrix:
    """Assemble a single operator matrix (see `assemble_many`)."""
    kind = OperatorKind(kind)
    key = (kind, 0j if kind == OperatorKind.GRAM else complex(k))
    return assemble_many(mesh, [(kind, key[1])], order=order, selfcheck=selfcheck)[key]


# ---------------------------------------------------------------------------
# first-column assembly on rotationally symmetric meshes
# ---------------------------------------------------------------------------

def assemble_first_columns(mesh: BoundaryMesh, requests,
                           order: int = quadrature.GAUSS_ORDER) -> dict:
    """First matrix columns O_{i,0} at O(n) cost on a uniform circle mesh.

    Translation invariance gives segment-pair blocks that depend only on
    the index difference, so one restricted sweep against source segment 0
    determines the whole (circulant) matrix.  Uses the same pair-integral
    cores as the dense assembler, so dense and column paths agree to
    rounding.  Returns {(kind, k): length-n column}.
    """
    n = mesh.n_nodes
    h = mesh.seg_lengths
    if np.ptp(h) > 1e-10 * h[0]:
        raise AssemblyError("first-column assembly requires a uniform mesh")
    out = {}
    by_k = {}
    for kind, k in requests:
        kind = OperatorKind(kind)
        if kind == OperatorKind.GRAM:
            c = np.zeros(n)
            c[0] = 2.0 * h[0] / 3.0
            c[1] = h[0] / 6.0
            c[-1] = h[0] / 6.0
            out[(kind, 0j)] = c
            continue
        by_k.setdefault(complex(k), set()).add(kind)

    q = order
    t, w, wphi = _hat_weights(q)
    wphi = wphi.real
    for k, kinds in by_k.items():
        if 2.0 * np.max(np.abs(k) * h) > _SERIES_SAFE:
            raise AssemblyError("mesh too coarse: |k| h exceeds the singular-series range")
        pts = mesh.quad_points(t)           # (n, q, 2)
        src = pts[0]                        # (q, 2) of segment 0
        dx = pts[..., 0].reshape(-1, 1) - src[None, :, 0]
        dy = pts[..., 1].reshape(-1, 1) - src[None, :, 1]
        r = np.hypot(dx, dy)
        np.maximum(r, 1e-300, out=r)
        h0, h1 = _kernels.hankel2_01(k * r)
        # zero the self/adjacent band, replaced by singular cores below
        band = np.zeros((n, 1), dtype=bool)
        band[[0, 1, n - 1]] = True
        bandq = np.repeat(band, q, axis=0)
        h0[bandq[:, 0], :] = 0.0
        h1[bandq[:, 0], :] = 0.0

        blocks = {}
        n1 = None
        nrm = mesh.outward_normals
        for kind in kinds:
            if kind in (OperatorKind.SINGLE_LAYER, OperatorKind.HYPERSINGULAR):
                KS = (-0.25j * h0).reshape(n, q, q)
                if kind == OperatorKind.SINGLE_LAYER:
                    blocks[kind] = np.einsum("dab,ae,bf->def", KS, wphi, wphi,
                                             optimize=True) * (h[:, None, None] * h[0])
                else:
                    n1 = np.einsum("dab,a,b->d", KS, w, w, optimize=True)
                    ndot = nrm @ nrm[0]
                    K2 = KS * (-(k * k) * ndot[:, None, None])
                    blocks[kind] = np.einsum("dab,ae,bf->def", K2, wphi, wphi,
                                             optimize=True) * (h[:, None, None] * h[0])
            else:
                if kind == OperatorKind.DOUBLE_LAYER:
                    wg = -(dx * nrm[0, 0] + dy * nrm[0, 1])
                else:
                    nx = np.repeat(nrm[:, 0], q)[:, None]
                    ny = np.repeat(nrm[:, 1], q)[:, None]
                    wg = dx * nx + dy * ny
                KD = ((0.25j * k) * h1 * (wg / r)).reshape(n, q, q)
                blocks[kind] = np.einsum("dab,ae,bf->def", KD, wphi, wphi,
                                         optimize=True) * (h[:, None, None] * h[0])

        selfS, selfN1, selfN2 = _self_core(mesh, k, kinds, order, np.array([0]))
        if selfS is not None:
            blocks[OperatorKind.SINGLE_LAYER][0] += selfS[0]
        if selfN1 is not None:
            blocks[OperatorKind.HYPERSINGULAR][0] += selfN2[0]
            n1[0] += selfN1[0]
        adj1, adjN1_1 = _adjacent_core(mesh, k, kinds, order, np.array([0]), False)
        adjm, adjN1_m = _adjacent_core(mesh, k, kinds, order, np.array([n - 1]), True)
        for kind in blocks:
            if kind in adj1:
                blocks[kind][1] += adj1[kind][0]
                blocks[kind][n - 1] += adjm[kind][0]
        if adjN1_1 is not None:
            n1[1] += adjN1_1[0] / (h[1] * h[0])
            n1[n - 1] += adjN1_m[0] / (h[n - 1] * h[0])

        for kind, B in blocks.items():
            col = (B[:, 0, 0] + B[:, 1, 1]
                   + np.roll(B[:, 1, 0], 1) + np.roll(B[:, 0, 1], -1))
            if kind == OperatorKind.HYPERSINGULAR:
                col = col + 2.0 * n1 - np.roll(n1, 1) - np.roll(n1, -1)
            out[(kind, k)] = col
    return out


# ---------------------------------------------------------------------------
# binary dump (debug aid)
# ---------------------------------------------------------------------------

def dump_matrix(op: OperatorMatrix, path) -> None:
    """Write `<u4 N><u4 kind><c8 wavenumber>` then row-major complex128."""
    n = op.entries.shape[0]
    with open(path, "wb") as f:
        f.write(struct.pack("<II", n, int(op.kind)))
        f.write(np.complex64(op.wavenumber).tobytes())
        f.write(np.ascontiguousarray(op.entries, dtype="<c16").tobytes())


def load_matrix(path, mesh: BoundaryMesh = None) -> OperatorMatrix:
    with open(path, "rb") as f:
        head = f.read(16)
        n, kind = struct.unpack("<II", head[:8])
        k = complex(np.frombuffer(head[8:16], dtype="<c8")[0])
        data = np.frombuffer(f.read(), dtype="<c16").reshape(n, n).copy()
    return OperatorMatrix(OperatorKind(kind), k, data, mesh)
