"""Fast direct solver: circulant baseline + randomized skeleton + Woodbury.

The Calderón-stabilized PEC matrix C_p is split as C_p = C_pc + C_ext,
where C_pc is the same operator discretized on the equi-perimeter circle
(circulant, FFT-diagonal) and C_ext = C_p - C_pc is numerically low-rank.
C_ext is compressed with a blocked adaptive randomized range finder into
U V^T, after which

    C_p^{-1} b = C_pc^{-1} b - C_pc^{-1} U (I + V^T C_pc^{-1} U)^{-1} V^T C_pc^{-1} b

is evaluated with two FFT solves, two thin products and one small solve.
"""

import json
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import CompressionError, SingularCirculantError, SingularCoreError
from .formulations import BlockSystem, CalderonCfie, assemble_rhs, complexified_wavenumber
from .geometry import CurveSpec, build_mesh
from .operators import OperatorKind as OK, assemble_first_columns
from .quadrature import GAUSS_ORDER

BLOCK_SIZE = 16
N_PROBES = 10
POWER_ITERS = 20
CORE_COND_LIMIT = 1e12


@dataclass(frozen=True)
class CirculantOperator:
    """Circulant matrix held as first column plus its DFT eigenvalues."""

    first_column: np.ndarray
    eigenvalues: np.ndarray
    mesh: object = field(repr=False, default=None, compare=False)

    @property
    def size(self) -> int:
        return len(self.first_column)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.fft.ifft(self.eigenvalues[:, None] * np.fft.fft(x, axis=0), axis=0) \
            if x.ndim == 2 else np.fft.ifft(self.eigenvalues * np.fft.fft(x))

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        ev = np.conj(self.eigenvalues)
        return np.fft.ifft(ev[:, None] * np.fft.fft(x, axis=0), axis=0) \
            if x.ndim == 2 else np.fft.ifft(ev * np.fft.fft(x))

    def to_dense(self) -> np.ndarray:
        n = self.size
        cols = [np.roll(self.first_column, j) for j in range(n)]
        return np.stack(cols, axis=1)


def make_circulant(first_column: np.ndarray) -> CirculantOperator:
    c = np.asarray(first_column, dtype=complex)
    return CirculantOperator(first_column=c, eigenvalues=np.fft.fft(c))


def circulant_solve(c: CirculantOperator, b: np.ndarray) -> np.ndarray:
    """x with C x = b via eigenvalue division; O(N log N)."""
    ev = c.eigenvalues
    tiny = 1e-14 * np.max(np.abs(ev))
    if np.min(np.abs(ev)) < tiny:
        raise SingularCirculantError("circulant operator has a near-zero eigenvalue")
    if b.ndim == 2:
        return np.fft.ifft(np.fft.fft(b, axis=0) / ev[:, None], axis=0)
    return np.fft.ifft(np.fft.fft(b) / ev)


def counterpart_circle_mesh(n: int, perimeter: float):
    """Uniform circle mesh whose polygon perimeter equals `perimeter` exactly.

    The radius is inflated by the chord factor so the discrete boundary,
    not the underlying analytic circle, carries the requested arclength;
    with that normalization a circular scatterer is its own counterpart.
    """
    chord = (np.pi / n) / np.sin(np.pi / n)
    return build_mesh(CurveSpec("circle", perimeter * chord, n))


def circulant_counterpart(n: int, k0: float, perimeter: float,
                          polarization: str = "tm",
                          order: int = GAUSS_ORDER,
                          k_tilde: complex | None = None) -> CirculantOperator:
    """Calderón-stabilized operator on the equi-perimeter circle.

    Assembled from one operator column each (translation invariance), then
    combined entirely in the Fourier domain.  The damping wavenumber
    defaults to the one this circle mesh itself implies; pass the k_tilde
    of the target boundary to keep both splits of C_p consistent.
    """
    from .geometry import average_curvature_radius
    mesh = counterpart_circle_mesh(n, perimeter)
    kt = k_tilde if k_tilde is not None \
        else complexified_wavenumber(k0, average_curvature_radius(mesh))
    if polarization == "tm":
        first, reg, dual = OK.SINGLE_LAYER, OK.HYPERSINGULAR, OK.ADJOINT_DOUBLE_LAYER
    else:
        first, reg, dual = OK.HYPERSINGULAR, OK.SINGLE_LAYER, OK.DOUBLE_LAYER
    cols = assemble_first_columns(
        mesh,
        [(first, k0), (dual, k0), (reg, kt), (dual, kt), (OK.GRAM, 0)],
        order=order,
    )
    ev = {key: np.fft.fft(col) for key, col in cols.items()}
    g = ev[(OK.GRAM, 0j)]
    lam = (ev[(reg, complex(kt))] * ev[(first, complex(k0))] / g
           + (0.5 * g - ev[(dual, complex(kt))]) * (0.5 * g + ev[(dual, complex(k0))]) / g)
    return CirculantOperator(first_column=np.fft.ifft(lam), eigenvalues=lam, mesh=mesh)


# ---------------------------------------------------------------------------
# adaptive randomized skeleton
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Skeleton:
    """Low-rank factors of the circulant remainder: correction is U V^T."""

    U: np.ndarray
    V: np.ndarray
    rank: int
    tolerance: float
    seed: int
    norm_estimate: float


def _gaussian(rng, n, m):
    return (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) / np.sqrt(2.0)


def estimate_spectral_norm(apply_fn, apply_adjoint_fn, n: int, seed: int,
                           iters: int = POWER_ITERS) -> float:
    """Power iteration on A^H A with a fixed seed."""
    rng = np.random.default_rng(seed)
    v = _gaussian(rng, n, 1)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = apply_fn(v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = apply_adjoint_fn(w / nw)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v /= nv
    return float(np.linalg.norm(apply_fn(v)))


def adaptive_skeleton(apply_fn, apply_adjoint_fn, n: int, tol: float, seed: int,
                      block: int = BLOCK_SIZE, abs_floor: float = 0.0) -> Skeleton:
    """Blocked adaptive randomized range finder with a 10-sample stop rule.

    Gaussian blocks are orthonormalized against the current basis; the
    iteration stops once max_i ||(I - QQ^H) A w_i|| over 10 fresh Gaussian
    probes drops below the target, and the factors are trimmed by an SVD
    of the projected matrix.  The plain probe maximum already overshoots
    the residual spectral norm for the slowly decaying spectra seen here
    (it tracks the Frobenius mass), so the classical 10 sqrt(2/pi)
    high-probability multiplier is left out; the achieved error is
    validated a posteriori by `skeleton_residual_norm`.  Deterministic for
    a fixed seed.

    `abs_floor` is an absolute spectral-norm level below which the operator
    counts as zero; the relative target alone cannot terminate when the
    input is pure rounding noise (a scatterer that is its own circulant
    counterpart).
    """
    rng = np.random.default_rng(seed)
    norm_a = estimate_spectral_norm(apply_fn, apply_adjoint_fn, n, seed + 1)
    if norm_a <= abs_floor:
        z = np.zeros((n, 0), dtype=complex)
        return Skeleton(U=z, V=z.copy(), rank=0, tolerance=tol, seed=seed,
                        norm_estimate=float(norm_a))

    stop_at = max(tol * norm_a, abs_floor)
    Q = np.zeros((n, 0), dtype=complex)

    def residual_spectral(qb):
        # power-iteration estimate of ||(I - QQ^H) A||_2, deterministic
        def res(x):
            y = apply_fn(x)
            return y - qb @ (qb.conj().T @ y)

        def res_h(x):
            return apply_adjoint_fn(x - qb @ (qb.conj().T @ x))

        return estimate_spectral_norm(res, res_h, n, seed + 7919 + qb.shape[1],
                                      iters=8)

    while True:
        omega = _gaussian(rng, n, block)
        Y = apply_fn(omega)
        if Q.shape[1]:
            Y -= Q @ (Q.conj().T @ Y)
            Y -= Q @ (Q.conj().T @ Y)
        est = np.max(np.linalg.norm(Y[:, :N_PROBES], axis=0))
        if est <= stop_at:
            break
        # probe norms track the Frobenius mass; once they come within an
        # order of the target, check the actual residual spectral norm,
        # which is what the tolerance contract is stated in
        if est <= 8.0 * stop_at and Q.shape[1] and residual_spectral(Q) <= stop_at:
            break
        Qb, _ = np.linalg.qr(Y)
        Q = np.hstack([Q, Qb])
        if Q.shape[1] > n // 2:
            raise CompressionError(
                f"skeleton rank {Q.shape[1]} exceeded half the problem size {n}")

    if Q.shape[1] == 0:
        z = np.zeros((n, 0), dtype=complex)
        return Skeleton(U=z, V=z.copy(), rank=0, tolerance=tol, seed=seed,
                        norm_estimate=norm_a)

    B = apply_adjoint_fn(Q).conj().T        # B = Q^H A, so A ~ Q B
    W, sig, Zh = np.linalg.svd(B, full_matrices=False)
    keep = sig > max(0.3 * tol * norm_a, abs_floor)
    if not np.any(keep):
        keep[:1] = True
    U = Q @ W[:, keep]
    Vt = sig[keep, None] * Zh[keep]
    return Skeleton(U=U, V=Vt.T, rank=int(keep.sum()), tolerance=tol, seed=seed,
                    norm_estimate=float(norm_a))


def skeleton_residual_norm(apply_fn, apply_adjoint_fn, sk: Skeleton, n: int,
                           seed: int = 1234, iters: int = POWER_ITERS) -> float:
    """Spectral norm estimate of A - U V^T (a-posteriori validation)."""

    def res(x):
        return apply_fn(x) - sk.U @ (sk.V.T @ x)

    def res_h(x):
        return apply_adjoint_fn(x) - np.conj(sk.V) @ (sk.U.conj().T @ x)

    return estimate_spectral_norm(res, res_h, n, seed, iters)


# ---------------------------------------------------------------------------
# Woodbury inverse
# ---------------------------------------------------------------------------

@dataclass
class WoodburyInverse:
    circulant: CirculantOperator
    skeleton: Skeleton
    core_lu: tuple = field(repr=False, default=None)
    core_cond: float = 0.0

    @classmethod
    def build(cls, circulant: CirculantOperator, skeleton: Skeleton) -> "WoodburyInverse":
        r = skeleton.rank
        if r == 0:
            return cls(circulant=circulant, skeleton=skeleton, core_lu=None, core_cond=1.0)
        Z = circulant_solve(circulant, skeleton.U)
        core = np.eye(r, dtype=complex) + skeleton.V.T @ Z
        sv = np.linalg.svd(core, compute_uv=False)
        cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
        if cond > CORE_COND_LIMIT:
            raise SingularCoreError(f"Woodbury core condition number {cond:.3e}")
        return cls(circulant=circulant, skeleton=skeleton,
                   core_lu=sla.lu_factor(core), core_cond=cond)


def woodbury_apply(w: WoodburyInverse, b: np.ndarray) -> np.ndarray:
    """x = (C_pc + U V^T)^{-1} b via the Woodbury identity."""
    t = circulant_solve(w.circulant, b)
    if w.skeleton.rank == 0:
        return t
    y = w.skeleton.V.T @ t
    z = sla.lu_solve(w.core_lu, y)
    u = w.skeleton.U @ z
    return t - circulant_solve(w.circulant, u)


# ---------------------------------------------------------------------------
# scenario solve
# ---------------------------------------------------------------------------

@dataclass
class SolverReport:
    n: int
    k0: float
    rank: int
    tolerance: float
    compression_time: float
    solve_time: float
    residual: float
    seed: int
    method: str
    threads: int = 0
    notes: str = ""

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True)


@dataclass
class SolveResult:
    """Coefficient vectors of the surface unknowns (None where absent)."""

    j_z_m: np.ndarray | None = None
    j_z_s: np.ndarray | None = None
    m_t_s: np.ndarray | None = None
    report: SolverReport | None = None


class ScenarioSolver:
    """Factorized solver for a BlockSystem; solves many RHS cheaply."""

    def __init__(self, system: BlockSystem, method: str = "fds",
                 tol: float = 1e-8, seed: int = 0, order: int = GAUSS_ORDER):
        if method not in ("fds", "dense"):
            raise ValueError(f"unknown method {method!r}")
        self.system = system
        self.method = method
        self.tol = tol
        self.seed = seed
        self.order = order
        self.rank = 0
        self.compression_time = 0.0
        self._pec_lu = None
        self._woodbury = None
        self._diel_lu = None

        cc = system.pec
        if cc is not None:
            t0 = time.perf_counter()
            if method == "dense":
                self._pec_lu = sla.lu_factor(cc.preconditioned)
            else:
                circ = circulant_counterpart(cc.mesh.n_nodes, cc.k0, cc.mesh.perimeter,
                                             cc.polarization, order=order,
                                             k_tilde=cc.k_tilde)
                cp = cc.preconditioned

                def ext(x):
                    return cp @ x - circ.apply(x)

                def ext_h(x):
                    return cp.conj().T @ x - circ.apply_adjoint(x)

                # remainders below the parent operator's rounding level are zero
                floor = 1e-13 * np.linalg.norm(cp, "fro")
                sk = adaptive_skeleton(ext, ext_h, cc.mesh.n_nodes, tol, seed,
                                       abs_floor=floor)
                self._woodbury = WoodburyInverse.build(circ, sk)
                self.rank = sk.rank
            self.compression_time = time.perf_counter() - t0
        if system.dielectric is not None:
            self._diel_lu = sla.lu_factor(system.dielectric.full_matrix())

    def solve(self, wave=None) -> SolveResult:
        sys_ = self.system
        wave = wave or sys_.wave
        res = SolveResult()
        t0 = time.perf_counter()
        residual = 0.0
        if sys_.pec is not None:
            cc: CalderonCfie = sys_.pec
            if wave is sys_.wave and sys_.pec_rhs_e is not None:
                rhs_e, rhs_h = sys_.pec_rhs_e, sys_.pec_rhs_h
            else:
                rhs_e, rhs_h, _ = assemble_rhs(cc.mesh, wave, sys_.medium0, "pec",
                                               order=self.order)
            b = cc.precondition_rhs(rhs_e, rhs_h)
            if self.method == "dense":
                x = sla.lu_solve(self._pec_lu, b)
            else:
                x = woodbury_apply(self._woodbury, b)
            res.j_z_m = x
            residual = float(np.linalg.norm(cc.preconditioned @ x - b)
                             / max(np.linalg.norm(b), 1e-300))
        if sys_.dielectric is not None:
            if wave is sys_.wave and sys_.diel_rhs is not None:
                rhs = sys_.diel_rhs
            else:
                e_vec, h_vec = assemble_rhs(sys_.dielectric.mesh, wave, sys_.medium0,
                                            "dielectric", order=self.order)
                rhs = np.concatenate([e_vec, h_vec])
            xy = sla.lu_solve(self._diel_lu, rhs)
            ns = sys_.dielectric.mesh.n_nodes
            res.j_z_s = xy[:ns]
            res.m_t_s = xy[ns:]
        solve_time = time.perf_counter() - t0

        n = sys_.pec.mesh.n_nodes if sys_.pec is not None else sys_.dielectric.mesh.n_nodes
        k0 = sys_.medium0.k.real
        res.report = SolverReport(
            n=n, k0=float(k0), rank=self.rank, tolerance=self.tol,
            compression_time=self.compression_time, solve_time=solve_time,
            residual=residual, seed=self.seed, method=self.method)
        return res


def solve_scenario(system: BlockSystem, method: str = "fds", tol: float = 1e-8,
                   seed: int = 0, order: int = GAUSS_ORDER) -> SolveResult:
    """One-shot solve of an assembled scenario; use ScenarioSolver for multi-RHS."""
    return ScenarioSolver(system, method=method, tol=tol, seed=seed, order=order).solve()
