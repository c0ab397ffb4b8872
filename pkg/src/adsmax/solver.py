"""Dirichlet solver for maximal graph surfaces over the polar disk.

The height field is driven toward tr B = 0 by pseudo-transient continuation:
implicit Euler steps of the mean-curvature flow df/dtau = tr B whose timestep
grows as the residual falls.  Early iterations are therefore damped descent;
once the residual is within a decade of the target the step switches to plain
Newton.  The Jacobian is assembled by colored finite differences of a
compact-stencil variant of the residual (the spectral theta derivative couples
whole rings, which coloring cannot afford) and factored with SuperLU.  The
accept/reject test always uses the spectral residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ConfigInvalid, NotSpacelike
from .homeo import CircleHomeo, boundary_height
from .mesh import (
    MIN_METRIC_EIG,
    PolarGrid,
    SurfaceMesh,
    _inner_rows,
    _normal_cofactor,
    chart_partials,
)
from .stencils import PolarStencils

__all__ = ["SolverConfig", "solve_maximal", "mean_curvature_field"]


@dataclass(frozen=True)
class SolverConfig:
    """Grid shape and iteration limits for solve_maximal."""

    R_max: float = 3.0
    n_r: int = 64
    n_theta: int = 128
    tol_H: float = 1e-6
    max_iters: int = 200
    damping: float = 0.5

    def __post_init__(self):
        if not self.R_max >= 2.0:
            raise ConfigInvalid(f"R_max must be >= 2, got {self.R_max}")
        if self.n_r < 16:
            raise ConfigInvalid(f"n_r must be >= 16, got {self.n_r}")
        if self.n_theta < 32 or self.n_theta % 2:
            raise ConfigInvalid(f"n_theta must be even and >= 32, got {self.n_theta}")
        if not self.tol_H > 0:
            raise ConfigInvalid("tol_H must be positive")
        if self.max_iters < 1:
            raise ConfigInvalid("max_iters must be at least 1")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigInvalid("damping must lie in (0, 1]")


def mean_curvature_field(st: PolarStencils, f: np.ndarray):
    """tr B and the minimum metric eigenvalue of the graph zeta = f.

    Lean sibling of mesh.geometry_fields: only what the solver's residual and
    spacelike guard need, safe to call on non-spacelike trial fields (returns
    non-finite entries instead of raising).
    """
    r, th = np.meshgrid(st.r, st.theta, indexing="ij")
    fr, fth = st.d_r(f), st.d_theta(f)
    frr, frth, fthth = st.d_rr(f), st.d_r_theta(f), st.d_theta2(f)
    P = chart_partials(r, th, f)
    fr_, fth_ = fr[..., None], fth[..., None]
    Xu = P["Er"] + fr_ * P["Ez"]
    Xv = P["Eth"] + fth_ * P["Ez"]
    Xuu = P["E"] + 2.0 * fr_ * P["Erz"] + fr_**2 * P["Ezz"] + frr[..., None] * P["Ez"]
    Xuv = (
        P["Erth"]
        + fth_ * P["Erz"]
        + fr_ * fth_ * P["Ezz"]
        + frth[..., None] * P["Ez"]
    )
    Xvv = P["Ethth"] + fth_**2 * P["Ezz"] + fthth[..., None] * P["Ez"]

    g11 = _inner_rows(Xu, Xu)
    g12 = _inner_rows(Xu, Xv)
    g22 = _inner_rows(Xv, Xv)
    det_g = g11 * g22 - g12 * g12
    tr_half = 0.5 * (g11 + g22)
    min_eig = tr_half - np.sqrt(np.maximum(tr_half**2 - det_g, 0.0))

    with np.errstate(invalid="ignore", divide="ignore"):
        n = _normal_cofactor(P["E"], Xu, Xv)
        nn = _inner_rows(n, n)
        n = n / np.sqrt(-nn)[..., None]
        flip = (n[..., 2] * P["E"][..., 3] - n[..., 3] * P["E"][..., 2]) > 0.0
        n[flip] *= -1.0
        ii11 = -_inner_rows(n, Xuu)
        ii12 = -_inner_rows(n, Xuv)
        ii22 = -_inner_rows(n, Xvv)
        tr_b = (g22 * ii11 - 2.0 * g12 * ii12 + g11 * ii22) / det_g
    return tr_b, min_eig


def _dependency_sets(st: PolarStencils, n_rows: int):
    """For each interior residual ring, the (ring, theta offset) pairs it reads."""
    nt = st.n_theta
    deps = []
    for i in range(n_rows):
        s = set()
        for j, base in st.radial_support(i):
            for o in range(-2, 3):
                s.add((j, (base + o) % nt))
        deps.append(sorted(s))
    return deps


def _color_columns(deps, n_cols_r: int, nt: int) -> np.ndarray:
    """Greedy distance-2 coloring of the unknown columns.

    Two columns may share a color only if no residual row reads both, so one
    perturbed residual evaluation per color recovers exact Jacobian columns.
    """
    conf: dict[tuple[int, int], set[int]] = {}
    for D in deps:
        cols = [(j, d) for (j, d) in D if j < n_cols_r]
        for j1, d1 in cols:
            for j2, d2 in cols:
                conf.setdefault((j1, j2), set()).add((d1 - d2) % nt)
    by_ring: dict[int, tuple[list[int], list[int]]] = {}
    for (j1, j2), ds in conf.items():
        lst = by_ring.setdefault(j1, ([], []))
        for d in ds:
            lst[0].append(j2)
            lst[1].append(d)
    colors = np.full((n_cols_r, nt), -1, dtype=np.int64)
    for j in range(n_cols_r):
        oth, dlt = (np.asarray(v, dtype=int) for v in by_ring.get(j, ([], [])))
        for t in range(nt):
            if oth.size:
                cc = colors[oth, (t - dlt) % nt]
                used = set(cc[cc >= 0].tolist())
            else:
                used = set()
            c = 0
            while c in used:
                c += 1
            colors[j, t] = c
    return colors


class _JacobianPlan:
    """Cached coloring and sparsity pattern for one grid shape."""

    def __init__(self, st_local: PolarStencils):
        n_r, nt = st_local.n_r, st_local.n_theta
        self.st = st_local
        self.n_unknowns = (n_r - 1) * nt
        deps = _dependency_sets(st_local, n_r - 1)
        self.colors = _color_columns(deps, n_r - 1, nt)
        self.n_colors = int(self.colors.max()) + 1
        rows, cols = [], []
        t = np.arange(nt)
        for i, D in enumerate(deps):
            for j, d in D:
                if j >= n_r - 1:
                    continue
                rows.append(i * nt + t)
                cols.append(j * nt + (t + d) % nt)
        self.rows = np.concatenate(rows)
        self.cols = np.concatenate(cols)
        self.tri_color = self.colors.ravel()[self.cols]

    def assemble(self, f: np.ndarray, eps: float = 1e-6) -> sp.csc_matrix:
        st = self.st
        n_r, nt = st.n_r, st.n_theta
        base = mean_curvature_field(st, f)[0][: n_r - 1].ravel()
        diffs = np.empty((self.n_colors, base.size))
        for c in range(self.n_colors):
            df = np.zeros((n_r, nt))
            df[: n_r - 1][self.colors == c] = eps
            pert = mean_curvature_field(st, f + df)[0][: n_r - 1].ravel()
            diffs[c] = (pert - base) / eps
        vals = diffs[self.tri_color, self.rows]
        return sp.coo_matrix(
            (vals, (self.rows, self.cols)),
            shape=(self.n_unknowns, self.n_unknowns),
        ).tocsc()


_PLAN_CACHE: dict[tuple[int, int, float], _JacobianPlan] = {}


def _plan_for(cfg: SolverConfig) -> _JacobianPlan:
    key = (cfg.n_r, cfg.n_theta, cfg.R_max)
    if key not in _PLAN_CACHE:
        _PLAN_CACHE[key] = _JacobianPlan(
            PolarStencils(cfg.n_r, cfg.n_theta, cfg.R_max, theta_spectral=False)
        )
    return _PLAN_CACHE[key]


def _initial_guess(st: PolarStencils, g_bnd: np.ndarray) -> np.ndarray:
    """Mode-wise decaying extension of the boundary data into the disk.

    Each Fourier mode k is damped by (tanh(r/2)/tanh(R/2))^k, the harmonic
    profile in disk-model coordinates; the boundary ring reproduces the data
    exactly.
    """
    nt = st.n_theta
    ghat = np.fft.rfft(g_bnd)
    rho = np.tanh(st.r / 2.0) / np.tanh(st.R_max / 2.0)
    k = np.arange(ghat.size)
    prof = rho[:, None] ** k[None, :]
    return np.fft.irfft(ghat[None, :] * prof, n=nt, axis=-1)


def prolong_height(f: np.ndarray, src: PolarStencils, dst: PolarStencils) -> np.ndarray:
    """Resample a height field onto a finer grid (warm starts for refinement).

    Interpolation is per Fourier mode: a cubic spline over the staggered
    radii, extended across the pole with the mode's parity so the innermost
    rings have two-sided support.
    """
    from scipy.interpolate import CubicSpline

    fhat = np.fft.rfft(f, axis=-1)
    n_modes_out = dst.n_theta // 2 + 1
    out = np.zeros((dst.n_r, n_modes_out), dtype=complex)
    scale = dst.n_theta / src.n_theta
    r_ext = np.concatenate([-src.r[2::-1], src.r])
    for k in range(min(fhat.shape[1], n_modes_out)):
        sign = 1.0 if k % 2 == 0 else -1.0
        vals = np.concatenate([sign * fhat[2::-1, k], fhat[:, k]])
        spl = CubicSpline(r_ext, vals)
        col = spl(np.minimum(dst.r, src.r[-1]))
        out[:, k] = col
    return np.fft.irfft(out * scale, n=dst.n_theta, axis=-1)


def solve_maximal(
    phi: CircleHomeo, cfg: SolverConfig, f0: np.ndarray | None = None
) -> SurfaceMesh:
    """Maximal graph surface spanning the boundary graph of phi.

    Dirichlet data on the outer ring comes from boundary_height; the interior
    is driven to |tr B| <= cfg.tol_H.  Steps that would break the spacelike
    guard or increase the residual are rejected and retried with a smaller
    timestep.  If the iteration budget runs out the mesh is returned flagged
    (converged=False) with its residual, not raised.

    `f0` warm-starts the interior (e.g. a coarser solution resampled by
    prolong_height); the Dirichlet ring is overwritten either way.

    Callers are expected to pass boundary maps of bounded cross-ratio norm;
    wild data fails inside boundary_height or the spacelike guard.
    """
    grid = PolarGrid(cfg.n_r, cfg.n_theta, cfg.R_max)
    st = grid.stencils
    n_r, nt = cfg.n_r, cfg.n_theta

    g_bnd = boundary_height(phi, grid.theta)
    f_cold = _initial_guess(st, g_bnd)
    if f0 is None:
        f = f_cold
    else:
        if f0.shape != (n_r, nt):
            raise ConfigInvalid(f"warm start shape {f0.shape} != {(n_r, nt)}")
        f = f0.copy()
        f[-1] = g_bnd

    def _guard(field):
        tb, me = mean_curvature_field(st, field)
        ok = np.isfinite(me).all() and me.min() > MIN_METRIC_EIG
        return tb, ok

    tr_b, ok = _guard(f)
    if not ok and f0 is not None:
        # warm starts can overshoot the lightlike barrier near the rim;
        # pull back toward the cold extension until the guard clears
        lo, hi = 0.0, 1.0
        for _ in range(14):
            mid = 0.5 * (lo + hi)
            if _guard(f_cold + mid * (f - f_cold))[1]:
                lo = mid
            else:
                hi = mid
        f = f_cold + lo * (f - f_cold)
        tr_b, ok = _guard(f)
    if not ok:
        raise NotSpacelike("initial guess is not strictly spacelike")
    res = np.abs(tr_b[: n_r - 1]).max()

    plan = _plan_for(cfg)
    eye = sp.identity(plan.n_unknowns, format="csc")
    dt = cfg.damping
    newton_ok = True
    converged = res <= cfg.tol_H
    lu = None  # factorization reused while steps keep halving the residual

    for _ in range(cfg.max_iters):
        if converged:
            break
        newton = newton_ok and res < 10.0 * cfg.tol_H
        if lu is None:
            J = plan.assemble(f)
            A = -J if newton else (eye / dt - J)
            lu = splu(A)
        delta = lu.solve(tr_b[: n_r - 1].ravel())
        f_new = f.copy()
        f_new[: n_r - 1] += delta.reshape(n_r - 1, nt)

        tr_b_new, min_eig_new = mean_curvature_field(st, f_new)
        res_new = np.abs(tr_b_new[: n_r - 1]).max()
        spacelike = (
            np.isfinite(res_new)
            and np.isfinite(min_eig_new).all()
            and min_eig_new.min() > MIN_METRIC_EIG
        )
        if spacelike and res_new < res:
            if res_new > 0.5 * res:
                lu = None  # slow progress: refresh the linearization
            growth = min(res / max(res_new, 1e-300), 10.0)
            f, tr_b, res = f_new, tr_b_new, res_new
            dt = min(dt * growth, 1e6)
            newton_ok = True
            converged = res <= cfg.tol_H
        elif newton:
            newton_ok = False
            lu = None
        else:
            dt *= 0.25
            lu = None
            if dt < 1e-14:
                if not spacelike:
                    raise NotSpacelike(
                        "cannot maintain a spacelike mesh at any step size"
                    )
                break  # stalled; return flagged

    return SurfaceMesh(
        grid, f, converged=bool(converged), residual=float(res), tol=cfg.tol_H
    )
