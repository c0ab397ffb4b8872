"""Tracing lines of curvature across a surface mesh.

A curvature line follows a unit eigenvector field of the shape operator.  The
field is only defined up to sign and degenerates where the two eigenvalues
collide, so the tracer keeps the eigenvector aligned with the previous step
(using the ambient inner product, which stays meaningful through the chart's
pole) and aborts with UmbilicalRegion when the eigenvalue gap closes.  The
integration runs in projective disk coordinates with classical fourth-order
Runge-Kutta steps at a fixed fraction of the mesh spacing.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigInvalid, UmbilicalRegion
from .lorentz import SIGNATURE
from .mesh import SurfaceMesh, _inner_rows, _normal_cofactor, chart_partials, height_spline

__all__ = ["trace_curvature_line", "line_fields"]

#: eigenvalue gap of B below which the eigen-directions are ill-conditioned
GAP_EPS = 1e-4


class _SurfaceProbe:
    """Pointwise geometry of the interpolated surface at arbitrary (r, theta)."""

    def __init__(self, mesh: SurfaceMesh):
        self.spl = height_spline(mesh)
        self.R_max = mesh.grid.R_max

    def geometry(self, u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        spl = self.spl
        f = spl.ev(u, v)
        fu, fv = spl.ev(u, v, dx=1), spl.ev(u, v, dy=1)
        fuu, fuv, fvv = (
            spl.ev(u, v, dx=2),
            spl.ev(u, v, dx=1, dy=1),
            spl.ev(u, v, dy=2),
        )
        P = chart_partials(u, v, f)
        fu_, fv_ = fu[..., None], fv[..., None]
        Xu = P["Er"] + fu_ * P["Ez"]
        Xv = P["Eth"] + fv_ * P["Ez"]
        Xuu = P["E"] + 2.0 * fu_ * P["Erz"] + fu_**2 * P["Ezz"] + fuu[..., None] * P["Ez"]
        Xuv = (
            P["Erth"]
            + fv_ * P["Erz"]
            + fu_ * fv_ * P["Ezz"]
            + fuv[..., None] * P["Ez"]
        )
        Xvv = P["Ethth"] + fv_**2 * P["Ezz"] + fvv[..., None] * P["Ez"]

        g11, g12, g22 = (
            _inner_rows(Xu, Xu),
            _inner_rows(Xu, Xv),
            _inner_rows(Xv, Xv),
        )
        N = _normal_cofactor(P["E"], Xu, Xv)
        N = N / np.sqrt(np.maximum(-_inner_rows(N, N), 1e-300))[..., None]
        tau = np.stack(
            [np.zeros_like(f), np.zeros_like(f), -P["E"][..., 3], P["E"][..., 2]],
            axis=-1,
        )
        N = np.where((_inner_rows(N, tau) > 0.0)[..., None], -N, N)

        ii11, ii12, ii22 = (
            -_inner_rows(N, Xuu),
            -_inner_rows(N, Xuv),
            -_inner_rows(N, Xvv),
        )
        det = g11 * g22 - g12 * g12
        B = np.empty(np.shape(f) + (2, 2))
        B[..., 0, 0] = (g22 * ii11 - g12 * ii12) / det
        B[..., 0, 1] = (g22 * ii12 - g12 * ii22) / det
        B[..., 1, 0] = (g11 * ii12 - g12 * ii11) / det
        B[..., 1, 1] = (g11 * ii22 - g12 * ii12) / det
        g = np.stack(
            [np.stack([g11, g12], axis=-1), np.stack([g12, g22], axis=-1)], axis=-2
        )
        return {"f": f, "X": P["E"], "Xu": Xu, "Xv": Xv, "N": N, "g": g, "B": B}


def _eigendirection(g, B, seed):
    """Unit eigenvector of B for the larger eigenvalue, g-normalized.

    Cayley-Hamilton: (B - mu_minus) maps any seed into the mu_plus eigenspace.
    Raises UmbilicalRegion when the eigenvalue gap is below GAP_EPS.
    """
    tr = B[0, 0] + B[1, 1]
    det = B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0]
    disc = tr * tr - 4.0 * det
    gap = np.sqrt(max(disc, 0.0))
    if gap < GAP_EPS:
        raise UmbilicalRegion(f"eigenvalue gap {gap:.2e} below {GAP_EPS:g}")
    mu_minus = 0.5 * (tr - gap)
    w = (B - mu_minus * np.eye(2)) @ seed
    norm = float(w @ g @ w)
    if norm <= 0.0:
        raise UmbilicalRegion("eigen-direction degenerate in the mesh metric")
    return w / np.sqrt(norm)


def _start_point(mesh: SurfaceMesh, x0):
    i, j = x0
    if isinstance(i, (int, np.integer)) and isinstance(j, (int, np.integer)):
        return float(mesh.grid.r[int(i)]), float(mesh.grid.theta[int(j)])
    return float(i), float(j)


def trace_curvature_line(
    mesh: SurfaceMesh, x0, sign: int = +1, length: float = 1.0
) -> np.ndarray:
    """Polyline of model points along a curvature line of the mesh.

    ``x0`` is either a grid vertex (pair of ints) or a chart point (pair of
    floats).  ``sign`` picks the direction of travel along the larger-eigenvalue
    direction field at the start; ``length`` is the arc length to cover.  The
    returned array has one row per step (including both endpoints), each a
    unit-normalized position in the ambient model.  Tracing stops early if the
    line reaches the outer collar of the grid, and raises UmbilicalRegion if
    the eigenvalue gap of the shape operator closes along the way.
    """
    mesh.require_spacelike()
    if sign not in (+1, -1):
        raise ConfigInvalid(f"sign must be +1 or -1, got {sign!r}")
    if not np.isfinite(length) or length <= 0.0:
        raise ConfigInvalid(f"length must be positive, got {length!r}")
    probe = _SurfaceProbe(mesh)
    u0, v0 = _start_point(mesh, x0)

    h = mesh.grid.stencils.h
    dt = 0.25 * h
    n_steps = max(8, int(np.ceil(length / dt)))
    dt = length / n_steps
    r_stop = mesh.grid.R_max - 2.0 * h

    # state in projective disk coordinates, smooth through the pole
    p = np.array([u0 * np.cos(v0), u0 * np.sin(v0)])
    e_prev = None  # ambient alignment carried between steps

    def velocity(p, e_ref):
        u = float(np.hypot(p[0], p[1]))
        v = float(np.mod(np.arctan2(p[1], p[0]), 2.0 * np.pi))
        G = probe.geometry(u, v)
        seed = np.array([1.0, 0.0])
        if e_ref is not None:
            # seed from the reference direction expressed in the chart basis
            proj = np.array(
                [
                    float(np.sum(e_ref * SIGNATURE * G["Xu"])),
                    float(np.sum(e_ref * SIGNATURE * G["Xv"])),
                ]
            )
            if np.hypot(proj[0], proj[1]) > 1e-12:
                seed = proj
        w = _eigendirection(G["g"], G["B"], seed)
        e_amb = w[0] * G["Xu"] + w[1] * G["Xv"]
        if e_ref is not None and float(np.sum(e_amb * SIGNATURE * e_ref)) < 0.0:
            w, e_amb = -w, -e_amb
        # chart velocity (du, dv) -> disk velocity (dp, dq)
        cu, su = np.cos(v), np.sin(v)
        dp = np.array([cu * w[0] - u * su * w[1], su * w[0] + u * cu * w[1]])
        return dp, e_amb, u, G

    dp0, e0, _, G0 = velocity(p, None)
    if sign < 0:
        dp0, e0 = -dp0, -e0
    pts = [G0["X"].copy()]
    e_prev = e0

    for _ in range(n_steps):
        k1, e1, u_here, _ = velocity(p, e_prev)
        if u_here > r_stop:
            break
        k2, _, _, _ = velocity(p + 0.5 * dt * k1, e1)
        k3, _, _, _ = velocity(p + 0.5 * dt * k2, e1)
        k4, _, _, _ = velocity(p + dt * k3, e1)
        p = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _, e_prev, u_new, G = velocity(p, e1)
        if u_new > r_stop:
            break
        pts.append(G["X"].copy())
    return np.array(pts)


def line_fields(mesh: SurfaceMesh, points: np.ndarray) -> dict:
    """Surface fields sampled along a traced polyline.

    Maps each model point back to chart coordinates and evaluates the
    interpolated normal and the eigenvalues of the shape operator there.
    Returns arrays keyed N, lam, height, r, theta for use in observable
    reconstructions.
    """
    probe = _SurfaceProbe(mesh)
    pts = np.asarray(points, dtype=float)
    r = np.arcsinh(np.hypot(pts[..., 0], pts[..., 1]))
    th = np.mod(np.arctan2(pts[..., 1], pts[..., 0]), 2.0 * np.pi)
    G = probe.geometry(r, th)
    B = G["B"]
    tr = B[..., 0, 0] + B[..., 1, 1]
    det = B[..., 0, 0] * B[..., 1, 1] - B[..., 0, 1] * B[..., 1, 0]
    lam = 0.5 * tr + 0.5 * np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
    return {"N": G["N"], "lam": lam, "height": G["f"], "r": r, "theta": th}
