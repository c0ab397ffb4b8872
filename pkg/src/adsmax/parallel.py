"""Surfaces at constant timelike distance from a spacelike mesh.

Flowing every vertex a distance rho along the unit normal gives a new
spacelike surface whose first fundamental form and shape operator have closed
forms in terms of the original ones.  Two views of that surface are provided:

* ``parallel_forms`` keeps the original (r, theta) parametrization, samples
  the flowed embedding at the grid nodes and differentiates those samples
  with the mesh stencils.  Measured and closed-form tensors then live in the
  same coordinate basis and can be compared entry by entry, which is the
  honest way to test the closed forms against an independent measurement.

* ``parallel_surface`` re-expresses the flowed surface as a height field on
  a fresh polar grid (the type every other operation consumes), locating the
  source point of each target node by Newton iteration through smooth spline
  interpolants of the original height field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from .errors import ConfigInvalid, SingularParallel
from .lorentz import SIGNATURE
from .mesh import (
    PolarGrid,
    SurfaceMesh,
    _inner_rows,
    _normal_cofactor,
    chart_partials,
    height_spline,
)

__all__ = ["ParallelForms", "parallel_forms", "parallel_surface"]

#: determinant of (cos rho E + sin rho B) below which the flow pinches
SINGULAR_DET = 1e-8


def _flow_matrix(mesh: SurfaceMesh, rho: float) -> np.ndarray:
    """cos(rho) E + sin(rho) B per vertex, the differential of the flow."""
    c, s = np.cos(rho), np.sin(rho)
    M = s * mesh.geom.B.copy()
    M[..., 0, 0] += c
    M[..., 1, 1] += c
    return M


def _require_nonsingular(M: np.ndarray) -> None:
    det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
    worst = float(det.min())
    if worst < SINGULAR_DET:
        raise SingularParallel(
            f"flow differential degenerates: min det {worst:.3e} < {SINGULAR_DET:g}"
        )


def _flowed_embedding(mesh: SurfaceMesh, rho: float) -> np.ndarray:
    """cos(rho) x + sin(rho) N at every vertex; unit timelike by construction."""
    return np.cos(rho) * mesh.geom.embedding + np.sin(rho) * mesh.geom.N


@dataclass
class ParallelForms:
    """Measured vs closed-form tensors of a parallel surface, same basis.

    The measured pair comes from stencil derivatives of the sampled flowed
    embedding; the closed pair from the original mesh tensors.  ``lam`` is the
    larger eigenvalue of the measured shape operator.
    """

    g_measured: np.ndarray
    g_closed: np.ndarray
    B_measured: np.ndarray
    B_closed: np.ndarray
    lam: np.ndarray


def parallel_forms(mesh: SurfaceMesh, rho: float) -> ParallelForms:
    """Measure the parallel surface's tensors in the original parametrization.

    The flowed embedding is evaluated exactly at the grid nodes (position and
    normal are already per-vertex data), then treated as four sampled scalar
    fields and differentiated by the stencils.  No interpolation enters, so
    the discrepancy between the measured and closed-form tensors is pure
    discretization error of the scheme.
    """
    mesh.require_spacelike()
    rho = float(rho)
    M = _flow_matrix(mesh, rho)
    _require_nonsingular(M)

    st = mesh.grid.stencils
    Y = _flowed_embedding(mesh, rho)
    Yu = np.stack([st.d_r(Y[..., k]) for k in range(4)], axis=-1)
    Yv = np.stack([st.d_theta(Y[..., k]) for k in range(4)], axis=-1)
    Yuu = np.stack([st.d_rr(Y[..., k]) for k in range(4)], axis=-1)
    Yuv = np.stack([st.d_r_theta(Y[..., k]) for k in range(4)], axis=-1)
    Yvv = np.stack([st.d_theta2(Y[..., k]) for k in range(4)], axis=-1)

    g11, g12, g22 = _inner_rows(Yu, Yu), _inner_rows(Yu, Yv), _inner_rows(Yv, Yv)
    g_meas = np.stack(
        [np.stack([g11, g12], axis=-1), np.stack([g12, g22], axis=-1)], axis=-2
    )

    N = _normal_cofactor(Y, Yu, Yv)
    N = N / np.sqrt(np.maximum(-_inner_rows(N, N), 1e-300))[..., None]
    tau = np.stack(
        [np.zeros(Y.shape[:2]), np.zeros(Y.shape[:2]), -Y[..., 3], Y[..., 2]], axis=-1
    )
    N[_inner_rows(N, tau) > 0.0] *= -1.0

    ii11 = -_inner_rows(N, Yuu)
    ii12 = -_inner_rows(N, Yuv)
    ii22 = -_inner_rows(N, Yvv)
    det = g11 * g22 - g12 * g12
    B_meas = np.empty_like(g_meas)
    B_meas[..., 0, 0] = (g22 * ii11 - g12 * ii12) / det
    B_meas[..., 0, 1] = (g22 * ii12 - g12 * ii22) / det
    B_meas[..., 1, 0] = (g11 * ii12 - g12 * ii11) / det
    B_meas[..., 1, 1] = (g11 * ii22 - g12 * ii12) / det

    g_closed = np.einsum("...ca,...cd,...db->...ab", M, mesh.geom.g, M)
    c, s = np.cos(rho), np.sin(rho)
    W = c * mesh.geom.B.copy()
    W[..., 0, 0] -= s
    W[..., 1, 1] -= s
    B_closed = np.linalg.solve(M, W)

    tr = B_meas[..., 0, 0] + B_meas[..., 1, 1]
    detB = (
        B_meas[..., 0, 0] * B_meas[..., 1, 1] - B_meas[..., 0, 1] * B_meas[..., 1, 0]
    )
    lam = 0.5 * tr + np.sqrt(np.maximum(0.25 * tr**2 - detB, 0.0))
    return ParallelForms(g_meas, g_closed, B_meas, B_closed, lam)


def _flow_at(spl, u: np.ndarray, v: np.ndarray, rho: float) -> np.ndarray:
    """Flowed embedding at arbitrary chart points (u, v), via the spline."""
    f = spl.ev(u, v)
    fu = spl.ev(u, v, dx=1)
    fv = spl.ev(u, v, dy=1)
    P = chart_partials(u, v, f)
    Xu = P["Er"] + fu[..., None] * P["Ez"]
    Xv = P["Eth"] + fv[..., None] * P["Ez"]
    X = P["E"]
    N = _normal_cofactor(X, Xu, Xv)
    nn = _inner_rows(N, N)
    N = N / np.sqrt(np.maximum(-nn, 1e-300))[..., None]
    tau = np.stack([np.zeros_like(f), np.zeros_like(f), -X[..., 3], X[..., 2]], axis=-1)
    N[_inner_rows(N, tau) > 0.0] *= -1.0
    return np.cos(rho) * X + np.sin(rho) * N


def parallel_surface(mesh: SurfaceMesh, rho: float) -> SurfaceMesh:
    """Height-field mesh of the surface at signed normal distance rho.

    The flow x -> cos(rho) x + sin(rho) N stays non-singular for |rho| < pi/4
    whenever the curvature ratio is at most 1; the determinant of the flow
    differential is checked vertexwise either way.  The result is re-sampled
    as a height field on a grid of the same shape whose outer radius is the
    largest disk covered by the flowed patch, each node's source point found
    by damped Newton iteration in projective disk coordinates.
    """
    mesh.require_spacelike()
    rho = float(rho)
    if not np.isfinite(rho) or abs(rho) >= 0.5 * np.pi:
        raise ConfigInvalid(f"normal distance {rho!r} outside (-pi/2, pi/2)")
    _require_nonsingular(_flow_matrix(mesh, rho))
    g = mesh.grid
    if rho == 0.0:
        return SurfaceMesh(
            g,
            mesh.f.copy(),
            converged=mesh.converged,
            residual=mesh.residual,
            tol=mesh.tol,
        )

    spl = height_spline(mesh)

    # outer radius of the re-sampled grid: smallest flowed radius of the rim
    Y_rim = _flow_at(spl, np.full(g.n_theta, g.R_max), g.theta, rho)
    r_rim = np.arcsinh(np.hypot(Y_rim[..., 0], Y_rim[..., 1]))
    R_new = float(r_rim.min()) - 1e-9
    grid = PolarGrid(g.n_r, g.n_theta, R_new)

    rt, tt = grid.mesh_rt()
    target = np.sinh(rt)[..., None] * np.stack(
        [np.cos(tt), np.sin(tt)], axis=-1
    )
    # Newton in projective disk coordinates (smooth through the pole)
    pq = target.copy()
    delta = 1e-7
    f_new = None
    for _ in range(40):
        u = np.hypot(pq[..., 0], pq[..., 1])
        v = np.mod(np.arctan2(pq[..., 1], pq[..., 0]), 2 * np.pi)
        Y = _flow_at(spl, u, v, rho)
        res = Y[..., :2] - target
        err = float(np.abs(res).max())
        if err < 1e-12:
            f_new = np.arctan2(Y[..., 3], Y[..., 2])
            break
        J = np.empty(pq.shape[:2] + (2, 2))
        for k in range(2):
            pqk = pq.copy()
            pqk[..., k] += delta
            uk = np.hypot(pqk[..., 0], pqk[..., 1])
            vk = np.mod(np.arctan2(pqk[..., 1], pqk[..., 0]), 2 * np.pi)
            Yk = _flow_at(spl, uk, vk, rho)
            J[..., :, k] = (Yk[..., :2] - Y[..., :2]) / delta
        step = np.linalg.solve(J, res[..., None])[..., 0]
        # clamp steps to a few cells so the iteration cannot tunnel
        cap = 5.0 * grid.stencils.h
        norm = np.maximum(np.hypot(step[..., 0], step[..., 1]), 1e-300)
        step *= np.minimum(1.0, cap / norm)[..., None]
        pq = pq - step
    if f_new is None:
        u = np.hypot(pq[..., 0], pq[..., 1])
        v = np.mod(np.arctan2(pq[..., 1], pq[..., 0]), 2 * np.pi)
        Y = _flow_at(spl, u, v, rho)
        res = Y[..., :2] - target
        raise SingularParallel(
            f"re-sampling failed to converge: residual {np.abs(res).max():.3e}"
        )
    return SurfaceMesh(grid, f_new)
