"""Residual diagnostics for candidate maximal surfaces.

Three independent identities tie the height field to its geometry: the linear
equation satisfied by plane-distance observables, the tensor identity pairing
their Hessian with the shape operator, and the quasilinear equation for the
log of the principal curvature.  All three are evaluated by differentiating
SAMPLED scalar fields with the mesh stencils and comparing against tensors
obtained by the chain-rule path, so the reported numbers measure genuine
discretization error, not algebraic tautologies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AllUmbilical,
    CurvatureAtOne,
    PlaneIntersectsSurface,
    TooFewPoints,
)
from .lorentz import SIGNATURE, Plane, plane_past_dual
from .mesh import SurfaceMesh, scalar_laplacian
from .stencils import PolarStencils

__all__ = [
    "Residuals",
    "GRAD_BOUND",
    "check_linear_pde",
    "check_quasilinear_pde",
    "lipschitz_v",
    "grad_norm_squared",
]

#: strict upper bound for ||grad u||^2 on a maximal surface
GRAD_BOUND = 2.0 * (1.0 + np.sqrt(2.0))


@dataclass
class Residuals:
    """Infinity norms of the PDE identities over interior vertices.

    Each checker fills only its own fields; the rest stay NaN.
    """

    linear_pde: float = np.nan
    hessian_identity: float = np.nan
    quasilinear_pde: float = np.nan
    grad_bound_margin: float = np.nan


def _compact_stencils(mesh: SurfaceMesh) -> PolarStencils:
    g = mesh.grid
    return PolarStencils(g.n_r, g.n_theta, g.R_max, theta_spectral=False)


def grad_norm_squared(mesh: SurfaceMesh, u: np.ndarray, parity: int = 1) -> np.ndarray:
    """||grad u||^2 in the induced metric, u differentiated by the stencils."""
    st = mesh.grid.stencils
    u_r, u_th = st.d_r(u, parity), st.d_theta(u)
    gi = mesh.geom.g_inv
    return (
        gi[..., 0, 0] * u_r**2
        + 2.0 * gi[..., 0, 1] * u_r * u_th
        + gi[..., 1, 1] * u_th**2
    )


#: default residual window as fractions of R_max: (inner cut, outer cut)
RESIDUAL_WINDOW = (0.1, 2.0 / 3.0)


def _window_mask(mesh: SurfaceMesh, r_window) -> np.ndarray:
    """Boolean ring mask for the radial window, Dirichlet ring excluded.

    Pointwise residuals are only refinement-stable on a fixed annulus: the
    innermost rings amplify height noise through the 1/r factors of the polar
    chart (the log-curvature check loses all of its tolerance there), and the
    outer collar carries ideal data squeezed to finite radius.  Both cuts are
    physical radii, so the same window compares across resolutions.
    """
    lo, hi = r_window
    r = mesh.grid.r
    keep = (r >= lo * mesh.grid.R_max) & (r <= hi * mesh.grid.R_max)
    keep[mesh.grid.n_r - 1 :] = False
    if not keep.any():
        raise TooFewPoints(
            f"residual window [{lo:g}, {hi:g}] x R_max contains no interior ring"
        )
    return keep


def check_linear_pde(
    mesh: SurfaceMesh, plane: Plane, r_window=RESIDUAL_WINDOW
) -> Residuals:
    """Residuals of the plane-distance observable u on the mesh.

    u is the pairing of each vertex with the plane's dual, sign-fixed so the
    normal component <N, dual> is positive.  Reported over the trusted radial
    window: the infinity norms of (Laplacian of u) - 2u and of the tensor
    Hess u - u g - sqrt(1 - u^2 + ||grad u||^2) II, plus the signed margin
    max ||grad u||^2 - 2(1 + sqrt(2)).
    """
    mesh.require_spacelike()
    G = mesh.geom
    dual = plane_past_dual(plane)
    u = np.sum(G.embedding * SIGNATURE * dual, axis=-1)
    nu = np.sum(G.N * SIGNATURE * dual, axis=-1)
    if float(np.mean(nu)) < 0.0:
        dual, u, nu = -dual, -u, -nu
    if float(u.min()) * float(u.max()) <= 0.0:
        raise PlaneIntersectsSurface("observable changes sign on the mesh")

    st = mesh.grid.stencils
    u_r, u_th = st.d_r(u), st.d_theta(u)
    u_rr, u_rth, u_thth = st.d_rr(u), st.d_r_theta(u), st.d_theta2(u)
    grad = np.stack([u_r, u_th], axis=-1)
    hess = np.empty(u.shape + (2, 2))
    hess[..., 0, 0] = u_rr
    hess[..., 0, 1] = u_rth
    hess[..., 1, 0] = u_rth
    hess[..., 1, 1] = u_thth
    hess -= np.einsum("...cab,...c->...ab", G.Gamma, grad)

    gi = G.g_inv
    lap = np.einsum("...ab,...ab->...", gi, hess)
    grad_sq = np.einsum("...ab,...a,...b->...", gi, grad, grad)
    root = np.sqrt(np.maximum(1.0 - u**2 + grad_sq, 0.0))
    tensor = hess - u[..., None, None] * G.g - root[..., None, None] * G.II

    keep = _window_mask(mesh, r_window)
    # the gradient bound concerns u as a sine of timelike distance, which
    # only parametrizes vertices with |u| <= 1; beyond that strip u grows
    # like cosh(r) on any surface and the bound is vacuous
    in_strip = keep[:, None] & (np.abs(u) <= 1.0)
    strip_sq = grad_sq[in_strip]
    margin = float(strip_sq.max() - GRAD_BOUND) if strip_sq.size else -GRAD_BOUND
    return Residuals(
        linear_pde=float(np.abs((lap - 2.0 * u)[keep]).max()),
        hessian_identity=float(np.abs(tensor[keep]).max()),
        grad_bound_margin=margin,
    )


#: principal curvature below which the log-curvature field is undefined
UMBILIC_EPS = 1e-6


def check_quasilinear_pde(
    mesh: SurfaceMesh,
    threshold: float = UMBILIC_EPS,
    r_window=RESIDUAL_WINDOW,
) -> Residuals:
    """Residual of the log-curvature equation away from umbilic vertices.

    chi = -ln(lambda) satisfies (Laplacian of chi) = 2 (1 - lambda^2) on a
    maximal surface wherever lambda > 0.  The field blows up at umbilic
    points, so the residual is reported only at windowed vertices whose whole
    stencil footprint stays above ``threshold``; compact theta stencils keep
    that footprint local.  The default threshold is the bare definition domain;
    convergence studies should raise it so the evaluated region stays a fixed
    distance from the umbilic set (the derivatives of chi, and with them the
    truncation error, grow without bound as lambda -> 0).
    """
    mesh.require_spacelike()
    lam = np.abs(mesh.lam)
    good = lam > max(float(threshold), UMBILIC_EPS)
    st = _compact_stencils(mesh)
    n_r, n_t = mesh.grid.n_r, mesh.grid.n_theta

    # erode the good set by the stencil footprint (radial support x theta +-2)
    safe = np.zeros_like(good)
    for i in range(n_r - 1):
        ok = np.ones(n_t, dtype=bool)
        for j, base in st.radial_support(i):
            for o in range(-2, 3):
                ok &= np.roll(good[j], -(base + o) % n_t)
        safe[i] = ok
    safe &= _window_mask(mesh, r_window)[:, None]
    if not safe.any():
        raise AllUmbilical("no windowed vertex clears the umbilic threshold")

    chi = -np.log(np.maximum(lam, 1e-300))
    lap = scalar_laplacian(mesh, chi, stencils=st)
    resid = lap - 2.0 * (1.0 - lam**2)
    return Residuals(quasilinear_pde=float(np.abs(resid[safe]).max()))


def lipschitz_v(mesh: SurfaceMesh, r_window=RESIDUAL_WINDOW) -> float:
    """Empirical Lipschitz constant of v = -ln(1 - lambda) in the mesh metric.

    Returns the max over windowed vertices of ||grad v||; a lower bound for
    any constant that controls how fast the curvature can approach 1.  The
    curvature must stay below 1 on the window and on the stencil collar
    around it (the field is clipped outside, so a rim where lambda crosses 1
    cannot poison windowed values through the stencils).
    """
    mesh.require_spacelike()
    keep = _window_mask(mesh, r_window)
    lam = np.abs(mesh.lam)
    pad = min(mesh.grid.n_r - 1, int(np.flatnonzero(keep).max()) + 4)
    worst = float(lam[:pad].max())
    if worst >= 1.0 - 1e-9:
        raise CurvatureAtOne(f"lambda reaches {worst:.9f} inside the window")
    v = -np.log1p(-np.minimum(lam, 1.0 - 1e-12))
    sq = np.maximum(grad_norm_squared(mesh, v), 0.0)
    return float(np.sqrt(sq[keep].max()))
