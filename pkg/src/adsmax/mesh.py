"""Surface meshes over the polar disk and their differential geometry.

A surface is stored as a height field zeta = f(r, theta) over the staggered
polar grid, embedded through the cylindrical chart.  All tensors are built by
chaining analytic partial derivatives of the chart map with finite-difference
derivatives of f alone, so the only discretization error in any tensor is the
error of the height-field stencils.  Christoffel symbols come from the exact
tangential projections <X_ab, X_c> rather than from differencing the metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import NotSpacelike, TooFewPoints
from .lorentz import SIGNATURE
from .stencils import PolarStencils

MIN_METRIC_EIG = 1e-8


@dataclass(frozen=True)
class PolarGrid:
    """Staggered polar grid: ring i at r = (i + 1/2) h, outer ring at R_max."""

    n_r: int
    n_theta: int
    R_max: float
    stencils: PolarStencils = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.stencils is None:
            object.__setattr__(
                self, "stencils", PolarStencils(self.n_r, self.n_theta, self.R_max)
            )

    @property
    def r(self) -> np.ndarray:
        return self.stencils.r

    @property
    def theta(self) -> np.ndarray:
        return self.stencils.theta

    def mesh_rt(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.r, self.theta, indexing="ij")


def _inner_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum(a * SIGNATURE * b, axis=-1)


def _det3(p, q, s, a, b, c):
    return (
        p[..., a] * (q[..., b] * s[..., c] - q[..., c] * s[..., b])
        - p[..., b] * (q[..., a] * s[..., c] - q[..., c] * s[..., a])
        + p[..., c] * (q[..., a] * s[..., b] - q[..., b] * s[..., a])
    )


def _normal_cofactor(E, Xu, Xv):
    """Unnormalized cofactor normal with index raised: <n, v> = det[E, Xu, Xv, v]."""
    cof = np.empty_like(E)
    cof[..., 0] = _det3(E, Xu, Xv, 1, 2, 3)
    cof[..., 1] = -_det3(E, Xu, Xv, 0, 2, 3)
    cof[..., 2] = _det3(E, Xu, Xv, 0, 1, 3)
    cof[..., 3] = -_det3(E, Xu, Xv, 0, 1, 2)
    return cof * SIGNATURE


def chart_partials(r: np.ndarray, theta: np.ndarray, zeta: np.ndarray) -> dict:
    """Analytic partial derivatives of the cylindrical chart at (r, theta, zeta).

    Keys: E, Er, Eth, Ez, Erth, Erz, Ethth, Ezz (Err equals E and Ethz = 0).
    Each value has shape (..., 4).
    """
    cr, sr = np.cosh(r), np.sinh(r)
    ct, st = np.cos(theta), np.sin(theta)
    cz, sz = np.cos(zeta), np.sin(zeta)
    zeros = np.zeros_like(r)
    stack = lambda a, b, c, d: np.stack([a, b, c, d], axis=-1)
    return {
        "E": stack(ct * sr, st * sr, cz * cr, sz * cr),
        "Er": stack(ct * cr, st * cr, cz * sr, sz * sr),
        "Eth": stack(-st * sr, ct * sr, zeros, zeros),
        "Ez": stack(zeros, zeros, -sz * cr, cz * cr),
        "Erth": stack(-st * cr, ct * cr, zeros, zeros),
        "Erz": stack(zeros, zeros, -sz * sr, cz * sr),
        "Ethth": stack(-ct * sr, -st * sr, zeros, zeros),
        "Ezz": stack(zeros, zeros, -cz * cr, -sz * cr),
    }


@dataclass
class GeometryFields:
    """Per-vertex differential geometry of a height field."""

    embedding: np.ndarray  # (n_r, n_theta, 4)
    Xu: np.ndarray
    Xv: np.ndarray
    Xuu: np.ndarray
    Xuv: np.ndarray
    Xvv: np.ndarray
    g: np.ndarray  # (n_r, n_theta, 2, 2)
    g_inv: np.ndarray
    det_g: np.ndarray
    min_eig: np.ndarray
    N: np.ndarray  # future unit normal
    II: np.ndarray
    B: np.ndarray
    lam: np.ndarray
    tr_B: np.ndarray
    Gamma: np.ndarray  # (n_r, n_theta, 2, 2, 2) upper index first


def geometry_fields(grid: PolarGrid, f: np.ndarray) -> GeometryFields:
    """All first/second fundamental data of the graph zeta = f(r, theta)."""
    st = grid.stencils
    r, th = grid.mesh_rt()
    fr, fth = st.d_r(f), st.d_theta(f)
    frr, frth, fthth = st.d_rr(f), st.d_r_theta(f), st.d_theta2(f)

    P = chart_partials(r, th, f)
    E, Er, Eth, Ez = P["E"], P["Er"], P["Eth"], P["Ez"]
    Erth, Erz, Ethth, Ezz = P["Erth"], P["Erz"], P["Ethth"], P["Ezz"]

    fr_, fth_ = fr[..., None], fth[..., None]
    Xu = Er + fr_ * Ez
    Xv = Eth + fth_ * Ez
    Xuu = E + 2.0 * fr_ * Erz + fr_**2 * Ezz + frr[..., None] * Ez
    Xuv = Erth + fth_ * Erz + fr_ * fth_ * Ezz + frth[..., None] * Ez
    Xvv = Ethth + fth_**2 * Ezz + fthth[..., None] * Ez

    g11 = _inner_rows(Xu, Xu)
    g12 = _inner_rows(Xu, Xv)
    g22 = _inner_rows(Xv, Xv)
    g = np.stack(
        [np.stack([g11, g12], axis=-1), np.stack([g12, g22], axis=-1)], axis=-2
    )
    det_g = g11 * g22 - g12 * g12
    tr_half = 0.5 * (g11 + g22)
    gap = np.sqrt(np.maximum(tr_half**2 - det_g, 0.0))
    min_eig = tr_half - gap

    g_inv = np.empty_like(g)
    g_inv[..., 0, 0] = g22 / det_g
    g_inv[..., 1, 1] = g11 / det_g
    g_inv[..., 0, 1] = -g12 / det_g
    g_inv[..., 1, 0] = -g12 / det_g

    # normal: orthogonal to position and both tangents, unit timelike, future
    N = _normal_cofactor(E, Xu, Xv)
    nn = _inner_rows(N, N)
    N = N / np.sqrt(np.maximum(-nn, 1e-300))[..., None]
    tau = np.stack(
        [np.zeros_like(f), np.zeros_like(f), -E[..., 3], E[..., 2]], axis=-1
    )
    flip = _inner_rows(N, tau) > 0.0
    N[flip] *= -1.0

    ii11 = -_inner_rows(N, Xuu)
    ii12 = -_inner_rows(N, Xuv)
    ii22 = -_inner_rows(N, Xvv)
    II = np.stack(
        [np.stack([ii11, ii12], axis=-1), np.stack([ii12, ii22], axis=-1)], axis=-2
    )
    B = g_inv @ II
    tr_B = B[..., 0, 0] + B[..., 1, 1]
    det_B = B[..., 0, 0] * B[..., 1, 1] - B[..., 0, 1] * B[..., 1, 0]
    lam = 0.5 * tr_B + np.sqrt(np.maximum(0.25 * tr_B**2 - det_B, 0.0))

    # Gamma^c_ab = g^{cd} <X_ab, X_d>: exact tangential projection
    Xa = np.stack([Xu, Xv], axis=-2)  # (..., 2, 4)
    Xab = np.stack(
        [
            np.stack([Xuu, Xuv], axis=-2),
            np.stack([Xuv, Xvv], axis=-2),
        ],
        axis=-3,
    )  # (..., 2, 2, 4)
    proj = np.einsum("...abk,k,...dk->...abd", Xab, SIGNATURE, Xa)
    Gamma = np.einsum("...cd,...abd->...cab", g_inv, proj)

    return GeometryFields(
        embedding=E,
        Xu=Xu,
        Xv=Xv,
        Xuu=Xuu,
        Xuv=Xuv,
        Xvv=Xvv,
        g=g,
        g_inv=g_inv,
        det_g=det_g,
        min_eig=min_eig,
        N=N,
        II=II,
        B=B,
        lam=lam,
        tr_B=tr_B,
        Gamma=Gamma,
    )


@dataclass
class SurfaceMesh:
    """Height-field surface with its computed geometry.

    `converged` reports whether the solver met its residual target;
    `residual` is the interior infinity norm of tr B either way.
    """

    grid: PolarGrid
    f: np.ndarray
    geom: GeometryFields = field(repr=False, compare=False, default=None)
    converged: bool = True
    residual: float = 0.0
    tol: float = 0.0

    def __post_init__(self):
        if self.geom is None:
            self.geom = geometry_fields(self.grid, self.f)

    @property
    def embedding(self) -> np.ndarray:
        return self.geom.embedding

    @property
    def I(self) -> np.ndarray:  # noqa: E743 - first fundamental form
        return self.geom.g

    @property
    def II(self) -> np.ndarray:
        return self.geom.II

    @property
    def B(self) -> np.ndarray:
        return self.geom.B

    @property
    def lam(self) -> np.ndarray:
        return self.geom.lam

    @property
    def N(self) -> np.ndarray:
        return self.geom.N

    @property
    def tr_B(self) -> np.ndarray:
        return self.geom.tr_B

    def interior(self, fld: np.ndarray) -> np.ndarray:
        """Restrict a per-vertex field to rings away from the Dirichlet ring."""
        return fld[: self.grid.n_r - 1]

    def require_spacelike(self) -> None:
        worst = float(self.geom.min_eig.min())
        if worst <= MIN_METRIC_EIG:
            raise NotSpacelike(
                f"induced metric nearly degenerate: min eigenvalue {worst:.3e}"
            )


def trim_rim(mesh: SurfaceMesh, rings: int) -> SurfaceMesh:
    """Drop the outermost rings of a mesh, keeping the staggered radii aligned.

    The rings next to the Dirichlet ring carry ideal boundary data squeezed
    to finite radius, a truncation artifact rather than a feature of the
    surface being approximated.  Estimators that need the asymptotic regime
    (curvature suprema, extension dilatations) therefore work on a trimmed
    mesh.  Height values carry over unchanged; only the stencil closures near
    the new outer ring differ.
    """
    if rings < 1:
        return mesh
    n_new = mesh.grid.n_r - int(rings)
    if n_new < 16:
        raise TooFewPoints(f"trimming {rings} rings leaves {n_new} < 16")
    h = mesh.grid.stencils.h
    grid = PolarGrid(n_new, mesh.grid.n_theta, (n_new - 0.5) * h)
    return SurfaceMesh(
        grid,
        mesh.f[:n_new].copy(),
        converged=mesh.converged,
        residual=mesh.residual,
        tol=mesh.tol,
    )


def fundamental_forms(mesh: SurfaceMesh) -> SurfaceMesh:
    """Recompute all tensors from the current height field."""
    mesh.geom = geometry_fields(mesh.grid, mesh.f)
    mesh.require_spacelike()
    return mesh


TRUSTED_FRACTION = 2.0 / 3.0


def lambda_sup(mesh: SurfaceMesh, fraction: float = TRUSTED_FRACTION) -> float:
    """Sup of the principal curvature ratio over the trusted interior.

    Restricted to r <= fraction * R_max.  Near the outer collar the squeezed
    ideal data dominates and the pointwise ratio does not settle under
    refinement when the boundary data has derivative corners, so the sup is
    only meaningful away from the rim.  Under-reporting the sup is the safe
    direction for every consumer: the inequality checks only get harder.
    """
    cut = fraction * mesh.grid.R_max
    keep = mesh.grid.r <= cut + 1e-12
    if not keep.any():
        raise TooFewPoints(f"no rings inside r <= {cut:.3f}")
    return float(mesh.geom.lam[keep].max())


def scalar_laplacian(
    mesh: SurfaceMesh,
    chi: np.ndarray,
    parity: int = 1,
    stencils: PolarStencils = None,
) -> np.ndarray:
    """Laplace-Beltrami of a sampled scalar via Gamma^c_ab corrections.

    `stencils` overrides the grid's differentiation tables; callers that mask
    out vertices (footprints must stay inside the good region) pass a
    compact-theta variant here.
    """
    st = mesh.grid.stencils if stencils is None else stencils
    G = mesh.geom
    c_r, c_th = st.d_r(chi, parity), st.d_theta(chi)
    c_rr, c_rth, c_thth = (
        st.d_rr(chi, parity),
        st.d_r_theta(chi, parity),
        st.d_theta2(chi),
    )
    hess = np.empty(chi.shape + (2, 2))
    hess[..., 0, 0] = c_rr
    hess[..., 0, 1] = c_rth
    hess[..., 1, 0] = c_rth
    hess[..., 1, 1] = c_thth
    grad = np.stack([c_r, c_th], axis=-1)
    corr = np.einsum("...cab,...c->...ab", G.Gamma, grad)
    return np.einsum("...ab,...ab->...", G.g_inv, hess - corr)


_GAMMA_PARITY = np.array(
    [[[-1, 1], [1, -1]], [[1, -1], [-1, 1]]]
)  # parity of Gamma^c_ab under (r, theta) -> (-r, theta + pi)


def gauss_curvature(mesh: SurfaceMesh) -> np.ndarray:
    """Intrinsic curvature from the metric alone (one discrete curl of Gamma).

    K = g_{1a} R^a_{212} / det g with R^a_{bcd} the standard curvature of the
    Levi-Civita connection; independent of the embedding's normal data, so it
    can cross-check the extrinsic curvature through the ambient Gauss relation.
    """
    st = mesh.grid.stencils
    G = mesh.geom
    Gm = G.Gamma
    dGam = np.empty(Gm.shape + (2,))
    for c in range(2):
        for a in range(2):
            for b in range(2):
                comp = Gm[..., c, a, b]
                par = int(_GAMMA_PARITY[c, a, b])
                dGam[..., c, a, b, 0] = st.d_r(comp, parity=par)
                dGam[..., c, a, b, 1] = st.d_theta(comp)
    # R^a_{b c d} = d_c Gamma^a_{d b} - d_d Gamma^a_{c b}
    #              + Gamma^a_{c e} Gamma^e_{d b} - Gamma^a_{d e} Gamma^e_{c b}
    # contract for R^a_{2 1 2}: b = 2nd coord, c = 1st, d = 2nd (0-indexed 1, 0, 1)
    term = dGam[..., :, 1, 1, 0] - dGam[..., :, 0, 1, 1]
    quad = np.einsum("...ae,...e->...a", Gm[..., :, 0, :], Gm[..., :, 1, 1]) - np.einsum(
        "...ae,...e->...a", Gm[..., :, 1, :], Gm[..., :, 0, 1]
    )
    R_a = term + quad
    K = np.einsum("...a,...a->...", G.g[..., 0, :], R_a) / G.det_g
    return K


def plane_height_field(dual: np.ndarray, grid: PolarGrid) -> np.ndarray:
    """Height field of the totally geodesic plane dual to a timelike vector.

    Solves <E(r, theta, zeta), dual> = 0 for the branch with |zeta| < pi/2.
    """
    d = np.asarray(dual, dtype=float)
    r, th = grid.mesh_rt()
    a = -d[2] * np.cosh(r)
    b = -d[3] * np.cosh(r)
    c = -(d[0] * np.cos(th) + d[1] * np.sin(th)) * np.sinh(r)
    amp = np.hypot(a, b)
    if np.any(amp <= 1e-14) or np.any(np.abs(c) >= amp):
        raise NotSpacelike("plane is not a graph over this grid patch")
    phase = np.arctan2(b, a)
    delta = np.arccos(np.clip(c / amp, -1.0, 1.0))
    cands = np.stack([phase + delta, phase - delta], axis=0)
    cands = np.mod(cands + np.pi, 2.0 * np.pi) - np.pi
    pick = np.argmin(np.abs(cands), axis=0)
    return np.take_along_axis(cands, pick[None], axis=0)[0]


def equidistant_height_field(rho: float, grid: PolarGrid) -> np.ndarray:
    """Surface at constant signed distance rho from the zeta = 0 plane."""
    r, _ = grid.mesh_rt()
    return np.arcsin(np.sin(rho) / np.cosh(r))


def height_spline(mesh: SurfaceMesh) -> RectBivariateSpline:
    """Quintic spline of f extended across the pole and around the seam.

    Rows at negative radius hold f(r, theta + pi), so evaluation stays smooth
    through the pole; six wrap columns on each side cover the theta seam.
    Valid for evaluation at r >= 0, theta in [0, 2 pi).
    """
    g = mesh.grid
    r, f = g.r, mesh.f
    n_t = g.n_theta
    wrap = 6
    pole = min(6, g.n_r)
    rows = np.concatenate([-r[pole - 1 :: -1], r])
    below = np.roll(f[pole - 1 :: -1], n_t // 2, axis=1)
    ext = np.concatenate([below, f], axis=0)
    th = g.theta
    cols = np.concatenate([th[-wrap:] - 2 * np.pi, th, th[:wrap] + 2 * np.pi])
    ext = np.concatenate([ext[:, -wrap:], ext, ext[:, :wrap]], axis=1)
    return RectBivariateSpline(rows, cols, ext, kx=5, ky=5, s=0)


def mesh_interpolants(mesh: SurfaceMesh) -> dict:
    """Periodic spline interpolants for f, lambda and the B components."""
    st = mesh.grid.stencils
    pad = 4
    th_ext = np.concatenate(
        [st.theta[-pad:] - 2 * np.pi, st.theta, st.theta[:pad] + 2 * np.pi]
    )

    def wrap(fld):
        return np.concatenate([fld[:, -pad:], fld, fld[:, :pad]], axis=1)

    def spline(fld):
        return RectBivariateSpline(st.r, th_ext, wrap(fld), kx=3, ky=3)

    G = mesh.geom
    return {
        "f": spline(mesh.f),
        "lam": spline(G.lam),
        "B00": spline(G.B[..., 0, 0]),
        "B01": spline(G.B[..., 0, 1]),
        "B10": spline(G.B[..., 1, 0]),
        "B11": spline(G.B[..., 1, 1]),
        "g11": spline(G.g[..., 0, 0]),
        "g12": spline(G.g[..., 0, 1]),
        "g22": spline(G.g[..., 1, 1]),
    }


def chart_coords(points4: np.ndarray) -> np.ndarray:
    """Affine chart (x1/x3, x2/x3, x4/x3) of model points."""
    p = np.asarray(points4, dtype=float)
    return np.stack(
        [p[..., 0] / p[..., 2], p[..., 1] / p[..., 2], p[..., 3] / p[..., 2]], axis=-1
    )


def hull_containment(mesh: SurfaceMesh, hull) -> float:
    """Max signed chart distance of mesh vertices outside the hull facets."""
    pts = chart_coords(mesh.embedding.reshape(-1, 4))
    if hull.degenerate:
        n0, c0 = hull.normals[0], hull.offsets[0]
        return float(np.abs(pts @ n0 - c0).max())
    return float((pts @ hull.normals.T - hull.offsets).max())


def save_mesh_table(mesh: SurfaceMesh, path: str) -> None:
    """Plain numeric table: r, theta, zeta, lambda per vertex."""
    r, th = mesh.grid.mesh_rt()
    rows = np.column_stack(
        [r.ravel(), th.ravel(), mesh.f.ravel(), mesh.geom.lam.ravel()]
    )
    np.savetxt(path, rows, header="r theta zeta lambda")


def load_mesh_table(path: str) -> np.ndarray:
    rows = np.loadtxt(path)
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise TooFewPoints("mesh table must have four columns: r theta zeta lambda")
    return rows


def save_mesh_obj(mesh: SurfaceMesh, path: str) -> None:
    """Wavefront OBJ of the chart image of the mesh."""
    n_r, n_th = mesh.grid.n_r, mesh.grid.n_theta
    pts = chart_coords(mesh.embedding.reshape(-1, 4))
    lines = ["# polar surface mesh in affine chart coordinates"]
    for p in pts:
        lines.append(f"v {p[0]:.12g} {p[1]:.12g} {p[2]:.12g}")
    idx = lambda i, j: i * n_th + (j % n_th) + 1
    for i in range(n_r - 1):
        for j in range(n_th):
            a, b = idx(i, j), idx(i, j + 1)
            c, d = idx(i + 1, j + 1), idx(i + 1, j)
            lines.append(f"f {a} {b} {c}")
            lines.append(f"f {a} {c} {d}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
