"""Ruling isometries and the sampled minimal-Lagrangian extension map.

At each vertex of a spacelike mesh the tangent plane is a totally geodesic
spacelike plane whose ideal boundary is a graph over either ruling family
of the boundary torus.  Sliding that boundary along a ruling family onto
the boundary of the reference plane P_ref (the plane dual to e4, i.e. the
zero-height slice) determines a circle map, and the circle map extends to
a unique ambient isometry flattening the tangent plane onto P_ref.  Doing
this with the left and the right ruling family gives two isometries per
vertex; applying each vertex's own pair to the vertex itself produces two
samplings of the surface inside the hyperbolic plane.  The correspondence
y_l -> y_r between the two samplings is the extension map, a quasiconformal
self-map of the hyperbolic plane whose dilatation this module measures and
compares against the closed form ((1 + lam) / (1 - lam))^2.

Conventions, fixed once by the pull-back identities below:

  * a tangent plane with dual N has boundary graph theta_r = mu(theta_l)
    with mu = plane_boundary_mobius(N);
  * the LEFT isometry is the pair (id, mu^-1): it keeps theta_l and pulls
    the graph onto the diagonal, and its pull-back of the hyperbolic
    metric equals I((E + J B) ., (E + J B) .);
  * the RIGHT isometry is the pair (mu, id), pulling back to
    I((E - J B) ., (E - J B) .);
  * J is the rotation by a quarter turn for the induced metric, in grid
    coordinates J = [[-g_12, -g_22], [g_11, g_12]] / sqrt(det g).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigInvalid, CurvatureAtOne, DegenerateTangentPlane
from .lorentz import Isometry
from .mesh import MIN_METRIC_EIG, SurfaceMesh
from .mobius import Mobius, wrap_angle
from .sl2 import (
    _SWAP,
    from_matrix_model,
    isometry_from_psl_pair,
    plane_boundary_mobius,
    to_matrix_model,
)

REFERENCE_DUAL = np.array([0.0, 0.0, 0.0, 1.0])

# lam this close to one makes the closed-form dilatation meaningless
LAMBDA_CEILING = 1.0 - 1e-6

K_CAP = 1e8

# angles used to fit the ruling maps; any three distinct points would do
_FIT_TRIPLE = np.array([0.0, 2.0 * np.pi / 3.0, -2.0 * np.pi / 3.0])

# fresh angles for the post-construction checks, deliberately not the fit set
_CHECK_TRIPLE = np.array([0.5, 2.2, -1.8])

_QUARTER = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class RulingIsometry:
    """Ambient isometry flattening one vertex tangent plane onto P_ref."""

    iso: Isometry
    side: str
    source_vertex: tuple[int, int]


@dataclass
class SampledMap:
    """Per-vertex samples of the extension map in disk coordinates.

    `y_l[i, j]` and `y_r[i, j]` are the images of vertex (i, j) under its
    own left and right ruling isometries, as Poincare disk points of the
    reference plane.  The extension map itself is sampled as the pairing
    y_l -> y_r.  The pull-back errors are the sup-norm mismatch between
    the measured pull-back metrics of the two samplings and their closed
    forms, relative to the induced metric.
    """

    y_l: np.ndarray
    y_r: np.ndarray
    pullback_err_left: float
    pullback_err_right: float


@dataclass
class DilatationField:
    """Closed-form and measured quasiconformal dilatation per vertex.

    `curvature_at_one` flags vertices where the closed form overflowed the
    cap; both fields are clipped to K_CAP so downstream reports stay
    finite.
    """

    K_formula: np.ndarray
    K_measured: np.ndarray
    K_sup: float
    curvature_at_one: bool = False


def _vertex_dual(mesh: SurfaceMesh, vertex) -> np.ndarray:
    """Unit timelike dual of the tangent plane at a mesh vertex."""
    try:
        i, j = int(vertex[0]), int(vertex[1])
    except (TypeError, IndexError, ValueError):
        raise ConfigInvalid(f"vertex must be an index pair, got {vertex!r}")
    n_r, n_t = mesh.grid.n_r, mesh.grid.n_theta
    if not (0 <= i < n_r and 0 <= j < n_t):
        raise ConfigInvalid(f"vertex {(i, j)} outside {n_r} x {n_t} grid")
    if mesh.geom.min_eig[i, j] <= MIN_METRIC_EIG:
        raise DegenerateTangentPlane(
            f"tangent plane at {(i, j)} is not spacelike "
            f"(metric eigenvalue {mesh.geom.min_eig[i, j]:.3e})"
        )
    N = mesh.geom.N[i, j]
    if not np.all(np.isfinite(N)):
        raise DegenerateTangentPlane(f"normal at {(i, j)} is not finite")
    return N


def _ruling_pair(mu: Mobius, side: str) -> tuple[np.ndarray, np.ndarray]:
    """Mobius matrices (m_left, m_right) fitted from three boundary points.

    Each boundary point of the tangent plane, (t, mu(t)) in torus
    coordinates, slides along the chosen ruling family onto the diagonal
    boundary of P_ref; the three source/target angle pairs per coordinate
    determine the factors.
    """
    src = _FIT_TRIPLE
    img = np.asarray(mu.on_angle(src))
    if side == "left":
        m_l = Mobius.from_three_angles(src, src)
        m_r = Mobius.from_three_angles(img, src)
    else:
        m_l = Mobius.from_three_angles(src, img)
        m_r = Mobius.from_three_angles(img, img)
    return m_l.matrix, m_r.matrix


def _null_lift(theta_l: float, theta_r: float) -> np.ndarray:
    """Representative null vector of the torus point (theta_l, theta_r)."""
    alpha = 0.5 * (theta_l + theta_r)
    beta = 0.5 * (theta_l - theta_r)
    return np.array([np.cos(alpha), np.sin(alpha), np.cos(beta), np.sin(beta)])


def _torus_angles(xi: np.ndarray) -> tuple[float, float]:
    alpha = np.arctan2(xi[1], xi[0])
    beta = np.arctan2(xi[3], xi[2])
    return alpha + beta, alpha - beta


def _verify_ruling(iso: Isometry, mu: Mobius, side: str, dual: np.ndarray) -> None:
    """Check the plane lands on P_ref and three boundary points follow the ruling."""
    image = iso.m @ dual
    if image[3] < 0:
        image = -image
    if np.max(np.abs(image - REFERENCE_DUAL)) > 1e-8:
        raise DegenerateTangentPlane(
            "ruling isometry does not carry the tangent plane onto the reference plane"
        )
    for t in _CHECK_TRIPLE:
        target = float(t) if side == "left" else float(mu.on_angle(t))
        img = iso.apply_vec(_null_lift(float(t), float(mu.on_angle(t))))
        tl, tr = _torus_angles(img)
        if abs(wrap_angle(tl - target)) > 1e-8 or abs(wrap_angle(tr - target)) > 1e-8:
            raise DegenerateTangentPlane(
                f"boundary point does not follow the {side} ruling onto the diagonal"
            )


def ruling_isometry(mesh: SurfaceMesh, vertex, side: str = "left") -> RulingIsometry:
    """Isometry mapping the tangent plane at `vertex` onto the reference plane.

    The boundary circle of the tangent plane is the graph
    theta_r = mu(theta_l); following the left (right) ruling family keeps
    theta_l (theta_r) and lands on the diagonal boundary of P_ref.  The
    returned isometry is fitted from three boundary points and re-checked
    on three fresh ones.
    """
    if side not in ("left", "right"):
        raise ConfigInvalid(f"side must be 'left' or 'right', got {side!r}")
    dual = _vertex_dual(mesh, vertex)
    mu = plane_boundary_mobius(dual)
    m_l, m_r = _ruling_pair(mu, side)
    iso = isometry_from_psl_pair(m_l, m_r)
    _verify_ruling(iso, mu, side, dual)
    return RulingIsometry(iso=iso, side=side, source_vertex=(int(vertex[0]), int(vertex[1])))


def _disk_coords(y: np.ndarray) -> np.ndarray:
    """Poincare disk coordinates of points on the reference plane.

    Expects (..., 4) representatives with vanishing fourth component; the
    sign is normalized so the sheet component is positive.
    """
    sign = np.where(y[..., 2] < 0.0, -1.0, 1.0)
    y = y * sign[..., None]
    return y[..., :2] / (1.0 + y[..., 2:3])


def _complex_structure(g: np.ndarray, det_g: np.ndarray) -> np.ndarray:
    """Quarter-turn rotation of the induced metric, vertex-wise."""
    J = np.empty_like(g)
    sq = np.sqrt(det_g)
    J[..., 0, 0] = -g[..., 0, 1] / sq
    J[..., 0, 1] = -g[..., 1, 1] / sq
    J[..., 1, 0] = g[..., 0, 0] / sq
    J[..., 1, 1] = g[..., 0, 1] / sq
    return J


def _map_differentials(mesh: SurfaceMesh, y: np.ndarray) -> np.ndarray:
    """Per-vertex 2x2 Jacobian of a disk-coordinate field in grid coordinates."""
    st = mesh.grid.stencils
    D = np.empty(y.shape[:2] + (2, 2))
    for k in range(2):
        D[..., k, 0] = st.d_r(y[..., k])
        D[..., k, 1] = st.d_theta(y[..., k])
    return D


def _conformal_factor(w: np.ndarray) -> np.ndarray:
    """Hyperbolic metric factor 2 / (1 - |w|^2) on the disk."""
    return 2.0 / (1.0 - np.sum(w * w, axis=-1))


def _measured_pullback(mesh: SurfaceMesh, y: np.ndarray) -> np.ndarray:
    D = _map_differentials(mesh, y)
    lam_h = _conformal_factor(y)
    return lam_h[..., None, None] ** 2 * np.einsum("...ca,...cb->...ab", D, D)


def _closed_pullback(mesh: SurfaceMesh, sign: float) -> np.ndarray:
    g = mesh.geom.g
    J = _complex_structure(g, mesh.geom.det_g)
    M = np.eye(2) + sign * np.einsum("...ab,...bc->...ac", J, mesh.geom.B)
    return np.einsum("...ca,...cd,...db->...ab", M, g, M)


def ml_map(mesh: SurfaceMesh) -> SampledMap:
    """Sample the extension map: per-vertex left and right disk images.

    Applies each vertex's own pair of ruling isometries to the vertex
    itself.  The construction is vectorized but agrees with
    `ruling_isometry` applied vertex by vertex; three spot vertices are
    re-derived through that code path and compared.  The measured
    pull-back metrics of both samplings are checked against their closed
    forms and the sup-norm mismatches are reported on the result.
    """
    if not mesh.converged:
        raise ConfigInvalid("extension map requires a converged mesh")
    mesh.require_spacelike()
    lam_max = float(mesh.lam.max())
    if lam_max >= LAMBDA_CEILING:
        raise CurvatureAtOne(
            f"max |lambda| = {lam_max:.8f} reaches the dilatation ceiling; "
            "restrict the mesh before extending"
        )

    N = mesh.geom.N
    X = to_matrix_model(mesh.embedding)
    Xd = to_matrix_model(N)
    mu_mat = np.einsum("ab,...bc,cd->...ad", _SWAP, Xd @ _QUARTER, _SWAP)
    det = mu_mat[..., 0, 0] * mu_mat[..., 1, 1] - mu_mat[..., 0, 1] * mu_mat[..., 1, 0]
    mu_mat = mu_mat / np.sqrt(det)[..., None, None]
    mu_inv = np.empty_like(mu_mat)
    mu_inv[..., 0, 0] = mu_mat[..., 1, 1]
    mu_inv[..., 0, 1] = -mu_mat[..., 0, 1]
    mu_inv[..., 1, 0] = -mu_mat[..., 1, 0]
    mu_inv[..., 1, 1] = mu_mat[..., 0, 0]

    # pair (m_l, m_r) acts in the matrix model as X -> (S m_r S) X (S m_l S)^T
    factor_r = np.einsum("ab,...bc,cd->...ad", _SWAP, mu_inv, _SWAP)
    factor_l = np.einsum("ab,...bc,cd->...ad", _SWAP, mu_mat, _SWAP)
    y_left = from_matrix_model(np.einsum("...ab,...bc->...ac", factor_r, X))
    y_right = from_matrix_model(np.einsum("...ab,...cb->...ac", X, factor_l))

    for y in (y_left, y_right):
        worst = float(np.max(np.abs(y[..., 3])))
        if worst > 1e-8:
            raise DegenerateTangentPlane(
                f"extension images leave the reference plane by {worst:.3e}"
            )
    y_l = _disk_coords(y_left)
    y_r = _disk_coords(y_right)

    n_r, n_t = mesh.grid.n_r, mesh.grid.n_theta
    for vertex in ((0, 0), (n_r // 2, n_t // 3), (n_r - 1, (2 * n_t) // 3)):
        for side, sampled in (("left", y_l), ("right", y_r)):
            ri = ruling_isometry(mesh, vertex, side)
            spot = _disk_coords(ri.iso.apply_vec(mesh.embedding[vertex]))
            if np.max(np.abs(spot - sampled[vertex])) > 1e-9:
                raise DegenerateTangentPlane(
                    f"vectorized {side} sample disagrees with ruling_isometry at {vertex}"
                )

    err_l = _pullback_mismatch(mesh, y_l, +1.0)
    err_r = _pullback_mismatch(mesh, y_r, -1.0)
    return SampledMap(y_l=y_l, y_r=y_r, pullback_err_left=err_l, pullback_err_right=err_r)


def _pullback_mismatch(mesh: SurfaceMesh, y: np.ndarray, sign: float) -> float:
    measured = _measured_pullback(mesh, y)
    closed = _closed_pullback(mesh, sign)
    scale = np.linalg.norm(mesh.geom.g, axis=(-2, -1))
    diff = np.linalg.norm(measured - closed, axis=(-2, -1)) / scale
    return float(mesh.interior(diff).max())


def dilatation(mesh: SurfaceMesh, sampled: SampledMap) -> DilatationField:
    """Closed-form vs measured dilatation of the sampled extension map.

    The closed form is ((1 + lam) / (1 - lam))^2 per vertex.  The measured
    value differentiates the sampled map through the mesh stencils,
    composes the two Jacobians into the differential of y_l -> y_r, and
    takes the ratio of its singular values, the major-to-minor axis ratio
    of the image ellipse; that ratio is already the squared form above,
    because both pull-back factors E +- JB contribute one power each.
    Conformal factors of the hyperbolic metric scale both singular values
    alike, so the euclidean ratio is the hyperbolic one.
    """
    if sampled.y_l.shape[:2] != mesh.f.shape:
        raise ConfigInvalid("sampled map does not match the mesh grid")
    lam = mesh.lam
    lam_max = float(lam.max())
    if lam_max >= LAMBDA_CEILING:
        raise CurvatureAtOne(
            f"max |lambda| = {lam_max:.8f} reaches the dilatation ceiling"
        )

    K_formula = ((1.0 + lam) / (1.0 - lam)) ** 2
    capped = bool(np.any(K_formula > K_CAP))
    K_formula = np.minimum(K_formula, K_CAP)

    D_l = _map_differentials(mesh, sampled.y_l)
    D_r = _map_differentials(mesh, sampled.y_r)
    J_ml = np.einsum("...ab,...bc->...ac", D_r, np.linalg.inv(D_l))
    s = np.linalg.svd(J_ml, compute_uv=False)
    with np.errstate(divide="ignore", over="ignore"):
        K_measured = s[..., 0] / s[..., 1]
    K_measured = np.minimum(np.nan_to_num(K_measured, nan=K_CAP, posinf=K_CAP), K_CAP)

    K_sup = float(mesh.interior(K_formula).max())
    return DilatationField(
        K_formula=K_formula,
        K_measured=K_measured,
        K_sup=K_sup,
        curvature_at_one=capped,
    )


def area_jacobian(mesh: SurfaceMesh, sampled: SampledMap) -> np.ndarray:
    """Per-vertex Jacobian of the sampled map for hyperbolic area.

    |det D(y_l -> y_r)| times the squared ratio of conformal factors; an
    area-preserving map gives 1.
    """
    D_l = _map_differentials(mesh, sampled.y_l)
    D_r = _map_differentials(mesh, sampled.y_r)
    det_l = np.linalg.det(D_l)
    det_r = np.linalg.det(D_r)
    ratio = _conformal_factor(sampled.y_r) / _conformal_factor(sampled.y_l)
    return np.abs(det_r / det_l) * ratio**2


def boundary_trace(sampled: SampledMap) -> tuple[np.ndarray, np.ndarray]:
    """Disk angles of the outermost ring of samples, (left, right)."""
    w_l = sampled.y_l[-1]
    w_r = sampled.y_r[-1]
    return (
        np.arctan2(w_l[:, 1], w_l[:, 0]),
        np.arctan2(w_r[:, 1], w_r[:, 0]),
    )


def save_map_table(
    mesh: SurfaceMesh, sampled: SampledMap, dil: DilatationField, path: str
) -> None:
    """Plain numeric table: vertex indices, disk images, dilatations."""
    n_r, n_t = mesh.grid.n_r, mesh.grid.n_theta
    ii, jj = np.meshgrid(np.arange(n_r), np.arange(n_t), indexing="ij")
    rows = np.column_stack(
        [
            ii.ravel(),
            jj.ravel(),
            sampled.y_l[..., 0].ravel(),
            sampled.y_l[..., 1].ravel(),
            sampled.y_r[..., 0].ravel(),
            sampled.y_r[..., 1].ravel(),
            dil.K_formula.ravel(),
            dil.K_measured.ravel(),
        ]
    )
    np.savetxt(path, rows, header="i j yl1 yl2 yr1 yr2 K_formula K_measured")
