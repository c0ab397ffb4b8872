"""2x2 matrix model of the (2,2) quadric and split isometries.

A vector x maps to

    X = [[x3 + x1, x4 + x2],
         [x2 - x4, x3 - x1]],      det X = -<x, x>,

so AdS^3 is {det X = 1}/+-.  A pair (g, h) in SL(2,R) x SL(2,R) acts by
X -> g X h^T, covering the identity component of the isometry group.  Null
directions are rank-one matrices u v^T; the row factor v carries the
left-ruling half-angle and the column factor u the right-ruling half-angle:

    boundary point (alpha, beta):  X = 2 u v^T,
    u = (cos(theta_r/2), sin(theta_r/2)),  v = (cos(theta_l/2), sin(theta_l/2)),

with theta_l = alpha + beta, theta_r = alpha - beta.  A Mobius matrix m
acting on a tan-half-angle coordinate acts on these (cos, sin) factors as
S m S with S the coordinate swap [[0,1],[1,0]].
"""

from __future__ import annotations

import numpy as np

from .lorentz import Isometry

_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


def to_matrix_model(x: np.ndarray) -> np.ndarray:
    """Map (...,4) vectors to (...,2,2) matrices with det = -<x,x>."""
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape[:-1] + (2, 2))
    out[..., 0, 0] = x[..., 2] + x[..., 0]
    out[..., 0, 1] = x[..., 3] + x[..., 1]
    out[..., 1, 0] = x[..., 1] - x[..., 3]
    out[..., 1, 1] = x[..., 2] - x[..., 0]
    return out


def from_matrix_model(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    out = np.empty(X.shape[:-2] + (4,))
    out[..., 0] = 0.5 * (X[..., 0, 0] - X[..., 1, 1])
    out[..., 1] = 0.5 * (X[..., 0, 1] + X[..., 1, 0])
    out[..., 2] = 0.5 * (X[..., 0, 0] + X[..., 1, 1])
    out[..., 3] = 0.5 * (X[..., 0, 1] - X[..., 1, 0])
    return out


def _factor(m: np.ndarray) -> np.ndarray:
    """Conjugate a tan-half-angle Mobius matrix into the (cos, sin) convention."""
    return _SWAP @ np.asarray(m, dtype=float) @ _SWAP


def plane_boundary_mobius(dual: np.ndarray) -> "Mobius":
    """Left-to-right boundary graph map of the plane dual to a timelike point.

    The plane's ideal boundary is the set of null directions orthogonal to
    the dual; in the matrix model that orthogonality factors through the
    rank-one form of null points, giving theta_r = m(theta_l) with m = X_d S
    in the (cos, sin) convention, S the quarter turn.  The determinant of m
    is -<d, d> > 0, so the graph map is orientation preserving.
    """
    from .mobius import Mobius

    X = to_matrix_model(np.asarray(dual, dtype=float))
    quarter = np.array([[0.0, -1.0], [1.0, 0.0]])
    return Mobius.from_matrix(_SWAP @ (X @ quarter) @ _SWAP)


def apply_psl_pair(m_left: np.ndarray, m_right: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Act on (...,4) vectors by the isometry whose boundary action is
    theta_l -> m_left(theta_l), theta_r -> m_right(theta_r)."""
    g = _factor(m_right)
    h = _factor(m_left)
    X = to_matrix_model(x)
    if X.ndim == 2:
        return from_matrix_model(g @ X @ h.T)
    return from_matrix_model(np.einsum("ab,...bc,dc->...ad", g, X, h))


def isometry_from_psl_pair(m_left: np.ndarray, m_right: np.ndarray) -> Isometry:
    """Assemble the 4x4 SO+(2,2) matrix of the pair action."""
    cols = [apply_psl_pair(m_left, m_right, e) for e in np.eye(4)]
    return Isometry(np.column_stack(cols))


def sl2_rotation(angle: float) -> np.ndarray:
    """Circle rotation by `angle` as a tan-half-angle Mobius matrix."""
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return np.array([[c, s], [-s, c]])


def sl2_scaling(log_scale: float) -> np.ndarray:
    """Hyperbolic x -> exp(log_scale) * x on the real coordinate."""
    return np.diag([np.exp(log_scale / 2.0), np.exp(-log_scale / 2.0)])


def sl2_translation(b: float) -> np.ndarray:
    """Parabolic-ish x -> x + b on the real coordinate."""
    return np.array([[1.0, b], [0.0, 1.0]])


def random_sl2(rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Deterministic (given rng) SL(2,R) element via KAN-style composition."""
    a1, a2 = rng.uniform(-np.pi, np.pi, size=2)
    s = rng.uniform(-scale, scale)
    return sl2_rotation(a1) @ sl2_scaling(s) @ sl2_rotation(a2)


def random_isometry(rng: np.random.Generator, scale: float = 0.5) -> Isometry:
    """Random element of SO+(2,2), boost sizes bounded by `scale`."""
    return isometry_from_psl_pair(random_sl2(rng, scale), random_sl2(rng, scale))
