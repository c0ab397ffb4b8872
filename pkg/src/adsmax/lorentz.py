"""Linear algebra of signature (2,2) and the basic objects of AdS^3.

The ambient space is R^4 with the bilinear form

    <x, y> = x1*y1 + x2*y2 - x3*y3 - x4*y4.

AdS^3 is the projectivized quadric {<x,x> = -1}.  Points are stored through a
canonical representative on the double cover: the lift with x3 > 0 when
x3 != 0, else x4 > 0.  Time orientation comes from the global field
tau(x) = (0, 0, -x4, x3), which is tangent, timelike, and declared
future-directed; a timelike tangent vector v at x is future iff
<v, tau(x)> < 0.

Cylindrical coordinates (r, theta, zeta) embed as

    (cos(theta) sinh(r), sin(theta) sinh(r), cos(zeta) cosh(r), sin(zeta) cosh(r)),

so the canonical chart covers zeta in (-pi/2, pi/2] and level sets of zeta are
totally geodesic spacelike planes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    ChartSingularity,
    DegenerateFrame,
    LightlikeDirection,
    NotSpacelike,
    NotTimelike,
    OutOfRange,
)

# Tolerance ladder: algebraic identities, composed operations, causal-type cutoff.
ATOL_ALGEBRAIC = 1e-12
ATOL_COMPOSED = 1e-9
LIGHTLIKE_EPS = 1e-10

SIGNATURE = np.array([1.0, 1.0, -1.0, -1.0])
G_METRIC = np.diag(SIGNATURE)

SPACELIKE = "spacelike"
TIMELIKE = "timelike"
LIGHTLIKE = "lightlike"


def vec4(x1: float, x2: float, x3: float, x4: float) -> np.ndarray:
    """Build a finite 4-vector; raises on NaN/inf components."""
    v = np.array([x1, x2, x3, x4], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("vector components must be finite")
    return v


def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Signature (2,2) inner product; broadcasts over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.sum(a * SIGNATURE * b, axis=-1)


def norm2(v: np.ndarray) -> np.ndarray:
    return inner(v, v)


def causal_type(v: np.ndarray, eps: float = LIGHTLIKE_EPS) -> str:
    """Classify a direction by the sign of <v,v>, lightlike within eps."""
    q = float(norm2(v))
    scale = float(np.dot(v, v))
    if scale == 0.0:
        raise ValueError("zero vector has no causal type")
    if abs(q) <= eps * scale:
        return LIGHTLIKE
    return SPACELIKE if q > 0 else TIMELIKE


def future_field(x: np.ndarray) -> np.ndarray:
    """Global future-directed timelike tangent field tau(x) = (0,0,-x4,x3)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    out[..., 2] = -x[..., 3]
    out[..., 3] = x[..., 2]
    return out


def is_future(v: np.ndarray, base: np.ndarray) -> np.ndarray:
    """True where the timelike tangent vector v at base is future-directed."""
    return inner(v, future_field(base)) < 0


def canonical_sign(rep: np.ndarray) -> np.ndarray:
    """Flip sign so x3 > 0 when x3 != 0, else x4 > 0 (projective class fixed)."""
    rep = np.asarray(rep, dtype=float)
    x3 = rep[..., 2]
    x4 = rep[..., 3]
    s = np.where(x3 != 0.0, np.sign(x3), np.sign(x4))
    s = np.where(s == 0.0, 1.0, s)
    return rep * s[..., None]


@dataclass(frozen=True)
class AdSPoint:
    """Projective point of the quadric <x,x> = -1, canonical representative."""

    rep: np.ndarray

    @classmethod
    def from_array(cls, x) -> "AdSPoint":
        x = np.asarray(x, dtype=float)
        q = float(norm2(x))
        if q >= -ATOL_ALGEBRAIC:
            raise NotTimelike(f"<x,x> = {q:.3e} is not negative; not an AdS point")
        rep = canonical_sign(x / np.sqrt(-q))
        rep.setflags(write=False)
        return cls(rep)

    def projectively_equal(self, other: "AdSPoint", atol: float = ATOL_COMPOSED) -> bool:
        d = min(np.max(np.abs(self.rep - other.rep)), np.max(np.abs(self.rep + other.rep)))
        return bool(d <= atol)

    def __repr__(self) -> str:  # pragma: no cover
        return f"AdSPoint({np.array2string(self.rep, precision=6)})"


def ads_point(x1, x2, x3, x4) -> AdSPoint:
    return AdSPoint.from_array(vec4(x1, x2, x3, x4))


@dataclass(frozen=True)
class TangentVector:
    """Tangent vector at an AdS point: <base, dir> = 0."""

    base: AdSPoint
    dir: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.dir, dtype=float)
        if abs(float(inner(self.base.rep, d))) > 1e-8 * max(1.0, float(np.linalg.norm(d))):
            raise ValueError("direction is not tangent to the quadric at base")
        object.__setattr__(self, "dir", d)

    @property
    def kind(self) -> str:
        return causal_type(self.dir)

    def unit(self) -> "TangentVector":
        q = float(norm2(self.dir))
        if abs(q) <= LIGHTLIKE_EPS * float(np.dot(self.dir, self.dir)):
            raise LightlikeDirection("cannot normalize a lightlike direction")
        return TangentVector(self.base, self.dir / np.sqrt(abs(q)))


def tangent_projection(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Project ambient v onto the tangent space of the quadric at x (<x,x>=-1)."""
    return v + inner(v, x)[..., None] * x if v.ndim > 1 else v + float(inner(v, x)) * x


# --- geodesics ---------------------------------------------------------------


@dataclass(frozen=True)
class Geodesic:
    """Unit-speed geodesic through start with tangent direction."""

    start: AdSPoint
    direction: TangentVector

    def __post_init__(self):
        k = self.direction.kind
        if k == LIGHTLIKE:
            raise LightlikeDirection("geodesic direction must not be lightlike")


def geodesic(start: AdSPoint, direction: np.ndarray) -> Geodesic:
    t = TangentVector(start, np.asarray(direction, dtype=float)).unit()
    return Geodesic(start, t)


def geodesic_eval(g: Geodesic, t) -> np.ndarray:
    """Representative of g(t): cosh/sinh for spacelike, cos/sin for timelike.

    Timelike geodesics are closed with period 2*pi on the double cover;
    returns raw representatives (not canonicalized) so the curve is smooth.
    """
    t = np.asarray(t, dtype=float)
    p = g.start.rep
    v = g.direction.dir
    if g.direction.kind == SPACELIKE:
        return np.cosh(t)[..., None] * p + np.sinh(t)[..., None] * v if t.ndim else np.cosh(t) * p + np.sinh(t) * v
    return np.cos(t)[..., None] * p + np.sin(t)[..., None] * v if t.ndim else np.cos(t) * p + np.sin(t) * v


class Separation(NamedTuple):
    kind: str
    value: float


def separation(p: AdSPoint, q: AdSPoint) -> Separation:
    """Geodesic separation: cosh(l) = |<p,q>| spacelike, cos(l) = |<p,q>| timelike."""
    c = abs(float(inner(p.rep, q.rep)))
    if c > 1.0 + LIGHTLIKE_EPS:
        return Separation(SPACELIKE, float(np.arccosh(c)))
    if c < 1.0 - LIGHTLIKE_EPS:
        return Separation(TIMELIKE, float(np.arccos(c)))
    return Separation(LIGHTLIKE, 0.0)


# --- planes and duality -------------------------------------------------------


@dataclass(frozen=True)
class Plane:
    """Totally geodesic plane x^perp, stored through its dual vector.

    kind 'spacelike' iff <dual,dual> < 0 (dual point inside the quadric),
    'lightlike' iff null, else 'timelike'.
    """

    dual: np.ndarray

    @classmethod
    def from_dual(cls, x) -> "Plane":
        x = np.asarray(x, dtype=float)
        q = float(norm2(x))
        s = float(np.dot(x, x))
        if s == 0.0:
            raise ValueError("zero dual vector")
        if abs(q) > LIGHTLIKE_EPS * s:
            x = x / np.sqrt(abs(q))
        d = canonical_sign(x)
        d.setflags(write=False)
        return cls(d)

    @property
    def kind(self) -> str:
        # the induced metric on dual^perp is opposite in type to the dual
        dual_kind = causal_type(self.dual)
        if dual_kind == TIMELIKE:
            return SPACELIKE
        if dual_kind == SPACELIKE:
            return TIMELIKE
        return LIGHTLIKE

    def contains(self, p: AdSPoint, atol: float = ATOL_COMPOSED) -> bool:
        return abs(float(inner(self.dual, p.rep))) <= atol


def dual_plane(x: AdSPoint) -> Plane:
    """Dual spacelike plane of a point (polarity of the quadric)."""
    return Plane.from_dual(x.rep)


def dual_point(P: Plane) -> AdSPoint:
    if P.kind != SPACELIKE:
        raise NotSpacelike("only spacelike planes have an AdS dual point")
    return AdSPoint.from_array(P.dual)


def _point_on_plane(P: Plane) -> AdSPoint:
    """Some point of a spacelike plane: the most timelike direction in dual^perp.

    The induced form on the orthogonal complement of a unit timelike dual has
    signature (+, +, -); the eigenvector of its Gram matrix with the smallest
    eigenvalue is the timelike axis, for any boost of the dual.
    """
    d = P.dual
    basis = []
    for k in np.argsort(np.abs(d)):  # drop the axis most parallel to d last
        seed = np.zeros(4)
        seed[k] = 1.0
        y = seed + float(inner(seed, d)) * d
        for b in basis:
            y = y - np.dot(y, b) * b
        n = np.linalg.norm(y)
        if n > 1e-9:
            basis.append(y / n)
        if len(basis) == 3:
            break
    gram = np.array([[float(inner(a, b)) for b in basis] for a in basis])
    w, v = np.linalg.eigh(gram)
    y = sum(c * b for c, b in zip(v[:, 0], basis))
    if w[0] >= -1e-12:  # pragma: no cover - spacelike planes always pass
        raise NotSpacelike("no timelike direction found in the plane")
    return AdSPoint.from_array(y)


def plane_past_dual(P: Plane) -> np.ndarray:
    """Representative of the dual point lying in the past of the plane.

    Both lifts of the dual are at timelike distance pi/2 from P along its
    normal geodesics; the past one d satisfies <d, tau(y)> > 0 at y in P.
    """
    if P.kind != SPACELIKE:
        raise NotSpacelike("dual sides only defined for spacelike planes")
    y = _point_on_plane(P)
    d = P.dual
    return d if float(inner(d, future_field(y.rep))) > 0 else -d


def point_plane_distance(x: AdSPoint, P: Plane) -> float:
    """Signed timelike distance to a spacelike plane, positive on the future side.

    sin(d) = <x, past-dual(P)>; the dual points themselves sit at +-pi/2.
    """
    s = float(inner(x.rep, plane_past_dual(P)))
    if abs(s) > 1.0 + ATOL_COMPOSED:
        raise OutOfRange(f"point not timelike-connected to the plane (sin d = {s:.6f})")
    return float(np.arcsin(np.clip(s, -1.0, 1.0)))


def hyperbolic_angle(v: TangentVector, w: TangentVector) -> float:
    """Boost angle between unit timelike vectors: cosh(a) = |<v,w>|."""
    if v.kind != TIMELIKE or w.kind != TIMELIKE:
        raise NotTimelike("hyperbolic angle needs timelike vectors")
    c = abs(float(inner(v.unit().dir, w.unit().dir)))
    return float(np.arccosh(max(c, 1.0)))


# --- cylindrical chart --------------------------------------------------------


class CylCoords(NamedTuple):
    r: float
    theta: float
    zeta: float


def cyl_embed_array(r, theta, zeta) -> np.ndarray:
    """Embedding of cylindrical coordinates; broadcasts componentwise."""
    r, theta, zeta = np.broadcast_arrays(*map(np.asarray, (r, theta, zeta)))
    return np.stack(
        [
            np.cos(theta) * np.sinh(r),
            np.sin(theta) * np.sinh(r),
            np.cos(zeta) * np.cosh(r),
            np.sin(zeta) * np.cosh(r),
        ],
        axis=-1,
    )


def cyl_embed(c: CylCoords) -> AdSPoint:
    if c.r < 0:
        raise OutOfRange("radius must be nonnegative")
    return AdSPoint.from_array(cyl_embed_array(c.r, c.theta, c.zeta))


def cyl_coords(x: AdSPoint) -> CylCoords:
    """Inverse chart on the canonical representative; theta = 0 at the axis.

    The axis r = 0 is the chart's singular locus (ChartSingularity documented:
    theta is returned as 0 by convention rather than raising).
    """
    v = x.rep
    rho = float(np.hypot(v[0], v[1]))
    r = float(np.arcsinh(rho))
    theta = float(np.arctan2(v[1], v[0])) if rho > 0 else 0.0
    zeta = float(np.arctan2(v[3], v[2]))
    return CylCoords(r, theta, zeta)


# --- isometries ---------------------------------------------------------------


@dataclass(frozen=True)
class Isometry:
    """Element of SO+(2,2) acting on representatives by matrix multiplication."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float)
        gram = m.T @ G_METRIC @ m
        if np.max(np.abs(gram - G_METRIC)) > 1e-8:
            raise ValueError("matrix does not preserve the (2,2) form")
        if np.linalg.det(m) < 0:
            raise ValueError("matrix reverses orientation")
        # the timelike block of a pseudo-orthogonal matrix satisfies
        # D^T D = I + B^T B, so det(D) != 0 and its sign marks the component
        if np.linalg.det(m[2:, 2:]) < 0:
            raise ValueError("matrix reverses time orientation")
        object.__setattr__(self, "m", m)

    def apply(self, x: AdSPoint) -> AdSPoint:
        return AdSPoint.from_array(self.m @ x.rep)

    def apply_vec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return v @ self.m.T

    def apply_plane(self, P: Plane) -> Plane:
        return Plane.from_dual(self.m @ P.dual)

    def compose(self, other: "Isometry") -> "Isometry":
        return Isometry(self.m @ other.m)

    def inverse(self) -> "Isometry":
        return Isometry(G_METRIC @ self.m.T @ G_METRIC)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return self.compose(other)


def cross4(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Euclidean 4D generalized cross product, orthogonal to a, b, c."""
    m = np.stack([a, b, c])
    out = np.empty(4)
    cols = [0, 1, 2, 3]
    sign = 1.0
    for k in range(4):
        sub = m[:, [j for j in cols if j != k]]
        out[k] = sign * np.linalg.det(sub)
        sign = -sign
    return out


def _complete_frame(p: np.ndarray, n: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Fourth frame vector: spacelike unit, <.>-orthogonal to p, n, u, det +1."""
    w = G_METRIC @ cross4(p, n, u)
    q = float(norm2(w))
    if q <= 1e-10:
        raise DegenerateFrame("frame does not span a nondegenerate 3-space")
    v = w / np.sqrt(q)
    F = np.column_stack([u, v, p, n])
    if np.linalg.det(F) < 0:
        v = -v
        F = np.column_stack([u, v, p, n])
    return F


def isometry_from_frames(frame_a, frame_b) -> Isometry:
    """Unique isometry in SO+(2,2) mapping one orthonormal frame to another.

    A frame is (point, future unit timelike normal, unit spacelike tangent);
    both frames are completed to a basis with Gram diag(1,1,-1,-1) and the
    change of basis is returned.  DegenerateFrame if the Gram test fails.
    """
    frames = []
    for (p, n, u) in (frame_a, frame_b):
        pr, nr, ur = p.rep, np.asarray(n, dtype=float), np.asarray(u, dtype=float)
        gram = np.array(
            [
                [float(inner(a, b)) for b in (ur, pr, nr)]
                for a in (ur, pr, nr)
            ]
        )
        if np.max(np.abs(gram - np.diag([1.0, -1.0, -1.0]))) > 1e-8:
            raise DegenerateFrame("frame vectors are not orthonormal for <,>")
        if not bool(is_future(nr, pr)):
            raise DegenerateFrame("frame normal must be future-directed")
        frames.append(_complete_frame(pr, nr, ur))
    fa, fb = frames
    return Isometry(fb @ G_METRIC @ fa.T @ G_METRIC)
