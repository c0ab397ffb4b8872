"""Boundary curves of homeomorphism graphs and their convex hulls.

The boundary of the model is a torus of null directions
xi = (cos alpha, sin alpha, cos beta, sin beta) with ruling coordinates
theta_l = alpha + beta and theta_r = alpha - beta.  The graph of a circle
homeomorphism phi is the curve theta_r = phi(theta_l).

Hulls are computed in the affine chart x3 = 1 with coordinates
(x, y, z) = (x1/x3, x2/x3, x4/x3), where the model interior is the solid
region x^2 + y^2 < 1 + z^2.  For any two distinct points of an increasing
graph, <xi, eta> = -2 sin(d_l/2) sin(d_r/2) < 0 with both ruling gaps in
(0, 2pi); every convex combination therefore has negative norm, so the whole
chart hull lies inside the model and chart convexity agrees with projective
convexity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence

import numpy as np
from scipy.spatial import ConvexHull as _QHull

from .errors import ChartSingularity, ClassificationAmbiguous, TooFewPoints
from .homeo import CircleHomeo
from .lorentz import AdSPoint
from .mobius import TWO_PI, wrap_angle

PAST, FUTURE, LATERAL = "past", "future", "lateral"

# relative timelike-ness of a support plane above which classification gives up
AMBIGUOUS_TOL = 1e-2
# below this, a support plane counts as spacelike-or-lightlike (past/future side)
LIGHTLIKE_REL_TOL = 1e-9


@dataclass(frozen=True)
class BoundaryPoint:
    """Null direction on the boundary torus, stored by (direction, height)."""

    alpha: float
    beta: float

    @property
    def rep(self) -> np.ndarray:
        a, b = self.alpha, self.beta
        return np.array([np.cos(a), np.sin(a), np.cos(b), np.sin(b)])

    @property
    def theta_l(self) -> float:
        return float(wrap_angle(self.alpha + self.beta))

    @property
    def theta_r(self) -> float:
        return float(wrap_angle(self.alpha - self.beta))


def project_left(xi: BoundaryPoint) -> float:
    return xi.theta_l


def project_right(xi: BoundaryPoint) -> float:
    return xi.theta_r


def boundary_from_graph(theta_l: float, theta_r: float) -> BoundaryPoint:
    """Boundary point with the given ruling coordinates."""
    alpha = wrap_angle(0.5 * (theta_l + theta_r))
    beta = wrap_angle(0.5 * (theta_l - theta_r))
    return BoundaryPoint(float(alpha), float(beta))


def chart_of_rep(rep: np.ndarray) -> np.ndarray:
    """Affine chart (x1/x3, x2/x3, x4/x3); rejects near-zero x3."""
    rep = np.asarray(rep, dtype=float)
    x3 = rep[..., 2]
    if np.any(np.abs(x3) < 1e-12):
        raise ChartSingularity("point at the chart plane x3 = 0")
    return np.stack([rep[..., 0] / x3, rep[..., 1] / x3, rep[..., 3] / x3], axis=-1)


def chart_lift(xyz: np.ndarray) -> np.ndarray:
    """Unit-normalized interior lift (x, y, 1, z)/sqrt(1 + z^2 - x^2 - y^2)."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    s = 1.0 + z * z - x * x - y * y
    if np.any(s <= 0):
        raise ChartSingularity("chart point not interior to the model")
    w = 1.0 / np.sqrt(s)
    return np.stack([x * w, y * w, w, z * w], axis=-1)


def future_chart_dir(xyz: np.ndarray) -> np.ndarray:
    """Pushforward of the future field into the chart, up to positive scale."""
    xyz = np.asarray(xyz, dtype=float)
    x, y, z = xyz[..., 0], xyz[..., 1], xyz[..., 2]
    return np.stack([x * z, y * z, 1.0 + z * z], axis=-1)


@dataclass(frozen=True)
class BoundaryCurve:
    """Ordered samples of a graph curve with their chart images."""

    points: tuple
    chart_points: np.ndarray

    @classmethod
    def from_points(cls, points: Sequence[BoundaryPoint]) -> "BoundaryCurve":
        reps = np.array([p.rep for p in points])
        chart = chart_of_rep(reps)
        chart.setflags(write=False)
        return cls(points=tuple(points), chart_points=chart)

    def __len__(self) -> int:
        return len(self.points)


def graph_samples(phi: CircleHomeo, n: int) -> BoundaryCurve:
    """Sample the graph of phi at n equispaced left-ruling angles.

    Heights come from the centered lift, so the curve sits on the branch with
    small displacement; consecutive height increments are checked against the
    direction increments (achronality).
    """
    if n < 8:
        raise TooFewPoints("need at least 8 graph samples")
    s = -np.pi + TWO_PI * np.arange(n) / n
    lifted = phi.lift(s)
    alpha = 0.5 * (s + lifted)
    beta = 0.5 * (s - lifted)
    d_alpha = np.diff(alpha, append=alpha[0] + TWO_PI)
    d_beta = np.diff(beta, append=beta[0])
    if np.any(np.abs(d_beta) > d_alpha + 1e-12):
        raise ClassificationAmbiguous("graph samples violate achronality")
    pts = [BoundaryPoint(float(a), float(b)) for a, b in zip(alpha, beta)]
    return BoundaryCurve.from_points(pts)


def identity_curve(n: int) -> BoundaryCurve:
    s = -np.pi + TWO_PI * np.arange(max(n, 8)) / max(n, 8)
    return BoundaryCurve.from_points([BoundaryPoint(float(a), 0.0) for a in s])


def save_curve(path, curve: BoundaryCurve) -> None:
    """Write one boundary point per row: theta_l theta_r."""
    rows = np.array([[p.theta_l, p.theta_r] for p in curve.points])
    np.savetxt(path, rows, header="theta_l theta_r")


def load_curve(path) -> BoundaryCurve:
    rows = np.loadtxt(Path(path), ndmin=2)
    pts = [boundary_from_graph(tl, tr) for tl, tr in rows]
    return BoundaryCurve.from_points(pts)


@dataclass
class ConvexHull3:
    """Triangulated hull in the chart; facet planes n.x = c with outward n."""

    points: np.ndarray
    vertices: np.ndarray
    simplices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    degenerate: bool
    facet_class: List[str] = field(default_factory=list)


def convex_hull(points: np.ndarray) -> ConvexHull3:
    """Hull of chart points; coplanar input yields a flagged flat hull."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 4:
        raise TooFewPoints("hull needs at least 4 chart points")
    centered = pts - pts.mean(axis=0)
    scale = max(np.abs(centered).max(), 1e-30)
    thickness = np.linalg.svd(centered, compute_uv=False)[-1] / scale
    if thickness < 1e-9:
        return ConvexHull3(
            points=pts,
            vertices=np.arange(pts.shape[0]),
            simplices=np.empty((0, 3), dtype=int),
            normals=np.empty((0, 3)),
            offsets=np.empty(0),
            degenerate=True,
        )
    qh = _QHull(pts)
    return ConvexHull3(
        points=pts,
        vertices=qh.vertices,
        simplices=qh.simplices,
        normals=qh.equations[:, :3],
        offsets=-qh.equations[:, 3],
        degenerate=False,
    )


def _facet_centroids(h: ConvexHull3) -> np.ndarray:
    return h.points[h.simplices].mean(axis=1)


def classify_facets(h: ConvexHull3) -> List[str]:
    """Assign past/future/lateral by the causal type of each support plane.

    A facet whose support plane is spacelike (or lightlike within tolerance)
    is past when its outward normal points pastward, future when futureward.
    Mildly timelike support planes are slivers along the curve seam and count
    as lateral; strongly timelike ones mean the input was not achronal.
    """
    if h.degenerate:
        h.facet_class = [LATERAL] * len(h.simplices)
        return h.facet_class
    n = h.normals
    c = h.offsets
    # dual vector of the chart plane n.(x,y,z) = c is (n1, n2, c, -n3)
    dual_sq = n[:, 0] ** 2 + n[:, 1] ** 2 - c**2 - n[:, 2] ** 2
    scale = n[:, 0] ** 2 + n[:, 1] ** 2 + c**2 + n[:, 2] ** 2
    rel = dual_sq / scale
    sense = np.einsum("ij,ij->i", n, future_chart_dir(_facet_centroids(h)))
    out: List[str] = []
    for k in range(len(h.simplices)):
        if rel[k] >= AMBIGUOUS_TOL:
            raise ClassificationAmbiguous(
                f"facet {k} has a strongly timelike support plane (rel={rel[k]:.3e})"
            )
        if rel[k] > LIGHTLIKE_REL_TOL:
            out.append(LATERAL)
        else:
            out.append(PAST if sense[k] < 0 else FUTURE)
    h.facet_class = out
    return out


def hull_lift_points(h: ConvexHull3, facet: int, bary: np.ndarray) -> AdSPoint:
    """Interior model point at barycentric coordinates of a hull facet."""
    tri = h.points[h.simplices[facet]]
    xyz = np.asarray(bary, dtype=float) @ tri
    return AdSPoint.from_array(chart_lift(xyz))
