"""Orientation-preserving circle homeomorphisms and their graphs.

Maps act on RP^1 in three interchangeable coordinates: angle theta in
(-pi, pi], real tan-half-angle x = tan(theta/2), and homogeneous pairs
[p : q].  All evaluation funnels through the pair form, which is the only
one that stays exact at infinity.

Every constructed map is validated on a 2048-point grid: increments must be
strictly positive and wind once around the circle, otherwise NotMonotone is
raised.  The same grid pass caches the centered displacement offset used by
`lift`, the continuous branch of the map on the universal cover.

The graph of a homeomorphism phi sits on the boundary torus with null
coordinates theta_l (left ruling) and theta_r (right ruling) via
theta_r = phi(theta_l).  In cylinder coordinates alpha = (theta_l+theta_r)/2
(direction) and beta = (theta_l-theta_r)/2 (height), `boundary_height`
returns the height of the graph over a given direction; it is the Dirichlet
data consumed by the surface solver.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from .errors import NotMonotone, RootNotBracketed
from .mobius import (
    TWO_PI,
    Mobius,
    angle_to_homogeneous,
    homogeneous_to_angle,
    real_to_homogeneous,
    wrap_angle,
)

_GRID_N = 2048


def _pair_to_real(pq):
    with np.errstate(divide="ignore", invalid="ignore"):
        val = pq[..., 0] / pq[..., 1]
    val = np.where(pq[..., 1] == 0.0, np.inf, val)
    return val if val.ndim else float(val)


def _normalize_pairs(pq):
    return pq / np.linalg.norm(pq, axis=-1, keepdims=True)


class CircleHomeo:
    """Base class: concrete variants implement `_pair_raw`.

    Construction runs the monotonicity / winding check and caches the
    centered lift offset.  Instances are immutable in practice (no public
    mutating API) and cheap to evaluate afterwards.
    """

    def __init__(self):
        self._validate_and_center()

    # -- variant hook -------------------------------------------------

    def _pair_raw(self, pq: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- evaluation ---------------------------------------------------

    def pair(self, pq: np.ndarray) -> np.ndarray:
        """Apply to homogeneous pairs, last axis 2; output is row-normalized."""
        out = self._pair_raw(np.asarray(pq, dtype=float))
        return _normalize_pairs(out)

    def angle(self, theta):
        """Apply as a circle map on angles in (-pi, pi]."""
        return homogeneous_to_angle(self.pair(angle_to_homogeneous(theta)))

    def real(self, x):
        """Apply in the tan-half-angle coordinate (accepts +-inf)."""
        return _pair_to_real(self.pair(real_to_homogeneous(x)))

    def __call__(self, theta):
        return self.angle(theta)

    # -- lift and inverse ----------------------------------------------

    def _validate_and_center(self):
        thetas = -np.pi + TWO_PI * (np.arange(_GRID_N) + 1.0) / _GRID_N
        psi = self.angle(thetas)
        dpsi = np.mod(np.diff(psi, append=psi[:1] + TWO_PI), TWO_PI)
        if np.any(dpsi <= 1e-13):
            raise NotMonotone("map is not strictly increasing on the 2048 grid")
        if abs(dpsi.sum() - TWO_PI) > 1e-6:
            raise NotMonotone("map does not wind once around the circle")
        delta = np.empty(_GRID_N)
        delta[0] = wrap_angle(psi[0] - thetas[0])
        increments = dpsi - np.diff(thetas, append=thetas[:1] + TWO_PI)
        delta[1:] = delta[0] + np.cumsum(increments[:-1])
        osc = delta.max() - delta.min()
        if osc >= TWO_PI - 1e-9:
            raise NotMonotone("displacement oscillation reaches a full turn")
        self._lift_center = 0.5 * (delta.max() + delta.min())

    def lift(self, theta):
        """Continuous increasing branch on the cover, lift(t + 2pi) = lift(t) + 2pi.

        The branch is centered: displacement stays within pi of its midrange
        value, which pins the additive constant uniquely.
        """
        theta = np.asarray(theta, dtype=float)
        c = self._lift_center
        disp = c + wrap_angle(self.angle(theta) - theta - c)
        out = theta + disp
        return out if out.ndim else float(out)

    def inverse_angle(self, theta):
        """Angle s with self(s) = theta; scalar or array input."""
        theta = np.asarray(theta, dtype=float)
        flat = np.atleast_1d(theta).ravel()
        out = np.array([self._inverse_scalar(t) for t in flat])
        out = out.reshape(np.atleast_1d(theta).shape)
        return out if theta.ndim else float(out[()])

    def _inverse_scalar(self, theta: float) -> float:
        base = self.lift(-np.pi)
        y = base + np.mod(theta - base, TWO_PI)
        f = lambda s: self.lift(s) - y
        lo, hi = -np.pi, np.pi
        flo, fhi = f(lo), f(hi)
        if flo > 0 or fhi < 0:
            raise RootNotBracketed("inverse target outside lift range")
        if flo == 0.0:
            return -np.pi
        root = brentq(f, lo, hi, xtol=1e-13)
        return float(wrap_angle(root))


class MobiusHomeo(CircleHomeo):
    """Projective circle map; the only family with cross-ratio norm zero."""

    def __init__(self, m: Mobius):
        self.m = m
        super().__init__()

    def _pair_raw(self, pq):
        return pq @ self.m.matrix.T

    def inverse_angle(self, theta):
        pq = angle_to_homogeneous(theta)
        return homogeneous_to_angle(pq @ self.m.inverse().matrix.T)


class ShearHomeo(CircleHomeo):
    """Piecewise-Mobius shear: x <= 0 fixed, x >= 0 scaled by e^t.

    `axis` conjugates the standard shear (axis endpoints 0 and infinity in
    the real coordinate) to an arbitrary geodesic: the map is
    axis o shear_t o axis^{-1}.
    """

    def __init__(self, t: float, axis: Mobius | None = None):
        self.t = float(t)
        self.axis = Mobius.identity() if axis is None else axis
        self._ax_t = self.axis.matrix.T
        self._ax_inv_t = self.axis.inverse().matrix.T
        self._scale = np.array([np.exp(self.t / 2.0), np.exp(-self.t / 2.0)])
        self._inv = None
        super().__init__()

    def _pair_raw(self, pq):
        y = pq @ self._ax_inv_t
        scale = np.where((y[..., 0] * y[..., 1] > 0.0)[..., None], self._scale, 1.0)
        return (y * scale) @ self._ax_t

    def inverse_angle(self, theta):
        if self._inv is None:
            self._inv = ShearHomeo(-self.t, self.axis)
        return self._inv.angle(theta)


class PowerHomeo(CircleHomeo):
    """Signed power map x -> sign(x) |x|^a, a > 0; fixes 0, +-1, infinity."""

    def __init__(self, a: float):
        if not (a > 0):
            raise ValueError("power exponent must be positive")
        self.a = float(a)
        self._inv = None
        super().__init__()

    def _pair_raw(self, pq):
        return np.sign(pq) * np.abs(pq) ** self.a

    def inverse_angle(self, theta):
        if self._inv is None:
            self._inv = PowerHomeo(1.0 / self.a)
        return self._inv.angle(theta)


class SampledHomeo(CircleHomeo):
    """Monotone interpolation through angle knots (theta_i -> value_i).

    Knots are sorted, values unwrapped to a strictly increasing branch, and a
    periodic monotone piecewise-cubic interpolant is built; the C^1 smoothness
    keeps the downstream boundary-height root solve well behaved.
    """

    def __init__(self, knots_theta: Sequence[float], knots_value: Sequence[float]):
        theta = wrap_angle(np.asarray(knots_theta, dtype=float))
        value = wrap_angle(np.asarray(knots_value, dtype=float))
        if theta.ndim != 1 or theta.shape != value.shape or theta.size < 4:
            raise ValueError("need at least 4 knot pairs")
        order = np.argsort(theta)
        theta, value = theta[order], value[order]
        if np.any(np.diff(theta) <= 0):
            raise NotMonotone("duplicate knot angles")
        steps = np.mod(np.diff(value, append=value[:1] + TWO_PI), TWO_PI)
        if np.any(steps <= 0) or abs(steps.sum() - TWO_PI) > 1e-9:
            raise NotMonotone("knot values are not cyclically increasing")
        lift_vals = value[0] + np.concatenate([[0.0], np.cumsum(steps[:-1])])
        pad = 3
        t_ext = np.concatenate([theta[-pad:] - TWO_PI, theta, theta[:pad] + TWO_PI])
        v_ext = np.concatenate(
            [lift_vals[-pad:] - TWO_PI, lift_vals, lift_vals[:pad] + TWO_PI]
        )
        self._t0 = theta[0]
        self._interp = PchipInterpolator(t_ext, v_ext)
        super().__init__()

    def _pair_raw(self, pq):
        theta = homogeneous_to_angle(pq)
        k = np.floor((theta - self._t0) / TWO_PI)
        val = self._interp(theta - TWO_PI * k) + TWO_PI * k
        return angle_to_homogeneous(val)


class ComposeHomeo(CircleHomeo):
    """Composition, first entry outermost: Compose(a, b, c) = a o b o c."""

    def __init__(self, parts: Sequence[CircleHomeo]):
        if not parts:
            raise ValueError("empty composition")
        self.parts = tuple(parts)
        super().__init__()

    def _pair_raw(self, pq):
        for part in reversed(self.parts):
            pq = part.pair(pq)
        return pq

    def inverse_angle(self, theta):
        theta = np.asarray(theta, dtype=float)
        for part in self.parts:
            theta = part.inverse_angle(theta)
        return theta


def identity_homeo() -> MobiusHomeo:
    return MobiusHomeo(Mobius.identity())


def homeo_eval(phi: CircleHomeo, theta):
    """Evaluate a circle homeomorphism on angles."""
    return phi.angle(theta)


def homeo_inverse(phi: CircleHomeo, theta):
    """Evaluate the inverse map on angles (closed form where available)."""
    return phi.inverse_angle(theta)


def boundary_height(phi: CircleHomeo, theta) -> float:
    """Height of the graph of phi on the boundary torus over direction theta.

    Solves theta - zeta = lift(theta + zeta) for zeta in (-pi/2, pi/2); the
    left side is the right-ruling coordinate of the point at direction theta
    and height zeta, the right side the image of its left-ruling coordinate.
    The bracket fails exactly when the graph leaves the height window, which
    for a valid homeomorphism means the input was not one.
    """
    theta_arr = np.asarray(theta, dtype=float)
    if theta_arr.ndim:
        return np.array([boundary_height(phi, t) for t in theta_arr.ravel()]).reshape(
            theta_arr.shape
        )
    th = float(theta_arr)

    def g(zeta):
        return th - zeta - phi.lift(th + zeta)

    half = np.pi / 2.0 - 1e-12
    glo, ghi = g(-half), g(half)
    if glo < 0 or ghi > 0:
        raise RootNotBracketed("graph height leaves (-pi/2, pi/2)")
    if glo == 0.0:
        return -half
    return float(brentq(g, -half, half, xtol=1e-13))
