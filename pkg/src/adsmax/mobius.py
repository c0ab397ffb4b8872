"""Mobius maps of RP^1 and cross-ratios.

Circle points are coordinatized two ways: by an angle theta in (-pi, pi], or
by the real tan-half-angle coordinate x = tan(theta/2) with theta = pi at
infinity.  Internally most computations run on homogeneous pairs
[p : q] = [sin(theta/2) : cos(theta/2)], which avoids overflow near infinity.

cross_ratio follows the convention

    cr(z1, z2, z3, z4) = (z4 - z1)(z3 - z2) / ((z2 - z1)(z3 - z4)),

so cr(-1, 0, 1, inf) = -1; quadruples with cross-ratio -1 are called
symmetric (endpoints of two orthogonal hyperbolic geodesics).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateQuadruple

TWO_PI = 2.0 * np.pi


def wrap_angle(theta):
    """Reduce angles to (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    out = np.mod(-theta + np.pi, TWO_PI)
    out = np.pi - out
    return out if out.ndim else float(out)


def angle_to_real(theta):
    """tan(theta/2), with the point theta = pi sent to +inf."""
    theta = np.asarray(theta, dtype=float)
    with np.errstate(divide="ignore"):
        out = np.tan(theta / 2.0)
    return out if out.ndim else float(out)


def real_to_angle(x):
    """Inverse of angle_to_real; accepts +-inf."""
    x = np.asarray(x, dtype=float)
    out = 2.0 * np.arctan(x)
    out = np.where(np.isinf(x), np.pi, out)
    return out if out.ndim else float(out)


def angle_to_homogeneous(theta):
    """Angles -> homogeneous pairs (sin(theta/2), cos(theta/2)); last axis 2."""
    theta = np.asarray(theta, dtype=float)
    return np.stack([np.sin(theta / 2.0), np.cos(theta / 2.0)], axis=-1)


def homogeneous_to_angle(pq):
    """Pairs -> angles in (-pi, pi] (projective classes collapse mod 2*pi)."""
    pq = np.asarray(pq, dtype=float)
    out = wrap_angle(2.0 * np.arctan2(pq[..., 0], pq[..., 1]))
    return out


def real_to_homogeneous(x):
    x = np.asarray(x, dtype=float)
    p = np.where(np.isinf(x), 1.0, x)
    q = np.where(np.isinf(x), 0.0, 1.0)
    return np.stack([p, q], axis=-1)


@dataclass(frozen=True)
class Mobius:
    """Orientation-preserving Mobius map x -> (a x + b)/(c x + d), ad - bc = 1."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if not np.isfinite(det) or det <= 0:
            raise ValueError("Mobius determinant must be positive and finite")
        s = 1.0 / np.sqrt(det)
        for name, val in zip(("a", "b", "c", "d"), (self.a, self.b, self.c, self.d)):
            object.__setattr__(self, name, val * s)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @classmethod
    def from_matrix(cls, m) -> "Mobius":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def identity(cls) -> "Mobius":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def rotation(cls, angle: float) -> "Mobius":
        """Rigid rotation of the circle by `angle` (elliptic about the disk center)."""
        c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
        return cls(c, s, -s, c)

    @classmethod
    def scaling(cls, log_scale: float) -> "Mobius":
        return cls(np.exp(log_scale / 2.0), 0.0, 0.0, np.exp(-log_scale / 2.0))

    @classmethod
    def translation(cls, t: float) -> "Mobius":
        return cls(1.0, t, 0.0, 1.0)

    def __call__(self, x):
        """Evaluate on the real coordinate (accepts +-inf)."""
        pq = real_to_homogeneous(x)
        out = pq @ self.matrix.T
        with np.errstate(divide="ignore", invalid="ignore"):
            val = out[..., 0] / out[..., 1]
        val = np.where(out[..., 1] == 0.0, np.inf, val)
        return val if val.ndim else float(val)

    def on_angle(self, theta):
        """Evaluate as a circle map on angles in (-pi, pi]."""
        pq = angle_to_homogeneous(theta)
        return homogeneous_to_angle(pq @ self.matrix.T)

    def inverse(self) -> "Mobius":
        return Mobius(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "Mobius") -> "Mobius":
        return Mobius.from_matrix(self.matrix @ other.matrix)

    @classmethod
    def from_three_angles(cls, src, dst) -> "Mobius":
        """Unique Mobius sending three circle points to three circle points.

        Both triples must be in the same cyclic order (orientation preserved);
        raises DegenerateQuadruple on coincident entries.
        """
        ms = _normalize_triple(np.asarray(src, dtype=float))
        md = _normalize_triple(np.asarray(dst, dtype=float))
        m = np.linalg.inv(md) @ ms
        if np.linalg.det(m) <= 0:
            raise ValueError("triples have opposite cyclic orientation")
        return cls.from_matrix(m)


def _normalize_triple(angles: np.ndarray) -> np.ndarray:
    """Matrix sending three homogeneous points to the fixed triple 0, -1, inf.

    The target triple is the same for every input, so composing one such
    matrix with the inverse of another matches the source points to the
    destination points one by one.
    """
    pq = angle_to_homogeneous(angles)
    d01 = _det2(pq[0], pq[1])
    d12 = _det2(pq[1], pq[2])
    d02 = _det2(pq[0], pq[2])
    if min(abs(d01), abs(d12), abs(d02)) < 1e-14:
        raise DegenerateQuadruple("triple contains coincident points")
    row_top = np.array([-pq[0][1], pq[0][0]]) * d12
    row_bot = np.array([-pq[2][1], pq[2][0]]) * d01
    return np.vstack([row_top, row_bot])


class Quadruple(NamedTuple):
    """Ordered quadruple on RP^1 in the real coordinate; +-inf allowed."""

    z1: float
    z2: float
    z3: float
    z4: float

    @classmethod
    def from_angles(cls, angles) -> "Quadruple":
        return cls(*(float(angle_to_real(t)) for t in np.asarray(angles, dtype=float)))

    def angles(self) -> np.ndarray:
        return real_to_angle(self.reals())

    def reals(self) -> np.ndarray:
        return np.array(self, dtype=float)


def _det2(a, b) -> float:
    return float(a[0] * b[1] - b[0] * a[1])


def cross_ratio(q: Quadruple) -> float:
    """Cross-ratio (z4-z1)(z3-z2) / ((z2-z1)(z3-z4)), computed projectively."""
    pq = real_to_homogeneous(q.reals())
    return cross_ratio_homogeneous(pq)


def cross_ratio_homogeneous(pq: np.ndarray) -> float:
    """Cross-ratio of four homogeneous pairs (rows); infinity-safe."""
    d41 = _det2(pq[3], pq[0])
    d32 = _det2(pq[2], pq[1])
    d21 = _det2(pq[1], pq[0])
    d34 = _det2(pq[2], pq[3])
    num = d41 * d32
    den = d21 * d34
    if den == 0.0 or num == 0.0:
        raise DegenerateQuadruple("cross-ratio of coincident points")
    return num / den


def symmetric_quadruple(m: Mobius) -> Quadruple:
    """Image of the base symmetric quadruple (-1, 0, 1, inf) under m."""
    return Quadruple(*(m(z) for z in (-1.0, 0.0, 1.0, np.inf)))


def is_symmetric(q: Quadruple, atol: float = 1e-9) -> bool:
    return abs(cross_ratio(q) + 1.0) <= atol
