"""Finite-difference operators on a staggered polar grid.

The grid places ring i at r = (i + 1/2) h with h = R_max / (n_r - 1/2), so
no vertex sits at the coordinate pole and the outermost ring lies exactly at
R_max (where Dirichlet data is imposed).  Values across the pole are exact:
a field F on the disk satisfies F(-r, theta + pi) = parity * F(r, theta),
with parity +1 for scalars and -1 for radial vector components, so the ghost
rings below the pole are copies of the first rings rolled by half a turn.

The inverse metric amplifies tensor errors by 1/r^2 near the pole, so plain
fixed-order differencing loses two orders there.  The radial tables counter
this with extra order where it is cheap: 9-point centered stencils on the
rings nearest the pole (ghost rings make them free), 7-point centered in the
bulk, and 7-point biased/one-sided closures at the outer boundary.  Angular
derivatives are spectral by default; a local 4th-order variant exists so
Jacobians can be assembled by compact-stencil coloring.
"""

from __future__ import annotations

import numpy as np


def fornberg_weights(z: float, x: np.ndarray, m: int) -> np.ndarray:
    """Weights of finite-difference approximations at point z from nodes x.

    Returns an array of shape (m + 1, len(x)): row k holds the weights of
    the k-th derivative.  Classic recursive algorithm, exact for any node
    placement.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    c = np.zeros((m + 1, n))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = x[0] - z
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


class PolarStencils:
    """Differentiation tables for one (n_r, n_theta, R_max) grid."""

    #: rings of ghost padding used below the pole
    PAD = 4

    def __init__(self, n_r: int, n_theta: int, R_max: float, theta_spectral: bool = True):
        if n_theta % 2 != 0:
            raise ValueError("n_theta must be even for exact pole ghosts")
        self.n_r = n_r
        self.n_theta = n_theta
        self.R_max = float(R_max)
        self.theta_spectral = theta_spectral
        self._k = np.fft.rfftfreq(n_theta, d=1.0 / n_theta)
        self.h = self.R_max / (n_r - 0.5)
        self.r = (np.arange(n_r) + 0.5) * self.h
        self.h_theta = 2.0 * np.pi / n_theta
        self.theta = np.arange(n_theta) * self.h_theta

        pad = self.PAD
        # nodes of the padded radial axis: r = (i - pad + 1/2) h
        nodes = (np.arange(n_r + pad) - pad + 0.5) * self.h
        width = 9
        idx = np.zeros((n_r, width), dtype=int)
        w1 = np.zeros((n_r, width))
        w2 = np.zeros((n_r, width))
        size = np.zeros(n_r, dtype=int)
        for i in range(n_r):
            ip = i + pad
            if i <= 2 and i + 4 <= n_r - 1:
                # the 1/r amplification near the pole costs two orders, so the
                # innermost rings get 9-point stencils (ghost rings are free)
                sten = np.arange(ip - 4, ip + 5)
            elif i <= n_r - 4:
                sten = np.arange(ip - 3, ip + 4)  # centered 7-point
            elif i == n_r - 3:
                sten = np.arange(ip - 4, ip + 3)  # biased, two in from the edge
            elif i == n_r - 2:
                sten = np.arange(ip - 5, ip + 2)  # biased, one in from the edge
            else:
                sten = np.arange(ip - 6, ip + 1)  # one-sided at the boundary
            w = fornberg_weights(self.r[i], nodes[sten], 2)
            idx[i, : sten.size] = sten
            w1[i, : sten.size] = w[1]
            w2[i, : sten.size] = w[2]
            size[i] = sten.size
        self._idx = idx
        self._w1 = w1
        self._w2 = w2
        self._size = size

    def radial_support(self, i: int) -> list[tuple[int, int]]:
        """Rings the radial stencils at ring i read, as (ring, theta shift).

        Ghost rings below the pole alias real rings with a half-turn shift;
        the shift matters to anyone tracking sparsity (Jacobian coloring).
        """
        half = self.n_theta // 2
        out = []
        for p in self._idx[i][: self._size[i]]:
            p = int(p)
            if p < self.PAD:
                out.append((self.PAD - 1 - p, half))
            else:
                out.append((p - self.PAD, 0))
        return out

    def _pad(self, f: np.ndarray, parity: int) -> np.ndarray:
        """Prepend pole ghost rings: F(-r, theta) = parity * F(r, theta + pi)."""
        ghosts = parity * np.roll(f[: self.PAD][::-1], self.n_theta // 2, axis=-1)
        return np.concatenate([ghosts, f], axis=0)

    def d_r(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        fp = self._pad(np.asarray(f, dtype=float), parity)
        return np.einsum("ik,ikj->ij", self._w1, fp[self._idx])

    def d_rr(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        fp = self._pad(np.asarray(f, dtype=float), parity)
        return np.einsum("ik,ikj->ij", self._w2, fp[self._idx])

    def d_theta(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.theta_spectral:
            return np.fft.irfft(np.fft.rfft(f, axis=-1) * (1j * self._k), n=self.n_theta, axis=-1)
        s = lambda k: np.roll(f, -k, axis=-1)
        return (-s(2) + 8 * s(1) - 8 * s(-1) + s(-2)) / (12.0 * self.h_theta)

    def d_theta2(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        if self.theta_spectral:
            return np.fft.irfft(np.fft.rfft(f, axis=-1) * (-self._k**2), n=self.n_theta, axis=-1)
        s = lambda k: np.roll(f, -k, axis=-1)
        return (-s(2) + 16 * s(1) - 30 * f + 16 * s(-1) - s(-2)) / (
            12.0 * self.h_theta**2
        )

    def d_r_theta(self, f: np.ndarray, parity: int = 1) -> np.ndarray:
        # theta-differentiation preserves the pole parity of the field
        return self.d_r(self.d_theta(np.asarray(f, dtype=float)), parity=parity)
