"""Cross-ratio norm estimation for circle homeomorphisms.

The norm is the supremum of |ln|cr(phi(Q))|| over symmetric quadruples Q
(cross-ratio -1).  Symmetric quadruples form a 3-parameter family: images of
the base quadruple (-1, 0, 1, inf) under PSL(2, R), coordinatized here by the
Iwasawa factors rotation(psi) * scaling(sigma) * translation(b).

The estimator is a certified lower bound: coarse grid over the three
parameters, then multistart Nelder-Mead refinement.  The returned witness
always reproduces the reported value on re-evaluation; no upper bound is
attempted (the family is noncompact).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .homeo import CircleHomeo
from .mobius import Mobius, Quadruple, real_to_homogeneous

_BASE_PAIRS = real_to_homogeneous(np.array([-1.0, 0.0, 1.0, np.inf]))


@dataclass(frozen=True)
class SearchConfig:
    """Budget and determinism knobs for the norm search."""

    grid: int = 17
    restarts: int = 32
    seed: int = 0
    max_evals: int = 250_000
    nm_maxiter: int = 150
    trans_range: float = 4.0
    scale_range: float = 3.0


class SearchStats(NamedTuple):
    evaluations: int
    restarts: int
    partial: bool


class NormEstimate(NamedTuple):
    """Lower bound for the cross-ratio norm, with its witness quadruple."""

    value: float
    witness: Quadruple
    search_stats: SearchStats


def _iwasawa(b: float, sigma: float, psi: float) -> Mobius:
    return Mobius.rotation(psi) @ Mobius.scaling(sigma) @ Mobius.translation(b)


def _batched_abs_log_cr(pq: np.ndarray) -> np.ndarray:
    """|ln|cr|| for a (..., 4, 2) stack of homogeneous quadruples.

    Degenerate quadruples (coincident points after roundoff) score -inf so
    the search skips them.
    """
    p, q = pq[..., 0], pq[..., 1]

    def det(i, j):
        return p[..., i] * q[..., j] - p[..., j] * q[..., i]

    num = det(3, 0) * det(2, 1)
    den = det(1, 0) * det(2, 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        cr = num / den
        val = np.abs(np.log(np.abs(cr)))
    bad = (den == 0.0) | ~np.isfinite(val)
    return np.where(bad, -np.inf, val)


def _quadruple_pairs(params: np.ndarray) -> np.ndarray:
    """Map Iwasawa parameters (..., 3) to symmetric-quadruple pairs (..., 4, 2)."""
    params = np.asarray(params, dtype=float)
    b, sigma, psi = params[..., 0], params[..., 1], params[..., 2]
    c, s = np.cos(psi / 2.0), np.sin(psi / 2.0)
    es = np.exp(sigma / 2.0)
    # rotation @ scaling @ translation, assembled entrywise to stay batched
    a11 = c * es
    a12 = c * es * b + s / es
    a21 = -s * es
    a22 = -s * es * b + c / es
    mat = np.stack(
        [np.stack([a11, a12], axis=-1), np.stack([a21, a22], axis=-1)], axis=-2
    )
    return np.einsum("...ij,kj->...ki", mat, _BASE_PAIRS)


def _witness_from_params(params: np.ndarray) -> Quadruple:
    m = _iwasawa(*params)
    return Quadruple(*(m(x) for x in (-1.0, 0.0, 1.0, np.inf)))


def evaluate_witness(phi: CircleHomeo, witness: Quadruple) -> float:
    """|ln|cr(phi(witness))||, the quantity the norm takes a sup over."""
    pq = phi.pair(real_to_homogeneous(witness.reals()))
    val = _batched_abs_log_cr(pq)
    return float(val)


def cross_ratio_norm(phi: CircleHomeo, cfg: SearchConfig | None = None) -> NormEstimate:
    """Lower-bound estimate of the cross-ratio norm with witness.

    Deterministic given cfg.seed.  If the evaluation budget runs out before
    all refinement restarts finish, the best value so far is returned with
    search_stats.partial set instead of raising.
    """
    cfg = cfg or SearchConfig()
    rng = np.random.default_rng(cfg.seed)
    evals = 0

    b_grid = np.linspace(-cfg.trans_range, cfg.trans_range, cfg.grid)
    s_grid = np.linspace(-cfg.scale_range, cfg.scale_range, cfg.grid)
    p_grid = np.linspace(-np.pi, np.pi, cfg.grid, endpoint=False)
    grid = np.stack(
        np.meshgrid(b_grid, s_grid, p_grid, indexing="ij"), axis=-1
    ).reshape(-1, 3)

    scores = _batched_abs_log_cr(phi.pair(_quadruple_pairs(grid)))
    evals += grid.shape[0]

    order = np.argsort(scores)[::-1]
    candidates = [(float(scores[i]), grid[i]) for i in order[: max(cfg.restarts, 1)]]
    best_val, best_params = candidates[0]

    def neg_objective(x):
        nonlocal evals
        evals += 1
        return -float(_batched_abs_log_cr(phi.pair(_quadruple_pairs(x))))

    jitter_scale = np.array([0.25, 0.2, 0.2])
    done_restarts = 0
    partial = False
    for k in range(cfg.restarts):
        if evals >= cfg.max_evals:
            partial = True
            break
        base = candidates[k % len(candidates)][1]
        x0 = base if k == 0 else base + rng.normal(size=3) * jitter_scale
        res = minimize(
            neg_objective,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": cfg.nm_maxiter,
                "maxfev": max(cfg.max_evals - evals, 1),
                "xatol": 1e-7,
                "fatol": 1e-12,
            },
        )
        done_restarts += 1
        val = -float(res.fun)
        if val > best_val or (
            val == best_val
            and tuple(_witness_from_params(res.x)) < tuple(_witness_from_params(best_params))
        ):
            best_val, best_params = val, res.x

    witness = _witness_from_params(np.asarray(best_params, dtype=float))
    value = evaluate_witness(phi, witness)
    stats = SearchStats(evaluations=evals, restarts=done_restarts, partial=partial)
    return NormEstimate(value=value, witness=witness, search_stats=stats)
