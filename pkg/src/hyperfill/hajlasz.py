"""Pointwise-gradient norm via pairwise constraint minimisation.

The fractional gradient problem is a convex program: minimise the
``L^p`` norm of ``g >= 0`` subject to ``g_i + g_j >= |f_i - f_j| /
d(i,j)^s`` over all point pairs.  A primal-dual first-order loop solves
it with a certified duality gap; a one-pass feasibility lift turns any
iterate into a feasible point, so the reported norm is always an upper
bound and the gap bounds its distance to optimal.  ``p = inf`` has a
closed form and skips the loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import pair_max_lift, pdhg_sweep
from .errors import ConfigError, GateError, NumericalError
from .norms import SmoothnessParams
from .space import FiniteMetricMeasureSpace

__all__ = ["HajlaszGradient", "hajlasz_norm"]

# Hard cap on the pairwise program size; n points make n(n-1)/2
# constraints and the dense pair arrays dominate memory beyond this.
POINT_CAP = 4096

_TINY = 1e-300


@dataclass(eq=False)
class HajlaszGradient:
    """Certified solution of the pointwise-gradient program.

    ``norm`` is the ``L^p`` norm of the feasible gradient ``g``;
    ``objective`` and ``dual_value`` bracket the optimal value of the
    solver's convex objective (the ``p``-th power for finite ``p``), and
    ``gap`` is their relative difference, a certificate that ``norm``
    exceeds the true infimum by at most roughly ``gap / p``.
    """

    norm: float
    g: np.ndarray = field(repr=False)
    s: float
    p: float
    objective: float
    dual_value: float
    gap: float
    iterations: int
    converged: bool


def _pair_constraints(space, f, s):
    """Pair index arrays and constraint levels ``|df| / d^s``."""
    n = space.n_points
    ii, jj = np.triu_indices(n, k=1)
    d = space.cross_dist(space.points, space.points)[ii, jj]
    df = np.abs(f[ii] - f[jj])
    coincident = d <= 0.0
    if np.any(coincident & (df > 0.0)):
        raise GateError(
            "coincident points carry different values; no finite "
            "gradient exists")
    keep = ~coincident
    return ii[keep], jj[keep], df[keep] / d[keep] ** s


def _prox_power(v, c, p):
    """Solve ``z + c p z^(p-1) = v`` over ``z >= 0``, elementwise.

    Monotone in ``z``, so bisection on ``[0, v]`` is safe for every
    ``p > 1``; ``p = 2`` short-circuits to the linear solution.
    """
    if p == 2.0:
        return np.maximum(v, 0.0) / (1.0 + 2.0 * c)
    hi = np.maximum(v, 0.0)
    lo = np.zeros_like(hi)
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        h = mid + c * p * np.power(mid, p - 1.0) - v
        lower = h < 0.0
        lo = np.where(lower, mid, lo)
        hi = np.where(lower, hi, mid)
    return 0.5 * (lo + hi)


def _dual_value(y, a, m, w, p):
    """Lagrange dual value at ``y >= 0``; a certified lower bound.

    For ``p = 1`` the multipliers are first shrunk edge by edge until
    every dual row sum fits under its weight, keeping feasibility exact.
    """
    ii, jj = y.ii, y.jj
    if p == 1.0:
        rho = np.minimum(1.0, w / np.maximum(a, _TINY))
        scale = np.minimum(rho[ii], rho[jj])
        return float((y.vals * scale) @ m)
    conj = np.zeros_like(a)
    pos = a > 0.0
    expo = p / (p - 1.0)
    conj[pos] = (p - 1.0) * w[pos] * (a[pos] / (p * w[pos])) ** expo
    return float(y.vals @ m - conj.sum())


class _Dual:
    """Thin bundle of the dual vector with its pair indexing."""

    def __init__(self, vals, ii, jj):
        self.vals = vals
        self.ii = ii
        self.jj = jj


def hajlasz_norm(space: FiniteMetricMeasureSpace, f,
                 params: SmoothnessParams, *,
                 tol: float = 1e-7, max_iter: int = 500_000,
                 check_every: int = 250) -> HajlaszGradient:
    """Minimal ``L^p`` norm of a fractional pointwise gradient.

    Parameters
    ----------
    space : FiniteMetricMeasureSpace
        At most ``POINT_CAP`` points; subsample larger clouds first.
    f : array_like
        Point samples of the function.
    params : SmoothnessParams
        Must have kind ``hajlasz``; uses ``s`` and ``p`` (``p >= 1``).
    tol : float
        Relative duality-gap target for finite ``p > 0``.
    max_iter : int
        Iteration budget for the primal-dual loop.
    check_every : int
        Iterations between feasibility lifts and gap checks.

    Returns
    -------
    HajlaszGradient

    Raises
    ------
    NumericalError
        If the loop exhausts its budget before certifying the gap.
    """
    if params.kind != "hajlasz":
        raise ConfigError("params kind %r is not hajlasz" % params.kind)
    f = np.ascontiguousarray(f, dtype=np.float64)
    n = space.n_points
    if f.shape != (n,):
        raise ConfigError(
            "function has %s samples, space has %d points" % (f.shape, n))
    if n > POINT_CAP:
        raise ConfigError(
            "%d points exceed the pairwise budget %d; subsample first"
            % (n, POINT_CAP))
    s, p = params.s, params.p
    ii, jj, m = _pair_constraints(space, f, s)
    w = space.weights

    def pack(g, obj, dual, gap, iters, ok):
        norm = obj if p == 1.0 or np.isinf(p) else obj ** (1.0 / p)
        return HajlaszGradient(norm=float(norm), g=g, s=s, p=p,
                               objective=float(obj), dual_value=float(dual),
                               gap=float(gap), iterations=iters,
                               converged=ok)

    if m.size == 0 or m.max() == 0.0:
        return pack(np.zeros(n), 0.0, 0.0, 0.0, 0, True)
    if np.isinf(p):
        half = 0.5 * m.max()
        return pack(np.full(n, half), half, half, 0.0, 0, True)

    # Feasible warm start: half the worst constraint at each point.
    g = np.zeros(n)
    np.maximum.at(g, ii, m)
    np.maximum.at(g, jj, m)
    g *= 0.5

    lift = pair_max_lift(g, ii, jj, m)
    best_g = g + lift
    best_obj = float(w @ best_g) if p == 1.0 else float(w @ best_g ** p)
    best_dual = 0.0

    # Operator norm bound for the pair map: each point meets at most
    # n - 1 pairs, so ||A||^2 <= 2 (n - 1).
    L = np.sqrt(2.0 * max(n - 1, 1))
    beta = max(float(g.max()), _TINY) / max(float(w.max()), _TINY)
    tau = 0.95 * beta / L
    sigma = 0.95 / (beta * L)

    y = np.zeros(m.size)
    rowsum = np.zeros(n)
    g_prev = g.copy()
    iters = 0
    while iters < max_iter:
        stop = min(iters + check_every, max_iter)
        while iters < stop:
            gbar = 2.0 * g - g_prev
            pdhg_sweep(y, ii, jj, m, gbar, sigma, rowsum)
            g_prev = g
            v = g + tau * rowsum
            if p == 1.0:
                g = np.maximum(v - tau * w, 0.0)
            else:
                g = _prox_power(v, tau * w, p)
            iters += 1
        cand = g + pair_max_lift(g, ii, jj, m)
        obj = float(w @ cand) if p == 1.0 else float(w @ cand ** p)
        if obj < best_obj:
            best_obj, best_g = obj, cand
        best_dual = max(best_dual,
                        _dual_value(_Dual(y, ii, jj), rowsum, m, w, p))
        gap = (best_obj - best_dual) / max(best_obj, _TINY)
        if gap <= tol:
            return pack(best_g, best_obj, best_dual, gap, iters, True)
    gap = (best_obj - best_dual) / max(best_obj, _TINY)
    raise NumericalError(
        "pairwise solver stalled at relative gap %.3g after %d iterations "
        "(target %.3g)" % (gap, iters, tol))
