"""Averaging accelerability and the shrinkage / projection / covering primitives.

The averaging accelerability of ``theta`` with respect to a grid point
``theta_p`` (both in the unit l1-ball) is

    D(theta, theta_p) = min {0 <= p <= 1 : ||theta - (1 - p) theta_p||_1 <= p}.

A small value means ``theta`` is a cheap mixture of ``theta_p`` and some point
of the unit sphere, which is what lets a grid containing ``theta_p`` speed up
aggregation toward ``theta``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .core import BALL_TOL as BALL_SLACK, ConfigurationError, DomainError, ExpertGrid

COVER_CAP = 10**6
# g is often identically zero on a whole segment (theta on the sphere); knots
# that land on it in exact arithmetic come out as +-1e-17 in floating point
GAP_TOL = 1e-13


def _unit_ball_args(theta, theta_p):
    a = np.asarray(theta, dtype=np.float64)
    b = np.asarray(theta_p, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ConfigurationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    for name, v in (("theta", a), ("theta'", b)):
        n = np.abs(v).sum()
        if not np.isfinite(n) or n > 1.0 + BALL_SLACK:
            raise DomainError(f"{name} lies outside the unit l1-ball (norm {n!r})")
    return a, b


def _gap(delta, theta_p, p):
    """g(p) = ||delta + p theta_p||_1 - p, vectorized over p."""
    p = np.atleast_1d(p)
    return np.abs(delta[None, :] + p[:, None] * theta_p[None, :]).sum(axis=1) - p


def accelerability(theta, theta_p) -> float:
    """Exact averaging accelerability by breakpoint enumeration.

    ``g(p) = ||(theta - theta_p) + p theta_p||_1 - p`` is convex and piecewise
    linear with kinks at ``(theta_p_j - theta_j) / theta_p_j``. Since
    ``g(1) = ||theta||_1 - 1 <= 0``, the answer is 0 when ``g(0) <= 0`` and
    otherwise the root on the first segment where ``g`` changes sign.
    """
    theta, theta_p = _unit_ball_args(theta, theta_p)
    delta = theta - theta_p
    g0 = np.abs(delta).sum()
    if g0 <= GAP_TOL:
        return 0.0
    nz = theta_p != 0.0
    with np.errstate(over="ignore"):
        kinks = -delta[nz] / theta_p[nz]
    kinks = kinks[(kinks > 0.0) & (kinks < 1.0)]
    knots = np.unique(np.concatenate(([0.0], kinks, [1.0])))
    g = _gap(delta, theta_p, knots)
    after = np.flatnonzero(g <= GAP_TOL)
    if after.size == 0:
        # ||theta||_1 marginally above 1 within the slack
        return 1.0
    j = after[0]
    a, b = knots[j - 1], knots[j]
    ga, gb = g[j - 1], min(g[j], 0.0)
    root = a + ga * (b - a) / (ga - gb)
    return float(min(max(root, a), b))


def accelerability_bisect(theta, theta_p, tol: float = 1e-10) -> float:
    """Bisection on the monotone feasibility predicate; used as a test oracle."""
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    theta, theta_p = _unit_ball_args(theta, theta_p)

    def feasible(p):
        return np.abs(theta - (1.0 - p) * theta_p).sum() <= p + GAP_TOL

    if feasible(0.0):
        return 0.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def bound_l1(theta, theta_p) -> float:
    """``||theta - theta_p||_1 / (||theta - theta_p||_1 + 1 - ||theta||_1)``."""
    theta, theta_p = _unit_ball_args(theta, theta_p)
    dist = np.abs(theta - theta_p).sum()
    if dist == 0.0:
        return 0.0
    return float(dist / (dist + 1.0 - np.abs(theta).sum()))


def bound_support(theta, theta_p) -> float:
    """Support-compatible bound ``1 - min_i |theta_i| / |theta_p_i|``.

    The minimum runs over coordinates where ``theta_p`` is nonzero. Returns the
    trivial bound 1 when ``||theta_p||_1 < ||theta||_1`` or some sign of
    ``theta_p`` disagrees with ``theta``.
    """
    theta, theta_p = _unit_ball_args(theta, theta_p)
    if np.abs(theta_p).sum() < np.abs(theta).sum():
        return 1.0
    nz = theta_p != 0.0
    if not nz.any() or np.any(np.sign(theta_p[nz]) != np.sign(theta[nz])):
        return 1.0
    return float(1.0 - np.min(np.abs(theta[nz]) / np.abs(theta_p[nz])))


def soft_threshold(x, eps: float) -> np.ndarray:
    if eps < 0:
        raise ConfigurationError("threshold must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - eps, 0.0)


def hard_truncate(x, k: int) -> np.ndarray:
    """Keep the ``k`` largest-magnitude entries; ties go to the lower index."""
    x = np.asarray(x, dtype=np.float64)
    if not 0 <= k <= x.size:
        raise ConfigurationError(f"truncation level {k} outside [0, {x.size}]")
    out = np.zeros_like(x)
    if k:
        keep = np.argsort(-np.abs(x), kind="stable")[:k]
        out[keep] = x[keep]
    return out


def dilated_soft_threshold(theta_p, eps: float, d0: int) -> np.ndarray:
    """Soft-threshold then dilate by ``min(1 + 2 d0 eps / ||S||_1, 1 / ||S||_1)``.

    The result has l1-norm ``min(||S||_1 + 2 d0 eps, 1)``, or is zero when the
    soft-threshold kills every coordinate.
    """
    if d0 < 1:
        raise ConfigurationError("d0 must be >= 1")
    s = soft_threshold(theta_p, eps)
    n = np.abs(s).sum()
    if n == 0.0:
        return s
    return s * min(1.0 + 2.0 * d0 * eps / n, 1.0 / n)


def project_l1(v, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{||x||_1 <= radius}`` (sort-based)."""
    if radius <= 0:
        raise ConfigurationError("radius must be positive")
    v = np.asarray(v, dtype=np.float64)
    u = np.abs(v)
    if u.sum() <= radius:
        return v.copy()
    s = np.sort(u)[::-1]
    css = np.cumsum(s)
    j = np.arange(1, v.size + 1)
    rho = np.flatnonzero(s - (css - radius) / j > 0.0)[-1]
    tau = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(u - tau, 0.0)


def cover_spacing(d: int, eps: float) -> float:
    """Largest ``1/N`` not exceeding ``2 eps / d``, so the sphere lies on the lattice."""
    return 1.0 / math.ceil(d / (2.0 * eps))


def build_cover(d: int, eps: float, cap: int = COVER_CAP) -> ExpertGrid:
    """Lattice points of spacing ``cover_spacing(d, eps)`` inside the unit l1-ball.

    Every point of the ball is within l1-distance ``eps`` of the lattice
    (round coordinates to nearest, rounding down the fewest needed to stay in
    the ball). Not a minimal cover. Uniform prior.
    """
    if d < 1 or not 0 < eps <= 1:
        raise ConfigurationError("cover needs d >= 1 and eps in (0, 1]")
    n = math.ceil(d / (2.0 * eps))
    size = _lattice_count(d, n)
    if size > cap:
        raise ConfigurationError(f"cover of size {size} exceeds the cap of {cap} points")
    pts = np.array(list(_lattice(d, n)), dtype=np.float64) / n
    return ExpertGrid.from_points(pts)


def _lattice_count(d: int, n: int) -> int:
    # integer points of the l1-ball of radius n in Z^d
    return sum(2**k * math.comb(d, k) * math.comb(n, k) for k in range(min(d, n) + 1))


def _lattice(d: int, n: int):
    if d == 1:
        for b in range(-n, n + 1):
            yield (b,)
        return
    for b in range(-n, n + 1):
        for rest in _lattice(d - 1, n - abs(b)):
            yield (b,) + rest


def pattern_prior(members: int, d: int, d0: int) -> float:
    """Per-point prior ``1 / (members (d + 1) C(d, d0))`` of a sparsity pattern."""
    return 1.0 / (members * (d + 1) * math.comb(d, d0))


def sparsity_prior(grid: ExpertGrid, eps: float | None = None) -> ExpertGrid:
    """Reweight a cover so sparse points are favoured.

    The cover is read as the union over patterns ``tau`` of the cover of
    ``{theta : theta_i = 0 whenever tau_i = 0}``; a point gets the sum of
    ``pattern_prior`` over every pattern whose subspace contains it. Those
    masses add up to one over the union. ``eps`` is accepted for symmetry with
    :func:`build_cover`; the counts are read off the grid itself.
    """
    pts = grid.points
    d = grid.dim
    nz = pts != 0.0
    prior = np.zeros(grid.size)
    for tau in itertools.product((False, True), repeat=d):
        tau = np.array(tau)
        inside = ~np.any(nz & ~tau, axis=1)
        members = int(inside.sum())
        if members:
            prior[inside] += pattern_prior(members, d, int(tau.sum()))
    return ExpertGrid(pts, prior / prior.sum())
