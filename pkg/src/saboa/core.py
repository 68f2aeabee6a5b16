"""Shared value types: parameter vectors, expert grids, simplex weights, configs.

Vectors are plain 1-D ``float64`` numpy arrays. Helpers here validate them and
hand back read-only copies so that grids and snapshots can be shared freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

PRIOR_TOL = 1e-12
BALL_TOL = 1e-9


class SaboaError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(SaboaError, ValueError):
    pass


class DomainError(SaboaError, ValueError):
    pass


class StreamError(SaboaError, RuntimeError):
    pass


class InvariantViolation(SaboaError, RuntimeError):
    pass


class InsufficientDataError(SaboaError, ValueError):
    pass


class UnsupportedRegimeError(SaboaError, TypeError):
    pass


def as_vector(x, d: int | None = None, *, name: str = "vector") -> np.ndarray:
    """Return ``x`` as a finite, read-only 1-D float64 array."""
    v = np.array(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ConfigurationError(f"{name} must be a non-empty 1-D vector, got shape {v.shape}")
    if d is not None and v.size != d:
        raise ConfigurationError(f"{name} has dimension {v.size}, expected {d}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} has non-finite coordinates")
    v.setflags(write=False)
    return v


def dot(g, v) -> float:
    g = np.asarray(g, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if g.shape != v.shape:
        raise ConfigurationError(f"dimension mismatch: {g.shape} vs {v.shape}")
    return float(np.dot(g, v))


def l0(x) -> int:
    return int(np.count_nonzero(x))


def l1(x) -> float:
    return float(np.abs(x).sum())


def support(x) -> np.ndarray:
    return np.flatnonzero(np.asarray(x))


def simplex(w) -> np.ndarray:
    """Clamp at zero and renormalize onto the probability simplex."""
    w = np.clip(np.asarray(w, dtype=np.float64), 0.0, None)
    s = w.sum()
    if not np.isfinite(s) or s <= 0.0:
        raise DomainError("weights have no positive mass")
    return w / s


def is_simplex(w, tol: float = PRIOR_TOL) -> bool:
    w = np.asarray(w)
    return bool(np.all(w >= 0.0) and abs(w.sum() - 1.0) <= tol)


@dataclass(frozen=True, eq=False)
class ExpertGrid:
    """Finite ordered set of grid points with a prior weight per point.

    Build through :meth:`from_points`, which removes duplicate rows (exact
    coordinate equality, priors merged by summation) and renormalizes.
    """

    points: np.ndarray
    prior: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        pri = np.array(self.prior, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ConfigurationError(f"grid points must be a non-empty K x d array, got {pts.shape}")
        if pri.shape != (pts.shape[0],):
            raise ConfigurationError("prior length must match the number of points")
        if not np.all(np.isfinite(pts)):
            raise DomainError("grid points must be finite")
        if not np.all(pri > 0.0) or abs(pri.sum() - 1.0) > PRIOR_TOL:
            raise ConfigurationError("prior must be positive and sum to 1")
        pts.setflags(write=False)
        pri.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "prior", pri)

    @classmethod
    def from_points(cls, points, prior=None) -> "ExpertGrid":
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.size == 0:
            raise ConfigurationError("cannot build a grid from an empty point list")
        if prior is None:
            pri = np.ones(pts.shape[0])
        else:
            pri = np.asarray(prior, dtype=np.float64)
            if pri.shape != (pts.shape[0],):
                raise ConfigurationError("prior length must match the number of points")
            if not np.all(pri > 0.0) or not np.all(np.isfinite(pri)):
                raise ConfigurationError("prior entries must be positive and finite")
        # -0.0 and 0.0 are the same coordinate
        pts = pts + 0.0
        index: dict[bytes, int] = {}
        rows: list[np.ndarray] = []
        mass: list[float] = []
        for row, p in zip(pts, pri):
            key = row.tobytes()
            j = index.get(key)
            if j is None:
                index[key] = len(rows)
                rows.append(row)
                mass.append(float(p))
            else:
                mass[j] += float(p)
        m = np.array(mass)
        return cls(np.array(rows), m / m.sum())

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.size

    def union(self, other: "ExpertGrid") -> "ExpertGrid":
        """Concatenate two grids with uniform prior over the deduplicated union."""
        return ExpertGrid.from_points(np.vstack([self.points, other.points]))


def corners(d: int, radius: float = 1.0) -> ExpertGrid:
    """The 2d vertices ``±radius * e_j`` with uniform prior."""
    if d < 1 or radius <= 0:
        raise ConfigurationError("corners need d >= 1 and radius > 0")
    eye = np.eye(d) * radius
    pts = np.empty((2 * d, d))
    pts[0::2] = eye
    pts[1::2] = -eye
    return ExpertGrid.from_points(pts)


def default_checkpoints(horizon: int) -> tuple[int, ...]:
    """Powers of two up to the horizon, plus the horizon itself."""
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    cps = [1 << j for j in range(int(math.log2(horizon)) + 1) if (1 << j) <= horizon]
    if cps[-1] != horizon:
        cps.append(horizon)
    return tuple(cps)


def validate_checkpoints(checkpoints: Sequence[int], horizon: int) -> tuple[int, ...]:
    cps = sorted(set(int(c) for c in checkpoints) | {horizon})
    for c in cps:
        if c < 1 or c > horizon:
            raise ConfigurationError(f"checkpoint {c} outside [1, {horizon}]")
        if c != horizon and not (_is_pow2(c) or _is_pow2(c + 1)):
            raise ConfigurationError(f"checkpoint {c} is neither 2^j nor 2^j - 1")
    return tuple(cps)


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True)
class ExperimentConfig:
    algorithm: str
    stream: Mapping[str, Any]
    horizon: int
    seed: int = 0
    E: float | None = None
    checkpoints: tuple[int, ...] = ()
    output: str | None = None
    options: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        if self.E is not None and self.E <= 0:
            raise ConfigurationError("E override must be positive")
        cps = self.checkpoints or default_checkpoints(self.horizon)
        object.__setattr__(self, "checkpoints", validate_checkpoints(cps, self.horizon))
