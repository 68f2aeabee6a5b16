"""Squint / BOA aggregation with a geometric ladder of constant learning rates.

Every grid point is replicated once per learning rate ``eta_i = 1 / (e^i E)``.
For the pair (k, i) the cumulative statistic

    A[k, i] = sum_s eta_i r_{k,s} - eta_i^2 r_{k,s}^2,
    r_{k,s} = grad_s . (theta_hat_{s-1} - theta_k),

is kept raw; the weight of point k is ``prior_k * sum_i eta_i exp(A[k, i])``,
normalized with a log-sum-exp over all pairs.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import kernels
from .core import ConfigurationError, ExpertGrid, StreamError

log = logging.getLogger(__name__)

SNAPSHOT_MAGIC = "SABOA-SQUINT-SNAPSHOT"
SNAPSHOT_VERSION = 1


@dataclass(frozen=True, eq=False)
class RateLadder:
    rates: np.ndarray
    E: float

    @property
    def depth(self) -> int:
        return self.rates.size


def build_ladder(E: float, horizon: int, exponent: int = 1) -> RateLadder:
    """Rates ``1/(e^i E)`` for ``i = 1..max(1, ceil(ln(E * horizon**exponent)))``."""
    if E <= 0 or horizon < 1:
        raise ConfigurationError("ladder needs E > 0 and horizon >= 1")
    if exponent not in (1, 2):
        raise ConfigurationError("ladder exponent must be 1 or 2")
    depth = max(1, math.ceil(math.log(E * float(horizon) ** exponent)))
    i = np.arange(1, depth + 1, dtype=np.float64)
    rates = np.exp(-i) / E
    rates.setflags(write=False)
    return RateLadder(rates, float(E))


def default_E(G: float, variant: str = "fast") -> float:
    """``4G/3`` by default; ``"slow"`` gives the ``8G/3`` variant."""
    if G <= 0:
        raise ConfigurationError("gradient bound G must be positive")
    return (8.0 if variant == "slow" else 4.0) * G / 3.0


class Squint:
    """Aggregate a fixed :class:`ExpertGrid` from gradient feedback.

    Usage per round: ``theta = sq.predict()``, evaluate the loss gradient at
    ``theta``, then ``sq.update(grad)``.

    Parameters
    ----------
    grid : ExpertGrid
        Points and prior.
    E : float
        Scale parameter; usually ``4G/3``.
    horizon : int
        Number of rounds used to size the ladder.
    exponent : int
        1 sizes the ladder on ``ln(E T)``, 2 on ``ln(E T^2)``.
    ladder : RateLadder, optional
        Explicit ladder, overriding ``E``/``horizon``/``exponent`` sizing.
    gradient_bound : float, optional
        When given, every linearized regret is checked against
        ``gradient_bound * max_k ||theta_hat - theta_k||_1``.
    """

    def __init__(self, grid: ExpertGrid, E: float, horizon: int = 1, exponent: int = 1,
                 ladder: RateLadder | None = None, gradient_bound: float | None = None):
        self.grid = grid
        self.ladder = ladder if ladder is not None else build_ladder(E, horizon, exponent)
        self.E = float(self.ladder.E)
        self.gradient_bound = gradient_bound
        self._points = np.ascontiguousarray(grid.points)
        self._log_prior = np.log(grid.prior)
        self._eta = np.ascontiguousarray(self.ladder.rates)
        self._log_eta = np.log(self._eta)
        K = grid.size
        self.A = np.zeros((K, self.ladder.depth))
        self.t = 0
        self._r = np.zeros(K)
        self._w = np.empty(K)
        self._theta = np.empty(grid.dim)
        self._refresh()

    def _refresh(self):
        total = kernels.normalize_log_weights(self.A, self._log_prior, self._log_eta, self._w)
        if not (math.isfinite(total) and total > 0.0):
            log.warning("all squint weights underflowed; falling back to the prior")
            self._w[:] = self.grid.prior
        np.dot(self._w, self._points, out=self._theta)

    @property
    def dim(self) -> int:
        return self.grid.dim

    def predict(self) -> np.ndarray:
        return self._theta.copy()

    def current_weights(self) -> np.ndarray:
        return self._w.copy()

    def update(self, grad) -> np.ndarray:
        """Feed the gradient observed at :meth:`predict`; returns the r_k."""
        g = np.ascontiguousarray(grad, dtype=np.float64)
        if g.shape != (self.dim,):
            raise ConfigurationError(f"gradient has shape {g.shape}, expected ({self.dim},)")
        if not np.all(np.isfinite(g)):
            raise StreamError(f"non-finite gradient at round {self.t + 1}")
        theta = self._theta.copy()
        total = kernels.squint_step(self._points, g, theta, self._eta, self._log_prior,
                                 self._log_eta, self.A, self._r, self._w, self._theta)
        self.t += 1
        if not (math.isfinite(total) and total > 0.0):
            self._refresh()
        if self.gradient_bound is not None:
            reach = np.abs(self._points - theta).sum(axis=1).max()
            assert np.abs(self._r).max() <= self.gradient_bound * reach * (1 + 1e-9) + 1e-12, \
                "linearized regret exceeds the declared gradient bound"
        return self._r.copy()

    def to_dict(self) -> dict:
        return {
            "magic": SNAPSHOT_MAGIC,
            "version": SNAPSHOT_VERSION,
            "points": self.grid.points.tolist(),
            "prior": self.grid.prior.tolist(),
            "E": self.E,
            "rates": self.ladder.rates.tolist(),
            "A": self.A.tolist(),
            "t": self.t,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Squint":
        if data.get("magic") != SNAPSHOT_MAGIC:
            raise ConfigurationError("not a squint snapshot (bad magic header)")
        if data.get("version") != SNAPSHOT_VERSION:
            raise ConfigurationError(f"unsupported snapshot version {data.get('version')!r}")
        grid = ExpertGrid(np.array(data["points"]), np.array(data["prior"]))
        rates = np.array(data["rates"], dtype=np.float64)
        rates.setflags(write=False)
        sq = cls(grid, data["E"], ladder=RateLadder(rates, float(data["E"])))
        A = np.array(data["A"], dtype=np.float64)
        if A.shape != sq.A.shape or not np.all(np.isfinite(A)):
            raise ConfigurationError("snapshot statistics have the wrong shape or are non-finite")
        sq.A[:] = A
        sq.t = int(data["t"])
        sq._refresh()
        return sq

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Squint":
        return cls.from_dict(json.loads(Path(path).read_text()))
