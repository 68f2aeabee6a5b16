"""Restart meta-algorithms over doubling sessions: BOA+ and SABOA.

Session ``i`` covers rounds ``[2^i, 2^(i+1))`` (1-indexed), so session 0 is
round 1 alone. Each session runs a fresh :class:`~saboa.squint.Squint` on a
grid built from information gathered before the session starts.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import (BALL_TOL, ConfigurationError, DomainError, ExpertGrid, InvariantViolation,
                   SaboaError, StreamError, UnsupportedRegimeError, corners, default_checkpoints,
                   validate_checkpoints)
from .geometry import dilated_soft_threshold, hard_truncate, project_l1
from .metrics import RegretLedger
from .squint import Squint, build_ladder, default_E
from .streams import LossStream, Objective

log = logging.getLogger(__name__)

GRADIENT_SLACK = 1e-9


def session_of(t: int) -> int:
    """Index of the session containing round ``t``: ``floor(log2 t)``."""
    t = int(t)
    if t < 1:
        raise DomainError(f"round index must be >= 1, got {t}")
    return t.bit_length() - 1


def sessions(horizon: int):
    """Yield ``(i, start, stop)`` with rounds ``start..stop-1``, truncated at ``horizon``."""
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    i = 0
    while 2**i <= horizon:
        yield i, 2**i, min(2 ** (i + 1), horizon + 1)
        i += 1


@dataclass(frozen=True)
class LeaderSolverConfig:
    """Projected gradient descent on the unit l1-ball with steps ``c / sqrt(k)``.

    ``c`` is ``step_scale * radius / ||grad_0||_2`` and is halved whenever the
    objective increases.
    """

    max_iter: int = 2000
    tol: float = 1e-8
    step_scale: float = 1.0
    radius: float = 1.0

    def __post_init__(self):
        if self.max_iter < 1:
            raise ConfigurationError("leader solver needs max_iter >= 1")
        if not self.tol > 0:
            raise ConfigurationError("leader solver tolerance must be > 0")
        if not self.step_scale > 0 or not self.radius > 0:
            raise ConfigurationError("step scale and radius must be > 0")


def _as_objective(history, dim=None) -> Objective:
    if isinstance(history, Objective):
        return history
    if callable(history):
        return Objective(history, dim)
    return Objective.from_closures(history)


def solve_leader(history, cfg: LeaderSolverConfig = LeaderSolverConfig(),
                 dim: int | None = None, x0=None) -> np.ndarray:
    """Approximate minimizer of the averaged past losses over the l1-ball.

    ``history`` is an :class:`Objective`, a callable ``theta -> (value,
    gradient)`` or a nonempty list of such callables (averaged). Returns the
    iterate with the smallest objective seen.
    """
    obj = _as_objective(history, dim)
    if x0 is None:
        d = obj.dim if obj.dim is not None else dim
        if d is None:
            # probe the dimension through a list of closures
            raise ConfigurationError("pass dim or x0 when the objective has no known dimension")
        x0 = np.zeros(d)
    x = project_l1(np.asarray(x0, dtype=np.float64), cfg.radius)

    def evaluate(p):
        f, g = obj(p)
        f = float(f)
        g = np.asarray(g, dtype=np.float64)
        if not math.isfinite(f) or not np.all(np.isfinite(g)):
            raise StreamError("leader objective is not finite")
        return f, g

    f, g = evaluate(x)
    best_f, best_x = f, x
    gn = np.linalg.norm(g)
    if gn == 0.0:
        return x
    c = cfg.step_scale * cfg.radius / gn
    for k in range(1, cfg.max_iter + 1):
        step = c / math.sqrt(k)
        y = project_l1(x - step * g, cfg.radius)
        if np.linalg.norm(x - y) / step < cfg.tol:
            break
        fy, gy = evaluate(y)
        if fy > f + 1e-15 * abs(f):
            c *= 0.5
        if fy < best_f:
            best_f, best_x = fy, y
        x, f, g = y, fy, gy
    return best_x


class SessionAverage:
    """Running mean of the predictions of the current session."""

    def __init__(self, dim: int):
        self.sum = np.zeros(dim)
        self.count = 0

    def add(self, theta) -> None:
        self.sum += theta
        self.count += 1

    @property
    def average(self) -> np.ndarray:
        if self.count == 0:
            return np.zeros_like(self.sum)
        return self.sum / self.count


def _uniform(points) -> ExpertGrid:
    grid = ExpertGrid.from_points(points)
    return ExpertGrid(grid.points, np.full(grid.size, 1.0 / grid.size))


def boaplus_grid(leader, d: int) -> ExpertGrid:
    """Truncations ``[leader]_k`` for ``k = 1..d`` plus the ``2d`` corners of radius 2."""
    leader = np.asarray(leader, dtype=np.float64)
    if leader.shape != (d,):
        raise ConfigurationError(f"leader has shape {leader.shape}, expected ({d},)")
    if np.abs(leader).sum() > 1.0 + BALL_TOL:
        raise DomainError("leader must lie in the unit l1-ball")
    pts = [hard_truncate(leader, k) for k in range(1, d + 1)]
    return _uniform(np.vstack([np.array(pts), corners(d, 2.0).points]))


def threshold_levels(i: int) -> np.ndarray:
    """``{2^-k : k = 0..i}``."""
    return 2.0 ** -np.arange(i + 1)


def sparsity_levels(d: int) -> list[int]:
    """``{1, 2, 4, ..., 2^floor(log2 d), d}``."""
    out = [2**j for j in range(d.bit_length())]
    if out[-1] != d:
        out.append(d)
    return out


def saboa_grid(avg, i: int, d: int) -> ExpertGrid:
    """Dilated soft-thresholds and hard truncations of ``avg`` plus the unit corners.

    The size is at most ``(i+1) |sparsity_levels(d)| + 3d``, which is
    ``(i+1)(1 + log2 d) + 3d`` when ``d`` is a power of two.
    """
    avg = np.asarray(avg, dtype=np.float64)
    if avg.shape != (d,):
        raise ConfigurationError(f"average has shape {avg.shape}, expected ({d},)")
    if i < 0:
        raise ConfigurationError("session index must be >= 0")
    n = np.abs(avg).sum()
    if n > 1.0 + BALL_TOL:
        raise DomainError(f"session average outside the unit l1-ball (norm {n!r})")
    if n > 1.0:
        avg = project_l1(avg)
    pts = [dilated_soft_threshold(avg, eps, d0)
           for eps in threshold_levels(i) for d0 in sparsity_levels(d)]
    pts += [hard_truncate(avg, k) for k in range(1, d + 1)]
    return _uniform(np.vstack([np.array(pts), corners(d, 1.0).points]))


@dataclass
class MetaConfig:
    """Run parameters shared by every runner.

    Attributes
    ----------
    E : float, optional
        Overrides ``default_E(stream.G, variant)``.
    variant : str
        ``"fast"`` (4G/3) or ``"slow"`` (8G/3).
    exponent : int, optional
        Ladder exponent; defaults to 1 for a plain squint run and 2 for the
        restart algorithms. The ladder is sized on the full horizon.
    checkpoints : tuple of int
        Defaults to powers of two up to the horizon, plus the horizon.
    snapshot_predictions : bool
        Keep every prediction in the ledger.
    check_regrets : bool
        Also assert ``|r_k| <= G max_k ||theta_hat - theta_k||_1`` inside squint.
    """

    E: float | None = None
    variant: str = "fast"
    exponent: int | None = None
    checkpoints: tuple = ()
    snapshot_predictions: bool = False
    leader: LeaderSolverConfig = field(default_factory=LeaderSolverConfig)
    check_regrets: bool = False

    def resolve_E(self, stream: LossStream) -> float:
        return float(self.E) if self.E is not None else default_E(stream.G, self.variant)


class _Runner:
    """Plays sessions of squint on a stream and fills a ledger."""

    def __init__(self, stream: LossStream, horizon: int, cfg: MetaConfig, exponent: int, name: str):
        if horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        self.stream = stream
        self.horizon = int(horizon)
        self.cfg = cfg
        self.E = cfg.resolve_E(stream)
        self.ladder = build_ladder(self.E, self.horizon, cfg.exponent or exponent)
        cps = validate_checkpoints(cfg.checkpoints, horizon) if cfg.checkpoints \
            else default_checkpoints(horizon)
        self.has_risk = stream.has_risk
        self.ledger = RegretLedger(horizon, stream.dim, cps, cfg.snapshot_predictions,
                                   self.has_risk, meta={"algorithm": name, "E": self.E,
                                                        "depth": self.ladder.depth})
        self.max_grad = 0.0
        self.sizes: list[int] = []

    def new_squint(self, grid: ExpertGrid) -> Squint:
        self.sizes.append(grid.size)
        return Squint(grid, self.E, ladder=self.ladder,
                      gradient_bound=self.stream.G if self.cfg.check_regrets else None)

    def play(self, sq: Squint, start: int, stop: int, avg: SessionAverage | None = None):
        stream, ledger = self.stream, self.ledger
        G = stream.G * (1.0 + GRADIENT_SLACK)
        for t in range(start, stop):
            theta = sq.predict()
            g = stream.gradient(t, theta)
            if not np.all(np.isfinite(g)):
                raise StreamError(f"non-finite gradient at round {t}")
            gi = float(np.abs(g).max())
            if gi > self.max_grad:
                self.max_grad = gi
                if gi > G:
                    raise InvariantViolation(
                        f"gradient sup-norm {gi:.6g} at round {t} exceeds the declared bound "
                        f"G = {stream.G:.6g}")
            risk = stream.risk(theta) if self.has_risk else None
            ledger.record(theta, stream.loss(t, theta), risk)
            if avg is not None:
                avg.add(theta)
            sq.update(g)

    def run(self, grid_for: Callable[[int, int, "_Runner"], ExpertGrid],
            on_end: Callable[[int, SessionAverage], None] | None = None) -> RegretLedger:
        try:
            for i, start, stop in sessions(self.horizon):
                sq = self.new_squint(grid_for(i, start, self))
                avg = SessionAverage(self.stream.dim)
                self.play(sq, start, stop, avg)
                if on_end is not None:
                    on_end(i, avg)
                self.last = sq
        except SaboaError as exc:
            self.ledger.finish(f"{type(exc).__name__}: {exc}")
            self._annotate()
            exc.ledger = self.ledger
            raise
        self.ledger.finish()
        self._annotate()
        return self.ledger

    def _annotate(self):
        self.ledger.extras.update(max_gradient=self.max_grad, grid_sizes=list(self.sizes))


def run_squint(stream: LossStream, horizon: int, grid: ExpertGrid,
               cfg: MetaConfig | None = None, name: str = "squint") -> RegretLedger:
    """Single squint instance on a fixed grid over rounds ``1..horizon``.

    The final weights are stored in ``ledger.extras["weights"]``.
    """
    cfg = cfg or MetaConfig()
    if grid.dim != stream.dim:
        raise ConfigurationError("grid and stream dimensions differ")
    r = _Runner(stream, horizon, cfg, 1, name)
    sq = r.new_squint(grid)
    try:
        r.play(sq, 1, horizon + 1)
    except SaboaError as exc:
        r.ledger.finish(f"{type(exc).__name__}: {exc}")
        exc.ledger = r.ledger
        raise
    r.ledger.finish()
    r._annotate()
    r.ledger.extras["weights"] = sq.current_weights()
    return r.ledger


def run_boaplus(stream: LossStream, horizon: int, cfg: MetaConfig | None = None) -> RegretLedger:
    """BOA+: session ``i`` aggregates truncations of the leader on rounds ``< 2^i``."""
    cfg = cfg or MetaConfig()
    if stream.regime not in ("adversarial", "iid"):
        raise UnsupportedRegimeError(f"BOA+ needs an adversarial or iid stream, got {stream.regime}")
    d = stream.dim
    leaders = []

    def grid_for(i, start, runner):
        if i == 0:
            leader = np.zeros(d)
        else:
            leader = solve_leader(stream.objective(1, start), cfg.leader, dim=d,
                                  x0=leaders[-1] if leaders else None)
        leaders.append(leader)
        return boaplus_grid(leader, d)

    r = _Runner(stream, horizon, cfg, 2, "boa+")
    ledger = r.run(grid_for)
    ledger.extras["leaders"] = [x.tolist() for x in leaders]
    return ledger


def run_saboa(stream: LossStream, horizon: int, cfg: MetaConfig | None = None) -> RegretLedger:
    """SABOA: session ``i`` aggregates shrinkages of the previous session's mean prediction."""
    cfg = cfg or MetaConfig()
    if stream.regime != "iid":
        raise UnsupportedRegimeError(f"SABOA needs an iid stream, got {stream.regime}")
    d = stream.dim
    averages = [np.zeros(d)]

    def grid_for(i, start, runner):
        return saboa_grid(averages[-1], i, d)

    def on_end(i, avg):
        averages.append(avg.average)

    r = _Runner(stream, horizon, cfg, 2, "saboa")
    ledger = r.run(grid_for, on_end)
    ledger.extras["session_averages"] = [a.tolist() for a in averages]
    return ledger
