"""Regret and risk accounting, online-to-batch averaging and rate-slope fits."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import BALL_TOL, ConfigurationError, DomainError, InsufficientDataError

SLOPE_FLOOR = 1e-12
CSV_FORMAT = "%.17g"


class RegretLedger:
    """Per-round record of one online run.

    Round ``t`` (1-indexed) stores the loss suffered by the prediction played
    at that round and, for streams with a risk oracle, the risk of that
    prediction. Predictions are kept at checkpoints, or at every round when
    ``keep_predictions`` is set.
    """

    def __init__(self, horizon: int, dim: int, checkpoints=(), keep_predictions: bool = False,
                 has_risk: bool = False, meta: dict | None = None):
        self.horizon = int(horizon)
        self.dim = int(dim)
        self.checkpoints = tuple(sorted(set(int(c) for c in checkpoints)))
        self.keep_predictions = keep_predictions
        self.has_risk = has_risk
        self.meta = dict(meta or {})
        self._loss = np.zeros(self.horizon)
        self._risk = np.zeros(self.horizon) if has_risk else None
        self._pred = np.zeros((self.horizon, self.dim)) if keep_predictions else None
        self.snapshots: dict[int, np.ndarray] = {}
        self.t = 0
        self.complete = False
        self.error: str | None = None
        self.extras: dict = {}
        self._cp = set(self.checkpoints)

    def record(self, theta, loss: float, risk: float | None = None) -> None:
        """Append round ``t + 1``."""
        if self.t >= self.horizon:
            raise ConfigurationError("ledger already holds the planned horizon")
        i = self.t
        self._loss[i] = loss
        if self._risk is not None:
            self._risk[i] = risk
        if self._pred is not None:
            self._pred[i] = theta
        self.t += 1
        if self.t in self._cp:
            self.snapshots[self.t] = np.array(theta, dtype=np.float64)

    def finish(self, error: str | None = None) -> "RegretLedger":
        self.error = error
        self.complete = error is None and self.t == self.horizon
        return self

    @property
    def losses(self) -> np.ndarray:
        return self._loss[: self.t]

    @property
    def risks(self) -> np.ndarray:
        if self._risk is None:
            raise ConfigurationError("ledger has no risk records")
        return self._risk[: self.t]

    @property
    def predictions(self) -> np.ndarray:
        if self._pred is None:
            raise ConfigurationError("full prediction snapshots were not recorded")
        return self._pred[: self.t]

    def cumulative_loss(self) -> np.ndarray:
        return np.cumsum(self.losses)

    def reached_checkpoints(self) -> tuple[int, ...]:
        return tuple(c for c in self.checkpoints if c <= self.t)


def _check_comparator(theta, dim):
    th = np.asarray(theta, dtype=np.float64)
    if th.shape != (dim,):
        raise ConfigurationError(f"comparator has shape {th.shape}, expected ({dim},)")
    n = np.abs(th).sum()
    if n > 1.0 + BALL_TOL:
        raise DomainError(f"comparator outside the unit l1-ball (norm {n!r})")
    return th


def regret_curve(ledger: RegretLedger, theta, stream, upto=None) -> np.ndarray:
    """Average regret against ``theta`` at each horizon in ``upto`` (default: checkpoints).

    With a risk oracle this is ``(1/T) sum_t risk(theta_hat_t) - risk(theta)``;
    otherwise the comparator's losses are replayed from the stream.
    """
    th = _check_comparator(theta, ledger.dim)
    ts = np.asarray(ledger.reached_checkpoints() if upto is None else upto, dtype=np.int64)
    if ts.size and (ts.min() < 1 or ts.max() > ledger.t):
        raise ConfigurationError(f"horizons must lie in [1, {ledger.t}]")
    if ledger.has_risk and stream.has_risk:
        cum = np.cumsum(ledger.risks)
        return cum[ts - 1] / ts - stream.risk(th)
    cum = np.cumsum(ledger.losses - stream.losses(1, ledger.t + 1, th))
    return cum[ts - 1] / ts


def average_regret(ledger: RegretLedger, theta, stream, upto: int | None = None) -> float:
    T = ledger.t if upto is None else int(upto)
    return float(regret_curve(ledger, theta, stream, [T])[0])


def online_to_batch(ledger: RegretLedger, upto: int | None = None) -> np.ndarray:
    """Mean of the predictions played at rounds ``1..upto``."""
    T = ledger.t if upto is None else int(upto)
    if ledger._pred is None:
        raise ConfigurationError("online-to-batch needs full prediction snapshots "
                                 "(enable snapshot_predictions)")
    if not 1 <= T <= ledger.t:
        raise ConfigurationError(f"upto must lie in [1, {ledger.t}]")
    return ledger.predictions[:T].mean(axis=0)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    n: int
    floored: bool

    def __float__(self):
        return self.slope


def fit_rate(checkpoints, burn_in: int = 0) -> SlopeFit:
    """Least-squares fit of ``log(regret)`` on ``log(T)``.

    ``checkpoints`` is a sequence of ``(T, avg_regret)`` pairs. The first
    ``burn_in`` pairs are dropped; nonpositive regrets are floored at
    ``SLOPE_FLOOR`` and reported through ``floored``.
    """
    pts = [(float(T), float(r)) for T, r in checkpoints][burn_in:]
    if len(pts) < 3:
        raise InsufficientDataError(f"need >= 3 checkpoints after burn-in, got {len(pts)}")
    T = np.array([p[0] for p in pts])
    r = np.array([p[1] for p in pts])
    if np.any(T <= 0) or not np.all(np.isfinite(r)):
        raise InsufficientDataError("checkpoint horizons must be positive and regrets finite")
    floored = bool(np.any(r <= 0.0))
    r = np.maximum(r, SLOPE_FLOOR)
    x = np.log(T)
    y = np.log(r)
    xc = x - x.mean()
    slope = float(xc @ (y - y.mean()) / (xc @ xc))
    return SlopeFit(slope, float(y.mean() - slope * x.mean()), len(pts), floored)


def fit_rate_slope(checkpoints, burn_in: int = 0) -> float:
    return fit_rate(checkpoints, burn_in).slope


def ledger_csv(ledger: RegretLedger, stream, comparators: dict | None = None) -> str:
    """CSV text: ``t, cumulative_loss, avg_regret_<name>...`` at every checkpoint."""
    comps = stream.comparators() if comparators is None else comparators
    ts = np.array(ledger.reached_checkpoints(), dtype=np.int64)
    cum = ledger.cumulative_loss()
    cols = {name: regret_curve(ledger, th, stream, ts) for name, th in sorted(comps.items())}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "cumulative_loss"] + [f"avg_regret_{n}" for n in cols])
    for j, t in enumerate(ts):
        w.writerow([str(t), CSV_FORMAT % cum[t - 1]] + [CSV_FORMAT % c[j] for c in cols.values()])
    return buf.getvalue()


def write_ledger_csv(path, ledger, stream, comparators=None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(ledger_csv(ledger, stream, comparators))


@dataclass
class RunSummary:
    config: dict
    version: str
    wall_time: float
    final_regret: dict
    slopes: dict
    invariant_violations: int = 0
    complete: bool = True
    error: str | None = None
    extras: dict = field(default_factory=dict)

    SCHEMA = 1

    def to_dict(self) -> dict:
        return {
            "schema": self.SCHEMA,
            "version": self.version,
            "config": self.config,
            "wall_time": self.wall_time,
            "final_avg_regret": self.final_regret,
            "slopes": self.slopes,
            "invariant_violations": self.invariant_violations,
            "complete": self.complete,
            "error": self.error,
            **self.extras,
        }

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True,
                                         default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def summarize(ledger: RegretLedger, stream, config: dict, version: str, wall_time: float,
              burn_in: int = 0) -> RunSummary:
    """Final regrets and fitted slopes per named comparator."""
    final, slopes = {}, {}
    ts = ledger.reached_checkpoints()
    for name, th in sorted(stream.comparators().items()):
        if ledger.t:
            curve = regret_curve(ledger, th, stream, ts) if ts else []
            final[name] = average_regret(ledger, th, stream)
            try:
                slopes[name] = fit_rate(zip(ts, curve), burn_in).slope
            except InsufficientDataError:
                slopes[name] = None
    for k, v in final.items():
        if not math.isfinite(v):
            final[k] = None
    return RunSummary(config, version, wall_time, final, slopes,
                      complete=ledger.complete, error=ledger.error)
