"""Synthetic loss streams with analytic gradients and, for i.i.d. streams, risk oracles.

Rounds are 1-indexed. Round ``t`` draws its data from a generator seeded by
``(seed, t // BLOCK)`` so that ``loss(t, theta)`` and ``gradient(t, theta)``
depend only on the seed, ``t`` and ``theta``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Callable

import numpy as np
from scipy import stats

from .core import ConfigurationError, DomainError, UnsupportedRegimeError

BLOCK = 1024

REGIMES = ("iid", "adversarial", "expert-advice")


class Objective:
    """Averaged loss over a range of rounds, ``theta -> (value, gradient)``."""

    def __init__(self, fn: Callable[[np.ndarray], tuple[float, np.ndarray]], dim: int):
        self.fn = fn
        self.dim = dim

    def __call__(self, theta):
        return self.fn(np.asarray(theta, dtype=np.float64))

    @classmethod
    def from_closures(cls, closures) -> "Objective":
        """Average of per-round closures each returning ``(value, gradient)``."""
        closures = list(closures)
        if not closures:
            raise ConfigurationError("empty loss history")
        n = len(closures)

        def fn(theta):
            val = 0.0
            grad = np.zeros_like(theta)
            for c in closures:
                v, g = c(theta)
                val += v
                grad += g
            return val / n, grad / n

        return cls(fn, None)


class LossStream(ABC):
    """A seeded source of convex losses ``l_t`` on R^d.

    Attributes
    ----------
    dim : int
    G : float
        Declared bound on ``||grad l_t||_inf`` over the l1-ball of radius
        ``radius``.
    regime : str
        One of ``"iid"``, ``"adversarial"``, ``"expert-advice"``.
    """

    regime: str = "iid"

    def __init__(self, dim: int, seed: int, radius: float):
        if dim < 1:
            raise ConfigurationError("stream dimension must be >= 1")
        self.dim = int(dim)
        self.seed = int(seed)
        self.radius = float(radius)
        self._cache: dict[int, tuple] = {}

    def _rng(self, block: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, block])

    def _block(self, b: int):
        data = self._cache.get(b)
        if data is None:
            if len(self._cache) > 8:
                self._cache.clear()
            data = self._draw_block(b)
            self._cache[b] = data
        return data

    def _draw_block(self, b: int):
        raise NotImplementedError

    def _check_t(self, t: int):
        if t < 1:
            raise DomainError(f"round index must be >= 1, got {t}")

    @abstractmethod
    def loss(self, t: int, theta) -> float: ...

    @abstractmethod
    def gradient(self, t: int, theta) -> np.ndarray: ...

    def losses(self, t0: int, t1: int, theta) -> np.ndarray:
        """Losses of a fixed ``theta`` over rounds ``t0..t1-1``."""
        return np.array([self.loss(t, theta) for t in range(t0, t1)])

    def objective(self, t0: int, t1: int) -> Objective:
        """Average loss over rounds ``t0..t1-1`` with its gradient."""
        if t1 <= t0:
            raise ConfigurationError("empty round range")
        rounds = range(t0, t1)
        return Objective.from_closures(
            [lambda th, t=t: (self.loss(t, th), self.gradient(t, th)) for t in rounds])

    def risk(self, theta) -> float:
        raise UnsupportedRegimeError(f"{type(self).__name__} has no risk oracle")

    def risk_excess(self, theta) -> float:
        raise UnsupportedRegimeError(f"{type(self).__name__} has no risk oracle")

    @property
    def has_risk(self) -> bool:
        return False

    def comparators(self) -> dict[str, np.ndarray]:
        """Named reference points reported in ledgers."""
        return {}

    def metadata(self) -> dict:
        return {"kind": type(self).__name__, "dim": self.dim, "G": self.G,
                "regime": self.regime, "seed": self.seed}


def _truncnorm_unit(rng, size, c):
    """Standard normal truncated to [-c, c], rescaled to unit variance."""
    z = stats.truncnorm.rvs(-c, c, size=size, random_state=rng)
    return z / math.sqrt(_truncnorm_var(c))


def _truncnorm_var(c):
    return 1.0 - 2.0 * c * stats.norm.pdf(c) / (2.0 * stats.norm.cdf(c) - 1.0)


class QuadraticIIDStream(LossStream):
    """Square loss ``(y_t - x_t . theta)^2`` with bounded design and noise.

    ``x_t = L z_t`` with ``L L^T = cov`` and ``z_t`` i.i.d. standard normal
    coordinates truncated to ``[-truncation, truncation]`` and rescaled to unit
    variance, so ``Cov(x_t) = cov`` exactly and ``x_t`` is bounded.
    ``y_t = x_t . theta_star + sigma xi_t`` with ``xi_t`` uniform on [-1, 1]
    (or a unit-variance truncated normal with ``noise="gaussian"``).
    """

    regime = "iid"

    def __init__(self, theta_star, cov=None, sigma: float = 0.1, seed: int = 0,
                 truncation: float = 2.0, noise: str = "uniform", radius: float = 2.0):
        theta_star = np.asarray(theta_star, dtype=np.float64)
        super().__init__(theta_star.size, seed, radius)
        if np.abs(theta_star).sum() > 1.0 + 1e-12:
            raise ConfigurationError("theta_star must lie in the unit l1-ball")
        if sigma < 0:
            raise ConfigurationError("sigma must be >= 0")
        if noise not in ("uniform", "gaussian"):
            raise ConfigurationError(f"unknown noise model {noise!r}")
        cov = np.eye(self.dim) if cov is None else np.asarray(cov, dtype=np.float64)
        if cov.shape != (self.dim, self.dim) or not np.allclose(cov, cov.T):
            raise ConfigurationError("cov must be a symmetric d x d matrix")
        lam, U = np.linalg.eigh(cov)
        if lam.min() < -1e-10 * max(1.0, lam.max()):
            raise ConfigurationError("cov must be positive semidefinite")
        lam = np.clip(lam, 0.0, None)
        self.theta_star = theta_star
        self.cov = (U * lam) @ U.T
        self.cov_sqrt = U * np.sqrt(lam)
        self.rank = int(np.sum(lam > 1e-10 * max(1.0, lam.max())))
        self.sigma = float(sigma)
        self.truncation = float(truncation)
        self.noise = noise
        zmax = truncation / math.sqrt(_truncnorm_var(truncation))
        if noise == "uniform":
            self.noise_var, xi_max = 1.0 / 3.0, 1.0
        else:
            self.noise_var, xi_max = 1.0, 3.0 / math.sqrt(_truncnorm_var(3.0))
        xbound = zmax * np.abs(self.cov_sqrt).sum(axis=1)
        self.x_bound = float(xbound.max())
        y_bound = float(np.abs(theta_star) @ xbound) + self.sigma * xi_max
        self.G = 2.0 * (self.radius * self.x_bound + y_bound) * self.x_bound

    def _draw_block(self, b):
        rng = self._rng(b)
        z = _truncnorm_unit(rng, (BLOCK, self.dim), self.truncation)
        x = z @ self.cov_sqrt.T
        if self.noise == "uniform":
            xi = rng.uniform(-1.0, 1.0, BLOCK)
        else:
            xi = _truncnorm_unit(rng, BLOCK, 3.0)
        y = x @ self.theta_star + self.sigma * xi
        return x, y

    def sample(self, t: int) -> tuple[np.ndarray, float]:
        self._check_t(t)
        x, y = self._block(t // BLOCK)
        return x[t % BLOCK], float(y[t % BLOCK])

    def loss(self, t, theta):
        x, y = self.sample(t)
        return float((y - x @ theta) ** 2)

    def gradient(self, t, theta):
        x, y = self.sample(t)
        return 2.0 * (x @ theta - y) * x

    def objective(self, t0, t1):
        if t1 <= t0:
            raise ConfigurationError("empty round range")
        d = self.dim
        xx = np.zeros((d, d))
        xy = np.zeros(d)
        yy = 0.0
        for b in range(t0 // BLOCK, (t1 - 1) // BLOCK + 1):
            x, y = self._block(b)
            lo = max(t0 - b * BLOCK, 0)
            hi = min(t1 - b * BLOCK, BLOCK)
            xs, ys = x[lo:hi], y[lo:hi]
            xx += xs.T @ xs
            xy += xs.T @ ys
            yy += ys @ ys
        n = t1 - t0
        xx /= n
        xy /= n
        yy /= n

        def fn(theta):
            q = xx @ theta
            return float(theta @ q - 2.0 * xy @ theta + yy), 2.0 * (q - xy)

        return Objective(fn, d)

    @property
    def has_risk(self):
        return True

    def risk(self, theta):
        return self.risk_excess(theta) + self.sigma**2 * self.noise_var

    def risk_excess(self, theta):
        e = np.asarray(theta, dtype=np.float64) - self.theta_star
        return float(e @ self.cov @ e)

    def comparators(self):
        return {"theta_star": self.theta_star}

    def metadata(self):
        m = super().metadata()
        m.update(sigma=self.sigma, rank=self.rank, truncation=self.truncation, noise=self.noise)
        return m


class AdversarialStrongStream(LossStream):
    """Deterministic ``(mu/2) ||theta - c_t||_2^2`` with ``c_t`` cycling over targets.

    Targets are ``center + (+u_1, -u_1, +u_2, -u_2, ...)``: ``center`` has
    ``center_sparsity`` nonzeros and l1-norm ``center_norm``; each ``u_j`` lives
    on ``d0 - center_sparsity`` coordinates outside the center's support with
    l1-norm ``spread``. Over whole cycles the leader is ``center``.
    """

    regime = "adversarial"

    def __init__(self, dim: int, mu: float = 1.0, d0: int = 4, seed: int = 0,
                 cycle: int = 4, center_sparsity: int = 2, center_norm: float = 0.5,
                 spread: float = 0.4, radius: float = 2.0):
        super().__init__(dim, seed, radius)
        if mu <= 0:
            raise ConfigurationError("mu must be positive")
        if cycle < 2 or cycle % 2:
            raise ConfigurationError("cycle length must be even and >= 2")
        if not 1 <= center_sparsity <= d0 <= dim:
            raise ConfigurationError("need 1 <= center_sparsity <= d0 <= dim")
        if center_norm + spread > 1.0 + 1e-12:
            raise ConfigurationError("targets must lie in the unit l1-ball")
        self.mu = float(mu)
        self.d0 = int(d0)
        rng = np.random.default_rng([self.seed, 0x5EED])
        perm = rng.permutation(dim)
        center = np.zeros(dim)
        cs = perm[:center_sparsity]
        mag = rng.uniform(0.5, 1.0, center_sparsity)
        center[cs] = rng.choice([-1.0, 1.0], center_sparsity) * mag / mag.sum() * center_norm
        rest = perm[center_sparsity:]
        targets = []
        k = d0 - center_sparsity
        for _ in range(cycle // 2):
            u = np.zeros(dim)
            if k:
                idx = rng.choice(rest, k, replace=False)
                m = rng.uniform(0.5, 1.0, k)
                u[idx] = rng.choice([-1.0, 1.0], k) * m / m.sum() * spread
            targets.append(center + u)
            targets.append(center - u)
        self.center = center
        self.targets = np.array(targets)
        self.G = self.mu * (self.radius + np.abs(self.targets).max())

    def target(self, t: int) -> np.ndarray:
        self._check_t(t)
        return self.targets[(t - 1) % len(self.targets)]

    def loss(self, t, theta):
        e = np.asarray(theta) - self.target(t)
        return float(0.5 * self.mu * e @ e)

    def gradient(self, t, theta):
        return self.mu * (np.asarray(theta, dtype=np.float64) - self.target(t))

    def losses(self, t0, t1, theta):
        idx = (np.arange(t0, t1) - 1) % len(self.targets)
        e = np.asarray(theta)[None, :] - self.targets[idx]
        return 0.5 * self.mu * np.einsum("ij,ij->i", e, e)

    def objective(self, t0, t1):
        if t1 <= t0:
            raise ConfigurationError("empty round range")
        idx = (np.arange(t0, t1) - 1) % len(self.targets)
        c = self.targets[idx]
        cbar = c.mean(axis=0)
        cc = float(np.einsum("ij,ij->", c, c)) / len(idx)
        mu = self.mu

        def fn(theta):
            return 0.5 * mu * float(theta @ theta - 2.0 * theta @ cbar + cc), mu * (theta - cbar)

        return Objective(fn, self.dim)

    def comparators(self):
        return {"center": self.center}

    def metadata(self):
        m = super().metadata()
        m.update(mu=self.mu, d0=self.d0, cycle=len(self.targets))
        return m


class ExpertAdviceStream(LossStream):
    """Prediction with expert advice through the reduction ``l_t(theta) = g_t(theta . f_t)``.

    ``g_t = (. - y_t)^2``. The reference set is the canonical basis of R^K, so
    ``l_t(e_k) = g_t(f_{k,t})``. Built from explicit forecasts (replay) or by
    :class:`IIDExpertStream`. The square loss meets the one-dimensional
    weak exp-concavity condition with ``beta = 1`` and ``alpha = 1/8``.
    """

    regime = "expert-advice"
    beta = 1.0
    alpha = 1.0 / 8.0

    def __init__(self, forecasts, outcomes, radius: float = 1.0):
        f = np.asarray(forecasts, dtype=np.float64)
        y = np.asarray(outcomes, dtype=np.float64)
        if f.ndim != 2 or y.shape != (f.shape[0],):
            raise ConfigurationError("forecasts must be T x K and outcomes length T")
        if np.any(f < 0.0) or np.any(f > 1.0) or not np.all(np.isfinite(f)):
            raise ConfigurationError("expert forecasts must lie in [0, 1]")
        if not np.all(np.isfinite(y)):
            raise ConfigurationError("outcomes must be finite")
        super().__init__(f.shape[1], 0, radius)
        self.forecasts = f
        self.outcomes = y
        self.G = 2.0 * (self.radius + np.abs(y).max())

    @property
    def horizon(self) -> int:
        return self.forecasts.shape[0]

    def sample(self, t):
        self._check_t(t)
        if t > self.horizon:
            raise DomainError(f"round {t} beyond the recorded horizon {self.horizon}")
        return self.forecasts[t - 1], float(self.outcomes[t - 1])

    def loss(self, t, theta):
        f, y = self.sample(t)
        return float((f @ theta - y) ** 2)

    def gradient(self, t, theta):
        f, y = self.sample(t)
        return 2.0 * (f @ theta - y) * f

    def metadata(self):
        m = super().metadata()
        m.update(alpha=self.alpha, beta=self.beta)
        return m


def make_expert_stream(forecasts, outcomes) -> ExpertAdviceStream:
    return ExpertAdviceStream(forecasts, outcomes)


class IIDExpertStream(ExpertAdviceStream):
    """I.i.d. experts with a closed-form risk.

    With ``z_t ~ U[0, 1]``, ``u_{k,t}, xi_t ~ U[-1, 1]``:

        y_t     = 0.5 + 0.8 (z_t - 0.5) + sigma xi_t
        f_{k,t} = means_k + slopes_k (z_t - 0.5) + noises_k u_{k,t}

    so ``E (theta . f_t - y_t)^2 = (theta . m - .5)^2 + (theta . s - .8)^2 / 12
    + sum_k theta_k^2 c_k^2 / 3 + sigma^2 / 3``.
    """

    regime = "iid"
    Y_MEAN = 0.5
    Y_SLOPE = 0.8

    def __init__(self, means, slopes, noises, sigma: float = 0.1, seed: int = 0,
                 radius: float = 1.0):
        m = np.asarray(means, dtype=np.float64)
        s = np.asarray(slopes, dtype=np.float64)
        c = np.asarray(noises, dtype=np.float64)
        if not (m.shape == s.shape == c.shape) or m.ndim != 1:
            raise ConfigurationError("means, slopes and noises must be equal-length vectors")
        half = np.abs(s) / 2 + np.abs(c)
        if np.any(m - half < -1e-12) or np.any(m + half > 1 + 1e-12):
            raise ConfigurationError("expert forecasts would leave [0, 1]")
        if abs(self.Y_SLOPE) / 2 + sigma > 0.5:
            raise ConfigurationError("sigma too large: outcomes would leave [0, 1]")
        LossStream.__init__(self, m.size, seed, radius)
        self.means, self.slopes, self.noises = m, s, c
        self.sigma = float(sigma)
        self.G = 2.0 * (self.radius + 1.0)

    def _draw_block(self, b):
        rng = self._rng(b)
        z = rng.uniform(0.0, 1.0, BLOCK) - 0.5
        u = rng.uniform(-1.0, 1.0, (BLOCK, self.dim))
        xi = rng.uniform(-1.0, 1.0, BLOCK)
        f = self.means + np.outer(z, self.slopes) + u * self.noises
        y = self.Y_MEAN + self.Y_SLOPE * z + self.sigma * xi
        return np.clip(f, 0.0, 1.0), y

    def sample(self, t):
        self._check_t(t)
        f, y = self._block(t // BLOCK)
        return f[t % BLOCK], float(y[t % BLOCK])

    @property
    def has_risk(self):
        return True

    def risk(self, theta):
        th = np.asarray(theta, dtype=np.float64)
        return float((th @ self.means - self.Y_MEAN) ** 2
                     + (th @ self.slopes - self.Y_SLOPE) ** 2 / 12.0
                     + np.sum(th**2 * self.noises**2) / 3.0
                     + self.sigma**2 / 3.0)

    def expert_risks(self) -> np.ndarray:
        return np.array([self.risk(e) for e in np.eye(self.dim)])

    @property
    def best_expert(self) -> int:
        return int(np.argmin(self.expert_risks()))

    def risk_excess(self, theta):
        return self.risk(theta) - self.expert_risks().min()

    def comparators(self):
        return {"best_expert": np.eye(self.dim)[self.best_expert]}


def synthetic_experts(K: int, copies: int = 1, seed: int = 0, sigma: float = 0.1,
                      min_gap: float = 0.02) -> IIDExpertStream:
    """``copies`` identical best experts (the first columns) plus ``K - copies`` worse ones.

    Worse experts get a random bias, slope and private noise, drawn so that
    each has excess risk at least ``min_gap``.
    """
    if not 1 <= copies <= K:
        raise ConfigurationError("need 1 <= copies <= K")
    rng = np.random.default_rng([seed, 0xE7])
    means = [0.5] * copies
    slopes = [0.8] * copies
    noises = [0.0] * copies
    while len(means) < K:
        mk = rng.uniform(0.3, 0.7)
        sk = rng.uniform(0.2, 0.8)
        room = min(mk, 1 - mk) - sk / 2
        if room <= 0:
            continue
        ck = rng.uniform(0.0, room)
        gap = (mk - 0.5) ** 2 + (sk - 0.8) ** 2 / 12 + ck**2 / 3
        if gap < min_gap:
            continue
        means.append(mk)
        slopes.append(sk)
        noises.append(ck)
    return IIDExpertStream(means, slopes, noises, sigma=sigma, seed=seed)


class AbsoluteIIDStream(LossStream):
    """Piecewise-linear ``l_t(theta) = sum_j |theta_j - z_{t,j}|`` with discrete ``z``.

    Each ``z_{t,j}`` is drawn from ``values`` with probabilities ``probs``.
    The risk is convex, piecewise linear and not strongly convex; its
    minimizer is the coordinatewise median, which is interior for the default
    symmetric three-point law.
    """

    regime = "iid"

    def __init__(self, dim: int, values=(-1.0, 0.0, 1.0), probs=None, seed: int = 0,
                 radius: float = 2.0):
        super().__init__(dim, seed, radius)
        self.values = np.asarray(values, dtype=np.float64)
        p = np.full(self.values.size, 1.0 / self.values.size) if probs is None else np.asarray(probs, float)
        if p.shape != self.values.shape or np.any(p < 0) or abs(p.sum() - 1) > 1e-12:
            raise ConfigurationError("probs must be a distribution over values")
        self.probs = p
        self.G = 1.0
        cdf = np.cumsum(p)
        med = self.values[np.searchsorted(cdf, 0.5)]
        self.minimizer = np.full(dim, med)
        if np.abs(self.minimizer).sum() > 1.0:
            self.minimizer = None

    def _draw_block(self, b):
        rng = self._rng(b)
        return (rng.choice(self.values, size=(BLOCK, self.dim), p=self.probs),)

    def sample(self, t):
        self._check_t(t)
        (z,) = self._block(t // BLOCK)
        return z[t % BLOCK]

    def loss(self, t, theta):
        return float(np.abs(np.asarray(theta) - self.sample(t)).sum())

    def gradient(self, t, theta):
        return np.sign(np.asarray(theta, dtype=np.float64) - self.sample(t))

    @property
    def has_risk(self):
        return True

    def risk(self, theta):
        th = np.asarray(theta, dtype=np.float64)
        return float((np.abs(th[:, None] - self.values[None, :]) @ self.probs).sum())

    def risk_excess(self, theta):
        if self.minimizer is None:
            raise UnsupportedRegimeError("minimizer outside the unit ball")
        return self.risk(theta) - self.risk(self.minimizer)

    def comparators(self):
        return {} if self.minimizer is None else {"median": self.minimizer}


STREAM_KINDS = {
    "quadratic": QuadraticIIDStream,
    "adversarial": AdversarialStrongStream,
    "experts": IIDExpertStream,
    "absolute": AbsoluteIIDStream,
}


def sparse_parameter(d: int, d0: int, norm: float, rng: np.random.Generator) -> np.ndarray:
    """Random ``d0``-sparse vector with l1-norm ``norm`` and magnitudes within a factor 2."""
    if not 1 <= d0 <= d or not 0 <= norm <= 1:
        raise ConfigurationError("need 1 <= d0 <= d and 0 <= norm <= 1")
    theta = np.zeros(d)
    idx = np.sort(rng.choice(d, d0, replace=False))
    mag = rng.uniform(0.5, 1.0, d0)
    theta[idx] = rng.choice([-1.0, 1.0], d0) * mag / mag.sum() * norm
    return theta


def make_covariance(kind: str, d: int, rng: np.random.Generator, theta_star=None) -> np.ndarray:
    """Design covariance from a short description.

    ``identity``, ``toeplitz:<rho>`` (entries ``rho^|i-j|``) or ``deficient:<k>``:
    rank ``d - k`` with a kernel spanned by ``e_a - e_b`` pairs, where ``a``
    runs over the support of ``theta_star`` first, so the optimum set
    ``theta_star + ker`` meets the support.
    """
    name, _, arg = kind.partition(":")
    if name == "identity":
        return np.eye(d)
    if name == "toeplitz":
        rho = float(arg or 0.5)
        if not -1 < rho < 1:
            raise ConfigurationError("toeplitz correlation must lie in (-1, 1)")
        i = np.arange(d)
        return rho ** np.abs(i[:, None] - i[None, :])
    if name == "deficient":
        k = int(arg or 2)
        if not 1 <= k <= d // 2:
            raise ConfigurationError("deficient:<k> needs 1 <= k <= d/2")
        supp = [] if theta_star is None else list(np.flatnonzero(theta_star))
        order = supp + [j for j in range(d) if j not in supp]
        ker = np.zeros((d, k))
        for j in range(k):
            ker[order[j], j] = 1.0
            ker[order[-1 - j], j] = -1.0
        basis, _ = np.linalg.qr(np.hstack([ker, rng.normal(size=(d, d - k))]))
        lam = np.r_[np.zeros(k), rng.uniform(0.5, 2.0, d - k)]
        cov = (basis * lam) @ basis.T
        return 0.5 * (cov + cov.T)
    raise ConfigurationError(f"unknown covariance {kind!r}")


def _get(spec, key, cast, default=None):
    if key not in spec:
        if default is None:
            raise ConfigurationError(f"stream key {key!r} is required")
        return default
    try:
        return cast(spec[key])
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad value for stream key {key!r}: {spec[key]!r}") from exc


def _floats(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


STREAM_KEYS = {
    "quadratic": {"kind", "dim", "sparsity", "norm", "sigma", "cov", "truncation", "noise",
                  "theta_star"},
    "adversarial": {"kind", "dim", "mu", "d0", "cycle", "center_sparsity", "center_norm",
                    "spread"},
    "experts": {"kind", "experts", "copies", "sigma"},
    "absolute": {"kind", "dim"},
}


def stream_from_spec(spec, seed: int = 0) -> LossStream:
    """Build a stream from a flat mapping of strings (one config-file section)."""
    kind = spec.get("kind")
    if kind not in STREAM_KEYS:
        raise ConfigurationError(f"unknown stream kind {kind!r}; expected one of "
                                 f"{sorted(STREAM_KEYS)}")
    extra = set(spec) - STREAM_KEYS[kind]
    if extra:
        raise ConfigurationError(f"unknown stream key {sorted(extra)[0]!r} for kind {kind!r}")
    rng = np.random.default_rng([seed, 0x57])
    if kind == "quadratic":
        if "theta_star" in spec:
            theta = np.array(_get(spec, "theta_star", _floats))
            d = theta.size
        else:
            d = _get(spec, "dim", int)
            theta = sparse_parameter(d, _get(spec, "sparsity", int, min(3, d)),
                                     _get(spec, "norm", float, 0.5), rng)
        cov = make_covariance(spec.get("cov", "identity"), d, rng, theta)
        return QuadraticIIDStream(theta, cov, sigma=_get(spec, "sigma", float, 0.1), seed=seed,
                                  truncation=_get(spec, "truncation", float, 2.0),
                                  noise=spec.get("noise", "uniform"))
    if kind == "adversarial":
        return AdversarialStrongStream(_get(spec, "dim", int), mu=_get(spec, "mu", float, 1.0),
                                       d0=_get(spec, "d0", int, 4), seed=seed,
                                       cycle=_get(spec, "cycle", int, 4),
                                       center_sparsity=_get(spec, "center_sparsity", int, 2),
                                       center_norm=_get(spec, "center_norm", float, 0.5),
                                       spread=_get(spec, "spread", float, 0.4))
    if kind == "experts":
        return synthetic_experts(_get(spec, "experts", int), copies=_get(spec, "copies", int, 1),
                                 seed=seed, sigma=_get(spec, "sigma", float, 0.1))
    return AbsoluteIIDStream(_get(spec, "dim", int), seed=seed)
