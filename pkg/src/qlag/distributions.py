"""Parametric laws for service and delay times.

All supports live inside [0, inf): the waiting-time algebra downstream needs
nonnegative draws. Means and MGFs are closed form wherever the law allows;
the truncated normal falls back to tight quadrature, and the cross-law tail
probability P(S - D > x) carries a seeded Monte-Carlo safety net for pairs
that adaptive integration cannot handle.
"""

from __future__ import annotations

import math
import warnings
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.special import ndtr, ndtri

from .streams import substream

__all__ = [
    "DistributionSpec",
    "Exponential",
    "Uniform",
    "TruncatedNormal",
    "Deterministic",
    "DivergentMGFError",
    "prob_diff_exceeds",
    "QUAD_TOL",
]

QUAD_TOL = 1e-9
_QUAD_EPS = 1e-12          # internal quadrature target, tighter than the guarantee
TAIL_EPS = 1e-12           # integrals truncated at the 1 - TAIL_EPS quantile
MC_FALLBACK_SAMPLES = 10_000_000
_MC_FALLBACK_SEED = 0x7A11BACC  # fixed: fallback estimates must stay reproducible


class DivergentMGFError(ValueError):
    """E[exp(a*X)] does not exist for the requested argument."""


def _norm_pdf(z):
    return np.exp(-0.5 * np.square(z)) / math.sqrt(2.0 * math.pi)


class DistributionSpec(ABC):
    """A nonnegative parametric law with seeded sampling and analytic moments.

    Every concrete law exposes a ``mean`` attribute/property, seeded
    ``sample``, an ``mgf`` that raises :class:`DivergentMGFError` where
    E[exp(a*X)] is infinite, and ``with_mean`` which rescales (or shifts, for
    the truncated normal) the law to a target mean while preserving its shape.
    """

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int | None = None):
        """Draw from the law: a scalar for size=None, else an ndarray."""

    @abstractmethod
    def mgf(self, a: float) -> float:
        """E[exp(a*X)]."""

    @abstractmethod
    def support(self) -> tuple[float, float]:
        """(lower, upper) bounds of the support; upper may be inf."""

    @abstractmethod
    def ppf(self, q: float) -> float:
        """Quantile function."""

    @abstractmethod
    def cdf(self, x):
        """P(X <= x); accepts scalars or arrays."""

    @abstractmethod
    def with_mean(self, target: float) -> "DistributionSpec":
        """Same family and shape, moved to the target mean."""

    def sf(self, x):
        """P(X > x)."""
        return 1.0 - self.cdf(x)

    def pdf(self, x):
        raise NotImplementedError("law has no density")

    @property
    def is_continuous(self) -> bool:
        return True

    def upper_quantile(self, eps: float = TAIL_EPS) -> float:
        return self.ppf(1.0 - eps)


@dataclass(frozen=True)
class Exponential(DistributionSpec):
    """Exponential law parameterized by its mean (rate = 1/mean)."""

    mean: float

    def __post_init__(self):
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ValueError(f"exponential mean must be positive, got {self.mean}")

    @property
    def rate(self) -> float:
        return 1.0 / self.mean

    def sample(self, rng, size=None):
        return rng.exponential(self.mean, size)

    def mgf(self, a):
        if a * self.mean >= 1.0:
            raise DivergentMGFError(
                f"E[exp(a*X)] diverges for exponential(mean={self.mean}) at a={a}"
            )
        return 1.0 / (1.0 - a * self.mean)

    def support(self):
        return (0.0, math.inf)

    def ppf(self, q):
        return -self.mean * math.log1p(-q)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, 0.0, np.exp(-np.maximum(x, 0.0) / self.mean) / self.mean)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, 0.0, -np.expm1(-np.maximum(x, 0.0) / self.mean))
        return out if out.ndim else float(out)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, 1.0, np.exp(-np.maximum(x, 0.0) / self.mean))
        return out if out.ndim else float(out)

    def with_mean(self, target):
        return Exponential(target)


@dataclass(frozen=True)
class Uniform(DistributionSpec):
    """Uniform law on [lower, upper], lower >= 0."""

    lower: float
    upper: float

    def __post_init__(self):
        if self.lower < 0:
            raise ValueError(f"uniform lower bound must be nonnegative, got {self.lower}")
        if not self.upper > self.lower:
            raise ValueError(f"uniform needs upper > lower, got [{self.lower}, {self.upper}]")

    @property
    def mean(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def sample(self, rng, size=None):
        return rng.uniform(self.lower, self.upper, size)

    def mgf(self, a):
        if a == 0.0:
            return 1.0
        width = self.upper - self.lower
        # exp(a*l) * (exp(a*w) - 1) / (a*w), stable for small a*w
        return math.exp(a * self.lower) * math.expm1(a * width) / (a * width)

    def support(self):
        return (self.lower, self.upper)

    def ppf(self, q):
        return self.lower + q * (self.upper - self.lower)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lower) & (x <= self.upper)
        out = np.where(inside, 1.0 / (self.upper - self.lower), 0.0)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.clip((x - self.lower) / (self.upper - self.lower), 0.0, 1.0)
        return out if out.ndim else float(out)

    def with_mean(self, target):
        if target <= 0:
            raise ValueError("target mean must be positive")
        c = target / self.mean
        return Uniform(self.lower * c, self.upper * c)


@dataclass(frozen=True)
class TruncatedNormal(DistributionSpec):
    """Normal(mu, sigma) conditioned on [lower, upper] with lower >= 0."""

    mu: float
    sigma: float
    lower: float
    upper: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.lower < 0:
            raise ValueError(f"truncation window must sit in [0, inf), got lower={self.lower}")
        if not self.upper > self.lower:
            raise ValueError(f"truncation needs upper > lower, got [{self.lower}, {self.upper}]")
        if self._z_mass <= 0.0:
            raise ValueError("truncation window carries no probability mass")

    @cached_property
    def _std_bounds(self) -> tuple[float, float]:
        return ((self.lower - self.mu) / self.sigma, (self.upper - self.mu) / self.sigma)

    @cached_property
    def _z_mass(self) -> float:
        a, b = self._std_bounds
        return float(ndtr(b) - ndtr(a))

    @property
    def mean(self) -> float:
        a, b = self._std_bounds
        return self.mu + self.sigma * float(_norm_pdf(a) - _norm_pdf(b)) / self._z_mass

    def sample(self, rng, size=None):
        # inverse CDF on the truncated quantile range: robust for any window
        a, b = self._std_bounds
        u = rng.uniform(float(ndtr(a)), float(ndtr(b)), size)
        x = self.mu + self.sigma * ndtri(u)
        return np.clip(x, self.lower, self.upper) if size is not None else float(
            min(max(x, self.lower), self.upper)
        )

    def mgf(self, a):
        val, _ = integrate.quad(
            lambda x: math.exp(a * x) * self.pdf(x),
            self.lower,
            self.upper,
            epsabs=_QUAD_EPS,
            epsrel=_QUAD_EPS,
            limit=200,
        )
        return val

    def support(self):
        return (self.lower, self.upper)

    def ppf(self, q):
        a, b = self._std_bounds
        fa, fb = float(ndtr(a)), float(ndtr(b))
        x = self.mu + self.sigma * float(ndtri(fa + q * (fb - fa)))
        return min(max(x, self.lower), self.upper)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        z = (x - self.mu) / self.sigma
        inside = (x >= self.lower) & (x <= self.upper)
        out = np.where(inside, _norm_pdf(z) / (self.sigma * self._z_mass), 0.0)
        return out if out.ndim else float(out)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        a, _ = self._std_bounds
        z = (np.clip(x, self.lower, self.upper) - self.mu) / self.sigma
        out = np.where(
            x < self.lower,
            0.0,
            np.where(x > self.upper, 1.0, (ndtr(z) - ndtr(a)) / self._z_mass),
        )
        return out if out.ndim else float(out)

    def with_mean(self, target):
        # shift mu and the window together: the truncated mean shifts by the
        # same amount, so shape (sigma, window width) is preserved exactly
        shift = target - self.mean
        if self.lower + shift < 0:
            raise ValueError(
                f"shifting to mean {target} would push the window below 0"
            )
        return TruncatedNormal(self.mu + shift, self.sigma, self.lower + shift, self.upper + shift)


@dataclass(frozen=True)
class Deterministic(DistributionSpec):
    """Point mass at a nonnegative value."""

    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"point mass must be nonnegative, got {self.value}")

    @property
    def mean(self) -> float:
        return self.value

    @property
    def is_continuous(self) -> bool:
        return False

    def sample(self, rng, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value, dtype=float)

    def mgf(self, a):
        return math.exp(a * self.value)

    def support(self):
        return (self.value, self.value)

    def ppf(self, q):
        return self.value

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = (x >= self.value).astype(float)
        return out if out.ndim else float(out)

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        out = (x < self.value).astype(float)
        return out if out.ndim else float(out)

    def with_mean(self, target):
        return Deterministic(target)


def _prob_diff_monte_carlo(service: DistributionSpec, delay: DistributionSpec, x: float) -> float:
    rng_s = substream(_MC_FALLBACK_SEED, "prob-diff-service")
    rng_d = substream(_MC_FALLBACK_SEED, "prob-diff-delay")
    hits = 0
    chunk = 2_000_000
    remaining = MC_FALLBACK_SAMPLES
    while remaining > 0:
        m = min(chunk, remaining)
        s = service.sample(rng_s, m)
        d = delay.sample(rng_d, m)
        hits += int(np.count_nonzero(s - d > x))
        remaining -= m
    return hits / MC_FALLBACK_SAMPLES


def prob_diff_exceeds(
    service: DistributionSpec,
    delay: DistributionSpec,
    x: float,
    *,
    tol: float = QUAD_TOL,
) -> float:
    """P(S - D > x) for independent S ~ service, D ~ delay and x >= 0.

    Closed form for exponential/exponential and for any pair involving a
    point mass; otherwise adaptive integration of the convolution tail,
    with a seeded 1e7-sample Monte-Carlo fallback if integration fails.
    """
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    if isinstance(service, Deterministic) and isinstance(delay, Deterministic):
        return 1.0 if service.value - delay.value > x else 0.0
    if isinstance(delay, Deterministic):
        return float(service.sf(x + delay.value))
    if isinstance(service, Deterministic):
        # P(D < value - x); delay is continuous here, so ties carry no mass
        return float(delay.cdf(service.value - x))
    if isinstance(service, Exponential) and isinstance(delay, Exponential):
        lam_s, lam_d = service.rate, delay.rate
        return lam_d / (lam_s + lam_d) * math.exp(-lam_s * x)

    lo, hi = delay.support()
    hi = min(hi, delay.upper_quantile())
    s_lo, s_hi = service.support()
    breaks = sorted({t for t in (s_lo - x, s_hi - x) if lo < t < hi and math.isfinite(t)})
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            val, err = integrate.quad(
                lambda t: float(service.sf(x + t)) * float(delay.pdf(t)),
                lo,
                hi,
                points=breaks or None,
                epsabs=min(tol, 1e-10),
                epsrel=min(tol, 1e-10),
                limit=200,
            )
        if err <= 1e-6:
            return float(min(max(val, 0.0), 1.0))
    except Exception:
        pass
    return _prob_diff_monte_carlo(service, delay, x)
