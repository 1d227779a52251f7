"""Bounded-noise AR(1): simulation, least squares, normalized statistics, intervals.

Model: ``X_0 = eps_0``, ``X_{k+1} = theta X_k + eps_{k+1}`` with i.i.d.
symmetric bounded noise of known variance ``sigma^2``.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .errors import DegeneratePathError, DomainError
from .erw import fmt
from .normal import std_normal_isf

NOISE_KINDS = ("two_point", "uniform")
QUANTILE = "quantile"
EXPONENTIAL = "exponential"
REGIMES = (QUANTILE, EXPONENTIAL)
STUDENTIZED = "studentized"
STANDARDIZED = "standardized"


@dataclass(frozen=True)
class NoiseDistribution:
    """``two_point``: +-scale with probability 1/2 each; ``uniform``: uniform on [-scale, scale]."""

    kind: str
    scale: float

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise DomainError(f"unknown noise {self.kind!r}")
        if not self.scale > 0.0:
            raise DomainError("noise scale must be positive")

    @classmethod
    def two_point(cls, a: float) -> "NoiseDistribution":
        return cls("two_point", float(a))

    @classmethod
    def uniform(cls, h: float) -> "NoiseDistribution":
        return cls("uniform", float(h))

    @property
    def variance(self) -> float:
        if self.kind == "two_point":
            return self.scale ** 2
        return self.scale ** 2 / 3.0

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    @property
    def bound(self) -> float:
        return self.scale

    @property
    def code(self) -> int:
        return NOISE_KINDS.index(self.kind)

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return _noise_from_uniforms(u, self.code, self.scale)


@dataclass(frozen=True)
class Ar1Params:
    theta: float
    noise: NoiseDistribution
    n: int

    def __post_init__(self):
        if not -1.0 < self.theta < 1.0:
            raise DomainError(f"|theta| must be < 1, got {self.theta}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")


@dataclass(frozen=True, eq=False)
class Ar1Path:
    """Observations ``X_0..X_n``; the noise ``eps_0..eps_n`` is optional for injected paths."""

    x: np.ndarray
    eps: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        if self.eps is not None:
            object.__setattr__(self, "eps", np.asarray(self.eps, dtype=float))
            if self.eps.shape != self.x.shape:
                raise DomainError("eps and x must have the same length")
        if self.x.ndim != 1 or len(self.x) < 2:
            raise DomainError("a path needs at least X_0 and X_1")

    @property
    def n(self) -> int:
        return len(self.x) - 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,eps_k,x_k\n")
        for k, xk in enumerate(self.x):
            e = fmt(self.eps[k]) if self.eps is not None else ""
            buf.write(f"{k},{e},{fmt(xk)}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class ConfidenceInterval:
    lo: float
    hi: float
    kappa: float
    regime: str

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@nb.njit(cache=True, nogil=True)
def _noise_from_uniforms(u, kind, scale):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        if kind == 0:
            out[i] = scale if u[i] < 0.5 else -scale
        else:
            out[i] = scale * (2.0 * u[i] - 1.0)
    return out


@nb.njit(cache=True, nogil=True)
def _recursion(eps, theta):
    x = np.empty(eps.shape[0])
    x[0] = eps[0]
    for k in range(1, eps.shape[0]):
        x[k] = theta * x[k - 1] + eps[k]
    return x


@nb.njit(cache=True, nogil=True)
def _sums_from_uniforms(u, theta, kind, scale):
    """``(sum X_{k-1} X_k, sum X_{k-1}^2)`` without storing the path."""
    if kind == 0:
        prev = scale if u[0] < 0.5 else -scale
    else:
        prev = scale * (2.0 * u[0] - 1.0)
    sxy = 0.0
    sxx = 0.0
    for k in range(1, u.shape[0]):
        if kind == 0:
            e = scale if u[k] < 0.5 else -scale
        else:
            e = scale * (2.0 * u[k] - 1.0)
        cur = theta * prev + e
        sxy += prev * cur
        sxx += prev * prev
        prev = cur
    return sxy, sxx


def simulate(params: Ar1Params, rng: np.random.Generator) -> Ar1Path:
    """Draws ``n + 1`` uniforms from ``rng`` and runs the recursion."""
    eps = params.noise.from_uniforms(rng.random(params.n + 1))
    return Ar1Path(x=_recursion(eps, params.theta), eps=eps)


def from_noise(eps, theta: float) -> Ar1Path:
    """Run the recursion on a given noise sequence ``eps_0..eps_n``."""
    eps = np.asarray(eps, dtype=float)
    return Ar1Path(x=_recursion(eps, float(theta)), eps=eps)


def terminal_sums(params: Ar1Params, rng: np.random.Generator) -> tuple[float, float]:
    """``(sum X_{k-1} X_k, sum X_{k-1}^2)`` from the same draws as :func:`simulate`."""
    u = rng.random(params.n + 1)
    return _sums_from_uniforms(u, params.theta, params.noise.code, params.noise.scale)


def _sums(path: Ar1Path) -> tuple[float, float]:
    prev = path.x[:-1]
    return float(np.dot(prev, path.x[1:])), float(np.dot(prev, prev))


def _denominator(path: Ar1Path) -> float:
    sxx = _sums(path)[1]
    if sxx <= 0.0:
        raise DegeneratePathError("sum of squared lagged observations is zero")
    return sxx


def lse(path: Ar1Path) -> float:
    """Least-squares estimate ``sum X_{k-1} X_k / sum X_{k-1}^2``."""
    sxy, sxx = _sums(path)
    if sxx <= 0.0:
        raise DegeneratePathError("sum of squared lagged observations is zero")
    return sxy / sxx


def _check_sigma(sigma: float) -> None:
    if not sigma > 0.0:
        raise DomainError(f"sigma must be positive, got {sigma}")


def studentized_stat(path: Ar1Path, theta_true: float, sigma: float) -> float:
    """``(theta_hat - theta) sqrt(sum X_{k-1}^2) / sigma``, i.e. ``S_n / sqrt(<S>_n)``."""
    _check_sigma(sigma)
    return (lse(path) - theta_true) * math.sqrt(_denominator(path)) / sigma


def standardized_stat(path: Ar1Path, theta_true: float, sigma: float) -> float:
    """``(theta_hat - theta) sqrt((1 - theta^2) / (n sigma^4)) sum X_{k-1}^2``."""
    _check_sigma(sigma)
    if not -1.0 < theta_true < 1.0:
        raise DomainError("standardized statistic needs |theta| < 1")
    sxx = _denominator(path)
    scale = math.sqrt((1.0 - theta_true ** 2) / (path.n * sigma ** 4))
    return (lse(path) - theta_true) * scale * sxx


def half_width_factor(kappa: float, regime: str) -> float:
    """Critical value multiplying ``sigma / sqrt(sum X_{k-1}^2)``."""
    if not 0.0 < kappa < 1.0:
        raise DomainError(f"kappa must lie in (0, 1), got {kappa}")
    if regime == QUANTILE:
        return std_normal_isf(kappa / 2.0)
    if regime == EXPONENTIAL:
        return math.sqrt(2.0 * abs(math.log(kappa / 2.0)))
    raise DomainError(f"unknown interval regime {regime!r}")


def confidence_interval(path: Ar1Path, sigma: float, kappa: float,
                        regime: str = QUANTILE) -> ConfidenceInterval:
    _check_sigma(sigma)
    factor = half_width_factor(kappa, regime)
    theta_hat = lse(path)
    hw = factor * sigma / math.sqrt(_denominator(path))
    return ConfidenceInterval(lo=theta_hat - hw, hi=theta_hat + hw, kappa=kappa, regime=regime)


def quadratic_variation(path: Ar1Path, sigma: float) -> float:
    """``<S>_n = sigma^2 sum X_{k-1}^2`` of the martingale ``S_n = sum X_{k-1} eps_k``."""
    _check_sigma(sigma)
    return sigma ** 2 * _sums(path)[1]


def martingale(path: Ar1Path) -> float:
    """``S_n = sum X_{k-1} eps_k``; needs the noise sequence."""
    if path.eps is None:
        raise DomainError("path carries no noise sequence")
    return float(np.dot(path.x[:-1], path.eps[1:]))


def expected_martingale_square(theta: float, sigma: float, n: int) -> float:
    """Exact ``E S_n^2 = sigma^4 sum_{i=1}^n sum_{j=0}^{i-1} theta^{2j}``."""
    r = theta * theta
    if r == 0.0:
        return n * sigma ** 4
    return sigma ** 4 * (n - r * (1.0 - r ** n) / (1.0 - r)) / (1.0 - r)


def expected_sum_squares(theta: float, sigma: float, n: int) -> float:
    """``E sum_{k=1}^n X_{k-1}^2``."""
    return expected_martingale_square(theta, sigma, n) / sigma ** 2


def path_bound(params: Ar1Params) -> float:
    """Almost-sure bound ``H / (1 - |theta|)`` on every ``|X_k|``."""
    return params.noise.bound / (1.0 - abs(params.theta))


def fit_summary(path: Ar1Path, theta_true: float, sigma: float, kappa: float,
                regime: str = QUANTILE) -> dict:
    ci = confidence_interval(path, sigma, kappa, regime)
    return {
        "theta_hat": lse(path),
        "stat_studentized": studentized_stat(path, theta_true, sigma),
        "stat_standardized": standardized_stat(path, theta_true, sigma),
        "ci_lo": ci.lo,
        "ci_hi": ci.hi,
        "regime": regime,
        "kappa": kappa,
    }


def fit_summary_json(summary: dict) -> str:
    return json.dumps(summary, indent=2) + "\n"
