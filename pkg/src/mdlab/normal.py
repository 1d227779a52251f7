"""Standard normal tail, quantile and Mills-ratio bounds.

Every tail ratio in the package divides by ``1 - Phi(x)``, so the tail is
evaluated with relative (not absolute) accuracy through the scaled
complementary error function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import DomainError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
SQRTPI = math.sqrt(math.pi)

# beyond this the tail underflows double precision
TAIL_CUTOFF = 38.0

# rational initial guess for the inverse normal CDF (Acklam)
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


@dataclass(frozen=True)
class MillsBounds:
    lower: float
    upper: float

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def _check_finite(x: float) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise DomainError(f"argument must be finite, got {x!r}")
    return x


def std_normal_tail(x: float) -> float:
    """Return ``1 - Phi(x)`` with relative accuracy near machine precision."""
    x = _check_finite(x)
    if x > TAIL_CUTOFF:
        return 0.0
    if x < -TAIL_CUTOFF:
        return 1.0
    if x >= 0.0:
        return 0.5 * float(special.erfcx(x / SQRT2)) * math.exp(-0.5 * x * x)
    return 0.5 * float(special.erfc(x / SQRT2))


def std_normal_cdf(x: float) -> float:
    return std_normal_tail(-_check_finite(x))


def std_normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / SQRT2PI


def std_normal_tail_array(x) -> np.ndarray:
    """Vectorised ``1 - Phi(x)``; non-finite entries raise."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("arguments must be finite")
    out = 0.5 * special.erfc(x / SQRT2)
    pos = x >= 0.0
    out[pos] = 0.5 * special.erfcx(x[pos] / SQRT2) * np.exp(-0.5 * x[pos] ** 2)
    out[x > TAIL_CUTOFF] = 0.0
    out[x < -TAIL_CUTOFF] = 1.0
    return out


def _lower_guess(t: float) -> float:
    # Acklam's approximation of Phi^{-1}(t) for t <= 0.5
    if t < _P_LOW:
        q = math.sqrt(-2.0 * math.log(t))
        num = ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        den = (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0
        return num / den
    q = t - 0.5
    r = q * q
    num = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
    return num / den


def std_normal_isf(t: float) -> float:
    """Upper-tail quantile: the ``x`` with ``1 - Phi(x) = t``.

    Takes the tail probability directly so that small ``t`` never passes
    through ``1 - t`` in floating point.
    """
    t = _check_finite(t)
    if not 0.0 < t < 1.0:
        raise DomainError(f"tail probability must lie in (0, 1), got {t!r}")
    if t > 0.5:
        return -std_normal_isf(1.0 - t)
    if t == 0.5:
        return 0.0
    x = -_lower_guess(t)
    for _ in range(2):
        x += (std_normal_tail(x) - t) / std_normal_pdf(x)
    return x


def std_normal_quantile(p: float) -> float:
    """Inverse standard normal CDF on the open unit interval."""
    p = _check_finite(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"probability must lie in (0, 1), got {p!r}")
    if p < 0.5:
        return -std_normal_isf(p)
    # 1 - p is exact here (Sterbenz)
    return std_normal_isf(1.0 - p)


def mills_bounds(x: float) -> MillsBounds:
    """Two-sided Mills-ratio bounds on ``1 - Phi(x)`` for ``x >= 0``.

    ``exp(-x^2/2) / (sqrt(2 pi) (1 + x)) <= 1 - Phi(x) <= exp(-x^2/2) / (sqrt(pi) (1 + x))``
    """
    x = _check_finite(x)
    if x < 0.0:
        raise DomainError(f"Mills bounds need x >= 0, got {x!r}")
    g = math.exp(-0.5 * x * x) / (1.0 + x)
    return MillsBounds(lower=g / SQRT2PI, upper=g / SQRTPI)
