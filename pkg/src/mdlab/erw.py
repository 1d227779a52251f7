"""Elephant random walk with random step sizes.

The walk: ``x_1 = +1`` with probability ``q``; for ``k >= 2`` a past index
``beta`` is drawn uniformly from ``{1, ..., k-1}`` and ``x_k = alpha * x_beta``
with ``alpha = +1`` w.p. ``p``.  Step sizes ``z_k`` are i.i.d., mean one,
bounded by ``C`` and independent of the signs; ``s_n = sum x_k z_k``.

``a_n s_n`` is (up to the first-step correction ``2q - 1``) a martingale
with deterministic coefficients ``a_n = Gamma(n) Gamma(2p) / Gamma(n + 2p - 1)``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .errors import ConsistencyError, DomainError, NumericError

STEP_KINDS = ("constant_one", "two_point", "uniform_on")
_KIND_CODE = {kind: i for i, kind in enumerate(STEP_KINDS)}

DETERMINISTIC = "deterministic"
SELF_NORMALIZED = "self_normalized"
_MODE_ALIASES = {
    "deterministic": DETERMINISTIC, "det": DETERMINISTIC,
    "self_normalized": SELF_NORMALIZED, "self": SELF_NORMALIZED,
}


def normalize_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise DomainError(f"unknown normalizer mode {mode!r}") from None


@dataclass(frozen=True)
class StepDistribution:
    """Bounded, mean-one step-size law.

    ``two_point`` puts mass ``w`` on ``z1`` and ``1 - w`` on ``z2``;
    ``uniform_on`` is uniform on ``[0, 2]``.
    """

    kind: str = "constant_one"
    z1: float = 1.0
    z2: float = 1.0
    w: float = 1.0

    def __post_init__(self):
        if self.kind not in STEP_KINDS:
            raise DomainError(f"unknown step distribution {self.kind!r}")
        if self.kind == "two_point":
            if not 0.0 <= self.w <= 1.0:
                raise DomainError("two_point weight must lie in [0, 1]")
            if self.z1 < 0.0 or self.z2 < 0.0:
                raise DomainError("step sizes must be nonnegative")
            if abs(self.w * self.z1 + (1.0 - self.w) * self.z2 - 1.0) > 1e-12:
                raise DomainError("two_point step distribution must have mean 1")

    @classmethod
    def constant_one(cls) -> "StepDistribution":
        return cls("constant_one")

    @classmethod
    def two_point(cls, z1: float, z2: float, w: float) -> "StepDistribution":
        return cls("two_point", float(z1), float(z2), float(w))

    @classmethod
    def uniform_on(cls) -> "StepDistribution":
        return cls("uniform_on", 0.0, 2.0, 0.5)

    @property
    def variance(self) -> float:
        if self.kind == "constant_one":
            return 0.0
        if self.kind == "uniform_on":
            return 1.0 / 3.0
        return self.w * self.z1 ** 2 + (1.0 - self.w) * self.z2 ** 2 - 1.0

    @property
    def bound(self) -> float:
        """The constant ``C >= 1`` with ``0 <= z <= C``."""
        if self.kind == "constant_one":
            return 1.0
        if self.kind == "uniform_on":
            return 2.0
        return max(1.0, self.z1, self.z2)

    @property
    def code(self) -> int:
        return _KIND_CODE[self.kind]

    @property
    def consumes_draws(self) -> bool:
        return self.kind != "constant_one"

    def from_uniforms(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms on ``[0, 1)`` to step sizes."""
        return _steps_from_uniforms(u, self.code, self.z1, self.z2, self.w)


@dataclass(frozen=True)
class ErwParams:
    p: float
    n: int
    steps: StepDistribution = field(default_factory=StepDistribution.constant_one)
    q: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"memory parameter must lie in [0, 1], got {self.p}")
        if not 0.0 <= self.q <= 1.0:
            raise DomainError(f"first-step probability must lie in [0, 1], got {self.q}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"horizon must be a positive integer, got {self.n}")


@dataclass(frozen=True, eq=False)
class CoefficientTable:
    """``gamma_k`` (k < n), ``a_k``, ``v_k`` and ``ln a_k`` for k = 1..n (0-based arrays)."""

    p: float
    gamma: np.ndarray
    a: np.ndarray
    v: np.ndarray
    log_a: np.ndarray

    @property
    def n(self) -> int:
        return len(self.a)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("k,gamma_k,a_k,v_k\n")
        for k in range(1, self.n + 1):
            g = fmt(self.gamma[k - 1]) if k < self.n else ""
            buf.write(f"{k},{g},{fmt(self.a[k - 1])},{fmt(self.v[k - 1])}\n")
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class ErwPath:
    params: ErwParams
    signs: np.ndarray
    step_sizes: np.ndarray
    sign_sums: np.ndarray
    weighted_sums: np.ndarray

    @property
    def n(self) -> int:
        return len(self.signs)


@dataclass(frozen=True, eq=False)
class MartingaleStats:
    m_n: float
    increments: np.ndarray
    qv: float
    det_normalizer: float
    self_normalizer: float


@dataclass(frozen=True)
class Envelope:
    epsilon_n: float
    delta_n: float
    regime: str


def fmt(value: float) -> str:
    """17 significant digits, the round-trip format of every exported float."""
    return f"{float(value):.17g}"


def coefficients(p: float, n: int) -> CoefficientTable:
    """Coefficient table built by the recurrence ``a_{k+1} = a_k / gamma_k`` in log space."""
    if not 0.0 < p <= 1.0:
        raise DomainError(f"coefficients need p in (0, 1], got {p}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    n = int(n)
    k = np.arange(1, n, dtype=float)
    c = 2.0 * p - 1.0
    gamma = 1.0 + c / k
    log_a = np.zeros(n)
    # all gamma_k > 0 for p in (0, 1], so no sign tracking is needed
    np.cumsum(-np.log1p(c / k), out=log_a[1:])
    a = np.exp(log_a)
    v = np.cumsum(a * a)
    for arr in (gamma, a, v, log_a):
        arr.flags.writeable = False
    return CoefficientTable(p=float(p), gamma=gamma, a=a, v=v, log_a=log_a)


@nb.njit(cache=True, nogil=True)
def _steps_from_uniforms(u, kind, z1, z2, w):
    out = np.empty(u.shape[0])
    for i in range(u.shape[0]):
        if kind == 0:
            out[i] = 1.0
        elif kind == 1:
            out[i] = z1 if u[i] < w else z2
        else:
            out[i] = 2.0 * u[i]
    return out


@nb.njit(cache=True, nogil=True)
def _recall_signs(ua, ub, p, q):
    n = ua.shape[0]
    x = np.empty(n, dtype=np.int8)
    x[0] = 1 if ua[0] < q else -1
    for k in range(1, n):
        # k is the 0-based index of step k+1; recall among the k earlier steps
        beta = int(ub[k] * k)
        if beta >= k:
            beta = k - 1
        alpha = 1 if ua[k] < p else -1
        x[k] = alpha * x[beta]
    return x


@nb.njit(cache=True, nogil=True)
def _conditional_signs(u, p, q):
    n = u.shape[0]
    x = np.empty(n, dtype=np.int8)
    c = 2.0 * p - 1.0
    x[0] = 1 if u[0] < q else -1
    t = float(x[0])
    for k in range(1, n):
        up = 0.5 * (1.0 + c * t / k)
        x[k] = 1 if u[k] < up else -1
        t += x[k]
    return x


@nb.njit(cache=True, nogil=True)
def _terminal_fast(u, zu, p, q, kind, z1, z2, w):
    """Run the conditional-law sampler keeping only ``(t_n, s_n, sum (z-1)^2)``."""
    n = u.shape[0]
    c = 2.0 * p - 1.0
    t = 0.0
    s = 0.0
    ssq = 0.0
    for k in range(n):
        if k == 0:
            x = 1.0 if u[0] < q else -1.0
        else:
            x = 1.0 if u[k] < 0.5 * (1.0 + c * t / k) else -1.0
        if kind == 0:
            z = 1.0
        elif kind == 1:
            z = z1 if zu[k] < w else z2
        else:
            z = 2.0 * zu[k]
        t += x
        s += x * z
        ssq += (z - 1.0) * (z - 1.0)
    return t, s, ssq


def _draw_steps(params: ErwParams, rng: np.random.Generator) -> np.ndarray:
    if params.steps.consumes_draws:
        return params.steps.from_uniforms(rng.random(params.n))
    return np.ones(params.n)


def _assemble(params: ErwParams, signs: np.ndarray, z: np.ndarray) -> ErwPath:
    t = np.cumsum(signs, dtype=np.int64)
    s = np.cumsum(signs * z)
    return ErwPath(params=params, signs=signs, step_sizes=z, sign_sums=t, weighted_sums=s)


def simulate_path(params: ErwParams, rng: np.random.Generator) -> ErwPath:
    """Reference sampler: uniform recall of a past sign, kept or flipped.

    Draw order on ``rng``: n uniforms for ``alpha`` (the first one decides
    ``x_1``), n uniforms for ``beta``, then n step-size uniforms.
    """
    ua = rng.random(params.n)
    ub = rng.random(params.n)
    signs = _recall_signs(ua, ub, params.p, params.q)
    return _assemble(params, signs, _draw_steps(params, rng))


def simulate_path_fast(params: ErwParams, rng: np.random.Generator) -> ErwPath:
    """Sampler using the conditional law ``P(x_k = 1 | past) = (1 + (2p-1) t_{k-1}/(k-1)) / 2``.

    Draw order on ``rng``: n sign uniforms, then n step-size uniforms.
    Same law as :func:`simulate_path`.
    """
    u = rng.random(params.n)
    signs = _conditional_signs(u, params.p, params.q)
    return _assemble(params, signs, _draw_steps(params, rng))


def terminal_fast(params: ErwParams, rng: np.random.Generator) -> tuple[float, float, float]:
    """``(t_n, s_n, sum (z_i - 1)^2)`` from the same draws as :func:`simulate_path_fast`."""
    u = rng.random(params.n)
    zu = rng.random(params.n) if params.steps.consumes_draws else u
    st = params.steps
    return _terminal_fast(u, zu, params.p, params.q, st.code, st.z1, st.z2, st.w)


def _check_table(path: ErwPath, table: CoefficientTable) -> None:
    if table.p != path.params.p:
        raise ConsistencyError(f"table built for p={table.p}, path has p={path.params.p}")
    if table.n < path.n:
        raise ConsistencyError(f"table length {table.n} shorter than path length {path.n}")


def conditional_variances(path: ErwPath, table: CoefficientTable) -> np.ndarray:
    """Per-step terms ``E[dM_{n,k}^2 | F_{k-1}]`` of the quadratic variation.

    ``a_n^2 sigma^2 + a_k^2 - (2p-1)^2 a_k^2 (t_{k-1}/(k-1))^2`` for k >= 2; the
    first term is ``a_n^2 sigma^2 + 1 - (2q-1)^2`` (``1 + a_n^2 sigma^2`` when q = 1/2).
    """
    _check_table(path, table)
    n = path.n
    a = table.a[:n]
    a_n = a[-1]
    c = 2.0 * path.params.q - 1.0
    cp = 2.0 * path.params.p - 1.0
    t = path.sign_sums.astype(float)
    drift = np.empty(n)
    drift[0] = c * c
    drift[1:] = cp * cp * (t[:-1] / np.arange(1, n)) ** 2
    return a_n * a_n * path.params.steps.variance + a * a * (1.0 - drift)


def martingale_stats(path: ErwPath, table: CoefficientTable) -> MartingaleStats:
    """Martingale decomposition of ``a_n s_n - (2q - 1)``.

    Increments are ``a_n x_k (z_k - 1) + a_k (t_k - gamma_{k-1} t_{k-1})``
    with ``gamma_0 t_0`` replaced by the first-step mean ``2q - 1``, so they
    telescope to ``m_n``.
    """
    _check_table(path, table)
    prm = path.params
    n = path.n
    a = table.a[:n]
    a_n = a[-1]
    sigma2 = prm.steps.variance
    c = 2.0 * prm.q - 1.0

    t = path.sign_sums.astype(float)
    z = path.step_sizes
    center = np.empty(n)
    center[0] = c
    center[1:] = table.gamma[: n - 1] * t[:-1]
    increments = a_n * path.signs * (z - 1.0) + a * (t - center)
    qv = float(np.sum(conditional_variances(path, table)))

    v_n = table.v[n - 1]
    det = math.sqrt(v_n + n * a_n * a_n * sigma2)
    selfn = math.sqrt(v_n + a_n * a_n * float(np.sum((z - 1.0) ** 2)))
    m_n = a_n * float(path.weighted_sums[-1]) - c
    return MartingaleStats(m_n=m_n, increments=increments, qv=qv,
                           det_normalizer=det, self_normalizer=selfn)


def next_up_probability(p: float, t_prev: float, k_prev: int) -> float:
    """``P(x_{k} = +1 | past)`` given ``t_{k-1}`` after ``k - 1 >= 1`` steps."""
    return 0.5 * (1.0 + (2.0 * p - 1.0) * t_prev / k_prev)


def normalized_statistic(stats: MartingaleStats, mode: str = DETERMINISTIC) -> float:
    mode = normalize_mode(mode)
    denom = stats.det_normalizer if mode == DETERMINISTIC else stats.self_normalizer
    if not denom > 0.0:
        raise NumericError("normalizer must be positive")
    return stats.m_n / denom


def theoretical_envelope(p: float, n: float) -> Envelope:
    """Orders (unit constants) of the error scales of the normal approximation."""
    if not 0.0 < p <= 0.75:
        raise DomainError(f"envelope defined for p in (0, 3/4], got {p}")
    if n < 3:
        raise DomainError("envelope needs n >= 3")
    if p <= 0.5:
        rate, regime = n ** -0.5, "diffusive"
    elif p < 0.75:
        rate, regime = math.exp(-0.5 * (3.0 - 4.0 * p) * math.log(n)), "diffusive_reinforced"
    else:
        rate, regime = math.log(n) ** -0.5, "critical"
    return Envelope(epsilon_n=rate, delta_n=rate, regime=regime)
