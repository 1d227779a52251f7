"""Reproducible parallel Monte Carlo engine and the experiment kinds built on it.

Replicate ``i`` always draws from ``replicate_stream(master_seed, i)``: a
Philox generator keyed by the 128-bit value ``master_seed + (i << 64)``.
Philox is counter based, so every replicate stream is independent of the
others and of the order in which workers visit them; results are written
back by index, which makes output bit-identical across worker counts.
"""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import ar1, erw
from .errors import DegeneratePathError, DomainError, ReplicateError
from .erw import fmt
from .normal import std_normal_isf, std_normal_tail, std_normal_tail_array

MIN_NORMAL_TAIL = 1e-15
BOUNDARY_GRID_CAP = 3.0  # largest x accepted when p >= 3/4
Z95 = std_normal_isf(0.025)
_U64 = 1 << 64

Model = Union[erw.ErwParams, ar1.Ar1Params]

ERW_MODES = (erw.DETERMINISTIC, erw.SELF_NORMALIZED)
AR1_MODES = (ar1.STUDENTIZED, ar1.STANDARDIZED)

TAIL_RATIO_HEADER = "x,side,hits,reps,p_hat,p_lo,p_hi,normal_tail,ratio,ratio_lo,ratio_hi"


def replicate_stream(master_seed: int, index: int) -> np.random.Generator:
    """Random stream of replicate ``index``; a pure function of its two arguments."""
    if not 0 <= master_seed < _U64:
        raise DomainError("master seed must be an unsigned 64-bit integer")
    if not 0 <= index < _U64:
        raise DomainError("replicate index out of range")
    return np.random.Generator(np.random.Philox(key=master_seed + (index << 64)))


@dataclass(frozen=True)
class McConfig:
    model: Model
    replications: int
    master_seed: int = 0
    workers: int = 1
    grid: tuple[float, ...] = ()
    statistic_mode: str = ""

    def __post_init__(self):
        if int(self.replications) != self.replications or self.replications < 1:
            raise DomainError("replications must be a positive integer")
        if not 0 <= self.master_seed < _U64:
            raise DomainError("master seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise DomainError("workers must be positive")
        grid = tuple(float(x) for x in self.grid)
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise DomainError("grid must be sorted ascending")
        if any(x < 0 for x in grid):
            raise DomainError("grid points must be nonnegative")
        for x in grid:
            if std_normal_tail(x) < MIN_NORMAL_TAIL:
                raise DomainError(f"grid point {x} has normal tail below {MIN_NORMAL_TAIL}")
        object.__setattr__(self, "grid", grid)
        if isinstance(self.model, erw.ErwParams):
            mode = erw.normalize_mode(self.statistic_mode or erw.DETERMINISTIC)
            if not 0.0 < self.model.p:
                raise DomainError("ERW experiments need p > 0")
            if self.model.p >= 0.75 and grid and grid[-1] > BOUNDARY_GRID_CAP:
                raise DomainError(f"grid points above {BOUNDARY_GRID_CAP:g} are not supported for p >= 3/4")
        elif isinstance(self.model, ar1.Ar1Params):
            mode = self.statistic_mode or ar1.STUDENTIZED
            if mode not in AR1_MODES:
                raise DomainError(f"unknown AR(1) statistic {mode!r}")
        else:
            raise DomainError(f"unsupported model {type(self.model).__name__}")
        object.__setattr__(self, "statistic_mode", mode)

    def describe(self) -> dict:
        """Plain-data view for manifests."""
        m = self.model
        if isinstance(m, erw.ErwParams):
            model = {"kind": "erw", "p": m.p, "q": m.q, "n": m.n,
                     "steps": {"kind": m.steps.kind, "z1": m.steps.z1, "z2": m.steps.z2, "w": m.steps.w}}
        else:
            model = {"kind": "ar1", "theta": m.theta, "n": m.n,
                     "noise": {"kind": m.noise.kind, "scale": m.noise.scale}}
        return {"model": model, "replications": self.replications, "master_seed": self.master_seed,
                "workers": self.workers, "grid": list(self.grid), "statistic_mode": self.statistic_mode}


@dataclass(frozen=True)
class TailRatioEstimate:
    x: float
    side: str
    hits: int
    reps: int
    p_hat: float
    p_lo: float
    p_hi: float
    normal_tail: float
    ratio: float
    ratio_lo: float
    ratio_hi: float
    flagged: bool = False

    def csv_row(self) -> str:
        vals = [fmt(self.x), self.side, str(self.hits), str(self.reps)]
        vals += [fmt(v) for v in (self.p_hat, self.p_lo, self.p_hi, self.normal_tail,
                                  self.ratio, self.ratio_lo, self.ratio_hi)]
        return ",".join(vals)


@dataclass(frozen=True)
class KsEstimate:
    d_sup: float
    R: int
    dkw_bound: float


@dataclass(frozen=True)
class CoverageEstimate:
    covered: int
    R: int
    coverage: float
    binom_lo: float
    binom_hi: float
    kappa: float
    degenerate: int = 0


@dataclass(frozen=True)
class RateFit:
    c_hat: float
    residuals: np.ndarray = field(repr=False)


# -- replicate engine ---------------------------------------------------------

def _erw_block(model: erw.ErwParams, seed: int, start: int, stop: int, out: np.ndarray) -> None:
    for i in range(start, stop):
        out[i] = erw.terminal_fast(model, replicate_stream(seed, i))


def _ar1_block(model: ar1.Ar1Params, seed: int, start: int, stop: int, out: np.ndarray) -> None:
    for i in range(start, stop):
        out[i] = ar1.terminal_sums(model, replicate_stream(seed, i))


def _chunks(total: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, total))
    edges = np.linspace(0, total, parts + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def replicate_records(config: McConfig) -> np.ndarray:
    """Per-replicate sufficient summaries in replicate order.

    ERW rows are ``(t_n, s_n, sum (z_i - 1)^2)``; AR(1) rows are
    ``(sum X_{k-1} X_k, sum X_{k-1}^2)``.
    """
    if isinstance(config.model, erw.ErwParams):
        out = np.empty((config.replications, 3))
        block = _erw_block
    else:
        out = np.empty((config.replications, 2))
        block = _ar1_block
    chunks = _chunks(config.replications, config.workers * 4)
    if config.workers == 1:
        for a, b in chunks:
            block(config.model, config.master_seed, a, b, out)
    else:
        # kernels and Philox fills release the GIL
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(block, config.model, config.master_seed, a, b, out)
                       for a, b in chunks]
            for f in futures:
                f.result()
    return out


def erw_statistics(model: erw.ErwParams, records: np.ndarray, mode: str) -> np.ndarray:
    table = erw.coefficients(model.p, model.n)
    a_n, v_n = table.a[-1], table.v[-1]
    m = a_n * records[:, 1] - (2.0 * model.q - 1.0)
    if erw.normalize_mode(mode) == erw.DETERMINISTIC:
        return m / math.sqrt(v_n + model.n * a_n * a_n * model.steps.variance)
    return m / np.sqrt(v_n + a_n * a_n * records[:, 2])


def ar1_statistics(model: ar1.Ar1Params, records: np.ndarray, mode: str,
                   strict: bool = True) -> np.ndarray:
    """AR(1) statistics; degenerate replicates raise when ``strict`` else become NaN."""
    sxy, sxx = records[:, 0], records[:, 1]
    bad = np.flatnonzero(sxx <= 0.0)
    if strict and bad.size:
        raise ReplicateError(int(bad[0]), DegeneratePathError("zero denominator"))
    sigma = model.noise.sigma
    with np.errstate(divide="ignore", invalid="ignore"):
        err = sxy / sxx - model.theta
        if mode == ar1.STUDENTIZED:
            stat = err * np.sqrt(sxx) / sigma
        else:
            stat = err * math.sqrt((1.0 - model.theta ** 2) / (model.n * sigma ** 4)) * sxx
    stat[bad] = np.nan
    return stat


def statistics_from_records(config: McConfig, records: np.ndarray) -> np.ndarray:
    if isinstance(config.model, erw.ErwParams):
        return erw_statistics(config.model, records, config.statistic_mode)
    return ar1_statistics(config.model, records, config.statistic_mode)


def run_replicates(config: McConfig) -> np.ndarray:
    """Statistic value of every replicate, ordered by replicate index."""
    return statistics_from_records(config, replicate_records(config))


# -- binomial and tail summaries ----------------------------------------------

def wilson_interval(hits: int, reps: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if reps < 1 or not 0 <= hits <= reps:
        raise DomainError("need 0 <= hits <= reps and reps >= 1")
    phat = hits / reps
    z2 = z * z
    denom = 1.0 + z2 / reps
    centre = (phat + z2 / (2 * reps)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / reps + z2 / (4 * reps * reps)) / denom
    lo = 0.0 if hits == 0 else max(0.0, centre - half)
    hi = 1.0 if hits == reps else min(1.0, centre + half)
    return lo, hi


def tail_ratios(samples: Sequence[float], grid: Sequence[float]) -> list[TailRatioEstimate]:
    """Upper and lower tail ratios ``P(stat >= x) / (1 - Phi(x))``, ``P(stat <= -x) / Phi(-x)``.

    Both sides come from the same sample.  Grid points whose normal tail
    underflows are returned with ``flagged=True`` and NaN ratios.
    """
    s = np.sort(np.asarray(samples, dtype=float))
    reps = len(s)
    out = []
    for x in grid:
        x = float(x)
        tail = std_normal_tail(x)
        upper = reps - int(np.searchsorted(s, x, side="left"))
        lower = int(np.searchsorted(s, -x, side="right"))
        for side, hits in (("upper", upper), ("lower", lower)):
            lo, hi = wilson_interval(hits, reps)
            phat = hits / reps
            if tail > 0.0:
                est = TailRatioEstimate(x, side, hits, reps, phat, lo, hi, tail,
                                        phat / tail, lo / tail, hi / tail)
            else:
                nan = float("nan")
                est = TailRatioEstimate(x, side, hits, reps, phat, lo, hi, tail,
                                        nan, nan, nan, flagged=True)
            out.append(est)
    return out


def tail_ratio_sweep(config: McConfig) -> list[TailRatioEstimate]:
    if not config.grid:
        raise DomainError("tail-ratio sweep needs a nonempty grid")
    return tail_ratios(run_replicates(config), config.grid)


def tail_ratio_csv(estimates: Sequence[TailRatioEstimate]) -> str:
    buf = io.StringIO()
    buf.write(TAIL_RATIO_HEADER + "\n")
    for est in estimates:
        buf.write(est.csv_row() + "\n")
    return buf.getvalue()


def ks_distance(samples: Sequence[float]) -> float:
    """Exact one-sample Kolmogorov-Smirnov distance to the standard normal."""
    s = np.sort(np.asarray(samples, dtype=float))
    r = len(s)
    if r == 0:
        raise DomainError("empty sample")
    cdf = 1.0 - std_normal_tail_array(s)
    i = np.arange(1, r + 1)
    return float(max(np.max(i / r - cdf), np.max(cdf - (i - 1) / r)))


def dkw_bound(reps: int, alpha: float = 0.05) -> float:
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * reps))


def berry_esseen_distance(config: McConfig) -> KsEstimate:
    if config.replications < 100:
        raise DomainError("Berry-Esseen distance needs at least 100 replications")
    d = ks_distance(run_replicates(config))
    return KsEstimate(d_sup=d, R=config.replications, dkw_bound=dkw_bound(config.replications))


def coverage_experiment(config: McConfig, kappa: float, regime: str = ar1.QUANTILE) -> CoverageEstimate:
    """Fraction of replicates whose interval contains the true ``theta``."""
    model = config.model
    if not isinstance(model, ar1.Ar1Params):
        raise DomainError("coverage experiments need an AR(1) model")
    factor = ar1.half_width_factor(kappa, regime)
    records = replicate_records(config)
    sxy, sxx = records[:, 0], records[:, 1]
    ok = sxx > 0.0
    degenerate = int(np.count_nonzero(~ok))
    theta_hat = sxy[ok] / sxx[ok]
    hw = factor * model.noise.sigma / np.sqrt(sxx[ok])
    covered = int(np.count_nonzero((theta_hat - hw <= model.theta) & (model.theta <= theta_hat + hw)))
    used = int(np.count_nonzero(ok))
    if used == 0:
        raise DomainError("every replicate was degenerate")
    lo, hi = wilson_interval(covered, used)
    return CoverageEstimate(covered=covered, R=used, coverage=covered / used,
                            binom_lo=lo, binom_hi=hi, kappa=kappa, degenerate=degenerate)


def rate_fit(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least-squares scale ``c`` in ``d = c ln(n) / sqrt(n)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] != 2:
        raise DomainError("points must be a sequence of (n, d) pairs")
    n, d = pts[:, 0], pts[:, 1]
    if np.any(n < 3):
        raise DomainError("rate fit needs n >= 3")
    r = np.log(n) / np.sqrt(n)
    c_hat = float(np.dot(d, r) / np.dot(r, r))
    return RateFit(c_hat=c_hat, residuals=d - c_hat * r)


def default_workers() -> int:
    env = os.environ.get("MDLAB_WORKERS")
    if env:
        return int(env)
    return 1
