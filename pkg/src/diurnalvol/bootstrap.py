"""Overlapping wild blocks-of-blocks bootstrap for bipower statistics.

The summands y_i of a bipower statistic are grouped into overlapping blocks
of length b.  Differences of block sums b apart, multiplied by external
variables u_j with mean 0 and variance 1/2, perturb the statistic:

    BV* = BV - b^{-1/2} * sum_j dB_j u_j,   j = 1..J,   J = N - 2b + 1.

The resampled observations never have to be built; ``wild_blocks_sample``
builds them anyway so the shortcut can be checked against them.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .bipower import bipower_scale, bipower_summands
from .errors import ConfigError, DataError
from .preavg import PreAveragedSeries
from .rng import stream
from .teststat import power_ratio, v_check

log = logging.getLogger(__name__)

_KINDS = {
    "gaussian": "gaussian", "gaussian_half_var": "gaussian", "wb1": "gaussian",
    "mammen": "mammen", "mammen_scaled": "mammen", "wb2": "mammen",
}
KIND_ID = {"gaussian": 1, "mammen": 2}
KIND_LABEL = {"gaussian": "wb1", "mammen": "wb2"}

_S5 = math.sqrt(5.0)
MAMMEN_LOW = (1.0 - _S5) / (2.0 * math.sqrt(2.0))
MAMMEN_HIGH = (1.0 + _S5) / (2.0 * math.sqrt(2.0))
MAMMEN_P_LOW = (_S5 + 1.0) / (2.0 * _S5)


def external_kind(kind: str) -> str:
    try:
        return _KINDS[kind]
    except KeyError:
        raise ConfigError(f"unknown external variable {kind!r}") from None


@dataclass(frozen=True)
class BootstrapConfig:
    b_n: Optional[int] = None
    B: int = 199
    external_kind: str = "mammen"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "external_kind", external_kind(self.external_kind))
        if self.B < 1:
            raise ConfigError("B must be positive")
        if self.b_n is not None and self.b_n < 1:
            raise ConfigError("b_n must be positive")


@dataclass(frozen=True)
class CovarianceEstimate:
    entries: np.ndarray
    b_n: int
    J_n: int


def draw_external(kind: str, count, rng) -> np.ndarray:
    """External variables with mean 0 and variance 1/2."""
    kind = external_kind(kind)
    if not isinstance(rng, np.random.Generator):
        rng = stream(rng) if np.isscalar(rng) else stream(*rng)
    if kind == "gaussian":
        return rng.standard_normal(count) * math.sqrt(0.5)
    return np.where(rng.random(count) < MAMMEN_P_LOW, MAMMEN_LOW, MAMMEN_HIGH)


def external_moment_ratio(kind: str) -> float:
    """var*(u) / E*(u^2); both laws are centred so this is 1."""
    external_kind(kind)
    return 1.0


def block_means(y, b: int) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if b < 1 or y.size < b:
        raise DataError("block longer than data")
    c = np.concatenate(([0.0], np.cumsum(y)))
    return (c[b:] - c[:-b]) / b


def delta_from_summands(y, b: int, scale: float = 1.0) -> np.ndarray:
    """scale * (sum of block j+b - sum of block j), j = 1..N-2b+1."""
    y = np.ascontiguousarray(y, dtype=float)
    if b < 1 or y.size < 2 * b:
        raise DataError(f"N={y.size} too short for block length {b}")
    return scale * _kernels.block_increments(y, int(b))


def delta_b(series: PreAveragedSeries, l: float, r: float, rule, b_n: int) -> np.ndarray:
    """Scaled block-sum increments of the truncated (l, r) summands."""
    thr = np.inf if rule is None else getattr(rule, "threshold", rule)
    y = bipower_summands(series, l, r, thr)
    return delta_from_summands(y, b_n, bipower_scale(series, l, r))


def sigma_hat(delta_b_22, delta_b_11, n: int, b_n: int) -> CovarianceEstimate:
    """sqrt(n)/(2b) * sum_j xi_j xi_j^T with xi_j = (dB22_j, dB11_j)."""
    d22 = np.asarray(delta_b_22, dtype=float)
    d11 = np.asarray(delta_b_11, dtype=float)
    if d22.shape != d11.shape:
        raise DataError("increment vectors differ in length")
    xi = np.vstack((d22, d11))
    s = math.sqrt(n) / (2.0 * b_n) * (xi @ xi.T)
    s = 0.5 * (s + s.T)
    return CovarianceEstimate(s, b_n, d22.size)


def sigma_star(delta_b_22, delta_b_11, u, n: int, b_n: int, kind: str = "mammen") -> CovarianceEstimate:
    """Bootstrap analogue of sigma_hat built from u-weighted increments."""
    d22 = np.asarray(delta_b_22, dtype=float)
    d11 = np.asarray(delta_b_11, dtype=float)
    u = np.asarray(u, dtype=float)
    if u.shape != d22.shape:
        raise DataError("u must have one entry per increment")
    xi = np.vstack((d22 * u, d11 * u))
    s = math.sqrt(n) / b_n * external_moment_ratio(kind) * (xi @ xi.T)
    return CovarianceEstimate(0.5 * (s + s.T), b_n, d22.size)


def resample_matrix(kind: str, B: int, J: int, seed: int, keys=()) -> np.ndarray:
    """(B, J) external draws, row r from its own stream (seed, *keys, kind, r)."""
    kind = external_kind(kind)
    out = np.empty((B, J))
    for r in range(B):
        out[r] = draw_external(kind, J, stream(seed, *keys, KIND_ID[kind], r))
    return out


@dataclass(frozen=True)
class BootstrapDraws:
    """Resampled statistics for one day and one external law."""

    pairs: np.ndarray      # (B, 2): BV(2,2)*, BV(1,1)*
    z_star: np.ndarray     # (B,)
    v_star: np.ndarray     # (B,)
    t_star: np.ndarray     # (B,), NaN where v_star <= 0
    dropped: int

    @property
    def unreliable(self) -> bool:
        return self.dropped > 0.1 * self.z_star.size


def bootstrap_statistics(delta_b_22, delta_b_11, bv22: float, bv11: float,
                         config: BootstrapConfig, n: int, b_n: Optional[int] = None,
                         u: Optional[np.ndarray] = None, keys=(), p: float = 2.0) -> BootstrapDraws:
    """Joint resamples of (BV(2,2), BV(1,1)) plus their Z* and T* statistics.

    One u-vector per resample drives both statistics.  ``u`` may be passed in
    directly as a (B, J) array; otherwise it is drawn from ``config.seed`` and
    ``keys``.
    """
    d22 = np.ascontiguousarray(delta_b_22, dtype=float)
    d11 = np.ascontiguousarray(delta_b_11, dtype=float)
    if d22.shape != d11.shape:
        raise DataError("increment vectors differ in length")
    b = config.b_n if b_n is None else b_n
    if b is None:
        raise ConfigError("block length required")
    J = d22.size
    if u is None:
        u = resample_matrix(config.external_kind, config.B, J, config.seed, keys)
    u = np.ascontiguousarray(u, dtype=float)
    if u.ndim != 2 or u.shape[1] != J:
        raise DataError("u must have shape (B, J)")

    sums = _kernels.bootstrap_sums(u, d22, d11)
    rb = 1.0 / math.sqrt(b)
    pairs = np.column_stack((bv22 - rb * sums[:, 0], bv11 - rb * sums[:, 1]))
    n4 = n ** 0.25
    z_star = n4 * (pairs[:, 0] - pairs[:, 1] ** p - (bv22 - bv11 ** p))

    c = math.sqrt(n) / b * external_moment_ratio(config.external_kind)
    grad = p * bv11 ** (p - 1.0)
    v_star = c * (sums[:, 2] - 2.0 * grad * sums[:, 3] + grad * grad * sums[:, 4])
    good = v_star > 0
    t_star = np.full(z_star.shape, np.nan)
    t_star[good] = z_star[good] / np.sqrt(v_star[good])
    dropped = int(np.count_nonzero(~good))
    if dropped:
        log.info("dropped %d resamples with non-positive variance", dropped)
    return BootstrapDraws(pairs, z_star, v_star, t_star, dropped)


def bootstrap_quantile(values, alpha: float) -> float:
    """The ceil((1-alpha)(B+1))-th order statistic; +inf if it exceeds B."""
    v = np.sort(np.asarray(values, dtype=float)[~np.isnan(values)])
    k = math.ceil((1.0 - alpha) * (v.size + 1) - 1e-12)
    if k > v.size or v.size == 0:
        return math.inf
    return float(v[k - 1])


def percentile_test(Z_n: float, z_star, alpha: float) -> tuple[bool, float]:
    q = bootstrap_quantile(z_star, alpha)
    return bool(Z_n > q), q


def percentile_t_test(T_n: float, t_star, alpha: float) -> tuple[bool, float]:
    q = bootstrap_quantile(t_star, alpha)
    return bool(T_n > q), q


def block_size_bounds(n: int, N_n: int, delta: float = 2.0 / 3.0) -> tuple[int, int]:
    nd = n ** delta
    return int(math.floor(2.0 * nd)), int(math.floor(min(3.0 * nd, N_n / 2.0)))


def block_candidates(b_min: int, b_max: int, intervals: int = 30) -> np.ndarray:
    grid = np.linspace(b_min, b_max, intervals + 1)
    return np.unique(np.floor(grid + 0.5).astype(int))


def min_volatility_choice(candidates, values, d: int = 2) -> int:
    """Candidate whose +-d neighbourhood of values has the smallest spread.

    Windows are cut at the ends of the grid; ties go to the smallest candidate.
    """
    vals = np.asarray(values, dtype=float)
    best, best_sd = 0, math.inf
    for i in range(vals.size):
        w = vals[max(0, i - d): i + d + 1]
        sd = float(np.std(w))
        if sd < best_sd:
            best, best_sd = i, sd
    return int(np.asarray(candidates)[best])


def select_block_size(series: PreAveragedSeries, rule, delta: float = 2.0 / 3.0,
                      intervals: int = 30, d: int = 2,
                      l1=2.0, r1=2.0, l2=1.0, r2=1.0) -> int:
    """Minimum-volatility block length over a grid of candidates."""
    n, N, k = series.n, series.N_n, series.k_n
    lo, hi = 2 * k, N // 2
    if lo > hi:
        raise DataError(f"no admissible block length for N={N}, k={k}")
    b_min, b_max = block_size_bounds(n, N, delta)
    if b_min >= b_max:
        log.warning("block-size range collapsed (%d >= %d); using the lower end", b_min, b_max)
        return int(min(max(b_min, lo), hi))
    thr = np.inf if rule is None else getattr(rule, "threshold", rule)
    y1 = bipower_summands(series, l1, r1, thr)
    y2 = bipower_summands(series, l2, r2, thr)
    c1, c2 = bipower_scale(series, l1, r1), bipower_scale(series, l2, r2)
    bv2 = c2 * float(np.sum(y2))
    cands = block_candidates(b_min, b_max, intervals)
    vals = []
    for b in cands:
        s = sigma_hat(delta_from_summands(y1, b, c1), delta_from_summands(y2, b, c2), n, b)
        vals.append(v_check(s, bv2, l1, r1, l2, r2))
    b = min_volatility_choice(cands, vals, d)
    return int(min(max(b, lo), hi))


def wild_blocks_sample(y, b: int, u) -> np.ndarray:
    """Centred bootstrap observations built observation by observation.

    ``u`` has J+1 entries, J = N - 2b + 1, and N must be at least 3b - 2.
    Entry m of the result multiplies deviations of y_m from the relevant block
    means by the u's of every block that covers it; the last u only touches
    the final b observations, whose deviations sum to zero.  Slow, for checking
    the shortcut in ``bootstrap_statistics``.
    """
    y = np.asarray(y, dtype=float)
    N = y.size
    J = N - 2 * b + 1
    u = np.asarray(u, dtype=float)
    if J < b - 1 or u.size != J + 1:
        raise DataError("need N >= 3b - 2 and J+1 external draws")
    bm = np.concatenate(([np.nan], block_means(y, b)))   # bm[j] = mean of block j, 1-based
    uu = np.concatenate(([np.nan], u))
    out = np.zeros(N + 1)
    for m in range(1, N + 1):
        ym = y[m - 1]
        if m <= b - 1:
            out[m] = sum((ym - bm[b + j]) * uu[j] for j in range(1, m + 1))
        elif m <= J:
            out[m] = sum((ym - bm[m + j]) * uu[m + j - b] for j in range(1, b + 1))
        elif m <= N - b:
            out[m] = sum((ym - bm[J + 1 - j + b]) * uu[J + 1 - j]
                         for j in range(1, N - b + 2 - m))
        else:
            out[m] = (ym - bm[N - b + 1]) * uu[J + 1]
    return out[1:] / math.sqrt(b)
