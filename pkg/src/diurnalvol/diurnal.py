"""Intraday variance profile estimated from a panel of noisy days.

Each day's n fast returns are grouped into m slow bins of n/m returns.  The
profile in bin j is the cross-day mean of m times the squared slow return,
less 2m times that bin's noise variance, floored and rescaled to mean one.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, DataError, DegenerateError
from .preavg import ReturnGrid


def as_panel(days) -> np.ndarray:
    """Stack days into a (T, n) float array."""
    if isinstance(days, ReturnGrid):
        return days.returns[None, :]
    if isinstance(days, np.ndarray):
        arr = np.asarray(days, dtype=float)
        return arr[None, :] if arr.ndim == 1 else arr
    rows = [d.returns if isinstance(d, ReturnGrid) else np.asarray(d, float) for d in days]
    if not rows:
        raise DataError("empty panel")
    if len({len(r) for r in rows}) != 1:
        raise DataError("days have different lengths")
    return np.vstack(rows)


def _check_bins(n: int, m: int, kmax: int) -> int:
    if m < 1 or n % m:
        raise ConfigError(f"m={m} does not divide n={n}")
    width = n // m
    if width <= kmax:
        raise ConfigError(f"bin of {width} returns too short for lag {kmax}")
    return width


def bin_autocov(panel, m: int, kmax: int) -> np.ndarray:
    """Within-bin autocovariances, shape (m, kmax+1), pooled over days."""
    x = np.ascontiguousarray(as_panel(panel))
    _check_bins(x.shape[1], m, kmax)
    return _kernels.bin_autocov(x, m, kmax)


def noise_autocov(panel, k: int, m: int = 1) -> float:
    """Lag-k autocovariance of fast returns, using only pairs inside a slow bin."""
    if k < 0:
        raise ConfigError("lag must be nonnegative")
    return float(bin_autocov(panel, m, k)[:, k].mean())


def noise_variance_iid(panel, m: int = 1) -> float:
    """Noise variance under i.i.d. noise: minus the lag-1 autocovariance."""
    return max(0.0, -noise_autocov(panel, 1, m))


@dataclass(frozen=True)
class NoiseEstimate:
    """Autocovariances gamma(0..q+1), the rho(0..q) recursion and omega^2."""

    gamma_hat: np.ndarray
    rho_hat: np.ndarray
    omega2_hat: float
    q: int
    omega2_bins: np.ndarray = field(default=None, repr=False)

    @property
    def rho2_hat(self) -> float:
        """rho(0) + 2 * sum rho(k), floored at zero."""
        return max(0.0, float(self.rho_hat[0] + 2.0 * self.rho_hat[1:].sum()))


def _omega2(gamma: np.ndarray, q: int) -> np.ndarray:
    lags = np.arange(1, q + 2)
    return np.maximum(0.0, -(gamma[..., 1:q + 2] * lags).sum(axis=-1))


def _rho(gamma: np.ndarray, q: int) -> np.ndarray:
    rho = np.zeros(q + 1)
    for k in range(q + 1):
        j = np.arange(1, q - k + 2)
        rho[k] = -np.sum(j * gamma[k + j])
    return rho


def noise_variance_robust(panel, q: int = 3, m: int = 1) -> NoiseEstimate:
    """Noise variance robust to q-dependent noise."""
    if q < 0:
        raise ConfigError("q must be nonnegative")
    g = bin_autocov(panel, m, q + 1)
    pooled = g.mean(axis=0)
    return NoiseEstimate(pooled, _rho(pooled, q), float(_omega2(pooled, q)), q, _omega2(g, q))


@dataclass(frozen=True)
class DiurnalProfile:
    """Per-bin variance profile; bin j covers (j/m, (j+1)/m]."""

    m: int
    sigma2_u: np.ndarray
    normalization_applied: bool = True
    omega2_hat: float = 0.0
    q: int = 3
    raw: np.ndarray = field(default=None, repr=False)
    omega2_bins: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        s = np.asarray(self.sigma2_u, dtype=float)
        if s.shape != (self.m,):
            raise DataError("profile length does not match m")
        if not np.all(s > 0):
            raise DataError("profile values must be positive")
        object.__setattr__(self, "sigma2_u", s)

    @classmethod
    def flat(cls, m: int = 1) -> "DiurnalProfile":
        return cls(m, np.ones(m))

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.m + 1) / self.m


def normalize_with_floor(raw: np.ndarray, floor_value: float) -> np.ndarray:
    """Find c with mean(max(c * raw, floor)) = 1 and return max(c * raw, floor).

    Exact: the top p entries scale, the rest sit at the floor, and c follows
    from the mean constraint for the unique consistent p.
    """
    raw = np.asarray(raw, dtype=float)
    m = raw.size
    if not 0 <= floor_value < 1:
        raise ConfigError("floor_value must lie in [0, 1)")
    if not np.max(raw) > 0:
        raise DegenerateError("profile estimate has no positive bins")
    order = np.argsort(-raw, kind="stable")
    top = np.cumsum(raw[order])
    for p in range(1, m + 1):
        if top[p - 1] <= 0:
            continue
        c = (m - (m - p) * floor_value) / top[p - 1]
        lo = raw[order[p - 1]] * c
        nxt = raw[order[p]] * c if p < m else -np.inf
        if lo >= floor_value and nxt < floor_value:
            return np.maximum(c * raw, floor_value)
    raise DegenerateError("could not normalize profile")  # pragma: no cover


def estimate_diurnal_profile(days, m: int, q: int = 3, floor_value: float = 0.01,
                             drop_top: float = 0.0) -> DiurnalProfile:
    """Noise-corrected per-bin variance profile from T >= 2 days.

    ``drop_top`` removes that fraction of the largest absolute slow returns
    per bin (with their fast returns) before estimation.
    """
    x = as_panel(days)
    t, n = x.shape
    if t < 2:
        raise ConfigError("need at least two days")
    width = _check_bins(n, m, q + 1)
    cells = x.reshape(t, m, width)
    slow = cells.sum(axis=2)

    keep = np.ones((t, m), dtype=bool)
    if drop_top > 0:
        ndrop = int(np.floor(drop_top * t))
        if ndrop > 0:
            worst = np.argsort(-np.abs(slow), axis=0, kind="stable")[:ndrop]
            keep[worst, np.arange(m)[None, :]] = False
    counts = keep.sum(axis=0)

    masked = np.where(keep[:, :, None], cells, 0.0).reshape(t, n)
    g = _kernels.bin_autocov(np.ascontiguousarray(masked), m, q + 1) * (t / counts)[:, None]
    omega2_bins = _omega2(g, q)

    sq = np.where(keep, slow * slow, 0.0).sum(axis=0) / counts
    raw = m * sq - 2.0 * m * omega2_bins
    sigma2 = normalize_with_floor(raw, floor_value)
    return DiurnalProfile(m, sigma2, True, float(omega2_bins.mean()), q, raw, omega2_bins)


def bin_of_return(n: int, m: int) -> np.ndarray:
    """0-based bin of fast return i = 1..n.

    Return i spans ((i-1)/n, i/n]; it belongs to the slow bin whose
    right-closed interval holds i/n, the same grouping the estimator uses.
    """
    return np.arange(n) // (n // m)


def deflate(grid: ReturnGrid, profile: DiurnalProfile) -> ReturnGrid:
    """Divide each return by the profile's standard deviation in its bin."""
    if grid.n % profile.m:
        raise DataError(f"profile with m={profile.m} does not fit n={grid.n}")
    scale = np.sqrt(profile.sigma2_u)[bin_of_return(grid.n, profile.m)]
    return ReturnGrid(grid.returns / scale, grid.day)


def write_profile_csv(profile: DiurnalProfile, path) -> None:
    edges = profile.edges
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_index", "s_left", "s_right", "sigma2_u"])
        for j in range(profile.m):
            w.writerow([j, repr(float(edges[j])), repr(float(edges[j + 1])),
                        repr(float(profile.sigma2_u[j]))])


def read_profile_csv(path) -> DiurnalProfile:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"{path}: empty profile")
    try:
        idx = [int(r["bin_index"]) for r in rows]
        vals = [float(r["sigma2_u"]) for r in rows]
    except (KeyError, ValueError) as exc:
        raise DataError(f"{path}: bad profile row ({exc})") from None
    if idx != list(range(len(rows))):
        raise DataError(f"{path}: bin_index must run 0..m-1")
    return DiurnalProfile(len(vals), np.array(vals))
