"""Pre-averaging of noisy high-frequency returns.

Index mapping used throughout (1-based formula index -> 0-based array):

==========================  ==========================
formula                     array
==========================  ==========================
weight g(j/k), j=1..k-1     ``weights[j-1]``
return r_i, i=1..n          ``returns[i-1]``
pre-averaged v_i            ``values[i-1]``, i=1..n-k+2
pair (v_i, v_{i+k})         ``values[i-1]``, ``values[i-1+k]``
==========================  ==========================
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from . import _kernels
from .errors import ConfigError, DataError


def canonical_kernel(x):
    """g(x) = min(x, 1 - x) on [0, 1]."""
    x = np.asarray(x, dtype=float)
    return np.minimum(x, 1.0 - x)


@dataclass(frozen=True)
class ReturnGrid:
    """Log-returns of one day on an equidistant grid of n intervals."""

    returns: np.ndarray
    day: int = 0

    def __post_init__(self):
        r = np.ascontiguousarray(self.returns, dtype=float)
        if r.ndim != 1:
            raise DataError("returns must be one-dimensional")
        if not np.all(np.isfinite(r)):
            raise DataError("returns contain non-finite values")
        object.__setattr__(self, "returns", r)

    @property
    def n(self) -> int:
        return self.returns.shape[0]

    def scaled(self, a: float) -> "ReturnGrid":
        return ReturnGrid(a * self.returns, self.day)


@dataclass(frozen=True)
class PreAvgScheme:
    """Window length, kernel weights and the associated psi constants."""

    n: int
    k_n: int
    theta: float
    weights: np.ndarray = field(repr=False)
    psi1_n: float
    psi2_n: float
    psi1: float
    psi2: float

    @property
    def theta_effective(self) -> float:
        return self.k_n / np.sqrt(self.n)

    @property
    def N_n(self) -> int:
        return self.n - 2 * self.k_n + 2


def kernel_weights(k_n: int, kernel: Optional[Callable] = None) -> np.ndarray:
    """g(j/k_n) for j = 1..k_n-1."""
    g = canonical_kernel if kernel is None else kernel
    return np.asarray(g(np.arange(1, k_n) / k_n), dtype=float)


def compute_psi_n(k_n: int, kernel: Optional[Callable] = None) -> tuple[float, float]:
    """Finite-window constants (psi1_n, psi2_n)."""
    w = kernel_weights(k_n, kernel)
    full = np.concatenate(([0.0], w, [0.0]))
    psi1_n = k_n * float(np.sum(np.diff(full) ** 2))
    psi2_n = float(np.sum(w * w)) / k_n
    return psi1_n, psi2_n


def _limit_psi(kernel: Optional[Callable]) -> tuple[float, float]:
    if kernel is None:
        return 1.0, 1.0 / 12.0
    h = 1e-6
    dg = lambda x: (float(kernel(x + h)) - float(kernel(x - h))) / (2 * h)
    psi1 = integrate.quad(lambda x: dg(x) ** 2, h, 1 - h, limit=200)[0]
    psi2 = integrate.quad(lambda x: float(kernel(x)) ** 2, 0, 1, limit=200)[0]
    return psi1, psi2


def choose_window(n: int, theta: float, kernel: Optional[Callable] = None) -> PreAvgScheme:
    """Window length k_n = round(theta * sqrt(n)), at least 2."""
    if n < 1:
        raise ConfigError("n must be positive")
    if not theta > 0:
        raise ConfigError("theta must be positive")
    k_n = max(2, int(np.floor(theta * np.sqrt(n) + 0.5)))
    if 2 * k_n > n:
        raise ConfigError(f"window k_n={k_n} too long for n={n}")
    psi1_n, psi2_n = compute_psi_n(k_n, kernel)
    psi1, psi2 = _limit_psi(kernel)
    return PreAvgScheme(n, k_n, float(theta), kernel_weights(k_n, kernel),
                        psi1_n, psi2_n, psi1, psi2)


@dataclass(frozen=True)
class PreAveragedSeries:
    values: np.ndarray
    scheme: PreAvgScheme

    @property
    def n(self) -> int:
        return self.scheme.n

    @property
    def k_n(self) -> int:
        return self.scheme.k_n

    @property
    def N_n(self) -> int:
        return self.scheme.N_n


def pre_average(grid: ReturnGrid, scheme: PreAvgScheme) -> PreAveragedSeries:
    """Weighted local averages v_i of k_n - 1 consecutive returns."""
    if grid.n != scheme.n:
        raise DataError(f"grid has {grid.n} returns, scheme expects {scheme.n}")
    if scheme.N_n < 1:
        raise DataError("too few returns for this window")
    v = _kernels.preaverage(grid.returns, scheme.weights)
    return PreAveragedSeries(v, scheme)
