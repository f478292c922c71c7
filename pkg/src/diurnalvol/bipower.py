"""Pre-averaged bipower variation and its truncated version."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special, stats

from . import _kernels
from .errors import ConfigError, DegenerateError
from .preavg import PreAveragedSeries


def abs_moment(p: float) -> float:
    """E|N(0,1)|^p."""
    if p < 0:
        raise ConfigError("p must be nonnegative")
    return float(2.0 ** (p / 2) * special.gamma((p + 1) / 2) / np.sqrt(np.pi))


@dataclass(frozen=True)
class BipowerEstimate:
    l: float
    r: float
    value: float
    truncated: bool
    threshold: Optional[float]
    N_n: int


@dataclass(frozen=True)
class TruncationRule:
    varpi: float
    quantile_level: float
    scale_c: float
    u_n: float

    @property
    def threshold(self) -> float:
        return self.scale_c * self.u_n ** self.varpi

    def rescaled(self, a: float) -> "TruncationRule":
        return TruncationRule(self.varpi, self.quantile_level, a * self.scale_c, self.u_n)


def bipower_scale(series: PreAveragedSeries, l: float, r: float) -> float:
    """n^{(l+r)/4} / (N_n mu_l mu_r): multiplies the raw sum of products."""
    return series.n ** ((l + r) / 4) / (series.N_n * abs_moment(l) * abs_moment(r))


def bipower_summands(series: PreAveragedSeries, l: float, r: float,
                     threshold: float = np.inf) -> np.ndarray:
    """|v_i|^l |v_{i+k}|^r for i < N_n, zeroed where either factor reaches the threshold."""
    if l < 0 or r < 0:
        raise ConfigError("powers must be nonnegative")
    if series.N_n < 1:
        raise ConfigError("series too short")
    return _kernels.power_products(series.values, series.k_n, series.N_n,
                                   float(l), float(r), float(threshold))


def bipower(series: PreAveragedSeries, l: float, r: float) -> BipowerEstimate:
    y = bipower_summands(series, l, r)
    value = bipower_scale(series, l, r) * float(np.sum(y))
    return BipowerEstimate(l, r, value, False, None, series.N_n)


def adaptive_threshold(series: PreAveragedSeries, varpi: float = 0.49,
                       quantile_level: float = 0.999,
                       scale_c: Optional[float] = None) -> TruncationRule:
    """Data-driven threshold c * (k_n/n)^varpi with c = z_q * sqrt(BV(1,1)).

    ``scale_c`` overrides the data-driven constant.
    """
    if not 0 < varpi < 0.5:
        raise ConfigError("varpi must lie in (0, 1/2)")
    if not 0 < quantile_level < 1:
        raise ConfigError("quantile_level must lie in (0, 1)")
    u_n = series.k_n / series.n
    if scale_c is None:
        bv11 = bipower(series, 1, 1).value
        if not bv11 > 0:
            raise DegenerateError("no dispersion")
        scale_c = float(stats.norm.ppf(quantile_level)) * np.sqrt(bv11)
    elif not scale_c > 0:
        raise ConfigError("scale_c must be positive")
    return TruncationRule(float(varpi), float(quantile_level), float(scale_c), u_n)


def truncated_bipower(series: PreAveragedSeries, l: float, r: float,
                      rule) -> BipowerEstimate:
    """Bipower variation dropping every pair that touches a value >= threshold.

    ``rule`` is a TruncationRule or a bare threshold.
    """
    thr = rule.threshold if isinstance(rule, TruncationRule) else float(rule)
    y = bipower_summands(series, l, r, thr)
    value = bipower_scale(series, l, r) * float(np.sum(y))
    return BipowerEstimate(l, r, value, True, thr, series.N_n)
