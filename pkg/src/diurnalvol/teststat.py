"""Heteroskedasticity test statistics and the H-index diagnostics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from .bipower import BipowerEstimate, truncated_bipower
from .errors import DegenerateError
from .preavg import PreAveragedSeries, PreAvgScheme

TEST_KINDS = ("clt", "z_wb1", "z_wb2", "t_wb1", "t_wb2")


def _value(x) -> float:
    return float(x.value) if isinstance(x, BipowerEstimate) else float(x)


def _matrix(sigma) -> np.ndarray:
    return np.asarray(getattr(sigma, "entries", sigma), dtype=float)


def power_ratio(l1=2.0, r1=2.0, l2=1.0, r2=1.0) -> float:
    return (l1 + r1) / (l2 + r2)


def v_check(sigma, bv11_value, l1=2.0, r1=2.0, l2=1.0, r2=1.0) -> float:
    """Delta-method variance of BV1 - BV2^p, p = (l1+r1)/(l2+r2)."""
    s = _matrix(sigma)
    p = power_ratio(l1, r1, l2, r2)
    y = _value(bv11_value)
    grad = p * y ** (p - 1.0)
    return float(s[0, 0] - 2.0 * grad * s[0, 1] + grad * grad * s[1, 1])


def z_statistic(bv22, bv11, n: int, p: float = 2.0) -> float:
    return float(n ** 0.25 * (_value(bv22) - _value(bv11) ** p))


def t_statistic(bv22, bv11, V_check: float, n: int, p: float = 2.0) -> tuple[float, float]:
    """(Z_n, T_n); T_n = Z_n / sqrt(V_check)."""
    if not V_check > 0:
        raise DegenerateError("degenerate variance")
    z = z_statistic(bv22, bv11, n, p)
    return z, z / float(np.sqrt(V_check))


def clt_test(T_n: float, alpha: float) -> tuple[bool, float]:
    """One-sided normal test: reject for large T_n.  Returns (reject, p-value)."""
    pvalue = float(stats.norm.sf(T_n))
    return bool(T_n > stats.norm.isf(alpha)), pvalue


# --- unit bookkeeping ------------------------------------------------------
# BV(l, r) targets the integral of (theta psi2 sigma^2 + psi1 omega^2 / theta)^{(l+r)/2}.
# The two helpers below are the only place that conversion lives.

def variance_scale(scheme: PreAvgScheme) -> float:
    """theta psi2_n: divides BV(1,1) into integrated-variance units."""
    return scheme.theta_effective * scheme.psi2_n


def noise_bias_factor(scheme: PreAvgScheme) -> float:
    """psi1_n / (theta^2 psi2_n): multiplies omega^2 into the same units."""
    return scheme.psi1_n / (scheme.theta_effective ** 2 * scheme.psi2_n)


# --- H-index ---------------------------------------------------------------

def h_index_true(variance_path) -> float:
    """1 - (mean sigma^2)^2 / mean sigma^4 over equally spaced samples."""
    v = np.asarray(variance_path, dtype=float)
    if v.size < 2 or np.any(v <= 0):
        raise ValueError("need at least two positive samples")
    if np.ptp(v) == 0:
        return 0.0
    return float(1.0 - np.mean(v) ** 2 / np.mean(v * v))


@dataclass(frozen=True)
class HIndexEstimate:
    iv_hat: float
    iq_hat: float
    h_hat: float
    rho2_hat: float
    q: int
    degenerate: bool = False


def h_index_hat(series: PreAveragedSeries, rule, noise,
                scheme: Optional[PreAvgScheme] = None) -> HIndexEstimate:
    """Noise-corrected IV and IQ from truncated bipower, and their H-index.

    ``noise`` is a NoiseEstimate computed on the same day's returns.  When the
    quarticity estimate is not positive, ``h_hat`` is NaN and ``degenerate`` set.
    """
    scheme = series.scheme if scheme is None else scheme
    s = variance_scale(scheme)
    a = noise_bias_factor(scheme)
    rho2 = noise.rho2_hat
    bv11 = truncated_bipower(series, 1, 1, rule).value
    bv22 = truncated_bipower(series, 2, 2, rule).value
    iv = float(bv11 / s - a * rho2)
    iq = float(bv22 / s ** 2 - 2.0 * a * rho2 * iv - (a * rho2) ** 2)
    if not iq > 0:
        return HIndexEstimate(iv, iq, float("nan"), rho2, noise.q, True)
    return HIndexEstimate(iv, iq, 1.0 - iv * iv / iq, rho2, noise.q)


def noise_proportion(series: PreAveragedSeries, rule, omega2_hat: float,
                     scheme: Optional[PreAvgScheme] = None) -> float:
    """Share of truncated BV(1,1) attributable to the noise bias, in [0, 1]."""
    scheme = series.scheme if scheme is None else scheme
    total = truncated_bipower(series, 1, 1, rule).value / variance_scale(scheme)
    if not total > 0:
        raise DegenerateError("no dispersion")
    bias = noise_bias_factor(scheme) * omega2_hat
    return float(np.clip(bias / total, 0.0, 1.0))


@dataclass
class TestOutcome:
    """Everything computed for one day."""

    __test__ = False

    day: int = 0
    bv22: Optional[BipowerEstimate] = None
    bv11: Optional[BipowerEstimate] = None
    Z_n: float = float("nan")
    V_check: float = float("nan")
    T_n: float = float("nan")
    clt_pvalue: float = float("nan")
    percentile_quantile: dict = field(default_factory=dict)
    percentile_t_quantile: dict = field(default_factory=dict)
    decisions: dict = field(default_factory=dict)
    b_n: int = 0
    dropped_resamples: dict = field(default_factory=dict)
    unreliable: dict = field(default_factory=dict)
    h_index: Optional[HIndexEstimate] = None
    noise_proportion: float = float("nan")
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None
