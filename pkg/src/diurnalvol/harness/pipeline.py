"""One-day test pipeline."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

from ..bipower import adaptive_threshold, truncated_bipower
from ..bootstrap import (KIND_LABEL, BootstrapConfig, bootstrap_statistics, delta_b,
                         external_kind, percentile_t_test, percentile_test,
                         select_block_size, sigma_hat)
from ..diurnal import DiurnalProfile, deflate, noise_variance_robust
from ..errors import ConfigError, DiurnalVolError
from ..preavg import ReturnGrid, choose_window, pre_average
from ..teststat import (TestOutcome, clt_test, h_index_hat, noise_proportion,
                        t_statistic, v_check)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    mode: str = "test"
    n: Optional[int] = None
    m: int = 78
    q: int = 3
    theta: float = 1.0 / 3.0
    varpi: float = 0.49
    quantile_level: float = 0.999
    scale_c: Optional[float] = None
    alpha: float = 0.05
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    externals: tuple = ("gaussian", "mammen")
    bonferroni: bool = False
    deflate: bool = True
    diagnostics: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if not self.theta > 0:
            raise ConfigError("theta must be positive")
        if self.n is not None and self.n % self.m:
            raise ConfigError(f"m={self.m} does not divide n={self.n}")
        object.__setattr__(self, "externals", tuple(external_kind(k) for k in self.externals))


def run_day_test(grid: ReturnGrid, profile: Optional[DiurnalProfile], config: RunConfig,
                 keys=(), alpha: Optional[float] = None) -> TestOutcome:
    """Deflate, pre-average, truncate, bootstrap and decide for one day.

    Failures inside the pipeline are recorded on the outcome, not raised.
    ``keys`` label the day's bootstrap streams; ``alpha`` overrides the level.
    """
    alpha = config.alpha if alpha is None else alpha
    out = TestOutcome(day=grid.day)
    try:
        g = deflate(grid, profile) if (config.deflate and profile is not None) else grid
        scheme = choose_window(g.n, config.theta)
        series = pre_average(g, scheme)
        rule = adaptive_threshold(series, config.varpi, config.quantile_level, config.scale_c)
        out.bv22 = truncated_bipower(series, 2, 2, rule)
        out.bv11 = truncated_bipower(series, 1, 1, rule)
        n = g.n

        b = config.bootstrap.b_n or select_block_size(series, rule)
        out.b_n = b
        d22 = delta_b(series, 2, 2, rule, b)
        d11 = delta_b(series, 1, 1, rule, b)
        out.V_check = v_check(sigma_hat(d22, d11, n, b), out.bv11)
        out.Z_n, out.T_n = t_statistic(out.bv22, out.bv11, out.V_check, n)
        out.decisions["clt"], out.clt_pvalue = clt_test(out.T_n, alpha)

        for kind in config.externals:
            label = KIND_LABEL[kind]
            bc = replace(config.bootstrap, external_kind=kind, b_n=b, seed=config.seed)
            draws = bootstrap_statistics(d22, d11, out.bv22.value, out.bv11.value, bc, n,
                                         keys=tuple(keys))
            out.decisions["z_" + label], out.percentile_quantile[label] = \
                percentile_test(out.Z_n, draws.z_star, alpha)
            out.decisions["t_" + label], out.percentile_t_quantile[label] = \
                percentile_t_test(out.T_n, draws.t_star, alpha)
            out.dropped_resamples[label] = draws.dropped
            out.unreliable[label] = draws.unreliable

        if config.diagnostics:
            noise = noise_variance_robust(g.returns, config.q)
            out.h_index = h_index_hat(series, rule, noise)
            out.noise_proportion = noise_proportion(series, rule, noise.omega2_hat)
    except DiurnalVolError as exc:
        out.error = str(exc)
        log.warning("day %s: %s", grid.day, exc)
    return out
