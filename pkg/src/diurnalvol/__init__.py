"""Pre-averaged bipower tests for time-varying volatility in noisy high-frequency data."""
from ._kernels import BACKEND
from .bipower import (BipowerEstimate, TruncationRule, abs_moment, adaptive_threshold,
                      bipower, truncated_bipower)
from .bootstrap import (BootstrapConfig, CovarianceEstimate, bootstrap_statistics,
                        delta_b, draw_external, percentile_t_test, percentile_test,
                        select_block_size, sigma_hat, sigma_star)
from .diurnal import (DiurnalProfile, NoiseEstimate, deflate, estimate_diurnal_profile,
                      noise_autocov, noise_variance_iid, noise_variance_robust)
from .errors import ConfigError, DataError, DegenerateError
from .preavg import PreAveragedSeries, PreAvgScheme, ReturnGrid, choose_window, pre_average
from .sim import SimConfig, assemble_day
from .teststat import (HIndexEstimate, TestOutcome, h_index_hat, h_index_true,
                       noise_proportion, t_statistic, v_check)

__version__ = "0.1.0"
