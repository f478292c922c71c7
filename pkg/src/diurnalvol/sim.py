"""Synthetic trading days with known volatility.

A day is simulated on a one-second grid.  Spot variance is the product of a
two-factor stochastic part and a deterministic intraday shape; the log-price
adds tempered-stable jumps and is observed on an n-grid with MA(1) noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import special

from . import _kernels
from .diurnal import DiurnalProfile
from .errors import ConfigError
from .preavg import ReturnGrid
from .rng import stream
from .teststat import h_index_true


@dataclass(frozen=True)
class DiurnalShape:
    """sigma_u(t) = C + A exp(-a1 t) + B exp(-a2 (1 - t)) on t in [0, 1]."""

    A: float = 0.75
    B: float = 0.25
    C: float = 0.88929198
    a1: float = 10.0
    a2: float = 10.0
    enabled: bool = True

    def sigma_u(self, t):
        t = np.asarray(t, dtype=float)
        if not self.enabled:
            return np.ones_like(t)
        return self.C + self.A * np.exp(-self.a1 * t) + self.B * np.exp(-self.a2 * (1.0 - t))

    def sigma2_u(self, t):
        return self.sigma_u(t) ** 2


@dataclass(frozen=True)
class SV2FParams:
    beta0: float = -1.2
    beta1: float = 0.04
    beta2: float = 1.5
    alpha1: float = -0.00137
    alpha2: float = -1.386
    phi_vol: float = 0.25
    rho1: float = -0.3
    rho2: float = -0.3
    x0_splice: float = math.log(1.5)
    # "variance": s-exp output is the spot variance; "volatility": its square is.
    output: str = "variance"
    # length of one simulated day in the parameters' time unit
    day_length: float = 1.0


@dataclass(frozen=True)
class JumpParams:
    beta_activity: float = 0.5
    lambda_temper: float = 3.0
    qv_share: float = 0.2

    def __post_init__(self):
        if not 0 <= self.qv_share < 1:
            raise ConfigError("qv_share must lie in [0, 1)")
        if not 0 < self.beta_activity < 1:
            raise ConfigError("beta_activity must lie in (0, 1)")


@dataclass(frozen=True)
class NoiseParams:
    xi2: float = 0.001
    phi_ma: float = -0.5
    # "realized": omega^2 from the day's own integrated quarticity; "expected": from its mean
    omega_mode: str = "realized"


@dataclass(frozen=True)
class SimConfig:
    n: int = 4680
    seconds_grid: int = 23400
    drift: float = 0.03
    year_days: int = 250
    diurnal: DiurnalShape = field(default_factory=DiurnalShape)
    sv2f: SV2FParams = field(default_factory=SV2FParams)
    jumps: JumpParams = field(default_factory=JumpParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    under_null: bool = True
    # spot variance from the s-exp factor model is per annum; a day carries 1/year_days of it
    annualized: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.seconds_grid % self.n:
            raise ConfigError(f"n={self.n} must divide seconds_grid={self.seconds_grid}")

    def with_(self, **kw) -> "SimConfig":
        return replace(self, **kw)

    @property
    def level(self) -> float:
        """Factor converting the model's variance into per-day units."""
        return 1.0 / self.year_days if self.annualized else 1.0


def sexp(x, x0: float = math.log(1.5)):
    """exp(x) up to x0, then exp(x0) * sqrt(1 - x0 + x^2 / x0): continuous, linear growth."""
    x = np.asarray(x, dtype=float)
    hi = math.exp(x0) * np.sqrt(np.maximum(1.0 - x0 + x * x / x0, 0.0))
    return np.where(x <= x0, np.exp(np.minimum(x, x0)), hi)


def _sv_level(p: SV2FParams, x1, x2):
    s = sexp(p.beta0 + p.beta1 * x1 + p.beta2 * x2, p.x0_splice)
    return s if p.output == "variance" else s * s


def simulate_factors(p: SV2FParams, steps: int, rng: np.random.Generator):
    """Factor paths and their driving normals (z1, z2), shape steps + 1 and steps."""
    dt = p.day_length / steps
    x1_0 = rng.normal(0.0, math.sqrt(-1.0 / (2.0 * p.alpha1)))
    z = rng.standard_normal((2, steps))
    x1, x2 = _kernels.factor_paths(z[0], z[1], dt, x1_0, 0.0, p.alpha1, p.alpha2, p.phi_vol)
    return x1, x2, z


def simulate_sv2f(config: SimConfig, seed=0) -> np.ndarray:
    """Stochastic variance path on the second grid (seconds_grid + 1 points)."""
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed)
    p = config.sv2f
    if config.under_null:
        return np.full(config.seconds_grid + 1, stationary_variance(p))
    x1, x2, _ = simulate_factors(p, config.seconds_grid, rng)
    return _sv_level(p, x1, x2)


@lru_cache(maxsize=32)
def stationary_variance(p: SV2FParams, days: int = 4000, steps_per_day: int = 200,
                        nodes: int = 80) -> float:
    """E[sigma^2_sv] under the stationary law of the factors.

    The first factor is Gaussian OU, handled by Gauss-Hermite quadrature; the
    second is sampled from one long Euler run of a fixed stream.
    """
    rng = stream(0x5EED, 7)
    n = days * steps_per_day
    dt = 1.0 / steps_per_day
    z2 = rng.standard_normal(n)
    _, x2 = _kernels.factor_paths(np.zeros(n), z2, dt, 0.0, 0.0, 0.0, p.alpha2, p.phi_vol)
    x2 = x2[50 * steps_per_day::10]
    gh_x, gh_w = np.polynomial.hermite_e.hermegauss(nodes)
    x1 = gh_x * math.sqrt(-1.0 / (2.0 * p.alpha1))
    w = gh_w / gh_w.sum()
    vals = _sv_level(p, x1[:, None], x2[None, :]).mean(axis=1)
    return float(w @ vals)


def jump_scale(config: SimConfig) -> float:
    """Levy density constant c giving the jump share of expected daily QV."""
    j = config.jumps
    if j.qv_share == 0:
        return 0.0
    grid = np.arange(config.seconds_grid) / config.seconds_grid
    mean_u = float(np.mean(config.diurnal.sigma2_u(grid)))
    iv = config.level * stationary_variance(config.sv2f) * mean_u
    target = j.qv_share / (1.0 - j.qv_share) * iv
    b, lam = j.beta_activity, j.lambda_temper
    return target * lam ** (2.0 - b) / (2.0 * special.gamma(2.0 - b))


def _tempered_side(c: float, beta: float, lam: float, dt: float, count: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Increments of a spectrally positive tempered stable process.

    Stable draws by the Kanter representation, tempered by accepting each with
    probability exp(-lam * x) and redrawing the rejected ones.
    """
    scale = (dt * c * special.gamma(1.0 - beta) / beta) ** (1.0 / beta)
    out = np.empty(count)
    todo = np.arange(count)
    while todo.size:
        u = rng.uniform(0.0, math.pi, todo.size)
        e = rng.standard_exponential(todo.size)
        s = (np.sin(beta * u) / np.sin(u) ** (1.0 / beta)
             * (np.sin((1.0 - beta) * u) / e) ** ((1.0 - beta) / beta)) * scale
        keep = rng.random(todo.size) < np.exp(-lam * s)
        out[todo[keep]] = s[keep]
        todo = todo[~keep]
    return out


def simulate_tempered_stable(config: SimConfig, seed=0, c: float | None = None) -> np.ndarray:
    """Symmetric tempered stable increments on the second grid."""
    j = config.jumps
    c = jump_scale(config) if c is None else c
    steps = config.seconds_grid
    if c == 0:
        return np.zeros(steps)
    rng = seed if isinstance(seed, np.random.Generator) else stream(seed)
    dt = 1.0 / steps
    up = _tempered_side(c, j.beta_activity, j.lambda_temper, dt, steps, rng)
    down = _tempered_side(c, j.beta_activity, j.lambda_temper, dt, steps, rng)
    return up - down


def ma1_noise(omega2: float, phi: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """eps_i = e_i + phi e_{i-1} with var(eps) = omega2."""
    e = rng.standard_normal(count + 1) * math.sqrt(omega2 / (1.0 + phi * phi))
    return e[1:] + phi * e[:-1]


@dataclass
class PathBundle:
    X: np.ndarray              # efficient log-price, second grid
    Y: np.ndarray              # observed log-price, n-grid
    noise: np.ndarray
    sigma2_sv: np.ndarray      # second grid
    sigma2_u: np.ndarray       # second grid
    jump_increments: np.ndarray
    true_h_index: float
    true_iv: float
    true_iq: float
    omega2: float
    n: int

    @property
    def returns(self) -> np.ndarray:
        return np.diff(self.Y)

    def grid(self, day: int = 0) -> ReturnGrid:
        return ReturnGrid(self.returns, day)


def assemble_day(config: SimConfig, seed=None, keys=()) -> PathBundle:
    """One simulated day.  Streams are keyed by (seed, *keys, component)."""
    seed = config.seed if seed is None else seed
    S, n = config.seconds_grid, config.n
    p = config.sv2f
    dt = 1.0 / S
    t = np.arange(S + 1) * dt

    rng = stream(seed, *keys, 0)
    x1, x2, z = simulate_factors(p, S, rng)
    if config.under_null:
        s2sv = np.full(S + 1, stationary_variance(p))
    else:
        s2sv = _sv_level(p, x1, x2)
    s2u = config.diurnal.sigma2_u(t)
    z3 = rng.standard_normal(S)
    zw = p.rho1 * z[0] + p.rho2 * z[1] + math.sqrt(1.0 - p.rho1 ** 2 - p.rho2 ** 2) * z3

    spot = config.level * s2sv[:-1] * s2u[:-1]
    jumps = simulate_tempered_stable(config, stream(seed, *keys, 1))
    a = config.drift / config.year_days
    dx = a * dt + np.sqrt(spot * dt) * zw + jumps
    X = np.concatenate(([0.0], np.cumsum(dx)))

    iv = float(spot.sum() * dt)
    iq = float((spot * spot).sum() * dt)
    if config.noise.omega_mode == "realized":
        omega2 = config.noise.xi2 * math.sqrt(iq)
    else:
        omega2 = config.noise.xi2 * _expected_root_iq(config)
    eps = ma1_noise(omega2, config.noise.phi_ma, n + 1, stream(seed, *keys, 2, n))
    Y = X[:: S // n] + eps
    h = 0.0 if config.under_null else h_index_true(s2sv[:-1])
    return PathBundle(X, Y, eps, s2sv, s2u, jumps, h, iv, iq, omega2, n)


def _expected_root_iq(config: SimConfig) -> float:
    # sqrt of the quarticity with the stochastic part frozen at its mean level
    grid = np.arange(config.seconds_grid) / config.seconds_grid
    s2 = config.level * stationary_variance(config.sv2f) * config.diurnal.sigma2_u(grid)
    return math.sqrt(float(np.mean(s2 * s2)))


def true_profile(shape: DiurnalShape, n: int, seconds_grid: int = 23400) -> DiurnalProfile:
    """Exact per-interval average of sigma_u^2 for each of the n fast returns."""
    t = np.arange(seconds_grid) / seconds_grid
    s2 = shape.sigma2_u(t).reshape(n, seconds_grid // n).mean(axis=1)
    return DiurnalProfile(n, s2, normalization_applied=False, q=0)
