"""Hot loops, each with a numba and a pure-numpy implementation.

The backend is chosen once at import time.  Set ``DIURNALVOL_DISABLE_NUMBA=1``
to force the numpy versions; they are also used when numba is missing.
Random draws never happen in here, so both backends see identical inputs.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

_DISABLED = os.environ.get("DIURNALVOL_DISABLE_NUMBA", "0").lower() in ("1", "true", "yes")
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def _njit(fn):
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# --- pre-averaging ---------------------------------------------------------

def preaverage_numpy(returns, weights):
    # v[i] = sum_j w[j] r[i + j]
    return np.correlate(returns, weights, mode="valid")


@_njit
def preaverage_numba(returns, weights):
    n = returns.shape[0]
    kw = weights.shape[0]
    out = np.empty(n - kw + 1)
    for i in range(n - kw + 1):
        acc = 0.0
        for j in range(kw):
            acc += weights[j] * returns[i + j]
        out[i] = acc
    return out


# --- products of absolute powers -------------------------------------------

def power_products_numpy(v, lag, count, l, r, threshold):
    a = np.abs(v[:count])
    b = np.abs(v[lag:lag + count])
    out = a ** l * b ** r
    if np.isfinite(threshold):
        out = np.where((a < threshold) & (b < threshold), out, 0.0)
    return out


@_njit
def _abspow(x, p):
    # generic float pow is slow; the powers used in practice are 0, 1 and 2
    if p == 1.0:
        return x
    if p == 2.0:
        return x * x
    if p == 0.0:
        return 1.0
    return x ** p


@_njit
def power_products_numba(v, lag, count, l, r, threshold):
    out = np.empty(count)
    finite = np.isfinite(threshold)
    for i in range(count):
        a = abs(v[i])
        b = abs(v[i + lag])
        if finite and (a >= threshold or b >= threshold):
            out[i] = 0.0
        else:
            out[i] = _abspow(a, l) * _abspow(b, r)
    return out


# --- block sums ------------------------------------------------------------

def block_increments_numpy(y, b):
    # S[j] = sum(y[j:j+b]); returns S[j+b] - S[j] for j = 0..N-2b
    c = np.concatenate(([0.0], np.cumsum(y)))
    s = c[b:] - c[:-b]
    return s[b:] - s[:-b]


@_njit
def block_increments_numba(y, b):
    n = y.shape[0]
    nb = n - b + 1
    s = np.empty(nb)
    acc = 0.0
    for i in range(b):
        acc += y[i]
    s[0] = acc
    for j in range(1, nb):
        # fresh sum every b steps to stop drift from the running update
        if j % b == 0:
            acc = 0.0
            for i in range(j, j + b):
                acc += y[i]
        else:
            acc += y[j + b - 1] - y[j - 1]
        s[j] = acc
    out = np.empty(nb - b)
    for j in range(nb - b):
        out[j] = s[j + b] - s[j]
    return out


# --- bootstrap sums --------------------------------------------------------

def bootstrap_sums_numpy(u, d22, d11):
    """Per-resample linear and quadratic sums, shape (B, 5)."""
    u2 = u * u
    out = np.empty((u.shape[0], 5))
    out[:, 0] = u @ d22
    out[:, 1] = u @ d11
    out[:, 2] = u2 @ (d22 * d22)
    out[:, 3] = u2 @ (d22 * d11)
    out[:, 4] = u2 @ (d11 * d11)
    return out


@_njit
def bootstrap_sums_numba(u, d22, d11):
    nb, nj = u.shape
    out = np.zeros((nb, 5))
    for b in range(nb):
        s0 = 0.0
        s1 = 0.0
        s2 = 0.0
        s3 = 0.0
        s4 = 0.0
        for j in range(nj):
            x = u[b, j]
            x2 = x * x
            s0 += x * d22[j]
            s1 += x * d11[j]
            s2 += x2 * d22[j] * d22[j]
            s3 += x2 * d22[j] * d11[j]
            s4 += x2 * d11[j] * d11[j]
        out[b, 0] = s0
        out[b, 1] = s1
        out[b, 2] = s2
        out[b, 3] = s3
        out[b, 4] = s4
    return out


# --- per-bin autocovariances -----------------------------------------------

def bin_autocov_numpy(panel, m, kmax):
    """gamma[j, k] for bins j < m and lags k <= kmax, pooled over rows."""
    t, n = panel.shape
    width = n // m
    x = panel.reshape(t, m, width)
    out = np.empty((m, kmax + 1))
    for k in range(kmax + 1):
        prod = x[:, :, : width - k] * x[:, :, k:]
        out[:, k] = prod.sum(axis=(0, 2)) / (t * (width - k))
    return out


@_njit
def bin_autocov_numba(panel, m, kmax):
    t, n = panel.shape
    width = n // m
    out = np.zeros((m, kmax + 1))
    for j in range(m):
        base = j * width
        for k in range(kmax + 1):
            acc = 0.0
            for d in range(t):
                for i in range(width - k):
                    acc += panel[d, base + i] * panel[d, base + i + k]
            out[j, k] = acc / (t * (width - k))
    return out


# --- factor recursion ------------------------------------------------------

def factor_paths_numpy(z1, z2, dt, x1_0, x2_0, alpha1, alpha2, phi):
    """Euler paths of the two volatility factors.

    The first is an OU process, the second has the feedback term
    ``phi * x2 * dB2``.  Both recursions are linear, x' = a x + c, so the
    numpy version solves them in closed form with cumprod / cumsum.
    """
    sq = np.sqrt(dt)
    n = z1.shape[0]
    x1 = _linear_recursion(np.full(n, 1.0 + alpha1 * dt), sq * z1, x1_0)
    x2 = _linear_recursion(1.0 + alpha2 * dt + phi * sq * z2, sq * z2, x2_0)
    return x1, x2


def _linear_recursion(a, c, x0, chunk=1024):
    # chunked so the running product stays far from under/overflow
    out = np.empty(a.shape[0] + 1)
    out[0] = x0
    for s in range(0, a.shape[0], chunk):
        p = np.cumprod(a[s:s + chunk])
        acc = np.cumsum(c[s:s + chunk] / p) + out[s]
        out[s + 1:s + 1 + p.shape[0]] = p * acc
    return out


@_njit
def factor_paths_numba(z1, z2, dt, x1_0, x2_0, alpha1, alpha2, phi):
    sq = np.sqrt(dt)
    n = z1.shape[0]
    x1 = np.empty(n + 1)
    x2 = np.empty(n + 1)
    x1[0] = x1_0
    x2[0] = x2_0
    for i in range(n):
        x1[i + 1] = x1[i] + alpha1 * x1[i] * dt + sq * z1[i]
        x2[i + 1] = x2[i] + alpha2 * x2[i] * dt + (1.0 + phi * x2[i]) * sq * z2[i]
    return x1, x2


# --- dispatch --------------------------------------------------------------

if USE_NUMBA:
    preaverage = preaverage_numba
    power_products = power_products_numba
    block_increments = block_increments_numba
    bootstrap_sums = bootstrap_sums_numba
    bin_autocov = bin_autocov_numba
    factor_paths = factor_paths_numba
else:
    preaverage = preaverage_numpy
    power_products = power_products_numpy
    block_increments = block_increments_numpy
    bootstrap_sums = bootstrap_sums_numpy
    bin_autocov = bin_autocov_numpy
    factor_paths = factor_paths_numpy

BACKEND = "numba" if USE_NUMBA else "numpy"
