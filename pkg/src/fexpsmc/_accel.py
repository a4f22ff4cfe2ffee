"""Numerical hot kernels with optional numba acceleration.

Every kernel exists in two interchangeable implementations: a numba
``@njit`` version and a pure-numpy version.  The active backend is chosen
at import time: setting the environment variable ``FEXPSMC_DISABLE_NUMBA``
to a non-empty value other than ``0`` forces the numpy path, as does an
unavailable numba installation.  Both paths produce identical results up
to floating-point rounding; the test suite runs against whichever backend
is active and ``benchmarks/bench_accel.py`` times them side by side.

Kernels are module-level functions taking plain arrays (numba does not
compile methods, so no ``self`` anywhere).
"""

import math
import os

import numpy as np

_flag = os.environ.get("FEXPSMC_DISABLE_NUMBA", "0")
_want_numba = _flag in ("", "0")

try:
    if not _want_numba:
        raise ImportError("numba disabled by FEXPSMC_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):  # no-op decorator fallback
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


BACKEND = "numba" if HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Whittle quadratic form
#
# Q = (1/n) * sum_j I_j * exp(d*L_j - sum_m xi_m * C[m, j])
#
# where I_j is the raw periodogram |sum_t x_t e^{i t lambda_j}|^2 at the
# folded Fourier frequency lambda_j*, L_j = log(2 - 2 cos lambda_j*) and
# C[m, j] = cos((m+1) lambda_j*).  This equals the Riemann-sum
# approximation of the inverse-covariance quadratic form x' T(fbar)^{-1} x.
# ---------------------------------------------------------------------------


def _whittle_quadform_np(d, xi, pgram, logweight, cosbasis, n):
    k = xi.shape[0]
    s = d * logweight
    if k:
        s = s - xi @ cosbasis[:k]
    with np.errstate(over="ignore"):
        return float(pgram @ np.exp(s)) / n


@njit(cache=True, nogil=True)
def _whittle_quadform_nb(d, xi, pgram, logweight, cosbasis, n):
    nf = pgram.shape[0]
    k = xi.shape[0]
    acc = 0.0
    for j in range(nf):
        s = d * logweight[j]
        for m in range(k):
            s -= xi[m] * cosbasis[m, j]
        acc += pgram[j] * math.exp(s)
    return acc / n


# ---------------------------------------------------------------------------
# Cosine series evaluation: out_j = sum_m xi_m * cos((m+1) * lam_j)
# ---------------------------------------------------------------------------


def _cosine_series_np(xi, lam):
    if xi.shape[0] == 0:
        return np.zeros_like(lam)
    m = np.arange(1, xi.shape[0] + 1)
    return np.cos(np.outer(m, lam)).T @ xi


@njit(cache=True, nogil=True)
def _cosine_series_nb(xi, lam):
    n = lam.shape[0]
    k = xi.shape[0]
    out = np.zeros(n)
    for j in range(n):
        s = 0.0
        for m in range(k):
            s += xi[m] * math.cos((m + 1) * lam[j])
        out[j] = s
    return out


# ---------------------------------------------------------------------------
# Durbin-Levinson innovations sampling.
#
# Draws x ~ N(0, T(acf)) progressively: x_t | x_0..x_{t-1} is Gaussian with
# mean phi_t' (x_{t-1},..,x_0) and variance v_t, both updated by the
# classical Durbin-Levinson recursion.  Exact in law for any valid acf;
# O(n^2) work, O(n) memory.  Returns (x, ok_flag); ok_flag is False when a
# nonpositive innovation variance is met (acf not positive definite).
# ---------------------------------------------------------------------------


def _durbin_levinson_np(acf, z):
    n = z.shape[0]
    x = np.empty(n)
    phi = np.zeros(n)
    v = acf[0]
    if v <= 0.0:
        return x, False
    x[0] = math.sqrt(v) * z[0]
    for t in range(1, n):
        kappa = (acf[t] - phi[:t - 1] @ acf[1:t][::-1]) / v
        phi_new = phi[:t - 1] - kappa * phi[:t - 1][::-1]
        phi[:t - 1] = phi_new
        phi[t - 1] = kappa
        v *= 1.0 - kappa * kappa
        if v <= 0.0 or not math.isfinite(v):
            return x, False
        mean = phi[:t] @ x[t - 1::-1]
        x[t] = mean + math.sqrt(v) * z[t]
    return x, True


@njit(cache=True, nogil=True)
def _durbin_levinson_nb(acf, z):
    n = z.shape[0]
    x = np.empty(n)
    phi = np.zeros(n)
    tmp = np.empty(n)
    v = acf[0]
    if v <= 0.0:
        return x, False
    x[0] = math.sqrt(v) * z[0]
    for t in range(1, n):
        num = acf[t]
        for j in range(t - 1):
            num -= phi[j] * acf[t - 1 - j]
        kappa = num / v
        for j in range(t - 1):
            tmp[j] = phi[j] - kappa * phi[t - 2 - j]
        for j in range(t - 1):
            phi[j] = tmp[j]
        phi[t - 1] = kappa
        v *= 1.0 - kappa * kappa
        if v <= 0.0 or not math.isfinite(v):
            return x, False
        mean = 0.0
        for j in range(t):
            mean += phi[j] * x[t - 1 - j]
        x[t] = mean + math.sqrt(v) * z[t]
    return x, True


if HAVE_NUMBA:
    whittle_quadform = _whittle_quadform_nb
    cosine_series = _cosine_series_nb
    durbin_levinson_sample = _durbin_levinson_nb
else:
    whittle_quadform = _whittle_quadform_np
    cosine_series = _cosine_series_np
    durbin_levinson_sample = _durbin_levinson_np
