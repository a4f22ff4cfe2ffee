"""Exact Gaussian likelihoods through dense Toeplitz Cholesky factorisations.

With the conjugate prior 1/sigma^2 ~ Gamma(a, b) and
mu | sigma^2 ~ N(m_mu, sigma^2 / g_mu), both nuisance parameters integrate
out of the Gaussian likelihood in closed form, leaving the marginal

    p(x | theta) proportional to
        |Sigma|^{-1/2} * ( b + q/2 )^{-(a + n/2)},

    Sigma = T(fbar_theta) + (1/g_mu) * ones,
    q = (x - m_mu)' Sigma^{-1} (x - m_mu),

where T(fbar_theta) is the n x n Toeplitz autocovariance matrix of the
normalised FEXP density.  The omitted factor is independent of theta, so
these log values are exact up to one global additive constant -- all that
self-normalised weighting requires.
"""

import math

import numpy as np
from scipy.linalg import solve_triangular
from scipy.linalg.lapack import dpotrf

from .fourier import build_toeplitz, fourier_coeffs_longmemory
from ._accel import cosine_series

__all__ = [
    "NotPositiveDefiniteError",
    "cholesky_lower",
    "chol_quad_form",
    "fbar_autocov",
    "exact_log_marglik",
    "exact_log_lik_zeromean",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Cholesky failure, carrying the 1-based index of the failing leading minor."""

    def __init__(self, index):
        self.index = int(index)
        super().__init__(f"matrix not positive definite: leading minor {self.index} failed")


def cholesky_lower(S):
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    Raises :class:`NotPositiveDefiniteError` with the index reported by
    LAPACK when S is not numerically positive definite.
    """
    S = np.ascontiguousarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("S must be a square matrix")
    L, info = dpotrf(S, lower=1, overwrite_a=0)
    if info > 0:
        raise NotPositiveDefiniteError(info)
    if info < 0:
        raise ValueError(f"illegal value in argument {-info} of dpotrf")
    return np.tril(L)


def chol_quad_form(L, v):
    """v' S^{-1} v given the lower Cholesky factor L of S (triangular solve)."""
    z = solve_triangular(L, v, lower=True, check_finite=False)
    return float(z @ z)


def fbar_autocov(theta, n, M=None):
    """Autocovariances gamma(0..n-1) of the normalised FEXP density at theta.

    gamma(l) = int fbar_theta(lam) e^{i l lam} dlam via the long-memory
    split; the bounded factor is g(lam) = exp(sum xi_j cos(j lam))/(2 pi).
    """
    xi = np.asarray(theta.xi, dtype=float)

    def smooth(lam):
        lam = np.asarray(lam, dtype=float)
        return np.exp(cosine_series(xi, lam)) / (2.0 * np.pi)

    return fourier_coeffs_longmemory(theta.d, smooth, n, M=M)


def exact_log_marglik(theta, x, prior, M=None):
    """Exact log marginal likelihood of theta (up to one theta-free constant).

    Cost is dominated by one dense Cholesky factorisation, O(n^3).
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two observations")
    acf = fbar_autocov(theta, n, M=M)
    sigma = build_toeplitz(acf, ridge=1.0 / prior.g_mu)
    L = cholesky_lower(sigma)
    q = chol_quad_form(L, x - prior.m_mu)
    logdet_half = float(np.sum(np.log(np.diag(L))))
    return -logdet_half - (prior.a + 0.5 * n) * math.log(prior.b + 0.5 * q)


def exact_log_lik_zeromean(acf, x):
    """Plain zero-mean Gaussian log likelihood for covariance T(acf).

    log N(x; 0, T) = -n/2 log(2 pi) - 1/2 log|T| - 1/2 x' T^{-1} x.
    """
    x = np.asarray(x, dtype=float)
    T = build_toeplitz(np.asarray(acf, dtype=float))
    if T.shape[0] != x.size:
        raise ValueError("acf length must match data length")
    L = cholesky_lower(T)
    q = chol_quad_form(L, x)
    logdet_half = float(np.sum(np.log(np.diag(L))))
    return -0.5 * x.size * math.log(2.0 * math.pi) - logdet_half - 0.5 * q
