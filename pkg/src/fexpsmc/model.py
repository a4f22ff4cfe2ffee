"""Normalised FEXP model, priors and parameter containers.

The inferential model for the spectral density of a stationary Gaussian
series is the normalised FEXP family

    fbar_theta(lam) = (1/(2 pi)) |1 - e^{-i lam}|^{-2 d}
                      exp( sum_{j=1}^{k} xi_j cos(j lam) ),

parameterised by theta_k = (t, xi_1..xi_k) with t = logit(2 d) so that the
memory parameter d = sigmoid(t)/2 ranges over (0, 1/2).  The scale
exp(xi_0) = sigma^2 and the mean mu are handled analytically by the
conjugate prior in the likelihood modules, not carried in theta.

Prior:
    k      ~ Geometric(geom_p) on {0, 1, 2, ...}
    d      ~ Uniform[0, 1/2]   => p(t) = sigmoid(t) (1 - sigmoid(t))
    xi_j   ~ Normal(0, xi_var0 * j^(-2 beta)),  j = 1..k, independent.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import cosine_series

__all__ = [
    "ThetaParams",
    "PriorConfig",
    "fexp_sdf",
    "arfima_sdf",
    "eval_fbar",
    "log_prior",
    "log_conditional_birth_density",
    "sample_prior",
]


@dataclass
class ThetaParams:
    """FEXP parameter block: cosine order k, t = logit(2d), coefficients xi."""

    k: int
    t: float
    xi: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float).reshape(-1)
        if self.k != self.xi.size:
            raise ValueError(f"k={self.k} but xi has length {self.xi.size}")
        if not math.isfinite(self.t):
            raise ValueError("t must be finite")

    @property
    def d(self):
        if self.t >= 0.0:
            return 0.5 / (1.0 + math.exp(-self.t))
        e = math.exp(self.t)
        return 0.5 * e / (1.0 + e)

    def as_vector(self):
        """Concatenated (t, xi_1..xi_k) block used by the move kernels."""
        return np.concatenate(([self.t], self.xi))

    @staticmethod
    def from_vector(vec):
        vec = np.asarray(vec, dtype=float)
        return ThetaParams(k=vec.size - 1, t=float(vec[0]), xi=vec[1:].copy())

    def copy(self):
        return ThetaParams(self.k, self.t, self.xi.copy())

    def key(self):
        """Hashable identity used for memoising per-theta computations."""
        return (self.k, self.t, self.xi.tobytes())


@dataclass
class PriorConfig:
    """Hyperparameters of the hierarchical prior and conjugate scale/mean prior."""

    geom_p: float = 0.2       # success probability of the Geometric order prior
    xi_var0: float = 100.0    # prior variance of xi_1
    beta: float = 1.0         # smoothness decay: Var(xi_j) = xi_var0 * j^(-2 beta)
    a: float = 0.5            # Gamma(a, b) prior on 1/sigma^2
    b: float = 0.5
    g_mu: float = 0.1         # mu | sigma^2 ~ N(m_mu, sigma^2 / g_mu)
    m_mu: float = 0.0
    k_max: int = 50           # hard guard on the model order

    def __post_init__(self):
        if not 0.0 < self.geom_p < 1.0:
            raise ValueError("geom_p must lie in (0, 1)")
        if min(self.xi_var0, self.a, self.b, self.g_mu) <= 0.0:
            raise ValueError("xi_var0, a, b, g_mu must be positive")
        if self.k_max < 0:
            raise ValueError("k_max must be >= 0")

    def xi_var(self, j):
        """Prior variance of xi_j (j >= 1)."""
        return self.xi_var0 * float(j) ** (-2.0 * self.beta)


def fexp_sdf(d, xi, lam):
    """Normalised FEXP spectral density on an array of frequencies.

    Diverges at lam = 0 for d > 0; the caller keeps grids away from 0.
    """
    lam = np.asarray(lam, dtype=float)
    xi = np.asarray(xi, dtype=float)
    s = cosine_series(xi, lam)
    with np.errstate(divide="ignore"):
        sing = (2.0 - 2.0 * np.cos(lam)) ** (-d)
    return sing * np.exp(s) / (2.0 * np.pi)


def arfima_sdf(d, phi, theta_ma, sigma2, lam):
    """ARFIMA(p, d, q) spectral density.

    f(lam) = (sigma2 / (2 pi)) |1 - e^{-i lam}|^{-2d}
             |1 + sum_q theta_q e^{-i q lam}|^2 / |1 - sum_p phi_p e^{-i p lam}|^2
    """
    lam = np.asarray(lam, dtype=float)
    z = np.exp(-1j * lam)
    ma = np.ones_like(z)
    for q, th in enumerate(np.atleast_1d(theta_ma), start=1):
        ma = ma + th * z ** q
    ar = np.ones_like(z)
    for p, ph in enumerate(np.atleast_1d(phi), start=1):
        ar = ar - ph * z ** p
    with np.errstate(divide="ignore"):
        sing = (2.0 - 2.0 * np.cos(lam)) ** (-d)
    return sigma2 / (2.0 * np.pi) * sing * np.abs(ma) ** 2 / np.abs(ar) ** 2


def eval_fbar(theta, lam):
    """Normalised FEXP density at theta on the frequency array lam."""
    return fexp_sdf(theta.d, theta.xi, lam)


def _log_sigmoid(t):
    # log sigmoid(t), stable for large |t|
    if t >= 0:
        return -math.log1p(math.exp(-t))
    return t - math.log1p(math.exp(t))


def log_prior(theta, prior):
    """Log prior density of theta = (k, t, xi) under ``prior``.

    p(k) = geom_p (1-geom_p)^k;  p(t) = sigmoid(t)(1-sigmoid(t)) is the
    Uniform[0, 1/2] prior on d pushed through t = logit(2d) (Jacobian
    included);  xi_j ~ N(0, xi_var0 j^(-2 beta)).
    """
    if theta.k > prior.k_max:
        return -math.inf
    lp = math.log(prior.geom_p) + theta.k * math.log1p(-prior.geom_p)
    lp += _log_sigmoid(theta.t) + _log_sigmoid(-theta.t)
    for j in range(1, theta.k + 1):
        v = prior.xi_var(j)
        x = theta.xi[j - 1]
        lp += -0.5 * math.log(2.0 * math.pi * v) - 0.5 * x * x / v
    return lp


def log_conditional_birth_density(prior, k_new, xi_new):
    """Log density of the conditional prior of xi_{k_new} given the lower block.

    The coordinates are a priori independent, so this is just the marginal
    N(0, xi_var0 * k_new^(-2 beta)) evaluated at xi_new.  Used as the birth
    proposal so that prior and proposal cancel in the move ratio.
    """
    if k_new < 1:
        raise ValueError("k_new must be >= 1")
    v = prior.xi_var(k_new)
    return -0.5 * math.log(2.0 * math.pi * v) - 0.5 * xi_new * xi_new / v


def sample_prior(prior, rng, fix_k=None):
    """Draw theta from the prior (k optionally frozen at ``fix_k``)."""
    if fix_k is None:
        k = int(rng.geometric(prior.geom_p) - 1)  # numpy geometric lives on {1, 2, ...}
        k = min(k, prior.k_max)
    else:
        k = int(fix_k)
        if not 0 <= k <= prior.k_max:
            raise ValueError(f"fix_k={fix_k} outside [0, k_max]")
    d = 0.5 * rng.uniform()
    # logit(2d); uniform() is half-open in [0, 1) so 2d < 1, and a zero draw
    # is mapped to the smallest positive float to keep t finite
    u = max(2.0 * d, 5e-324)
    t = math.log(u) - math.log1p(-u)
    xi = np.array([math.sqrt(prior.xi_var(j)) * rng.standard_normal() for j in range(1, k + 1)])
    return ThetaParams(k=k, t=t, xi=xi)
