"""Trans-dimensional Metropolis kernels targeting tempered posteriors.

The invariant density at inverse temperature gamma is

    eta_gamma(theta) proportional to p(theta) * p~(x | theta)^gamma,

with p the hierarchical prior and p~ any likelihood evaluator.  One kernel
cycle applies, in order,

1. a random-walk Metropolis update of the full (k+1)-dimensional block
   (t, xi_1..xi_k) with a per-order proposal covariance, and
2. a birth/death move: from order k a birth is proposed with probability
   rho(k -> k+1) (1 at k = 0, 1/2 otherwise, 0 at k_max), drawing the new
   coordinate from its conditional prior so that proposal and prior cancel
   and the acceptance ratio reduces to

       r = [rho(k* -> k) p(k*) p~(x|theta*)^gamma]
           / [rho(k -> k*) p(k) p~(x|theta)^gamma].

All acceptance tests run in log space, so extreme likelihood ratios never
overflow.  Kernels are pure functions of (state, rng): they mutate nothing
and return the new state together with its cached log-prior/log-likelihood.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ThetaParams, log_prior, sample_prior

__all__ = [
    "InvalidStateError",
    "KernelConfig",
    "MoveStats",
    "rw_metropolis_step",
    "birth_death_step",
    "calibrate_scales",
    "run_mcmc",
]

#: optimal-scaling constant 2.38^2 for random-walk proposals
RW_SCALE2 = 2.38 ** 2


class InvalidStateError(ValueError):
    """Raised when a kernel is started from a state with -inf target density."""


@dataclass
class KernelConfig:
    """Settings shared by the move kernels.

    ``scales`` maps model order k to the lower Cholesky factor of the
    (k+1) x (k+1) random-walk proposal covariance; missing orders fall
    back to the identity.
    """

    gamma: float = 1.0
    scales: dict = field(default_factory=dict)
    k_max: int = 50

    def chol_for(self, k):
        L = self.scales.get(k)
        if L is None:
            return None  # identity
        return L


@dataclass
class MoveStats:
    """Acceptance counters, incremented in place by the kernels."""

    rw_proposed: int = 0
    rw_accepted: int = 0
    birth_proposed: int = 0
    birth_accepted: int = 0
    death_proposed: int = 0
    death_accepted: int = 0

    def rw_rate(self):
        return self.rw_accepted / self.rw_proposed if self.rw_proposed else math.nan

    def bd_rate(self):
        tot = self.birth_proposed + self.death_proposed
        acc = self.birth_accepted + self.death_accepted
        return acc / tot if tot else math.nan


def _tempered(lp, ll, gamma):
    if lp == -math.inf:
        return -math.inf
    if gamma == 0.0:
        return lp  # 0 * (-inf) guard: flat likelihood contributes nothing
    return lp + gamma * ll


def _accept(log_r, rng):
    """Log-space Metropolis test; one uniform is drawn per call."""
    u = rng.uniform()
    if log_r >= 0.0:
        return True
    return u < math.exp(log_r)


def rw_metropolis_step(theta, lp, ll, loglik_fn, prior, cfg, rng, stats):
    """One random-walk Metropolis update of the (t, xi) block.

    Parameters
    ----------
    theta : ThetaParams
    lp, ll : float
        Cached log prior and log likelihood of ``theta`` (ll may be any
        finite value when gamma = 0).
    loglik_fn : callable theta -> float
    prior : PriorConfig
    cfg : KernelConfig
    rng : numpy Generator
    stats : MoveStats

    Returns ``(theta, lp, ll, accepted)``.
    """
    cur = _tempered(lp, ll, cfg.gamma)
    if cur == -math.inf:
        raise InvalidStateError("current state has zero target density")
    stats.rw_proposed += 1
    z = rng.standard_normal(theta.k + 1)
    L = cfg.chol_for(theta.k)
    step = z if L is None else L @ z
    vec = theta.as_vector() + step
    prop = ThetaParams.from_vector(vec)
    lp_new = log_prior(prop, prior)
    if lp_new == -math.inf:
        return theta, lp, ll, False
    ll_new = loglik_fn(prop) if cfg.gamma != 0.0 else ll
    log_r = _tempered(lp_new, ll_new, cfg.gamma) - cur
    if _accept(log_r, rng):
        stats.rw_accepted += 1
        return prop, lp_new, ll_new, True
    return theta, lp, ll, False


def _rho_up(k, k_max):
    """Probability of proposing a birth from order k."""
    if k == 0:
        return 1.0
    if k >= k_max:
        return 0.0
    return 0.5


def birth_death_step(theta, lp, ll, loglik_fn, prior, cfg, rng, stats):
    """One birth/death move on the model order.

    Birth draws xi_{k+1} from its conditional prior, so the prior density
    of the new coordinate cancels the proposal and the log ratio is

        log r = log rho(k* -> k) - log rho(k -> k*)
                + log p(k*) - log p(k) + gamma (ll* - ll).

    Returns ``(theta, lp, ll, accepted)``.
    """
    if _tempered(lp, ll, cfg.gamma) == -math.inf:
        raise InvalidStateError("current state has zero target density")
    k = theta.k
    k_max = min(cfg.k_max, prior.k_max)
    up = _rho_up(k, k_max)
    go_up = rng.uniform() < up
    log_pk_ratio = math.log1p(-prior.geom_p)  # log p(k+1) - log p(k)
    if go_up:
        stats.birth_proposed += 1
        if k >= k_max:
            return theta, lp, ll, False
        xi_new = math.sqrt(prior.xi_var(k + 1)) * rng.standard_normal()
        prop = ThetaParams(k + 1, theta.t, np.append(theta.xi, xi_new))
        ll_new = loglik_fn(prop) if cfg.gamma != 0.0 else ll
        # reverse move is a death chosen with probability 1 - rho_up(k+1)
        log_r = (
            math.log1p(-_rho_up(k + 1, k_max))
            - math.log(up)
            + log_pk_ratio
            + cfg.gamma * (ll_new - ll)
        )
        if _accept(log_r, rng):
            stats.birth_accepted += 1
            return prop, log_prior(prop, prior), ll_new, True
        return theta, lp, ll, False
    stats.death_proposed += 1
    if k == 0:  # rho_up(0) = 1, so death is never selected at k = 0
        return theta, lp, ll, False
    prop = ThetaParams(k - 1, theta.t, theta.xi[:-1].copy())
    ll_new = loglik_fn(prop) if cfg.gamma != 0.0 else ll
    log_r = (
        math.log(_rho_up(k - 1, k_max))
        - math.log1p(-up)
        - log_pk_ratio
        + cfg.gamma * (ll_new - ll)
    )
    if _accept(log_r, rng):
        stats.death_accepted += 1
        return prop, log_prior(prop, prior), ll_new, True
    return theta, lp, ll, False


def calibrate_scales(thetas, k_max=50, min_factor=2):
    """Per-order proposal covariances from an equally-weighted population.

    For each order k with at least ``min_factor * (k + 2)`` particles the
    proposal covariance is (2.38^2 / (k+1)) (S_k + eps I) with S_k the
    sample covariance of the (t, xi) blocks and the jitter
    eps = 1e-8 tr(S_k)/(k+1); orders with fewer particles use the
    identity.  Returns {k: lower Cholesky factor}.
    """
    groups = {}
    for th in thetas:
        groups.setdefault(th.k, []).append(th.as_vector())
    scales = {}
    for k, vecs in groups.items():
        if k > k_max or len(vecs) < min_factor * (k + 2):
            continue
        arr = np.asarray(vecs)
        S = np.cov(arr, rowvar=False).reshape(k + 1, k + 1)
        eps = 1e-8 * float(np.trace(S)) / (k + 1)
        cov = (RW_SCALE2 / (k + 1)) * (S + eps * np.eye(k + 1))
        try:
            scales[k] = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            pass  # degenerate sample: keep the identity fallback
    return scales


def run_mcmc(
    loglik_fn,
    prior,
    steps,
    tau=0.015,
    gamma=1.0,
    thin=1,
    seed=0,
    init=None,
    fix_k=None,
    scales=None,
    k_max=None,
):
    """Plain (non-tempered-sequence) MCMC baseline driver.

    Repeats ``steps`` cycles of one RW move followed by one birth/death
    move at fixed inverse temperature ``gamma`` (gamma = 0 targets the
    prior alone).  The proposal covariance is tau * I for every order
    unless an explicit ``scales`` map is supplied.  Returns a dict with
    thinned traces of k, d, t and the move statistics.
    """
    rng = np.random.default_rng(seed)
    if k_max is None:
        k_max = prior.k_max
    cfg = KernelConfig(gamma=gamma, k_max=k_max)
    if scales is not None:
        cfg.scales = scales
    else:
        cfg.scales = {}
        tau_chol = math.sqrt(tau)
        for k in range(k_max + 1):
            cfg.scales[k] = tau_chol * np.eye(k + 1)
    theta = init.copy() if init is not None else sample_prior(prior, rng, fix_k=fix_k)
    lp = log_prior(theta, prior)
    ll = loglik_fn(theta) if gamma != 0.0 else 0.0
    stats = MoveStats()
    ks, ds, ts = [], [], []
    for step in range(steps):
        theta, lp, ll, _ = rw_metropolis_step(
            theta, lp, ll, loglik_fn, prior, cfg, rng, stats
        )
        if fix_k is None:
            theta, lp, ll, _ = birth_death_step(
                theta, lp, ll, loglik_fn, prior, cfg, rng, stats
            )
        if step % thin == 0:
            ks.append(theta.k)
            ds.append(theta.d)
            ts.append(theta.t)
    return {
        "k": np.array(ks, dtype=int),
        "d": np.array(ds),
        "t": np.array(ts),
        "stats": stats,
        "final": theta,
    }
