"""Adaptive-tempering sequential Monte Carlo over the FEXP posterior.

The sampler moves N particles through the tempered path

    eta_t(theta)  proportional to  p(theta) * p~(x | theta)^{gamma_t},
    0 = gamma_0 < gamma_1 < ... < gamma_T = 1,

choosing each increment adaptively so that the effective sample size of
the incremental weights w_t = p~^{gamma_t - gamma_{t-1}} equals c * N
(Brent root solve; the increment is capped once the endpoint keeps the
ESS above the target).  Every iteration then resamples multinomially and
applies M cycles of the RW + birth/death kernels at the new temperature,
with per-order proposal covariances calibrated from the freshly resampled
population.

Reproducibility: one master seed spawns N + 1 independent generator
streams -- stream j drives the initialisation and all moves of particle
slot j, stream N drives resampling -- so results are identical for a
given (config, seed) regardless of how the per-particle work is executed.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .approx import approx_log_lik, prepare_dataset
from .mcmc import KernelConfig, MoveStats, birth_death_step, calibrate_scales, rw_metropolis_step
from .model import log_prior, sample_prior

__all__ = [
    "SmcConfig",
    "ParticleSystem",
    "ess",
    "solve_next_gamma",
    "multinomial_resample",
    "run_smc",
]


@dataclass
class SmcConfig:
    """Sampler settings (defaults follow the reference configuration)."""

    N: int = 1000            # particles
    M: int = 20              # kernel cycles per tempering iteration
    c: float = 0.5           # ESS target fraction for the gamma solve
    seed: int = 0
    mode: str = "whittle"    # approximate-likelihood quadratic-form mode
    k_max: int = 50
    fix_k: int | None = None  # freeze the model order (testing)
    brent_tol: float = 1e-10
    max_iters: int = 10_000

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.M < 0:
            raise ValueError("M must be >= 0")
        if not 0.0 < self.c < 1.0:
            raise ValueError("c must lie in (0, 1)")
        if self.mode not in ("whittle", "toeplitz"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class ParticleSystem:
    """Final population plus per-iteration diagnostics."""

    thetas: list
    log_weights: np.ndarray          # normalised; uniform after a final resample
    cached_loglik: np.ndarray
    gamma_schedule: list = field(default_factory=list)
    ess_trace: list = field(default_factory=list)
    rw_rates: list = field(default_factory=list)
    bd_rates: list = field(default_factory=list)
    log_evidence: float = 0.0

    @property
    def weights(self):
        w = np.exp(self.log_weights - np.max(self.log_weights))
        return w / w.sum()


def ess(log_weights):
    """Effective sample size (sum w)^2 / sum w^2 of unnormalised log weights."""
    lw = np.asarray(log_weights, dtype=float)
    finite = lw[np.isfinite(lw)]
    if finite.size == 0:
        raise ValueError("all weights are zero")
    m = finite.max()
    w = np.exp(lw - m, where=np.isfinite(lw), out=np.zeros_like(lw))
    s = w.sum()
    return float(s * s / (w @ w))


def solve_next_gamma(loglik, gamma, c, N=None, tol=1e-10):
    """Next inverse temperature on the adaptive schedule.

    Finds alpha in (0, 1 - gamma] with ESS(alpha * loglik) = c * N by
    Brent's method and returns gamma + alpha; if even the full remaining
    step keeps the ESS at or above the target the schedule finishes at 1.
    """
    loglik = np.asarray(loglik, dtype=float)
    if N is None:
        N = loglik.size
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    target = c * N
    remaining = 1.0 - gamma

    def gap(alpha):
        return ess(alpha * loglik) - target

    if gap(remaining) >= 0.0:
        return 1.0
    alpha = brentq(gap, 0.0, remaining, xtol=tol)
    return gamma + alpha


def multinomial_resample(weights, N, rng):
    """N independent categorical draws; returns sorted ancestor indices."""
    weights = np.asarray(weights, dtype=float)
    if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0, atol=1e-8):
        raise ValueError("weights must be a probability vector")
    idx = rng.choice(weights.size, size=N, replace=True, p=weights / weights.sum())
    return np.sort(idx)


def run_smc(x, prior, cfg, loglik_fn=None):
    """Run the adaptive-tempering SMC sampler.

    Parameters
    ----------
    x : array or None
        Data series; may be None when an explicit ``loglik_fn`` is given.
    prior : PriorConfig
    cfg : SmcConfig
    loglik_fn : callable theta -> float, optional
        Replaces the default approximate likelihood built from ``x``
        (used by tests with analytic pseudo-likelihoods).

    Returns a :class:`ParticleSystem`.  The final population is equally
    weighted because every iteration -- including the last one at
    gamma = 1 -- resamples before moving.
    """
    if loglik_fn is None:
        if x is None:
            raise ValueError("either data or loglik_fn is required")
        ctx = prepare_dataset(x)
        loglik_fn = lambda th: approx_log_lik(th, ctx, prior, mode=cfg.mode)

    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(cfg.N + 1)]
    resample_rng = streams[cfg.N]

    thetas = [sample_prior(prior, streams[j], fix_k=cfg.fix_k) for j in range(cfg.N)]
    lp = np.array([log_prior(th, prior) for th in thetas])
    ll = np.array([loglik_fn(th) for th in thetas])

    system = ParticleSystem(
        thetas=thetas,
        log_weights=np.full(cfg.N, -math.log(cfg.N)),
        cached_loglik=ll,
    )

    gamma = 0.0
    iteration = 0
    while gamma < 1.0:
        iteration += 1
        if iteration > cfg.max_iters:
            raise RuntimeError("tempering schedule failed to reach gamma = 1")
        gamma_new = solve_next_gamma(ll, gamma, cfg.c, cfg.N, tol=cfg.brent_tol)
        alpha = gamma_new - gamma
        inc = alpha * ll
        m = np.max(inc[np.isfinite(inc)])
        w = np.exp(inc - m, where=np.isfinite(inc), out=np.zeros_like(inc))
        wsum = w.sum()
        system.log_evidence += m + math.log(wsum / cfg.N)
        weights = w / wsum
        system.ess_trace.append(ess(inc))
        system.gamma_schedule.append(gamma_new)

        ancestors = multinomial_resample(weights, cfg.N, resample_rng)
        thetas = [thetas[i].copy() for i in ancestors]
        lp = lp[ancestors].copy()
        ll = ll[ancestors].copy()

        kcfg = KernelConfig(
            gamma=gamma_new,
            scales=calibrate_scales(thetas, k_max=cfg.k_max),
            k_max=cfg.k_max,
        )
        stats = MoveStats()
        for j in range(cfg.N):
            th, lpj, llj = thetas[j], lp[j], ll[j]
            rng_j = streams[j]
            for _ in range(cfg.M):
                th, lpj, llj, _acc = rw_metropolis_step(
                    th, lpj, llj, loglik_fn, prior, kcfg, rng_j, stats
                )
                if cfg.fix_k is None:
                    th, lpj, llj, _acc = birth_death_step(
                        th, lpj, llj, loglik_fn, prior, kcfg, rng_j, stats
                    )
            thetas[j], lp[j], ll[j] = th, lpj, llj

        system.rw_rates.append(stats.rw_rate())
        system.bd_rates.append(stats.bd_rate())
        gamma = gamma_new

    system.thetas = thetas
    system.cached_loglik = ll
    system.log_weights = np.full(cfg.N, -math.log(cfg.N))
    return system
