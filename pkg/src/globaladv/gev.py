"""Generalized extreme value distribution: CDF, density and maximum-likelihood fit.

Shape convention: ``xi > 0`` is the heavy-tailed Frechet type, ``xi < 0`` the
bounded reverse-Weibull type, ``xi == 0`` Gumbel. (scipy's ``genextreme``
uses ``c = -xi``.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

GUMBEL_EPS = 1e-8
EULER_GAMMA = 0.5772156649015329
MAX_ITER = 500
SIMPLEX_TOL = 1e-10


class GevFitError(ValueError):
    pass


@dataclass(frozen=True)
class GevParams:
    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma) and math.isfinite(self.xi)):
            raise ValueError("GEV parameters must be finite")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class GevFit:
    params: GevParams
    loglik: float
    init_loglik: float
    converged: bool
    n_iter: int


def gev_cdf(p: GevParams, l):
    z = (np.asarray(l, dtype=np.float64) - p.mu) / p.sigma
    if abs(p.xi) < GUMBEL_EPS:
        with np.errstate(over="ignore"):
            out = np.exp(-np.exp(-z))
    else:
        t = 1.0 + p.xi * z
        inside = t > 0
        with np.errstate(divide="ignore", over="ignore"):
            s = np.where(inside, np.abs(t) ** (-1.0 / p.xi), 0.0)
        out = np.where(inside, np.exp(-s), 0.0 if p.xi > 0 else 1.0)
    return float(out) if out.ndim == 0 else out


def gev_logpdf(p: GevParams, l):
    """Log density; ``-inf`` outside the support."""
    z = (np.asarray(l, dtype=np.float64) - p.mu) / p.sigma
    log_sigma = math.log(p.sigma)
    if abs(p.xi) < GUMBEL_EPS:
        with np.errstate(over="ignore"):
            out = -log_sigma - z - np.exp(-z)
    else:
        t = 1.0 + p.xi * z
        inside = t > 0
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            log_t = np.log(np.where(inside, t, 1.0))
            out = np.where(
                inside,
                -log_sigma - (1.0 + 1.0 / p.xi) * log_t - np.exp(-log_t / p.xi),
                -np.inf,
            )
    out = np.where(np.isnan(out), -np.inf, out)
    return float(out) if out.ndim == 0 else out


def gev_pdf(p: GevParams, l):
    return np.exp(gev_logpdf(p, l))


def gev_loglik(p: GevParams, samples) -> float:
    return float(np.sum(gev_logpdf(p, samples)))


def moment_init(samples) -> GevParams:
    """Gumbel method-of-moments starting point."""
    x = np.asarray(samples, dtype=np.float64)
    sigma = math.sqrt(6.0) * float(np.std(x, ddof=1)) / math.pi
    return GevParams(float(np.mean(x)) - EULER_GAMMA * sigma, sigma, 0.0)


def _neg_loglik(theta, x):
    # callers silence floating-point warnings; overflow lands on inf and is rejected below
    mu, log_sigma, xi = float(theta[0]), float(theta[1]), float(theta[2])
    if not (math.isfinite(mu) and math.isfinite(log_sigma) and math.isfinite(xi)):
        return math.inf
    z = (x - mu) / math.exp(log_sigma)
    if abs(xi) < GUMBEL_EPS:
        ll = -len(x) * log_sigma - z.sum() - np.exp(-z).sum()
    else:
        t = 1.0 + xi * z
        if t.min() <= 0:
            return math.inf
        log_t = np.log(t)
        ll = -len(x) * log_sigma - (1.0 + 1.0 / xi) * log_t.sum() - np.exp(-log_t / xi).sum()
    return -ll if math.isfinite(ll) else math.inf


def gev_fit_mle(samples, init: GevParams | None = None, max_iter: int = MAX_ITER) -> GevFit:
    """Maximum-likelihood fit by Nelder-Mead over (mu, log sigma, xi).

    Trial points that leave a sample outside the support score ``-inf``
    log-likelihood. Hitting ``max_iter`` returns the best vertex found with
    ``converged=False``.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 5:
        raise GevFitError(f"need at least 5 samples, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise GevFitError("samples must be finite")
    if np.ptp(x) == 0:
        raise GevFitError("samples are all equal")
    if init is None:
        init = moment_init(x)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        theta0 = np.array([init.mu, math.log(init.sigma), init.xi])
        f0 = _neg_loglik(theta0, x)
        if not math.isfinite(f0):
            # the given start excludes some samples; fall back to the moment start
            init = moment_init(x)
            theta0 = np.array([init.mu, math.log(init.sigma), init.xi])
            f0 = _neg_loglik(theta0, x)
        simplex = np.vstack([theta0, theta0 + [0.5 * init.sigma, 0, 0], theta0 + [0, 0.25, 0], theta0 + [0, 0, 0.1]])
        res = minimize(
            _neg_loglik, theta0, args=(x,), method="Nelder-Mead",
            options={"maxiter": max_iter, "xatol": SIMPLEX_TOL, "fatol": SIMPLEX_TOL, "initial_simplex": simplex},
        )
    theta = res.x if res.fun <= f0 else theta0
    params = GevParams(float(theta[0]), math.exp(float(theta[1])), float(theta[2]))
    return GevFit(params, -float(min(res.fun, f0)), -float(f0), bool(res.success), int(res.nit))
