"""Extreme-value-guided Metropolis-Hastings over example pairs (GEVMCMC).

A pair is stored as a center ``c`` and a half-difference ``delta`` with
``x1 = c + delta`` and ``x2 = c - delta``. Proposals draw the center from a
Gaussian stretched along the normalized loss gradient and draw each
``delta_i`` as ``+-eps/2``, biased toward the gradient sign. Each round keeps
the best of a block of proposals and accepts it against a GEV density fitted
to the largest losses seen so far.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .attacks_global import AttackTrace, GlobalAltConfig, _validate_start, alternating_rounds
from .attacks_local import seeded_streams
from .gev import GevFitError, GevParams, gev_fit_mle, gev_logpdf
from .net import DEFAULT_LOSS, Network, pair_loss, predict_class

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class McmcConfig:
    rounds: int = 100
    warmup_rounds: int = 10
    block_size: int = 59
    top_k: int = 50
    lambda_m: float | None = None  # defaults to 1.2 * epsilon
    lambda_0: float | None = None  # defaults to 0.3 * epsilon
    p_b: float = 0.95
    epsilon: float = 0.1
    rng_seed: int = 0
    sub_steps: int = 30  # warm-up G-PGD settings
    step_size: float = 0.01
    use_gradient: bool = True

    def __post_init__(self):
        if self.lambda_m is None:
            object.__setattr__(self, "lambda_m", 1.2 * self.epsilon)
        if self.lambda_0 is None:
            object.__setattr__(self, "lambda_0", 0.3 * self.epsilon)
        if not self.rounds >= self.warmup_rounds >= 0 or self.rounds < 1:
            raise ValueError("need rounds >= warmup_rounds >= 0 and rounds >= 1")
        if self.block_size < 1 or self.top_k < 2:
            raise ValueError("need block_size >= 1 and top_k >= 2")
        if not 0 < self.lambda_0 <= self.lambda_m:
            raise ValueError("need 0 < lambda_0 <= lambda_m")
        if not 0.5 <= self.p_b <= 1.0:
            raise ValueError("p_b must lie in [0.5, 1]")

    def warmup_config(self) -> GlobalAltConfig:
        return GlobalAltConfig("g_pgd", self.epsilon, max(self.warmup_rounds, 1),
                               self.sub_steps, self.step_size, self.rng_seed)


@dataclass(frozen=True)
class PairCD:
    center: np.ndarray
    delta: np.ndarray

    @classmethod
    def from_pair(cls, x1, x2) -> "PairCD":
        x1, x2 = np.asarray(x1, dtype=np.float64), np.asarray(x2, dtype=np.float64)
        return cls((x1 + x2) / 2.0, (x1 - x2) / 2.0)

    def materialize(self) -> tuple[np.ndarray, np.ndarray]:
        return np.clip(self.center + self.delta, 0.0, 1.0), np.clip(self.center - self.delta, 0.0, 1.0)


@dataclass
class McmcState:
    current: PairCD
    current_loss: float
    current_gradient: np.ndarray
    loss_history: list[float]
    top_k_losses: np.ndarray  # descending
    gev: GevParams | None = None
    accept_count: int = 0
    round_index: int = 0
    fit_failures: int = 0
    unconverged_fits: int = 0
    fallback_decisions: int = 0
    _fitted_on: np.ndarray | None = field(default=None, repr=False)


def normalized_gradient(net: Network, pair: PairCD, loss=DEFAULT_LOSS) -> np.ndarray:
    """Unit gradient of the pair loss with respect to the center; zero when the gradient vanishes."""
    x1, x2 = pair.materialize()
    g = loss.grad(net, x1, x2, "first") + loss.grad(net, x1, x2, "second")
    norm = float(np.linalg.norm(g))
    return g / norm if norm >= 1e-12 else np.zeros_like(g)


def sample_center(x_prev, g, lambda_m, lambda_0, rng, size=None) -> np.ndarray:
    """Draw from N(x_prev, lambda_0^2 I + (lambda_m^2 - lambda_0^2) g g^T), clamped into [0, 1]^D."""
    x_prev = np.asarray(x_prev, dtype=np.float64)
    shape = x_prev.shape if size is None else (size,) + x_prev.shape
    z = rng.standard_normal(shape)
    along = z @ g
    draw = x_prev + lambda_0 * z + (lambda_m - lambda_0) * np.multiply.outer(along, g)
    return np.clip(draw, 0.0, 1.0)


def _signs_with_coin(g, rng, shape):
    s = np.sign(g)
    coin = np.where(rng.uniform(size=shape) < 0.5, 1.0, -1.0)
    return np.where(s == 0, coin, s)


def sample_difference(g, epsilon, p_b, rng, size=None) -> np.ndarray:
    """Each component is +-eps/2, agreeing with sign(g_i) with probability p_b.

    Zero gradient components take a fair random sign instead.
    """
    g = np.asarray(g, dtype=np.float64)
    shape = g.shape if size is None else (size,) + g.shape
    base = _signs_with_coin(g, rng, shape)
    flip = np.where(rng.uniform(size=shape) < p_b, 1.0, -1.0)
    return 0.5 * epsilon * base * flip


def center_logdensity(x_to, x_from, g, lambda_m, lambda_0) -> float:
    d = np.asarray(x_to, dtype=np.float64) - np.asarray(x_from, dtype=np.float64)
    dim = d.size
    if not np.any(g):
        return float(-0.5 * (d @ d) / lambda_0**2 - dim * math.log(lambda_0) - 0.5 * dim * LOG_2PI)
    a = float(d @ g)
    r2 = max(float(d @ d) - a * a, 0.0)
    return (-0.5 * (a * a / lambda_m**2 + r2 / lambda_0**2)
            - math.log(lambda_m) - (dim - 1) * math.log(lambda_0) - 0.5 * dim * LOG_2PI)


def difference_logpmf(delta, g, p_b) -> float:
    agree = np.sign(delta) * np.sign(g)
    with np.errstate(divide="ignore"):
        terms = np.where(agree > 0, math.log(p_b), np.where(agree < 0, np.log(1.0 - p_b), math.log(0.5)))
    return float(terms.sum())


def proposal_logdensity(pair_to: PairCD, pair_from: PairCD, g_from, cfg: McmcConfig) -> float:
    return (center_logdensity(pair_to.center, pair_from.center, g_from, cfg.lambda_m, cfg.lambda_0)
            + difference_logpmf(pair_to.delta, g_from, cfg.p_b))


def acceptance_ratio(
    state: McmcState,
    candidate: PairCD,
    candidate_loss: float,
    candidate_grad,
    cfg: McmcConfig,
    target_logpdf: Callable[[float], float] | None = None,
) -> tuple[float, bool]:
    """Metropolis-Hastings acceptance probability, computed in log space.

    Returns ``(p_accept, used_fallback)``. When neither loss has positive
    target density (or no GEV fit exists yet) the decision falls back to
    accepting strictly larger losses.
    """
    def fallback():
        return (1.0 if candidate_loss > state.current_loss else 0.0), True

    if target_logpdf is None:
        if state.gev is None:
            return fallback()
        target_logpdf = lambda l: gev_logpdf(state.gev, l)  # noqa: E731
    lt_cand = float(target_logpdf(candidate_loss))
    lt_prev = float(target_logpdf(state.current_loss))
    if lt_cand == -math.inf and lt_prev == -math.inf:
        return fallback()
    log_num = lt_cand + proposal_logdensity(state.current, candidate, candidate_grad, cfg)
    log_den = lt_prev + proposal_logdensity(candidate, state.current, state.current_gradient, cfg)
    if log_den == -math.inf:
        return (1.0, False) if log_num > -math.inf else fallback()
    log_ratio = log_num - log_den
    return (1.0 if log_ratio >= 0 else math.exp(log_ratio)), False


def _update_gev(state: McmcState, k: int) -> None:
    if len(state.loss_history) < k:
        return
    if state._fitted_on is not None and np.array_equal(state._fitted_on, state.top_k_losses):
        return  # same sample, same moment start: the fit would repeat itself
    state._fitted_on = state.top_k_losses.copy()
    try:
        fit = gev_fit_mle(state.top_k_losses)
    except GevFitError:
        state.fit_failures += 1
        return
    if not fit.converged:
        state.unconverged_fits += 1
    state.gev = fit.params


def _chain(net, x1, x2, n_rounds, cfg, rng, history, target_logpdf, callback, loss):
    pair = PairCD.from_pair(x1, x2)
    cur_x1, cur_x2 = pair.materialize()
    grad_fn = (lambda p: normalized_gradient(net, p, loss)) if cfg.use_gradient else (lambda p: np.zeros_like(p.center))
    state = McmcState(
        current=pair,
        current_loss=float(loss.value(net, cur_x1, cur_x2)),
        current_gradient=grad_fn(pair),
        loss_history=list(history),
        top_k_losses=np.sort(np.asarray(history, dtype=np.float64))[::-1][:cfg.top_k],
    )
    d = x1.size
    out = np.empty((n_rounds, 2, d))
    out_loss = np.empty(n_rounds)
    for i in range(n_rounds):
        state.round_index = i + 1
        centers = sample_center(state.current.center, state.current_gradient, cfg.lambda_m, cfg.lambda_0, rng, cfg.block_size)
        deltas = sample_difference(state.current_gradient, cfg.epsilon, cfg.p_b, rng, cfg.block_size)
        b1 = np.clip(centers + deltas, 0.0, 1.0)
        b2 = np.clip(centers - deltas, 0.0, 1.0)
        block_losses = np.atleast_1d(loss.value(net, b1, b2))
        best = int(np.argmax(block_losses))
        candidate = PairCD(centers[best], deltas[best])
        cand_loss = float(block_losses[best])

        state.loss_history.extend(block_losses.tolist())
        merged = np.concatenate([state.top_k_losses, block_losses])
        state.top_k_losses = np.sort(merged)[::-1][:cfg.top_k]
        if target_logpdf is None:
            _update_gev(state, cfg.top_k)

        cand_grad = grad_fn(candidate)
        p_accept, fell_back = acceptance_ratio(state, candidate, cand_loss, cand_grad, cfg, target_logpdf)
        state.fallback_decisions += fell_back
        if rng.uniform() <= p_accept:
            state.current, state.current_loss, state.current_gradient = candidate, cand_loss, cand_grad
            state.accept_count += 1
        out[i] = state.current.materialize()
        out_loss[i] = state.current_loss
        if callback is not None:
            callback(state)
    return out, out_loss, state


def run_gevmcmc(
    net: Network,
    start,
    cfg: McmcConfig,
    rngs=None,
    target_logpdf: Callable[[float], float] | None = None,
    callback: Callable[[McmcState], None] | None = None,
    loss=DEFAULT_LOSS,
) -> AttackTrace:
    """GEVMCMC from one start pair or a batch of them.

    The first ``cfg.warmup_rounds`` rounds are plain G-PGD; each chain then
    continues with its own RNG stream. ``target_logpdf`` replaces the fitted
    GEV log-density, which is only useful for testing the sampler.
    """
    x1, x2, _ = _validate_start(start[0], start[1], cfg.epsilon)
    if rngs is None:
        rngs = seeded_streams(cfg.rng_seed, len(x1))
    n, d = x1.shape
    if cfg.warmup_rounds > 0:
        warm = alternating_rounds(net, x1, x2, cfg.warmup_config(), rngs)
        if cfg.rounds == cfg.warmup_rounds:
            return warm
        x1, x2 = warm.x1[-1], warm.x2[-1]
        histories = warm.loss.T
    else:
        warm = None
        histories = np.atleast_2d(pair_loss(net, x1, x2)).T

    n_mcmc = cfg.rounds - cfg.warmup_rounds
    out_x1 = np.empty((n_mcmc, n, d))
    out_x2 = np.empty((n_mcmc, n, d))
    out_loss = np.empty((n_mcmc, n))
    stats = {"accept_count": [], "fit_failures": [], "unconverged_fits": [], "fallback_decisions": []}
    for j in range(n):
        pairs, losses, state = _chain(net, x1[j], x2[j], n_mcmc, cfg, rngs[j], histories[j],
                                      target_logpdf, callback, loss)
        out_x1[:, j], out_x2[:, j], out_loss[:, j] = pairs[:, 0], pairs[:, 1], losses
        for key in stats:
            stats[key].append(getattr(state, key))
    mcmc = AttackTrace(out_x1, out_x2, out_loss,
                       predict_class(net, out_x1.reshape(-1, d)).reshape(n_mcmc, n),
                       predict_class(net, out_x2.reshape(-1, d)).reshape(n_mcmc, n),
                       info={"mcmc_rounds": n_mcmc, **stats})
    return mcmc if warm is None else AttackTrace.concat(warm, mcmc)
