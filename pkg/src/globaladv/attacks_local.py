"""Local l-inf attacks around labelled inputs (FGSM, iterative FGSM, PGD) and the box clip."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .net import Network, label_loss_grad

LOCAL_METHODS = ("fgsm", "ifgsm", "pgd")


@dataclass(frozen=True)
class Region:
    center: np.ndarray
    epsilon: float

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass(frozen=True)
class LocalAttackConfig:
    method: str = "pgd"
    epsilon: float = 0.1
    steps: int = 30
    step_size: float = 0.01
    rng_seed: int = 0
    noise_scale: float = 1.0  # multiplies the PGD random start; 0 reproduces ifgsm

    def __post_init__(self):
        if self.method not in LOCAL_METHODS:
            raise ValueError(f"method must be one of {LOCAL_METHODS}")
        if self.method == "fgsm":
            object.__setattr__(self, "steps", 1)
            object.__setattr__(self, "step_size", self.epsilon)
        if self.steps < 1 or self.step_size <= 0:
            raise ValueError("steps must be >= 1 and step_size > 0")


def clip(x, region: Region) -> np.ndarray:
    """Clamp into the l-inf ball around the region center intersected with [0, 1]^D."""
    c = np.asarray(region.center, dtype=np.float64)
    lo = np.maximum(0.0, c - region.epsilon)
    hi = np.minimum(1.0, c + region.epsilon)
    return np.minimum(np.maximum(np.asarray(x, dtype=np.float64), lo), hi)


def seeded_streams(base_seed: int, n: int) -> list[np.random.Generator]:
    """One independent generator per trajectory, seeded base_seed + index."""
    return [np.random.default_rng(base_seed + i) for i in range(n)]


def uniform_noise(rngs, epsilon: float, dim: int) -> np.ndarray:
    return np.stack([r.uniform(-epsilon, epsilon, dim) for r in rngs])


def local_attack(net: Network, x, y, cfg: LocalAttackConfig, rngs=None) -> np.ndarray:
    """Signed-gradient ascent on the label loss inside the eps-ball of each clean input.

    Accepts one input with an integer label or a batch with a label array;
    batch row ``i`` draws its PGD start from ``default_rng(cfg.rng_seed + i)``.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    yb = np.atleast_1d(np.asarray(y, dtype=np.int64))
    region = Region(xb, cfg.epsilon)

    adv = xb.copy()
    if cfg.method == "pgd":
        if rngs is None:
            rngs = seeded_streams(cfg.rng_seed, len(xb))
        adv = clip(adv + cfg.noise_scale * uniform_noise(rngs, cfg.epsilon, xb.shape[1]), region)
    for _ in range(cfg.steps):
        g = label_loss_grad(net, adv, yb)
        adv = clip(adv + cfg.step_size * np.sign(g), region)
    return adv[0] if single else adv
