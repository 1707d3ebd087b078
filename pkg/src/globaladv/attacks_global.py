"""Alternating-gradient global attacks: G-FGSM, G-IFGSM and G-PGD.

Each round attacks x1 inside the eps-ball centred on x2 using x2's predicted
class as the label, then attacks x2 inside the ball centred on the updated
x1. Because every clip is centred on the partner, the pair never drifts
further than eps apart, while the pair as a whole is free to wander.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attacks_local import Region, clip, seeded_streams, uniform_noise
from .net import Network, label_loss_grad, pair_loss, predict_class

GLOBAL_ALT_METHODS = ("g_fgsm", "g_ifgsm", "g_pgd")


@dataclass(frozen=True)
class ExamplePair:
    x1: np.ndarray
    x2: np.ndarray
    loss: float
    class1: int
    class2: int
    round_index: int

    @property
    def success(self) -> bool:
        return self.class1 != self.class2


@dataclass(frozen=True)
class GlobalAltConfig:
    method: str = "g_pgd"
    epsilon: float = 0.1
    rounds: int = 100
    sub_steps: int = 30
    step_size: float = 0.01
    rng_seed: int = 0
    noise_scale: float = 1.0  # multiplies the per-round random restart of g_pgd

    def __post_init__(self):
        if self.method not in GLOBAL_ALT_METHODS:
            raise ValueError(f"method must be one of {GLOBAL_ALT_METHODS}")
        if self.method == "g_fgsm":
            object.__setattr__(self, "sub_steps", 1)
            object.__setattr__(self, "step_size", self.epsilon)
        if self.rounds < 1 or self.sub_steps < 1 or self.step_size <= 0 or self.epsilon < 0:
            raise ValueError("need rounds >= 1, sub_steps >= 1, step_size > 0, epsilon >= 0")

    @property
    def uses_noise(self) -> bool:
        return self.method == "g_pgd"


@dataclass
class AttackTrace:
    """Pairs emitted round by round; arrays are indexed ``[round, start]``."""

    x1: np.ndarray  # (N, n, D)
    x2: np.ndarray
    loss: np.ndarray  # (N, n)
    class1: np.ndarray
    class2: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def rounds(self) -> int:
        return self.loss.shape[0]

    @property
    def n_starts(self) -> int:
        return self.loss.shape[1]

    @property
    def success(self) -> np.ndarray:
        return self.class1 != self.class2

    def pairs(self, start: int = 0) -> list[ExamplePair]:
        return [
            ExamplePair(self.x1[i, start], self.x2[i, start], float(self.loss[i, start]),
                        int(self.class1[i, start]), int(self.class2[i, start]), i + 1)
            for i in range(self.rounds)
        ]

    @classmethod
    def concat(cls, first: "AttackTrace", second: "AttackTrace") -> "AttackTrace":
        return cls(*(np.concatenate([getattr(first, k), getattr(second, k)]) for k in
                     ("x1", "x2", "loss", "class1", "class2")), info={**first.info, **second.info})


def _validate_start(x1, x2, epsilon):
    x1 = np.array(x1, dtype=np.float64)
    x2 = np.array(x2, dtype=np.float64)
    single = x1.ndim == 1
    if single:
        x1, x2 = x1[None, :], x2[None, :]
    if x1.shape != x2.shape or x1.ndim != 2:
        raise ValueError(f"start pair shapes differ: {x1.shape} vs {x2.shape}")
    if x1.min() < 0 or x1.max() > 1 or x2.min() < 0 or x2.max() > 1:
        raise ValueError("start pair must lie in [0, 1]^D")
    if np.max(np.abs(x1 - x2)) > epsilon + 1e-12:
        raise ValueError("start pair is further apart than epsilon")
    return x1, x2, single


def make_start_pairs(x, epsilon: float, rngs) -> tuple[np.ndarray, np.ndarray]:
    """Partner each start with a uniform-noise copy of itself, clamped to the unit box."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    return x.copy(), np.clip(x + uniform_noise(rngs, epsilon, x.shape[1]), 0.0, 1.0)


def _sub_attack(net, x, partner, label, cfg, rngs):
    region = Region(partner, cfg.epsilon)
    if cfg.uses_noise:
        x = clip(x + cfg.noise_scale * uniform_noise(rngs, cfg.epsilon, x.shape[1]), region)
    for _ in range(cfg.sub_steps):
        x = clip(x + cfg.step_size * np.sign(label_loss_grad(net, x, label)), region)
    return x


def alternating_rounds(net: Network, x1, x2, cfg: GlobalAltConfig, rngs) -> AttackTrace:
    """Run ``cfg.rounds`` alternating rounds on batched pairs with one RNG stream per row."""
    n, d = x1.shape
    out_x1 = np.empty((cfg.rounds, n, d))
    out_x2 = np.empty((cfg.rounds, n, d))
    out_loss = np.empty((cfg.rounds, n))
    out_c1 = np.empty((cfg.rounds, n), dtype=np.int64)
    out_c2 = np.empty((cfg.rounds, n), dtype=np.int64)
    for i in range(cfg.rounds):
        x1 = _sub_attack(net, x1, x2, predict_class(net, x2), cfg, rngs)
        x2 = _sub_attack(net, x2, x1, predict_class(net, x1), cfg, rngs)
        out_x1[i], out_x2[i] = x1, x2
        out_c1[i], out_c2[i] = predict_class(net, x1), predict_class(net, x2)
        out_loss[i] = pair_loss(net, x1, x2)
    return AttackTrace(out_x1, out_x2, out_loss, out_c1, out_c2)


def g_attack(net: Network, start, cfg: GlobalAltConfig, rngs=None) -> AttackTrace:
    """Alternating global attack from one start pair ``(x1, x2)`` or a batch of them.

    Without explicit ``rngs`` start ``i`` uses ``default_rng(cfg.rng_seed + i)``.
    """
    x1, x2, _ = _validate_start(start[0], start[1], cfg.epsilon)
    if rngs is None:
        rngs = seeded_streams(cfg.rng_seed, len(x1))
    return alternating_rounds(net, x1, x2, cfg, rngs)
