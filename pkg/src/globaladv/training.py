"""Minibatch SGD training, optionally hardened with PGD adversarial examples."""

from __future__ import annotations

import logging

import numpy as np

from .attacks_local import LocalAttackConfig, local_attack
from .data import Dataset
from .net import DenseLayer, Network, TrainConfig, _log_softmax, _logits_batch

log = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    pass


def _batch_grads(net: Network, x: np.ndarray, y: np.ndarray, weight: float):
    """Mean cross-entropy and its parameter gradients, scaled by ``weight``."""
    z, pre = _logits_batch(net, x)
    logp = _log_softmax(z)
    rows = np.arange(len(x))
    loss = -logp[rows, y].mean()
    delta = np.exp(logp)
    delta[rows, y] -= 1.0
    delta *= weight / len(x)
    grads = []
    for i in range(len(net.layers) - 1, -1, -1):
        if i == 0:
            a_prev = x
        else:
            a_prev = np.maximum(pre[i - 1], 0.0) if net.layers[i - 1].activation == "relu" else pre[i - 1]
        grads.append((delta.T @ a_prev, delta.sum(axis=0)))
        if i > 0:
            delta = delta @ net.layers[i].weights
            if net.layers[i - 1].activation == "relu":
                delta = delta * (pre[i - 1] > 0)
    grads.reverse()
    return weight * loss, grads


def accuracy(net: Network, ds: Dataset) -> float:
    z, _ = _logits_batch(net, ds.inputs)
    return float(np.mean(np.argmax(z, axis=1) == ds.labels))


def train(net: Network, ds: Dataset, cfg: TrainConfig) -> Network:
    """Return a trained copy of ``net``; the input network is left untouched.

    With ``cfg.adversarial`` set, each epoch first attacks the whole training
    set with PGD against the model as it stood at the end of the previous
    epoch, then trains on clean and adversarial minibatches together.
    """
    if len(ds) == 0:
        raise ValueError("cannot train on an empty dataset")
    if ds.labels.max() >= net.n_classes:
        raise ValueError("dataset labels exceed the network's class count")
    if ds.dim != net.input_dim:
        raise ValueError(f"dataset width {ds.dim} does not match network input {net.input_dim}")

    rng = np.random.default_rng(cfg.rng_seed)
    weights = [l.weights.copy() for l in net.layers]
    biases = [l.bias.copy() for l in net.layers]
    acts = [l.activation for l in net.layers]

    def current():
        return Network(
            tuple(DenseLayer(w, b, a) for w, b, a in zip(weights, biases, acts)),
            net.input_dim,
            net.class_names,
        )

    adv_cfg = cfg.adversarial
    if adv_cfg is not None:
        w_clean = 1.0 / (1.0 + adv_cfg.mix_ratio)
        w_adv = adv_cfg.mix_ratio / (1.0 + adv_cfg.mix_ratio)
    model = net
    for epoch in range(cfg.epochs):
        x_adv = None
        if adv_cfg is not None:
            attack = LocalAttackConfig(
                "pgd", adv_cfg.epsilon, adv_cfg.pgd_steps, adv_cfg.step_size,
                rng_seed=cfg.rng_seed * 1_000_003 + epoch * len(ds),
            )
            x_adv = local_attack(model, ds.inputs, ds.labels, attack)
        order = rng.permutation(len(ds))
        epoch_loss = 0.0
        for start in range(0, len(ds), cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            if x_adv is None:
                loss, grads = _batch_grads(model, ds.inputs[idx], ds.labels[idx], 1.0)
            else:
                loss_c, grads_c = _batch_grads(model, ds.inputs[idx], ds.labels[idx], w_clean)
                loss_a, grads_a = _batch_grads(model, x_adv[idx], ds.labels[idx], w_adv)
                loss = loss_c + loss_a
                grads = [(gw + hw, gb + hb) for (gw, gb), (hw, hb) in zip(grads_c, grads_a)]
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"loss became {loss} at epoch {epoch}, batch starting {start}; "
                    f"lower the learning rate (currently {cfg.learning_rate})"
                )
            epoch_loss += loss * len(idx)
            for i, (gw, gb) in enumerate(grads):
                weights[i] -= cfg.learning_rate * gw
                biases[i] -= cfg.learning_rate * gb
            try:
                model = current()
            except ValueError as exc:
                raise TrainingDivergedError(
                    f"parameters became non-finite at epoch {epoch}; "
                    f"lower the learning rate (currently {cfg.learning_rate})"
                ) from exc
        log.debug("epoch %d mean loss %.6f", epoch, epoch_loss / len(ds))
    return model
