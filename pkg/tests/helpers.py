"""Hand-built networks and fixture recipes shared by the test modules."""

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from globaladv.data import DataConfig, Dataset, generate, save_dataset, split
from globaladv.net import AdversarialConfig, DenseLayer, Network, TrainConfig, init_network, save_model
from globaladv.training import train


def names(c):
    return tuple(f"c{i}" for i in range(c))


def zero_net(d=2, c=3):
    return Network((DenseLayer(np.zeros((c, d)), np.zeros(c), "identity"),), d, names(c))


def linear_net(w, b=None):
    w = np.asarray(w, dtype=float)
    b = np.zeros(w.shape[0]) if b is None else np.asarray(b, dtype=float)
    return Network((DenseLayer(w, b, "identity"),), w.shape[1], names(w.shape[0]))


def random_net(rng, d, widths, c, scale=1.0):
    sizes = (d,) + tuple(widths) + (c,)
    layers = []
    for i in range(len(sizes) - 1):
        act = "relu" if i < len(sizes) - 2 else "identity"
        w = rng.normal(scale=scale / np.sqrt(sizes[i]), size=(sizes[i + 1], sizes[i]))
        layers.append(DenseLayer(w, rng.normal(scale=0.1, size=sizes[i + 1]), act))
    return Network(tuple(layers), d, names(c))


# D = 2 moons with a meaningless class, used for the grid oracle and 2-D examples
MOONS2D_DATA = DataConfig("two_moons", 500, 0.05, 0.1, 0, 2)
MOONS2D_TRAIN = TrainConfig(300, 16, 0.3, 0)

# D = 10 moons for the campaign comparisons
TOY10_DATA = DataConfig("two_moons", 500, 0.05, 0.1, 0, 10)
TOY10_SIZES = (10, 32, 32, 3)
TOY10_TRAIN = TrainConfig(300, 32, 0.1, 0)
TOY10_ADV_TRAIN = TrainConfig(100, 32, 0.1, 1, AdversarialConfig(30, 0.01, 0.1, 1.0))


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


@dataclass
class Fixture:
    ds: Dataset
    net: Network
    data_path: str
    model_path: str
    train_seconds: float


def _trained(ds, net, cfg):
    train_part, _ = split(ds, 0.2, 0)
    t0 = time.perf_counter()
    net = train(net, train_part, cfg)
    return net, time.perf_counter() - t0


def build_moons2d(root: Path) -> Fixture:
    ds = generate(MOONS2D_DATA)
    net, seconds = _trained(ds, init_network((2, 32, 32, 3), ds.class_names, 0), MOONS2D_TRAIN)
    save_dataset(ds, root / "moons2d.csv")
    save_model(net, root / "moons2d.json")
    return Fixture(ds, net, str(root / "moons2d.csv"), str(root / "moons2d.json"), seconds)


def build_toy10(root: Path) -> tuple[Fixture, Fixture]:
    """Natural model and its adversarially fine-tuned copy; the second reports total training time."""
    ds = generate(TOY10_DATA)
    nat, t_nat = _trained(ds, init_network(TOY10_SIZES, ds.class_names, 0), TOY10_TRAIN)
    adv, t_adv = _trained(ds, nat, TOY10_ADV_TRAIN)
    save_dataset(ds, root / "toy10.csv")
    save_model(nat, root / "natural.json")
    save_model(adv, root / "adversarial.json")
    data = str(root / "toy10.csv")
    return (Fixture(ds, nat, data, str(root / "natural.json"), t_nat),
            Fixture(ds, adv, data, str(root / "adversarial.json"), t_nat + t_adv))
