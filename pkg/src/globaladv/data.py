"""Toy classification datasets on the unit box [0, 1]^D."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MEANINGLESS = "meaningless"
KINDS = ("two_moons", "blobs", "rings")

# noise-free two_moons spans x in [-1, 2], y in [-0.5, 1]; each axis is mapped onto [0.05, 0.95]
MOON_SCALE = np.array([0.9 / 3.0, 0.9 / 1.5])
MOON_OFFSET = np.array([0.05 + 1.0 * MOON_SCALE[0], 0.05 + 0.5 * MOON_SCALE[1]])


class DatasetFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray  # (n, D)
    labels: np.ndarray  # (n,)
    class_names: tuple[str, ...]

    def __post_init__(self):
        x = np.asarray(self.inputs, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if x.ndim != 2 or y.shape != (x.shape[0],):
            raise ValueError(f"inputs {x.shape} and labels {y.shape} do not line up")
        if x.size and (x.min() < 0.0 or x.max() > 1.0):
            raise ValueError("inputs must lie in [0, 1]^D")
        if y.size and (y.min() < 0 or y.max() >= len(self.class_names)):
            raise ValueError("label out of range for class_names")
        object.__setattr__(self, "inputs", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class DataConfig:
    kind: str = "two_moons"
    n_per_class: int = 100
    noise_scale: float = 0.1
    meaningless_fraction: float = 0.0
    rng_seed: int = 0
    dim: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.n_per_class < 1:
            raise ValueError("n_per_class must be >= 1")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be >= 0")
        if not 0.0 <= self.meaningless_fraction <= 1.0:
            raise ValueError("meaningless_fraction must be in [0, 1]")
        if not 2 <= self.dim <= 20:
            raise ValueError("dim must be between 2 and 20")


def moon_arcs(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free moon curves for parameter t in [0, pi], already mapped into the box."""
    upper = np.stack([np.cos(t), np.sin(t)], axis=1)
    lower = np.stack([1.0 - np.cos(t), 0.5 - np.sin(t)], axis=1)
    return MOON_SCALE * upper + MOON_OFFSET, MOON_SCALE * lower + MOON_OFFSET


def _two_moons(n, noise, rng):
    t = np.linspace(0.0, math.pi, n)
    upper, lower = moon_arcs(t)
    x = np.vstack([upper, lower])
    # noise is drawn in the raw moon units, so it stretches with each axis
    x = x + MOON_SCALE * rng.normal(scale=noise, size=x.shape)
    return x, np.repeat([0, 1], n), ("moon_0", "moon_1")


def _blobs(n, noise, rng):
    centers = np.array([[0.3, 0.3], [0.7, 0.7]])
    x = np.vstack([c + rng.normal(scale=noise, size=(n, 2)) for c in centers])
    return x, np.repeat([0, 1], n), ("blob_0", "blob_1")


def _rings(n, noise, rng):
    parts = []
    for radius in (0.15, 0.35):
        t = rng.uniform(0.0, 2 * math.pi, n)
        r = radius + rng.normal(scale=noise * 0.1, size=n)
        parts.append(0.5 + np.stack([r * np.cos(t), r * np.sin(t)], axis=1))
    return np.vstack(parts), np.repeat([0, 1], n), ("ring_inner", "ring_outer")


_GENERATORS = {"two_moons": _two_moons, "blobs": _blobs, "rings": _rings}


def embedding(dim: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Random signed coordinate projection of the plane into ``dim`` axes.

    Output axis ``j`` copies base axis ``axes[j]`` reflected about 0.5 when
    ``signs[j] < 0``. Copies keep l-inf distances between embedded points
    equal to those in the plane, so class margins survive the embedding.
    """
    axes = np.concatenate([[0, 1], rng.integers(0, 2, dim - 2)])
    signs = rng.choice([-1.0, 1.0], dim)
    return axes, signs


def generate(cfg: DataConfig) -> Dataset:
    """Build a seeded toy dataset, embedded into ``cfg.dim`` axes when dim > 2."""
    rng = np.random.default_rng(cfg.rng_seed)
    x, y, names = _GENERATORS[cfg.kind](cfg.n_per_class, cfg.noise_scale, rng)
    if cfg.dim > 2:
        axes, signs = embedding(cfg.dim, rng)
        x = 0.5 + signs * (x[:, axes] - 0.5)
    ds = Dataset(np.clip(x, 0.0, 1.0), y, names)
    if cfg.meaningless_fraction > 0:
        ds = augment_meaningless(ds, cfg.meaningless_fraction, cfg.rng_seed + 1)
    return ds


def augment_meaningless(ds: Dataset, fraction: float, rng_seed: int) -> Dataset:
    """Append ceil(fraction * n) uniform random inputs under a new final class."""
    if fraction < 0:
        raise ValueError("fraction must be >= 0")
    if MEANINGLESS in ds.class_names:
        raise ValueError("dataset already has a meaningless class")
    n_new = math.ceil(fraction * len(ds))
    rng = np.random.default_rng(rng_seed)
    extra = rng.uniform(0.0, 1.0, size=(n_new, ds.dim))
    names = ds.class_names + (MEANINGLESS,)
    labels = np.concatenate([ds.labels, np.full(n_new, len(names) - 1)])
    return Dataset(np.vstack([ds.inputs, extra]), labels, names)


def random_inputs(n: int, dim: int, rng_seed: int) -> np.ndarray:
    return np.random.default_rng(rng_seed).uniform(0.0, 1.0, size=(n, dim))


def split(ds: Dataset, test_fraction: float = 0.2, rng_seed: int = 0) -> tuple[Dataset, Dataset]:
    order = np.random.default_rng(rng_seed).permutation(len(ds))
    n_test = int(round(test_fraction * len(ds)))
    test, train = order[:n_test], order[n_test:]
    return (
        Dataset(ds.inputs[train], ds.labels[train], ds.class_names),
        Dataset(ds.inputs[test], ds.labels[test], ds.class_names),
    )


def save_dataset(ds: Dataset, path) -> None:
    """One header line ``dim=D;classes=a,b,...`` followed by ``x_0,...,x_{D-1},label`` rows."""
    for name in ds.class_names:
        if any(c in name for c in ",;\n=") or not name:
            raise ValueError(f"class name {name!r} cannot be written to a delimited file")
    rows = [f"dim={ds.dim};classes={','.join(ds.class_names)}"]
    for x, y in zip(ds.inputs, ds.labels):
        rows.append(",".join(format(v, ".17g") for v in x) + f",{int(y)}")
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def load_dataset(path) -> Dataset:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file")
    try:
        fields = dict(part.split("=", 1) for part in lines[0].split(";"))
        dim = int(fields["dim"])
        names = tuple(fields["classes"].split(","))
    except (KeyError, ValueError) as exc:
        raise DatasetFormatError(f"{path}: bad header line {lines[0]!r}") from exc
    xs, ys = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != dim + 1:
            raise DatasetFormatError(f"{path}:{lineno}: expected {dim + 1} fields, got {len(parts)}")
        try:
            xs.append([float(v) for v in parts[:dim]])
            ys.append(int(parts[dim]))
        except ValueError as exc:
            raise DatasetFormatError(f"{path}:{lineno}: {exc}") from exc
    x = np.array(xs, dtype=np.float64).reshape(-1, dim)
    try:
        return Dataset(x, np.array(ys, dtype=np.int64), names)
    except ValueError as exc:
        raise DatasetFormatError(f"{path}: {exc}") from exc
