"""Attack campaigns: start selection, metric aggregation, paired comparison, report files."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .attacks_global import GLOBAL_ALT_METHODS, GlobalAltConfig, g_attack, make_start_pairs
from .attacks_local import LocalAttackConfig, local_attack, seeded_streams
from .data import MEANINGLESS, Dataset, load_dataset, random_inputs, split
from .gevmcmc import McmcConfig, run_gevmcmc
from .net import Network, label_loss, load_model, predict_class

log = logging.getLogger(__name__)

LOCAL_METHODS = ("l_fgsm", "l_ifgsm", "l_pgd")
METHODS = LOCAL_METHODS + GLOBAL_ALT_METHODS + ("gevmcmc",)
START_MODES = ("test_images", "random_images")
SERIES_COLUMNS = ("round", "n_pairs", "n_success", "max_loss", "avg_loss", "cum_max_loss")

# stream tags keep start selection independent of the per-start streams seeded base_seed + i
_SELECT_TAG = 7_919
_RANDOM_TAG = 104_729


class CampaignConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Campaign:
    model_path: str = ""
    data_path: str = ""
    method: str = "g_pgd"
    start_mode: str = "test_images"
    n_starts: int = 100
    epsilon: float = 0.1
    rounds: int = 100
    sub_steps: int = 30
    step_size: float | None = None  # defaults to epsilon / 10
    rng_seed: int = 0
    lambda_m: float | None = None
    lambda_0: float | None = None
    p_b: float = 0.95
    block_size: int = 59
    warmup_rounds: int = 10
    top_k: int = 50
    test_fraction: float = 0.2
    split_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise CampaignConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.start_mode not in START_MODES:
            raise CampaignConfigError(f"start_mode must be one of {START_MODES}, got {self.start_mode!r}")
        if self.n_starts < 1:
            raise CampaignConfigError("n_starts must be >= 1")
        if self.step_size is None:
            object.__setattr__(self, "step_size", self.epsilon / 10)
        try:
            self.method_config()
        except ValueError as exc:
            raise CampaignConfigError(str(exc)) from exc

    @classmethod
    def from_dict(cls, raw: dict) -> "Campaign":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise CampaignConfigError(f"unknown campaign keys: {sorted(unknown)}")
        return cls(**raw)

    def method_config(self):
        if self.method in LOCAL_METHODS:
            return LocalAttackConfig(self.method[2:], self.epsilon, self.sub_steps, self.step_size, self.rng_seed)
        if self.method in GLOBAL_ALT_METHODS:
            return GlobalAltConfig(self.method, self.epsilon, self.rounds, self.sub_steps, self.step_size, self.rng_seed)
        return McmcConfig(
            rounds=self.rounds, warmup_rounds=self.warmup_rounds, block_size=self.block_size,
            top_k=self.top_k, lambda_m=self.lambda_m, lambda_0=self.lambda_0, p_b=self.p_b,
            epsilon=self.epsilon, rng_seed=self.rng_seed, sub_steps=self.sub_steps, step_size=self.step_size,
        )

    def echo(self) -> dict:
        out = asdict(self)
        cfg = self.method_config()
        out["effective"] = {k: v for k, v in asdict(cfg).items() if k != "rng_seed"}
        return out


@dataclass
class CampaignReport:
    method: str
    start_mode: str
    n_starts: int
    n_pairs: int
    n_success: int
    attack_rate: float
    max_loss: float
    avg_loss: float
    avg_final_loss: float
    final_losses: list[float]
    per_round: list[dict]
    final_pairs: list[dict]
    config: dict
    notes: list[str] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def to_dict(self, include_timing: bool = False) -> dict:
        out = asdict(self)
        if not include_timing:
            out.pop("wall_time")
        return out


@dataclass(frozen=True)
class PairedComparison:
    method_a: str
    method_b: str
    losses_a: list[float]
    losses_b: list[float]
    wins_a: int
    n_starts: int


def select_starts(c: Campaign, ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Start inputs and their labels for the campaign's start mode."""
    has_meaningless = ds.class_names[-1] == MEANINGLESS
    if c.start_mode == "random_images":
        if c.method in LOCAL_METHODS and not has_meaningless:
            raise CampaignConfigError("local attacks from random images need a 'meaningless' class")
        x = random_inputs(c.n_starts, ds.dim, [c.rng_seed, _RANDOM_TAG])
        return x, np.full(c.n_starts, len(ds.class_names) - 1)
    _, test = split(ds, c.test_fraction, c.split_seed)
    keep = test.labels != len(ds.class_names) - 1 if has_meaningless else np.ones(len(test), bool)
    pool_x, pool_y = test.inputs[keep], test.labels[keep]
    if len(pool_x) == 0:
        raise CampaignConfigError("no test images available to start from")
    rng = np.random.default_rng([c.rng_seed, _SELECT_TAG])
    idx = rng.choice(len(pool_x), size=c.n_starts, replace=c.n_starts > len(pool_x))
    return pool_x[idx], pool_y[idx]


def _series(loss: np.ndarray, success: np.ndarray) -> list[dict]:
    rows, running = [], -np.inf
    for i in range(loss.shape[0]):
        running = max(running, float(loss[i].max()))
        rows.append({
            "round": i + 1,
            "n_pairs": int(loss.shape[1]),
            "n_success": int(success[i].sum()),
            "max_loss": float(loss[i].max()),
            "avg_loss": float(loss[i].mean()),
            "cum_max_loss": running,
        })
    return rows


def _run_local(net, c, x, y) -> CampaignReport:
    correct = np.flatnonzero(predict_class(net, x) == y)
    notes = ["attack_rate counts label flips among starts the model classifies correctly before the attack",
             "final_pairs: x1 is the adversarial input, x2 the clean start, class2 its label"]
    if correct.size == 0:
        return CampaignReport(c.method, c.start_mode, c.n_starts, 0, 0, 0.0, 0.0, 0.0, 0.0, [], [], [],
                              c.echo(), notes + ["no correctly classified starts"])
    rngs = [np.random.default_rng(c.rng_seed + int(i)) for i in correct]
    xs, ys = x[correct], y[correct]
    adv = local_attack(net, xs, ys, c.method_config(), rngs=rngs)
    losses = np.atleast_1d(label_loss(net, adv, ys))
    adv_class = predict_class(net, adv)
    success = adv_class != ys
    n_success = int(success.sum())
    pairs = [{"start": int(s), "x1": a.tolist(), "x2": xc.tolist(), "class1": int(ac), "class2": int(yc),
              "loss": float(l)} for s, a, xc, ac, yc, l in zip(correct, adv, xs, adv_class, ys, losses)]
    return CampaignReport(
        c.method, c.start_mode, c.n_starts, int(correct.size), n_success, n_success / int(correct.size),
        float(losses.max()), float(losses.mean()), float(losses.mean()), losses.tolist(),
        _series(losses[None, :], success[None, :]), pairs, c.echo(), notes,
    )


def _run_global(net, c, x) -> CampaignReport:
    rngs = seeded_streams(c.rng_seed, len(x))
    x1, x2 = make_start_pairs(x, c.epsilon, rngs)
    cfg = c.method_config()
    if c.method == "gevmcmc":
        trace = run_gevmcmc(net, (x1, x2), cfg, rngs=rngs)
    else:
        trace = g_attack(net, (x1, x2), cfg, rngs=rngs)
    success = trace.success
    n_pairs, n_success = int(success.size), int(success.sum())
    final = trace.loss[-1]
    pairs = [{"start": j, "x1": trace.x1[-1, j].tolist(), "x2": trace.x2[-1, j].tolist(),
              "class1": int(trace.class1[-1, j]), "class2": int(trace.class2[-1, j]), "loss": float(final[j])}
             for j in range(trace.n_starts)]
    extra = {k: (np.asarray(v).tolist()) for k, v in trace.info.items()}
    return CampaignReport(
        c.method, c.start_mode, c.n_starts, n_pairs, n_success, n_success / n_pairs,
        float(trace.loss.max()), float(trace.loss.mean()), float(final.mean()), final.tolist(),
        _series(trace.loss, success), pairs, c.echo(),
        ["avg_loss averages every emitted pair; avg_final_loss averages the last-round pair of each start"],
        extra,
    )


def execute_campaign(net: Network, ds: Dataset, c: Campaign) -> CampaignReport:
    if ds.dim != net.input_dim:
        raise CampaignConfigError(f"dataset width {ds.dim} does not match model input {net.input_dim}")
    t0 = time.perf_counter()
    x, y = select_starts(c, ds)
    report = _run_local(net, c, x, y) if c.method in LOCAL_METHODS else _run_global(net, c, x)
    report.wall_time = time.perf_counter() - t0
    log.info("%s/%s: attack_rate=%.4f avg_loss=%.4f (%.1fs)", c.method, c.start_mode,
             report.attack_rate, report.avg_loss, report.wall_time)
    return report


def run_campaign(c: Campaign) -> CampaignReport:
    return execute_campaign(load_model(c.model_path), load_dataset(c.data_path), c)


def compare_reports(a: CampaignReport, b: CampaignReport) -> PairedComparison:
    if a.start_mode != b.start_mode or a.n_starts != b.n_starts or len(a.final_losses) != len(b.final_losses):
        raise CampaignConfigError("paired comparison needs the same start set")
    wins = int(np.sum(np.asarray(a.final_losses) > np.asarray(b.final_losses)))
    return PairedComparison(a.method, b.method, a.final_losses, b.final_losses, wins, a.n_starts)


_SHARED_KEYS = ("model_path", "data_path", "start_mode", "n_starts", "rng_seed", "epsilon",
                "test_fraction", "split_seed")


def compare_methods(a: Campaign, b: Campaign, net: Network | None = None, ds: Dataset | None = None) -> PairedComparison:
    """Count starts where a's final-round pair loss strictly exceeds b's."""
    for key in _SHARED_KEYS:
        if getattr(a, key) != getattr(b, key):
            raise CampaignConfigError(f"campaigns differ in {key}: {getattr(a, key)!r} vs {getattr(b, key)!r}")
    if net is None:
        net = load_model(a.model_path)
    if ds is None:
        ds = load_dataset(a.data_path)
    return compare_reports(execute_campaign(net, ds, a), execute_campaign(net, ds, b))


def series_csv(r: CampaignReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SERIES_COLUMNS)
    for row in r.per_round:
        writer.writerow([repr(row[k]) if isinstance(row[k], float) else row[k] for k in SERIES_COLUMNS])
    return buf.getvalue()


def export_report(r: CampaignReport, path, fmt: str = "json", include_timing: bool = False) -> None:
    """Write a report as JSON (full) or CSV (per-round series only)."""
    if fmt == "json":
        text = json.dumps(r.to_dict(include_timing), indent=2) + "\n"
    elif fmt == "csv":
        text = series_csv(r)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    Path(path).write_text(text, encoding="utf-8")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def read_series(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (int(v) if k in ("round", "n_pairs", "n_success") else float(v)) for k, v in row.items()}
            for row in rows]


def comparison_dict(p: PairedComparison) -> dict:
    return asdict(p)
