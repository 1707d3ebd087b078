"""Command-line entry point: ``globaladv <command> [options]``.

Failures print a single ``error: <ExceptionType>: <message>`` line on stderr
and exit with status 1.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import data, harness
from .gev import gev_fit_mle
from .net import AdversarialConfig, TrainConfig, init_network, load_model, save_model
from .training import accuracy, train


def _add_make_data(sub):
    p = sub.add_parser("make-data", help="generate a toy dataset file")
    p.add_argument("--kind", choices=data.KINDS, default="two_moons")
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--meaningless", type=float, default=0.0, help="fraction of extra uniform 'meaningless' points")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)


def _add_train(sub):
    p = sub.add_parser("train", help="train a model on the training split of a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hidden", default="32,32", help="comma-separated hidden widths")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-model", help="continue training from this model instead of a fresh init")
    p.add_argument("--adversarial", action="store_true", help="PGD adversarial training")
    p.add_argument("--pgd-steps", type=int, default=30)
    p.add_argument("--adv-step-size", type=float, default=0.01)
    p.add_argument("--adv-epsilon", type=float, default=0.1)
    p.add_argument("--mix-ratio", type=float, default=1.0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=0)


def _add_attack(sub):
    p = sub.add_parser("attack", help="run one attack campaign and write a report")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=harness.METHODS, default="g_pgd")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--sub-steps", type=int, default=30)
    p.add_argument("--step-size", type=float, help="defaults to epsilon / 10")
    p.add_argument("--starts", type=int, default=100)
    p.add_argument("--start-mode", choices=harness.START_MODES, default="test_images")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--lambda-m", type=float)
    p.add_argument("--lambda-0", type=float)
    p.add_argument("--p-b", type=float, default=0.95)
    p.add_argument("--block-size", type=int, default=59)
    p.add_argument("--warmup", type=int, default=10)
    p.add_argument("--top-k", type=int, default=50)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--timing", action="store_true", help="include wall time in the JSON report")


def _add_compare(sub):
    p = sub.add_parser("compare", help="paired comparison of two campaigns given as JSON files")
    p.add_argument("--a-config", required=True)
    p.add_argument("--b-config", required=True)
    p.add_argument("--out", required=True)


def _add_fit_gev(sub):
    p = sub.add_parser("fit-gev", help="maximum-likelihood GEV fit to a file of numbers")
    p.add_argument("--samples-file", required=True, help="numbers separated by whitespace or commas")
    p.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="globaladv", description="Global adversarial example pairs on toy models.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for add in (_add_make_data, _add_train, _add_attack, _add_compare, _add_fit_gev):
        add(sub)
    return parser


def _write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def cmd_make_data(args):
    cfg = data.DataConfig(args.kind, args.n_per_class, args.noise, args.meaningless, args.seed, args.dim)
    ds = data.generate(cfg)
    data.save_dataset(ds, args.out)
    return {"points": len(ds), "dim": ds.dim, "classes": list(ds.class_names)}


def cmd_train(args):
    ds = data.load_dataset(args.data)
    train_ds, test_ds = data.split(ds, args.test_fraction, args.split_seed)
    if args.init_model:
        net = load_model(args.init_model)
    else:
        hidden = tuple(int(h) for h in args.hidden.split(",") if h.strip())
        net = init_network((ds.dim,) + hidden + (len(ds.class_names),), ds.class_names, args.seed)
    adv = None
    if args.adversarial:
        adv = AdversarialConfig(args.pgd_steps, args.adv_step_size, args.adv_epsilon, args.mix_ratio)
    net = train(net, train_ds, TrainConfig(args.epochs, args.batch_size, args.lr, args.seed, adv))
    save_model(net, args.out)
    return {"train_accuracy": accuracy(net, train_ds), "test_accuracy": accuracy(net, test_ds)}


def _campaign_from_args(args) -> harness.Campaign:
    return harness.Campaign(
        model_path=args.model, data_path=args.data, method=args.method, start_mode=args.start_mode,
        n_starts=args.starts, epsilon=args.epsilon, rounds=args.rounds, sub_steps=args.sub_steps,
        step_size=args.step_size, rng_seed=args.seed, lambda_m=args.lambda_m, lambda_0=args.lambda_0,
        p_b=args.p_b, block_size=args.block_size, warmup_rounds=args.warmup, top_k=args.top_k,
        test_fraction=args.test_fraction, split_seed=args.split_seed,
    )


def cmd_attack(args):
    report = harness.run_campaign(_campaign_from_args(args))
    harness.export_report(report, args.out, args.format, include_timing=args.timing)
    return {"method": report.method, "attack_rate": report.attack_rate,
            "max_loss": report.max_loss, "avg_loss": report.avg_loss}


def _read_campaign(path) -> harness.Campaign:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise harness.CampaignConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise harness.CampaignConfigError(f"{path}: expected a JSON object")
    return harness.Campaign.from_dict(raw)


def cmd_compare(args):
    result = harness.compare_methods(_read_campaign(args.a_config), _read_campaign(args.b_config))
    _write_json(harness.comparison_dict(result), args.out)
    return {"method_a": result.method_a, "method_b": result.method_b,
            "wins_a": result.wins_a, "n_starts": result.n_starts}


def cmd_fit_gev(args):
    text = Path(args.samples_file).read_text(encoding="utf-8")
    try:
        samples = np.array([float(v) for v in text.replace(",", " ").split()])
    except ValueError as exc:
        raise ValueError(f"{args.samples_file}: {exc}") from exc
    fit = gev_fit_mle(samples)
    out = {"mu": fit.params.mu, "sigma": fit.params.sigma, "xi": fit.params.xi, "loglik": fit.loglik,
           "converged": fit.converged, "n_iter": fit.n_iter, "n_samples": int(samples.size)}
    _write_json(out, args.out)
    return out


COMMANDS = {
    "make-data": cmd_make_data,
    "train": cmd_train,
    "attack": cmd_attack,
    "compare": cmd_compare,
    "fit-gev": cmd_fit_gev,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        summary = COMMANDS[args.command](args)
    except Exception as exc:  # every failure becomes one parseable line
        msg = " ".join(str(exc).split())
        print(f"error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
