"""Command-line entry point: run experiments, generate data, summarize results."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dp_core import stream
from .errors import ConfigError
from .experiment import (GAUSSIAN_TASKS, GMM_TASKS, emit_report, load_config, replace_config,
                         run_experiment)
from .gmm_est.types import MixtureParams
from .synth import (gamma_far_gaussian, make_separated_mixture, random_gaussian, sample_gaussian,
                    sample_mixture, save_dataset, save_mixture)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _u64(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _parser():
    p = argparse.ArgumentParser(prog="pubpriv", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--seed", type=_u64, help="override the config seed")
        sp.add_argument("--out", help="output path (overrides out_path)")
        sp.add_argument("--trials", type=int, help="override the trial count")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")
        sp.add_argument("--zero-noise", action="store_true",
                        help="test mode: every privacy noise draw is exactly zero")

    common(sub.add_parser("estimate-gaussian", help="run a Gaussian estimation experiment"))
    common(sub.add_parser("estimate-gmm", help="run a mixture estimation experiment"))
    common(sub.add_parser("synth", help="write a ground truth and sampled datasets"))
    rp = sub.add_parser("report", help="summarize a results file")
    rp.add_argument("results", help="results CSV written by an estimate command")
    rp.add_argument("--out", help="summary prefix (default: results path without suffix)")
    return p


def _configs(args, allowed):
    configs = load_config(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.trials is not None:
        over["trials"] = args.trials
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    if over:
        configs = [replace_config(c, **over) for c in configs]
    for c in configs:
        if c.task not in allowed:
            raise ConfigError(f"task {c.task!r} is not handled by this command")
    return configs


def _estimate(args, allowed):
    configs = _configs(args, allowed)
    path = run_experiment(configs, args.out, zero_noise=args.zero_noise, threads=args.threads)
    print(path)
    return EXIT_OK


def _synth(args):
    configs = _configs(args, GAUSSIAN_TASKS + GMM_TASKS)
    if len(configs) != 1:
        raise ConfigError("synth takes a single config, not a sweep")
    cfg = configs[0]
    out = Path(args.out or Path(cfg.out_path).with_suffix(""))
    out.mkdir(parents=True, exist_ok=True)
    rng = stream(cfg.seed, 0)
    if cfg.task in GMM_TASKS:
        truth = make_separated_mixture(cfg.d, cfg.k, cfg.separation_multiplier, cfg.w_min,
                                       cfg.spread, rng, offset_scale=cfg.mean_scale)
        public, private = sample_mixture(truth, cfg.m, rng), sample_mixture(truth, cfg.n, rng)
    else:
        g = random_gaussian(cfg.d, cfg.spread, cfg.mean_scale, rng)
        if cfg.task == "mean_1sample":
            g = type(g)(g.mean, np.eye(cfg.d))
        truth = MixtureParams(((g, 1.0),))
        source = gamma_far_gaussian(g, cfg.gamma, rng) if cfg.task == "gaussian_robust" else g
        public, private = sample_gaussian(source, cfg.m, rng), sample_gaussian(g, cfg.n, rng)
    save_mixture(truth, out / "truth.json")
    save_dataset(public, out / "public.csv")
    save_dataset(private, out / "private.csv")
    print(out)
    return EXIT_OK


def _report(args):
    summary = emit_report(args.results, args.out)
    for s in summary:
        print(json.dumps(s))
    if not summary:
        print("no data")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "estimate-gaussian":
            return _estimate(args, GAUSSIAN_TASKS)
        if args.command == "estimate-gmm":
            return _estimate(args, GMM_TASKS)
        if args.command == "synth":
            return _synth(args)
        return _report(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
