"""Command line entry point: ``ergotrack <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys

from .config import ExperimentConfig, load_config, parse_config
from .dynsys import ConfigurationError

DEFAULTS = {
    "track": """
[experiment]
schema = 1
kind = track
seed = 0
[reference]
kind = golden_mean
[source]
kind = iid
p = 1/2
[cost]
kind = hamming
""",
    "joinlp": """
[experiment]
schema = 1
kind = joinlp
seed = 0
[reference]
kind = golden_mean
[source]
kind = iid
p = 1/2
[cost]
kind = hamming
[joinlp]
k_max = 1
mode = rational
""",
    "quantid": """
[experiment]
schema = 1
kind = quantid
seed = 0
[quantid]
alpha = sqrt(2)/4
p = 0
n = 50000
""",
    "complexity": """
[experiment]
schema = 1
kind = complexity
seed = 0
[complexity]
n_max = 64
theta_points = 500
""",
    "mle": """
[experiment]
schema = 1
kind = mle
seed = 0
[source]
kind = markov
transition = 0.9, 0.1; 0.3, 0.7
[mle]
family = bernoulli
""",
}

# convenience flag -> config field, per subcommand
FLAGS = {
    "track": {"schedule": "track.schedule", "resolution": "track.resolution", "reference": "reference.kind",
              "source": "source.kind", "p": "source.p", "lp_level": "track.lp_level"},
    "joinlp": {"k_max": "joinlp.k_max", "mode": "joinlp.mode", "reference": "reference.kind",
               "source": "source.kind", "p": "source.p"},
    "quantid": {"alpha": "quantid.alpha", "p": "quantid.p", "n": "quantid.n", "schedule": "quantid.schedule",
                "theta_step": "quantid.theta_step", "u_step": "quantid.u_step"},
    "complexity": {"n_max": "complexity.n_max", "theta_points": "complexity.theta_points",
                   "angle": "complexity.angle"},
    "mle": {"family": "mle.family", "schedule": "mle.schedule", "grid_points": "mle.grid_points"},
}


def _common(p: argparse.ArgumentParser, config_required: bool = False):
    p.add_argument("--config", required=config_required, help="INI experiment config")
    p.add_argument("--seed", type=int, help="override experiment.seed")
    p.add_argument("--out", help="output directory (default results/<kind>)")
    p.add_argument("--threads", type=int, help="worker threads (ERGOTRACK_THREADS overrides)")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override any config field; repeatable")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ergotrack", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for kind, flags in FLAGS.items():
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        _common(p)
        for flag in flags:
            p.add_argument("--" + flag.replace("_", "-"), dest=flag)
    p = sub.add_parser("run", help="run any experiment config")
    _common(p, config_required=True)
    p = sub.add_parser("sweep", help="one run per value of a numeric field")
    _common(p, config_required=True)
    p.add_argument("--axis", required=True, help="numeric field, e.g. quantid.p")
    p.add_argument("--values", required=True, help="comma-separated values")
    return ap


def resolve_config(args) -> ExperimentConfig:
    kind = args.command
    if args.config:
        cfg = load_config(args.config)
        if kind in DEFAULTS and cfg.kind != kind:
            raise ConfigurationError(f"{args.config} is a {cfg.kind!r} config, not {kind!r}")
    else:
        cfg = parse_config(DEFAULTS[kind], f"<default {kind} config>")
    for flag, field in FLAGS.get(kind, {}).items():
        val = getattr(args, flag, None)
        if val is not None:
            cfg = cfg.with_value(field, val)
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        cfg = cfg.with_value(key.strip(), val.strip())
    if args.seed is not None:
        cfg = cfg.with_value("experiment.seed", str(args.seed))
    return cfg


def _report(manifest, stream):
    print(f"{manifest.kind}: wrote {', '.join(manifest.outputs)} and manifest.json to {manifest.out_dir}",
          file=stream)
    for c in manifest.checks:
        print(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.value:.6g} {c.op} {c.bound:g}", file=stream)


def main(argv=None) -> int:
    from .experiments import default_out_dir, run, sweep

    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = args.out or default_out_dir(cfg.kind)
        if args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            manifests = sweep(cfg, args.axis, values, out, args.threads)
            for m in manifests:
                _report(m, sys.stdout)
            print(f"summary: {out}/summary.csv")
            return 0 if all(m.passed for m in manifests) else 1
        manifest = run(cfg, out, args.threads)
        _report(manifest, sys.stdout)
        return manifest.exit_code
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
