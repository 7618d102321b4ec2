"""Command-line entry point: ``rtis {collect,analyze,train,eval,report}``.

On failure a single JSON object ``{"error": <type>, "message": <text>}`` is
written to stderr and the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .config import load_config
from .errors import ConfigError, UsageError
from .ppo import AgentTag
from .timestep import TimestepModel, Variant

EXIT_USAGE = 2
EXIT_FAILURE = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML configuration file")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--plots", action="store_true", help="also write SVG plots")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="rtis", description="Timestep stochasticity and domain-randomized reaching experiments.",
                parents=[common])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("collect", parents=[common], help="run heuristic trials and write trial logs")
    c.add_argument("--n-trials", type=int)
    c.add_argument("--variant", choices=[v.value for v in Variant])
    c.add_argument("--jitter-cv", type=float)
    c.add_argument("--provider", choices=["host", "synthetic", "null"])
    c.add_argument("--duration", type=float)
    c.add_argument("--inject-load", type=float, metavar="FRACTION")

    a = sub.add_parser("analyze", parents=[common], help="stochasticity and correlation tables")
    a.add_argument("run_dir", type=Path)
    a.add_argument("--channels", nargs="+")
    a.add_argument("--resources", nargs="+")

    t = sub.add_parser("train", parents=[common], help="train one or more agent variants")
    t.add_argument("--agent", default="NA_P", help="agent tag, comma-separated tags, or 'all'")
    t.add_argument("--epochs", type=int)
    t.add_argument("--baseline", type=Path, help="NA_P run directory used for r_time")
    t.add_argument("--checkpoint-every", type=int, default=50)
    t.add_argument("--no-resume", action="store_true")

    e = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint")
    e.add_argument("checkpoint", type=Path)
    e.add_argument("--preset", choices=["matched", "sim2real"])
    e.add_argument("--n-trials", type=int)
    e.add_argument("--jitter-cv", type=float)

    r = sub.add_parser("report", parents=[common], help="merge run metrics into one table")
    r.add_argument("run_dirs", type=Path, nargs="+")
    return p


def _out(args, default: str) -> Path:
    return args.out if args.out is not None else Path(default)


def _cmd_collect(args, cfg):
    cc = cfg.collect
    over = {k: v for k, v in (("n_trials", args.n_trials), ("provider", args.provider),
                               ("duration", args.duration), ("inject_load", args.inject_load)) if v is not None}
    if over:
        cfg = replace(cfg, collect=replace(cc, **over))
    if args.variant is not None or args.jitter_cv is not None:
        ts = cfg.timestep
        variant = Variant(args.variant) if args.variant else ts.variant
        cv = args.jitter_cv if args.jitter_cv is not None else ts.jitter_cv
        cfg = replace(cfg, timestep=TimestepModel(variant, ts.nominal_dt, cv if variant is Variant.JITTER else 0.0,
                                                   ts.load_coupling if variant is Variant.JITTER else 0.0))
    out = _out(args, "runs/collect")
    paths = harness.collect(cfg, out, seed=args.seed or 0, workers=args.workers)
    return {"run_dir": str(out), "trials": len(paths)}


def _cmd_analyze(args, cfg):
    res = harness.analyze(args.run_dir, args.channels, args.resources, plots=args.plots, out_dir=args.out)
    return {"files": [str(f) for f in res.files],
            "significant": [f"{c.signal}~{c.resource}" for c in res.correlations if c.significant]}


def _cmd_train(args, cfg):
    if args.epochs is not None:
        cfg = replace(cfg, ppo=replace(cfg.ppo, epochs=args.epochs))
    out = _out(args, "runs/train")
    kw = {"checkpoint_every": args.checkpoint_every, "resume": not args.no_resume}
    spec = args.agent.strip()
    if spec.lower() == "all" or "," in spec:
        tags = list(AgentTag) if spec.lower() == "all" else [s for s in spec.split(",") if s]
        res = harness.train_batch(tags, cfg, out, seed=args.seed, **kw)
        return {t.value: m.row() for t, m in res.items()}
    baseline = harness.baseline_wall_time(args.baseline) if args.baseline else None
    m = harness.train_run(spec, cfg, out, seed=args.seed, baseline_time=baseline, **kw)
    return m.row()


def _cmd_eval(args, cfg):
    out = _out(args, str(args.checkpoint.parent.parent / "eval"))
    rep = harness.eval_run(args.checkpoint, cfg, out, seed=args.seed or 0, preset=args.preset,
                           n_trials=args.n_trials, jitter_cv=args.jitter_cv)
    return {"success_rate": rep.success_rate, "median_error": rep.median_error, "n_success": rep.n_success,
            "n_total": rep.n_total}


def _cmd_report(args, cfg):
    out = _out(args, "runs/report")
    rows = harness.report(args.run_dirs, out, plots=args.plots)
    return {"rows": len(rows), "table": str(out / "comparison.csv")}


COMMANDS = {"collect": _cmd_collect, "analyze": _cmd_analyze, "train": _cmd_train, "eval": _cmd_eval,
            "report": _cmd_report}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        cfg = load_config(args.config)
        result = COMMANDS[args.command](args, cfg)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except Exception as exc:
        code = EXIT_USAGE if isinstance(exc, (UsageError, ConfigError)) else EXIT_FAILURE
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return code
    sys.stdout.write(json.dumps(result, sort_keys=True, default=str) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
