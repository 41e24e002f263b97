"""Command-line front end.

Subcommands: generate (dataset files), run (multi-seed sweep), diagnose
(initialization-nudge ratio sweep plus score-trace summary), sweep
(multi-config batch). Exit codes: 0 success, 1 configuration error,
2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ntplab",
        description="Soft-unification theorem proving lab: synthetic data, "
        "winner-takes-all training, exploration heuristics, evaluation.",
    )
    parser.add_argument(
        "--list-presets", action="store_true", help="print bundled preset names and exit"
    )
    sub = parser.add_subparsers(dest="command")

    def common(p, jobs=True):
        p.add_argument("--config", required=True, action="append",
                       help="config file path or preset:<name>; repeatable for sweep")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the experiment seed")
        if jobs:
            p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                           help="parallel run workers (default: CPU count)")
            p.add_argument("--figures", action=argparse.BooleanOptionalAction, default=True,
                           help="render PNG figures next to the CSV output")

    common(sub.add_parser("generate", help="write dataset files for one config"), jobs=False)
    common(sub.add_parser("run", help="execute a multi-run sweep"))
    common(sub.add_parser("diagnose", help="nudge-ratio sweep with score-trace summary"))
    common(sub.add_parser("sweep", help="run several configs back to back"))
    return parser


def _load(source: str, seed_override: int | None):
    from .config import load_config

    cfg, text = load_config(source)
    if seed_override is not None:
        cfg = cfg.with_seed(seed_override)
    return cfg, text


def _outdir(arg_out: str | None, command: str, source: str) -> Path:
    if arg_out is not None:
        return Path(arg_out)
    stem = source.split(":", 1)[1] if source.startswith("preset:") else Path(source).stem
    return Path(f"{command}_{stem}")


def _cmd_generate(args) -> int:
    from .datagen import generate_dataset, write_dataset

    cfg, _ = _load(args.config[0], args.seed)
    bundle = generate_dataset(cfg.gen, cfg.test_fraction)
    out = _outdir(args.out, "generate", args.config[0])
    write_dataset(bundle, out)
    print(
        f"wrote {out}/: {len(bundle.kb_train)} train facts, "
        f"{len(bundle.test_facts)} test facts, {bundle.active_count} active"
    )
    return 0


def _cmd_run(args) -> int:
    from .experiment import run_sweep, write_sweep

    cfg, text = _load(args.config[0], args.seed)
    result = run_sweep(cfg, jobs=args.jobs)
    out = _outdir(args.out, "run", args.config[0])
    write_sweep(out, result, text, figures=args.figures)
    agg = result.aggregate()
    print(
        f"wrote {out}/: recall {agg['recall_mean']:.3f} +- {agg['recall_std']:.3f}, "
        f"pr_auc {agg['pr_auc']:.3f}, mrr {agg['mrr_mean']:.3f}, "
        f"roc_auc {agg['roc_auc_mean']:.3f} over {cfg.runs} runs"
    )
    return 0


def _cmd_diagnose(args) -> int:
    from .experiment import run_diagnose, write_diagnose

    cfg, text = _load(args.config[0], args.seed)
    result = run_diagnose(cfg, jobs=args.jobs)
    out = _outdir(args.out, "diagnose", args.config[0])
    write_diagnose(out, cfg, result, text, figures=args.figures)
    corr = result.sweeps[result.base_ratio].score_correlation()
    recalls = ", ".join(
        f"r={r}: {result.sweeps[r].aggregate()['recall_mean']:.3f}" for r in result.ratios
    )
    print(f"wrote {out}/: recall by ratio [{recalls}], correlation {corr:.3f}")
    return 0


def _cmd_sweep(args) -> int:
    from .experiment import run_sweep, write_sweep

    out = Path(args.out) if args.out else Path("sweep_out")
    summary = ["config,recall_mean,recall_std,pr_auc,mrr_mean,roc_auc_mean"]
    for source in args.config:
        cfg, text = _load(source, args.seed)
        result = run_sweep(cfg, jobs=args.jobs)
        stem = source.split(":", 1)[1] if source.startswith("preset:") else Path(source).stem
        write_sweep(out / stem, result, text, figures=args.figures)
        agg = result.aggregate()
        summary.append(
            f"{stem},{agg['recall_mean']!r},{agg['recall_std']!r},{agg['pr_auc']!r},"
            f"{agg['mrr_mean']!r},{agg['roc_auc_mean']!r}"
        )
        print(f"{stem}: recall {agg['recall_mean']:.3f}")
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_summary.csv").write_text("\n".join(summary) + "\n", encoding="utf-8")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.list_presets:
        from .presets import preset_names

        for name in preset_names():
            print(name)
        return 0
    if args.command is None:
        parser.print_help()
        return 1

    from .config import ConfigError

    handlers = {
        "generate": _cmd_generate,
        "run": _cmd_run,
        "diagnose": _cmd_diagnose,
        "sweep": _cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure, distinct exit code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
