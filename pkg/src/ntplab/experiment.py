"""Experiment orchestration: multi-run sweeps, diagnostics, CSV reports.

A sweep executes `runs` independent generate/train/evaluate pipelines with
derived seeds seed+i. Run i draws its dataset from default_rng(seed+i) via
GenConfig.seed and its training randomness (init, shuffles, corruption
sampling) from default_rng(SeedSequence([seed+i, 1])), so datasets are
reproducible standalone from gen_meta while the two streams stay
independent. Results are deterministic and independent of --jobs.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, replace
from pathlib import Path
import numpy as np

from .config import ExperimentConfig
from .datagen import generate_dataset
from .evaluation import RunMetrics, evaluate_run, pr_auc
from .trainer import EpochTrace, dump_model, train_run


@dataclass
class RunOutput:
    run_id: int
    seed: int
    metrics: RunMetrics
    trace: list[EpochTrace]
    decodings: list[tuple[str, str, float, int]]  # head, body text, score, gold
    model_text: str | None


@dataclass
class SweepResult:
    config: ExperimentConfig
    nudge_ratio: float | None
    runs: list[RunOutput]

    @property
    def recalls(self) -> np.ndarray:
        return np.array([r.metrics.recall for r in self.runs])

    @property
    def mrrs(self) -> np.ndarray:
        return np.array([r.metrics.mrr for r in self.runs])

    @property
    def roc_aucs(self) -> np.ndarray:
        return np.array([r.metrics.roc_auc for r in self.runs])

    @property
    def final_rule_scores(self) -> np.ndarray:
        return np.array([r.trace[-1].rule_score for r in self.runs])

    @property
    def final_unification_scores(self) -> np.ndarray:
        return np.array([r.trace[-1].unification_score for r in self.runs])

    def pooled_pr_auc(self) -> float:
        scores = [d[2] for r in self.runs for d in r.decodings]
        gold = [d[3] for r in self.runs for d in r.decodings]
        return pr_auc(scores, gold)

    def score_correlation(self) -> float:
        """Pearson correlation between final rule and unification scores."""
        rule = self.final_rule_scores
        unif = self.final_unification_scores
        if np.std(rule) == 0.0 or np.std(unif) == 0.0:
            return math.nan
        return float(np.corrcoef(rule, unif)[0, 1])

    def aggregate(self) -> dict[str, float]:
        return {
            "runs": len(self.runs),
            "recall_mean": float(np.mean(self.recalls)),
            "recall_std": float(np.std(self.recalls)),
            "pr_auc": self.pooled_pr_auc(),
            "mrr_mean": float(np.nanmean(self.mrrs)),
            "mrr_std": float(np.nanstd(self.mrrs)),
            "roc_auc_mean": float(np.nanmean(self.roc_aucs)),
            "roc_auc_std": float(np.nanstd(self.roc_aucs)),
            "corr_rule_unification": self.score_correlation(),
            "skipped_test_facts": int(
                sum(r.metrics.skipped_test_facts for r in self.runs)
            ),
        }


def run_single(
    cfg: ExperimentConfig, run_index: int, nudge_ratio: float | None = None
) -> RunOutput:
    """One generate/train/evaluate pipeline with the run's derived seed."""
    run_seed = cfg.seed + run_index
    gen_cfg = replace(cfg.gen, seed=run_seed)
    bundle = generate_dataset(gen_cfg, cfg.test_fraction)
    rng = np.random.default_rng(np.random.SeedSequence([run_seed, 1]))
    ratio = cfg.nudge_ratio if nudge_ratio is None else nudge_ratio
    result = train_run(bundle, cfg.train, rng=rng, nudge_ratio=ratio)
    metrics = evaluate_run(bundle, result.store, result.rules, cfg.train.k_max)
    interner = bundle.interner
    decodings = []
    for dec, gold in metrics.decodings:
        body = "&".join(interner.name(b) for b in dec.body)
        decodings.append((interner.name(dec.head), body, dec.score, gold))
    model_text = dump_model(interner, result.store) if cfg.dump_models else None
    return RunOutput(
        run_id=run_index,
        seed=run_seed,
        metrics=metrics,
        trace=result.trace,
        decodings=decodings,
        model_text=model_text,
    )


def _worker(args) -> RunOutput:
    cfg, run_index, nudge_ratio = args
    return run_single(cfg, run_index, nudge_ratio)


def run_sweep(
    cfg: ExperimentConfig, jobs: int = 1, nudge_ratio: float | None = None
) -> SweepResult:
    """Execute cfg.runs pipelines, optionally across worker processes.

    Results are gathered in run-index order, so parallel and serial
    execution produce identical outputs.
    """
    cfg.validate()
    tasks = [(cfg, i, nudge_ratio) for i in range(cfg.runs)]
    if jobs <= 1 or cfg.runs == 1:
        outputs = [_worker(t) for t in tasks]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(_worker, tasks))
    return SweepResult(config=cfg, nudge_ratio=nudge_ratio, runs=outputs)


# --- report files -----------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


METRICS_HEADER = "run_id,seed,heuristic,size,order,n_c,n_p,p_b,p_r,n_rel,recall,mrr,roc_auc"


def _metrics_rows(result: SweepResult) -> list[str]:
    cfg = result.config
    base = (
        f"{cfg.train.heuristic},{cfg.gen.template.size},{cfg.gen.template.order},"
        f"{cfg.gen.n_c},{cfg.gen.n_p},{_fmt(cfg.gen.p_b)},{_fmt(cfg.gen.p_r)},{cfg.gen.n_rel}"
    )
    rows = []
    for r in result.runs:
        rows.append(
            f"{r.run_id},{r.seed},{base},{_fmt(r.metrics.recall)},"
            f"{_fmt(r.metrics.mrr)},{_fmt(r.metrics.roc_auc)}"
        )
    agg = result.aggregate()
    rows.append(
        f"mean,,{base},{_fmt(agg['recall_mean'])},{_fmt(agg['mrr_mean'])},"
        f"{_fmt(agg['roc_auc_mean'])}"
    )
    rows.append(
        f"std,,{base},{_fmt(agg['recall_std'])},{_fmt(agg['mrr_std'])},"
        f"{_fmt(agg['roc_auc_std'])}"
    )
    return rows


def write_sweep(
    outdir, result: SweepResult, config_text: str, figures: bool = True
) -> None:
    """Write metrics.csv, aggregate.csv, decodings.csv, per-run traces,
    optional model dumps and figures, plus the config echo."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    from .config import render_config

    (out / "config.cfg").write_text(config_text, encoding="utf-8")
    (out / "config_resolved.cfg").write_text(render_config(result.config), encoding="utf-8")

    lines = [METRICS_HEADER] + _metrics_rows(result)
    (out / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    agg = result.aggregate()
    keys = list(agg)
    (out / "aggregate.csv").write_text(
        ",".join(keys) + "\n" + ",".join(_fmt(agg[k]) for k in keys) + "\n",
        encoding="utf-8",
    )

    dec_lines = ["run_id,rule_id,head,body,score,gold"]
    for r in result.runs:
        for rule_id, (head, body, score, gold) in enumerate(r.decodings):
            dec_lines.append(f"{r.run_id},{rule_id},{head},{body},{_fmt(score)},{gold}")
    (out / "decodings.csv").write_text("\n".join(dec_lines) + "\n", encoding="utf-8")

    traces = out / "traces"
    traces.mkdir(exist_ok=True)
    for r in result.runs:
        rows = ["epoch,rule_score,unification_score,mean_loss"]
        rows += [
            f"{t.epoch},{_fmt(t.rule_score)},{_fmt(t.unification_score)},{_fmt(t.mean_loss)}"
            for t in r.trace
        ]
        (traces / f"run_{r.run_id:03d}.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    if result.config.dump_models:
        models = out / "models"
        models.mkdir(exist_ok=True)
        for r in result.runs:
            if r.model_text is not None:
                (models / f"run_{r.run_id:03d}.txt").write_text(r.model_text, encoding="utf-8")

    if figures:
        from .figures import render_sweep_figures

        render_sweep_figures(out, result)


@dataclass
class DiagnoseResult:
    ratios: list[float]
    sweeps: dict[float, SweepResult]
    base_ratio: float

    def trace_summary(self) -> list[tuple]:
        """Per-epoch rule/unification scores of the base-ratio sweep,
        averaged separately over learned (final rule score > 0.5) and
        not-learned runs."""
        base = self.sweeps[self.base_ratio]
        learned = [r for r in base.runs if r.trace[-1].rule_score > 0.5]
        rest = [r for r in base.runs if r.trace[-1].rule_score <= 0.5]
        epochs = len(base.runs[0].trace)
        rows = []
        for e in range(epochs):
            def means(group):
                if not group:
                    return math.nan, math.nan
                return (
                    float(np.mean([r.trace[e].rule_score for r in group])),
                    float(np.mean([r.trace[e].unification_score for r in group])),
                )
            lr_, lu = means(learned)
            nr, nu = means(rest)
            rows.append((e, lr_, lu, nr, nu, len(learned), len(rest)))
        return rows


def run_diagnose(cfg: ExperimentConfig, jobs: int = 1) -> DiagnoseResult:
    """Sweep the initialization-nudge ratio list; ratio 1.0 is the exact
    identity, so that sweep doubles as the base model."""
    ratios = list(cfg.nudge_ratios)
    if not ratios:
        ratios = [1.0]
    sweeps = {r: run_sweep(cfg, jobs=jobs, nudge_ratio=r) for r in ratios}
    base = 1.0 if 1.0 in sweeps else max(ratios)
    return DiagnoseResult(ratios=ratios, sweeps=sweeps, base_ratio=base)


def write_diagnose(
    outdir, cfg: ExperimentConfig, result: DiagnoseResult, config_text: str,
    figures: bool = True,
) -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(config_text, encoding="utf-8")

    rows = ["r,recall_mean,recall_std,pr_auc,mrr_mean,roc_auc_mean"]
    for r in result.ratios:
        agg = result.sweeps[r].aggregate()
        rows.append(
            f"{_fmt(float(r))},{_fmt(agg['recall_mean'])},{_fmt(agg['recall_std'])},"
            f"{_fmt(agg['pr_auc'])},{_fmt(agg['mrr_mean'])},{_fmt(agg['roc_auc_mean'])}"
        )
    (out / "ratio_metrics.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    summary = result.trace_summary()
    rows = [
        "epoch,learned_rule_score,learned_unification_score,"
        "notlearned_rule_score,notlearned_unification_score,n_learned,n_notlearned"
    ]
    for e, lr_, lu, nr, nu, nl, nn in summary:
        rows.append(f"{e},{_fmt(lr_)},{_fmt(lu)},{_fmt(nr)},{_fmt(nu)},{nl},{nn}")
    (out / "trace_summary.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")

    corr = result.sweeps[result.base_ratio].score_correlation()
    (out / "correlation.txt").write_text(_fmt(corr) + "\n", encoding="utf-8")

    for r in result.ratios:
        write_sweep(out / f"r_{r}", result.sweeps[r], config_text, figures=False)

    if figures:
        from .figures import render_diagnose_figures

        render_diagnose_figures(out, result)
