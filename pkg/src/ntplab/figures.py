"""Figure rendering for sweep and diagnostic reports.

Renders PNGs next to the CSV outputs; every figure is derivable from the
CSVs, so disabling rendering (--no-figures) loses nothing but convenience.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_sweep_figures(outdir, result) -> None:
    out = Path(outdir) / "figures"
    out.mkdir(parents=True, exist_ok=True)

    epochs = np.arange(len(result.runs[0].trace))
    rule = np.array([[t.rule_score for t in r.trace] for r in result.runs])
    unif = np.array([[t.unification_score for t in r.trace] for r in result.runs])
    loss = np.array([[t.mean_loss for t in r.trace] for r in result.runs])

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.plot(epochs, rule.mean(axis=0), label="rule score")
    ax1.plot(epochs, unif.mean(axis=0), label="unification score")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("score")
    ax1.set_ylim(0, 1)
    ax1.legend(frameon=False)
    ax1.set_title("mean scores over runs")
    ax2.plot(epochs, loss.mean(axis=0), color="tab:red")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("mean batch loss")
    ax2.set_title("training loss")
    fig.tight_layout()
    fig.savefig(out / "training.png", dpi=120)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    ax.scatter(result.final_rule_scores, result.final_unification_scores, alpha=0.7, s=24)
    ax.set_xlabel("final rule score")
    ax.set_ylabel("final unification score")
    ax.set_xlim(-0.02, 1.02)
    ax.set_ylim(-0.02, 1.02)
    ax.set_title("rule vs unification (per run)")
    fig.tight_layout()
    fig.savefig(out / "rule_vs_unification.png", dpi=120)
    plt.close(fig)


def render_diagnose_figures(outdir, result) -> None:
    out = Path(outdir) / "figures"
    out.mkdir(parents=True, exist_ok=True)

    ratios = list(result.ratios)
    recalls = [result.sweeps[r].aggregate()["recall_mean"] for r in ratios]
    rocs = [result.sweeps[r].aggregate()["roc_auc_mean"] for r in ratios]
    fig, ax = plt.subplots(figsize=(4.4, 3.4))
    ax.plot(ratios, recalls, marker="o", label="recall")
    ax.plot(ratios, rocs, marker="s", label="ROC-AUC")
    ax.invert_xaxis()  # stronger nudge to the right
    ax.set_xlabel("nudge ratio r")
    ax.set_ylabel("mean over runs")
    ax.set_ylim(0, 1.02)
    ax.legend(frameon=False)
    ax.set_title("initialization nudge")
    fig.tight_layout()
    fig.savefig(out / "ratio_sweep.png", dpi=120)
    plt.close(fig)

    rows = result.trace_summary()
    epochs = [r[0] for r in rows]
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(epochs, [r[1] for r in rows], label="rule (learned)", color="tab:blue")
    ax.plot(epochs, [r[2] for r in rows], label="unification (learned)",
            color="tab:blue", linestyle="--")
    ax.plot(epochs, [r[3] for r in rows], label="rule (not learned)", color="tab:orange")
    ax.plot(epochs, [r[4] for r in rows], label="unification (not learned)",
            color="tab:orange", linestyle="--")
    ax.set_xlabel("epoch")
    ax.set_ylabel("score")
    ax.set_ylim(0, 1.02)
    ax.legend(frameon=False, fontsize=8)
    ax.set_title("score development by outcome")
    fig.tight_layout()
    fig.savefig(out / "score_traces.png", dpi=120)
    plt.close(fig)
