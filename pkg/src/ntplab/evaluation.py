"""Rule decoding and evaluation metrics.

Rule learning is scored by decoding each rule predicate to its nearest
data predicate (recall over injected relationships, PR-AUC over decoding
scores). Fact prediction is scored on held-out active facts against
exhaustive single-position corruptions (MRR with mid-rank ties, plus the
size-invariant ROC-AUC with the true fact's score duplicated once per
corruption).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datagen import DatasetBundle, enumerate_test_corruptions
from .logic import Fact, KnowledgeBase, Relationship, RuleInstance, matches_relationship
from .trainer import EmbeddingStore


class EvalError(ValueError):
    """Raised when a metric is undefined for its inputs."""


@dataclass(frozen=True)
class DecodedRule:
    rule: RuleInstance
    head: int
    body: tuple[int, ...]
    score: float


@dataclass
class RunMetrics:
    recall: float
    decodings: list[tuple[DecodedRule, int]]
    mrr: float
    roc_auc: float
    skipped_test_facts: int


def decode_rule(
    rule: RuleInstance, store: EmbeddingStore, data_preds: Sequence[int]
) -> DecodedRule:
    """Nearest data predicate per slot (lowest id on ties); the decoding
    score is the worst slot's unification score."""
    if not data_preds:
        raise ValueError("data_preds must be nonempty")
    pred_emb = store.table[list(data_preds)]
    nearest: list[int] = []
    worst = 0.0
    for slot in rule.slots:
        diff = pred_emb - store.table[slot]
        dists = np.sqrt((diff * diff).sum(axis=1))
        pos = int(np.argmin(dists))  # first minimum = lowest id
        nearest.append(data_preds[pos])
        worst = max(worst, float(dists[pos]))
    return DecodedRule(
        rule=rule,
        head=nearest[0],
        body=tuple(nearest[1:]),
        score=float(np.exp(-worst)),
    )


def recall(
    runs: Sequence[tuple[Sequence[DecodedRule], Sequence[Relationship]]]
) -> float:
    """Mean over runs of the fraction of injected relationships recovered
    by at least one decoding."""
    if not runs:
        raise EvalError("recall needs at least one run")
    per_run = []
    for decodings, relationships in runs:
        if not relationships:
            raise EvalError("recall needs at least one relationship per run")
        matched = sum(
            1
            for rel in relationships
            if any(matches_relationship(d.head, d.body, rel) for d in decodings)
        )
        per_run.append(matched / len(relationships))
    return float(np.mean(per_run))


def pr_auc(scores: Sequence[float], gold: Sequence[int]) -> float:
    """Area under the precision-recall curve: sort by score descending
    (gold-1 first on ties) and sum precision at each recall increment.
    Undefined without a positive; returns NaN then."""
    s = np.asarray(scores, dtype=np.float64)
    g = np.asarray(gold, dtype=np.int64)
    if s.shape != g.shape:
        raise ValueError("scores and gold must have equal length")
    total_pos = int(g.sum())
    if total_pos == 0:
        return math.nan
    order = np.lexsort((-g, -s))
    g_sorted = g[order]
    ranks = np.arange(1, len(g_sorted) + 1)
    cum_pos = np.cumsum(g_sorted)
    hit = g_sorted == 1
    return float((cum_pos[hit] / ranks[hit]).sum() / total_pos)


def rank_auc(pos: np.ndarray, neg: np.ndarray) -> float:
    """Exact ROC-AUC as the rank statistic P(pos > neg) + 0.5 P(tie)."""
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    if len(pos) == 0 or len(neg) == 0:
        raise EvalError("rank_auc needs both positives and negatives")
    allscores = np.concatenate([pos, neg])
    n = len(allscores)
    order = np.argsort(allscores, kind="mergesort")
    s_sorted = allscores[order]
    boundary = np.flatnonzero(s_sorted[1:] != s_sorted[:-1]) + 1
    starts = np.concatenate([[0], boundary])
    ends = np.concatenate([boundary, [n]])
    avg = (starts + ends + 1) / 2.0  # mid-rank, 1-based
    ranks_sorted = np.repeat(avg, ends - starts)
    ranks = np.empty(n)
    ranks[order] = ranks_sorted
    n_pos = len(pos)
    u = ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * len(neg)))


def _corruption_scores(
    test_facts: Sequence[Fact],
    kb_train: KnowledgeBase,
    store: EmbeddingStore,
    rules: Sequence[RuleInstance],
    k_max: int | None,
):
    """Yield (true score, corruption scores) per test fact with a nonempty
    corruption set; counts the skipped facts."""
    from .scoring import BatchScorer

    scorer = BatchScorer(kb_train, rules, store, k_max)
    skipped = 0
    results = []
    for fact in test_facts:
        corruptions = enumerate_test_corruptions(fact, kb_train)
        if not corruptions:
            skipped += 1
            continue
        scores = scorer.best_scores([fact, *corruptions])
        results.append((scores[0], scores[1:]))
    return results, skipped


def mrr(
    test_facts: Sequence[Fact],
    kb_train: KnowledgeBase,
    store: EmbeddingStore,
    rules: Sequence[RuleInstance],
    k_max: int | None = None,
) -> float:
    """Mean reciprocal rank of each true fact among its corruptions.

    rank = 1 + (# strictly better corruptions) + (# ties)/2.
    """
    results, _ = _corruption_scores(test_facts, kb_train, store, rules, k_max)
    if not results:
        raise EvalError("every test fact was skipped; MRR undefined")
    rrs = []
    for true_score, corr in results:
        greater = int((corr > true_score).sum())
        ties = int((corr == true_score).sum())
        rrs.append(1.0 / (1.0 + greater + ties / 2.0))
    return float(np.mean(rrs))


def roc_auc_duplicated(
    test_facts: Sequence[Fact],
    kb_train: KnowledgeBase,
    store: EmbeddingStore,
    rules: Sequence[RuleInstance],
    k_max: int | None = None,
) -> float:
    """Size-invariant ROC-AUC: per test fact with m corruptions, the true
    score enters m times with label 1 against the m corruption scores."""
    results, _ = _corruption_scores(test_facts, kb_train, store, rules, k_max)
    if not results:
        raise EvalError("every test fact was skipped; ROC-AUC undefined")
    pos = np.concatenate([np.full(len(corr), true) for true, corr in results])
    neg = np.concatenate([corr for _, corr in results])
    return rank_auc(pos, neg)


def evaluate_run(
    bundle: DatasetBundle,
    store: EmbeddingStore,
    rules: Sequence[RuleInstance],
    k_max: int | None = None,
) -> RunMetrics:
    """Decode rules and compute all per-run metrics for one trained run."""
    kb = bundle.kb_train
    decodings = []
    for rule in rules:
        dec = decode_rule(rule, store, kb.data_predicates)
        gold = int(
            any(matches_relationship(dec.head, dec.body, rel) for rel in bundle.relationships)
        )
        decodings.append((dec, gold))
    run_recall = recall([([d for d, _ in decodings], bundle.relationships)])

    results, skipped = _corruption_scores(bundle.test_facts, kb, store, rules, k_max)
    if results:
        rrs = []
        for true_score, corr in results:
            greater = int((corr > true_score).sum())
            ties = int((corr == true_score).sum())
            rrs.append(1.0 / (1.0 + greater + ties / 2.0))
        run_mrr = float(np.mean(rrs))
        pos = np.concatenate([np.full(len(corr), true) for true, corr in results])
        neg = np.concatenate([corr for _, corr in results])
        run_roc = rank_auc(pos, neg)
    else:
        run_mrr = math.nan
        run_roc = math.nan
    return RunMetrics(
        recall=run_recall,
        decodings=decodings,
        mrr=run_mrr,
        roc_auc=run_roc,
        skipped_test_facts=skipped,
    )
