"""Soft-unification proof enumeration and scoring.

A proof pairs symbols instead of requiring identity; each pair scores
exp(-||theta_a - theta_b||_2) and the proof scores the minimum over its
pairs, i.e. exp(-max pair distance). Proofs are one rule application deep:
either a direct fact match or one rule whose body atoms (grounded by the
goal's constants, since templates share variables) each unify with a
training fact.

Fact unification is soft over predicates and exact over constants: a goal
P(args) unifies with the training facts Q(args) at the same argument
tuple, Q != P (so a training fact never proves itself, directly or through
a circular rule body). Constants still bind rule variables exactly, and
identical-constant pairs score 1 and are omitted from unification lists.
Allowing constant mismatches in fact unification would instead hand every
best-proof race to the goal's nearest same-predicate neighbor among
hundreds of constants (an extreme-value effect), freezing the predicate
embeddings and collapsing the rule-vs-direct-unification competition this
model is built to exhibit.

This module is the reference implementation: it materializes every proof
with its enumeration order and tie-breaking rules. The training loop uses
scoring.BatchScorer, which is property-tested against this module.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .logic import Fact, KnowledgeBase, RuleInstance


class Unification(NamedTuple):
    left: int
    right: int


@dataclass(frozen=True, order=True)
class ProofPath:
    """Proof tag: direct fact match (rule_index = -1) or the application of
    one specific rule instance.

    For proof selection, paths collapse to categories: the fact category,
    plus one category per rule *template* (`group`). Rule instances of the
    same template share a category, so per-path heuristics see one rule
    path even when several instances are in play.
    """

    rule_index: int = -1
    group: int = 0

    @property
    def is_fact(self) -> bool:
        return self.rule_index < 0

    @property
    def category(self) -> int:
        return -1 if self.is_fact else self.group

    def __repr__(self) -> str:
        return "ProofPath(fact)" if self.is_fact else f"ProofPath(rule{self.rule_index})"


FACT_PATH = ProofPath()


@dataclass(frozen=True)
class Proof:
    path: ProofPath
    unifications: tuple[Unification, ...]
    worst_index: int
    score: float

    @property
    def worst(self) -> Unification:
        return self.unifications[self.worst_index]


def pair_distance(table: np.ndarray, a: int, b: int) -> float:
    d = table[a] - table[b]
    return float(np.sqrt((d * d).sum()))


def unification_score(a: np.ndarray, b: np.ndarray) -> float:
    """exp(-||a-b||_2), in (0, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a - b
    return float(np.exp(-np.sqrt((d * d).sum())))


def _score_pairs(table: np.ndarray, pairs: Sequence[Unification]) -> tuple[float, int, float]:
    """(score, worst index, worst distance) for an ordered pair list.

    Empty pair lists (everything unified exactly) score 1.0 with index 0;
    callers never produce them because the predicate pair is always listed.
    """
    dists = [pair_distance(table, u.left, u.right) for u in pairs]
    worst = 0
    for i, d in enumerate(dists):
        if d > dists[worst]:
            worst = i
    return float(np.exp(-dists[worst])), worst, dists[worst]


def _fact_pairs(goal: Fact, fact: Fact) -> tuple[Unification, ...]:
    # identical-constant pairs are omitted: they score exactly 1 and cannot
    # affect the minimum
    pairs = [Unification(goal.predicate, fact.predicate)]
    pairs.extend(
        Unification(ga, fa) for ga, fa in zip(goal.args, fact.args) if ga != fa
    )
    return tuple(pairs)


def _slot_pairs(body_pred: int, goal: Fact, fact: Fact) -> tuple[Unification, ...]:
    pairs = [Unification(body_pred, fact.predicate)]
    pairs.extend(
        Unification(ga, fa) for ga, fa in zip(goal.args, fact.args) if ga != fa
    )
    return tuple(pairs)


def enumerate_proofs(
    goal: Fact,
    kb: KnowledgeBase,
    rules: Sequence[RuleInstance],
    table: np.ndarray,
    k_max: int | float | None = None,
) -> list[Proof]:
    """All proofs of `goal`, grouped by path in enumeration order.

    Fact-path proofs come first (kb insertion order), then one group per
    rule in instantiation order. Candidate facts are those at the goal's
    exact argument tuple with a different predicate, both for the fact
    path and for rule body slots (variables are bound to the goal's
    constants, so body atoms are ground). Body slots keep only the k_max
    best-scoring candidates (ties kept by lowest fact index); the
    surviving cross product is enumerated row-major with per-slot
    candidates in fact order.
    """
    if k_max is None or k_max == math.inf:
        cap = None
    else:
        cap = int(k_max)
        if cap < 1:
            raise ValueError(f"k_max must be >= 1, got {k_max}")

    order = goal.order
    candidates = [
        f for f in kb.facts if f.args == goal.args and f.predicate != goal.predicate
    ]
    proofs: list[Proof] = []

    for fact in candidates:
        pairs = _fact_pairs(goal, fact)
        score, worst, _ = _score_pairs(table, pairs)
        proofs.append(Proof(FACT_PATH, pairs, worst, score))

    template_group: dict = {}
    for ri, rule in enumerate(rules):
        if rule.template.order != order:
            raise ValueError(
                f"rule {ri} has order {rule.template.order}, goal has order {order}"
            )
        group = template_group.setdefault(rule.template, len(template_group))
        head_pair = Unification(goal.predicate, rule.head)
        slot_kept: list[list[tuple[Fact, tuple[Unification, ...]]]] = []
        for body_pred in rule.body:
            slot: list[tuple[int, float, Fact, tuple[Unification, ...]]] = []
            for idx, fact in enumerate(candidates):
                pairs = _slot_pairs(body_pred, goal, fact)
                dists = [pair_distance(table, u.left, u.right) for u in pairs]
                slot.append((idx, max(dists), fact, pairs))
            slot.sort(key=lambda item: (item[1], item[0]))
            kept = slot if cap is None else slot[:cap]
            kept.sort(key=lambda item: item[0])
            slot_kept.append([(fact, pairs) for _, _, fact, pairs in kept])
        path = ProofPath(ri, group)
        for combo in itertools.product(*slot_kept):
            pairs = (head_pair,) + tuple(
                u for _, slot_pairs in combo for u in slot_pairs
            )
            score, worst, _ = _score_pairs(table, pairs)
            proofs.append(Proof(path, pairs, worst, score))

    return proofs


def fact_score(proofs: Sequence[Proof]) -> tuple[float, Proof | None]:
    """Maximum proof score and the attaining proof (first on ties); empty
    proof lists score 0 with no proof."""
    best: Proof | None = None
    for proof in proofs:
        if best is None or proof.score > best.score:
            best = proof
    return (0.0, None) if best is None else (best.score, best)


def group_by_path(proofs: Iterable[Proof]) -> dict[ProofPath, list[Proof]]:
    grouped: dict[ProofPath, list[Proof]] = {}
    for proof in proofs:
        grouped.setdefault(proof.path, []).append(proof)
    return grouped
