"""Procedural generation of synthetic relational datasets.

The recipe: every predicate holds for every input tuple with a base
probability p_b; for each injected relationship, tuples whose body
predicates all hold get an extra head draw with probability p_r. A head
fact is true if either draw succeeded, so P(head | body) = p_b + (1-p_b)*p_r,
which is certainty at p_r = 1.0.

Active facts (head facts whose body holds for the same tuple) carry the
learnable signal; a fraction of them is held out as the test set.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .logic import (
    CONSTANT,
    DATA_PREDICATE,
    Fact,
    Interner,
    KnowledgeBase,
    Relationship,
    RuleTemplate,
    format_fact,
)

RNG_ALGORITHM = "numpy-pcg64"


class GenConfigError(ValueError):
    """Raised for invalid generation parameters."""


@dataclass(frozen=True)
class GenConfig:
    n_c: int
    n_p: int
    p_b: float
    p_r: float
    n_rel: int
    template: RuleTemplate
    seed: int

    def validate(self) -> None:
        if self.n_c < 1:
            raise GenConfigError(f"n_c must be >= 1, got {self.n_c}")
        if self.n_p < self.template.size + 1:
            raise GenConfigError(
                f"n_p must be >= rule size + 1 ({self.template.size + 1}), got {self.n_p}"
            )
        if self.n_rel < 1:
            raise GenConfigError(f"n_rel must be >= 1, got {self.n_rel}")
        # heads are distinct across relationships and bodies avoid all heads,
        # so chained rules cannot arise
        if self.n_p < self.n_rel + self.template.size:
            raise GenConfigError(
                f"n_p must be >= n_rel + rule size ({self.n_rel + self.template.size}) "
                f"to sample disjoint relationships, got {self.n_p}"
            )
        if not (0.0 <= self.p_b <= 1.0):
            raise GenConfigError(f"p_b must be in [0,1], got {self.p_b}")
        if not (0.0 <= self.p_r <= 1.0):
            raise GenConfigError(f"p_r must be in [0,1], got {self.p_r}")
        if not (self.p_r > self.p_b):
            raise GenConfigError(f"p_r must exceed p_b, got p_r={self.p_r} p_b={self.p_b}")


@dataclass
class DatasetBundle:
    kb_train: KnowledgeBase
    test_facts: list[Fact]
    relationships: list[Relationship]
    config: GenConfig
    active_count: int
    total_count: int
    test_fraction: float = 0.05
    corruption_skips: int = field(default=0, compare=False)

    @property
    def interner(self) -> Interner:
        return self.kb_train.interner


def _sample_relationships(
    rng: np.random.Generator, preds: Sequence[int], n_rel: int, template: RuleTemplate
) -> list[Relationship]:
    # heads sampled without replacement; bodies only from non-head predicates
    head_idx = [int(i) for i in rng.choice(len(preds), size=n_rel, replace=False)]
    non_heads = [i for i in range(len(preds)) if i not in set(head_idx)]
    rels = []
    for h in head_idx:
        body_pick = rng.choice(len(non_heads), size=template.size, replace=False)
        body = tuple(preds[non_heads[int(j)]] for j in body_pick)
        rels.append(Relationship(head=preds[h], body=body, template=template))
    return rels


def generate_dataset(cfg: GenConfig, test_fraction: float = 0.05) -> DatasetBundle:
    """Generate one dataset; deterministic given (cfg, test_fraction).

    Draw order is pinned: relationship sampling, base truth per predicate in
    id order, one relationship draw vector per relationship in order, then
    the active-fact test split.
    """
    cfg.validate()
    if not (0.0 <= test_fraction < 1.0):
        raise GenConfigError(f"test_fraction must be in [0,1), got {test_fraction}")

    rng = np.random.default_rng(cfg.seed)
    interner = Interner()
    preds = [interner.intern(f"P{i}", DATA_PREDICATE) for i in range(cfg.n_p)]
    consts = [interner.intern(f"c{i}", CONSTANT) for i in range(cfg.n_c)]
    k = cfg.template.order

    relationships = _sample_relationships(rng, preds, cfg.n_rel, cfg.template)

    tuples = list(itertools.product(range(cfg.n_c), repeat=k))
    n_tuples = len(tuples)
    truth = rng.random((cfg.n_p, n_tuples)) < cfg.p_b

    pred_pos = {p: i for i, p in enumerate(preds)}
    for rel in relationships:
        body_mask = np.ones(n_tuples, dtype=bool)
        for b in rel.body:
            body_mask &= truth[pred_pos[b]]
        draws = rng.random(n_tuples) < cfg.p_r
        truth[pred_pos[rel.head]] |= body_mask & draws

    all_facts: list[Fact] = []
    for pi in range(cfg.n_p):
        hits = np.flatnonzero(truth[pi])
        for ti in hits:
            args = tuple(consts[c] for c in tuples[ti])
            all_facts.append(Fact(preds[pi], args))
    fact_set = set(all_facts)

    # active facts, in (relationship, tuple) order, deduplicated
    active: dict[Fact, None] = {}
    for rel in relationships:
        mask = truth[pred_pos[rel.head]].copy()
        for b in rel.body:
            mask &= truth[pred_pos[b]]
        for ti in np.flatnonzero(mask):
            args = tuple(consts[c] for c in tuples[ti])
            active[Fact(rel.head, args)] = None
    active_facts = list(active)

    n_test = math.ceil(test_fraction * len(active_facts))
    if n_test > 0:
        picked = rng.choice(len(active_facts), size=n_test, replace=False)
        test_facts = [active_facts[int(i)] for i in sorted(int(i) for i in picked)]
    else:
        test_facts = []
    test_set = set(test_facts)

    pred_order = {p: k for p in preds}
    kb = KnowledgeBase(interner, consts, preds, pred_order)
    for fact in all_facts:
        if fact not in test_set:
            kb.add_fact(fact)

    return DatasetBundle(
        kb_train=kb,
        test_facts=test_facts,
        relationships=relationships,
        config=cfg,
        active_count=len(active_facts),
        total_count=len(fact_set),
        test_fraction=test_fraction,
    )


def identify_active_facts(
    facts: Iterable[Fact], relationships: Sequence[Relationship], constants: Sequence[int]
) -> set[Fact]:
    """Brute-force definition of active facts: head(x) present with every
    body predicate of some relationship present for the same tuple x."""
    fact_set = set(facts)
    active: set[Fact] = set()
    for rel in relationships:
        k = rel.template.order
        for tup in itertools.product(constants, repeat=k):
            head_fact = Fact(rel.head, tup)
            if head_fact not in fact_set:
                continue
            if all(Fact(b, tup) in fact_set for b in rel.body):
                active.add(head_fact)
    return active


CORRUPTION_ATTEMPTS = 16


def corrupt_training_fact(fact: Fact, kb: KnowledgeBase, rng: np.random.Generator) -> list[Fact]:
    """One negative per argument position: that position's constant replaced
    by a uniformly random constant such that the result is not a training
    fact. Positions with no valid replacement are skipped.
    """
    consts = kb.constants
    n_c = len(consts)
    out = []
    for pos in range(len(fact.args)):
        found = None
        for _ in range(CORRUPTION_ATTEMPTS):
            c = consts[int(rng.integers(n_c))]
            candidate = Fact(fact.predicate, _replace(fact.args, pos, c))
            if candidate not in kb:
                found = candidate
                break
        if found is None:
            valid = [
                Fact(fact.predicate, _replace(fact.args, pos, c))
                for c in consts
                if Fact(fact.predicate, _replace(fact.args, pos, c)) not in kb
            ]
            if valid:
                found = valid[int(rng.integers(len(valid)))]
        if found is not None:
            out.append(found)
    return out


def enumerate_test_corruptions(fact: Fact, kb_train: KnowledgeBase) -> list[Fact]:
    """Every single-position constant substitution absent from training data."""
    out: dict[Fact, None] = {}
    for pos in range(len(fact.args)):
        for c in kb_train.constants:
            if c == fact.args[pos]:
                continue
            candidate = Fact(fact.predicate, _replace(fact.args, pos, c))
            if candidate not in kb_train:
                out[candidate] = None
    return list(out)


def _replace(args: tuple[int, ...], pos: int, c: int) -> tuple[int, ...]:
    return args[:pos] + (c,) + args[pos + 1 :]


# --- dataset files ----------------------------------------------------------


def format_relationship(interner: Interner, rel: Relationship) -> str:
    body = " & ".join(interner.name(b) for b in rel.body)
    return f"{interner.name(rel.head)} <- {body}"


def write_dataset(bundle: DatasetBundle, outdir) -> None:
    """Write train.facts, test.facts, relations.txt and gen_meta."""
    from pathlib import Path

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    interner = bundle.interner
    from .logic import write_fact_file

    write_fact_file(out / "train.facts", interner, bundle.kb_train.facts, header="training facts")
    write_fact_file(out / "test.facts", interner, bundle.test_facts, header="held-out active facts")
    with open(out / "relations.txt", "w", encoding="utf-8", newline="\n") as fh:
        for rel in bundle.relationships:
            fh.write(format_relationship(interner, rel) + "\n")
    cfg = bundle.config
    meta = [
        ("n_c", cfg.n_c),
        ("n_p", cfg.n_p),
        ("p_b", cfg.p_b),
        ("p_r", cfg.p_r),
        ("n_rel", cfg.n_rel),
        ("rule_size", cfg.template.size),
        ("order", cfg.template.order),
        ("seed", cfg.seed),
        ("rng", RNG_ALGORITHM),
        ("test_fraction", bundle.test_fraction),
        ("active_count", bundle.active_count),
        ("train_count", len(bundle.kb_train)),
        ("test_count", len(bundle.test_facts)),
        ("total_count", bundle.total_count),
    ]
    with open(out / "gen_meta", "w", encoding="utf-8", newline="\n") as fh:
        for key, value in meta:
            fh.write(f"{key} = {value}\n")
