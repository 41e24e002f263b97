"""The vectorized engine must agree with the materializing prover on every
material output: per-goal selected proof multisets (score, worst pair,
distance), losses, gradients, and best scores.

Exact score ties between proofs with different worst pairs have measure
zero under random embeddings; ties with the same material effect (or the
two orientations of a mirrored binary pair) are expected and compared as
unordered pairs.
"""

import numpy as np
import pytest

from ntplab.datagen import GenConfig, corrupt_training_fact, enumerate_test_corruptions, generate_dataset
from ntplab.logic import CONSTANT, DATA_PREDICATE, Fact, Interner, KnowledgeBase, RuleTemplate
from ntplab.scoring import BatchScorer
from ntplab.trainer import (
    Heuristic,
    ReferenceEngine,
    TrainConfig,
    init_embeddings,
    instantiate_rules,
    pairwise_loss_grad,
)

HEURISTICS = [
    Heuristic("best_only"),
    Heuristic("top_k", 2),
    Heuristic("all_path"),
    Heuristic("top_k_all_path", 3),
    Heuristic("combined_alt", 2),
]


def _material(sb):
    out = {}
    for gi, y, s, a, b, d in zip(sb.goal_index, sb.y, sb.scores, sb.a, sb.b, sb.dists):
        pair = (min(int(a), int(b)), max(int(a), int(b)))
        out.setdefault(int(gi), []).append((float(s), *pair, float(d), float(y)))
    return {k: sorted(v) for k, v in out.items()}


def _assert_equivalent(ref_sb, fast_sb):
    mr, mf = _material(ref_sb), _material(fast_sb)
    assert set(mr) == set(mf)
    for g in mr:
        assert len(mr[g]) == len(mf[g]), (g, mr[g], mf[g])
        for pr, pf in zip(mr[g], mf[g]):
            assert pr[1:3] == pf[1:3], (g, pr, pf)
            assert pr[0] == pytest.approx(pf[0], abs=1e-9)
            assert pr[3] == pytest.approx(pf[3], abs=1e-9)
            assert pr[4] == pf[4]


def test_randomized_equivalence():
    rng0 = np.random.default_rng(0)
    checked = 0
    for trial in range(30):
        size = int(rng0.integers(1, 4))
        order = int(rng0.integers(1, 3))
        n_c = int(rng0.integers(4, 10 if order == 1 else 7))
        n_p = size + 1 + int(rng0.integers(0, 4))
        k_max = [None, 1, 2, 3][int(rng0.integers(4))]
        cfg = GenConfig(
            n_c=n_c, n_p=n_p, p_b=0.5, p_r=1.0, n_rel=1,
            template=RuleTemplate(size, order), seed=int(rng0.integers(1e6)),
        )
        bundle = generate_dataset(cfg, 0.15)
        if len(bundle.kb_train) < 3:
            continue
        rules = instantiate_rules(bundle.interner, cfg.template, int(rng0.integers(1, 4)))
        tc = TrainConfig(dim=5, seed=1)
        rng = np.random.default_rng(int(rng0.integers(1e6)))
        store = init_embeddings(len(bundle.interner), tc, rng)
        ref_engine = ReferenceEngine(bundle.kb_train, rules, store, k_max)
        fast = BatchScorer(bundle.kb_train, rules, store, k_max)

        goals = []
        for f in bundle.kb_train.facts[:6]:
            goals.append((f, 1))
            goals.extend((c, 0) for c in corrupt_training_fact(f, bundle.kb_train, rng))
        for h in HEURISTICS:
            r = ref_engine.select_for_goals(goals, h)
            f = fast.select_for_goals(goals, h)
            _assert_equivalent(r, f)
            lr = pairwise_loss_grad(store.table, 1e-7, r.scores, r.a, r.b, r.dists, r.y)
            lf = pairwise_loss_grad(store.table, 1e-7, f.scores, f.a, f.b, f.dists, f.y)
            assert lr[0] == pytest.approx(lf[0], abs=1e-7)
            assert set(lr[1]) == set(lf[1])
            for sym in lr[1]:
                np.testing.assert_allclose(lr[1][sym], lf[1][sym], atol=1e-7)
            checked += 1

        evals = bundle.test_facts + [
            c for fct in bundle.test_facts
            for c in enumerate_test_corruptions(fct, bundle.kb_train)
        ][:8]
        if evals:
            np.testing.assert_allclose(
                ref_engine.best_scores(evals), fast.best_scores(evals), atol=1e-9
            )
        np.testing.assert_allclose(
            ref_engine.best_scores(bundle.kb_train.facts[:4]),
            fast.best_scores(bundle.kb_train.facts[:4]),
            atol=1e-9,
        )
    assert checked >= 100


def test_mixed_arity_batch():
    interner = Interner()
    p1 = interner.intern("U0", DATA_PREDICATE)
    p2 = interner.intern("U1", DATA_PREDICATE)
    b1 = interner.intern("B0", DATA_PREDICATE)
    b2 = interner.intern("B1", DATA_PREDICATE)
    consts = [interner.intern(f"c{i}", CONSTANT) for i in range(4)]
    kb = KnowledgeBase(
        interner, consts, [p1, p2, b1, b2], {p1: 1, p2: 1, b1: 2, b2: 2}
    )
    kb.add_fact(Fact(p1, (consts[0],)))
    kb.add_fact(Fact(p2, (consts[0],)))
    kb.add_fact(Fact(b1, (consts[0], consts[1])))
    kb.add_fact(Fact(b2, (consts[0], consts[1])))
    store = init_embeddings(len(interner), TrainConfig(dim=4, seed=2), np.random.default_rng(3))
    ref_engine = ReferenceEngine(kb, [], store, None)
    fast = BatchScorer(kb, [], store, None)
    goals = [
        (Fact(p1, (consts[0],)), 1),
        (Fact(b2, (consts[0], consts[1])), 1),
        (Fact(p2, (consts[1],)), 0),
    ]
    for h in HEURISTICS:
        _assert_equivalent(
            ref_engine.select_for_goals(goals, h), fast.select_for_goals(goals, h)
        )
    np.testing.assert_allclose(
        ref_engine.best_scores([g for g, _ in goals]),
        fast.best_scores([g for g, _ in goals]),
        atol=1e-9,
    )


def test_empty_kb_yields_empty_selection():
    interner = Interner()
    p = interner.intern("P0", DATA_PREDICATE)
    c = interner.intern("c0", CONSTANT)
    kb = KnowledgeBase(interner, [c], [p], {p: 1})
    store = init_embeddings(len(interner), TrainConfig(dim=3, seed=1), np.random.default_rng(0))
    fast = BatchScorer(kb, [], store, None)
    sel = fast.select_for_goals([(Fact(p, (c,)), 1)], Heuristic("best_only"))
    assert len(sel.scores) == 0
    assert fast.best_scores([Fact(p, (c,))])[0] == 0.0
