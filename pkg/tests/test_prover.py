import math

import numpy as np
import pytest

from ntplab.logic import CONSTANT, DATA_PREDICATE, Fact, RuleTemplate
from ntplab.prover import (
    FACT_PATH,
    Proof,
    ProofPath,
    Unification,
    enumerate_proofs,
    fact_score,
    group_by_path,
    pair_distance,
    unification_score,
)
from ntplab.trainer import instantiate_rules

from conftest import make_kb, small_bundle, small_store
import reference_impls as ref


class TestUnificationScore:
    def test_identical_vectors(self):
        a = np.array([0.3, -1.2, 4.0])
        assert unification_score(a, a) == 1.0

    def test_unit_distance(self):
        a = np.zeros(4)
        b = np.array([0.5, 0.5, 0.5, 0.5])
        assert unification_score(a, b) == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_matches_independent_oracle(self, rng):
        for _ in range(200):
            a = rng.normal(size=3)
            b = rng.normal(size=3)
            expected = math.exp(-math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b))))
            assert unification_score(a, b) == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            unification_score(np.zeros(3), np.zeros(4))


class TestSiblingExample:
    """One fact, one size-1 rule: exactly two candidate proofs."""

    def setup_method(self):
        self.kb, self.preds, self.consts = make_kb(
            ["HasSibling", "HasBrother"], ["Emily"], [("HasBrother", "Emily")]
        )
        self.rules = instantiate_rules(self.kb.interner, RuleTemplate(1, 1), 1)
        self.store = small_store(len(self.kb.interner) + 10)
        self.goal = Fact(self.preds["HasSibling"], (self.consts["Emily"],))

    def test_exactly_two_proofs(self):
        proofs = enumerate_proofs(self.goal, self.kb, self.rules, self.store.table)
        assert len(proofs) == 2
        direct, ruled = proofs
        assert direct.path.is_fact and ruled.path == ProofPath(0)

        t = self.store.table
        hs, hb = self.preds["HasSibling"], self.preds["HasBrother"]
        assert direct.unifications == (Unification(hs, hb),)
        assert direct.score == pytest.approx(math.exp(-pair_distance(t, hs, hb)), abs=1e-12)

        rule = self.rules[0]
        assert ruled.unifications == (
            Unification(hs, rule.head),
            Unification(rule.body[0], hb),
        )
        expected = math.exp(
            -max(pair_distance(t, hs, rule.head), pair_distance(t, rule.body[0], hb))
        )
        assert ruled.score == pytest.approx(expected, abs=1e-12)

    def test_no_candidates_no_proofs(self):
        lonely = Fact(self.preds["HasBrother"], (self.consts["Emily"],))
        # the only fact at Emily is HasBrother itself, which cannot prove itself
        assert enumerate_proofs(lonely, self.kb, self.rules, self.store.table) == []


class TestKMaxPruning:
    def _seven_candidate_setup(self):
        preds = [f"P{i}" for i in range(8)]
        kb, p, c = make_kb(preds, ["c0"], [(f"P{i}", "c0") for i in range(1, 8)])
        rules = instantiate_rules(kb.interner, RuleTemplate(2, 1), 1)
        store = small_store(len(kb.interner))
        goal = Fact(p["P0"], (c["c0"],))
        return kb, rules, store, goal

    def test_infinite_equals_full_width(self):
        kb, rules, store, goal = self._seven_candidate_setup()
        full = enumerate_proofs(goal, kb, rules, store.table, None)
        capped = enumerate_proofs(goal, kb, rules, store.table, 7)
        assert [(p.unifications, p.score) for p in full] == [
            (p.unifications, p.score) for p in capped
        ]
        # 7 fact proofs + 7*7 rule combos
        assert len(full) == 7 + 49

    def test_kmax_three_gives_nine_combos(self):
        kb, rules, store, goal = self._seven_candidate_setup()
        proofs = enumerate_proofs(goal, kb, rules, store.table, 3)
        rule_proofs = [p for p in proofs if not p.path.is_fact]
        assert len(rule_proofs) == 9

    def test_pruning_monotonicity(self):
        kb, rules, store, goal = self._seven_candidate_setup()
        best = {}
        for cap in (1, 2, 3, 5, 7, None):
            proofs = [
                p for p in enumerate_proofs(goal, kb, rules, store.table, cap)
                if not p.path.is_fact
            ]
            best[cap] = max(p.score for p in proofs)
        assert best[1] <= best[2] <= best[3] <= best[5] <= best[7]
        assert best[7] == best[None]  # cap beyond width is exhaustive


class TestFactScore:
    def _proof(self, score):
        return Proof(FACT_PATH, (Unification(0, 1),), 0, score)

    def test_tie_goes_to_first(self):
        proofs = [self._proof(0.2), self._proof(0.9), self._proof(0.9)]
        score, best = fact_score(proofs)
        assert score == 0.9 and best is proofs[1]

    def test_single(self):
        proofs = [self._proof(0.4)]
        assert fact_score(proofs) == (0.4, proofs[0])

    def test_empty(self):
        assert fact_score([]) == (0.0, None)


class TestOracleEquivalence:
    def test_matches_exhaustive_enumerator(self, rng):
        for trial in range(12):
            size = int(rng.integers(1, 4))
            order = int(rng.integers(1, 3))
            bundle = small_bundle(
                seed=trial, size=size, order=order,
                n_c=int(rng.integers(4, 9)), n_p=size + 2, test_fraction=0.0,
            )
            kb = bundle.kb_train
            if len(kb) < 2:
                continue
            store, rules = small_store(bundle, n_rules=2, seed=trial + 1)
            k_max = [None, 2, 3][trial % 3]
            goals = kb.facts[:4] + bundle.test_facts[:2]
            for goal in goals:
                mine = enumerate_proofs(goal, kb, rules, store.table, k_max)
                oracle = ref.exhaustive_proofs(goal, kb, rules, store.table, k_max)
                assert len(mine) == len(oracle)
                for p, (tag, pairs, worst, score) in zip(mine, oracle):
                    assert tuple(p.unifications) == pairs
                    assert p.worst_index == worst
                    assert p.score == pytest.approx(score, abs=1e-12)
                my_best = fact_score(mine)[0]
                assert my_best == pytest.approx(
                    ref.best_proof_score(goal, kb, rules, store.table, k_max), abs=1e-12
                )

    def test_path_partition(self):
        bundle = small_bundle(seed=3, n_c=8, n_p=4, test_fraction=0.0)
        store, rules = small_store(bundle, n_rules=3)
        goal = bundle.kb_train.facts[0]
        proofs = enumerate_proofs(goal, bundle.kb_train, rules, store.table)
        grouped = group_by_path(proofs)
        assert sum(len(v) for v in grouped.values()) == len(proofs)
        assert len(grouped) <= len(rules) + 1

    def test_training_fact_never_proves_itself(self):
        bundle = small_bundle(seed=5, n_c=10, n_p=4, test_fraction=0.0)
        store, rules = small_store(bundle, n_rules=2)
        for goal in bundle.kb_train.facts[:10]:
            proofs = enumerate_proofs(goal, bundle.kb_train, rules, store.table)
            for p in proofs:
                if p.path.is_fact:
                    assert p.unifications[0].right != goal.predicate
                    assert p.score < 1.0


def test_rule_order_mismatch_raises():
    kb, preds, consts = make_kb(["A", "B"], ["x"], [("B", "x")])
    rules = instantiate_rules(kb.interner, RuleTemplate(1, 2), 1)
    store = small_store(len(kb.interner))
    with pytest.raises(ValueError):
        enumerate_proofs(Fact(preds["A"], (consts["x"],)), kb, rules, store.table)
