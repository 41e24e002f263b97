"""Trainable embeddings and the winner-takes-all training loop.

Gradients are closed-form: every selected proof contributes only through
its worst unification pair. For a pair (a, b) at distance d and clamped
proof score rho, a true goal pulls the pair together with dL/dtheta_a =
(theta_a - theta_b)/d, and a corrupted goal pushes it apart with
-(rho/(1-rho)) times the same unit vector. Exploration heuristics only
change which proofs are selected; their losses are summed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .datagen import DatasetBundle, corrupt_training_fact
from .logic import (
    RULE_PREDICATE,
    Fact,
    Interner,
    KnowledgeBase,
    Relationship,
    RuleInstance,
    RuleTemplate,
    matches_relationship,
)
from .prover import Proof, ProofPath, enumerate_proofs, fact_score, pair_distance

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

HEURISTIC_KINDS = ("best_only", "top_k", "all_path", "top_k_all_path", "combined_alt")


@dataclass(frozen=True)
class Heuristic:
    """Proof-selection rule.

    best_only:         the single highest-scoring proof
    top_k:             the k highest-scoring proofs overall
    all_path:          the best proof of every nonempty path
    top_k_all_path:    each path's k best proofs
    combined_alt:      global top-k united with per-path top-1 (alternative
                       reading of the combined heuristic, kept for comparison)
    """

    kind: str
    k: int = 1

    def __post_init__(self) -> None:
        if self.kind not in HEURISTIC_KINDS:
            raise ValueError(f"unknown heuristic kind {self.kind!r}")
        if self.k < 1:
            raise ValueError(f"heuristic k must be >= 1, got {self.k}")

    @property
    def per_path_k(self) -> int:
        """Per-path proof count sufficient to realize the selection."""
        return 1 if self.kind in ("best_only", "all_path") else self.k

    @classmethod
    def parse(cls, text: str) -> "Heuristic":
        text = text.strip().lower()
        if "(" in text:
            name, _, rest = text.partition("(")
            if not rest.endswith(")"):
                raise ValueError(f"malformed heuristic {text!r}")
            return cls(name.strip(), int(rest[:-1]))
        if text in ("top_k", "top_k_all_path", "combined_alt"):
            raise ValueError(f"heuristic {text!r} requires a k, e.g. {text}(2)")
        return cls(text)

    def __str__(self) -> str:
        if self.kind in ("best_only", "all_path"):
            return self.kind
        return f"{self.kind}({self.k})"


BEST_ONLY = Heuristic("best_only")


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 20
    init_scale: float = 0.3
    lr: float = 1e-3
    clip: float = 5.0
    decay: float = 3e-4
    epochs: int = 50
    batch_true_facts: int = 10
    n_rules: int = 3
    heuristic: Heuristic = BEST_ONLY
    k_max: int | None = 10  # None = no pruning
    epsilon: float = 1e-7
    seed: int = 0

    def validate(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.init_scale <= 0:
            raise ValueError(f"init_scale must be > 0, got {self.init_scale}")
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.clip <= 0:
            raise ValueError(f"clip must be > 0, got {self.clip}")
        if self.decay < 0:
            raise ValueError(f"decay must be >= 0, got {self.decay}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_true_facts < 1:
            raise ValueError(f"batch_true_facts must be >= 1, got {self.batch_true_facts}")
        if self.n_rules < 1:
            raise ValueError(f"n_rules must be >= 1, got {self.n_rules}")
        if self.k_max is not None and self.k_max < 1:
            raise ValueError(f"k_max must be >= 1 or none, got {self.k_max}")
        if not (0 < self.epsilon < 0.5):
            raise ValueError(f"epsilon must be in (0, 0.5), got {self.epsilon}")


@dataclass
class EmbeddingStore:
    """One dense vector per interned symbol; the only trainable state."""

    dim: int
    table: np.ndarray  # (n_symbols, dim) float64

    def vec(self, sym: int) -> np.ndarray:
        return self.table[sym]

    def copy(self) -> "EmbeddingStore":
        return EmbeddingStore(self.dim, self.table.copy())


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    count: np.ndarray  # per-symbol update counts for unbiased sparse steps
    t: int = 0

    @classmethod
    def zeros(cls, n_symbols: int, dim: int) -> "AdamState":
        return cls(
            m=np.zeros((n_symbols, dim)),
            v=np.zeros((n_symbols, dim)),
            count=np.zeros(n_symbols, dtype=np.int64),
        )


@dataclass
class EpochTrace:
    epoch: int
    rule_score: float
    unification_score: float
    mean_loss: float


def init_embeddings(
    symbols: Sequence[int] | int, cfg: TrainConfig, rng: np.random.Generator
) -> EmbeddingStore:
    """i.i.d. normal(0, init_scale^2) per coordinate, in symbol-id order."""
    n = symbols if isinstance(symbols, int) else len(symbols)
    table = rng.normal(0.0, cfg.init_scale, size=(n, cfg.dim))
    return EmbeddingStore(cfg.dim, table)


def instantiate_rules(
    interner: Interner, template: RuleTemplate, n_rules: int
) -> list[RuleInstance]:
    """Fresh rule-predicate symbols for each instance, in instantiation order."""
    rules = []
    for r in range(n_rules):
        head = interner.intern(f"rule{r}.head", RULE_PREDICATE)
        body = tuple(
            interner.intern(f"rule{r}.body{j}", RULE_PREDICATE) for j in range(template.size)
        )
        rules.append(RuleInstance(template, head, body))
    return rules


def nudge_initialization(
    store: EmbeddingStore,
    rules: Sequence[RuleInstance],
    relationships: Sequence[Relationship],
    ratio: float,
) -> EmbeddingStore:
    """Diagnostic: move the best-placed rule's slot embeddings toward the
    ground-truth relationship embeddings, shrinking each slot distance by
    `ratio`. Body slots are matched by the minimum-cost assignment over
    body permutations. ratio = 1.0 is the exact identity.
    """
    if not (0.0 < ratio <= 1.0):
        raise ValueError(f"nudge ratio must be in (0, 1], got {ratio}")
    table = store.table
    for rel in relationships:
        matching = [r for r in rules if r.template == rel.template]
        if not matching:
            raise ValueError("no rule instance matches the relationship template")
        best: tuple[float, RuleInstance, tuple[int, ...]] | None = None
        for rule in matching:
            head_d = pair_distance(table, rule.head, rel.head)
            for perm in itertools.permutations(rel.body):
                cost = head_d + sum(
                    pair_distance(table, b, g) for b, g in zip(rule.body, perm)
                )
                if best is None or cost < best[0]:
                    best = (cost, rule, perm)
        assert best is not None
        _, rule, perm = best
        if ratio == 1.0:
            continue
        table[rule.head] = table[rel.head] + ratio * (table[rule.head] - table[rel.head])
        for b, g in zip(rule.body, perm):
            table[b] = table[g] + ratio * (table[b] - table[g])
    return store


def select_proof_set(
    proofs: Sequence[Proof] | Mapping[ProofPath, Sequence[Proof]],
    heuristic: Heuristic,
) -> list[Proof]:
    """Select proofs per the heuristic; ties break toward enumeration order
    and the result keeps enumeration order. Empty input selects nothing.

    Per-path heuristics operate on path categories: the fact category plus
    one category per rule template, so every instance of a template
    competes inside a single path.
    """
    if isinstance(proofs, Mapping):
        flat: list[Proof] = []
        for path in sorted(proofs):
            flat.extend(proofs[path])
    else:
        flat = list(proofs)
    if not flat:
        return []

    ranked = sorted(range(len(flat)), key=lambda i: (-flat[i].score, i))
    by_category: dict[int, list[int]] = {}
    for i, proof in enumerate(flat):
        by_category.setdefault(proof.path.category, []).append(i)

    def cat_top(indices: list[int], k: int) -> list[int]:
        return sorted(indices, key=lambda i: (-flat[i].score, i))[:k]

    kind = heuristic.kind
    if kind == "best_only":
        chosen = set(ranked[:1])
    elif kind == "top_k":
        chosen = set(ranked[: heuristic.k])
    elif kind == "all_path":
        chosen = {cat_top(ix, 1)[0] for ix in by_category.values()}
    elif kind == "top_k_all_path":
        chosen = {i for ix in by_category.values() for i in cat_top(ix, heuristic.k)}
    elif kind == "combined_alt":
        chosen = set(ranked[: heuristic.k])
        chosen.update(cat_top(ix, 1)[0] for ix in by_category.values())
    else:  # pragma: no cover
        raise AssertionError(kind)
    return [flat[i] for i in sorted(chosen)]


def pairwise_loss_grad_arrays(
    table: np.ndarray,
    epsilon: float,
    scores: np.ndarray,
    a_ids: np.ndarray,
    b_ids: np.ndarray,
    dists: np.ndarray,
    ys: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Summed cross-entropy loss over selected proofs and its sparse
    gradient through each proof's worst unification pair, as (loss,
    touched symbol ids ascending, gradient rows).

    Scores are clamped to [epsilon, 1-epsilon] before the logs; pairs at
    distance 0 contribute zero gradient (subgradient choice).
    """
    scores = np.asarray(scores, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    empty = np.zeros(0, dtype=np.int64), np.zeros((0, table.shape[1]))
    if scores.size == 0:
        return 0.0, *empty
    rho = np.clip(scores, epsilon, 1.0 - epsilon)
    loss = float(-(ys * np.log(rho) + (1.0 - ys) * np.log1p(-rho)).sum())

    dists = np.asarray(dists, dtype=np.float64)
    mask = dists > 0.0
    if not mask.any():
        return loss, *empty
    a = np.asarray(a_ids)[mask]
    b = np.asarray(b_ids)[mask]
    unit = (table[a] - table[b]) / dists[mask, None]
    coef = np.where(ys[mask] == 1.0, 1.0, -(rho[mask] / (1.0 - rho[mask])))
    contrib = coef[:, None] * unit
    syms = np.concatenate([a, b])
    ids, inv = np.unique(syms, return_inverse=True)
    g = np.zeros((len(ids), table.shape[1]))
    np.add.at(g, inv, np.concatenate([contrib, -contrib], axis=0))
    return loss, ids, g


def pairwise_loss_grad(
    table: np.ndarray,
    epsilon: float,
    scores: np.ndarray,
    a_ids: np.ndarray,
    b_ids: np.ndarray,
    dists: np.ndarray,
    ys: np.ndarray,
) -> tuple[float, dict[int, np.ndarray]]:
    """Dict-valued wrapper over pairwise_loss_grad_arrays."""
    loss, ids, g = pairwise_loss_grad_arrays(table, epsilon, scores, a_ids, b_ids, dists, ys)
    return loss, {int(s): g[i] for i, s in enumerate(ids)}


def loss_and_gradient(
    y: int,
    selected: Sequence[Proof],
    store: EmbeddingStore,
    epsilon: float,
) -> tuple[float, dict[int, np.ndarray]]:
    """Loss and gradient for one goal's selected proofs (y in {0, 1})."""
    if not selected:
        return 0.0, {}
    table = store.table
    scores = np.array([p.score for p in selected])
    a_ids = np.array([p.worst.left for p in selected])
    b_ids = np.array([p.worst.right for p in selected])
    dists = np.array([pair_distance(table, p.worst.left, p.worst.right) for p in selected])
    ys = np.full(len(selected), float(y))
    return pairwise_loss_grad(table, epsilon, scores, a_ids, b_ids, dists, ys)


def adam_step_arrays(
    store: EmbeddingStore,
    state: AdamState,
    ids: np.ndarray,
    grad: np.ndarray,
    cfg: TrainConfig,
) -> None:
    """One optimizer step over the touched symbols only (ids ascending).

    Coordinates are clipped to [-clip, clip] before entering Adam; the
    effective learning rate is lr * exp(-decay * t) with t counting batches;
    bias correction uses per-symbol update counts so rarely-touched symbols
    still get unbiased first steps.
    """
    state.t += 1
    if len(ids) == 0:
        return
    lr_eff = cfg.lr * math.exp(-cfg.decay * state.t)
    g = np.clip(grad, -cfg.clip, cfg.clip)
    state.count[ids] += 1
    n = state.count[ids][:, None].astype(np.float64)
    state.m[ids] = ADAM_BETA1 * state.m[ids] + (1.0 - ADAM_BETA1) * g
    state.v[ids] = ADAM_BETA2 * state.v[ids] + (1.0 - ADAM_BETA2) * g * g
    m_hat = state.m[ids] / (1.0 - ADAM_BETA1**n)
    v_hat = state.v[ids] / (1.0 - ADAM_BETA2**n)
    store.table[ids] -= lr_eff * m_hat / (np.sqrt(v_hat) + ADAM_EPS)


def adam_step(
    store: EmbeddingStore,
    state: AdamState,
    grad: Mapping[int, np.ndarray],
    cfg: TrainConfig,
) -> None:
    """adam_step_arrays over a sparse {symbol id: gradient vector} map."""
    ids = np.array(sorted(grad), dtype=np.int64)
    g = (
        np.stack([np.asarray(grad[int(i)], dtype=np.float64) for i in ids])
        if len(ids)
        else np.zeros((0, store.dim))
    )
    adam_step_arrays(store, state, ids, g, cfg)


def track_scores(
    store: EmbeddingStore,
    rules: Sequence[RuleInstance],
    relationships: Sequence[Relationship],
    data_predicates: Sequence[int],
) -> tuple[float, float]:
    """(rule score, unification score).

    Rule score: best decoding score among rules whose decoding matches an
    injected relationship, 0 if none. Unification score: best direct
    head-to-body-predicate unification over the relationships, i.e. the
    strength of the competing shortcut.
    """
    from .evaluation import decode_rule

    rule_score = 0.0
    for rule in rules:
        dec = decode_rule(rule, store, data_predicates)
        if any(matches_relationship(dec.head, dec.body, rel) for rel in relationships):
            rule_score = max(rule_score, dec.score)
    unification_score = 0.0
    for rel in relationships:
        for b in rel.body:
            unification_score = max(
                unification_score, math.exp(-pair_distance(store.table, rel.head, b))
            )
    return rule_score, unification_score


@dataclass
class SelectedBatch:
    """Flat arrays over every selected proof of a batch, in goal order then
    path/enumeration order within each goal."""

    goal_index: np.ndarray
    y: np.ndarray
    scores: np.ndarray
    a: np.ndarray
    b: np.ndarray
    dists: np.ndarray

    @classmethod
    def from_rows(cls, rows: list[tuple[int, int, float, int, int, float]]) -> "SelectedBatch":
        if not rows:
            z = np.zeros(0)
            zi = np.zeros(0, dtype=np.int64)
            return cls(zi, z, z, zi, zi, z)
        cols = list(zip(*rows))
        return cls(
            goal_index=np.array(cols[0], dtype=np.int64),
            y=np.array(cols[1], dtype=np.float64),
            scores=np.array(cols[2], dtype=np.float64),
            a=np.array(cols[3], dtype=np.int64),
            b=np.array(cols[4], dtype=np.int64),
            dists=np.array(cols[5], dtype=np.float64),
        )


class ReferenceEngine:
    """Proof selection via the materializing prover; used to cross-check the
    vectorized engine and for tiny interactive experiments."""

    def __init__(
        self,
        kb: KnowledgeBase,
        rules: Sequence[RuleInstance],
        store: EmbeddingStore,
        k_max: int | None,
    ) -> None:
        self.kb = kb
        self.rules = list(rules)
        self.store = store
        self.k_max = k_max

    def select_for_goals(self, goals: Sequence[tuple[Fact, int]], heuristic: Heuristic) -> SelectedBatch:
        table = self.store.table
        rows = []
        for gi, (goal, y) in enumerate(goals):
            proofs = enumerate_proofs(goal, self.kb, self.rules, table, self.k_max)
            for p in select_proof_set(proofs, heuristic):
                d = pair_distance(table, p.worst.left, p.worst.right)
                rows.append((gi, y, p.score, p.worst.left, p.worst.right, d))
        return SelectedBatch.from_rows(rows)

    def best_scores(self, goals: Sequence[Fact]) -> np.ndarray:
        table = self.store.table
        return np.array(
            [
                fact_score(enumerate_proofs(g, self.kb, self.rules, table, self.k_max))[0]
                for g in goals
            ]
        )


@dataclass
class TrainResult:
    store: EmbeddingStore
    rules: list[RuleInstance]
    trace: list[EpochTrace]
    corruption_skips: int


def train_run(
    bundle: DatasetBundle,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
    nudge_ratio: float | None = None,
    engine_cls=None,
) -> TrainResult:
    """One full training run on a dataset bundle.

    Instantiates cfg.n_rules rule instances from the dataset's template,
    initializes all embeddings, then runs cfg.epochs epochs of shuffled
    batches (batch_true_facts positives, each with one corruption per
    argument position) with one Adam step per batch.
    """
    cfg.validate()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    kb = bundle.kb_train
    interner = bundle.interner
    rules = instantiate_rules(interner, bundle.config.template, cfg.n_rules)
    store = init_embeddings(len(interner), cfg, rng)
    if nudge_ratio is not None:
        nudge_initialization(store, rules, bundle.relationships, nudge_ratio)
    adam = AdamState.zeros(len(interner), cfg.dim)

    if engine_cls is None:
        from .scoring import BatchScorer

        engine_cls = BatchScorer
    engine = engine_cls(kb, rules, store, cfg.k_max)

    facts = kb.facts
    n = len(facts)
    trace: list[EpochTrace] = []
    skips = 0
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        batch_losses = []
        for start in range(0, n, cfg.batch_true_facts):
            goals: list[tuple[Fact, int]] = []
            for i in perm[start : start + cfg.batch_true_facts]:
                fact = facts[int(i)]
                goals.append((fact, 1))
                corruptions = corrupt_training_fact(fact, kb, rng)
                skips += fact.order - len(corruptions)
                goals.extend((c, 0) for c in corruptions)
            sel = engine.select_for_goals(goals, cfg.heuristic)
            loss, ids, grad = pairwise_loss_grad_arrays(
                store.table, cfg.epsilon, sel.scores, sel.a, sel.b, sel.dists, sel.y
            )
            adam_step_arrays(store, adam, ids, grad, cfg)
            batch_losses.append(loss)
        rule_score, unif_score = track_scores(
            store, rules, bundle.relationships, kb.data_predicates
        )
        mean_loss = float(np.mean(batch_losses)) if batch_losses else 0.0
        trace.append(EpochTrace(epoch, rule_score, unif_score, mean_loss))

    return TrainResult(store=store, rules=rules, trace=trace, corruption_skips=skips)


def dump_model(interner: Interner, store: EmbeddingStore) -> str:
    """Model dump: one `symbol_name,kind,v1,...,vd` row per symbol."""
    lines = []
    for sym in range(len(interner)):
        name, kind = interner.resolve(sym)
        coords = ",".join(repr(float(x)) for x in store.table[sym])
        lines.append(f"{name},{kind},{coords}")
    return "\n".join(lines) + "\n"
