"""Soft-unification theorem proving lab.

Generates synthetic relational datasets with injected ground-truth
relationships, trains embedding-based provers with winner-takes-all or
exploration-heuristic credit assignment, and evaluates rule learning and
fact prediction.
"""

from .logic import (
    CONSTANT,
    DATA_PREDICATE,
    RULE_PREDICATE,
    Fact,
    Interner,
    KnowledgeBase,
    Relationship,
    RuleInstance,
    RuleTemplate,
    matches_relationship,
)
from .datagen import (
    DatasetBundle,
    GenConfig,
    GenConfigError,
    corrupt_training_fact,
    enumerate_test_corruptions,
    generate_dataset,
    identify_active_facts,
)
from .prover import Proof, ProofPath, Unification, enumerate_proofs, fact_score, unification_score
from .trainer import (
    AdamState,
    EmbeddingStore,
    EpochTrace,
    Heuristic,
    TrainConfig,
    TrainResult,
    adam_step,
    init_embeddings,
    loss_and_gradient,
    nudge_initialization,
    select_proof_set,
    track_scores,
    train_run,
)
from .evaluation import (
    DecodedRule,
    EvalError,
    RunMetrics,
    decode_rule,
    evaluate_run,
    mrr,
    pr_auc,
    recall,
    roc_auc_duplicated,
)

__version__ = "0.1.0"
