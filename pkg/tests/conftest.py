import numpy as np
import pytest

from ntplab.datagen import DatasetBundle, GenConfig, generate_dataset
from ntplab.logic import (
    CONSTANT,
    DATA_PREDICATE,
    Fact,
    Interner,
    KnowledgeBase,
    Relationship,
    RuleTemplate,
)
from ntplab.trainer import TrainConfig, init_embeddings, instantiate_rules


def make_kb(pred_names, const_names, facts, order=1):
    """Hand-built kb: facts as (pred_name, arg_names...) tuples."""
    interner = Interner()
    preds = {p: interner.intern(p, DATA_PREDICATE) for p in pred_names}
    consts = {c: interner.intern(c, CONSTANT) for c in const_names}
    kb = KnowledgeBase(
        interner,
        list(consts.values()),
        list(preds.values()),
        {p: order for p in preds.values()},
    )
    for pname, *args in facts:
        kb.add_fact(Fact(preds[pname], tuple(consts[a] for a in args)))
    return kb, preds, consts


def small_bundle(seed=0, size=1, order=1, n_c=12, n_p=4, p_b=0.5, test_fraction=0.1):
    cfg = GenConfig(
        n_c=n_c, n_p=n_p, p_b=p_b, p_r=1.0, n_rel=1,
        template=RuleTemplate(size, order), seed=seed,
    )
    return generate_dataset(cfg, test_fraction)


def small_store(bundle_or_n, dim=6, scale=0.3, seed=1, n_rules=0, template=None):
    """Embeddings (and optionally rules) for a bundle or a symbol count."""
    rng = np.random.default_rng(seed)
    cfg = TrainConfig(dim=dim, init_scale=scale, seed=seed)
    if isinstance(bundle_or_n, int):
        return init_embeddings(bundle_or_n, cfg, rng)
    bundle = bundle_or_n
    rules = (
        instantiate_rules(bundle.interner, template or bundle.config.template, n_rules)
        if n_rules
        else []
    )
    store = init_embeddings(len(bundle.interner), cfg, rng)
    return store, rules


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
