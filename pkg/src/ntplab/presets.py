"""Bundled experiment presets.

One preset per reported table row: the main ablations (data size,
relationship type, predicate count), the initialization diagnostic, the
exploration heuristics, plus the supplement sweeps (rule count, rule
probability, relationship count, k_max). Use them as `--config
preset:<name>`; `ntplab --list-presets` prints the registry.
"""

from __future__ import annotations

from dataclasses import replace

from .config import ExperimentConfig
from .datagen import GenConfig
from .logic import RuleTemplate
from .trainer import Heuristic, TrainConfig

DEFAULT_SEED = 2024

# (size, order) -> main-experiment generation parameters; binary datasets
# use fewer constants and a lower base probability to stay tractable
BODY_PARAMS = {
    (1, 1): dict(n_c=200, p_b=0.5),
    (1, 2): dict(n_c=60, p_b=0.25),
    (2, 1): dict(n_c=400, p_b=0.5),
    (2, 2): dict(n_c=60, p_b=0.25),
    (3, 1): dict(n_c=800, p_b=0.5),
}

_ORDER_NAME = {1: "unary", 2: "binary"}

_HEURISTICS = {
    "vanilla": Heuristic("best_only"),
    "top2": Heuristic("top_k", 2),
    "allpath": Heuristic("all_path"),
    "top2allpath": Heuristic("top_k_all_path", 2),
    "top3allpath": Heuristic("top_k_all_path", 3),
}


def _preset(
    size: int,
    order: int,
    heuristic: Heuristic = Heuristic("best_only"),
    *,
    n_c: int | None = None,
    n_p: int = 5,
    p_b: float | None = None,
    p_r: float = 1.0,
    n_rel: int = 1,
    runs: int = 50,
    n_rules: int = 3,
    k_max: int | None = 10,
    seed: int = DEFAULT_SEED,
) -> ExperimentConfig:
    base = BODY_PARAMS[(size, order)]
    template = RuleTemplate(size=size, order=order)
    gen = GenConfig(
        n_c=base["n_c"] if n_c is None else n_c,
        n_p=n_p,
        p_b=base["p_b"] if p_b is None else p_b,
        p_r=p_r,
        n_rel=n_rel,
        template=template,
        seed=seed,
    )
    train = TrainConfig(heuristic=heuristic, n_rules=n_rules, k_max=k_max, seed=seed)
    return ExperimentConfig(gen=gen, train=train, runs=runs, seed=seed)


def _build() -> dict[str, ExperimentConfig]:
    presets: dict[str, ExperimentConfig] = {}

    # data-size ablation (constants sweep), base model and best heuristic
    for n_c in (50, 100, 200, 800):
        for size in (1, 2):
            presets[f"constants_size{size}_unary_nc{n_c}"] = _preset(size, 1, n_c=n_c)
            presets[f"constants_size{size}_unary_nc{n_c}_top2allpath"] = _preset(
                size, 1, _HEURISTICS["top2allpath"], n_c=n_c
            )

    # relationship-type ablation, base model
    for size, order in BODY_PARAMS:
        presets[f"base_size{size}_{_ORDER_NAME[order]}"] = _preset(size, order)
    for n_p in (3, 10):
        presets[f"base_size1_unary_np{n_p}"] = _preset(1, 1, n_p=n_p)

    # exploration heuristics
    for size, order in BODY_PARAMS:
        for hname in ("top2", "allpath", "top2allpath"):
            presets[f"explore_size{size}_{_ORDER_NAME[order]}_{hname}"] = _preset(
                size, order, _HEURISTICS[hname]
            )
    presets["explore_size3_unary_top3allpath"] = _preset(3, 1, _HEURISTICS["top3allpath"])

    # initialization-nudge diagnostic (ratio list lives in nudge_ratios)
    for size in (1, 2):
        presets[f"diagnose_size{size}_unary"] = _preset(size, 1)

    # supplement: rule count
    for size in (1, 2):
        for n_rules in (3, 5, 10, 20, 50):
            presets[f"rules_size{size}_unary_{n_rules}"] = _preset(size, 1, n_rules=n_rules)

    # supplement: relationship probability
    for size in (1, 2):
        for hname in ("vanilla", "top2allpath"):
            for p_r in (1.0, 0.9, 0.8, 0.7):
                presets[f"ruleprob_size{size}_unary_{hname}_pr{p_r}"] = _preset(
                    size, 1, _HEURISTICS[hname], p_r=p_r
                )

    # supplement: relationship count (needs headroom for disjoint bodies)
    for size in (1, 2):
        for hname in ("vanilla", "top2allpath"):
            for n_rel in (1, 2):
                presets[f"relcount_size{size}_unary_{hname}_nrel{n_rel}"] = _preset(
                    size, 1, _HEURISTICS[hname], n_rel=n_rel
                )

    # supplement: k_max pruning
    for hname in ("vanilla", "top2allpath"):
        for k_max, kname in ((10, "10"), (20, "20"), (None, "inf")):
            presets[f"kmax_size2_unary_{hname}_{kname}"] = _preset(
                2, 1, _HEURISTICS[hname], k_max=k_max
            )

    # small, fast preset for smoke tests and determinism checks
    presets["smoke_size1_unary"] = replace(
        _preset(1, 1, n_c=50, runs=4, seed=99),
        train=replace(_preset(1, 1).train, epochs=8, seed=99),
        nudge_ratios=(1.0, 0.5),
    )

    for cfg in presets.values():
        cfg.validate()
    return presets


PRESETS = _build()


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> ExperimentConfig:
    from .config import ConfigError

    if name not in PRESETS:
        raise ConfigError(
            f"unknown preset {name!r}; `ntplab --list-presets` shows the registry"
        )
    return PRESETS[name]
