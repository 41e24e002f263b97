"""Experiment configuration files.

Line-oriented `key = value` text with one section per module:

    [datagen]
    n_c = 200
    rule_size = 1
    order = 1

    [trainer]
    heuristic = top_k_all_path(2)

    [experiment]
    runs = 50
    seed = 2024

Every default is overridable; unknown sections or keys are hard errors so
sweep typos cannot pass silently.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace

from .datagen import GenConfig
from .logic import RuleTemplate
from .trainer import Heuristic, TrainConfig


class ConfigError(ValueError):
    """Invalid configuration file or field."""


DEFAULT_NUDGE_RATIOS = (1.0, 0.9, 0.75, 0.5)


@dataclass(frozen=True)
class ExperimentConfig:
    gen: GenConfig
    train: TrainConfig
    runs: int = 50
    seed: int = 2024
    test_fraction: float = 0.05
    nudge_ratio: float | None = None
    nudge_ratios: tuple[float, ...] = DEFAULT_NUDGE_RATIOS
    dump_models: bool = False

    def validate(self) -> None:
        if self.runs < 1:
            raise ConfigError(f"experiment.runs must be >= 1, got {self.runs}")
        if not (0.0 <= self.test_fraction < 1.0):
            raise ConfigError(
                f"datagen.test_fraction must be in [0,1), got {self.test_fraction}"
            )
        if self.nudge_ratio is not None and not (0.0 < self.nudge_ratio <= 1.0):
            raise ConfigError(
                f"experiment.nudge_ratio must be in (0,1], got {self.nudge_ratio}"
            )
        for r in self.nudge_ratios:
            if not (0.0 < r <= 1.0):
                raise ConfigError(f"experiment.nudge_ratios entries must be in (0,1], got {r}")
        try:
            self.gen.validate()
            self.train.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed, gen=replace(self.gen, seed=seed))


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected an integer, got {raw!r}") from None


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: expected a number, got {raw!r}") from None


def _parse_bool(section: str, key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"{section}.{key}: expected a boolean, got {raw!r}")


def _parse_k_max(raw: str) -> int | None:
    low = raw.strip().lower()
    if low in ("inf", "infinite", "none"):
        return None
    return _parse_int("trainer", "k_max", raw)


_DATAGEN_KEYS = {"n_c", "n_p", "p_b", "p_r", "n_rel", "rule_size", "order", "test_fraction"}
_TRAINER_KEYS = {
    "dim", "init_scale", "lr", "clip", "decay", "epochs", "batch_true_facts",
    "n_rules", "heuristic", "k_max", "epsilon",
}
_EXPERIMENT_KEYS = {"runs", "seed", "nudge_ratio", "nudge_ratios", "dump_models"}
_SECTIONS = {"datagen": _DATAGEN_KEYS, "trainer": _TRAINER_KEYS, "experiment": _EXPERIMENT_KEYS}


def parse_config(text: str) -> ExperimentConfig:
    """Parse config text into a validated ExperimentConfig."""
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",), comment_prefixes=("#", ";")
    )
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc

    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        for key in parser[section]:
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {section}.{key}")

    def get(section: str, key: str) -> str | None:
        return parser.get(section, key, fallback=None)

    size = _parse_int("datagen", "rule_size", get("datagen", "rule_size") or "1")
    order = _parse_int("datagen", "order", get("datagen", "order") or "1")
    try:
        template = RuleTemplate(size=size, order=order)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    seed = _parse_int("experiment", "seed", get("experiment", "seed") or "2024")
    gen = GenConfig(
        n_c=_parse_int("datagen", "n_c", get("datagen", "n_c") or "200"),
        n_p=_parse_int("datagen", "n_p", get("datagen", "n_p") or "5"),
        p_b=_parse_float("datagen", "p_b", get("datagen", "p_b") or "0.5"),
        p_r=_parse_float("datagen", "p_r", get("datagen", "p_r") or "1.0"),
        n_rel=_parse_int("datagen", "n_rel", get("datagen", "n_rel") or "1"),
        template=template,
        seed=seed,
    )

    heuristic_raw = get("trainer", "heuristic") or "best_only"
    try:
        heuristic = Heuristic.parse(heuristic_raw)
    except ValueError as exc:
        raise ConfigError(f"trainer.heuristic: {exc}") from exc

    train = TrainConfig(
        dim=_parse_int("trainer", "dim", get("trainer", "dim") or "20"),
        init_scale=_parse_float("trainer", "init_scale", get("trainer", "init_scale") or "0.3"),
        lr=_parse_float("trainer", "lr", get("trainer", "lr") or "1e-3"),
        clip=_parse_float("trainer", "clip", get("trainer", "clip") or "5"),
        decay=_parse_float("trainer", "decay", get("trainer", "decay") or "3e-4"),
        epochs=_parse_int("trainer", "epochs", get("trainer", "epochs") or "50"),
        batch_true_facts=_parse_int(
            "trainer", "batch_true_facts", get("trainer", "batch_true_facts") or "10"
        ),
        n_rules=_parse_int("trainer", "n_rules", get("trainer", "n_rules") or "3"),
        heuristic=heuristic,
        k_max=_parse_k_max(get("trainer", "k_max") or "10"),
        epsilon=_parse_float("trainer", "epsilon", get("trainer", "epsilon") or "1e-7"),
        seed=seed,
    )

    nudge_raw = get("experiment", "nudge_ratio")
    ratios_raw = get("experiment", "nudge_ratios")
    if ratios_raw:
        try:
            ratios = tuple(float(x) for x in ratios_raw.split(",") if x.strip())
        except ValueError:
            raise ConfigError(
                f"experiment.nudge_ratios: expected comma-separated numbers, got {ratios_raw!r}"
            ) from None
    else:
        ratios = DEFAULT_NUDGE_RATIOS

    cfg = ExperimentConfig(
        gen=gen,
        train=train,
        runs=_parse_int("experiment", "runs", get("experiment", "runs") or "50"),
        seed=seed,
        test_fraction=_parse_float(
            "datagen", "test_fraction", get("datagen", "test_fraction") or "0.05"
        ),
        nudge_ratio=None if nudge_raw is None else _parse_float(
            "experiment", "nudge_ratio", nudge_raw
        ),
        nudge_ratios=ratios,
        dump_models=_parse_bool(
            "experiment", "dump_models", get("experiment", "dump_models") or "false"
        ),
    )
    cfg.validate()
    return cfg


def render_config(cfg: ExperimentConfig) -> str:
    """Canonical config text; parse_config(render_config(c)) == c."""
    k_max = "inf" if cfg.train.k_max is None else str(cfg.train.k_max)
    lines = [
        "[datagen]",
        f"n_c = {cfg.gen.n_c}",
        f"n_p = {cfg.gen.n_p}",
        f"p_b = {cfg.gen.p_b}",
        f"p_r = {cfg.gen.p_r}",
        f"n_rel = {cfg.gen.n_rel}",
        f"rule_size = {cfg.gen.template.size}",
        f"order = {cfg.gen.template.order}",
        f"test_fraction = {cfg.test_fraction}",
        "",
        "[trainer]",
        f"dim = {cfg.train.dim}",
        f"init_scale = {cfg.train.init_scale}",
        f"lr = {cfg.train.lr}",
        f"clip = {cfg.train.clip}",
        f"decay = {cfg.train.decay}",
        f"epochs = {cfg.train.epochs}",
        f"batch_true_facts = {cfg.train.batch_true_facts}",
        f"n_rules = {cfg.train.n_rules}",
        f"heuristic = {cfg.train.heuristic}",
        f"k_max = {k_max}",
        f"epsilon = {cfg.train.epsilon}",
        "",
        "[experiment]",
        f"runs = {cfg.runs}",
        f"seed = {cfg.seed}",
        f"nudge_ratios = {', '.join(str(r) for r in cfg.nudge_ratios)}",
        f"dump_models = {str(cfg.dump_models).lower()}",
    ]
    if cfg.nudge_ratio is not None:
        lines.append(f"nudge_ratio = {cfg.nudge_ratio}")
    return "\n".join(lines) + "\n"


def load_config(source: str) -> tuple[ExperimentConfig, str]:
    """Load from a file path or a `preset:<name>` reference; returns the
    config and its verbatim text (for echoing into run metadata)."""
    if source.startswith("preset:"):
        from .presets import get_preset

        cfg = get_preset(source[len("preset:") :])
        return cfg, render_config(cfg)
    try:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {source!r}: {exc}") from exc
    return parse_config(text), text
