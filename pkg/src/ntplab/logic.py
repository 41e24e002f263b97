"""Symbols, facts, rule templates, and the ground knowledge base.

Symbols are interned to dense integer ids so that one embedding table row
per id can serve as the only trainable state. Three namespaces exist and
never collide: constants, data predicates, and rule predicates.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

CONSTANT = "constant"
DATA_PREDICATE = "data-predicate"
RULE_PREDICATE = "rule-predicate"

KINDS = (CONSTANT, DATA_PREDICATE, RULE_PREDICATE)


class Fact(NamedTuple):
    """A ground atom: predicate applied to 1 or 2 constants."""

    predicate: int
    args: tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.args)


class Interner:
    """Bidirectional (name, kind) <-> dense id map.

    Ids are assigned in interning order, never reused, and shared across
    kinds (a single counter), so the embedding table can be indexed by id
    directly.
    """

    def __init__(self) -> None:
        self._by_key: dict[tuple[str, str], int] = {}
        self._names: list[str] = []
        self._kinds: list[str] = []

    def intern(self, name: str, kind: str) -> int:
        if kind not in KINDS:
            raise ValueError(f"unknown symbol kind: {kind!r}")
        key = (name, kind)
        sym = self._by_key.get(key)
        if sym is None:
            sym = len(self._names)
            self._by_key[key] = sym
            self._names.append(name)
            self._kinds.append(kind)
        return sym

    def lookup(self, name: str, kind: str) -> int | None:
        return self._by_key.get((name, kind))

    def resolve(self, sym: int) -> tuple[str, str]:
        return self._names[sym], self._kinds[sym]

    def name(self, sym: int) -> str:
        return self._names[sym]

    def kind(self, sym: int) -> str:
        return self._kinds[sym]

    def ids_of_kind(self, kind: str) -> list[int]:
        return [i for i, k in enumerate(self._kinds) if k == kind]

    def __len__(self) -> int:
        return len(self._names)


@dataclass(frozen=True)
class RuleTemplate:
    """Schematic rule: one head atom and `size` body atoms, every atom over
    the same shared variable tuple of length `order`.

    Because all atoms share the variable tuple, unifying the head grounds
    the entire body; no substitution engine is needed.
    """

    size: int
    order: int

    def __post_init__(self) -> None:
        if self.size not in (1, 2, 3):
            raise ValueError(f"rule size must be in {{1,2,3}}, got {self.size}")
        if self.order not in (1, 2):
            raise ValueError(f"predicate order must be 1 or 2, got {self.order}")

    @property
    def slot_count(self) -> int:
        return self.size + 1


@dataclass(frozen=True)
class RuleInstance:
    """A template whose predicate slots are filled with fresh trainable
    rule-predicate symbols (head + one per body slot)."""

    template: RuleTemplate
    head: int
    body: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.body) != self.template.size:
            raise ValueError("rule instance body length must equal template size")
        if len({self.head, *self.body}) != self.template.size + 1:
            raise ValueError("rule instance predicates must be distinct")

    @property
    def slots(self) -> tuple[int, ...]:
        return (self.head, *self.body)


@dataclass(frozen=True)
class Relationship:
    """An injected ground-truth rule over data predicates."""

    head: int
    body: tuple[int, ...]
    template: RuleTemplate

    def __post_init__(self) -> None:
        if len(self.body) != self.template.size:
            raise ValueError("relationship body length must equal template size")
        if self.head in self.body or len(set(self.body)) != len(self.body):
            raise ValueError("relationship predicates must be distinct")


def matches_relationship(decoded_head: int, decoded_body: Iterable[int], rel: Relationship) -> bool:
    """True iff a decoding recovers the relationship.

    The body is compared as a multiset: bodies are conjunctions over shared
    variables, so slot order carries no meaning, but multiplicity does.
    """
    body = Counter(decoded_body)
    if sum(body.values()) != len(rel.body):
        return False
    return decoded_head == rel.head and body == Counter(rel.body)


class KnowledgeBase:
    """Ground facts with O(1) membership plus the symbol vocabulary.

    Immutable by convention after dataset construction; the prover and
    trainer only read it.
    """

    def __init__(
        self,
        interner: Interner,
        constants: Sequence[int],
        data_predicates: Sequence[int],
        pred_order: dict[int, int],
    ) -> None:
        self.interner = interner
        self.constants = list(constants)
        self.data_predicates = list(data_predicates)
        self.pred_order = dict(pred_order)
        self._const_set = set(self.constants)
        self._pred_set = set(self.data_predicates)
        self._facts: list[Fact] = []
        self._fact_set: set[Fact] = set()

    def _check_registered(self, fact: Fact) -> None:
        if fact.predicate not in self._pred_set:
            raise LookupError(f"unregistered predicate id {fact.predicate}")
        for a in fact.args:
            if a not in self._const_set:
                raise LookupError(f"unregistered constant id {a}")
        if len(fact.args) != self.pred_order[fact.predicate]:
            raise ValueError(
                f"arity mismatch: predicate expects {self.pred_order[fact.predicate]} args, "
                f"got {len(fact.args)}"
            )

    def add_fact(self, fact: Fact) -> bool:
        """Insert a fact; returns False if it was already present."""
        self._check_registered(fact)
        if fact in self._fact_set:
            return False
        self._fact_set.add(fact)
        self._facts.append(fact)
        return True

    def contains(self, fact: Fact) -> bool:
        self._check_registered(fact)
        return fact in self._fact_set

    @property
    def facts(self) -> list[Fact]:
        """Facts in insertion order (the prover's enumeration order)."""
        return self._facts

    def facts_of_order(self, order: int) -> list[Fact]:
        return [f for f in self._facts if len(f.args) == order]

    def __len__(self) -> int:
        return len(self._facts)

    def __contains__(self, fact: Fact) -> bool:
        return fact in self._fact_set


# --- fact-file format -------------------------------------------------------
#
# One fact per line, UTF-8: `P3(c17)` or `P1(c4,c60)`. `#` starts a comment.


def format_fact(interner: Interner, fact: Fact) -> str:
    args = ",".join(interner.name(a) for a in fact.args)
    return f"{interner.name(fact.predicate)}({args})"


def parse_fact_line(line: str) -> tuple[str, tuple[str, ...]] | None:
    """Parse one fact-file line into (predicate name, arg names).

    Returns None for blank and comment lines; raises ValueError on malformed
    input.
    """
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    if not text.endswith(")") or "(" not in text:
        raise ValueError(f"malformed fact line: {line!r}")
    name, _, rest = text.partition("(")
    name = name.strip()
    args = tuple(a.strip() for a in rest[:-1].split(","))
    if not name or any(not a for a in args) or len(args) not in (1, 2):
        raise ValueError(f"malformed fact line: {line!r}")
    return name, args


def write_fact_file(path, interner: Interner, facts: Iterable[Fact], header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(f"# {header}\n")
        for fact in facts:
            fh.write(format_fact(interner, fact) + "\n")


def read_fact_file(path, interner: Interner) -> list[Fact]:
    """Read facts, interning any unseen predicate or constant names."""
    facts = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parsed = parse_fact_line(line)
            if parsed is None:
                continue
            pname, argnames = parsed
            pred = interner.intern(pname, DATA_PREDICATE)
            args = tuple(interner.intern(a, CONSTANT) for a in argnames)
            facts.append(Fact(pred, args))
    return facts
