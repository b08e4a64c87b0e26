"""Four-way relation taxonomy and the connective-to-relation mapping.

The mapping groups connectives into the four top-level relation classes.
Two connectives are ambiguous and map to two classes each: *since*
(contingency or temporal) and *while* (contrast or temporal).  Consistency
scoring credits an ambiguous connective if any of its classes matches.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path


class Relation(str, Enum):
    """Relation classes plus the no-relation outcome.

    Canonical order is definition order.  NO_RELATION is an annotation or
    prediction outcome only; no connective ever signals it.
    """

    CONTINGENCY = "contingency"
    CONTRAST = "contrast"
    TEMPORAL = "temporal"
    EXPANSION = "expansion"
    NO_RELATION = "none"

    @property
    def order(self) -> int:
        return _ORDER[self]


_ORDER = {r: i for i, r in enumerate(Relation)}

#: The four real relation classes, in canonical order.
CORE_RELATIONS = (
    Relation.CONTINGENCY,
    Relation.CONTRAST,
    Relation.TEMPORAL,
    Relation.EXPANSION,
)

#: All five annotation categories, in canonical order.
RELATIONS = CORE_RELATIONS + (Relation.NO_RELATION,)

#: Connective forms matched during extraction, alphabetical.
INVENTORY = (
    "after",
    "and",
    "because",
    "before",
    "but",
    "if",
    "since",
    "so",
    "though",
    "when",
    "while",
)

RELATION_MAP_VERSION = 1

_SINGLE = {
    "because": Relation.CONTINGENCY,
    "therefore": Relation.CONTINGENCY,
    "if": Relation.CONTINGENCY,
    "so": Relation.CONTINGENCY,
    "but": Relation.CONTRAST,
    "although": Relation.CONTRAST,
    "though": Relation.CONTRAST,
    "however": Relation.CONTRAST,
    "whereas": Relation.CONTRAST,
    "before": Relation.TEMPORAL,
    "after": Relation.TEMPORAL,
    "when": Relation.TEMPORAL,
    "and": Relation.EXPANSION,
    "in addition": Relation.EXPANSION,
}

#: connective -> set of relations it can signal (inventory plus anchor synonyms).
DEFAULT_RELATION_MAP: dict[str, frozenset[Relation]] = {
    **{c: frozenset((r,)) for c, r in _SINGLE.items()},
    "since": frozenset((Relation.CONTINGENCY, Relation.TEMPORAL)),
    "while": frozenset((Relation.CONTRAST, Relation.TEMPORAL)),
}

#: Connectives shown to annotators to anchor each option group, display order.
ANCHORS: dict[Relation, tuple[str, ...]] = {
    Relation.CONTINGENCY: ("because", "therefore", "if", "so", "since"),
    Relation.CONTRAST: ("but", "although", "though", "however", "whereas", "while"),
    Relation.TEMPORAL: ("before", "after", "when", "since", "while"),
    Relation.EXPANSION: ("and", "in addition"),
}


def relations_of(
    connective: str, mapping: dict[str, frozenset[Relation]] | None = None
) -> frozenset[Relation]:
    """Relations the connective can signal.  Never empty, never NO_RELATION."""
    mapping = DEFAULT_RELATION_MAP if mapping is None else mapping
    try:
        return mapping[connective.lower()]
    except KeyError:
        raise ValueError(f"unknown connective: {connective!r}") from None


def is_consistent(
    connective: str,
    relation: Relation,
    mapping: dict[str, frozenset[Relation]] | None = None,
) -> bool:
    """True iff the relation is one the connective can signal.

    NO_RELATION never matches: a sentence with an explicit connective is by
    definition inconsistent with a no-relation judgment.
    """
    signalled = relations_of(connective, mapping)
    if relation is Relation.NO_RELATION:
        return False
    return relation in signalled


def anchors_for(relation: Relation) -> tuple[str, ...]:
    """Anchor connectives shown to annotators for one option group."""
    if relation is Relation.NO_RELATION:
        raise ValueError("NO_RELATION has no anchor connectives")
    return ANCHORS[relation]


def resolve_relation(
    connective: str,
    gold: Relation | None = None,
    mapping: dict[str, frozenset[Relation]] | None = None,
) -> Relation:
    """Collapse a connective to a single relation.

    An ambiguous connective resolves to the gold relation when the gold is
    among its classes, otherwise to its first class in canonical order.  This
    never penalizes an ambiguous connective spuriously.
    """
    signalled = relations_of(connective, mapping)
    if gold is not None and gold in signalled:
        return gold
    return min(signalled, key=lambda r: r.order)


def load_relation_map(path: str | Path) -> dict[str, frozenset[Relation]]:
    """Load a research-variant mapping from a TSV of connective<TAB>relation rows."""
    grouped: dict[str, set[Relation]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}: line {lineno}: expected connective<TAB>relation")
            connective, name = parts[0].strip().lower(), parts[1].strip().lower()
            try:
                relation = Relation(name)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: unknown relation {name!r}") from None
            if relation is Relation.NO_RELATION:
                raise ValueError(f"{path}: line {lineno}: a connective cannot map to 'none'")
            grouped.setdefault(connective, set()).add(relation)
    if not grouped:
        raise ValueError(f"{path}: no mapping rows")
    return {c: frozenset(rs) for c, rs in grouped.items()}
