"""Explicit-connective instance extraction.

Scans tagged utterances left to right and returns the first candidate that
passes all four validity gates: a verb on each side, no punctuation right
after the connective, only "and"/"but" directly after a period, and no
"so" + adjective/adverb. At most one instance per utterance.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, replace
from typing import TextIO

from .corpus import ADJ, ADV, PUNCT, VERB, TagLexicon, Token, Utterance, tag
from .errors import DataFormatError
from .relations import INVENTORY

MASK = "____"

PERIOD = "."


@dataclass(frozen=True)
class ConnectiveInstance:
    """One extracted connective with its argument spans.

    Spans are half-open [start, end) token indices into ``tokens``; arg1 ends
    at ``conn_index`` and arg2 starts right after it.
    """

    id: str
    utterance_id: str
    source: str
    prompt: str | None
    tokens: tuple[str, ...]
    conn_index: int
    connective: str
    arg1: tuple[int, int]
    arg2: tuple[int, int]

    def arg1_tokens(self) -> tuple[str, ...]:
        return self.tokens[self.arg1[0] : self.arg1[1]]

    def arg2_tokens(self) -> tuple[str, ...]:
        return self.tokens[self.arg2[0] : self.arg2[1]]

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


def _arg1_start(tokens: Sequence[Token], before: int) -> int:
    """Index right after the last period strictly before ``before``."""
    for j in range(before - 1, -1, -1):
        if tokens[j].surface == PERIOD:
            return j + 1
    return 0


def _arg2_end(tokens: Sequence[Token], conn_index: int) -> int:
    """Index right after the next period, or the utterance end."""
    for j in range(conn_index + 1, len(tokens)):
        if tokens[j].surface == PERIOD:
            return j + 1
    return len(tokens)


def _valid_candidate(
    tokens: Sequence[Token], k: int
) -> tuple[tuple[int, int], tuple[int, int]] | None:
    """Apply the four gates to the candidate at index k.

    Returns (arg1, arg2) spans if every gate passes, else None.
    """
    if k == 0 or k == len(tokens) - 1:
        return None
    lower = tokens[k].lower
    after_period = tokens[k - 1].surface == PERIOD
    if after_period and lower not in ("and", "but"):
        return None
    if tokens[k + 1].tag == PUNCT:
        return None
    if lower == "so" and tokens[k + 1].tag in (ADJ, ADV):
        return None
    # After a period, arg1 reaches back past it to the previous sentence.
    start = _arg1_start(tokens, k - 1 if after_period else k)
    if start >= k:
        return None
    arg1 = (start, k)
    arg2 = (k + 1, _arg2_end(tokens, k))
    if not any(t.tag == VERB for t in tokens[arg1[0] : arg1[1]]):
        return None
    if not any(t.tag == VERB for t in tokens[arg2[0] : arg2[1]]):
        return None
    return arg1, arg2


def gates_pass(tokens: Sequence[Token], index: int) -> bool:
    """Whether the token at ``index`` could head a valid instance."""
    return _valid_candidate(tokens, index) is not None


def extract_instance(
    utterance: Utterance, inventory: Sequence[str] = INVENTORY
) -> ConnectiveInstance | None:
    """First valid connective instance in a tagged utterance, if any.

    A gate-rejected candidate does not stop the scan; later candidates are
    still considered. Raises ValueError when the utterance is untagged.
    """
    tokens = utterance.tokens
    if any(t.tag is None for t in tokens):
        raise ValueError(f"utterance {utterance.id!r} is not tagged")
    allowed = frozenset(inventory)
    for k, token in enumerate(tokens):
        if token.lower not in allowed:
            continue
        spans = _valid_candidate(tokens, k)
        if spans is None:
            continue
        return ConnectiveInstance(
            id="",
            utterance_id=utterance.id,
            source=utterance.source,
            prompt=utterance.prompt,
            tokens=tuple(t.surface for t in tokens),
            conn_index=k,
            connective=token.lower,
            arg1=spans[0],
            arg2=spans[1],
        )
    return None


def _ensure_tagged(utterance: Utterance, lexicon: TagLexicon) -> Utterance:
    if all(t.tag is not None for t in utterance.tokens):
        return utterance
    return replace(utterance, tokens=tag(utterance.tokens, lexicon))


def extract_all(
    utterances: Iterable[Utterance],
    lexicon: TagLexicon | None = None,
    inventory: Sequence[str] = INVENTORY,
) -> list[ConnectiveInstance]:
    """Extract from a corpus, tagging untagged utterances as needed.

    Instance ids are sequential in corpus order, so identical input yields
    an identical instance list.
    """
    lex = lexicon if lexicon is not None else TagLexicon.default()
    out: list[ConnectiveInstance] = []
    for utterance in utterances:
        instance = extract_instance(_ensure_tagged(utterance, lex), inventory)
        if instance is not None:
            out.append(replace(instance, id=f"i{len(out) + 1:06d}"))
    return out


def connective_rate(
    utterances: Iterable[Utterance],
    lexicon: TagLexicon | None = None,
    inventory: Sequence[str] = INVENTORY,
) -> float:
    """Fraction of utterances yielding an instance (0.0 on an empty corpus)."""
    lex = lexicon if lexicon is not None else TagLexicon.default()
    total = 0
    hits = 0
    for utterance in utterances:
        total += 1
        if extract_instance(_ensure_tagged(utterance, lex), inventory) is not None:
            hits += 1
    return hits / total if total else 0.0


def connective_distribution(
    instances: Sequence[ConnectiveInstance],
    inventory: Sequence[str] = INVENTORY,
) -> dict[str, float]:
    """Percentage of instances per connective, over the full inventory."""
    if not instances:
        raise ValueError("empty instance collection")
    counts = {c: 0 for c in inventory}
    for instance in instances:
        counts[instance.connective] += 1
    total = len(instances)
    return {c: 100.0 * n / total for c, n in counts.items()}


def render_distribution(distribution: Mapping[str, float]) -> str:
    """One connective per line, one-decimal percentages."""
    width = max(len(c) for c in distribution)
    lines = [f"{c:<{width}}  {pct:5.1f}" for c, pct in distribution.items()]
    return "\n".join(lines)


def mask_tokens(tokens: Sequence[str], conn_index: int) -> list[str]:
    """Copy of ``tokens`` with the connective slot replaced by the mask."""
    if not 0 <= conn_index < len(tokens):
        raise ValueError(f"conn_index {conn_index} out of bounds")
    out = list(tokens)
    out[conn_index] = MASK
    return out


def masked_text(instance: ConnectiveInstance) -> str:
    """Masked rendering from the instance's own token copy."""
    return " ".join(mask_tokens(instance.tokens, instance.conn_index))


def mask_instance(
    instance: ConnectiveInstance, utterances: Mapping[str, Utterance]
) -> str:
    """Masked rendering of the stored utterance the instance points at.

    Raises ValueError when the utterance id dangles or the instance does not
    line up with the stored tokens.
    """
    utterance = utterances.get(instance.utterance_id)
    if utterance is None:
        raise ValueError(f"unknown utterance id {instance.utterance_id!r}")
    tokens = utterance.tokens
    if not 0 <= instance.conn_index < len(tokens):
        raise ValueError(
            f"instance {instance.id!r}: conn_index {instance.conn_index} out of "
            f"bounds for utterance {instance.utterance_id!r}"
        )
    if tokens[instance.conn_index].lower != instance.connective:
        raise ValueError(
            f"instance {instance.id!r}: utterance token "
            f"{tokens[instance.conn_index].surface!r} does not match connective "
            f"{instance.connective!r}"
        )
    return " ".join(mask_tokens([t.surface for t in tokens], instance.conn_index))


def instance_to_record(instance: ConnectiveInstance) -> dict:
    return {
        "id": instance.id,
        "utterance_id": instance.utterance_id,
        "source": instance.source,
        "prompt": instance.prompt,
        "tokens": list(instance.tokens),
        "conn_index": instance.conn_index,
        "connective": instance.connective,
        "arg1": list(instance.arg1),
        "arg2": list(instance.arg2),
    }


def _span(value: object, field: str, line: int) -> tuple[int, int]:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        raise DataFormatError(f"{field} must be a [start, end] pair", line=line)
    return (value[0], value[1])


def instance_from_record(record: dict, line: int = 0) -> ConnectiveInstance:
    try:
        tokens = record["tokens"]
        instance = ConnectiveInstance(
            id=record["id"],
            utterance_id=record["utterance_id"],
            source=record["source"],
            prompt=record["prompt"],
            tokens=tuple(tokens),
            conn_index=record["conn_index"],
            connective=record["connective"],
            arg1=_span(record["arg1"], "arg1", line),
            arg2=_span(record["arg2"], "arg2", line),
        )
    except KeyError as exc:
        raise DataFormatError(f"missing field {exc.args[0]!r}", line=line) from None
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise DataFormatError("tokens must be a list of strings", line=line)
    k = instance.conn_index
    if not isinstance(k, int) or isinstance(k, bool) or not 0 <= k < len(tokens):
        raise DataFormatError("conn_index out of bounds", line=line)
    if not (0 <= instance.arg1[0] < instance.arg1[1] == k):
        raise DataFormatError("arg1 span inconsistent with conn_index", line=line)
    if not (k + 1 == instance.arg2[0] < instance.arg2[1] <= len(tokens)):
        raise DataFormatError("arg2 span inconsistent with conn_index", line=line)
    if (
        not isinstance(instance.connective, str)
        or tokens[k].lower() != instance.connective
    ):
        raise DataFormatError(
            "connective does not match the token at conn_index", line=line
        )
    return instance


def write_instances(instances: Iterable[ConnectiveInstance], fh: TextIO) -> None:
    for instance in instances:
        fh.write(json.dumps(instance_to_record(instance), ensure_ascii=False))
        fh.write("\n")


def read_instances(fh: TextIO) -> list[ConnectiveInstance]:
    out: list[ConnectiveInstance] = []
    for lineno, raw in enumerate(fh, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"bad JSON: {exc.msg}", line=lineno) from None
        if not isinstance(record, dict):
            raise DataFormatError("record must be a JSON object", line=lineno)
        out.append(instance_from_record(record, line=lineno))
    return out
