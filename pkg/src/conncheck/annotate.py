"""Relation judgments: collection, aggregation, and agreement.

Annotations live in an append-only CSV (instance_id,annotator_id,relation).
Aggregation produces per-instance vote summaries, agreement strata, majority
relation distributions, and nominal Krippendorff's alpha.
"""

from __future__ import annotations

import csv
import json
import os
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import TextIO

from .errors import DataFormatError, DegenerateDataError
from .extract import ConnectiveInstance, masked_text
from .relations import ANCHORS, CORE_RELATIONS, RELATIONS, Relation

CSV_HEADER = ("instance_id", "annotator_id", "relation")


@dataclass(frozen=True)
class Annotation:
    """One annotator's relation vote on one masked instance."""

    instance_id: str
    annotator_id: str
    relation: Relation


@dataclass(frozen=True)
class AnnotationSummary:
    """Vote counts for one instance.

    ``majority`` is set iff the top count is ≥3 and unique; its count then
    equals ``agreement_level``.
    """

    instance_id: str
    counts: dict[Relation, int]
    agreement_level: int
    majority: Relation | None

    @property
    def total_votes(self) -> int:
        return sum(self.counts.values())


def summarize(annotations: Sequence[Annotation]) -> AnnotationSummary:
    """Aggregate all votes for a single instance.

    Raises ValueError on an empty vote list, mixed instance ids, or a
    duplicate (instance, annotator) pair.
    """
    if not annotations:
        raise ValueError("no annotations to summarize")
    instance_id = annotations[0].instance_id
    seen: set[str] = set()
    counts = {r: 0 for r in RELATIONS}
    for a in annotations:
        if a.instance_id != instance_id:
            raise ValueError(
                f"mixed instance ids: {instance_id!r} and {a.instance_id!r}"
            )
        if a.annotator_id in seen:
            raise ValueError(
                f"duplicate vote by {a.annotator_id!r} on {instance_id!r}"
            )
        seen.add(a.annotator_id)
        counts[a.relation] += 1
    level = max(counts.values())
    top = [r for r, n in counts.items() if n == level]
    majority = top[0] if level >= 3 and len(top) == 1 else None
    return AnnotationSummary(instance_id, counts, level, majority)


def summarize_all(annotations: Iterable[Annotation]) -> list[AnnotationSummary]:
    """Group votes by instance (first-appearance order) and summarize each."""
    grouped: dict[str, list[Annotation]] = {}
    for a in annotations:
        grouped.setdefault(a.instance_id, []).append(a)
    return [summarize(votes) for votes in grouped.values()]


def agreement_strata(summaries: Sequence[AnnotationSummary]) -> dict[int, float]:
    """Percentage of instances whose majority is carried by exactly n votes.

    Keys are the levels 5, 4, 3; the remainder (no majority) is the gap
    to 100.  Raises ValueError on an empty summary list.
    """
    if not summaries:
        raise ValueError("no summaries")
    total = len(summaries)
    out: dict[int, float] = {}
    for level in (5, 4, 3):
        hits = sum(
            1
            for s in summaries
            if s.agreement_level == level and s.majority is not None
        )
        out[level] = 100.0 * hits / total
    return out


def relation_distribution(
    summaries: Sequence[AnnotationSummary],
) -> dict[Relation, float]:
    """Percentage per relation among majority-bearing instances."""
    majorities = [s.majority for s in summaries if s.majority is not None]
    if not majorities:
        raise ValueError("no majority-bearing instances")
    total = len(majorities)
    return {r: 100.0 * majorities.count(r) / total for r in RELATIONS}


def krippendorff_alpha(annotations: Iterable[Annotation]) -> float:
    """Nominal Krippendorff's alpha over the full annotation set.

    Coincidence-matrix formulation: a unit with m votes contributes its
    ordered vote pairs weighted 1/(m-1).  Units with fewer than two votes
    are excluded.  Exact rational arithmetic keeps fixture values precise.
    Raises DegenerateDataError when every vote is the same category, and
    ValueError with fewer than two usable units.
    """
    units: dict[str, list[Relation]] = {}
    for a in annotations:
        units.setdefault(a.instance_id, []).append(a.relation)
    usable = [votes for votes in units.values() if len(votes) >= 2]
    if len(usable) < 2:
        raise ValueError("need at least 2 instances with at least 2 votes each")
    # Row marginals of the coincidence matrix reduce to plain vote counts;
    # only the off-diagonal mass S_o carries the 1/(m-1) pair weights.
    totals: dict[Relation, int] = {}
    s_o = Fraction(0)
    n = 0
    for votes in usable:
        m = len(votes)
        n += m
        w = Fraction(1, m - 1)
        for i, v in enumerate(votes):
            totals[v] = totals.get(v, 0) + 1
            for j, u in enumerate(votes):
                if i != j and v != u:
                    s_o += w
    s_e = n * n - sum(t * t for t in totals.values())
    if s_e == 0:
        raise DegenerateDataError(
            "alpha undefined: every vote is the same category"
        )
    return float(1 - Fraction(n - 1) * s_o / s_e)


def adjudicate_export(
    summaries: Sequence[AnnotationSummary],
    instances: Mapping[str, ConnectiveInstance],
) -> list[dict]:
    """Records for instances lacking a majority, for manual review."""
    out = []
    for s in summaries:
        if s.majority is not None:
            continue
        instance = instances.get(s.instance_id)
        if instance is None:
            raise ValueError(f"unknown instance id {s.instance_id!r}")
        out.append(
            {
                "instance_id": s.instance_id,
                "prompt": instance.prompt,
                "text": masked_text(instance),
                "counts": {r.value: s.counts[r] for r in RELATIONS},
            }
        )
    return out


# --- annotation CSV ---------------------------------------------------------


def _parse_relation(text: str, line: int) -> Relation:
    try:
        return Relation(text)
    except ValueError:
        raise DataFormatError(f"unknown relation {text!r}", line=line) from None


def read_annotations(fh: TextIO) -> list[Annotation]:
    """Parse the annotation CSV, rejecting duplicate (instance, annotator) rows."""
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("empty annotation file", line=1) from None
    if tuple(header) != CSV_HEADER:
        raise DataFormatError(
            f"bad header {header!r}, expected {','.join(CSV_HEADER)}", line=1
        )
    out: list[Annotation] = []
    seen: set[tuple[str, str]] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise DataFormatError(f"expected 3 fields, got {len(row)}", line=lineno)
        key = (row[0], row[1])
        if key in seen:
            raise DataFormatError(
                f"duplicate vote by {row[1]!r} on {row[0]!r}", line=lineno
            )
        seen.add(key)
        out.append(Annotation(row[0], row[1], _parse_relation(row[2], lineno)))
    return out


def append_annotations(path: str, annotations: Iterable[Annotation]) -> None:
    """Append rows, creating the file with its header when absent."""
    new_file = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new_file:
            writer.writerow(CSV_HEADER)
        for a in annotations:
            writer.writerow((a.instance_id, a.annotator_id, a.relation.value))


# --- interactive session ----------------------------------------------------

_MENU_KEYS: dict[str, Relation] = {
    "1": Relation.CONTINGENCY,
    "2": Relation.CONTRAST,
    "3": Relation.TEMPORAL,
    "4": Relation.EXPANSION,
    "0": Relation.NO_RELATION,
}


def _render_menu() -> str:
    lines = []
    for key, relation in list(_MENU_KEYS.items())[:4]:
        anchors = ", ".join(ANCHORS[relation])
        lines.append(f"  [{key}] {relation.value} ({anchors})")
    lines.append("  [0] none (the two segments are not related)")
    lines.append("  [q] quit")
    return "\n".join(lines)


def run_annotation_session(
    instances: Sequence[ConnectiveInstance],
    annotator_id: str,
    path: str,
    input_fn: Callable[[str], str] = input,
    print_fn: Callable[[str], None] = print,
) -> list[Annotation]:
    """Prompt for one relation vote per instance; append to the CSV as we go.

    Instances this annotator already voted on are skipped, so an interrupted
    session resumes where it stopped.  Returns the new annotations.
    """
    done: set[str] = set()
    if os.path.exists(path) and os.path.getsize(path) > 0:
        with open(path, encoding="utf-8", newline="") as fh:
            for a in read_annotations(fh):
                if a.annotator_id == annotator_id:
                    done.add(a.instance_id)
    menu = _render_menu()
    new: list[Annotation] = []
    for instance in instances:
        if instance.id in done:
            continue
        print_fn("")
        if instance.prompt:
            print_fn(f"prompt: {instance.prompt}")
        print_fn(masked_text(instance))
        print_fn("Which relation fits the blank best?")
        print_fn(menu)
        while True:
            try:
                choice = input_fn("> ").strip().lower()
            except EOFError:
                choice = "q"
            if choice == "q":
                return new
            relation = _MENU_KEYS.get(choice)
            if relation is not None:
                break
            print_fn(f"invalid choice {choice!r}; enter 1-4, 0, or q")
        annotation = Annotation(instance.id, annotator_id, relation)
        append_annotations(path, [annotation])
        new.append(annotation)
    return new


# --- summary JSONL ----------------------------------------------------------


def summary_to_record(summary: AnnotationSummary) -> dict:
    return {
        "instance_id": summary.instance_id,
        "counts": {r.value: summary.counts[r] for r in RELATIONS},
        "level": summary.agreement_level,
        "majority": summary.majority.value if summary.majority else None,
    }


def summary_from_record(record: dict, line: int = 0) -> AnnotationSummary:
    try:
        raw_counts = record["counts"]
        counts = {r: int(raw_counts.get(r.value, 0)) for r in RELATIONS}
        majority = record["majority"]
        summary = AnnotationSummary(
            instance_id=record["instance_id"],
            counts=counts,
            agreement_level=int(record["level"]),
            majority=_parse_relation(majority, line) if majority else None,
        )
    except KeyError as exc:
        raise DataFormatError(f"missing field {exc.args[0]!r}", line=line) from None
    if summary.agreement_level != max(counts.values()):
        raise DataFormatError("level does not match counts", line=line)
    return summary


def write_summaries(summaries: Iterable[AnnotationSummary], fh: TextIO) -> None:
    for summary in summaries:
        fh.write(json.dumps(summary_to_record(summary), ensure_ascii=False))
        fh.write("\n")


def read_summaries(fh: TextIO) -> list[AnnotationSummary]:
    out: list[AnnotationSummary] = []
    for lineno, raw in enumerate(fh, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"bad JSON: {exc.msg}", line=lineno) from None
        out.append(summary_from_record(record, line=lineno))
    return out


def render_strata(strata: Mapping[int, float]) -> str:
    lines = [f"agreed by {n}  {strata[n]:5.1f}" for n in (5, 4, 3)]
    return "\n".join(lines)


def render_relation_distribution(distribution: Mapping[Relation, float]) -> str:
    """Majority-relation table; Expansion appears under its conjunction label."""
    label = {
        Relation.CONTINGENCY: "contingency",
        Relation.TEMPORAL: "temporal",
        Relation.CONTRAST: "contrast",
        Relation.EXPANSION: "conjunction",
        Relation.NO_RELATION: "no relation",
    }
    order = (
        Relation.CONTINGENCY,
        Relation.TEMPORAL,
        Relation.CONTRAST,
        Relation.EXPANSION,
        Relation.NO_RELATION,
    )
    return "\n".join(f"{label[r]:<12} {distribution[r]:5.1f}" for r in order)
