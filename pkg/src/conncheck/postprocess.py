"""Connective repair: mask, predict, replace or flag, and compare.

fix_instance applies one predicted label to one instance; a NONE prediction
flags the sentence incoherent instead of rewriting it.  compare_systems
reports stratified macro-F1 and accuracy for the original vs. repaired
connectives, with significance stars, plus the three changed-connective
matrices.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import TextIO

from .annotate import AnnotationSummary
from .assess import (
    ConfusionMatrix,
    LabeledPair,
    SignificanceResult,
    consistency,
    exact_binomial_test,
    paired_bootstrap_test,
    paired_outcomes,
    pairs_macro_f1,
)
from .corpus import TagLexicon, tag, tokenize
from .errors import DataFormatError
from .extract import ConnectiveInstance, gates_pass
from .predict import NONE_LABEL
from .relations import CORE_RELATIONS, INVENTORY, relations_of, resolve_relation

ACTIONS = ("unchanged", "replaced", "flagged_incoherent")
POLICIES = ("flag", "drop", "keep-original")


@dataclass(frozen=True)
class FixResult:
    """Outcome of repairing one instance.

    text is None exactly when the prediction was NONE (flagged); otherwise
    it differs from the original only at the connective token.
    """

    instance_id: str
    original: str
    predicted: str
    action: str
    text: str | None


@dataclass(frozen=True)
class FixReport:
    counts: dict[str, int]
    none_rate: float
    relation_changes: ConfusionMatrix
    gate_violations: tuple[str, ...]

    def to_record(self) -> dict:
        return {
            "counts": dict(self.counts),
            "none_rate": self.none_rate,
            "relation_changes": self.relation_changes.to_record(),
            "gate_violations": list(self.gate_violations),
        }


def _validate_instance(instance: ConnectiveInstance) -> None:
    n = len(instance.tokens)
    k = instance.conn_index
    if not 0 <= k < n:
        raise ValueError(f"instance {instance.id!r}: conn_index out of bounds")
    if instance.tokens[k].lower() != instance.connective:
        raise ValueError(
            f"instance {instance.id!r}: token {instance.tokens[k]!r} does not "
            f"match connective {instance.connective!r}"
        )
    if instance.arg1[1] != k or instance.arg2[0] != k + 1:
        raise ValueError(f"instance {instance.id!r}: spans do not abut the connective")
    if not 0 <= instance.arg1[0] < instance.arg1[1]:
        raise ValueError(f"instance {instance.id!r}: empty or invalid arg1")
    if not instance.arg2[0] < instance.arg2[1] <= n:
        raise ValueError(f"instance {instance.id!r}: empty or invalid arg2")


def _render_connective(instance: ConnectiveInstance, label: str) -> str:
    # Sentence-initial connectives are capitalized, others lowercased.
    k = instance.conn_index
    if k == 0 or instance.tokens[k - 1] == ".":
        return label.capitalize()
    return label


def fix_instance(instance: ConnectiveInstance, predictor) -> FixResult:
    """Predict on the argument pair and apply the replacement rules.

    predictor exposes predict_one(arg1, arg2) -> Prediction.  Predictor
    failures propagate tagged with the instance id.
    """
    _validate_instance(instance)
    try:
        prediction = predictor.predict_one(
            instance.arg1_tokens(), instance.arg2_tokens()
        )
    except Exception as exc:
        raise RuntimeError(
            f"predictor failed on instance {instance.id!r}: {exc}"
        ) from exc
    label = prediction.label
    if label == NONE_LABEL:
        return FixResult(instance.id, instance.connective, label, "flagged_incoherent", None)
    if label not in INVENTORY:
        raise ValueError(
            f"predictor returned unknown label {label!r} on instance {instance.id!r}"
        )
    if label == instance.connective:
        return FixResult(instance.id, instance.connective, label, "unchanged", instance.text)
    tokens = list(instance.tokens)
    tokens[instance.conn_index] = _render_connective(instance, label)
    return FixResult(instance.id, instance.connective, label, "replaced", " ".join(tokens))


def _closure_violation(
    result: FixResult, instance: ConnectiveInstance, lexicon: TagLexicon
) -> bool:
    """True when the replacement breaks an extraction gate at its position."""
    tokens = tag(tokenize(result.text), lexicon)
    return not gates_pass(tokens, instance.conn_index)


def fix_corpus(
    instances: Sequence[ConnectiveInstance],
    predictor,
    lexicon: TagLexicon | None = None,
) -> tuple[list[FixResult], FixReport]:
    """Repair every instance and aggregate the report.

    The report covers all processed instances regardless of any output
    policy; replaced sentences are re-checked against the extraction gates
    and violations listed rather than suppressed.
    """
    lex = lexicon if lexicon is not None else TagLexicon.default()
    results: list[FixResult] = []
    violations: list[str] = []
    changes: list[tuple[str, str]] = []
    counts = {action: 0 for action in ACTIONS}
    for instance in instances:
        result = fix_instance(instance, predictor)
        results.append(result)
        counts[result.action] += 1
        if result.action == "replaced":
            changes.append(
                (
                    resolve_relation(result.original).value,
                    resolve_relation(result.predicted).value,
                )
            )
            if _closure_violation(result, instance, lex):
                violations.append(result.instance_id)
    total = len(results)
    none_rate = counts["flagged_incoherent"] / total if total else 0.0
    present = {r for pair in changes for r in pair}
    labels = [r.value for r in CORE_RELATIONS if r.value in present]
    report = FixReport(
        counts=counts,
        none_rate=none_rate,
        relation_changes=ConfusionMatrix.from_label_pairs(changes, labels),
        gate_violations=tuple(violations),
    )
    return results, report


def render_fix_report(report: FixReport) -> str:
    lines = [f"{action:<20} {report.counts[action]}" for action in ACTIONS]
    lines.append(f"{'NONE rate':<20} {100.0 * report.none_rate:.1f}%")
    if report.gate_violations:
        joined = ", ".join(report.gate_violations)
        lines.append(f"gate violations      {joined}")
    else:
        lines.append("gate violations      none")
    if report.relation_changes.labels:
        lines.append("")
        lines.append("relation changes (rows original, columns predicted):")
        lines.append(report.relation_changes.render())
    return "\n".join(lines)


# --- fixed-instances JSONL ----------------------------------------------------


def fixed_records(
    results: Sequence[FixResult],
    policy: str,
    instances: Mapping[str, ConnectiveInstance],
) -> list[dict]:
    """Downstream file records with the flagged-instance policy applied.

    flag emits flagged records with a null text; drop omits them;
    keep-original emits them carrying the unmodified sentence.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    out = []
    for result in results:
        text = result.text
        if result.action == "flagged_incoherent":
            if policy == "drop":
                continue
            if policy == "keep-original":
                instance = instances.get(result.instance_id)
                if instance is None:
                    raise ValueError(f"unknown instance id {result.instance_id!r}")
                text = instance.text
        out.append(
            {
                "instance_id": result.instance_id,
                "original": result.original,
                "predicted": result.predicted,
                "action": result.action,
                "text": text,
            }
        )
    return out


def write_fixed(records: Iterable[dict], fh: TextIO) -> None:
    for record in records:
        fh.write(json.dumps(record, ensure_ascii=False))
        fh.write("\n")


def read_fixed(fh: TextIO) -> list[FixResult]:
    out: list[FixResult] = []
    for lineno, raw in enumerate(fh, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"bad JSON: {exc.msg}", line=lineno) from None
        try:
            result = FixResult(
                instance_id=record["instance_id"],
                original=record["original"],
                predicted=record["predicted"],
                action=record["action"],
                text=record["text"],
            )
        except KeyError as exc:
            raise DataFormatError(
                f"missing field {exc.args[0]!r}", line=lineno
            ) from None
        if result.action not in ACTIONS:
            raise DataFormatError(f"unknown action {result.action!r}", line=lineno)
        out.append(result)
    return out


# --- system comparison --------------------------------------------------------


@dataclass(frozen=True)
class ComparisonRow:
    min_agree: int
    original: float | None
    fixed: float | None
    significance: SignificanceResult | None

    def to_record(self) -> dict:
        return {
            "min_agree": self.min_agree,
            "original": self.original,
            "fixed": self.fixed,
            "p_value": self.significance.p_value if self.significance else None,
            "test": self.significance.test if self.significance else None,
            "significant": (
                self.significance.p_value < 0.05 if self.significance else False
            ),
        }


@dataclass(frozen=True)
class ComparisonReport:
    macro_f1_rows: tuple[ComparisonRow, ...]
    accuracy_rows: tuple[ComparisonRow, ...]
    changed: ConfusionMatrix
    fixed_right: ConfusionMatrix
    fixed_wrong: ConfusionMatrix
    notes: tuple[str, ...]

    def to_record(self) -> dict:
        return {
            "macro_f1": [row.to_record() for row in self.macro_f1_rows],
            "accuracy": [row.to_record() for row in self.accuracy_rows],
            "matrices": {
                "changed": self.changed.to_record(),
                "fixed_right": self.fixed_right.to_record(),
                "fixed_wrong": self.fixed_wrong.to_record(),
            },
            "notes": list(self.notes),
        }


_NOTES = (
    "macro-F1 averages per-class F1 over classes present in gold or predictions",
    "accuracy at a threshold credits any relation reaching that many votes",
    "bootstrap p is one-sided in the direction of the observed improvement",
    "binomial test is the two-sided exact sign test on discordant pairs",
    "matrices (b)/(c) judge correctness against >=3-vote majorities",
    "alpha and strata treat the none category as a full relation class",
)


def _system_pairs(
    summaries: Sequence[AnnotationSummary], connectives: Mapping[str, str]
) -> list[LabeledPair]:
    out = []
    for s in summaries:
        connective = connectives[s.instance_id]
        out.append(
            LabeledPair(
                instance_id=s.instance_id,
                gold=s.majority,
                system_connective=connective,
                system_relations=relations_of(connective),
                agreement_level=s.agreement_level,
                counts=dict(s.counts),
            )
        )
    return out


def _f1_population(pairs: Sequence[LabeledPair], min_agree: int) -> list[LabeledPair]:
    return [
        p
        for p in pairs
        if p.agreement_level >= min_agree and p.gold in CORE_RELATIONS
    ]


def compare_systems(
    summaries: Sequence[AnnotationSummary],
    original: Mapping[str, str],
    fixed: Mapping[str, str],
    seed: int,
    resamples: int = 1000,
) -> ComparisonReport:
    """Stratified comparison of original vs. repaired connectives.

    Both mappings must cover every summarized instance (flagged instances
    are excluded upstream by the fix policy).  Raises ValueError listing the
    missing ids on a coverage gap.
    """
    missing_original = [s.instance_id for s in summaries if s.instance_id not in original]
    missing_fixed = [s.instance_id for s in summaries if s.instance_id not in fixed]
    if missing_original or missing_fixed:
        raise ValueError(
            "coverage mismatch: "
            f"missing from original {missing_original!r}, "
            f"missing from fixed {missing_fixed!r}"
        )
    pairs_original = _system_pairs(summaries, original)
    pairs_fixed = _system_pairs(summaries, fixed)

    f1_rows = []
    for n in (4, 3):
        population_original = _f1_population(pairs_original, n)
        population_fixed = _f1_population(pairs_fixed, n)
        value_original = pairs_macro_f1(population_original, n)
        value_fixed = pairs_macro_f1(population_fixed, n)
        significance = None
        if population_original:
            significance = paired_bootstrap_test(
                population_original,
                population_fixed,
                "macro_f1",
                resamples=resamples,
                seed=seed,
                min_agree=n,
            )
        f1_rows.append(ComparisonRow(n, value_original, value_fixed, significance))

    accuracy_rows = []
    for n in (4, 3, 2):
        population_original = [p for p in pairs_original if p.agreement_level >= n]
        population_fixed = [p for p in pairs_fixed if p.agreement_level >= n]
        value_original = consistency(population_original, n)
        value_fixed = consistency(population_fixed, n)
        significance = None
        if population_original:
            outcomes = paired_outcomes(population_original, population_fixed, n)
            significance = exact_binomial_test(outcomes)
        accuracy_rows.append(
            ComparisonRow(n, value_original, value_fixed, significance)
        )

    correct = {}
    for side, pairs in (("original", pairs_original), ("fixed", pairs_fixed)):
        majority3 = {}
        for p in pairs:
            if p.agreement_level >= 3 and p.gold is not None:
                majority3[p.instance_id] = (
                    p.gold in p.system_relations
                )
        correct[side] = majority3

    changed_pairs: list[tuple[str, str]] = []
    right_pairs: list[tuple[str, str]] = []
    wrong_pairs: list[tuple[str, str]] = []
    for s in summaries:
        before = original[s.instance_id]
        after = fixed[s.instance_id]
        if before == after:
            continue
        changed_pairs.append((before, after))
        was_right = correct["original"].get(s.instance_id)
        now_right = correct["fixed"].get(s.instance_id)
        if was_right is None or now_right is None:
            continue
        if not was_right and now_right:
            right_pairs.append((before, after))
        elif was_right and not now_right:
            wrong_pairs.append((before, after))

    present = {c for pair in changed_pairs for c in pair}
    labels = [c for c in INVENTORY if c in present]
    return ComparisonReport(
        macro_f1_rows=tuple(f1_rows),
        accuracy_rows=tuple(accuracy_rows),
        changed=ConfusionMatrix.from_label_pairs(changed_pairs, labels),
        fixed_right=ConfusionMatrix.from_label_pairs(right_pairs, labels),
        fixed_wrong=ConfusionMatrix.from_label_pairs(wrong_pairs, labels),
        notes=_NOTES,
    )


def _render_rows(
    rows: Sequence[ComparisonRow], fmt: str, title: str, star_note: str
) -> list[str]:
    lines = [f"{title}; (*) p<0.05, {star_note}", f"{'':>5} {'original':>9} {'fixed':>9}"]
    for row in rows:
        cells = []
        for value in (row.original, row.fixed):
            cells.append(f"{value:{fmt}}" if value is not None else "n/a")
        star = (
            "*"
            if row.significance is not None and row.significance.p_value < 0.05
            else ""
        )
        lines.append(f">={row.min_agree:<3} {cells[0]:>9} {cells[1] + star:>10}")
    return lines


def render_comparison(report: ComparisonReport) -> str:
    lines = _render_rows(
        report.macro_f1_rows,
        ".3f",
        "macro-F1 over the four relation types",
        "paired bootstrap",
    )
    lines.append("")
    lines += _render_rows(
        report.accuracy_rows, ".1f", "accuracy (%)", "exact binomial"
    )
    for title, matrix in (
        ("changed connectives (rows original, columns predicted)", report.changed),
        ("originally wrong, prediction right", report.fixed_right),
        ("originally right, prediction wrong", report.fixed_wrong),
    ):
        lines.append("")
        lines.append(f"{title}:")
        lines.append(matrix.render() if matrix.labels else "(empty)")
    return "\n".join(lines)
