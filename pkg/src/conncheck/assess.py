"""Consistency metrics between system connectives and human relations.

A LabeledPair joins one instance's human majority (plus vote counts) with
the system's connective.  On top of that: stratified consistency accuracy,
macro-F1 over resolved relations, confusion matrices, an exact sign test,
and a paired bootstrap.  Ambiguous connectives get either-relation credit.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .annotate import AnnotationSummary
from .extract import ConnectiveInstance
from .relations import CORE_RELATIONS, RELATIONS, Relation, relations_of, resolve_relation


@dataclass(frozen=True)
class LabeledPair:
    """Human judgment vs. system connective for one instance.

    ``counts`` carries the raw vote distribution so low-agreement strata can
    credit any relation reaching the vote threshold, not just a majority.
    """

    instance_id: str
    gold: Relation | None
    system_connective: str
    system_relations: frozenset[Relation]
    agreement_level: int
    counts: Mapping[Relation, int] | None = None


@dataclass(frozen=True)
class SignificanceResult:
    test: str
    statistic: float
    p_value: float
    config: dict = field(default_factory=dict)


def pairs_from_summaries(
    summaries: Sequence[AnnotationSummary],
    instances: Mapping[str, ConnectiveInstance],
    strict: bool = False,
) -> list[LabeledPair]:
    """Join vote summaries with the instances they annotate.

    Summaries without a matching instance are skipped unless ``strict``.
    """
    out: list[LabeledPair] = []
    for s in summaries:
        instance = instances.get(s.instance_id)
        if instance is None:
            if strict:
                raise ValueError(f"no instance for summary {s.instance_id!r}")
            continue
        out.append(
            LabeledPair(
                instance_id=s.instance_id,
                gold=s.majority,
                system_connective=instance.connective,
                system_relations=relations_of(instance.connective),
                agreement_level=s.agreement_level,
                counts=dict(s.counts),
            )
        )
    return out


def _pair_correct(pair: LabeledPair, min_agree: int) -> bool:
    """Credit any relation reaching the vote threshold that the system signals.

    Falls back to the majority when vote counts are absent.  NO_RELATION can
    never be credited; no connective signals it.
    """
    if pair.counts is not None:
        return any(
            pair.counts.get(r, 0) >= min_agree and r in pair.system_relations
            for r in RELATIONS
        )
    return pair.gold is not None and pair.gold in pair.system_relations


def _stratum(
    pairs: Iterable[LabeledPair], min_agree: int, exact: bool
) -> list[LabeledPair]:
    if exact:
        return [p for p in pairs if p.agreement_level == min_agree]
    return [p for p in pairs if p.agreement_level >= min_agree]


def consistency(
    pairs: Sequence[LabeledPair], min_agree: int, exact: bool = False
) -> float | None:
    """Percentage of stratum pairs whose system relation matches the humans.

    ``exact`` selects the agreement_level == min_agree stratum instead of ≥.
    An empty stratum yields None rather than a misleading 0.
    """
    population = _stratum(pairs, min_agree, exact)
    if not population:
        return None
    hits = sum(1 for p in population if _pair_correct(p, min_agree))
    return 100.0 * hits / len(population)


def macro_f1(golds: Sequence, preds: Sequence) -> float:
    """Unweighted mean of per-class F1.

    Classes absent from both gold and predictions are excluded from the
    mean; a class with an empty precision+recall denominator scores 0.
    """
    if len(golds) != len(preds):
        raise ValueError("gold/prediction length mismatch")
    if not golds:
        raise ValueError("no pairs")
    classes = set(golds) | set(preds)
    total = 0.0
    for c in classes:
        tp = sum(1 for g, p in zip(golds, preds) if g == c and p == c)
        fp = sum(1 for g, p in zip(golds, preds) if g != c and p == c)
        fn = sum(1 for g, p in zip(golds, preds) if g == c and p != c)
        denominator = 2 * tp + fp + fn
        total += 2 * tp / denominator if denominator else 0.0
    return total / len(classes)


def resolved_relation_pairs(
    pairs: Sequence[LabeledPair],
) -> list[tuple[Relation, Relation]]:
    """(gold, system) relation pairs for majority-bearing, non-NONE instances.

    An ambiguous connective resolves to the gold relation when consistent,
    otherwise to its canonically first relation.
    """
    out = []
    for p in pairs:
        if p.gold is None or p.gold not in CORE_RELATIONS:
            continue
        out.append((p.gold, resolve_relation(p.system_connective, p.gold)))
    return out


def pairs_macro_f1(
    pairs: Sequence[LabeledPair], min_agree: int, exact: bool = False
) -> float | None:
    """Macro-F1 over resolved relations within an agreement stratum."""
    resolved = resolved_relation_pairs(_stratum(pairs, min_agree, exact))
    if not resolved:
        return None
    return macro_f1([g for g, _ in resolved], [s for _, s in resolved])


@dataclass(frozen=True)
class ConfusionMatrix:
    """Square count matrix; rows are human labels, columns system labels."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    @property
    def total(self) -> int:
        return sum(sum(row) for row in self.counts)

    @classmethod
    def from_label_pairs(
        cls, label_pairs: Iterable[tuple[str, str]], labels: Sequence[str]
    ) -> "ConfusionMatrix":
        index = {label: i for i, label in enumerate(labels)}
        grid = [[0] * len(labels) for _ in labels]
        for gold, pred in label_pairs:
            grid[index[gold]][index[pred]] += 1
        return cls(tuple(labels), tuple(tuple(row) for row in grid))

    def to_record(self) -> dict:
        return {"labels": list(self.labels), "counts": [list(r) for r in self.counts]}

    def render(self) -> str:
        width = max(max(len(lbl) for lbl in self.labels), 5)
        head = " " * (width + 2) + "  ".join(f"{lbl:>{width}}" for lbl in self.labels)
        lines = [head]
        for lbl, row in zip(self.labels, self.counts):
            cells = "  ".join(f"{n:>{width}}" for n in row)
            lines.append(f"{lbl:<{width}}  {cells}")
        return "\n".join(lines)

    def render_normalized(self) -> str:
        """Row-normalized percentages; all-zero rows render as dashes."""
        width = max(max(len(lbl) for lbl in self.labels), 5)
        head = " " * (width + 2) + "  ".join(f"{lbl:>{width}}" for lbl in self.labels)
        lines = [head]
        for lbl, row in zip(self.labels, self.counts):
            total = sum(row)
            if total:
                cells = "  ".join(f"{100.0 * n / total:>{width}.1f}" for n in row)
            else:
                cells = "  ".join(f"{'-':>{width}}" for _ in row)
            lines.append(f"{lbl:<{width}}  {cells}")
        return "\n".join(lines)


def confusion(pairs: Sequence[LabeledPair]) -> ConfusionMatrix:
    """Human relation vs. resolved system relation, over majority instances.

    The NO_RELATION row appears when humans voted it; the system axis never
    produces it (connectives always signal a relation).
    """
    label_pairs = []
    for p in pairs:
        if p.gold is None:
            continue
        system = resolve_relation(p.system_connective, p.gold)
        label_pairs.append((p.gold.value, system.value))
    present = {g for g, _ in label_pairs} | {s for _, s in label_pairs}
    labels = [r.value for r in RELATIONS if r.value in present]
    return ConfusionMatrix.from_label_pairs(label_pairs, labels)


def exact_binomial_test(
    outcomes: Sequence[tuple[bool, bool]],
) -> SignificanceResult:
    """Two-sided exact sign test on discordant (A correct, B correct) pairs.

    p = min(1, 2 · Σ_{i ≥ max(k, n−k)} C(n,i) / 2^n) where n counts the
    discordant pairs and k those favoring B.  n = 0 gives p = 1.
    """
    n = sum(1 for a, b in outcomes if a != b)
    k = sum(1 for a, b in outcomes if b and not a)
    if n == 0:
        p = 1.0
    else:
        m = max(k, n - k)
        tail = sum(math.comb(n, i) for i in range(m, n + 1))
        p = float(min(Fraction(1), 2 * Fraction(tail, 2**n)))
    return SignificanceResult(
        test="exact-binomial",
        statistic=float(k),
        p_value=p,
        config={"n_discordant": n, "k": k, "sided": "two-sided"},
    )


def paired_outcomes(
    pairs_a: Sequence[LabeledPair],
    pairs_b: Sequence[LabeledPair],
    min_agree: int,
) -> list[tuple[bool, bool]]:
    """Per-instance correctness for two systems on the same instances."""
    ids_a = [p.instance_id for p in pairs_a]
    ids_b = [p.instance_id for p in pairs_b]
    if ids_a != ids_b:
        raise ValueError("instance sets differ between systems")
    return [
        (_pair_correct(a, min_agree), _pair_correct(b, min_agree))
        for a, b in zip(pairs_a, pairs_b)
    ]


def _resample_rng(seed: int, index: int) -> np.random.Generator:
    # Stream per resample so results are independent of execution order.
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, index))))


def _accuracy_arrays(
    pairs: Sequence[LabeledPair], min_agree: int
) -> np.ndarray:
    return np.array([_pair_correct(p, min_agree) for p in pairs], dtype=float)


def _f1_from_codes(codes: np.ndarray, n_labels: int) -> float:
    grid = np.bincount(codes, minlength=n_labels * n_labels).reshape(
        n_labels, n_labels
    )
    tp = np.diag(grid)
    fp = grid.sum(axis=0) - tp
    fn = grid.sum(axis=1) - tp
    present = (grid.sum(axis=0) + grid.sum(axis=1)) > 0
    denominator = 2 * tp + fp + fn
    f1 = np.zeros(n_labels)
    nonzero = denominator > 0
    f1[nonzero] = 2 * tp[nonzero] / denominator[nonzero]
    return float(f1[present].mean())


def paired_bootstrap_test(
    pairs_a: Sequence[LabeledPair],
    pairs_b: Sequence[LabeledPair],
    metric: str,
    resamples: int,
    seed: int,
    min_agree: int = 3,
) -> SignificanceResult:
    """One-sided paired bootstrap in the direction of the observed difference.

    metric ∈ {"accuracy", "macro_f1"}.  Both systems are resampled on the
    same instance indices; p is the fraction of resamples where the observed
    improvement fails to hold.  Bit-reproducible given (seed, resamples).
    """
    if resamples < 1000:
        raise ValueError("resamples must be at least 1000")
    ids_a = [p.instance_id for p in pairs_a]
    ids_b = [p.instance_id for p in pairs_b]
    if ids_a != ids_b:
        raise ValueError("instance sets differ between systems")
    if not pairs_a:
        raise ValueError("no pairs")
    n = len(pairs_a)

    if metric == "accuracy":
        correct_a = _accuracy_arrays(pairs_a, min_agree)
        correct_b = _accuracy_arrays(pairs_b, min_agree)

        def diff(idx: np.ndarray) -> float:
            return float(correct_b[idx].mean() - correct_a[idx].mean())

        observed = float(correct_b.mean() - correct_a.mean())
    elif metric == "macro_f1":
        resolved_a = resolved_relation_pairs(pairs_a)
        resolved_b = resolved_relation_pairs(pairs_b)
        if len(resolved_a) != n or len(resolved_b) != n:
            raise ValueError(
                "macro_f1 bootstrap needs majority-bearing, non-NONE pairs"
            )
        order = [r.value for r in CORE_RELATIONS]
        code = {label: i for i, label in enumerate(order)}
        n_labels = len(order)
        codes_a = np.array([code[g.value] * n_labels + code[s.value] for g, s in resolved_a])
        codes_b = np.array([code[g.value] * n_labels + code[s.value] for g, s in resolved_b])

        def diff(idx: np.ndarray) -> float:
            return _f1_from_codes(codes_b[idx], n_labels) - _f1_from_codes(
                codes_a[idx], n_labels
            )

        observed = _f1_from_codes(codes_b, n_labels) - _f1_from_codes(
            codes_a, n_labels
        )
    else:
        raise ValueError(f"unknown metric {metric!r}")

    against = 0
    for i in range(resamples):
        idx = _resample_rng(seed, i).integers(0, n, n)
        d = diff(idx)
        if (d <= 0) if observed >= 0 else (d >= 0):
            against += 1
    return SignificanceResult(
        test="paired-bootstrap",
        statistic=observed,
        p_value=against / resamples,
        config={
            "metric": metric,
            "resamples": resamples,
            "seed": seed,
            "min_agree": min_agree,
            "sided": "one-sided (observed improvement direction)",
        },
    )


# --- Table-4-style report ---------------------------------------------------


def consistency_table(pairs: Sequence[LabeledPair]) -> dict[int, float | None]:
    """Consistency per exact agreement stratum (5, 4, 3 annotators)."""
    return {n: consistency(pairs, n, exact=True) for n in (5, 4, 3)}


def render_consistency_table(table: Mapping[int, float | None]) -> str:
    lines = []
    for n in (5, 4, 3):
        value = table[n]
        cell = f"{value:5.1f}" if value is not None else "  n/a"
        lines.append(f"agreed by {n}  {cell}")
    return "\n".join(lines)
