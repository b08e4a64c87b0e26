import numpy as np
import pytest

from conncheck.assess import (
    ConfusionMatrix,
    LabeledPair,
    confusion,
    consistency,
    consistency_table,
    exact_binomial_test,
    macro_f1,
    paired_bootstrap_test,
    paired_outcomes,
    pairs_from_summaries,
    pairs_macro_f1,
    render_consistency_table,
    resolved_relation_pairs,
)
from conncheck.annotate import Annotation, summarize
from conncheck.extract import extract_instance
from conncheck.relations import RELATIONS, Relation, relations_of

from conftest import load_fixture
from oracles import (
    oracle_accuracy_bootstrap,
    oracle_macro_f1,
    oracle_sign_test,
)

C = Relation.CONTINGENCY
CT = Relation.CONTRAST
T = Relation.TEMPORAL
E = Relation.EXPANSION
N = Relation.NO_RELATION


def pair(instance_id, gold, connective, level=5, counts=None):
    return LabeledPair(
        instance_id=instance_id,
        gold=gold,
        system_connective=connective,
        system_relations=relations_of(connective),
        agreement_level=level,
        counts=counts,
    )


class TestConsistency:
    def test_half_consistent(self):
        pairs = [pair("a", CT, "but", level=4), pair("b", C, "but", level=3)]
        assert consistency(pairs, 3) == 50.0

    def test_ambiguous_connective_credited_either_way(self):
        assert consistency([pair("a", T, "since")], 3) == 100.0
        assert consistency([pair("a", C, "since")], 3) == 100.0
        assert consistency([pair("a", E, "since")], 3) == 0.0

    def test_empty_stratum_is_none_not_zero(self):
        assert consistency([pair("a", CT, "but", level=3)], 5) is None
        assert consistency([], 3) is None

    def test_exact_vs_at_least(self):
        pairs = [
            pair("a", CT, "but", level=5),
            pair("b", CT, "but", level=4),
            pair("c", C, "but", level=4),
        ]
        assert consistency(pairs, 4, exact=True) == 50.0
        assert consistency(pairs, 4) == pytest.approx(200 / 3)

    def test_min_agree_two_credits_any_threshold_relation(self):
        counts = {C: 2, T: 2, CT: 1, E: 0, N: 0}
        tied = pair("a", None, "since", level=2, counts=counts)
        assert consistency([tied], 2) == 100.0
        assert consistency([pair("a", None, "but", level=2, counts=counts)], 2) == 0.0

    def test_no_relation_votes_never_credited(self):
        counts = {C: 0, T: 0, CT: 0, E: 0, N: 5}
        p = pair("a", N, "but", level=5, counts=counts)
        assert consistency([p], 3) == 0.0

    def test_population_nesting(self):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(11)))
        relations = [C, CT, T, E]
        pairs = [
            pair(
                f"p{i}",
                relations[int(rng.integers(0, 4))],
                ("but", "since", "and", "when")[int(rng.integers(0, 4))],
                level=int(rng.integers(2, 6)),
            )
            for i in range(100)
        ]
        ids5 = {p.instance_id for p in pairs if p.agreement_level >= 5}
        ids3 = {p.instance_id for p in pairs if p.agreement_level >= 3}
        assert ids5 <= ids3


class TestMacroF1:
    def test_perfect(self):
        assert macro_f1([C, CT, T], [C, CT, T]) == 1.0

    def test_documented_two_thirds(self):
        value = macro_f1([C, C, CT], [C, CT, CT])
        assert value == pytest.approx(2 / 3, abs=1e-12)

    def test_order_invariant(self):
        golds, preds = [C, C, CT, E], [C, CT, CT, E]
        reordered = list(zip(*sorted(zip(golds, preds), key=lambda x: x[1].value)))
        assert macro_f1(golds, preds) == pytest.approx(
            macro_f1(list(reordered[0]), list(reordered[1]))
        )

    def test_class_absent_from_both_excluded(self):
        # only two classes participate; a four-class average would differ
        assert macro_f1([C, CT], [C, CT]) == 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            macro_f1([], [])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            macro_f1([C], [C, CT])

    def test_random_vectors_match_oracle(self):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(21)))
        values = [r.value for r in RELATIONS]
        for _ in range(300):
            n = int(rng.integers(1, 30))
            golds = [values[int(rng.integers(0, 5))] for _ in range(n)]
            preds = [values[int(rng.integers(0, 5))] for _ in range(n)]
            assert macro_f1(golds, preds) == pytest.approx(
                oracle_macro_f1(golds, preds), abs=1e-12
            )


class TestResolution:
    def test_ambiguous_resolves_toward_gold(self):
        resolved = resolved_relation_pairs([pair("a", T, "since")])
        assert resolved == [(T, T)]

    def test_unambiguous_keeps_own_relation(self):
        resolved = resolved_relation_pairs([pair("a", T, "but")])
        assert resolved == [(T, CT)]

    def test_none_gold_and_no_majority_excluded(self):
        pairs = [pair("a", None, "but"), pair("b", N, "but"), pair("c", CT, "but")]
        assert resolved_relation_pairs(pairs) == [(CT, CT)]

    def test_pairs_macro_f1_never_penalizes_ambiguity(self):
        pairs = [pair("a", T, "since"), pair("b", C, "since")]
        assert pairs_macro_f1(pairs, 3) == 1.0

    def test_pairs_macro_f1_empty_stratum(self):
        assert pairs_macro_f1([pair("a", T, "but", level=3)], 5) is None


class TestConfusion:
    def test_diagonal(self):
        matrix = confusion([pair(f"p{i}", CT, "but") for i in range(3)])
        assert matrix.labels == ("contrast",)
        assert matrix.counts == ((3,),)
        assert matrix.total == 3

    def test_off_diagonal(self):
        matrix = confusion([pair("a", E, "but")])
        assert matrix.labels == ("contrast", "expansion")
        row = dict(zip(matrix.labels, matrix.counts[matrix.labels.index("expansion")]))
        assert row["contrast"] == 1

    def test_total_conservation(self):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(31)))
        conns = ("but", "and", "when", "because", "since")
        relations = [C, CT, T, E]
        pairs = [
            pair(
                f"p{i}",
                relations[int(rng.integers(0, 4))],
                conns[int(rng.integers(0, 5))],
            )
            for i in range(250)
        ]
        assert confusion(pairs).total == 250

    def test_no_relation_row_when_humans_voted_it(self):
        matrix = confusion([pair("a", N, "but"), pair("b", CT, "but")])
        assert "none" in matrix.labels
        # system axis never produces none: its column is empty
        col = matrix.labels.index("none")
        assert all(row[col] == 0 for row in matrix.counts)

    def test_render_contains_counts_and_normalization(self):
        matrix = confusion([pair("a", CT, "but"), pair("b", CT, "and")])
        assert "contrast" in matrix.render()
        assert "50.0" in matrix.render_normalized()

    def test_from_label_pairs_round_trip(self):
        matrix = ConfusionMatrix.from_label_pairs(
            [("x", "y"), ("x", "x")], labels=("x", "y")
        )
        assert matrix.to_record() == {
            "labels": ["x", "y"],
            "counts": [[1, 1], [0, 0]],
        }


class TestExactBinomial:
    def test_five_discordant_all_favoring_b(self):
        outcomes = [(False, True)] * 5 + [(True, True)] * 3
        result = exact_binomial_test(outcomes)
        assert result.p_value == 0.0625
        assert result.config["n_discordant"] == 5

    def test_identical_systems(self):
        outcomes = [(True, True), (False, False)]
        assert exact_binomial_test(outcomes).p_value == 1.0

    def test_two_discordant_split(self):
        outcomes = [(False, True), (True, False)]
        assert exact_binomial_test(outcomes).p_value == 1.0

    def test_eight_of_eight(self):
        outcomes = [(False, True)] * 8
        assert exact_binomial_test(outcomes).p_value == 0.0078125

    def test_enumeration_all_n_up_to_twelve(self):
        for n in range(0, 13):
            for k in range(0, n + 1):
                outcomes = (
                    [(False, True)] * k
                    + [(True, False)] * (n - k)
                    + [(True, True)] * 2
                )
                got = exact_binomial_test(outcomes).p_value
                assert got == oracle_sign_test(n, k), (n, k)

    def test_paired_outcomes_requires_same_ids(self):
        a = [pair("x", CT, "but")]
        b = [pair("y", CT, "but")]
        with pytest.raises(ValueError):
            paired_outcomes(a, b, 3)

    def test_paired_outcomes_values(self):
        a = [pair("x", CT, "and"), pair("y", C, "because")]
        b = [pair("x", CT, "but"), pair("y", C, "but")]
        assert paired_outcomes(a, b, 3) == [(False, True), (True, False)]


class TestPairedBootstrap:
    def _systems(self, n, b_fixes=0):
        golds = [C] * n
        a = [pair(f"p{i}", golds[i], "but") for i in range(n)]
        b = [
            pair(f"p{i}", golds[i], "because" if i < b_fixes else "but")
            for i in range(n)
        ]
        return a, b

    def test_identical_systems_p_one(self):
        a, _ = self._systems(20)
        result = paired_bootstrap_test(a, a, "accuracy", resamples=1000, seed=3)
        assert result.p_value == 1.0
        assert result.statistic == 0.0

    def test_dominated_fixture_p_zero(self):
        a, b = self._systems(20, b_fixes=20)
        result = paired_bootstrap_test(a, b, "accuracy", resamples=1000, seed=3)
        assert result.p_value == 0.0

    def test_requires_thousand_resamples(self):
        a, b = self._systems(10, 5)
        with pytest.raises(ValueError):
            paired_bootstrap_test(a, b, "accuracy", resamples=999, seed=3)

    def test_mismatched_ids_rejected(self):
        a, _ = self._systems(5)
        b = [pair("zz", C, "but")] * 5
        with pytest.raises(ValueError):
            paired_bootstrap_test(a, b, "accuracy", resamples=1000, seed=3)

    def test_unknown_metric_rejected(self):
        a, b = self._systems(5, 2)
        with pytest.raises(ValueError):
            paired_bootstrap_test(a, b, "typo", resamples=1000, seed=3)

    def test_bit_reproducible(self):
        a, b = self._systems(30, 7)
        first = paired_bootstrap_test(a, b, "accuracy", resamples=2000, seed=42)
        second = paired_bootstrap_test(a, b, "accuracy", resamples=2000, seed=42)
        assert first == second

    def test_frozen_fixture_value(self):
        fixture = load_fixture("bootstrap_frozen.json")
        a = [pair(f"p{i:03d}", C, c) for i, c in enumerate(fixture["connectives_a"])]
        b = [pair(f"p{i:03d}", C, c) for i, c in enumerate(fixture["connectives_b"])]
        result = paired_bootstrap_test(
            a, b, "accuracy", resamples=fixture["resamples"], seed=fixture["seed"]
        )
        assert result.p_value == fixture["p_value"]
        assert result.statistic == fixture["statistic"]

    def test_matches_independent_resampling_loop(self):
        fixture = load_fixture("bootstrap_frozen.json")
        a = [pair(f"p{i:03d}", C, c) for i, c in enumerate(fixture["connectives_a"])]
        b = [pair(f"p{i:03d}", C, c) for i, c in enumerate(fixture["connectives_b"])]
        got = paired_bootstrap_test(a, b, "accuracy", resamples=1000, seed=9).p_value
        correct_a = [c == "because" for c in fixture["connectives_a"]]
        correct_b = [c == "because" for c in fixture["connectives_b"]]
        assert got == oracle_accuracy_bootstrap(correct_a, correct_b, 9, 1000)

    def test_macro_f1_metric_runs(self):
        golds = [C, C, CT, CT, T, T, E, E] * 3
        a = [pair(f"p{i}", g, "and") for i, g in enumerate(golds)]
        b = [
            pair(f"p{i}", g, {"contingency": "because", "contrast": "but",
                              "temporal": "when", "expansion": "and"}[g.value])
            for i, g in enumerate(golds)
        ]
        result = paired_bootstrap_test(a, b, "macro_f1", resamples=1000, seed=4)
        assert 0.0 <= result.p_value < 0.5
        assert result.statistic > 0

    def test_macro_f1_rejects_unresolvable_pairs(self):
        pairs = [pair("a", None, "but"), pair("b", CT, "but")]
        with pytest.raises(ValueError):
            paired_bootstrap_test(pairs, pairs, "macro_f1", resamples=1000, seed=4)


class TestConsistencyTable:
    def test_strata_and_render(self):
        pairs = [
            pair("a", CT, "but", level=5),
            pair("b", C, "but", level=4),
            pair("c", CT, "but", level=3),
            pair("d", CT, "and", level=3),
        ]
        table = consistency_table(pairs)
        assert table[5] == 100.0
        assert table[4] == 0.0
        assert table[3] == 50.0
        text = render_consistency_table(table)
        assert "agreed by 5" in text and "100.0" in text

    def test_empty_stratum_renders_na(self):
        table = consistency_table([pair("a", CT, "but", level=3)])
        assert table[5] is None
        assert "n/a" in render_consistency_table(table)


class TestPairsFromSummaries:
    def _summary(self, instance_id, votes_):
        return summarize(
            [Annotation(instance_id, f"a{i}", r) for i, r in enumerate(votes_)]
        )

    def test_join(self, mk):
        from dataclasses import replace

        instance = replace(
            extract_instance(mk("jazz is good , but my favorite is country music .")),
            id="i1",
        )
        pairs = pairs_from_summaries(
            [self._summary("i1", [CT] * 4 + [E])], {"i1": instance}
        )
        assert len(pairs) == 1
        assert pairs[0].gold is CT
        assert pairs[0].system_connective == "but"
        assert pairs[0].agreement_level == 4
        assert pairs[0].counts[CT] == 4

    def test_missing_instance_skipped_or_strict(self, mk):
        summary = self._summary("ghost", [CT] * 5)
        assert pairs_from_summaries([summary], {}) == []
        with pytest.raises(ValueError):
            pairs_from_summaries([summary], {}, strict=True)
