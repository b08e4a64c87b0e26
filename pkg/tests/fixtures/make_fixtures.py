"""Generate the frozen fixture files in this directory.

Run from the repository root:

    python3 tests/fixtures/make_fixtures.py

The alpha values come from the independent oracle in tests/oracles.py; the
bootstrap p-values and fine-tuning accuracies are determinism freezes,
recorded once and asserted byte-stable afterwards.  Regenerating should be
a no-op unless the fixture definitions themselves change.
"""

from __future__ import annotations

import json
import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from oracles import oracle_alpha  # noqa: E402

HERE = os.path.dirname(os.path.abspath(__file__))
CATEGORIES = ("contingency", "contrast", "temporal", "expansion", "none")


def _write(name: str, payload) -> None:
    with open(os.path.join(HERE, name), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def alpha_fixtures() -> None:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(20240811)))
    fixtures = []

    # the documented reference case: 10 instances x 5 annotators
    units = [
        [CATEGORIES[int(rng.integers(0, 5))] for _ in range(5)] for _ in range(10)
    ]
    fixtures.append({"name": "ten_by_five", "units": units})

    # unanimous but with >=2 categories across units
    fixtures.append(
        {
            "name": "unanimous",
            "units": [["contrast"] * 5, ["expansion"] * 5, ["contrast"] * 5],
        }
    )

    # the 2x2 hand-derived case
    fixtures.append(
        {
            "name": "two_by_two",
            "units": [["contingency", "contrast"], ["contingency", "contrast"]],
        }
    )

    # mixed unit sizes (3-7 votes) and skewed category draws
    for i in range(17):
        n_units = int(rng.integers(2, 12))
        weights = rng.dirichlet(np.ones(5))
        units = []
        for _ in range(n_units):
            m = int(rng.integers(2, 8))
            units.append(
                [CATEGORIES[int(rng.choice(5, p=weights))] for _ in range(m)]
            )
        fixtures.append({"name": f"random_{i:02d}", "units": units})

    for f in fixtures:
        f["alpha"] = oracle_alpha(f["units"])
    _write("alpha_fixtures.json", fixtures)
    print(f"alpha_fixtures.json: {len(fixtures)} fixtures")


def bootstrap_fixture() -> None:
    from conncheck.assess import LabeledPair, paired_bootstrap_test
    from conncheck.relations import Relation, relations_of

    def _pairs(connectives):
        return [
            LabeledPair(
                instance_id=f"p{i:03d}",
                gold=Relation.CONTINGENCY,
                system_connective=c,
                system_relations=relations_of(c),
                agreement_level=5,
            )
            for i, c in enumerate(connectives)
        ]

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(7)))
    n = 60
    # "because" maps to the Contingency gold (correct), "but" does not
    conns_a = [
        "because" if rng.integers(0, 2) else "but" for _ in range(n)
    ]
    conns_b = list(conns_a)
    wrong = [i for i, c in enumerate(conns_a) if c == "but"]
    for i in wrong[:8]:
        conns_b[i] = "because"
    result = paired_bootstrap_test(
        _pairs(conns_a), _pairs(conns_b), "accuracy", resamples=10_000, seed=42
    )
    _write(
        "bootstrap_frozen.json",
        {
            "connectives_a": conns_a,
            "connectives_b": conns_b,
            "seed": 42,
            "resamples": 10_000,
            "statistic": result.statistic,
            "p_value": result.p_value,
        },
    )
    print(f"bootstrap_frozen.json: p={result.p_value}")


def _domain_examples(rng, cues: dict[str, list[str]], filler: list[str], count: int):
    labels = sorted(cues)
    out = []
    for i in range(count):
        label = labels[i % len(labels)]
        cue = cues[label]
        arg1 = [
            filler[int(rng.integers(0, len(filler)))] for _ in range(4)
        ] + [cue[0]]
        arg2 = [cue[1]] + [
            filler[int(rng.integers(0, len(filler)))] for _ in range(4)
        ]
        out.append({"arg1": arg1, "arg2": arg2, "label": label})
    return out


def finetune_fixture() -> None:
    from conncheck.predict import ConnectiveClassifier, TrainingExample

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(20240812)))
    cues_a = {
        "because": ["kitchen", "recipe"],
        "but": ["menu", "waiter"],
        "when": ["dinner", "candle"],
        "and": ["dessert", "coffee"],
    }
    cues_b = {
        "because": ["stadium", "referee"],
        "but": ["goalie", "penalty"],
        "when": ["whistle", "kickoff"],
        "and": ["scoreboard", "crowd"],
    }
    filler_a = ["the", "a", "was", "very", "table", "plate", "night"]
    filler_b = ["the", "a", "was", "very", "pitch", "ball", "match"]

    train_a = _domain_examples(rng, cues_a, filler_a, 400)
    train_b = _domain_examples(rng, cues_b, filler_b, 100)
    test_b = _domain_examples(rng, cues_b, filler_b, 200)

    def _acc(model, examples):
        hits = 0
        for e in examples:
            if model.predict_one(e["arg1"], e["arg2"]).label == e["label"]:
                hits += 1
        return hits / len(examples)

    def _fit(examples, seed):
        model = ConnectiveClassifier(seed=seed)
        pairs = [(e["arg1"], e["arg2"]) for e in examples]
        labels = [e["label"] for e in examples]
        return model.fit(pairs, labels)

    out_model = _fit(train_a, seed=5)
    oracle_model = _fit(train_b, seed=5)
    tuned = out_model.fine_tune(
        [(e["arg1"], e["arg2"]) for e in train_b],
        [e["label"] for e in train_b],
        seed=5,
        epochs=1,
    )
    TrainingExample  # re-exported path is exercised by the tests, not here

    payload = {
        "train_a": train_a,
        "train_b": train_b,
        "test_b": test_b,
        "seed": 5,
        "out_of_domain_accuracy": _acc(out_model, test_b),
        "tuned_accuracy": _acc(tuned, test_b),
        "oracle_in_domain_accuracy": _acc(oracle_model, test_b),
    }
    _write("finetune_margin.json", payload)
    print(
        "finetune_margin.json: out={out_of_domain_accuracy} tuned={tuned_accuracy} "
        "oracle={oracle_in_domain_accuracy}".format(**payload)
    )


if __name__ == "__main__":
    alpha_fixtures()
    bootstrap_fixture()
    finetune_fixture()
