import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from conncheck.corpus import TagLexicon, Utterance, tag, tokenize

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def load_fixture(name: str):
    with open(os.path.join(FIXTURES, name), encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def lexicon() -> TagLexicon:
    return TagLexicon.default()


@pytest.fixture(scope="session")
def mk(lexicon):
    """Factory: text -> tagged Utterance."""

    def _mk(text: str, uid: str = "u1", prompt: str | None = None) -> Utterance:
        return Utterance(uid, "test", prompt, tuple(tag(tokenize(text), lexicon)))

    return _mk


_FILLER = ("the", "a", "it", "was", "one", "day", "time", "thing", "way", "man")


def make_separable_examples(n: int, seed: int):
    """Synthetic corpus whose arg2 cue words fully determine the label.

    Every class gets unique cue tokens on the arg2 side; half of the "but"
    examples instead use the "i like X / i hate Y" template so that template
    has a unique training label.  Argument lengths stay in the 1-3 and 4-7
    buckets, leaving longer buckets out of the vocabulary on purpose.
    """
    import numpy as np

    from conncheck.predict import CLASSES, TrainingExample

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    cues = {c: (f"{c.lower()}cue0", f"{c.lower()}cue1") for c in CLASSES}

    def filler(k):
        return [_FILLER[int(rng.integers(0, len(_FILLER)))] for _ in range(k)]

    examples = []
    for i in range(n):
        label = CLASSES[i % len(CLASSES)]
        if label == "but" and (i // len(CLASSES)) % 2 == 0:
            examples.append(
                TrainingExample(
                    ("i", "like", *filler(1)), ("i", "hate", *filler(1)), label
                )
            )
            continue
        arg1 = tuple(filler(int(rng.integers(3, 6))))
        arg2 = (cues[label][0], *filler(int(rng.integers(1, 4))), cues[label][1])
        examples.append(TrainingExample(arg1, arg2, label))
    order = rng.permutation(n)
    return [examples[int(i)] for i in order]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    module = sys.modules.get("test_acceptance")
    if module is None:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.LABELS):
        state = module.RESULTS.get(n)
        verdict = "NOT RUN" if state is None else ("PASS" if state else "FAIL")
        terminalreporter.write_line(
            f"criterion {n}: {verdict} - {module.LABELS[n]}"
        )
