"""Masked-connective prediction: training data, features, linear model.

The model is a 12-class (11 connectives + NONE) multinomial logistic
regression over sparse binary features of the two argument spans, trained
by seeded mini-batch gradient descent.  Everything downstream talks to a
predictor only through predict_one(arg1, arg2) -> Prediction, so an
external model can be swapped in over the stdio protocol.
"""

from __future__ import annotations

import json
import math
import subprocess
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import TextIO

import numpy as np
from scipy import sparse
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .corpus import TagLexicon, Utterance, length_filter
from .errors import DataFormatError
from .extract import extract_all
from .relations import INVENTORY

NONE_LABEL = "NONE"

#: Fixed class order: connectives alphabetically, NONE last.
CLASSES: tuple[str, ...] = tuple(sorted(INVENTORY)) + (NONE_LABEL,)

FEATURE_SPEC_VERSION = 1
MODEL_FORMAT = "conncheck-model"
MODEL_FORMAT_VERSION = 1

_LENGTH_BUCKETS = ((1, 3, "1-3"), (4, 7, "4-7"), (8, 15, "8-15"))


@dataclass(frozen=True)
class TrainingExample:
    arg1: tuple[str, ...]
    arg2: tuple[str, ...]
    label: str

    def __post_init__(self) -> None:
        if not self.arg1 or not self.arg2:
            raise ValueError("argument token lists must be non-empty")
        if self.label not in CLASSES:
            raise ValueError(f"unknown label {self.label!r}")


@dataclass(frozen=True)
class Prediction:
    """Classifier output: normalized per-class scores and their argmax.

    all_unknown marks inputs whose every feature fell outside the model
    vocabulary, making the scores bias-only.
    """

    label: str
    scores: dict[str, float]
    all_unknown: bool = False


def _bucket(n: int) -> str:
    for lo, hi, name in _LENGTH_BUCKETS:
        if lo <= n <= hi:
            return name
    return "16+"


def _side_features(side: str, tokens: Sequence[str]) -> list[str]:
    feats = [f"{side}:{w}" for w in tokens]
    feats += [f"{side}:{a}_{b}" for a, b in zip(tokens, tokens[1:])]
    feats.append(f"{side}_first:{tokens[0]}")
    feats.append(f"{side}_last:{tokens[-1]}")
    feats.append(f"{side}_len:{_bucket(len(tokens))}")
    return feats


def featurize(arg1: Sequence[str], arg2: Sequence[str]) -> list[str]:
    """Binary feature names for an argument pair, duplicates removed.

    Side-tagged unigrams and bigrams, first/last tokens, and a length
    bucket per side.  Raises ValueError on an empty side.
    """
    if not arg1 or not arg2:
        raise ValueError("both argument sides must be non-empty")
    feats = _side_features("A", arg1) + _side_features("B", arg2)
    return list(dict.fromkeys(feats))


class PairVectorizer(BaseEstimator, TransformerMixin):
    """Map argument pairs to sparse binary feature matrices.

    The vocabulary is built in first-seen feature order; features unseen at
    fit time are dropped at transform time.
    """

    def fit(self, X: Sequence[tuple[Sequence[str], Sequence[str]]], y=None):
        vocabulary: dict[str, int] = {}
        for arg1, arg2 in X:
            for feat in featurize(arg1, arg2):
                if feat not in vocabulary:
                    vocabulary[feat] = len(vocabulary)
        self.vocabulary_ = vocabulary
        return self

    def transform(
        self, X: Sequence[tuple[Sequence[str], Sequence[str]]]
    ) -> sparse.csr_matrix:
        vocabulary = self.vocabulary_
        indptr = [0]
        indices: list[int] = []
        for arg1, arg2 in X:
            cols = {
                vocabulary[f] for f in featurize(arg1, arg2) if f in vocabulary
            }
            indices.extend(sorted(cols))
            indptr.append(len(indices))
        data = np.ones(len(indices), dtype=np.float64)
        return sparse.csr_matrix(
            (data, indices, indptr), shape=(len(X), len(vocabulary))
        )


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _objective(
    coef: np.ndarray, intercept: np.ndarray, X, y_idx: np.ndarray, l2: float
) -> float:
    """Mean cross-entropy plus L2 penalty on the weights (not the bias)."""
    z = np.asarray(X @ coef.T) + intercept
    zmax = z.max(axis=1)
    lse = np.log(np.exp(z - zmax[:, None]).sum(axis=1)) + zmax
    ll = z[np.arange(len(y_idx)), y_idx] - lse
    return float(-ll.mean() + 0.5 * l2 * (coef**2).sum())


def _gradients(
    coef: np.ndarray, intercept: np.ndarray, X, y_idx: np.ndarray, l2: float
) -> tuple[np.ndarray, np.ndarray]:
    n = len(y_idx)
    probs = _softmax(np.asarray(X @ coef.T) + intercept)
    probs[np.arange(n), y_idx] -= 1.0
    probs /= n
    grad_coef = np.asarray((X.T @ probs)).T + l2 * coef
    grad_intercept = probs.sum(axis=0)
    return grad_coef, grad_intercept


def _sgd(
    X: sparse.csr_matrix,
    y_idx: np.ndarray,
    coef: np.ndarray,
    intercept: np.ndarray,
    l2: float,
    step: float,
    epochs: int,
    batch_size: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Mini-batch gradient descent with a step/√t decay, t counting updates."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n = X.shape[0]
    t = 0
    losses: list[float] = []
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = perm[start : start + batch_size]
            t += 1
            lr = step / math.sqrt(t)
            grad_coef, grad_intercept = _gradients(
                coef, intercept, X[idx], y_idx[idx], l2
            )
            coef = coef - lr * grad_coef
            intercept = intercept - lr * grad_intercept
        loss = _objective(coef, intercept, X, y_idx, l2)
        if not math.isfinite(loss):
            raise ValueError(
                f"non-finite loss {loss!r} after epoch {len(losses) + 1}; "
                "lower the step size or raise l2"
            )
        losses.append(loss)
    return coef, intercept, losses


class ConnectiveClassifier(BaseEstimator, ClassifierMixin):
    """L2-regularized multinomial logistic regression over argument pairs.

    X is a sequence of (arg1 tokens, arg2 tokens) pairs; vectorization is
    internal so the fitted object is self-contained and serializable.  All
    twelve classes are always present in the model; seed is mandatory.
    """

    def __init__(
        self,
        l2: float = 1e-4,
        step: float = 0.1,
        epochs: int = 3,
        batch_size: int = 64,
        seed: int | None = None,
    ):
        self.l2 = l2
        self.step = step
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def _validate_config(self, allow_zero_step: bool = False) -> None:
        if self.seed is None:
            raise ValueError("seed is required; pass seed= explicitly")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.step < 0 or (self.step == 0 and not allow_zero_step):
            raise ValueError("step must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def fit(
        self,
        X: Sequence[tuple[Sequence[str], Sequence[str]]],
        y: Sequence[str],
    ) -> "ConnectiveClassifier":
        self._validate_config()
        if len(X) != len(y):
            raise ValueError("X/y length mismatch")
        if not X:
            raise ValueError("no training examples")
        unknown = sorted(set(y) - set(CLASSES))
        if unknown:
            raise ValueError(f"unknown labels: {unknown}")
        if len(set(y)) < 2:
            raise ValueError("training data has a single class")
        self.classes_ = np.array(CLASSES)
        self.vectorizer_ = PairVectorizer().fit(X)
        matrix = self.vectorizer_.transform(X)
        y_idx = np.array([CLASSES.index(label) for label in y])
        coef = np.zeros((len(CLASSES), matrix.shape[1]))
        intercept = np.zeros(len(CLASSES))
        self.coef_, self.intercept_, self.loss_trace_ = _sgd(
            matrix,
            y_idx,
            coef,
            intercept,
            l2=self.l2,
            step=self.step,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
        )
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "coef_"):
            raise ValueError("model is not fitted")

    def decision_function(
        self, X: Sequence[tuple[Sequence[str], Sequence[str]]]
    ) -> np.ndarray:
        self._check_fitted()
        matrix = self.vectorizer_.transform(X)
        return np.asarray(matrix @ self.coef_.T) + self.intercept_

    def predict_proba(
        self, X: Sequence[tuple[Sequence[str], Sequence[str]]]
    ) -> np.ndarray:
        return _softmax(self.decision_function(X))

    def predict(
        self, X: Sequence[tuple[Sequence[str], Sequence[str]]]
    ) -> list[str]:
        probs = self.predict_proba(X)
        return [CLASSES[i] for i in probs.argmax(axis=1)]

    def predict_one(
        self, arg1: Sequence[str], arg2: Sequence[str]
    ) -> Prediction:
        self._check_fitted()
        feats = featurize(arg1, arg2)
        known = [f for f in feats if f in self.vectorizer_.vocabulary_]
        probs = self.predict_proba([(arg1, arg2)])[0]
        label = CLASSES[int(probs.argmax())]
        scores = {c: float(p) for c, p in zip(CLASSES, probs)}
        return Prediction(label=label, scores=scores, all_unknown=not known)

    def fine_tune(
        self,
        X: Sequence[tuple[Sequence[str], Sequence[str]]],
        y: Sequence[str],
        seed: int,
        epochs: int = 1,
        step: float | None = None,
        feature_spec_version: int = FEATURE_SPEC_VERSION,
    ) -> "ConnectiveClassifier":
        """Continue training on new data; returns a new model.

        The vocabulary grows by the unseen features (zero-initialized
        columns).  A zero step size is allowed and yields an identical
        decision function.  The input model is not modified.
        """
        self._check_fitted()
        if feature_spec_version != FEATURE_SPEC_VERSION:
            raise ValueError(
                f"feature spec version mismatch: model has "
                f"{FEATURE_SPEC_VERSION}, data has {feature_spec_version}"
            )
        if len(X) != len(y):
            raise ValueError("X/y length mismatch")
        if not X:
            raise ValueError("no fine-tuning examples")
        unknown = sorted(set(y) - set(CLASSES))
        if unknown:
            raise ValueError(f"unknown labels: {unknown}")
        tuned = ConnectiveClassifier(
            l2=self.l2,
            step=self.step if step is None else step,
            epochs=epochs,
            batch_size=self.batch_size,
            seed=seed,
        )
        tuned._validate_config(allow_zero_step=True)
        vocabulary = dict(self.vectorizer_.vocabulary_)
        for arg1, arg2 in X:
            for feat in featurize(arg1, arg2):
                if feat not in vocabulary:
                    vocabulary[feat] = len(vocabulary)
        vectorizer = PairVectorizer()
        vectorizer.vocabulary_ = vocabulary
        grown = len(vocabulary) - self.coef_.shape[1]
        coef = np.hstack([self.coef_, np.zeros((len(CLASSES), grown))])
        matrix = vectorizer.transform(X)
        y_idx = np.array([CLASSES.index(label) for label in y])
        tuned.classes_ = np.array(CLASSES)
        tuned.vectorizer_ = vectorizer
        tuned.coef_, tuned.intercept_, tuned.loss_trace_ = _sgd(
            matrix,
            y_idx,
            coef,
            np.array(self.intercept_, copy=True),
            l2=tuned.l2,
            step=tuned.step,
            epochs=tuned.epochs,
            batch_size=tuned.batch_size,
            seed=seed,
        )
        return tuned

    # --- serialization -----------------------------------------------------

    def to_record(self) -> dict:
        self._check_fitted()
        return {
            "format": MODEL_FORMAT,
            "format_version": MODEL_FORMAT_VERSION,
            "feature_spec_version": FEATURE_SPEC_VERSION,
            "classes": list(CLASSES),
            "vocabulary": self.vectorizer_.vocabulary_,
            "coef": [[float(v) for v in row] for row in self.coef_],
            "intercept": [float(v) for v in self.intercept_],
            "config": {
                "l2": self.l2,
                "step": self.step,
                "epochs": self.epochs,
                "batch_size": self.batch_size,
                "seed": self.seed,
            },
            "loss_trace": [float(v) for v in self.loss_trace_],
        }

    def save(self, path: str) -> None:
        """Canonical JSON: sorted keys, no whitespace, repr-exact floats."""
        payload = json.dumps(self.to_record(), sort_keys=True, separators=(",", ":"))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(payload)
            fh.write("\n")

    @classmethod
    def from_record(cls, record: dict) -> "ConnectiveClassifier":
        if record.get("format") != MODEL_FORMAT:
            raise DataFormatError(f"not a {MODEL_FORMAT} file")
        if record.get("format_version") != MODEL_FORMAT_VERSION:
            raise DataFormatError(
                f"unsupported format version {record.get('format_version')!r}"
            )
        if record.get("feature_spec_version") != FEATURE_SPEC_VERSION:
            raise DataFormatError(
                f"feature spec version mismatch: file has "
                f"{record.get('feature_spec_version')!r}, "
                f"this build expects {FEATURE_SPEC_VERSION}"
            )
        if record.get("classes") != list(CLASSES):
            raise DataFormatError("class list does not match this build")
        config = record["config"]
        model = cls(
            l2=config["l2"],
            step=config["step"],
            epochs=config["epochs"],
            batch_size=config["batch_size"],
            seed=config["seed"],
        )
        vectorizer = PairVectorizer()
        vectorizer.vocabulary_ = {
            str(k): int(v) for k, v in record["vocabulary"].items()
        }
        model.vectorizer_ = vectorizer
        model.classes_ = np.array(CLASSES)
        model.coef_ = np.array(record["coef"], dtype=np.float64)
        model.intercept_ = np.array(record["intercept"], dtype=np.float64)
        model.loss_trace_ = [float(v) for v in record["loss_trace"]]
        if model.coef_.shape != (len(CLASSES), len(vectorizer.vocabulary_)):
            raise DataFormatError("weight matrix does not match vocabulary")
        return model

    @classmethod
    def load(cls, path: str) -> "ConnectiveClassifier":
        with open(path, encoding="utf-8") as fh:
            try:
                record = json.load(fh)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"bad model file: {exc.msg}") from None
        return cls.from_record(record)


def train(
    examples: Sequence[TrainingExample],
    seed: int,
    l2: float = 1e-4,
    step: float = 0.1,
    epochs: int = 3,
    batch_size: int = 64,
) -> ConnectiveClassifier:
    """Fit a classifier on labeled examples."""
    model = ConnectiveClassifier(
        l2=l2, step=step, epochs=epochs, batch_size=batch_size, seed=seed
    )
    return model.fit([(e.arg1, e.arg2) for e in examples], [e.label for e in examples])


# --- training-set construction ----------------------------------------------


def build_training_set(
    utterances: Iterable[Utterance],
    seed: int,
    none_ratio: float = 0.3,
    min_len: int = 7,
    max_len: int = 25,
    lexicon: TagLexicon | None = None,
) -> list[TrainingExample]:
    """Positives from extraction plus synthesized NONE pairs.

    Utterances are length-filtered first; every extracted instance yields an
    example labeled with its connective.  NONE examples pair arg1 and arg2
    from instances of different documents (utterances), sampled with a
    seeded PRNG and never reusing a pair.
    """
    if none_ratio < 0:
        raise ValueError("none_ratio must be >= 0")
    kept = [u for u in utterances if length_filter(u, min_len, max_len)]
    instances = extract_all(kept, lexicon)
    positives = [
        TrainingExample(instance.arg1_tokens(), instance.arg2_tokens(), instance.connective)
        for instance in instances
    ]
    wanted = math.ceil(none_ratio * len(positives))
    if wanted == 0:
        return positives
    documents = {instance.utterance_id for instance in instances}
    if len(documents) < 2:
        raise ValueError(
            "cannot synthesize NONE examples: need instances from at least 2 documents"
        )
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    used: set[tuple[int, int]] = set()
    negatives: list[TrainingExample] = []
    budget = 1000 * wanted
    while len(negatives) < wanted:
        if budget == 0:
            raise ValueError(
                f"could not synthesize {wanted} distinct NONE pairs; corpus too small"
            )
        budget -= 1
        i, j = (int(v) for v in rng.integers(0, len(instances), 2))
        if instances[i].utterance_id == instances[j].utterance_id:
            continue
        if (i, j) in used:
            continue
        used.add((i, j))
        negatives.append(
            TrainingExample(
                instances[i].arg1_tokens(), instances[j].arg2_tokens(), NONE_LABEL
            )
        )
    return positives + negatives


# --- evaluation --------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    accuracy: float
    macro_f1: float
    macro_f1_without_none: float | None
    per_class: dict[str, dict[str, float]]
    n: int

    def to_record(self) -> dict:
        return {
            "n": self.n,
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "macro_f1_without_none": self.macro_f1_without_none,
            "per_class": self.per_class,
        }


def per_class_scores(
    golds: Sequence[str], preds: Sequence[str]
) -> dict[str, dict[str, float]]:
    """Precision/recall/F1/support per class present in gold or predictions."""
    golds = list(golds)
    preds = list(preds)
    present = [c for c in CLASSES if c in set(golds) | set(preds)]
    out: dict[str, dict[str, float]] = {}
    for c in present:
        tp = sum(1 for g, p in zip(golds, preds) if g == c and p == c)
        fp = sum(1 for g, p in zip(golds, preds) if g != c and p == c)
        fn = sum(1 for g, p in zip(golds, preds) if g == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * tp / (2 * tp + fp + fn) if 2 * tp + fp + fn else 0.0
        out[c] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": float(golds.count(c)),
        }
    return out


def evaluate_model(
    model, examples: Sequence[TrainingExample]
) -> EvalReport:
    """Accuracy plus macro-F1 with and without the NONE class in the mean.

    The without-NONE variant keeps every example but drops the NONE class
    from the averaged set, since it is unstated whether headline macro-F1
    figures include it.
    """
    if not examples:
        raise ValueError("no evaluation examples")
    golds = [e.label for e in examples]
    preds = [
        model.predict_one(e.arg1, e.arg2).label for e in examples
    ]
    table = per_class_scores(golds, preds)
    accuracy = sum(1 for g, p in zip(golds, preds) if g == p) / len(golds)
    f1_all = sum(row["f1"] for row in table.values()) / len(table)
    core = [c for c in table if c != NONE_LABEL]
    f1_core = sum(table[c]["f1"] for c in core) / len(core) if core else None
    return EvalReport(
        accuracy=accuracy,
        macro_f1=f1_all,
        macro_f1_without_none=f1_core,
        per_class=table,
        n=len(examples),
    )


def render_eval(report: EvalReport) -> str:
    lines = [
        f"examples            {report.n}",
        f"accuracy            {report.accuracy:.3f}",
        f"macro-F1            {report.macro_f1:.3f}",
    ]
    if report.macro_f1_without_none is not None:
        lines.append(f"macro-F1 (no NONE)  {report.macro_f1_without_none:.3f}")
    lines.append("")
    lines.append(f"{'class':<10} {'prec':>6} {'rec':>6} {'f1':>6} {'support':>8}")
    for c, row in report.per_class.items():
        lines.append(
            f"{c:<10} {row['precision']:6.3f} {row['recall']:6.3f} "
            f"{row['f1']:6.3f} {row['support']:8.0f}"
        )
    return "\n".join(lines)


# --- examples JSONL ----------------------------------------------------------


def write_examples(examples: Iterable[TrainingExample], fh: TextIO) -> None:
    for e in examples:
        record = {"arg1": list(e.arg1), "arg2": list(e.arg2), "label": e.label}
        fh.write(json.dumps(record, ensure_ascii=False))
        fh.write("\n")


def read_examples(fh: TextIO) -> list[TrainingExample]:
    out: list[TrainingExample] = []
    for lineno, raw in enumerate(fh, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"bad JSON: {exc.msg}", line=lineno) from None
        try:
            example = TrainingExample(
                tuple(record["arg1"]), tuple(record["arg2"]), record["label"]
            )
        except KeyError as exc:
            raise DataFormatError(
                f"missing field {exc.args[0]!r}", line=lineno
            ) from None
        except ValueError as exc:
            raise DataFormatError(str(exc), line=lineno) from None
        out.append(example)
    return out


# --- external predictor protocol ---------------------------------------------


class SubprocessPredictor:
    """Client half of the line-delimited JSON predictor protocol.

    One request per line: {"arg1": [...], "arg2": [...]}.  One response per
    line: {"label": ..., "scores": {...}}.  The server is any executable;
    the bundled one is `conncheck predict --stdio`.
    """

    def __init__(self, command: Sequence[str]):
        self._command = list(command)
        self._process = subprocess.Popen(
            self._command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def predict_one(self, arg1: Sequence[str], arg2: Sequence[str]) -> Prediction:
        if self._process.poll() is not None:
            raise RuntimeError(
                f"predictor process exited with {self._process.returncode}"
            )
        request = json.dumps(
            {"arg1": list(arg1), "arg2": list(arg2)}, ensure_ascii=False
        )
        assert self._process.stdin is not None and self._process.stdout is not None
        self._process.stdin.write(request + "\n")
        self._process.stdin.flush()
        line = self._process.stdout.readline()
        if not line:
            raise RuntimeError("predictor process closed its output")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RuntimeError(f"bad predictor response: {exc.msg}") from None
        if not isinstance(response, dict) or "label" not in response or "scores" not in response:
            raise RuntimeError("predictor response must carry label and scores")
        scores = {str(k): float(v) for k, v in response["scores"].items()}
        return Prediction(
            label=str(response["label"]),
            scores=scores,
            all_unknown=bool(response.get("all_unknown", False)),
        )

    def close(self) -> None:
        if self._process.stdin is not None:
            self._process.stdin.close()
        self._process.wait(timeout=10)

    def __enter__(self) -> "SubprocessPredictor":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
