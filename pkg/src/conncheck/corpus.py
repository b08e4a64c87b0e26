"""Corpus ingestion: tokenization, coarse tagging, and length filtering.

The tagger only needs to discriminate verbs, adjectives, adverbs, and
punctuation; everything else is OTHER.  It is a lexicon plus a few suffix
fallbacks, shipped as a versioned data file, so the whole pipeline stays
deterministic and dependency-free.  A pre-tagged input format lets users
substitute an external tagger.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Iterator

from .errors import DataFormatError

VERB = "VERB"
ADJ = "ADJ"
ADV = "ADV"
PUNCT = "PUNCT"
OTHER = "OTHER"

TAGS = (VERB, ADJ, ADV, PUNCT, OTHER)

_DEFAULT_LEXICON_RESOURCE = "taglex_v1.tsv"


@dataclass(frozen=True)
class Token:
    """One token; ``tag`` is None until :func:`tag` has run."""

    surface: str
    lower: str
    index: int
    tag: str | None = None


@dataclass
class Utterance:
    id: str
    source: str
    prompt: str | None
    tokens: list[Token]

    @property
    def text(self) -> str:
        return " ".join(t.surface for t in self.tokens)


def _is_punct_char(ch: str) -> bool:
    return not ch.isalnum() and not ch.isspace()


def _is_punct_surface(surface: str) -> bool:
    return all(_is_punct_char(ch) for ch in surface)


def _split_chunk(chunk: str) -> list[str]:
    """Split one whitespace-delimited chunk into token surfaces.

    Leading and trailing punctuation peel off as separate tokens.  An
    apostrophe-led contraction piece ("'m", "'ll") stays whole, and "n't"
    splits off its host ("do" + "n't").
    """
    suffix: list[str] = []
    core = chunk
    while core and _is_punct_char(core[-1]):
        suffix.append(core[-1])
        core = core[:-1]
    prefix: list[str] = []
    while core and _is_punct_char(core[0]):
        if core[0] == "'" and len(core) > 1 and core[1].isalpha():
            break
        prefix.append(core[0])
        core = core[1:]
    pieces: list[str] = []
    if core:
        lower = core.lower()
        if lower.endswith("n't") and len(core) > 3:
            pieces = [core[:-3], core[-3:]]
        elif lower == "n't":
            pieces = [core]
        else:
            cut = core.find("'", 1)
            if cut != -1 and cut + 1 < len(core) and core[cut + 1].isalpha():
                pieces = [core[:cut], core[cut:]]
            else:
                pieces = [core]
    return prefix + pieces + suffix[::-1]


def tokenize(text: str) -> list[Token]:
    """Whitespace tokenization with punctuation and contraction splitting.

    Joining the surfaces with single spaces and tokenizing again is a fixed
    point.  Raises ValueError on empty (or whitespace-only) input.
    """
    surfaces: list[str] = []
    for chunk in text.split():
        surfaces.extend(_split_chunk(chunk))
    if not surfaces:
        raise ValueError("empty input: no tokens")
    return [Token(s, s.lower(), i) for i, s in enumerate(surfaces)]


@dataclass(frozen=True)
class TagLexicon:
    """Word lists and suffix fallbacks backing the coarse tagger.

    The three sets are disjoint; on collision the priority is verbs over
    adjectives over adverbs.  Suffix rules apply in order; a VERB suffix rule
    only fires when the de-suffixed stem (allowing final-consonant doubling
    and a dropped "e") is a known verb.
    """

    verbs: frozenset[str]
    adjectives: frozenset[str]
    adverbs: frozenset[str]
    suffix_rules: tuple[tuple[str, str], ...]
    version: str

    @classmethod
    def build(
        cls,
        verbs: Iterable[str],
        adjectives: Iterable[str],
        adverbs: Iterable[str],
        suffix_rules: Iterable[tuple[str, str]] = (),
        version: str = "custom",
    ) -> "TagLexicon":
        v = frozenset(w.lower() for w in verbs)
        a = frozenset(w.lower() for w in adjectives) - v
        d = frozenset(w.lower() for w in adverbs) - v - a
        return cls(v, a, d, tuple(suffix_rules), version)

    @classmethod
    def load(cls, path: str | Path) -> "TagLexicon":
        """Load a TSV lexicon (form<TAB>tag rows, versioned header line).

        Rows whose form starts with "-" are suffix rules, kept in file order.
        """
        verbs: list[str] = []
        adjectives: list[str] = []
        adverbs: list[str] = []
        suffixes: list[tuple[str, str]] = []
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if not header.startswith("# conncheck-taglex v"):
                raise DataFormatError(f"{path}: missing taglex version header", line=1)
            version = header.removeprefix("# ").strip()
            for lineno, raw in enumerate(fh, start=2):
                line = raw.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2:
                    raise DataFormatError(f"{path}: expected form<TAB>tag", line=lineno)
                form, tagname = parts[0].strip().lower(), parts[1].strip().upper()
                if form.startswith("-"):
                    if tagname not in (VERB, ADJ, ADV):
                        raise DataFormatError(
                            f"{path}: bad suffix tag {tagname!r}", line=lineno
                        )
                    suffixes.append((form[1:], tagname))
                elif tagname == VERB:
                    verbs.append(form)
                elif tagname == ADJ:
                    adjectives.append(form)
                elif tagname == ADV:
                    adverbs.append(form)
                else:
                    raise DataFormatError(f"{path}: bad tag {tagname!r}", line=lineno)
        return cls.build(verbs, adjectives, adverbs, suffixes, version=version)

    @classmethod
    def default(cls) -> "TagLexicon":
        """The lexicon shipped with the package."""
        path = resources.files("conncheck") / "data" / _DEFAULT_LEXICON_RESOURCE
        with resources.as_file(path) as p:
            return cls.load(p)


def _known_verb_stem(word: str, suffix: str, verbs: frozenset[str]) -> bool:
    stem = word[: -len(suffix)]
    if len(stem) < 2:
        return False
    candidates = [stem, stem + "e"]
    if stem[-1] == stem[-2]:
        candidates.append(stem[:-1])
    return any(c in verbs for c in candidates)


def _tag_one(surface: str, lower: str, lexicon: TagLexicon) -> str:
    if _is_punct_surface(surface):
        return PUNCT
    if lower in lexicon.verbs:
        return VERB
    if lower in lexicon.adjectives:
        return ADJ
    if lower in lexicon.adverbs:
        return ADV
    for suffix, tagname in lexicon.suffix_rules:
        if not lower.endswith(suffix) or len(lower) <= len(suffix) + 1:
            continue
        if tagname == VERB and not _known_verb_stem(lower, suffix, lexicon.verbs):
            continue
        return tagname
    return OTHER


def tag(tokens: list[Token], lexicon: TagLexicon) -> list[Token]:
    """Tag every token; pure and deterministic."""
    return [replace(t, tag=_tag_one(t.surface, t.lower, lexicon)) for t in tokens]


def length_filter(utterance: Utterance, min_len: int, max_len: int) -> bool:
    """True iff the token count (punctuation included) is within bounds."""
    if min_len > max_len:
        raise ValueError(f"min_len {min_len} > max_len {max_len}")
    return min_len <= len(utterance.tokens) <= max_len


def _load_plain(fh: IO[str], source: str) -> Iterator[Utterance]:
    for lineno, raw in enumerate(fh, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            continue
        yield Utterance(str(lineno), source, None, tokenize(line))


def _load_jsonl(fh: IO[str], source: str) -> Iterator[Utterance]:
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"invalid JSON: {exc.msg}", line=lineno) from None
        if not isinstance(record, dict):
            raise DataFormatError("record is not an object", line=lineno)
        response = record.get("response")
        if not isinstance(response, str) or not response.strip():
            raise DataFormatError("missing or empty 'response' field", line=lineno)
        prompt = record.get("prompt")
        if prompt is not None and not isinstance(prompt, str):
            raise DataFormatError("'prompt' must be a string or null", line=lineno)
        yield Utterance(str(lineno), source, prompt, tokenize(response))


def _load_pretagged(fh: IO[str], source: str) -> Iterator[Utterance]:
    tokens: list[Token] = []
    count = 0

    def flush() -> Utterance:
        nonlocal tokens, count
        count += 1
        utt = Utterance(str(count), source, None, tokens)
        tokens = []
        return utt

    for lineno, raw in enumerate(fh, start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            if tokens:
                yield flush()
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataFormatError("expected token<TAB>tag", line=lineno)
        surface, tagname = parts[0], parts[1].strip().upper()
        if tagname not in TAGS:
            raise DataFormatError(f"unknown tag {tagname!r}", line=lineno)
        if _is_punct_surface(surface) != (tagname == PUNCT):
            raise DataFormatError(
                f"tag {tagname} inconsistent with surface {surface!r}", line=lineno
            )
        tokens.append(Token(surface, surface.lower(), len(tokens), tagname))
    if tokens:
        yield flush()


FORMATS = ("plain", "jsonl", "pretagged")


def load_corpus(path: str | Path, format: str, source: str | None = None) -> Iterator[Utterance]:
    """Stream utterances from a corpus file, order preserved.

    Formats: ``plain`` (one utterance per line, id = line number), ``jsonl``
    (dialog records ``{"prompt": str|null, "response": str}``), ``pretagged``
    (token<TAB>tag lines, blank-line separated).  Malformed records raise
    DataFormatError with the line number; nothing is silently skipped.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown corpus format {format!r}; expected one of {FORMATS}")
    path = Path(path)
    if source is None:
        source = path.stem
    loader = {"plain": _load_plain, "jsonl": _load_jsonl, "pretagged": _load_pretagged}[format]
    with open(path, encoding="utf-8") as fh:
        yield from loader(fh, source)
