"""Annotated corpora: the token-per-line file format, vocabularies,
pretrained embeddings and cross-validation splits.

A sentence is a sequence of tokens; its gold annotation is a list of
non-overlapping target spans, each carrying one sentiment polarity.
Polarities are written "+" (positive), "-" (negative) and "0" (neutral)
throughout the code; the file format spells them POS/NEG/NEU.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

POSITIVE = "+"
NEGATIVE = "-"
NEUTRAL = "0"
POLARITIES = (POSITIVE, NEGATIVE, NEUTRAL)

_POLARITY_TO_SUFFIX = {POSITIVE: "POS", NEGATIVE: "NEG", NEUTRAL: "NEU"}
_SUFFIX_TO_POLARITY = {v: k for k, v in _POLARITY_TO_SUFFIX.items()}

UNK = "<unk>"


class AnnotationError(ValueError):
    """Malformed annotation text; carries the 1-based offending line."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmbeddingFormatError(ValueError):
    """Malformed pretrained-embedding text file."""


@dataclass(frozen=True)
class Sentence:
    """A tokenized sentence; tokens double as their character sequences."""

    tokens: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) < 1:
            raise ValueError("sentence must contain at least one token")
        for t in self.tokens:
            if t == "":
                raise ValueError("empty token")
            if "\t" in t or "\n" in t:
                raise ValueError(f"token {t!r} would break the token-per-line format")
        object.__setattr__(self, "tokens", tuple(self.tokens))

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True, order=True)
class SpanLabel:
    """One target: 1-based inclusive token range plus its polarity."""

    start: int
    end: int
    polarity: str

    def __post_init__(self):
        if not 1 <= self.start <= self.end:
            raise ValueError(f"bad span bounds ({self.start}, {self.end})")
        if self.polarity not in POLARITIES:
            raise ValueError(f"unknown polarity {self.polarity!r}")

    def __len__(self):
        return self.end - self.start + 1


def _check_spans(sentence, spans):
    prev_end = 0
    for s in spans:
        if s.end > len(sentence):
            raise ValueError(f"span {s} exceeds sentence length {len(sentence)}")
        if s.start <= prev_end:
            raise ValueError(f"span {s} overlaps or is out of order")
        prev_end = s.end


@dataclass
class Dataset:
    """Sentences paired with their (possibly empty) span annotations."""

    items: list[tuple[Sentence, tuple[SpanLabel, ...]]] = field(default_factory=list)

    def __post_init__(self):
        checked = []
        for sentence, spans in self.items:
            spans = tuple(sorted(spans))
            _check_spans(sentence, spans)
            checked.append((sentence, spans))
        self.items = checked

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def subset(self, indices):
        return Dataset([self.items[i] for i in indices])


def spans_to_tags(n, spans):
    """Render spans as a per-token tag list (O / B-XXX / I-XXX)."""
    tags = ["O"] * n
    for s in spans:
        suffix = _POLARITY_TO_SUFFIX[s.polarity]
        tags[s.start - 1] = f"B-{suffix}"
        for k in range(s.start + 1, s.end + 1):
            tags[k - 1] = f"I-{suffix}"
    return tags


def tags_to_spans(tags, first_line=1):
    """Recover spans from a tag list; rejects orphan continuation tags."""
    spans = []
    open_span = None  # [start, end, polarity]
    for i, tag in enumerate(tags):
        lineno = first_line + i
        if tag == "O":
            if open_span:
                spans.append(SpanLabel(*open_span))
                open_span = None
            continue
        if len(tag) < 3 or tag[1] != "-" or tag[2:] not in _SUFFIX_TO_POLARITY:
            raise AnnotationError(f"unknown tag {tag!r}", line=lineno)
        polarity = _SUFFIX_TO_POLARITY[tag[2:]]
        if tag[0] == "B":
            if open_span:
                spans.append(SpanLabel(*open_span))
            open_span = [i + 1, i + 1, polarity]
        elif tag[0] == "I":
            if open_span is None or open_span[2] != polarity:
                raise AnnotationError(
                    f"continuation tag {tag!r} without a matching B- tag", line=lineno
                )
            open_span[1] = i + 1
        else:
            raise AnnotationError(f"unknown tag {tag!r}", line=lineno)
    if open_span:
        spans.append(SpanLabel(*open_span))
    return spans


def parse_annotations(text, allow_untagged=False):
    """Parse token<TAB>tag lines into a Dataset.

    Sentences are separated by blank lines. With allow_untagged, a line
    may hold just the token; missing tags are read as O.
    """
    items = []
    tokens, tags = [], []
    sent_first_line = 1

    def flush():
        if tokens:
            sentence = Sentence(tuple(tokens))
            spans = tags_to_spans(tags, first_line=sent_first_line)
            items.append((sentence, tuple(spans)))
            tokens.clear()
            tags.clear()

    for lineno, line in enumerate(text.split("\n"), start=1):
        if line == "":
            flush()
            sent_first_line = lineno + 1
            continue
        fields = line.split("\t")
        if len(fields) == 1 and allow_untagged:
            fields = [fields[0], "O"]
        if len(fields) != 2:
            raise AnnotationError(
                f"expected 2 tab-separated fields, got {len(fields)}", line=lineno
            )
        token, tag = fields
        if token == "":
            raise AnnotationError("empty token", line=lineno)
        if not tokens:
            sent_first_line = lineno
        tokens.append(token)
        tags.append(tag)
    flush()
    return Dataset(items)


def emit_annotations(dataset):
    """Inverse of parse_annotations; emits the canonical text form."""
    chunks = []
    for sentence, spans in dataset:
        tags = spans_to_tags(len(sentence), spans)
        for token, tag in zip(sentence.tokens, tags):
            chunks.append(f"{token}\t{tag}\n")
        chunks.append("\n")
    return "".join(chunks)


class Vocabulary:
    """Word and character inventories with a reserved UNK id (always 0).

    Lookups are total: a word misses to its lowercase form and then to
    UNK, a character misses straight to UNK.
    """

    def __init__(self, words, chars):
        self.words = [UNK] + sorted(set(words) - {UNK})
        self.chars = [UNK] + sorted(set(chars) - {UNK})
        self._word_ids = {w: i for i, w in enumerate(self.words)}
        self._char_ids = {c: i for i, c in enumerate(self.chars)}

    unk_id = 0

    @classmethod
    def from_dataset(cls, dataset):
        words, chars = set(), set()
        for sentence, _ in dataset:
            for token in sentence.tokens:
                words.add(token)
                chars.update(token)
        return cls(words, chars)

    def word_id(self, token):
        wid = self._word_ids.get(token)
        if wid is None:
            wid = self._word_ids.get(token.lower(), self.unk_id)
        return wid

    def char_id(self, ch):
        return self._char_ids.get(ch, self.unk_id)

    def __contains__(self, token):
        return token in self._word_ids


def _init_vector(rng, dim):
    # symmetric small-range init for words missing from the pretrained file
    bound = np.sqrt(3.0 / dim)
    return rng.uniform(-bound, bound, size=dim)


@dataclass
class EmbeddingTable:
    """Per-word-id vectors; row i belongs to vocabulary word i."""

    dim: int
    vectors: np.ndarray

    @classmethod
    def random(cls, vocab, dim, seed=0):
        rng = np.random.default_rng(seed)
        vectors = np.stack([_init_vector(rng, dim) for _ in vocab.words])
        return cls(dim, vectors)


def load_embeddings(path, vocab, seed=0):
    """Read a "word v1 ... vd" text file and align it with the vocabulary.

    Words absent from the file (tried verbatim, then lowercased) get a
    seeded uniform init in +-sqrt(3/d); so does UNK.
    """
    by_word = {}
    dim = None
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise EmbeddingFormatError(f"line {lineno}: no vector components")
            elif len(values) != dim:
                raise EmbeddingFormatError(
                    f"line {lineno}: expected {dim} components, got {len(values)}"
                )
            try:
                by_word[word] = np.array([float(v) for v in values])
            except ValueError as exc:
                raise EmbeddingFormatError(f"line {lineno}: {exc}") from exc
    if dim is None:
        raise EmbeddingFormatError("embedding file holds no vectors")

    rng = np.random.default_rng(seed)
    vectors = np.empty((len(vocab.words), dim))
    hits = 0
    for i, word in enumerate(vocab.words):
        vec = by_word.get(word)
        if vec is None:
            vec = by_word.get(word.lower())
        if vec is None or word == UNK:
            vectors[i] = _init_vector(rng, dim)
        else:
            vectors[i] = vec
            hits += 1
    log.info("embeddings: %d/%d vocabulary words found in %s", hits, len(vocab.words), path)
    return EmbeddingTable(dim, vectors)


def make_folds(dataset, k, dev_fraction, seed):
    """Split sentence indices into k (train, dev, test) index triples.

    Test partitions are disjoint and jointly cover the dataset; within a
    fold, dev takes dev_fraction of the non-test sentences. Entirely
    deterministic in the seed.
    """
    n = len(dataset)
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")
    if not 0 <= dev_fraction < 1:
        raise ValueError("dev_fraction must be in [0, 1)")

    rng = np.random.default_rng(seed)
    order = list(rng.permutation(n))
    # spread the remainder over the first folds
    base, extra = divmod(n, k)
    folds = []
    pos = 0
    for f in range(k):
        size = base + (1 if f < extra else 0)
        test = sorted(order[pos : pos + size])
        pos += size
        rest = [i for i in order if i not in set(test)]
        n_dev = int(round(dev_fraction * len(rest)))
        fold_rng = np.random.default_rng((seed, f))
        shuffled = list(np.array(rest)[fold_rng.permutation(len(rest))])
        dev = sorted(int(i) for i in shuffled[:n_dev])
        train = sorted(int(i) for i in shuffled[n_dev:])
        folds.append((train, dev, test))
    return folds


def fold_manifest(folds):
    """One line per fold listing train/dev/test sentence indices."""
    lines = []
    for f, (train, dev, test) in enumerate(folds):
        lines.append(
            "fold %d train %s dev %s test %s"
            % (
                f,
                ",".join(map(str, train)),
                ",".join(map(str, dev)),
                ",".join(map(str, test)),
            )
        )
    return "\n".join(lines) + "\n"
