"""Script cleanup: boilerplate stripping, tokens, stopwords, lemmas, bag of words.

Every step is a pure function over its inputs, so the whole pipeline is
deterministic: the same text and the same rule tables always produce the
same bag of words. Tokens are lowercase ASCII letter runs of length >= 2.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import UnknownTerm

MIN_TOKEN_LEN = 2

# Words layered on top of the bundled English list by default: high-frequency
# fillers of the source scripts that carry no topical signal.
DEFAULT_CUSTOM_STOPWORDS = ("from", "arrow", "oh")

_NON_LETTER = re.compile(r"[^a-z]+")
# Trailing doubled consonants that stay doubled after stripping ing/ed.
_KEEP_DOUBLED = frozenset("lsz")
_VOWELS = frozenset("aeiou")


def _read_data_text(name: str) -> str:
    return resources.files("episcore.data").joinpath(name).read_text(encoding="utf-8")


@dataclass(frozen=True)
class StopwordList:
    """A set of lowercase words to drop before modeling."""

    words: frozenset

    def __post_init__(self):
        for w in self.words:
            if w != w.lower() or any(c.isspace() for c in w):
                raise ValueError(f"stopword entries must be lowercase, no whitespace: {w!r}")

    def __contains__(self, token):
        return token in self.words

    def __len__(self):
        return len(self.words)

    def union(self, extra) -> "StopwordList":
        return StopwordList(self.words | frozenset(w.lower() for w in extra))

    @classmethod
    def from_text(cls, text: str) -> "StopwordList":
        words = set()
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                words.add(line.lower())
        return cls(frozenset(words))

    @classmethod
    def from_file(cls, path) -> "StopwordList":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    @classmethod
    def default(cls, extra=()) -> "StopwordList":
        """Bundled English list plus the default custom additions plus `extra`."""
        base = cls.from_text(_read_data_text("stopwords_en.txt"))
        return base.union(DEFAULT_CUSTOM_STOPWORDS).union(extra)


@dataclass(frozen=True)
class LemmaRules:
    """Ordered suffix rewrite rules plus an exact-match exception table."""

    suffix_rules: tuple
    exceptions: dict

    @classmethod
    def from_text(cls, text: str) -> "LemmaRules":
        suffixes = []
        exceptions = {}
        section = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if line.strip() == "[suffixes]":
                section = "suffixes"
                continue
            if line.strip() == "[exceptions]":
                section = "exceptions"
                continue
            left, sep, right = line.partition("\t")
            if section == "suffixes":
                # a bare suffix (no tab survives many editors) means "strip"
                suffixes.append((left.strip(), right.strip()))
            elif section == "exceptions":
                if not sep:
                    raise ValueError(f"lemma exception line {lineno} is not tab-separated: {line!r}")
                exceptions[left.strip()] = right.strip()
            else:
                raise ValueError(f"lemma rule line {lineno} appears before a section header")
        return cls(tuple(suffixes), exceptions)

    @classmethod
    def from_file(cls, path) -> "LemmaRules":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    @classmethod
    def default(cls) -> "LemmaRules":
        return cls.from_text(_read_data_text("lemma_rules.tsv"))


@dataclass(frozen=True)
class TokenizedDoc:
    episode_id: str
    tokens: tuple


@dataclass(frozen=True)
class Vocabulary:
    """Unique terms in first-appearance order with a term -> id index."""

    terms: tuple
    index: dict = field(repr=False)

    @classmethod
    def from_terms(cls, terms) -> "Vocabulary":
        terms = tuple(terms)
        index = {t: i for i, t in enumerate(terms)}
        if len(index) != len(terms):
            raise ValueError("vocabulary terms must be unique")
        return cls(terms, index)

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return term in self.index

    def id_of(self, term) -> int:
        return self.index[term]


class BagOfWords:
    """Sparse document-term counts (CSR layout) over a fixed vocabulary."""

    def __init__(self, doc_ids, vocabulary: Vocabulary, indptr, indices, data):
        self.doc_ids = tuple(doc_ids)
        self.vocabulary = vocabulary
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.int64)
        if len(self.indptr) != len(self.doc_ids) + 1:
            raise ValueError("indptr length must be n_docs + 1")
        if np.any(self.data < 0):
            raise ValueError("counts must be non-negative")
        if self.indices.size and (self.indices.min() < 0 or self.indices.max() >= len(vocabulary)):
            raise ValueError("term id out of vocabulary range")

    @property
    def n_docs(self) -> int:
        return len(self.doc_ids)

    @property
    def n_terms(self) -> int:
        return len(self.vocabulary)

    @property
    def total_tokens(self) -> int:
        return int(self.data.sum())

    def row(self, d):
        """(term ids, counts) for document d, ids ascending."""
        lo, hi = self.indptr[d], self.indptr[d + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def row_total(self, d) -> int:
        lo, hi = self.indptr[d], self.indptr[d + 1]
        return int(self.data[lo:hi].sum())

    def row_totals(self) -> np.ndarray:
        return np.array([self.row_total(d) for d in range(self.n_docs)], dtype=np.int64)

    def column_totals(self) -> np.ndarray:
        totals = np.zeros(self.n_terms, dtype=np.int64)
        np.add.at(totals, self.indices, self.data)
        return totals

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.n_docs, self.n_terms), dtype=np.int64)
        for d in range(self.n_docs):
            ids, counts = self.row(d)
            dense[d, ids] = counts
        return dense

    def __eq__(self, other):
        if not isinstance(other, BagOfWords):
            return NotImplemented
        return (
            self.doc_ids == other.doc_ids
            and self.vocabulary.terms == other.vocabulary.terms
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )


def strip_boilerplate(text: str, markers) -> str:
    """Drop a leading region that starts with any marker prefix.

    The region runs through the first blank line after the marker; if no
    blank line follows, the rest of the text is considered boilerplate.
    Applied repeatedly, so stacked intro blocks are all removed.
    """
    blank = re.compile(r"\n[ \t]*\n")
    changed = True
    while changed:
        changed = False
        lead = text.lstrip()
        for marker in markers:
            if marker and lead.startswith(marker):
                m = blank.search(lead, len(marker))
                text = lead[m.end():].lstrip("\r\n") if m else ""
                changed = True
                break
    return text


def tokenize(text: str):
    """Lowercase letter runs, split on anything else, length >= 2 kept."""
    return [t for t in _NON_LETTER.split(text.lower()) if len(t) >= MIN_TOKEN_LEN]


def remove_stopwords(tokens, stoplist: StopwordList):
    return [t for t in tokens if t not in stoplist]


def lemmatize(token: str, rules: LemmaRules) -> str:
    """Map an inflected form to its lemma via the rule table.

    Lookup order: the exception table, then the first matching suffix rule.
    A strip rule of suffix length >= 2 needs a stem of at least 3 letters
    and undoubles a trailing doubled consonant other than l/s/z; any rule
    must leave at least MIN_TOKEN_LEN letters.
    """
    hit = rules.exceptions.get(token)
    if hit is not None:
        return hit
    for suffix, replacement in rules.suffix_rules:
        if not token.endswith(suffix) or len(token) == len(suffix):
            continue
        stem = token[: -len(suffix)]
        if replacement == "" and len(suffix) >= 2:
            if len(stem) < 3:
                continue
            if stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in _KEEP_DOUBLED:
                stem = stem[:-1]
        candidate = stem + replacement
        if len(candidate) < MIN_TOKEN_LEN:
            continue
        return candidate
    return token


def clean_text(text, stoplist, rules, markers=(), min_len=MIN_TOKEN_LEN):
    """Full per-document pipeline: strip, tokenize, filter, lemmatize, refilter.

    Stopwords are removed again after lemmatization because a lemma can
    collapse onto a stopword.
    """
    tokens = tokenize(strip_boilerplate(text, markers))
    tokens = [t for t in tokens if len(t) >= min_len]
    tokens = remove_stopwords(tokens, stoplist)
    lemmas = [lemmatize(t, rules) for t in tokens]
    return [t for t in remove_stopwords(lemmas, stoplist) if len(t) >= min_len]


def build_vocabulary(docs) -> Vocabulary:
    """Unique terms in first-appearance order over docs in document order."""
    terms = []
    seen = set()
    for doc in docs:
        for token in doc.tokens:
            if token not in seen:
                seen.add(token)
                terms.append(token)
    return Vocabulary.from_terms(terms)


def to_bag_of_words(docs, vocab: Vocabulary) -> BagOfWords:
    indptr = [0]
    indices = []
    data = []
    for doc in docs:
        counts = {}
        for token in doc.tokens:
            tid = vocab.index.get(token)
            if tid is None:
                raise UnknownTerm(token, doc.episode_id)
            counts[tid] = counts.get(tid, 0) + 1
        for tid in sorted(counts):
            indices.append(tid)
            data.append(counts[tid])
        indptr.append(len(indices))
    return BagOfWords([d.episode_id for d in docs], vocab, indptr, indices, data)


def word_frequencies(bow: BagOfWords, top_n: int):
    """Top corpus term counts, descending, ties broken by vocabulary order."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    totals = bow.column_totals()
    order = sorted(range(len(totals)), key=lambda v: (-totals[v], v))
    top = order[: min(top_n, len(totals))]
    return [(bow.vocabulary.terms[v], int(totals[v])) for v in top]
