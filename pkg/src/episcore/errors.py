"""Exception types shared across the pipeline.

Three failure families map onto the CLI exit codes: ConfigError (3),
DataError (2), InvariantViolation (4). Ingest-style operations collect
row-level problems into a BatchError instead of failing on the first one.
"""

from __future__ import annotations


class EpiscoreError(Exception):
    """Base class for all package errors."""


class ConfigError(EpiscoreError):
    """Bad or missing configuration (paths, keys, value ranges)."""


class DataError(EpiscoreError):
    """Defective input data or an operation misuse detectable from data."""


class InvariantViolation(EpiscoreError):
    """An internal consistency check failed; indicates a bug, not bad input."""


class BatchError(DataError):
    """A collection of per-row errors reported together."""

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [str(e) for e in self.errors]
        super().__init__("%d error(s):\n  %s" % (len(lines), "\n  ".join(lines)))


# --- ingest ---------------------------------------------------------------

class MissingColumn(DataError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"required column missing: {name!r}")


class MalformedNumber(DataError):
    def __init__(self, row, column, value, reason=""):
        self.row = row
        self.column = column
        self.value = value
        detail = f" ({reason})" if reason else ""
        super().__init__(f"row {row}: column {column!r} has bad value {value!r}{detail}")


class InconsistentEpisodeId(DataError):
    def __init__(self, row, episode_id):
        self.row = row
        self.episode_id = episode_id
        super().__init__(
            f"row {row}: episode_id {episode_id!r} disagrees with season/episode columns"
        )


class DuplicateEpisodeId(DataError):
    def __init__(self, episode_id):
        self.episode_id = episode_id
        super().__init__(f"duplicate episode_id: {episode_id!r}")


class NoMatchingTable(DataError):
    def __init__(self):
        super().__init__('no table with "Directed by" and "viewers" header cells found')


class UnparseableRow(DataError):
    def __init__(self, index, reason=""):
        self.index = index
        self.reason = reason
        detail = f": {reason}" if reason else ""
        super().__init__(f"table row {index} could not be parsed{detail}")


class UnreadableFile(DataError):
    def __init__(self, path, reason=""):
        self.path = str(path)
        self.reason = reason
        detail = f": {reason}" if reason else ""
        super().__init__(f"unreadable file {self.path}{detail}")


class AmbiguousEpisodeId(DataError):
    def __init__(self, path, episode_id):
        self.path = str(path)
        self.episode_id = episode_id
        super().__init__(f"{self.path} resolves to {episode_id}, already claimed by another file")


class UnmatchedScript(DataError):
    def __init__(self, episode_id):
        self.episode_id = episode_id
        super().__init__(f"script {episode_id} has no metadata row")


class MissingScript(DataError):
    def __init__(self, episode_id):
        self.episode_id = episode_id
        super().__init__(f"no script for episode {episode_id}")


# --- textprep -------------------------------------------------------------

class UnknownTerm(DataError):
    def __init__(self, term, doc_id):
        self.term = term
        self.doc_id = doc_id
        super().__init__(f"term {term!r} in doc {doc_id} is not in the vocabulary")


# --- topics ---------------------------------------------------------------

class EmptyCorpus(DataError):
    def __init__(self):
        super().__init__("cannot fit a topic model on an empty corpus")


class EmptyDocument(DataError):
    def __init__(self, doc_id):
        self.doc_id = doc_id
        super().__init__(f"document {doc_id} has no tokens")


class TopicOutOfRange(DataError):
    def __init__(self, topic, num_topics):
        self.topic = topic
        self.num_topics = num_topics
        super().__init__(f"topic {topic} out of range for a {num_topics}-topic model")


class VocabularyMismatch(DataError):
    def __init__(self, detail=""):
        super().__init__(f"model and corpus vocabularies differ{': ' + detail if detail else ''}")


# --- features / models / evaluate ------------------------------------------

class ColumnCountMismatch(DataError):
    def __init__(self, expected, got):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected} columns, got {got}")


class TooFewRows(DataError):
    def __init__(self, needed, got):
        super().__init__(f"need at least {needed} rows, got {got}")


class KTooLarge(DataError):
    def __init__(self, k, n_rows):
        self.k = k
        self.n_rows = n_rows
        super().__init__(f"k={k} is not in [1, {n_rows}] for {n_rows} stored rows")


class LengthMismatch(DataError):
    def __init__(self, a, b):
        super().__init__(f"vector lengths differ: {a} vs {b}")


class EmptyInput(DataError):
    def __init__(self, what="input"):
        super().__init__(f"{what} is empty")


class KOutOfRange(DataError):
    def __init__(self, k, n):
        super().__init__(f"fold count k={k} must satisfy 2 <= k <= n={n}")


class SchemaVersionMismatch(DataError):
    def __init__(self, found, supported):
        self.found = found
        self.supported = supported
        super().__init__(f"artifact schema version {found} not supported (expected {supported})")
