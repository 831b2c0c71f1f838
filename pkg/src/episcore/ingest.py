"""Load episode metadata and scripts from local snapshot files and merge them.

Everything here reads files that were saved ahead of time; nothing touches
the network. Row-level problems are collected and raised together in a
BatchError so a whole dataset's defects surface in one pass.
"""

from __future__ import annotations

import hashlib
import html.parser
import re
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import (
    AmbiguousEpisodeId,
    BatchError,
    DuplicateEpisodeId,
    InconsistentEpisodeId,
    MalformedNumber,
    MissingColumn,
    MissingScript,
    NoMatchingTable,
    UnmatchedScript,
    UnparseableRow,
    UnreadableFile,
)

REQUIRED_COLUMNS = (
    "episode_id",
    "season",
    "episode",
    "title",
    "director",
    "viewers_millions",
    "imdb_rating",
    "review_count",
)

DEFAULT_SCRIPT_PATTERN = "s{SS}e{EE}.txt"

_EPISODE_ID = re.compile(r"^S(\d+)E(\d+)$")


@dataclass(frozen=True)
class EpisodeRecord:
    """One episode's metadata plus (after merge) its script text."""

    episode_id: str
    season: int
    episode_number: int
    title: str
    director_name: str
    viewers_millions: float
    imdb_rating: float
    review_count: int
    script_text: str = ""


@dataclass(frozen=True)
class SourceEntry:
    path: str
    kind: str
    checksum: str


@dataclass(frozen=True)
class RawDataset:
    """Merged records in (season, episode) order plus their file provenance."""

    records: tuple
    source_manifest: tuple = ()


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _parse_number(value, kind, row, column, errors, minimum=None, maximum=None):
    try:
        parsed = kind(value)
    except (TypeError, ValueError):
        errors.append(MalformedNumber(row, column, value))
        return None
    if minimum is not None and parsed < minimum:
        errors.append(MalformedNumber(row, column, value, f"must be >= {minimum}"))
        return None
    if maximum is not None and parsed > maximum:
        errors.append(MalformedNumber(row, column, value, f"must be <= {maximum}"))
        return None
    return parsed


def load_metadata_csv(path) -> list:
    """Read the metadata CSV into EpisodeRecords (script_text left empty).

    Header must carry exactly the REQUIRED_COLUMNS names. All row errors
    are collected and raised as one BatchError.
    """
    import csv

    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise BatchError([MissingColumn(name) for name in REQUIRED_COLUMNS])
        header = [h.strip() for h in header]
        missing = [name for name in REQUIRED_COLUMNS if name not in header]
        if missing:
            raise BatchError([MissingColumn(name) for name in missing])
        col = {name: header.index(name) for name in REQUIRED_COLUMNS}

        errors = []
        records = []
        seen_ids = set()
        for row_num, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                errors.append(UnparseableRow(row_num, "fewer cells than header columns"))
                continue
            episode_id = row[col["episode_id"]].strip()
            season = _parse_number(row[col["season"]], int, row_num, "season", errors, minimum=1)
            episode = _parse_number(row[col["episode"]], int, row_num, "episode", errors, minimum=1)
            viewers = _parse_number(
                row[col["viewers_millions"]], float, row_num, "viewers_millions", errors, minimum=0.0
            )
            rating = _parse_number(
                row[col["imdb_rating"]], float, row_num, "imdb_rating", errors,
                minimum=0.0, maximum=10.0,
            )
            reviews = _parse_number(
                row[col["review_count"]], int, row_num, "review_count", errors, minimum=0
            )
            if None in (season, episode, viewers, rating, reviews):
                continue
            id_match = _EPISODE_ID.match(episode_id)
            if id_match and (int(id_match.group(1)) != season or int(id_match.group(2)) != episode):
                errors.append(InconsistentEpisodeId(row_num, episode_id))
                continue
            if episode_id in seen_ids:
                errors.append(DuplicateEpisodeId(episode_id))
                continue
            seen_ids.add(episode_id)
            records.append(
                EpisodeRecord(
                    episode_id=episode_id,
                    season=season,
                    episode_number=episode,
                    title=row[col["title"]].strip(),
                    director_name=row[col["director"]].strip(),
                    viewers_millions=viewers,
                    imdb_rating=rating,
                    review_count=reviews,
                )
            )
        if errors:
            raise BatchError(errors)
        return records


class _TableCollector(html.parser.HTMLParser):
    """Collect every table as a list of rows, each row a list of cell texts."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.tables = []
        self._table_stack = []
        self._row = None
        self._cell = None

    def handle_starttag(self, tag, attrs):
        if tag == "table":
            self._table_stack.append([])
        elif tag == "tr" and self._table_stack:
            self._row = []
        elif tag in ("td", "th") and self._row is not None:
            self._cell = []

    def handle_endtag(self, tag):
        if tag in ("td", "th") and self._cell is not None:
            if self._row is not None:
                self._row.append("".join(self._cell).strip())
            self._cell = None
        elif tag == "tr" and self._row is not None:
            if self._table_stack:
                self._table_stack[-1].append(self._row)
            self._row = None
        elif tag == "table" and self._table_stack:
            self.tables.append(self._table_stack.pop())

    def handle_data(self, data):
        if self._cell is not None:
            self._cell.append(data)


_FOOTNOTE = re.compile(r"\[[^\]]*\]")


def _clean_cell(text: str) -> str:
    return _FOOTNOTE.sub("", text).strip().strip('"“”')


def parse_episode_table_html(html_text: str):
    """Extract (title, director, viewers_millions) rows from saved table pages.

    Matching tables are those whose header row contains cells matching
    "directed by" and "viewers" (case-insensitive substring). Returns
    (rows, row_errors): rows that fail to parse become UnparseableRow
    entries while the rest are still returned. Raises NoMatchingTable if
    no table qualifies.
    """
    collector = _TableCollector()
    collector.feed(html_text)
    collector.close()

    rows = []
    row_errors = []
    matched = False
    for table in collector.tables:
        if not table:
            continue
        header = [cell.lower() for cell in table[0]]
        dir_idx = next((i for i, c in enumerate(header) if "directed by" in c), None)
        view_idx = next((i for i, c in enumerate(header) if "viewers" in c), None)
        if dir_idx is None or view_idx is None:
            continue
        matched = True
        title_idx = next((i for i, c in enumerate(header) if "title" in c), None)
        for index, row in enumerate(table[1:], start=1):
            needed = max(dir_idx, view_idx, title_idx or 0)
            if len(row) <= needed:
                row_errors.append(UnparseableRow(index, "too few cells"))
                continue
            title = _clean_cell(row[title_idx]) if title_idx is not None else _clean_cell(row[0])
            director = _clean_cell(row[dir_idx])
            viewers_text = _clean_cell(row[view_idx]).replace(",", "")
            try:
                viewers = float(viewers_text)
            except ValueError:
                row_errors.append(UnparseableRow(index, f"viewers cell {row[view_idx]!r}"))
                continue
            if viewers < 0:
                row_errors.append(UnparseableRow(index, "negative viewers"))
                continue
            rows.append((title, director, viewers))
    if not matched:
        raise NoMatchingTable()
    return rows, row_errors


def _pattern_to_regex(pattern: str) -> re.Pattern:
    out = []
    i = 0
    while i < len(pattern):
        if pattern.startswith("{SS}", i):
            out.append(r"(?P<season>\d+)")
            i += 4
        elif pattern.startswith("{EE}", i):
            out.append(r"(?P<episode>\d+)")
            i += 4
        else:
            out.append(re.escape(pattern[i]))
            i += 1
    return re.compile("^" + "".join(out) + "$", re.IGNORECASE)


def episode_id_for(season: int, episode: int) -> str:
    return f"S{season:02d}E{episode:02d}"


def load_scripts(directory, naming: str = DEFAULT_SCRIPT_PATTERN, on_decode_error: str = "strict") -> dict:
    """Read script files into a map episode_id -> text.

    Filenames matching `naming` ({SS}/{EE} are digit groups, case-insensitive)
    contribute entries; other files are ignored. `on_decode_error` is either
    "strict" (invalid UTF-8 is an error) or "replace".
    """
    if on_decode_error not in ("strict", "replace"):
        raise ValueError("on_decode_error must be 'strict' or 'replace'")
    directory = Path(directory)
    regex = _pattern_to_regex(naming)
    scripts = {}
    claimed = {}
    errors = []
    for path in sorted(directory.iterdir()):
        if not path.is_file():
            continue
        m = regex.match(path.name)
        if not m:
            continue
        episode_id = episode_id_for(int(m.group("season")), int(m.group("episode")))
        if episode_id in claimed:
            errors.append(AmbiguousEpisodeId(path, episode_id))
            continue
        claimed[episode_id] = path
        try:
            scripts[episode_id] = path.read_text(encoding="utf-8", errors=on_decode_error)
        except (OSError, UnicodeDecodeError) as exc:
            errors.append(UnreadableFile(path, str(exc)))
    if errors:
        raise BatchError(errors)
    return scripts


def merge_dataset(metadata, scripts: dict, source_manifest=()) -> RawDataset:
    """Attach script text to metadata records; sort by (season, episode).

    Raises BatchError listing every MissingScript and UnmatchedScript; an
    empty script counts as missing. Merging an already-merged dataset's
    records with the same script map is a no-op.
    """
    errors = []
    known = {r.episode_id for r in metadata}
    for episode_id in sorted(set(scripts) - known):
        errors.append(UnmatchedScript(episode_id))
    merged = []
    for record in metadata:
        text = scripts.get(record.episode_id, "")
        if not text:
            errors.append(MissingScript(record.episode_id))
            continue
        merged.append(replace(record, script_text=text))
    if errors:
        raise BatchError(errors)
    merged.sort(key=lambda r: (r.season, r.episode_number))
    return RawDataset(records=tuple(merged), source_manifest=tuple(source_manifest))
