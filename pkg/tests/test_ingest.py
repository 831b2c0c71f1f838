import pytest

from episcore.errors import (
    AmbiguousEpisodeId,
    BatchError,
    DuplicateEpisodeId,
    MalformedNumber,
    MissingColumn,
    MissingScript,
    NoMatchingTable,
    UnmatchedScript,
    UnparseableRow,
)
from episcore.ingest import (
    EpisodeRecord,
    load_metadata_csv,
    load_scripts,
    merge_dataset,
    parse_episode_table_html,
)
from episcore.persist import write_metadata_csv

HEADER = "episode_id,season,episode,title,director,viewers_millions,imdb_rating,review_count\n"


def write_csv(tmp_path, body, header=HEADER):
    path = tmp_path / "metadata.csv"
    path.write_text(header + body, encoding="utf-8")
    return path


class TestLoadMetadataCsv:
    def test_basic_row(self, tmp_path):
        path = write_csv(tmp_path, "S01E01,1,1,Pilot,David Nutter,4.14,8.6,1200\n")
        records = load_metadata_csv(path)
        assert len(records) == 1
        r = records[0]
        assert r.episode_id == "S01E01"
        assert r.viewers_millions == 4.14
        assert r.imdb_rating == 8.6
        assert r.review_count == 1200
        assert r.script_text == ""

    def test_header_only(self, tmp_path):
        assert load_metadata_csv(write_csv(tmp_path, "")) == []

    def test_malformed_number_names_row_and_column(self, tmp_path):
        path = write_csv(tmp_path, "S01E01,1,1,Pilot,D,abc,8.6,1200\n")
        with pytest.raises(BatchError) as err:
            load_metadata_csv(path)
        (inner,) = err.value.errors
        assert isinstance(inner, MalformedNumber)
        assert inner.row == 2 and inner.column == "viewers_millions"

    def test_missing_column(self, tmp_path):
        path = write_csv(
            tmp_path,
            "S01E01,1,1,Pilot,4.14,8.6,1200\n",
            header="episode_id,season,episode,title,viewers_millions,imdb_rating,review_count\n",
        )
        with pytest.raises(BatchError) as err:
            load_metadata_csv(path)
        assert any(isinstance(e, MissingColumn) and e.name == "director" for e in err.value.errors)

    def test_duplicate_id(self, tmp_path):
        body = (
            "S01E01,1,1,Pilot,D,4.14,8.6,1200\n"
            "S01E01,1,1,Pilot again,D,4.0,8.0,1000\n"
        )
        with pytest.raises(BatchError) as err:
            load_metadata_csv(write_csv(tmp_path, body))
        assert any(isinstance(e, DuplicateEpisodeId) for e in err.value.errors)

    def test_all_errors_collected_in_one_pass(self, tmp_path):
        body = (
            "S01E01,1,1,Pilot,D,abc,8.6,1200\n"
            "S01E02,1,2,Two,D,4.0,eleven,1000\n"
            "S01E03,1,3,Three,D,4.0,8.0,-5\n"
        )
        with pytest.raises(BatchError) as err:
            load_metadata_csv(write_csv(tmp_path, body))
        assert len(err.value.errors) == 3

    def test_rating_out_of_range_rejected(self, tmp_path):
        path = write_csv(tmp_path, "S01E01,1,1,Pilot,D,4.14,12.5,1200\n")
        with pytest.raises(BatchError):
            load_metadata_csv(path)

    def test_episode_id_contradicting_season_column(self, tmp_path):
        from episcore.errors import InconsistentEpisodeId

        path = write_csv(tmp_path, "S03E01,1,1,Pilot,D,4.14,8.6,1200\n")
        with pytest.raises(BatchError) as err:
            load_metadata_csv(path)
        assert any(isinstance(e, InconsistentEpisodeId) for e in err.value.errors)

    def test_roundtrip_through_writer(self, tmp_path):
        path = write_csv(
            tmp_path,
            "S01E01,1,1,Pilot,David Nutter,4.14,8.6,1200\n"
            "S01E02,1,2,Honor Thy Father,D Barrett,3.52,8.1,980\n",
        )
        records = load_metadata_csv(path)
        out = tmp_path / "again.csv"
        write_metadata_csv(records, out)
        assert load_metadata_csv(out) == records


MINIMAL_TABLE = """
<html><body><table>
<tr><th>No.</th><th>Title</th><th>Directed by</th><th>U.S. viewers (millions)</th></tr>
<tr><td>1</td><td>"Pilot"</td><td>David Nutter</td><td>4.14[8]</td></tr>
</table></body></html>
"""


class TestParseEpisodeTableHtml:
    def test_minimal_table(self):
        rows, errors = parse_episode_table_html(MINIMAL_TABLE)
        assert rows == [("Pilot", "David Nutter", 4.14)]
        assert errors == []

    def test_no_tables(self):
        with pytest.raises(NoMatchingTable):
            parse_episode_table_html("<html><body><p>nothing</p></body></html>")

    def test_non_matching_table(self):
        html = "<table><tr><th>Name</th><th>Value</th></tr><tr><td>a</td><td>1</td></tr></table>"
        with pytest.raises(NoMatchingTable):
            parse_episode_table_html(html)

    def test_bad_viewers_cell_reported_others_returned(self):
        html = """
        <table>
        <tr><th>Title</th><th>Directed by</th><th>Viewers</th></tr>
        <tr><td>One</td><td>A</td><td>N/A</td></tr>
        <tr><td>Two</td><td>B</td><td>2.5</td></tr>
        </table>
        """
        rows, errors = parse_episode_table_html(html)
        assert rows == [("Two", "B", 2.5)]
        assert len(errors) == 1 and isinstance(errors[0], UnparseableRow)
        assert errors[0].index == 1

    def test_footnotes_and_commas_stripped(self):
        html = """
        <table>
        <tr><th>Title</th><th>Directed by</th><th>Viewers</th></tr>
        <tr><td>One</td><td>A[2]</td><td>1,234.5[1][2]</td></tr>
        </table>
        """
        rows, _ = parse_episode_table_html(html)
        assert rows == [("One", "A", 1234.5)]


def record(episode_id, season=1, episode=1, script=""):
    return EpisodeRecord(
        episode_id=episode_id,
        season=season,
        episode_number=episode,
        title=f"T{episode_id}",
        director_name="D",
        viewers_millions=1.0,
        imdb_rating=8.0,
        review_count=10,
        script_text=script,
    )


class TestLoadScripts:
    def test_two_files(self, tmp_path):
        (tmp_path / "s01e01.txt").write_text("one", encoding="utf-8")
        (tmp_path / "s01e02.txt").write_text("two", encoding="utf-8")
        scripts = load_scripts(tmp_path)
        assert scripts == {"S01E01": "one", "S01E02": "two"}

    def test_empty_dir(self, tmp_path):
        assert load_scripts(tmp_path) == {}

    def test_non_matching_files_ignored(self, tmp_path):
        (tmp_path / "README.md").write_text("notes", encoding="utf-8")
        (tmp_path / "s01e01.txt").write_text("one", encoding="utf-8")
        assert list(load_scripts(tmp_path)) == ["S01E01"]

    def test_ambiguous_id(self, tmp_path):
        (tmp_path / "s01e01.txt").write_text("one", encoding="utf-8")
        (tmp_path / "S01E01.TXT").write_text("dup", encoding="utf-8")
        with pytest.raises(BatchError) as err:
            load_scripts(tmp_path)
        assert any(isinstance(e, AmbiguousEpisodeId) for e in err.value.errors)

    def test_strict_decoding_flags_bad_bytes(self, tmp_path):
        (tmp_path / "s01e01.txt").write_bytes(b"ok \xff bad")
        with pytest.raises(BatchError):
            load_scripts(tmp_path)
        scripts = load_scripts(tmp_path, on_decode_error="replace")
        assert "ok" in scripts["S01E01"]


class TestMergeDataset:
    def test_merge_and_sort(self):
        metadata = [record("S02E01", 2, 1), record("S01E02", 1, 2)]
        scripts = {"S02E01": "late", "S01E02": "early"}
        dataset = merge_dataset(metadata, scripts)
        assert [r.episode_id for r in dataset.records] == ["S01E02", "S02E01"]
        assert dataset.records[0].script_text == "early"

    def test_both_error_kinds_collected(self):
        metadata = [record("S01E01")]
        scripts = {"S09E99": "orphan"}
        with pytest.raises(BatchError) as err:
            merge_dataset(metadata, scripts)
        kinds = {type(e) for e in err.value.errors}
        assert kinds == {MissingScript, UnmatchedScript}

    def test_empty_script_counts_as_missing(self):
        with pytest.raises(BatchError) as err:
            merge_dataset([record("S01E01")], {"S01E01": ""})
        assert any(isinstance(e, MissingScript) for e in err.value.errors)

    def test_idempotent(self):
        metadata = [record("S01E01", script="")]
        scripts = {"S01E01": "text"}
        once = merge_dataset(metadata, scripts)
        twice = merge_dataset(list(once.records), scripts)
        assert once == twice

    def test_record_count_preserved(self):
        metadata = [record(f"S01E{i:02d}", 1, i) for i in range(1, 8)]
        scripts = {r.episode_id: f"script {r.episode_id}" for r in metadata}
        assert len(merge_dataset(metadata, scripts).records) == len(metadata)
