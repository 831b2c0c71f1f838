"""Readers and writers for every pipeline file, plus the model artifact.

Outputs are byte-stable: fixed column orders, sorted JSON keys, explicit
float formatting, no timestamps (the run manifest is the one exception,
carrying wall-clock timings). Model artifacts keep full float precision so
persisted models reproduce in-memory predictions exactly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict

import numpy as np

from . import __version__
from .errors import BatchError, MalformedNumber, MissingColumn, SchemaVersionMismatch
from .features import EncoderMap, FeatureTable, ScalerParams
from .ingest import EpisodeRecord, RawDataset, SourceEntry
from .models import KnnRegressor, LinearRegressor, ObliviousBoostingRegressor, ObliviousTree
from .textprep import BagOfWords, Vocabulary

ARTIFACT_SCHEMA_VERSION = 1
TOPIC_MODEL_SCHEMA_VERSION = 1


def _g(value, digits=12) -> str:
    return format(float(value), f".{digits}g")


def _write_json(payload, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


# --- dataset ----------------------------------------------------------------

def write_dataset_json(dataset: RawDataset, path):
    payload = {
        "records": [asdict(r) for r in dataset.records],
        "source_manifest": [asdict(s) for s in dataset.source_manifest],
    }
    _write_json(payload, path)


def read_dataset_json(path) -> RawDataset:
    payload = _read_json(path)
    records = tuple(EpisodeRecord(**r) for r in payload["records"])
    manifest = tuple(SourceEntry(**s) for s in payload.get("source_manifest", []))
    return RawDataset(records=records, source_manifest=manifest)


def write_metadata_csv(records, path):
    """Metadata writer matching the ingest CSV schema, floats at 6 digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "episode_id", "season", "episode", "title", "director",
            "viewers_millions", "imdb_rating", "review_count",
        ])
        for r in records:
            writer.writerow([
                r.episode_id, r.season, r.episode_number, r.title, r.director_name,
                _g(r.viewers_millions, 6), _g(r.imdb_rating, 6), r.review_count,
            ])


# --- bag of words -----------------------------------------------------------

def write_vocabulary_txt(vocabulary: Vocabulary, path):
    with open(path, "w", encoding="utf-8") as fh:
        for term in vocabulary.terms:
            fh.write(term + "\n")


def read_vocabulary_txt(path) -> Vocabulary:
    with open(path, encoding="utf-8") as fh:
        return Vocabulary.from_terms(line.rstrip("\n") for line in fh if line.rstrip("\n"))


def write_bow_csv(bow: BagOfWords, path):
    """Sparse triplet export: doc_id,term,count."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id", "term", "count"])
        for d in range(bow.n_docs):
            ids, counts = bow.row(d)
            for tid, count in zip(ids, counts):
                writer.writerow([bow.doc_ids[d], bow.vocabulary.terms[tid], int(count)])


def read_bow_csv(path, vocabulary: Vocabulary) -> BagOfWords:
    per_doc = {}
    doc_order = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            doc_id = row["doc_id"]
            if doc_id not in per_doc:
                per_doc[doc_id] = {}
                doc_order.append(doc_id)
            per_doc[doc_id][vocabulary.id_of(row["term"])] = int(row["count"])
    indptr = [0]
    indices = []
    data = []
    for doc_id in doc_order:
        for tid in sorted(per_doc[doc_id]):
            indices.append(tid)
            data.append(per_doc[doc_id][tid])
        indptr.append(len(indices))
    return BagOfWords(doc_order, vocabulary, indptr, indices, data)


def write_word_frequencies_csv(frequencies, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["term", "count"])
        for term, count in frequencies:
            writer.writerow([term, count])


# --- topic model ------------------------------------------------------------

def write_theta_csv(theta, doc_ids, path):
    theta = np.asarray(theta, dtype=float)
    k = theta.shape[1]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["doc_id"] + [f"topic_{i}" for i in range(k)] + ["dominant_topic"])
        for doc_id, row in zip(doc_ids, theta):
            writer.writerow([doc_id] + [_g(v) for v in row] + [int(np.argmax(row))])


def read_theta_csv(path):
    """Returns (doc_ids, theta matrix); the dominant column is re-derivable."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        topic_cols = [i for i, name in enumerate(header) if name.startswith("topic_")]
        doc_ids = []
        rows = []
        for row in reader:
            doc_ids.append(row[0])
            rows.append([float(row[i]) for i in topic_cols])
    return doc_ids, np.array(rows, dtype=float)


def write_topic_model_json(model, path):
    config = model.config_
    payload = {
        "schema_version": TOPIC_MODEL_SCHEMA_VERSION,
        "config": {
            "num_topics": config.num_topics,
            "alpha": config.alpha,
            "beta": config.beta,
            "iterations": config.iterations,
            "burn_in": config.burn_in,
            "sample_lag": config.sample_lag,
            "seed": config.seed,
        },
        "vocabulary": list(model.vocabulary_.terms),
        "doc_ids": list(model.doc_ids_),
        "phi": [[float(_g(v)) for v in row] for row in model.phi_],
        "theta": [[float(_g(v)) for v in row] for row in model.theta_],
    }
    _write_json(payload, path)


def write_keywords_txt(model, path, n=10):
    """One line per topic in weight*"term" + ... form."""
    with open(path, "w", encoding="utf-8") as fh:
        for topic in range(model.config_.num_topics):
            parts = [f'{weight:.4f}*"{term}"' for term, weight in model.top_keywords(topic, n)]
            fh.write(f"{topic}: " + " + ".join(parts) + "\n")


def write_topic_distances_csv(distances, path):
    distances = np.asarray(distances, dtype=float)
    k = distances.shape[0]
    labels = [f"topic_{i}" for i in range(k)]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + labels)
        for i in range(k):
            writer.writerow([labels[i]] + [_g(v) for v in distances[i]])


# --- features ---------------------------------------------------------------

def write_feature_csv(table: FeatureTable, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode_id"] + list(table.column_names) + ["imdb_rating"])
        for i, row_id in enumerate(table.row_ids):
            writer.writerow(
                [row_id] + [_g(v) for v in table.X[i]] + [_g(table.y[i])]
            )


def read_feature_csv(path) -> FeatureTable:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[0] != "episode_id" or header[-1] != "imdb_rating":
            raise MissingColumn("episode_id/imdb_rating")
        column_names = tuple(header[1:-1])
        row_ids = []
        X = []
        y = []
        for row in reader:
            row_ids.append(row[0])
            X.append([float(v) for v in row[1:-1]])
            y.append(float(row[-1]))
    return FeatureTable(
        row_ids=tuple(row_ids),
        column_names=column_names,
        X=np.array(X, dtype=float),
        y=np.array(y, dtype=float),
    )


def read_raw_feature_csv(path, num_topics: int):
    """Prediction input: like the feature CSV but with director names and no target.

    Returns (row_ids, rows) where each row is a dict of the named columns.
    All row errors are batched.
    """
    expected = [f"topic_{i}" for i in range(num_topics)] + [
        "dominant_topic", "director", "viewers_millions", "review_count",
    ]
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in ["episode_id"] + expected if c not in header]
        if missing:
            raise BatchError([MissingColumn(c) for c in missing])
        row_ids = []
        rows = []
        errors = []
        for line_num, row in enumerate(reader, start=2):
            parsed = {"director": row["director"].strip()}
            for column in expected:
                if column == "director":
                    continue
                try:
                    parsed[column] = float(row[column])
                except (TypeError, ValueError):
                    errors.append(MalformedNumber(line_num, column, row[column]))
            row_ids.append(row["episode_id"])
            rows.append(parsed)
        if errors:
            raise BatchError(errors)
    return row_ids, rows


def write_encoder_json(encoder: EncoderMap, path):
    _write_json({"mapping": encoder.mapping, "order_rule": encoder.order_rule}, path)


def read_encoder_json(path) -> EncoderMap:
    payload = _read_json(path)
    return EncoderMap(
        mapping={k: int(v) for k, v in payload["mapping"].items()},
        order_rule=payload.get("order_rule", "lexicographic"),
    )


def write_correlation_csv(correlation, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + list(correlation.labels))
        for i, label in enumerate(correlation.labels):
            writer.writerow([label] + [_g(v) for v in correlation.values[i]])


def write_stats_json(stats, path):
    _write_json(stats, path)


# --- reports ----------------------------------------------------------------

def write_report_json(report: dict, path):
    _write_json(report, path)


def write_report_csv(rows, path):
    """Table-shaped summary: model,rmse,std_dev."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "rmse", "std_dev"])
        for model, value, std in rows:
            writer.writerow([model, _g(value, 6), _g(std, 6)])


# --- model artifact ---------------------------------------------------------

def _scaler_payload(scaler: ScalerParams):
    return {
        "mins": list(scaler.mins),
        "maxs": list(scaler.maxs),
        "fitted_on": list(scaler.fitted_on),
    }


def _scaler_from_payload(payload) -> ScalerParams:
    return ScalerParams(
        mins=tuple(payload["mins"]),
        maxs=tuple(payload["maxs"]),
        fitted_on=tuple(payload["fitted_on"]),
    )


def _model_state(model):
    if isinstance(model, LinearRegressor):
        return {
            "coefficients": model.coef_.tolist(),
            "intercept": model.intercept_,
            "rank_deficient": model.rank_deficient_,
        }
    if isinstance(model, KnnRegressor):
        return {
            "train_X": model.train_X_.tolist(),
            "train_y": model.train_y_.tolist(),
        }
    if isinstance(model, ObliviousBoostingRegressor):
        return {
            "base_prediction": model.base_prediction_,
            "degenerate": model.degenerate_,
            "trees": [
                {
                    "feature_ids": list(t.feature_ids),
                    "thresholds": list(t.thresholds),
                    "leaf_values": {str(i): v for i, v in sorted(t.leaf_values.items())},
                }
                for t in model.trees_
            ],
        }
    raise ValueError(f"cannot serialize model type {type(model).__name__}")


def _restore_model(kind, params, state):
    if kind == "linear":
        model = LinearRegressor(**params)
        model.coef_ = np.array(state["coefficients"], dtype=float)
        model.intercept_ = float(state["intercept"])
        model.rank_deficient_ = bool(state["rank_deficient"])
        model.n_features_in_ = model.coef_.shape[0]
        return model
    if kind == "knn":
        model = KnnRegressor(**params)
        model.train_X_ = np.array(state["train_X"], dtype=float)
        model.train_y_ = np.array(state["train_y"], dtype=float)
        model.n_features_in_ = model.train_X_.shape[1]
        return model
    if kind == "boosted":
        model = ObliviousBoostingRegressor(**params)
        model.base_prediction_ = float(state["base_prediction"])
        model.degenerate_ = bool(state["degenerate"])
        model.trees_ = [
            ObliviousTree(
                feature_ids=tuple(t["feature_ids"]),
                thresholds=tuple(t["thresholds"]),
                leaf_values={int(i): float(v) for i, v in t["leaf_values"].items()},
            )
            for t in state["trees"]
        ]
        model.n_features_in_ = None
        return model
    raise ValueError(f"unknown model kind: {kind!r}")


def save_model_artifact(path, kind, params, model, scaler, encoder, column_names, seed):
    payload = {
        "schema_version": ARTIFACT_SCHEMA_VERSION,
        "tool_version": __version__,
        "kind": kind,
        "params": params,
        "state": _model_state(model),
        "scaler": _scaler_payload(scaler),
        "encoder": {"mapping": encoder.mapping, "order_rule": encoder.order_rule},
        "columns": list(column_names),
        "seed": seed,
    }
    _write_json(payload, path)


def load_model_artifact(path):
    payload = _read_json(path)
    version = payload.get("schema_version")
    if version != ARTIFACT_SCHEMA_VERSION:
        raise SchemaVersionMismatch(version, ARTIFACT_SCHEMA_VERSION)
    model = _restore_model(payload["kind"], payload["params"], payload["state"])
    scaler = _scaler_from_payload(payload["scaler"])
    encoder = EncoderMap(
        mapping={k: int(v) for k, v in payload["encoder"]["mapping"].items()},
        order_rule=payload["encoder"].get("order_rule", "lexicographic"),
    )
    if payload["kind"] == "boosted":
        model.n_features_in_ = len(payload["columns"])
    return {
        "kind": payload["kind"],
        "params": payload["params"],
        "model": model,
        "scaler": scaler,
        "encoder": encoder,
        "columns": tuple(payload["columns"]),
        "seed": payload["seed"],
    }
