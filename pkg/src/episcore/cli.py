"""Command-line driver: ingest -> prep -> topics -> features -> train-eval.

Subcommands mirror the pipeline stages and communicate only through files in
the output directory, so any stage can be rerun in isolation. Exit codes:
0 ok, 2 data error, 3 config error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import PipelineConfig, load_config, stream_seed
from .errors import ConfigError, DataError, InvariantViolation
from .evaluate import (
    GridSpec,
    ModelSpec,
    cross_validate,
    evaluate_holdout,
    fit_on,
    grid_search,
    kfold_indices,
    select_best,
)
from .features import (
    apply_scaler,
    build_feature_table,
    describe,
    encode_with,
    histogram,
    pearson_matrix,
    train_test_split,
)
from .ingest import (
    SourceEntry,
    load_metadata_csv,
    load_scripts,
    merge_dataset,
    parse_episode_table_html,
    sha256_file,
)
from .persist import (
    _read_json,
    _write_json,
    load_model_artifact,
    read_bow_csv,
    read_dataset_json,
    read_encoder_json,
    read_feature_csv,
    read_raw_feature_csv,
    read_theta_csv,
    read_vocabulary_txt,
    save_model_artifact,
    write_bow_csv,
    write_correlation_csv,
    write_dataset_json,
    write_encoder_json,
    write_feature_csv,
    write_keywords_txt,
    write_report_csv,
    write_report_json,
    write_stats_json,
    write_theta_csv,
    write_topic_distances_csv,
    write_topic_model_json,
    write_vocabulary_txt,
    write_word_frequencies_csv,
)
from .textprep import (
    LemmaRules,
    StopwordList,
    TokenizedDoc,
    build_vocabulary,
    clean_text,
    to_bag_of_words,
    word_frequencies,
)
from .topics import GibbsLda

FILES = {
    "dataset": "dataset.json",
    "bow": "bow.csv",
    "vocabulary": "vocabulary.txt",
    "word_freq": "word_frequencies.csv",
    "theta": "theta.csv",
    "topic_model": "topic_model.json",
    "keywords": "topic_keywords.txt",
    "distances": "topic_distances.csv",
    "features": "features.csv",
    "encoder": "encoder.json",
    "correlation": "correlation.csv",
    "stats": "stats.json",
    "report": "report.json",
    "report_train": "report_train.csv",
    "report_test": "report_test.csv",
    "model": "best_model.json",
    "manifest": "run_manifest.json",
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with its own code 2 on usage errors; remap to config errors."""

    def error(self, message):
        raise ConfigError(message)


def _out(config, key) -> Path:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / FILES[key]


def _existing(config, key, produced_by) -> Path:
    path = _out(config, key)
    if not path.is_file():
        raise ConfigError(f"{path} not found; run the {produced_by} stage first")
    return path


def _log(config, message):
    if not config.quiet:
        print(message)


def _warn(message):
    print(f"warning: {message}", file=sys.stderr)


def _update_manifest(config, stage, outputs, seconds):
    """Merge this stage's outputs (with checksums) and timing into the manifest."""
    path = _out(config, "manifest")
    manifest = _read_json(path) if path.is_file() else {"stages": {}, "outputs": {}}
    manifest["tool_version"] = __version__
    manifest["config"] = config.snapshot()
    manifest.setdefault("stages", {})[stage] = {"seconds": round(seconds, 3)}
    for out_path in outputs:
        manifest.setdefault("outputs", {})[out_path.name] = {
            "path": str(out_path),
            "sha256": sha256_file(out_path),
        }
    _write_json(manifest, path)


def _record_inputs(config, entries):
    """Store the ingest stage's input checksums in the manifest."""
    path = _out(config, "manifest")
    manifest = _read_json(path) if path.is_file() else {"stages": {}, "outputs": {}}
    manifest["inputs"] = {
        e.path: {"kind": e.kind, "sha256": e.checksum} for e in entries
    }
    _write_json(manifest, path)


# --- stages -----------------------------------------------------------------

def stage_ingest(config: PipelineConfig):
    config.validate_inputs()
    records = load_metadata_csv(config.metadata_csv)
    scripts = load_scripts(config.scripts_dir, config.script_pattern)
    manifest = [
        SourceEntry(str(config.metadata_csv), "metadata_csv", sha256_file(config.metadata_csv))
    ]
    for path in sorted(Path(config.scripts_dir).iterdir()):
        if path.is_file():
            manifest.append(SourceEntry(str(path), "script", sha256_file(path)))

    if config.html_dir is not None:
        by_title = {}
        for path in sorted(Path(config.html_dir).glob("*.htm*")):
            manifest.append(SourceEntry(str(path), "html", sha256_file(path)))
            rows, row_errors = parse_episode_table_html(path.read_text(encoding="utf-8"))
            for err in row_errors:
                _warn(f"{path.name}: {err}")
            for title, director, viewers in rows:
                by_title[title] = (director, viewers)
        for record in records:
            entry = by_title.get(record.title)
            if entry is None:
                continue
            director, viewers = entry
            if director != record.director_name:
                _warn(
                    f"{record.episode_id}: html says director {director!r}, "
                    f"csv says {record.director_name!r}"
                )
            if abs(viewers - record.viewers_millions) > 1e-9:
                _warn(
                    f"{record.episode_id}: html says {viewers} million viewers, "
                    f"csv says {record.viewers_millions}"
                )

    dataset = merge_dataset(records, scripts, manifest)
    out_path = _out(config, "dataset")
    write_dataset_json(dataset, out_path)
    _record_inputs(config, manifest)
    _log(config, f"ingested {len(dataset.records)} episodes -> {out_path}")
    return [out_path]


def stage_prep(config: PipelineConfig):
    dataset = read_dataset_json(_existing(config, "dataset", "ingest"))
    stoplist = StopwordList.default(extra=config.extra_stopwords)
    for path in config.stopword_files:
        stoplist = stoplist.union(StopwordList.from_file(path).words)
    rules = (
        LemmaRules.from_file(config.lemma_rules_file)
        if config.lemma_rules_file is not None
        else LemmaRules.default()
    )
    docs = [
        TokenizedDoc(
            episode_id=r.episode_id,
            tokens=tuple(
                clean_text(
                    r.script_text, stoplist, rules,
                    markers=config.boilerplate_markers,
                    min_len=config.min_token_len,
                )
            ),
        )
        for r in dataset.records
    ]
    vocab = build_vocabulary(docs)
    bow = to_bag_of_words(docs, vocab)
    outputs = [_out(config, "bow"), _out(config, "vocabulary"), _out(config, "word_freq")]
    write_bow_csv(bow, outputs[0])
    write_vocabulary_txt(vocab, outputs[1])
    frequencies = word_frequencies(bow, config.word_freq_top_n) if len(vocab) else []
    write_word_frequencies_csv(frequencies, outputs[2])
    _log(config, f"prepared {bow.n_docs} docs, {bow.n_terms} terms, {bow.total_tokens} tokens")
    return outputs


def stage_topics(config: PipelineConfig):
    vocab = read_vocabulary_txt(_existing(config, "vocabulary", "prep"))
    bow = read_bow_csv(_existing(config, "bow", "prep"), vocab)
    seed = stream_seed(config.require_seed(), "lda")
    model = GibbsLda(
        num_topics=config.num_topics,
        alpha=config.alpha,
        beta=config.beta,
        iterations=config.lda_iterations,
        burn_in=config.lda_burn_in,
        sample_lag=config.lda_sample_lag,
        seed=seed,
    ).fit(bow)
    outputs = [
        _out(config, "theta"),
        _out(config, "topic_model"),
        _out(config, "keywords"),
        _out(config, "distances"),
    ]
    write_theta_csv(model.theta_, model.doc_ids_, outputs[0])
    write_topic_model_json(model, outputs[1])
    write_keywords_txt(model, outputs[2])
    write_topic_distances_csv(model.topic_distances(), outputs[3])
    _log(config, f"fitted {config.num_topics} topics over {bow.n_docs} docs "
                 f"(log likelihood {model.score(bow):.2f})")
    for topic in range(config.num_topics):
        parts = [f'{w:.4f}*"{t}"' for t, w in model.top_keywords(topic, 10)]
        _log(config, f"  topic {topic}: " + " + ".join(parts))
    return outputs


def stage_features(config: PipelineConfig):
    dataset = read_dataset_json(_existing(config, "dataset", "ingest"))
    doc_ids, theta = read_theta_csv(_existing(config, "theta", "topics"))
    table = build_feature_table(dataset, theta, doc_ids)
    correlation = pearson_matrix(table)
    stats = {
        "columns": {
            name: describe(table.X[:, j]).__dict__
            for j, name in enumerate(table.column_names)
        },
        "imdb_rating": describe(table.y).__dict__,
        "rating_histogram": [
            {"bin_start": start, "count": count}
            for start, count in histogram(table.y, bin_width=0.5, origin=0.0)
        ],
    }
    outputs = [
        _out(config, "features"),
        _out(config, "encoder"),
        _out(config, "correlation"),
        _out(config, "stats"),
    ]
    write_feature_csv(table, outputs[0])
    write_encoder_json(table.encoder, outputs[1])
    write_correlation_csv(correlation, outputs[2])
    write_stats_json(stats, outputs[3])
    _log(config, f"assembled {table.n_rows} rows x {len(table.column_names)} features")
    return outputs


def _report_entries(kind, params, cv_result, holdout, seed, grid_results=None):
    """Two flat report entries (train phase, test phase) for one model family."""
    train = {
        "phase": "train",
        "model": kind,
        "params": params,
        "per_fold_rmse": list(cv_result.per_fold_rmse),
        "mean_rmse": cv_result.mean_rmse,
        "std": cv_result.std_rmse,
        "holdout_rmse": None,
        "residual_std": None,
        "seed": seed,
        "grid_results": grid_results,
    }
    test = {
        "phase": "test",
        "model": kind,
        "params": params,
        "per_fold_rmse": None,
        "mean_rmse": None,
        "std": None,
        "holdout_rmse": holdout.holdout_rmse,
        "residual_std": holdout.residual_std,
        "seed": seed,
        "grid_results": None,
        "predictions": [[i, t, p] for i, t, p in holdout.predictions],
    }
    return [train, test]


def _display_name(kind, params):
    if kind == "knn":
        return f"KNN (k = {params['k']})"
    return {"linear": "Linear Regression", "boosted": "Boosted Trees"}[kind]


def stage_train_eval(config: PipelineConfig):
    table = read_feature_csv(_existing(config, "features", "features"))
    encoder = read_encoder_json(_existing(config, "encoder", "features"))
    master = config.require_seed()
    n = table.n_rows

    train_idx, test_idx = train_test_split(
        n, config.train_fraction, stream_seed(master, "split"), mode=config.split_mode
    )
    plan = kfold_indices(len(train_idx), config.cv_folds, stream_seed(master, "cv"))
    train_table = table.subset(train_idx)
    _log(config, f"split {n} rows into {len(train_idx)} train / {len(test_idx)} test; "
                 f"{config.cv_folds}-fold cross-validation on train")

    grids = {
        "linear": None,
        "knn": GridSpec.from_dict(
            {"k": list(range(config.knn_k_min, config.knn_k_max + 1))}
        ),
        # fixed settings ride along as single-value axes so they reach the
        # model constructor and the artifact params
        "boosted": GridSpec.from_dict({
            "learning_rate": list(config.boost_learning_rates),
            "depth": list(config.boost_depths),
            "l2_leaf_reg": list(config.boost_l2_leaf_regs),
            "num_iterations": [config.boost_num_iterations],
            "min_samples_leaf": [config.boost_min_samples_leaf],
            "seed": [stream_seed(master, "boost")],
        }),
    }

    entries = []
    holdouts = {}
    for kind in ("linear", "knn", "boosted"):
        if grids[kind] is None:
            params = {}
            cv = cross_validate(ModelSpec(kind), train_table, plan)
            grid_results = None
        else:
            params, results = grid_search(kind, grids[kind], train_table, plan)
            cv = next(r for r in results if r.spec.params == params)
            grid_results = [
                {
                    "params": r.spec.params,
                    "mean_rmse": r.mean_rmse,
                    "std_rmse": r.std_rmse,
                    "per_fold_rmse": list(r.per_fold_rmse),
                }
                for r in results
            ]
        holdout = evaluate_holdout(ModelSpec(kind, params), table, (train_idx, test_idx))
        holdouts[kind] = holdout
        entries.extend(_report_entries(kind, params, cv, holdout, master, grid_results))
        _log(config, f"{_display_name(kind, params):22s} "
                     f"cv rmse {cv.mean_rmse:.4f} (std {cv.std_rmse:.4f})  "
                     f"holdout rmse {holdout.holdout_rmse:.4f} (residual std {holdout.residual_std:.4f})")

    best = select_best(holdouts.values())
    best_kind = best.spec.kind
    _log(config, f"selected best model: {_display_name(best_kind, best.spec.params)}")

    model, scaler = fit_on(best.spec, table, train_idx)
    outputs = [
        _out(config, "report"),
        _out(config, "report_train"),
        _out(config, "report_test"),
        _out(config, "model"),
    ]
    report = {
        "seed": master,
        "cv_folds": config.cv_folds,
        "train_fraction": config.train_fraction,
        "split_mode": config.split_mode,
        "n_rows": n,
        "n_train": int(len(train_idx)),
        "n_test": int(len(test_idx)),
        "entries": entries,
        "best_model": {
            "model": best_kind,
            "params": best.spec.params,
            "holdout_rmse": best.holdout_rmse,
            "residual_std": best.residual_std,
        },
    }
    write_report_json(report, outputs[0])
    _write_report_tables(report, outputs[1], outputs[2])
    save_model_artifact(
        outputs[3],
        kind=best_kind,
        params=best.spec.params,
        model=model,
        scaler=scaler,
        encoder=encoder,
        column_names=table.column_names,
        seed=master,
    )
    return outputs


def _write_report_tables(report, train_path, test_path):
    train_rows = []
    test_rows = []
    for entry in report["entries"]:
        name = _display_name(entry["model"], entry["params"])
        if entry["phase"] == "train":
            train_rows.append((name, entry["mean_rmse"], entry["std"]))
        else:
            test_rows.append((name, entry["holdout_rmse"], entry["residual_std"]))
    write_report_csv(train_rows, train_path)
    write_report_csv(test_rows, test_path)


def stage_report(config: PipelineConfig):
    """Re-render the report tables from report.json and print them."""
    report = _read_json(_existing(config, "report", "train-eval"))
    train_path, test_path = _out(config, "report_train"), _out(config, "report_test")
    _write_report_tables(report, train_path, test_path)
    for phase, title in (("train", "Training phase"), ("test", "Test phase")):
        _log(config, f"{title} (rmse / std):")
        for entry in report["entries"]:
            if entry["phase"] != phase:
                continue
            value = entry["mean_rmse"] if phase == "train" else entry["holdout_rmse"]
            std = entry["std"] if phase == "train" else entry["residual_std"]
            _log(config, f"  {_display_name(entry['model'], entry['params']):22s} "
                         f"{value:.4f}  {std:.4f}")
    best = report["best_model"]
    _log(config, f"best model: {_display_name(best['model'], best['params'])} "
                 f"(holdout rmse {best['holdout_rmse']:.4f})")
    return [train_path, test_path]


def stage_predict(config: PipelineConfig, model_path, input_path, output_path):
    if not Path(model_path).is_file():
        raise ConfigError(f"model artifact not found: {model_path}")
    if not Path(input_path).is_file():
        raise ConfigError(f"prediction input not found: {input_path}")
    artifact = load_model_artifact(model_path)
    num_topics = sum(1 for c in artifact["columns"] if c.startswith("topic_"))
    row_ids, rows = read_raw_feature_csv(input_path, num_topics)

    predictions = []
    if rows:
        names = [row["director"] for row in rows]
        codes, unknown = encode_with(artifact["encoder"], names, allow_unknown=True)
        for name in dict.fromkeys(unknown):
            _warn(f"unknown director {name!r} mapped to reserved code "
                  f"{artifact['encoder'].unknown_code}")
        X = np.empty((len(rows), len(artifact["columns"])))
        for j, column in enumerate(artifact["columns"]):
            if column == "director_code":
                X[:, j] = codes
            else:
                X[:, j] = [row[column] for row in rows]
        predictions = artifact["model"].predict(apply_scaler(X, artifact["scaler"]))

    output_path = Path(output_path)
    output_path.parent.mkdir(parents=True, exist_ok=True)
    with open(output_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("episode_id,prediction\n")
        for row_id, value in zip(row_ids, predictions):
            fh.write(f"{row_id},{float(value)!r}\n")
    _log(config, f"wrote {len(row_ids)} prediction(s) -> {output_path}")
    return [Path(output_path)]


# --- argument parsing ---------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="episcore", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="path to the INI config file")
        p.add_argument("--seed", type=int, help="master seed (overrides config)")
        p.add_argument("--out", help="output directory (overrides config)")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")
        p.add_argument("--split-mode", choices=("random", "chronological"),
                       help="holdout split mode (overrides config)")
        return p

    add("ingest", "load metadata + scripts into the dataset file")
    add("prep", "tokenize scripts into a bag of words and word frequencies")
    add("topics", "fit the topic model and export proportions and keywords")
    add("features", "assemble the modeling table, correlations, and stats")
    add("train-eval", "cross-validate, grid-search, and evaluate all models")
    add("report", "re-render report tables from report.json")
    run = add("run", "run pipeline stages in order")
    run.add_argument("--all", action="store_true", help="run every stage")

    predict = add("predict", "apply a saved model artifact to new rows")
    predict.add_argument("--model", help="model artifact path (default: out dir)")
    predict.add_argument("--input", required=True, help="raw feature CSV with director names")
    predict.add_argument("--output", help="predictions CSV path (default: out dir)")
    return parser


STAGES = (
    ("ingest", stage_ingest),
    ("prep", stage_prep),
    ("topics", stage_topics),
    ("features", stage_features),
    ("train-eval", stage_train_eval),
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        overrides = {
            "seed": args.seed,
            "out_dir": Path(args.out) if args.out else None,
            "quiet": True if args.quiet else None,
            "split_mode": args.split_mode,
        }
        config = load_config(args.config, overrides)

        def run_stage(name, fn):
            start = time.perf_counter()
            outputs = fn(config)
            _update_manifest(config, name, outputs, time.perf_counter() - start)

        if args.command == "run":
            if not args.all:
                raise ConfigError("run requires --all")
            for name, fn in STAGES:
                run_stage(name, fn)
        elif args.command == "predict":
            model_path = args.model or _out(config, "model")
            output_path = args.output or Path(config.out_dir) / "predictions.csv"
            run_stage(
                "predict",
                lambda cfg: stage_predict(cfg, model_path, args.input, output_path),
            )
        elif args.command == "report":
            run_stage("report", stage_report)
        else:
            stage_fn = dict(STAGES)[args.command]
            run_stage(args.command, stage_fn)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (InvariantViolation, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
