"""Pipeline configuration: an INI file with flat key = value sections.

Every knob has a default except the master seed, which must be given in the
file or on the command line so no run carries implicit randomness. The
master seed fans out to named per-purpose streams (split, cv, lda) through
SeedSequence spawn keys, giving one reproducibility knob for the whole run.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

# Stream names and their spawn-key indices; order is part of the contract.
SEED_STREAMS = {"split": 0, "cv": 1, "lda": 2, "boost": 3}


def stream_seed(master_seed: int, name: str) -> int:
    """Derive the named 64-bit stream seed from the master seed."""
    if name not in SEED_STREAMS:
        raise ConfigError(f"unknown seed stream: {name!r}")
    seq = np.random.SeedSequence(master_seed, spawn_key=(SEED_STREAMS[name],))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass
class PipelineConfig:
    # paths
    metadata_csv: Path = Path("metadata.csv")
    scripts_dir: Path = Path("scripts")
    html_dir: Path | None = None
    out_dir: Path = Path("out")
    script_pattern: str = "s{SS}e{EE}.txt"
    # textprep
    min_token_len: int = 2
    stopword_files: tuple = ()
    extra_stopwords: tuple = ()
    boilerplate_markers: tuple = ("PREVIOUSLY ON",)
    lemma_rules_file: Path | None = None
    word_freq_top_n: int = 40
    # lda
    num_topics: int = 3
    alpha: float | None = None  # None -> 50 / num_topics
    beta: float = 0.01
    lda_iterations: int = 1000
    lda_burn_in: int = 500
    lda_sample_lag: int = 10
    # split
    train_fraction: float = 0.8
    split_mode: str = "random"
    # cv
    cv_folds: int = 10
    # model grids
    knn_k_min: int = 1
    knn_k_max: int = 16
    boost_learning_rates: tuple = (0.03, 0.1, 0.2)
    boost_depths: tuple = (4, 6, 10, 20, 30)
    boost_l2_leaf_regs: tuple = (1.0, 3.0, 5.0, 7.0, 9.0, 12.0, 15.0)
    boost_num_iterations: int = 500
    boost_min_samples_leaf: int = 0
    # run
    seed: int | None = None
    quiet: bool = False

    def require_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("no seed configured: set [run] seed or pass --seed")
        return self.seed

    def validate_inputs(self):
        if not Path(self.metadata_csv).is_file():
            raise ConfigError(f"metadata csv not found: {self.metadata_csv}")
        if not Path(self.scripts_dir).is_dir():
            raise ConfigError(f"scripts dir not found: {self.scripts_dir}")
        if self.html_dir is not None and not Path(self.html_dir).is_dir():
            raise ConfigError(f"html dir not found: {self.html_dir}")
        for path in self.stopword_files:
            if not Path(path).is_file():
                raise ConfigError(f"stopword file not found: {path}")
        if self.lemma_rules_file is not None and not Path(self.lemma_rules_file).is_file():
            raise ConfigError(f"lemma rules file not found: {self.lemma_rules_file}")

    def snapshot(self) -> dict:
        """JSON-safe view of every setting, for the run manifest."""
        out = {}
        for name, value in self.__dict__.items():
            if isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = [str(v) if isinstance(v, Path) else v for v in value]
            out[name] = value
        return out


def _split_list(raw: str):
    return tuple(part.strip() for part in raw.split(",") if part.strip())


def _get(parser, section, key, cast, default, errors):
    if not parser.has_option(section, key):
        return default
    raw = parser.get(section, key).strip()
    if raw == "":
        return default
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        errors.append(f"[{section}] {key}: {exc}")
        return default


def load_config(path=None, overrides=None) -> PipelineConfig:
    """Parse the INI file (if any), then apply CLI overrides."""
    config = PipelineConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
        try:
            parser.read(path, encoding="utf-8")
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}") from exc
        errors = []
        base = path.parent

        def rel(raw):
            p = Path(raw)
            return p if p.is_absolute() else base / p

        config.metadata_csv = _get(parser, "paths", "metadata_csv", rel, config.metadata_csv, errors)
        config.scripts_dir = _get(parser, "paths", "scripts_dir", rel, config.scripts_dir, errors)
        config.html_dir = _get(parser, "paths", "html_dir", rel, config.html_dir, errors)
        config.out_dir = _get(parser, "paths", "out_dir", rel, config.out_dir, errors)
        config.script_pattern = _get(parser, "paths", "script_pattern", str, config.script_pattern, errors)

        config.min_token_len = _get(parser, "textprep", "min_token_len", int, config.min_token_len, errors)
        config.stopword_files = _get(
            parser, "textprep", "stopword_files",
            lambda raw: tuple(rel(p) for p in _split_list(raw)), config.stopword_files, errors,
        )
        config.extra_stopwords = _get(
            parser, "textprep", "extra_stopwords", _split_list, config.extra_stopwords, errors
        )
        config.boilerplate_markers = _get(
            parser, "textprep", "boilerplate_markers",
            lambda raw: tuple(p for p in raw.split("|") if p.strip()),
            config.boilerplate_markers, errors,
        )
        config.lemma_rules_file = _get(parser, "textprep", "lemma_rules", rel, config.lemma_rules_file, errors)
        config.word_freq_top_n = _get(parser, "textprep", "word_freq_top_n", int, config.word_freq_top_n, errors)

        config.num_topics = _get(parser, "lda", "num_topics", int, config.num_topics, errors)
        config.alpha = _get(parser, "lda", "alpha", float, config.alpha, errors)
        config.beta = _get(parser, "lda", "beta", float, config.beta, errors)
        config.lda_iterations = _get(parser, "lda", "iterations", int, config.lda_iterations, errors)
        config.lda_burn_in = _get(parser, "lda", "burn_in", int, config.lda_burn_in, errors)
        config.lda_sample_lag = _get(parser, "lda", "sample_lag", int, config.lda_sample_lag, errors)

        config.train_fraction = _get(parser, "split", "train_fraction", float, config.train_fraction, errors)
        config.split_mode = _get(parser, "split", "mode", str, config.split_mode, errors)
        config.cv_folds = _get(parser, "cv", "folds", int, config.cv_folds, errors)

        config.knn_k_min = _get(parser, "knn", "k_min", int, config.knn_k_min, errors)
        config.knn_k_max = _get(parser, "knn", "k_max", int, config.knn_k_max, errors)

        def float_list(raw):
            return tuple(float(v) for v in _split_list(raw))

        def int_list(raw):
            return tuple(int(v) for v in _split_list(raw))

        config.boost_learning_rates = _get(
            parser, "boost", "learning_rates", float_list, config.boost_learning_rates, errors
        )
        config.boost_depths = _get(parser, "boost", "depths", int_list, config.boost_depths, errors)
        config.boost_l2_leaf_regs = _get(
            parser, "boost", "l2_leaf_regs", float_list, config.boost_l2_leaf_regs, errors
        )
        config.boost_num_iterations = _get(
            parser, "boost", "num_iterations", int, config.boost_num_iterations, errors
        )
        config.boost_min_samples_leaf = _get(
            parser, "boost", "min_samples_leaf", int, config.boost_min_samples_leaf, errors
        )

        config.seed = _get(parser, "run", "seed", int, config.seed, errors)
        if errors:
            raise ConfigError("bad config values:\n  " + "\n  ".join(errors))

    for key, value in (overrides or {}).items():
        if value is not None:
            setattr(config, key, value)

    if config.split_mode not in ("random", "chronological"):
        raise ConfigError(f"split mode must be random or chronological, got {config.split_mode!r}")
    if not 0.0 < config.train_fraction < 1.0:
        raise ConfigError("train_fraction must be in (0, 1)")
    if config.cv_folds < 2:
        raise ConfigError("cv folds must be >= 2")
    if config.knn_k_min < 1 or config.knn_k_max < config.knn_k_min:
        raise ConfigError("knn k range must satisfy 1 <= k_min <= k_max")
    if config.num_topics < 1:
        raise ConfigError("num_topics must be >= 1")
    return config
