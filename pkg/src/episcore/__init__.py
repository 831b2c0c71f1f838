"""Episode rating prediction from script topics.

Pipeline: local script/metadata snapshots -> cleaned bag of words -> Gibbs
topic model -> feature table -> linear / KNN / boosted-tree regressors with
cross-validated and holdout RMSE reports. See the CLI in episcore.cli.
"""

__version__ = "0.1.0"

from .evaluate import (  # noqa: E402,F401
    CvResult,
    FoldPlan,
    GridSpec,
    ModelSpec,
    TestReport,
    cross_validate,
    evaluate_holdout,
    grid_search,
    kfold_indices,
    rmse,
    select_best,
)
from .features import (  # noqa: F401
    DirectorEncoder,
    EncoderMap,
    FeatureTable,
    RangeScaler,
    ScalerParams,
    apply_scaler,
    build_feature_table,
    describe,
    encode_directors,
    fit_range_scaler,
    histogram,
    pearson_matrix,
    train_test_split,
)
from .ingest import (  # noqa: F401
    EpisodeRecord,
    RawDataset,
    load_metadata_csv,
    load_scripts,
    merge_dataset,
    parse_episode_table_html,
)
from .models import (  # noqa: F401
    KnnRegressor,
    LinearRegressor,
    ObliviousBoostingRegressor,
    ObliviousTree,
)
from .textprep import (  # noqa: F401
    BagOfWords,
    LemmaRules,
    StopwordList,
    TokenizedDoc,
    Vocabulary,
    build_vocabulary,
    clean_text,
    lemmatize,
    remove_stopwords,
    strip_boilerplate,
    to_bag_of_words,
    tokenize,
    word_frequencies,
)
from .topics import (  # noqa: F401
    GibbsLda,
    LdaConfig,
    corpus_log_likelihood,
    dominant_topic,
    top_keywords,
    topic_distance_matrix,
)
