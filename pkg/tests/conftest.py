import numpy as np
import pytest

from episcore.textprep import TokenizedDoc, build_vocabulary, to_bag_of_words


def make_bow(token_lists, ids=None):
    """Bag of words straight from lists of tokens."""
    ids = ids or [f"D{i:02d}" for i in range(len(token_lists))]
    docs = [TokenizedDoc(i, tuple(tokens)) for i, tokens in zip(ids, token_lists)]
    vocab = build_vocabulary(docs)
    return to_bag_of_words(docs, vocab)


def two_topic_corpus(n_docs=60, doc_len=200, seed=123):
    """Synthetic corpus with two disjoint topic vocabularies.

    The generator doubles as the oracle: the true dominant topic of doc d
    is d % 2, and the two vocabularies share no terms.
    """
    rng = np.random.default_rng(seed)
    vocab_a = [f"alpha{i}" for i in range(20)]
    vocab_b = [f"beta{i}" for i in range(20)]
    token_lists = []
    truth = []
    for d in range(n_docs):
        topic = d % 2
        words = vocab_a if topic == 0 else vocab_b
        token_lists.append([words[j] for j in rng.integers(0, len(words), doc_len)])
        truth.append(topic)
    return make_bow(token_lists), np.array(truth), set(vocab_a), set(vocab_b)


def hard_two_topic_corpus(n_docs=60, doc_len=200, seed=4):
    """Two-topic corpus with a large vocabulary and shared noise words.

    Slow enough to mix that a 10-sweep fit is reliably worse than a
    converged one, unlike the small disjoint corpus.
    """
    rng = np.random.default_rng(seed)
    vocab_a = [f"alpha{i}" for i in range(400)]
    vocab_b = [f"beta{i}" for i in range(400)]
    shared = [f"noise{i}" for i in range(800)]
    token_lists = []
    for d in range(n_docs):
        own = vocab_a if d % 2 == 0 else vocab_b
        tokens = []
        for _ in range(doc_len):
            pool = shared if rng.random() < 0.35 else own
            tokens.append(pool[rng.integers(len(pool))])
        token_lists.append(tokens)
    return make_bow(token_lists)


def normal_equation_fit(X, y):
    """Brute-force least squares oracle: solve the normal equations."""
    design = np.column_stack([X, np.ones(X.shape[0])])
    solution = np.linalg.solve(design.T @ design, design.T @ y)
    return solution[:-1], float(solution[-1])


def knn_scan_oracle(train_X, train_y, queries, k):
    """Exhaustive-scan nearest-neighbor oracle, pure-python selection.

    Distance ties break toward the lower training-row index via the sort key.
    """
    out = []
    for query in np.asarray(queries, dtype=float):
        scored = []
        for idx, row in enumerate(np.asarray(train_X, dtype=float)):
            d2 = 0.0
            for a, b in zip(row, query):
                d2 += (a - b) ** 2
            scored.append((d2, idx))
        scored.sort()
        chosen = [idx for _, idx in scored[:k]]
        out.append(float(np.mean(np.asarray(train_y, dtype=float)[chosen])))
    return np.array(out)


@pytest.fixture(scope="session")
def fixtures_dir():
    from pathlib import Path

    path = Path(__file__).resolve().parent.parent / "fixtures"
    assert path.is_dir(), "bundled fixtures missing; run tools/make_fixtures.py"
    return path
