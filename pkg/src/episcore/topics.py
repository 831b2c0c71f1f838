"""Topic modeling by collapsed Gibbs sampling.

The sampler integrates out the topic-word and document-topic distributions
and resamples one token assignment at a time from the count-based full
conditional. Point estimates are smoothed counts averaged over post-burn-in
sweeps. All randomness comes from one PCG64 generator seeded explicitly, so
a fit is bit-reproducible for a given corpus and configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import (
    BatchError,
    EmptyCorpus,
    EmptyDocument,
    InvariantViolation,
    TopicOutOfRange,
    VocabularyMismatch,
)
from .textprep import BagOfWords


def _gibbs_sweep(token_word, token_doc, z, n_dk, n_kw, n_k, alpha, beta, v_beta, uniforms, probs):
    # One full pass over all tokens, in corpus order. Sequential by design:
    # each draw conditions on every other current assignment.
    num_topics = n_k.shape[0]
    for i in range(token_word.shape[0]):
        w = token_word[i]
        d = token_doc[i]
        k = z[i]
        n_dk[d, k] -= 1
        n_kw[k, w] -= 1
        n_k[k] -= 1
        total = 0.0
        for t in range(num_topics):
            p = (n_kw[t, w] + beta) / (n_k[t] + v_beta) * (n_dk[d, t] + alpha)
            probs[t] = p
            total += p
        u = uniforms[i] * total
        acc = 0.0
        new_k = num_topics - 1
        for t in range(num_topics):
            acc += probs[t]
            if u < acc:
                new_k = t
                break
        z[i] = new_k
        n_dk[d, new_k] += 1
        n_kw[new_k, w] += 1
        n_k[new_k] += 1


try:
    from numba import njit

    _gibbs_sweep_fast = njit(cache=True)(_gibbs_sweep)
except ImportError:  # pragma: no cover - numba is a declared dependency
    _gibbs_sweep_fast = _gibbs_sweep


@dataclass(frozen=True)
class LdaConfig:
    """Sampler settings. alpha/beta are the symmetric Dirichlet priors."""

    num_topics: int
    alpha: float
    beta: float
    iterations: int
    burn_in: int
    sample_lag: int
    seed: int

    def validate(self):
        if self.num_topics < 1:
            raise ValueError("num_topics must be >= 1")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("alpha and beta must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.sample_lag < 1:
            raise ValueError("sample_lag must be >= 1")


def dominant_topic(theta_row) -> int:
    """Index of the largest proportion; ties go to the lowest index."""
    row = np.asarray(theta_row, dtype=float)
    if abs(row.sum() - 1.0) > 1e-6:
        raise ValueError("proportions must sum to 1 within 1e-6")
    return int(np.argmax(row))


def _kl_base2(p, m):
    mask = p > 0
    return float(np.sum(p[mask] * np.log2(p[mask] / m[mask])))


def jensen_shannon_base2(p, q) -> float:
    """Jensen-Shannon divergence with base-2 logs; 0 for equal, 1 for disjoint."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    m = 0.5 * (p + q)
    return 0.5 * _kl_base2(p, m) + 0.5 * _kl_base2(q, m)


def topic_distance_matrix(phi) -> np.ndarray:
    """Pairwise Jensen-Shannon divergences between topic-word rows."""
    phi = np.asarray(phi, dtype=float)
    k = phi.shape[0]
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i + 1, k):
            out[i, j] = out[j, i] = jensen_shannon_base2(phi[i], phi[j])
    return out


def top_keywords(phi, vocabulary, topic: int, n: int):
    """n heaviest terms of one topic row, descending, ties by vocabulary order."""
    phi = np.asarray(phi, dtype=float)
    if not 0 <= topic < phi.shape[0]:
        raise TopicOutOfRange(topic, phi.shape[0])
    row = phi[topic]
    order = sorted(range(row.shape[0]), key=lambda v: (-row[v], v))
    return [(vocabulary.terms[v], float(row[v])) for v in order[: min(n, row.shape[0])]]


def corpus_log_likelihood(phi, theta, bow: BagOfWords) -> float:
    """Sum over tokens of log p(word | theta_doc, phi)."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if phi.shape[1] != bow.n_terms:
        raise VocabularyMismatch(f"phi has {phi.shape[1]} terms, corpus has {bow.n_terms}")
    if theta.shape[0] != bow.n_docs:
        raise VocabularyMismatch(f"theta has {theta.shape[0]} rows, corpus has {bow.n_docs} docs")
    total = 0.0
    for d in range(bow.n_docs):
        ids, counts = bow.row(d)
        if ids.size == 0:
            continue
        mixture = theta[d] @ phi[:, ids]
        total += float(counts @ np.log(mixture))
    return total


class GibbsLda(BaseEstimator):
    """Latent topic model fitted by collapsed Gibbs sampling.

    Parameters mirror LdaConfig; alpha defaults to 50/num_topics when left
    None. After fit the estimates live in phi_ (topics x terms) and theta_
    (docs x topics); assignments_ holds the final sweep's per-token topics.

    check_counts=True re-verifies the sampler's count bookkeeping after
    every sweep (slow; meant for tests and debugging).
    """

    def __init__(self, num_topics=3, alpha=None, beta=0.01, iterations=1000,
                 burn_in=500, sample_lag=10, seed=0, check_counts=False):
        self.num_topics = num_topics
        self.alpha = alpha
        self.beta = beta
        self.iterations = iterations
        self.burn_in = burn_in
        self.sample_lag = sample_lag
        self.seed = seed
        self.check_counts = check_counts

    def _config(self) -> LdaConfig:
        alpha = 50.0 / self.num_topics if self.alpha is None else float(self.alpha)
        config = LdaConfig(
            num_topics=int(self.num_topics),
            alpha=alpha,
            beta=float(self.beta),
            iterations=int(self.iterations),
            burn_in=int(self.burn_in),
            sample_lag=int(self.sample_lag),
            seed=int(self.seed),
        )
        config.validate()
        return config

    def fit(self, bow: BagOfWords, y=None):
        config = self._config()
        if bow.n_docs == 0 or bow.n_terms == 0 or bow.total_tokens == 0:
            raise EmptyCorpus()
        empty = [EmptyDocument(bow.doc_ids[d]) for d in range(bow.n_docs) if bow.row_total(d) == 0]
        if empty:
            raise BatchError(empty)

        token_word, token_doc = _flatten(bow)
        n_tokens = token_word.shape[0]
        num_topics = config.num_topics
        n_terms = bow.n_terms

        rng = np.random.Generator(np.random.PCG64(config.seed))
        z = rng.integers(0, num_topics, n_tokens, dtype=np.int64)

        n_dk = np.zeros((bow.n_docs, num_topics), dtype=np.int64)
        n_kw = np.zeros((num_topics, n_terms), dtype=np.int64)
        n_k = np.zeros(num_topics, dtype=np.int64)
        np.add.at(n_dk, (token_doc, z), 1)
        np.add.at(n_kw, (z, token_word), 1)
        np.add.at(n_k, z, 1)
        doc_lengths = bow.row_totals().astype(np.float64)

        v_beta = n_terms * config.beta
        probs = np.empty(num_topics, dtype=np.float64)
        phi_acc = np.zeros((num_topics, n_terms))
        theta_acc = np.zeros((bow.n_docs, num_topics))
        n_samples = 0

        for sweep in range(1, config.iterations + 1):
            uniforms = rng.random(n_tokens)
            _gibbs_sweep_fast(
                token_word, token_doc, z, n_dk, n_kw, n_k,
                config.alpha, config.beta, v_beta, uniforms, probs,
            )
            if self.check_counts:
                _verify_counts(token_word, token_doc, z, n_dk, n_kw, n_k, doc_lengths)
            if sweep > config.burn_in and (sweep - config.burn_in) % config.sample_lag == 0:
                phi_acc += _phi_from_counts(n_kw, n_k, config.beta)
                theta_acc += _theta_from_counts(n_dk, doc_lengths, config.alpha)
                n_samples += 1
        if n_samples == 0:
            # burn_in + sample_lag never lined up inside the run; use the end state
            phi_acc += _phi_from_counts(n_kw, n_k, config.beta)
            theta_acc += _theta_from_counts(n_dk, doc_lengths, config.alpha)
            n_samples = 1

        self.config_ = config
        self.vocabulary_ = bow.vocabulary
        self.doc_ids_ = bow.doc_ids
        self.phi_ = phi_acc / n_samples
        self.theta_ = theta_acc / n_samples
        self.assignments_ = z
        self.token_word_ = token_word
        self.token_doc_ = token_doc
        self.n_samples_averaged_ = n_samples
        return self

    def _require_fitted(self):
        if not hasattr(self, "phi_"):
            raise NotFittedError("fit the model before using it")

    def top_keywords(self, topic: int, n: int = 10):
        self._require_fitted()
        return top_keywords(self.phi_, self.vocabulary_, topic, n)

    def dominant_topics(self) -> np.ndarray:
        self._require_fitted()
        return np.array([dominant_topic(row) for row in self.theta_], dtype=np.int64)

    def topic_distances(self) -> np.ndarray:
        self._require_fitted()
        return topic_distance_matrix(self.phi_)

    def score(self, bow: BagOfWords, y=None) -> float:
        """Corpus log likelihood of `bow` under the fitted estimates.

        For a convergence diagnostic pass the training corpus; its theta
        rows are the fitted ones, matched by position.
        """
        self._require_fitted()
        return corpus_log_likelihood(self.phi_, self.theta_, bow)


def _flatten(bow: BagOfWords):
    """Expand counts into parallel token arrays, doc-major, term ids ascending."""
    token_word = np.empty(bow.total_tokens, dtype=np.int64)
    token_doc = np.empty(bow.total_tokens, dtype=np.int64)
    pos = 0
    for d in range(bow.n_docs):
        ids, counts = bow.row(d)
        for tid, count in zip(ids, counts):
            token_word[pos: pos + count] = tid
            token_doc[pos: pos + count] = d
            pos += count
    return token_word, token_doc


def _phi_from_counts(n_kw, n_k, beta):
    return (n_kw + beta) / (n_k + n_kw.shape[1] * beta)[:, None]


def _theta_from_counts(n_dk, doc_lengths, alpha):
    return (n_dk + alpha) / (doc_lengths + n_dk.shape[1] * alpha)[:, None]


def _verify_counts(token_word, token_doc, z, n_dk, n_kw, n_k, doc_lengths):
    if np.any(n_dk < 0) or np.any(n_kw < 0) or np.any(n_k < 0):
        raise InvariantViolation("negative count in sampler bookkeeping")
    if not np.array_equal(n_dk.sum(axis=1), doc_lengths.astype(np.int64)):
        raise InvariantViolation("doc-topic counts do not sum to document lengths")
    if not np.array_equal(n_kw.sum(axis=1), n_k):
        raise InvariantViolation("topic-word counts do not sum to topic totals")
    check_dk = np.zeros_like(n_dk)
    check_kw = np.zeros_like(n_kw)
    np.add.at(check_dk, (token_doc, z), 1)
    np.add.at(check_kw, (z, token_word), 1)
    if not (np.array_equal(check_dk, n_dk) and np.array_equal(check_kw, n_kw)):
        raise InvariantViolation("sampler counts diverged from assignments")
