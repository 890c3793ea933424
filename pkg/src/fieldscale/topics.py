"""Latent Dirichlet allocation by collapsed Gibbs sampling.

The sampler is plain Python over integer count tables, seeded through
``random.Random``, so a (docs, k, iterations, seed) tuple always yields the
same model bit for bit. Estimates come from the final sampler state with the
usual smoothed ratios:

    phi[k][v]   = (n_kv + beta)  / (n_k + V * beta)
    theta[d][k] = (n_dk + alpha) / (n_d + K * alpha)

``log_likelihoods`` records the joint log p(w, z) once per sweep so callers
can judge mixing; ``burn_in`` (default half the sweeps) is carried in the
model metadata for provenance even though final-state estimates do not
average over samples.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from scipy.special import gammaln

from .errors import EmptyVocabulary, InvalidK, NotFound


@dataclass(frozen=True)
class TopicModel:
    k: int
    alpha: float
    beta: float
    vocab: tuple[str, ...]
    phi: tuple[tuple[float, ...], ...]      # k rows over vocab
    theta: tuple[tuple[float, ...], ...]    # one row per document
    seed: int
    iterations: int
    log_likelihoods: tuple[float, ...]
    metadata: Mapping[str, object] = field(default_factory=dict)

    def dominant_topic(self, doc_index: int) -> int:
        """Index of the highest-probability topic; lowest index wins ties."""
        row = self.theta[doc_index]
        return max(range(self.k), key=lambda t: (row[t], -t))


def fit_lda(
    docs: Sequence[Sequence[str]],
    k: int,
    iterations: int = 1000,
    alpha: float | None = None,
    beta: float = 0.01,
    seed: int = 0,
) -> TopicModel:
    """Fit a k-topic model to tokenized documents (lists of stems)."""
    if k < 1:
        raise InvalidK(f"k must be >= 1, got {k}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    vocab = tuple(sorted({w for doc in docs for w in doc}))
    if not vocab:
        raise EmptyVocabulary("no tokens in any document")
    if alpha is None:
        alpha = 50.0 / k
    word_id = {w: i for i, w in enumerate(vocab)}
    ids = [[word_id[w] for w in doc] for doc in docs]

    n_docs, n_words = len(ids), len(vocab)
    rng = random.Random(seed)
    n_kv = [[0] * n_words for _ in range(k)]
    n_k = [0] * k
    n_dk = [[0] * k for _ in range(n_docs)]
    n_d = [len(doc) for doc in ids]
    assignments = [[0] * len(doc) for doc in ids]

    for d, doc in enumerate(ids):
        for i, v in enumerate(doc):
            z = rng.randrange(k)
            assignments[d][i] = z
            n_kv[z][v] += 1
            n_k[z] += 1
            n_dk[d][z] += 1

    v_beta = n_words * beta
    log_likelihoods: list[float] = []
    for _ in range(iterations):
        for d, doc in enumerate(ids):
            doc_topics = n_dk[d]
            doc_assign = assignments[d]
            for i, v in enumerate(doc):
                z = doc_assign[i]
                n_kv[z][v] -= 1
                n_k[z] -= 1
                doc_topics[z] -= 1
                total = 0.0
                weights = [0.0] * k
                for t in range(k):
                    w = (doc_topics[t] + alpha) * (n_kv[t][v] + beta) / (n_k[t] + v_beta)
                    weights[t] = w
                    total += w
                u = rng.random() * total
                acc = 0.0
                z = k - 1
                for t in range(k):
                    acc += weights[t]
                    if u < acc:
                        z = t
                        break
                doc_assign[i] = z
                n_kv[z][v] += 1
                n_k[z] += 1
                doc_topics[z] += 1
        log_likelihoods.append(
            _joint_log_likelihood(n_kv, n_k, n_dk, n_d, alpha, beta)
        )

    phi = tuple(
        tuple((n_kv[t][v] + beta) / (n_k[t] + v_beta) for v in range(n_words))
        for t in range(k)
    )
    theta = tuple(
        tuple((n_dk[d][t] + alpha) / (n_d[d] + k * alpha) for t in range(k))
        for d in range(n_docs)
    )
    return TopicModel(
        k=k,
        alpha=alpha,
        beta=beta,
        vocab=vocab,
        phi=phi,
        theta=theta,
        seed=seed,
        iterations=iterations,
        log_likelihoods=tuple(log_likelihoods),
        metadata={"estimates": "final_state", "burn_in": iterations // 2},
    )


def _joint_log_likelihood(n_kv, n_k, n_dk, n_d, alpha, beta) -> float:
    """Collapsed joint log p(w, z | alpha, beta) from the count tables."""
    k = len(n_k)
    n_words = len(n_kv[0])
    n_docs = len(n_d)
    ll = k * (gammaln(n_words * beta) - n_words * gammaln(beta))
    for t in range(k):
        ll += sum(gammaln(c + beta) for c in n_kv[t]) - gammaln(n_k[t] + n_words * beta)
    ll += n_docs * (gammaln(k * alpha) - k * gammaln(alpha))
    for d in range(n_docs):
        ll += sum(gammaln(c + alpha) for c in n_dk[d]) - gammaln(n_d[d] + k * alpha)
    return float(ll)


def top_words(model: TopicModel, topic: int, n: int = 10) -> list[tuple[str, float]]:
    """The n most probable words for a topic; ties break lexicographically."""
    if not 0 <= topic < model.k:
        raise NotFound(f"no topic {topic} in a {model.k}-topic model")
    row = model.phi[topic]
    order = sorted(range(len(model.vocab)), key=lambda v: (-row[v], model.vocab[v]))
    return [(model.vocab[v], row[v]) for v in order[:n]]


def save_model(model: TopicModel, path: str | Path) -> None:
    """Write a model as deterministic JSON (sorted keys, no timestamps)."""
    payload = {
        "k": model.k,
        "alpha": model.alpha,
        "beta": model.beta,
        "vocab": list(model.vocab),
        "phi": [list(row) for row in model.phi],
        "theta": [list(row) for row in model.theta],
        "seed": model.seed,
        "iterations": model.iterations,
        "log_likelihoods": list(model.log_likelihoods),
        "metadata": dict(model.metadata),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", "utf-8")


def load_model(path: str | Path) -> TopicModel:
    payload = json.loads(Path(path).read_text("utf-8"))
    return TopicModel(
        k=payload["k"],
        alpha=payload["alpha"],
        beta=payload["beta"],
        vocab=tuple(payload["vocab"]),
        phi=tuple(tuple(row) for row in payload["phi"]),
        theta=tuple(tuple(row) for row in payload["theta"]),
        seed=payload["seed"],
        iterations=payload["iterations"],
        log_likelihoods=tuple(payload["log_likelihoods"]),
        metadata=payload["metadata"],
    )
