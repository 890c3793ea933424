"""Topic model tests: invariants, determinism, and theme recovery."""

from __future__ import annotations

import random

import pytest

from fieldscale.errors import EmptyVocabulary, InvalidK, NotFound
from fieldscale.topics import TopicModel, fit_lda, load_model, save_model, top_words

THEME_A = ["river", "boat", "fish", "net", "water", "tide", "shore", "catch"]
THEME_B = ["market", "price", "stall", "trade", "coin", "seller", "buyer", "goods"]


def themed_docs(n_docs, seed, length=12):
    """Half the docs draw only from THEME_A, half only from THEME_B."""
    rng = random.Random(seed)
    docs, labels = [], []
    for i in range(n_docs):
        theme = THEME_A if i % 2 == 0 else THEME_B
        docs.append([rng.choice(theme) for _ in range(length)])
        labels.append(i % 2)
    return docs, labels


def purity(model, labels):
    by_topic = {}
    for d, label in enumerate(labels):
        by_topic.setdefault(model.dominant_topic(d), []).append(label)
    agree = sum(max(members.count(0), members.count(1)) for members in by_topic.values())
    return agree / len(labels)


def test_fit_lda_argument_validation():
    with pytest.raises(InvalidK):
        fit_lda([["a"]], k=0)
    with pytest.raises(EmptyVocabulary):
        fit_lda([[], []], k=2)
    with pytest.raises(ValueError):
        fit_lda([["a"]], k=1, iterations=0)


def test_default_hyperparameters():
    model = fit_lda([["a", "b"], ["b", "c"]], k=4, iterations=2, seed=1)
    assert model.alpha == 50.0 / 4
    assert model.beta == 0.01
    assert model.metadata["burn_in"] == 1


def test_rows_are_normalized():
    docs, _ = themed_docs(10, seed=3)
    model = fit_lda(docs, k=3, iterations=5, seed=7)
    for row in model.phi:
        assert abs(sum(row) - 1.0) < 1e-9
    for row in model.theta:
        assert abs(sum(row) - 1.0) < 1e-9


def test_same_seed_is_bit_exact():
    docs, _ = themed_docs(8, seed=11)
    m1 = fit_lda(docs, k=2, iterations=20, seed=42)
    m2 = fit_lda(docs, k=2, iterations=20, seed=42)
    assert m1.phi == m2.phi
    assert m1.theta == m2.theta
    assert m1.log_likelihoods == m2.log_likelihoods


def test_different_seed_differs():
    docs, _ = themed_docs(8, seed=11)
    m1 = fit_lda(docs, k=2, iterations=20, seed=1)
    m2 = fit_lda(docs, k=2, iterations=20, seed=2)
    assert m1.phi != m2.phi


def test_vocab_is_sorted_and_complete():
    model = fit_lda([["b", "a"], ["c", "a"]], k=1, iterations=1)
    assert model.vocab == ("a", "b", "c")


def test_recovers_disjoint_themes():
    docs, labels = themed_docs(40, seed=5)
    model = fit_lda(docs, k=2, iterations=100, seed=9)
    assert purity(model, labels) >= 0.95
    # a separable fit should improve on its random initialization
    assert model.log_likelihoods[-1] > model.log_likelihoods[0]
    assert len(model.log_likelihoods) == 100


def test_top_words_order_and_ties():
    model = TopicModel(
        k=2,
        alpha=1.0,
        beta=0.01,
        vocab=("apple", "mango", "zebra"),
        phi=((0.2, 0.5, 0.3), (0.4, 0.4, 0.2)),
        theta=((1.0, 0.0),),
        seed=0,
        iterations=1,
        log_likelihoods=(0.0,),
    )
    assert top_words(model, 0, 2) == [("mango", 0.5), ("zebra", 0.3)]
    # equal probabilities break alphabetically
    assert [w for w, _ in top_words(model, 1, 3)] == ["apple", "mango", "zebra"]
    with pytest.raises(NotFound):
        top_words(model, 2)


def test_dominant_topic_tie_breaks_low_index():
    model = TopicModel(
        k=2, alpha=1.0, beta=0.01, vocab=("a",),
        phi=((1.0,), (1.0,)), theta=((0.5, 0.5), (0.2, 0.8)),
        seed=0, iterations=1, log_likelihoods=(0.0,),
    )
    assert model.dominant_topic(0) == 0
    assert model.dominant_topic(1) == 1


def test_save_load_round_trip(tmp_path):
    docs, _ = themed_docs(6, seed=2)
    model = fit_lda(docs, k=2, iterations=5, seed=3)
    path = tmp_path / "model.json"
    save_model(model, path)
    back = load_model(path)
    assert back == model
    # deterministic bytes
    save_model(back, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()
