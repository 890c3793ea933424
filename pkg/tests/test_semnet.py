"""Semantic network tests with brute-force and hand-worked oracles."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest

from fieldscale.corpus import Corpus, Unit
from fieldscale.embeddings import WordVectors
from fieldscale.errors import InvalidPartition, NotFound, SeedsAbsent
from fieldscale.semnet import (
    SemanticGraph,
    apply_partition,
    build_cooccurrence,
    build_seedword,
    collapse_clusters,
    detect_communities,
    expand_seeds,
    export_graph,
    load_graphml,
    modularity,
    prune,
)
from fieldscale.textprep import annotate_corpus


def corpus_of(texts_by_doc):
    units = []
    for doc, texts in texts_by_doc.items():
        for i, text in enumerate(texts):
            units.append(Unit(doc, i, text))
    return Corpus(tuple(units), {d: None for d in texts_by_doc}, frozenset())


def graph_of(edge_weights, extra_nodes=()):
    nodes = {n: {"frequency": 1} for pair in edge_weights for n in pair}
    for n in extra_nodes:
        nodes[n] = {"frequency": 1}
    return SemanticGraph(nodes=nodes, edges=dict(edge_weights), metadata={})


# ------------------------------------------------------------ co-occurrence

def test_cooccurrence_hand_example_unit_scope():
    annotated = annotate_corpus(corpus_of({
        "d": ["fish market boat", "fish boat", "market price"],
    }))
    g = build_cooccurrence(annotated, scope="unit")
    assert g.edges == {
        ("boat", "fish"): 2,
        ("boat", "market"): 1,
        ("fish", "market"): 1,
        ("market", "price"): 1,
    }
    assert g.nodes["fish"]["frequency"] == 2
    assert g.nodes["market"]["frequency"] == 2
    assert g.nodes["price"]["frequency"] == 1


def test_cooccurrence_counts_once_per_instance():
    annotated = annotate_corpus(corpus_of({"d": ["fish fish boat boat fish"]}))
    g = build_cooccurrence(annotated, scope="unit")
    assert g.edges == {("boat", "fish"): 1}
    # frequency counts instances containing the stem, not token repeats
    assert g.nodes["fish"]["frequency"] == 1


def test_cooccurrence_scopes_differ():
    annotated = annotate_corpus(corpus_of({
        "d": ["Fish market. Boat dock."],
        "e": ["Fish dock."],
    }))
    by_sentence = build_cooccurrence(annotated, scope="sentence")
    assert ("fish", "market") in by_sentence.edges
    assert ("dock", "fish") in by_sentence.edges  # from doc e
    assert ("boat", "fish") not in by_sentence.edges

    by_unit = build_cooccurrence(annotated, scope="unit")
    assert ("boat", "fish") in by_unit.edges

    by_doc = build_cooccurrence(annotated, scope="document")
    assert by_doc.edges[("dock", "fish")] == 2  # once in each document


def test_cooccurrence_matches_quadratic_brute_force():
    rng = random.Random(7)
    vocab = [f"w{i}" for i in range(12)]
    texts = [" ".join(rng.choice(vocab) for _ in range(rng.randint(1, 9)))
             for _ in range(30)]
    annotated = annotate_corpus(corpus_of({"d": texts}))
    g = build_cooccurrence(annotated, scope="unit")

    # independent route: test every vocab pair against every unit
    instances = [set(t.split()) for t in texts]
    for a, b in combinations(sorted({w for inst in instances for w in inst}), 2):
        expected = sum(1 for inst in instances if a in inst and b in inst)
        assert g.edges.get((a, b), 0) == expected
    for w in sorted({w for inst in instances for w in inst}):
        assert g.nodes[w]["frequency"] == sum(1 for inst in instances if w in inst)


def test_cooccurrence_pos_filter():
    annotated = annotate_corpus(corpus_of({"d": ["the village market was walking"]}))
    nouns = build_cooccurrence(annotated, scope="unit", token_filter="nouns_adjectives")
    assert set(nouns.nodes) == {"village", "market"}
    verbs = build_cooccurrence(annotated, scope="unit", token_filter="verbs_adverbs")
    assert set(verbs.nodes) == {"was", "walking"}
    custom = build_cooccurrence(annotated, scope="unit", token_filter={"village", "walking"})
    assert custom.edges == {("village", "walking"): 1}


def test_cooccurrence_majority_pos_tag():
    # "walking" tags VERB by suffix; seen twice as VERB, once inside a
    # custom-filtered instance it is still VERB -> majority VERB
    annotated = annotate_corpus(corpus_of({"d": ["walking village", "walking market"]}))
    g = build_cooccurrence(annotated, scope="unit")
    assert g.nodes["walking"]["pos"] == "VERB"
    assert g.nodes["village"]["pos"] == "NOUN"


def test_cooccurrence_entities_filter():
    corpus = corpus_of({"d": ["Maria visited Rome yesterday"]})
    annotated = annotate_corpus(corpus)
    assert build_cooccurrence(annotated, token_filter="entities_only").nodes == {}


# ---------------------------------------------------------------- seed graph

def chain_corpus():
    # co-occurrence chain a-b, b-c, c-d (unit scope)
    return annotate_corpus(corpus_of({
        "d": ["aa bb", "bb cc", "cc dd", "aa bb", "ee"],
    }))


def test_seedword_rounds_admit_outward():
    annotated = chain_corpus()
    g1 = build_seedword(annotated, ["aa"], rounds=1)
    assert set(g1.nodes) == {"aa", "bb"}
    g2 = build_seedword(annotated, ["aa"], rounds=2)
    assert set(g2.nodes) == {"aa", "bb", "cc"}
    g3 = build_seedword(annotated, ["aa"], rounds=3)
    assert set(g3.nodes) == {"aa", "bb", "cc", "dd"}
    # monotone in rounds
    assert set(g1.nodes) < set(g2.nodes) < set(g3.nodes)
    assert g3.metadata["admitted_per_round"] == [1, 1, 1]
    assert g3.nodes["aa"]["seed"] is True and g3.nodes["aa"]["round"] == 0
    assert g3.nodes["dd"]["seed"] is False and g3.nodes["dd"]["round"] == 3
    # ee never co-occurs with anything admitted
    assert "ee" not in g3.nodes


def test_seedword_threshold_blocks_weak_edges():
    g = build_seedword(chain_corpus(), ["aa"], rounds=3, threshold=2)
    # only the aa-bb edge has weight 2
    assert set(g.nodes) == {"aa", "bb"}


def test_seedword_missing_seeds():
    annotated = chain_corpus()
    with pytest.raises(SeedsAbsent):
        build_seedword(annotated, ["zz", "qq"], rounds=1)
    g = build_seedword(annotated, ["zz", "aa"], rounds=0)
    assert set(g.nodes) == {"aa"}
    assert g.metadata["seeds_missing"] == ["zz"]


def test_expand_seeds_from_vectors():
    vecs = WordVectors(
        ("boat", "dock", "fish", "net"),
        np.array([[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 1.0]]),
    )
    out = expand_seeds(vecs, ["boat", "missing"], n=1)
    assert out == [("boat", True), ("dock", False)]
    with pytest.raises(NotFound):
        expand_seeds(vecs, ["missing"], n=1)


# ------------------------------------------------------------------- pruning

def test_prune_min_weight_drops_isolated():
    g = graph_of({("a", "b"): 5, ("b", "c"): 1, ("c", "d"): 1}, extra_nodes=["e"])
    pruned = prune(g, min_weight=2)
    assert set(pruned.nodes) == {"a", "b"}
    assert pruned.edges == {("a", "b"): 5}


def test_prune_top_k_edges_tie_breaks_alphabetically():
    g = graph_of({("a", "b"): 1, ("a", "c"): 1, ("b", "c"): 1})
    pruned = prune(g, top_k_edges=2)
    assert set(pruned.edges) == {("a", "b"), ("a", "c")}


def test_prune_top_k_nodes_by_strength():
    g = graph_of({("a", "b"): 3, ("a", "c"): 2, ("c", "d"): 1})
    # strengths: a=5, b=3, c=3, d=1; b beats c alphabetically on the tie
    pruned = prune(g, top_k_nodes=2)
    assert set(pruned.nodes) == {"a", "b"}
    assert pruned.edges == {("a", "b"): 3}


def test_prune_is_idempotent():
    g = graph_of({("a", "b"): 3, ("a", "c"): 2, ("b", "c"): 2, ("c", "d"): 1})
    once = prune(g, min_weight=2, top_k_edges=2, top_k_nodes=3)
    twice = prune(once, min_weight=2, top_k_edges=2, top_k_nodes=3)
    assert once.nodes == twice.nodes
    assert once.edges == twice.edges


# --------------------------------------------------------------- communities

def triangles_with_bridge():
    return graph_of({
        ("a", "b"): 1, ("a", "c"): 1, ("b", "c"): 1,
        ("d", "e"): 1, ("d", "f"): 1, ("e", "f"): 1,
        ("c", "d"): 1,
    })


def test_modularity_hand_formula():
    g = triangles_with_bridge()
    part = {"a": 0, "b": 0, "c": 0, "d": 1, "e": 1, "f": 1}
    # 7 edges, 2m = 14; each community: internal 2*3, total strength 7
    expected = 2 * (Fraction(6, 14) - Fraction(7, 14) ** 2)
    assert abs(modularity(g, part) - float(expected)) < 1e-12
    assert expected == Fraction(5, 14)

    everyone = {n: 0 for n in g.nodes}
    assert abs(modularity(g, everyone) - (1 - 1)) < 1e-12  # 14/14 - (14/14)^2


def test_modularity_requires_full_partition():
    g = graph_of({("a", "b"): 1})
    with pytest.raises(InvalidPartition):
        modularity(g, {"a": 0})


def test_detect_communities_two_triangles():
    g = triangles_with_bridge()
    partition, q = detect_communities(g)
    assert partition == {"a": 0, "b": 0, "c": 0, "d": 1, "e": 1, "f": 1}
    assert abs(q - 5 / 14) < 1e-9


def test_detect_communities_disjoint_pairs():
    g = graph_of({("a", "b"): 1, ("c", "d"): 1})
    partition, q = detect_communities(g)
    assert partition == {"a": 0, "b": 0, "c": 1, "d": 1}
    assert abs(q - 0.5) < 1e-12


def test_detect_communities_single_edge():
    partition, q = detect_communities(graph_of({("a", "b"): 1}))
    assert partition == {"a": 0, "b": 0}
    assert q == pytest.approx(0.0, abs=1e-12)


def test_detect_communities_no_edges():
    g = SemanticGraph(nodes={"b": {}, "a": {}}, edges={}, metadata={})
    partition, q = detect_communities(g)
    assert partition == {"a": 0, "b": 1}
    assert q == 0.0


def test_detect_communities_deterministic():
    g = triangles_with_bridge()
    assert detect_communities(g) == detect_communities(g)


def test_apply_partition_sets_cluster():
    g = graph_of({("a", "b"): 1})
    partition, _ = detect_communities(g)
    tagged = apply_partition(g, partition)
    assert tagged.nodes["a"]["cluster"] == 0
    with pytest.raises(InvalidPartition):
        apply_partition(g, {"a": 0})


# ------------------------------------------------------------------ collapse

def test_collapse_clusters_hand_example():
    g = graph_of({
        ("a", "b"): 2, ("a", "c"): 1,
        ("c", "d"): 4,
        ("b", "d"): 3,
    })
    collapsed = collapse_clusters(g, {"a": 0, "b": 0, "c": 1, "d": 1})
    assert set(collapsed.nodes) == {"a", "c"}
    # inter-cluster weight: a-c edge (1) plus b-d edge (3)
    assert collapsed.edges == {("a", "c"): 4}
    assert collapsed.nodes["a"]["internal_weight"] == 2
    assert collapsed.nodes["c"]["internal_weight"] == 4
    assert collapsed.nodes["a"]["members"] == 2
    assert collapsed.nodes["a"]["frequency"] == 2  # summed member frequencies


def test_collapse_rejects_partial_partition():
    g = graph_of({("a", "b"): 1})
    with pytest.raises(InvalidPartition):
        collapse_clusters(g, {"a": 0})
    with pytest.raises(InvalidPartition):
        collapse_clusters(g, {"a": 0, "b": 0, "zz": 1})


# -------------------------------------------------------------------- export

def test_export_edge_list_sorted(tmp_path):
    g = graph_of({("b", "c"): 2, ("a", "b"): 1})
    path = tmp_path / "edges.csv"
    export_graph(g, path, fmt="edge_list_csv")
    assert path.read_text("utf-8") == "source,target,weight\na,b,1\nb,c,2\n"


def test_export_dot_contains_nodes_and_edges(tmp_path):
    g = graph_of({("a", "b"): 1})
    path = tmp_path / "g.dot"
    export_graph(g, path, fmt="dot")
    text = path.read_text("utf-8")
    assert text.startswith("graph semnet {")
    assert '"a" -- "b" [weight=1];' in text
    with pytest.raises(ValueError):
        export_graph(g, path, fmt="gexf")


def test_graphml_round_trip_lossless(tmp_path):
    annotated = chain_corpus()
    g = build_seedword(annotated, ["aa"], rounds=2)
    partition, _ = detect_communities(g)
    g = apply_partition(g, partition)
    path = tmp_path / "g.graphml"
    export_graph(g, path, fmt="graphml")
    back = load_graphml(path)
    assert dict(back.nodes) == {k: dict(v) for k, v in g.nodes.items()}
    assert dict(back.edges) == dict(g.edges)
    assert back.metadata == dict(g.metadata)


def test_graphml_export_deterministic(tmp_path):
    g = triangles_with_bridge()
    export_graph(g, tmp_path / "1.graphml", fmt="graphml")
    export_graph(g, tmp_path / "2.graphml", fmt="graphml")
    assert (tmp_path / "1.graphml").read_bytes() == (tmp_path / "2.graphml").read_bytes()
