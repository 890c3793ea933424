"""Command-line surface tying the toolkit's stages together.

Conventions shared by every subcommand:

- artifacts land under ``--out`` (a directory, or a file for the table
  commands) together with a run manifest pinning input digests, params,
  seeds, and library versions;
- all randomness takes a ``--seed`` (default 7), so reruns with the same
  inputs reproduce the same bytes;
- usage errors exit 2 with help text; domain errors exit 1 with a single
  ``ErrorClass: message`` line on stderr.
"""

from __future__ import annotations

import csv
import json
import sys
from importlib import resources
from pathlib import Path

import click

from . import __version__
from . import coder as coder_mod
from . import embeddings as emb_mod
from . import heatmap as heatmap_mod
from . import semnet as semnet_mod
from . import topics as topics_mod
from .corpus import (
    CODE_SEPARATORS,
    TableSchema,
    context_window,
    export_table,
    import_table,
    ingest_directory,
    read_table,
    write_table,
)
from .errors import FieldscaleError, SchemaError
from .manifest import write_file_manifest, write_manifest
from .pipeline import run_pipeline, unit_stems
from .review.store import ProjectStore
from .textprep import builtin_stopwords, load_stopwords

DEFAULT_SEED = 7

SEPARATOR_CHOICE = click.Choice(sorted(CODE_SEPARATORS))


def _load_corpus(path: str) -> "Corpus":
    p = Path(path)
    return import_table(read_table(p, tsv=p.suffix.lower() == ".tsv"))


def _stoplist(path: str | None):
    return load_stopwords(path) if path else builtin_stopwords()


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _read_keys(path: str) -> list[tuple[str, int]]:
    rows = read_table(path)
    if not rows or [h.strip().lower() for h in rows[0][:2]] != ["document", "reference"]:
        raise SchemaError(f"{path}: expected a header starting 'document,reference'")
    return [(r[0], int(r[1])) for r in rows[1:] if r and r[0]]


def _write_keys(path: Path, keys: list[tuple[str, int]]) -> None:
    _write_csv(path, ["document", "reference"], [[d, r] for d, r in keys])


@click.group()
@click.version_option(__version__, prog_name="fieldscale")
def cli() -> None:
    """Scale qualitative coding: corpora, topics, embeddings, networks,
    heatmaps, per-code classifiers, and the human review loop."""


# ------------------------------------------------------------------- corpus

@cli.command()
@click.option("--in", "in_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--granularity", type=click.Choice(["paragraph", "document"]), default="paragraph", show_default=True)
@click.option("--separator", type=SEPARATOR_CHOICE, default="newline_in_cell", show_default=True)
@click.option("--tsv", is_flag=True, help="Write a TSV instead of CSV.")
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
def ingest(in_dir: str, granularity: str, separator: str, tsv: bool, out_file: str) -> None:
    """Turn a directory of .txt files into a one-paragraph-per-line table."""
    corpus = ingest_directory(in_dir, granularity=granularity)
    out = Path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_table(export_table(corpus, code_separator=separator), out, tsv=tsv)
    write_file_manifest(
        out, "ingest", {"in": in_dir},
        {"granularity": granularity, "separator": separator, "tsv": tsv}, {},
    )
    click.echo(f"{len(corpus.units)} units from {len(corpus.documents)} documents -> {out}")


def _schema_options(fn):
    for name in ("text", "codes", "section", "speaker", "reference", "document"):
        fn = click.option(f"--col-{name}", default=None, help=f"Header of the {name} column.")(fn)
    return fn


def _schema_from(kwargs: dict) -> TableSchema:
    overrides = {}
    for name in ("document", "reference", "speaker", "section", "codes", "text"):
        value = kwargs.pop(f"col_{name}")
        if value is not None:
            overrides[name] = value
    return TableSchema(**{**TableSchema().__dict__, **overrides})


@cli.command("import-table")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--separator", type=SEPARATOR_CHOICE, default="newline_in_cell", show_default=True,
              help="Code separator used by the source table.")
@click.option("--tsv", is_flag=True, help="The source table is TSV.")
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@_schema_options
def import_table_cmd(in_file: str, separator: str, tsv: bool, out_file: str, **schema_cols) -> None:
    """Validate a coded table (any schema) and re-emit it canonically."""
    schema = _schema_from(schema_cols)
    corpus = import_table(read_table(in_file, tsv=tsv), code_separator=separator, schema=schema)
    out = Path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_table(export_table(corpus), out)
    write_file_manifest(
        out, "import-table", {"in": in_file},
        {"separator": separator, "tsv": tsv, "schema": schema.__dict__}, {},
    )
    click.echo(f"{len(corpus.units)} units, {len(corpus.codebook)} codes -> {out}")


@cli.command("export-table")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--separator", type=SEPARATOR_CHOICE, default="newline_in_cell", show_default=True,
              help="Code separator for the exported table.")
@click.option("--tsv", is_flag=True, help="Write a TSV instead of CSV.")
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@_schema_options
def export_table_cmd(in_file: str, separator: str, tsv: bool, out_file: str, **schema_cols) -> None:
    """Re-export a canonical table for other tools (separator, TSV, headers)."""
    schema = _schema_from(schema_cols)
    corpus = _load_corpus(in_file)
    out = Path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_table(export_table(corpus, code_separator=separator, schema=schema), out, tsv=tsv)
    write_file_manifest(
        out, "export-table", {"in": in_file},
        {"separator": separator, "tsv": tsv, "schema": schema.__dict__}, {},
    )
    click.echo(f"{len(corpus.units)} units -> {out}")


# ------------------------------------------------------------------- topics

@cli.group()
def topics() -> None:
    """Topic models over the corpus units."""


@topics.command("fit")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", required=True, type=int)
@click.option("--iterations", default=500, show_default=True, type=int)
@click.option("--seed", default=DEFAULT_SEED, show_default=True, type=int)
@click.option("--stopwords", "stopwords_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--top-words", "n_top", default=10, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def topics_fit(in_file, k, iterations, seed, stopwords_file, n_top, out_dir) -> None:
    """Fit LDA by collapsed Gibbs sampling; write model and summaries."""
    corpus = _load_corpus(in_file)
    stems = unit_stems(corpus, _stoplist(stopwords_file))
    model = topics_mod.fit_lda(stems, k=k, iterations=iterations, seed=seed)
    out = _out_dir(out_dir)
    topics_mod.save_model(model, out / "model.json")
    rows = []
    for t in range(model.k):
        for rank, (word, prob) in enumerate(topics_mod.top_words(model, t, n_top), 1):
            rows.append([t, rank, word, repr(prob)])
    _write_csv(out / "top_words.csv", ["topic", "rank", "word", "probability"], rows)
    _write_csv(
        out / "unit_topics.csv",
        ["document", "reference", "topic"],
        [[u.doc_id, u.reference, model.dominant_topic(i)] for i, u in enumerate(corpus.units)],
    )
    write_manifest(
        out, "topics fit", {"in": in_file},
        {"k": k, "iterations": iterations, "top_words": n_top}, {"topics": seed},
    )
    click.echo(f"k={k} over {len(stems)} units -> {out}")


@topics.command("show")
@click.option("--model", "model_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--topic", "topic_id", default=None, type=int, help="Show one topic (default: all).")
@click.option("--n", default=10, show_default=True, type=int)
def topics_show(model_file, topic_id, n) -> None:
    """Print top words per topic."""
    model = topics_mod.load_model(model_file)
    which = [topic_id] if topic_id is not None else list(range(model.k))
    for t in which:
        words = ", ".join(w for w, _ in topics_mod.top_words(model, t, n))
        click.echo(f"topic {t}: {words}")


# --------------------------------------------------------------- embeddings

@cli.group()
def embed() -> None:
    """Word vectors: training, loading, projection, clustering, neighbors."""


@embed.command("train")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dim", default=50, show_default=True, type=int)
@click.option("--window", default=5, show_default=True, type=int)
@click.option("--negative", default=5, show_default=True, type=int)
@click.option("--epochs", default=5, show_default=True, type=int)
@click.option("--min-count", default=5, show_default=True, type=int)
@click.option("--seed", default=DEFAULT_SEED, show_default=True, type=int)
@click.option("--stopwords", "stopwords_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def embed_train(in_file, dim, window, negative, epochs, min_count, seed, stopwords_file, out_dir) -> None:
    """Train skip-gram negative-sampling vectors on unit stems."""
    corpus = _load_corpus(in_file)
    stems = unit_stems(corpus, _stoplist(stopwords_file))
    vectors = emb_mod.train_sgns(
        stems, dim=dim, window=window, negative=negative,
        epochs=epochs, min_count=min_count, seed=seed,
    )
    out = _out_dir(out_dir)
    emb_mod.save_vectors(vectors, out / "vectors.txt")
    write_manifest(
        out, "embed train", {"in": in_file},
        {"dim": dim, "window": window, "negative": negative,
         "epochs": epochs, "min_count": min_count}, {"embeddings": seed},
    )
    click.echo(f"{len(vectors.words)} words x {dim} dims -> {out / 'vectors.txt'}")


@embed.command("load")
@click.option("--vectors", "vec_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--corpus", "corpus_file", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Report vocabulary coverage against this corpus.")
def embed_load(vec_file, corpus_file) -> None:
    """Validate a vector file; optionally report corpus coverage."""
    vocab = None
    if corpus_file:
        corpus = _load_corpus(corpus_file)
        vocab = sorted({s for stems in unit_stems(corpus) for s in stems})
    vectors = emb_mod.load_vectors(vec_file, vocab=vocab)
    line = f"{len(vectors.words)} vectors, dim {vectors.dim}"
    if vocab is not None:
        line += f", coverage {vectors.metadata['coverage']:.3f}"
    click.echo(line)


@embed.command("project")
@click.option("--vectors", "vec_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dims", default=2, show_default=True, type=int)
@click.option("--clusters", default=0, show_default=True, type=int,
              help="k-means cluster count for the export (0 = single cluster).")
@click.option("--seed", default=DEFAULT_SEED, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def embed_project(vec_file, dims, clusters, seed, out_dir) -> None:
    """Project vectors to low dimensions by truncated SVD."""
    vectors = emb_mod.load_vectors(vec_file)
    projection = emb_mod.project_svd(vectors, dims=dims)
    if clusters >= 2:
        labels = list(emb_mod.kmeans(vectors.matrix, k=clusters, seed=seed).labels)
    else:
        labels = [0] * len(vectors.words)
    out = _out_dir(out_dir)
    emb_mod.export_projection(projection, labels, out / "projection.csv")
    write_manifest(
        out, "embed project", {"vectors": vec_file},
        {"dims": dims, "clusters": clusters}, {"kmeans": seed},
    )
    click.echo(f"{len(vectors.words)} words -> {out / 'projection.csv'}")


@embed.command("cluster")
@click.option("--vectors", "vec_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--k", required=True, type=int)
@click.option("--seed", default=DEFAULT_SEED, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def embed_cluster(vec_file, k, seed, out_dir) -> None:
    """k-means over the vocabulary vectors."""
    vectors = emb_mod.load_vectors(vec_file)
    result = emb_mod.kmeans(vectors.matrix, k=k, seed=seed)
    out = _out_dir(out_dir)
    _write_csv(
        out / "clusters.csv", ["word", "cluster"],
        [[w, int(c)] for w, c in zip(vectors.words, result.labels)],
    )
    (out / "inertia.json").write_text(
        json.dumps({"inertia": result.inertia, "iterations": result.iterations},
                   sort_keys=True) + "\n", "utf-8",
    )
    write_manifest(out, "embed cluster", {"vectors": vec_file}, {"k": k}, {"kmeans": seed})
    click.echo(f"k={k}, inertia {result.inertia:.4f} -> {out / 'clusters.csv'}")


@embed.command("neighbors")
@click.option("--vectors", "vec_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--word", required=True)
@click.option("--n", default=10, show_default=True, type=int)
def embed_neighbors(vec_file, word, n) -> None:
    """Print the nearest cosine neighbors of a word."""
    vectors = emb_mod.load_vectors(vec_file)
    for w, sim in emb_mod.neighbors(vectors, word, n):
        click.echo(f"{w}\t{sim:.4f}")


# ------------------------------------------------------------------- semnet

@cli.group()
def semnet() -> None:
    """Co-occurrence and seeded semantic networks."""


def _semnet_common(fn):
    fn = click.option("--scope", type=click.Choice(["unit", "sentence"]), default="unit", show_default=True)(fn)
    fn = click.option("--filter", "token_filter", default="all", show_default=True,
                      help="'all' or comma-separated POS tags to keep (e.g. NOUN,VERB).")(fn)
    fn = click.option("--sidecar", default=None, type=click.Path(exists=True, dir_okay=False),
                      help="POS/entity annotations CSV overriding the builtin tagger.")(fn)
    return fn


def _parse_filter(token_filter: str):
    return token_filter if token_filter == "all" else set(token_filter.split(","))


def _annotate(in_file: str, sidecar: str | None):
    from .textprep import annotate_corpus

    return annotate_corpus(_load_corpus(in_file), sidecar=sidecar)


@semnet.command("build")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@_semnet_common
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def semnet_build(in_file, scope, token_filter, sidecar, out_dir) -> None:
    """Build the full co-occurrence graph."""
    graph = semnet_mod.build_cooccurrence(
        _annotate(in_file, sidecar), scope=scope, token_filter=_parse_filter(token_filter)
    )
    out = _out_dir(out_dir)
    semnet_mod.export_graph(graph, out / "graph.graphml", fmt="graphml")
    semnet_mod.export_graph(graph, out / "edges.csv", fmt="edge_list_csv")
    write_manifest(
        out, "semnet build", {"in": in_file},
        {"scope": scope, "filter": token_filter}, {},
    )
    click.echo(f"{len(graph.nodes)} nodes, {len(graph.edges)} edges -> {out}")


@semnet.command("seed")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seeds", required=True, help="Comma-separated seed words (stemmed on use).")
@click.option("--rounds", default=1, show_default=True, type=int)
@click.option("--threshold", default=1.0, show_default=True, type=float)
@click.option("--vectors", "vec_file", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Expand the seed list with embedding neighbors first.")
@click.option("--expand", "expand_n", default=5, show_default=True, type=int)
@_semnet_common
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def semnet_seed(in_file, seeds, rounds, threshold, vec_file, expand_n,
                scope, token_filter, sidecar, out_dir) -> None:
    """Grow a network outward from seed words."""
    seed_list = [s.strip() for s in seeds.split(",") if s.strip()]
    expanded_from = None
    if vec_file:
        vectors = emb_mod.load_vectors(vec_file)
        pairs = semnet_mod.expand_seeds(vectors, seed_list, n=expand_n)
        expanded_from = seed_list
        seed_list = [w for w, _ in pairs]
    graph = semnet_mod.build_seedword(
        _annotate(in_file, sidecar), seed_list, rounds=rounds, threshold=threshold,
        scope=scope, token_filter=_parse_filter(token_filter),
    )
    out = _out_dir(out_dir)
    semnet_mod.export_graph(graph, out / "graph.graphml", fmt="graphml")
    semnet_mod.export_graph(graph, out / "edges.csv", fmt="edge_list_csv")
    _write_csv(
        out / "admitted.csv", ["word", "round"],
        [[w, graph.nodes[w]["round"]] for w in sorted(graph.nodes)],
    )
    write_manifest(
        out, "semnet seed", {"in": in_file},
        {"seeds": seed_list, "expanded_from": expanded_from, "rounds": rounds,
         "threshold": threshold, "scope": scope, "filter": token_filter}, {},
    )
    click.echo(f"{len(graph.nodes)} nodes admitted -> {out}")


@semnet.command("prune")
@click.option("--graph", "graph_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--min-weight", default=None, type=float)
@click.option("--top-edges", default=None, type=int)
@click.option("--top-nodes", default=None, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def semnet_prune(graph_file, min_weight, top_edges, top_nodes, out_dir) -> None:
    """Filter a saved graph by weight and size caps."""
    graph = semnet_mod.load_graphml(graph_file)
    pruned = semnet_mod.prune(
        graph, min_weight=min_weight, top_k_edges=top_edges, top_k_nodes=top_nodes
    )
    out = _out_dir(out_dir)
    semnet_mod.export_graph(pruned, out / "graph.graphml", fmt="graphml")
    semnet_mod.export_graph(pruned, out / "edges.csv", fmt="edge_list_csv")
    write_manifest(
        out, "semnet prune", {"graph": graph_file},
        {"min_weight": min_weight, "top_edges": top_edges, "top_nodes": top_nodes}, {},
    )
    click.echo(f"{len(graph.nodes)} -> {len(pruned.nodes)} nodes, "
               f"{len(graph.edges)} -> {len(pruned.edges)} edges")


@semnet.command("communities")
@click.option("--graph", "graph_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--collapse", is_flag=True, help="Also write the cluster-collapsed graph.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def semnet_communities(graph_file, collapse, out_dir) -> None:
    """Louvain community detection; optional cluster collapse."""
    graph = semnet_mod.load_graphml(graph_file)
    partition, q = semnet_mod.detect_communities(graph)
    out = _out_dir(out_dir)
    _write_csv(
        out / "communities.csv", ["node", "community"],
        [[node, partition[node]] for node in sorted(partition)],
    )
    (out / "modularity.json").write_text(
        json.dumps({"communities": len(set(partition.values())), "q": q},
                   sort_keys=True) + "\n", "utf-8",
    )
    if collapse:
        collapsed = semnet_mod.collapse_clusters(
            semnet_mod.apply_partition(graph, partition), partition
        )
        semnet_mod.export_graph(collapsed, out / "collapsed.graphml", fmt="graphml")
    write_manifest(
        out, "semnet communities", {"graph": graph_file}, {"collapse": collapse}, {},
    )
    click.echo(f"{len(set(partition.values()))} communities, Q={q:.4f} -> {out}")


@semnet.command("export")
@click.option("--graph", "graph_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--fmt", type=click.Choice(["graphml", "dot", "edge_list_csv"]), required=True)
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
def semnet_export(graph_file, fmt, out_file) -> None:
    """Convert a saved graph to another format."""
    graph = semnet_mod.load_graphml(graph_file)
    out = Path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    semnet_mod.export_graph(graph, out, fmt=fmt)
    write_file_manifest(out, "semnet export", {"graph": graph_file}, {"fmt": fmt}, {})
    click.echo(f"{fmt} -> {out}")


# ------------------------------------------------------------------ heatmap

@cli.group()
def heatmap() -> None:
    """Respondent-by-attribute matrices and clustered heatmaps."""


def _load_unit_topics(path: str | None):
    if path is None:
        return None
    rows = read_table(path)
    if not rows or [h.strip().lower() for h in rows[0][:3]] != ["document", "reference", "topic"]:
        raise SchemaError(f"{path}: expected header 'document,reference,topic'")
    return {(r[0], int(r[1])): int(r[2]) for r in rows[1:] if r and r[0]}


@heatmap.command("build")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["binary", "count", "proportion"]), default="count", show_default=True)
@click.option("--topics", "topics_file", default=None, type=click.Path(exists=True, dir_okay=False),
              help="unit_topics.csv adding topic:<k> attributes.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def heatmap_build(in_file, mode, topics_file, out_dir) -> None:
    """Tabulate the respondent-by-attribute matrix (unordered)."""
    matrix = heatmap_mod.build_matrix(
        _load_corpus(in_file), mode=mode, unit_topics=_load_unit_topics(topics_file)
    )
    out = _out_dir(out_dir)
    _write_csv(
        out / "matrix.csv",
        ["attribute"] + list(matrix.col_labels),
        [[r] + [repr(v) for v in matrix.row(r)] for r in matrix.row_labels],
    )
    write_manifest(out, "heatmap build", {"in": in_file}, {"mode": mode}, {})
    click.echo(f"{len(matrix.row_labels)} attributes x {len(matrix.col_labels)} respondents -> {out}")


@heatmap.command("cluster")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["binary", "count", "proportion"]), default="count", show_default=True)
@click.option("--axis", type=click.Choice(["rows", "columns"]), default="rows", show_default=True)
@click.option("--linkage", type=click.Choice(["single", "complete", "average"]), default="average", show_default=True)
@click.option("--metric", type=click.Choice(["euclidean", "jaccard"]), default="euclidean", show_default=True)
@click.option("--topics", "topics_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def heatmap_cluster(in_file, mode, axis, linkage, metric, topics_file, out_dir) -> None:
    """Agglomerative clustering of one matrix axis; writes the merge tree."""
    matrix = heatmap_mod.build_matrix(
        _load_corpus(in_file), mode=mode, unit_topics=_load_unit_topics(topics_file)
    )
    result = heatmap_mod.hier_cluster(matrix, axis=axis, linkage=linkage, metric=metric)
    out = _out_dir(out_dir)
    heatmap_mod.save_tree(result, out / "tree.json")
    (out / "order.txt").write_text("\n".join(result.order) + "\n", "utf-8")
    write_manifest(
        out, "heatmap cluster", {"in": in_file},
        {"mode": mode, "axis": axis, "linkage": linkage, "metric": metric}, {},
    )
    click.echo(f"{len(result.labels)} items, {len(result.merges)} merges -> {out}")


@heatmap.command("render")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--mode", type=click.Choice(["binary", "count", "proportion"]), default="count", show_default=True)
@click.option("--linkage", type=click.Choice(["single", "complete", "average"]), default="average", show_default=True)
@click.option("--metric", type=click.Choice(["euclidean", "jaccard"]), default="euclidean", show_default=True)
@click.option("--topics", "topics_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def heatmap_render(in_file, mode, linkage, metric, topics_file, out_dir) -> None:
    """Cluster both axes and render the SVG heatmap plus reordered CSV."""
    matrix = heatmap_mod.build_matrix(
        _load_corpus(in_file), mode=mode, unit_topics=_load_unit_topics(topics_file)
    )
    rows = heatmap_mod.hier_cluster(matrix, axis="rows", linkage=linkage, metric=metric)
    cols = heatmap_mod.hier_cluster(matrix, axis="columns", linkage=linkage, metric=metric)
    out = _out_dir(out_dir)
    heatmap_mod.save_tree(rows, out / "row_tree.json")
    heatmap_mod.save_tree(cols, out / "col_tree.json")
    heatmap_mod.render_heatmap(
        matrix, out / "heatmap.svg", out / "matrix.csv",
        row_order=rows.order, col_order=cols.order,
    )
    write_manifest(
        out, "heatmap render", {"in": in_file},
        {"mode": mode, "linkage": linkage, "metric": metric}, {},
    )
    click.echo(f"heatmap -> {out / 'heatmap.svg'}")


# --------------------------------------------------------------------- code

@cli.group()
def code() -> None:
    """Per-code classifiers and the recall-then-review workflow."""


@code.command("split")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--code", "code_name", required=True)
@click.option("--eval-fraction", default=0.25, show_default=True, type=float)
@click.option("--seed", default=DEFAULT_SEED, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def code_split(in_file, code_name, eval_fraction, seed, out_dir) -> None:
    """Stratified train/eval key lists for one code."""
    corpus = _load_corpus(in_file)
    keys = [u.key for u in corpus.units]
    labels = [code_name in u.codes for u in corpus.units]
    train, evaluation = coder_mod.split_train_eval(
        keys, labels, eval_fraction=eval_fraction, seed=seed
    )
    out = _out_dir(out_dir)
    _write_keys(out / "train_keys.csv", train)
    _write_keys(out / "eval_keys.csv", evaluation)
    write_manifest(
        out, "code split", {"in": in_file},
        {"code": code_name, "eval_fraction": eval_fraction}, {"split": seed},
    )
    click.echo(f"{len(train)} train / {len(evaluation)} eval -> {out}")


@code.command("train")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--keys", "keys_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--code", "code_name", required=True)
@click.option("--features", type=click.Choice(["bow", "tfidf", "unit_embedding"]), default="tfidf", show_default=True)
@click.option("--unit-embeddings", "emb_file", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Sidecar unit-embedding vectors (required for unit_embedding features).")
@click.option("--kind", type=click.Choice(["logreg", "svm"]), default="logreg", show_default=True)
@click.option("--epochs", default=200, show_default=True, type=int)
@click.option("--max-negative-ratio", default=3.0, show_default=True, type=float)
@click.option("--seed", default=DEFAULT_SEED, show_default=True, type=int)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def code_train(in_file, keys_file, code_name, features, emb_file, kind, epochs,
               max_negative_ratio, seed, out_dir) -> None:
    """Train a classifier on the given training keys."""
    corpus = _load_corpus(in_file)
    by_key = {u.key: u for u in corpus.units}
    keys = _read_keys(keys_file)
    labels = [code_name in by_key[k].codes for k in keys]
    keys, labels = coder_mod.downsample_negatives(
        keys, labels, max_ratio=max_negative_ratio, seed=seed
    )
    units = [by_key[k] for k in keys]
    sidecar = emb_mod.load_unit_embeddings(emb_file) if emb_file else None
    featurizer = coder_mod.fit_featurizer(units, mode=features, embeddings=sidecar)
    model = coder_mod.train_classifier(
        featurizer.transform(units, sidecar), labels, code=code_name,
        kind=kind, featurizer=featurizer, epochs=epochs, seed=seed,
    )
    out = _out_dir(out_dir)
    coder_mod.save_classifier(model, out / "model.json")
    write_manifest(
        out, "code train", {"in": in_file, "keys": keys_file},
        {"code": code_name, "features": features, "kind": kind, "epochs": epochs,
         "max_negative_ratio": max_negative_ratio}, {"train": seed},
    )
    click.echo(f"{kind} on {len(units)} units -> {out / 'model.json'}")


@code.command("tune")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--keys", "keys_file", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Labeled keys to tune the threshold on.")
@click.option("--model", "model_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--target-recall", default=0.95, show_default=True, type=float)
@click.option("--unit-embeddings", "emb_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def code_tune(in_file, keys_file, model_file, target_recall, emb_file, out_dir) -> None:
    """Pick the decision threshold hitting a recall target; rewrite the model."""
    corpus = _load_corpus(in_file)
    by_key = {u.key: u for u in corpus.units}
    keys = _read_keys(keys_file)
    model = coder_mod.load_classifier(model_file)
    units = [by_key[k] for k in keys]
    labels = [model.code in by_key[k].codes for k in keys]
    sidecar = emb_mod.load_unit_embeddings(emb_file) if emb_file else None
    scores = model.scores(units, sidecar)
    threshold = coder_mod.tune_threshold(list(scores), labels, target_recall=target_recall)
    tuned = model.with_threshold(threshold)
    out = _out_dir(out_dir)
    coder_mod.save_classifier(tuned, out / "model.json")
    write_manifest(
        out, "code tune", {"in": in_file, "keys": keys_file, "model": model_file},
        {"target_recall": target_recall}, {},
    )
    click.echo(f"threshold {threshold} -> {out / 'model.json'}")


@code.command("apply")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--keys", "keys_file", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Restrict scoring to these keys (default: whole corpus).")
@click.option("--queue-limit", default=None, type=int)
@click.option("--review-dir", default=None, type=click.Path(file_okay=False),
              help="Also install the queue as a review-service project.")
@click.option("--unit-embeddings", "emb_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def code_apply(in_file, model_file, keys_file, queue_limit, review_dir, emb_file, out_dir) -> None:
    """Score units, record predictions, and build the review queue."""
    corpus = _load_corpus(in_file)
    by_key = {u.key: u for u in corpus.units}
    model = coder_mod.load_classifier(model_file)
    keys = _read_keys(keys_file) if keys_file else [u.key for u in corpus.units]
    units = [by_key[k] for k in keys]
    sidecar = emb_mod.load_unit_embeddings(emb_file) if emb_file else None
    assignments = coder_mod.CodeAssignments.from_corpus_codes(corpus.units)
    assignments, scores = coder_mod.apply_codes(model, units, assignments, sidecar)
    out = _out_dir(out_dir)
    _write_csv(
        out / "scores.csv",
        ["document", "reference", "score", "predicted"],
        [[k[0], k[1], repr(scores[k]), str(scores[k] >= model.threshold).lower()]
         for k in keys],
    )
    queue = coder_mod.build_review_queue(
        scores, assignments, model.code, model.threshold, limit=queue_limit
    )
    _write_csv(
        out / "queue.csv",
        ["document", "reference", "score"],
        [[item.key[0], item.key[1], repr(item.score)] for item in queue],
    )
    if review_dir:
        store = ProjectStore(review_dir, model.code)
        store.write_queue(model.code, [
            {
                "unit": [item.key[0], item.key[1]],
                "text": by_key[item.key].text,
                "context": [
                    u.text
                    for u in context_window(corpus, item.key[0], item.key[1], radius=1)
                    if u.reference != item.key[1]
                ],
                "score": item.score,
            }
            for item in queue
        ])
        store.write_project_meta({"code": model.code, "threshold": model.threshold})
    write_manifest(
        out, "code apply", {"in": in_file, "model": model_file},
        {"queue_limit": queue_limit, "threshold": model.threshold}, {},
    )
    click.echo(f"{len(queue)} queued of {len(keys)} scored -> {out}")


@code.command("eval")
@click.option("--in", "in_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--keys", "keys_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--unit-embeddings", "emb_file", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def code_eval(in_file, model_file, keys_file, emb_file, out_dir) -> None:
    """Evaluate a model on labeled keys; writes report.json."""
    corpus = _load_corpus(in_file)
    by_key = {u.key: u for u in corpus.units}
    model = coder_mod.load_classifier(model_file)
    keys = _read_keys(keys_file)
    units = [by_key[k] for k in keys]
    sidecar = emb_mod.load_unit_embeddings(emb_file) if emb_file else None
    scores = model.scores(units, sidecar)
    predicted = [s >= model.threshold for s in scores]
    gold = [model.code in by_key[k].codes for k in keys]
    report = coder_mod.evaluate(predicted, gold)
    out = _out_dir(out_dir)
    (out / "report.json").write_text(
        json.dumps(
            {
                "code": model.code, "threshold": model.threshold, "n": report.n,
                "precision": report.precision, "recall": report.recall,
                "f1": report.f1, "alpha": report.alpha,
                "confusion": {"tp": report.tp, "fp": report.fp,
                              "fn": report.fn, "tn": report.tn},
                "notes": list(report.notes),
            },
            sort_keys=True, indent=2,
        ) + "\n", "utf-8",
    )
    write_manifest(
        out, "code eval", {"in": in_file, "model": model_file, "keys": keys_file}, {}, {},
    )
    click.echo(
        f"precision {report.precision:.3f} recall {report.recall:.3f} "
        f"f1 {report.f1:.3f} alpha {report.alpha if report.alpha is None else round(report.alpha, 3)}"
    )


@code.command("alpha")
@click.option("--a", "file_a", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--b", "file_b", required=True, type=click.Path(exists=True, dir_okay=False))
def code_alpha(file_a, file_b) -> None:
    """Krippendorff's alpha between two raters' label CSVs.

    Each file: header document,reference,label; units present in only one
    file are treated as missing and dropped.
    """
    def read_labels(path):
        rows = read_table(path)
        if not rows or [h.strip().lower() for h in rows[0][:3]] != ["document", "reference", "label"]:
            raise SchemaError(f"{path}: expected header 'document,reference,label'")
        return {(r[0], int(r[1])): r[2] for r in rows[1:] if r and r[0]}

    a, b = read_labels(file_a), read_labels(file_b)
    shared = sorted(set(a) & set(b))
    alpha = coder_mod.krippendorff_alpha([a[k] for k in shared], [b[k] for k in shared])
    click.echo(alpha)


# ------------------------------------------------------------------- review

@cli.group()
def review() -> None:
    """The human second-pass review service."""


@review.command("serve")
@click.option("--data-dir", required=True, type=click.Path(file_okay=False))
@click.option("--bind", default="127.0.0.1", show_default=True)
@click.option("--port", default=8214, show_default=True, type=int)
@click.option("--static", "static_dir", default=None, type=click.Path(file_okay=False),
              help="Built review UI bundle to serve at /.")
def review_serve(data_dir, bind, port, static_dir) -> None:
    """Serve the review API (and UI, when a bundle is given)."""
    import uvicorn

    from .review.service import create_app

    app = create_app(data_dir, static_dir=static_dir)
    uvicorn.run(app, host=bind, port=port, log_level="warning")


# ----------------------------------------------------------------- pipeline

@cli.group()
def pipeline() -> None:
    """Config-driven end-to-end runs."""


@pipeline.command("run")
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
def pipeline_run(config, out_dir) -> None:
    """Run every stage named in CONFIG; writes a digest-pinned artifact tree.

    CONFIG may be 'demo.toml' to use the bundled demo corpus.
    """
    path = Path(config)
    if not path.exists() and config in ("demo", "demo.toml"):
        path = Path(str(resources.files("fieldscale") / "data" / "demo" / "demo.toml"))
    if not path.exists():
        raise click.UsageError(f"config file {config!r} does not exist")
    result = run_pipeline(path, out_dir)
    click.echo(f"stages {', '.join(result.stages)} -> {result.out_dir}")
    click.echo(f"manifest {result.manifest_path}")


def main() -> None:
    try:
        cli(standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except FieldscaleError as exc:
        click.echo(f"{type(exc).__name__}: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
