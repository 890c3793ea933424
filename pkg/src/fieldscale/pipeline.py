"""Config-driven end-to-end runs producing a deterministic artifact tree.

A TOML config names the corpus input and any of the optional stages
(topics, embeddings, semnet, heatmap, coder). Stages write their
artifacts under fixed subdirectories of the output directory, and the
run finishes by writing a manifest that digests every produced file.
Identical config + input bytes yield an identical tree: all randomness
is seeded and nothing embeds timestamps or absolute paths.

Config schema (all sections except [corpus] optional):

    seed = 7                      # fallback seed for every stage

    [corpus]
    input = "notes/"              # directory of .txt files, or a table file
    granularity = "paragraph"     # directory ingestion only
    format = "dir" | "csv" | "tsv"  # default: inferred from the input path

    [topics]
    k = 3
    iterations = 300

    [embeddings]
    dim = 24
    window = 3
    negative = 5
    epochs = 3
    min_count = 2
    svd_dims = 2
    clusters = 3

    [semnet]
    scope = "unit" | "sentence"
    filter = "all"                # or a list of POS tags to keep
    min_weight = 2.0
    top_nodes = 40
    top_edges = 120

    [heatmap]
    mode = "count" | "binary" | "proportion"
    linkage = "average" | "single" | "complete"
    metric = "euclidean" | "jaccard"

    [coder]
    codes = ["water"]
    features = "tfidf" | "bow"
    kind = "logreg" | "svm"
    eval_fraction = 0.25
    target_recall = 0.95
    epochs = 200
    max_negative_ratio = 3.0
    queue_limit = 20

Any stage may add ``seed = <int>`` to override the top-level seed.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import coder as coder_mod
from . import embeddings as emb_mod
from . import heatmap as heatmap_mod
from . import semnet as semnet_mod
from . import topics as topics_mod
from .corpus import Corpus, context_window, export_table, import_table, ingest_directory, read_table, write_table
from .errors import SchemaError
from .manifest import write_manifest
from .review.store import ProjectStore
from .textprep import annotate_corpus, builtin_stopwords, remove_stopwords, tokenize

STAGES = ("corpus", "topics", "embeddings", "semnet", "heatmap", "coder")
DEFAULT_SEED = 7


@dataclass(frozen=True)
class PipelineResult:
    out_dir: Path
    manifest_path: Path
    stages: tuple[str, ...]


def load_config(path: str | Path) -> dict:
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            config = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from exc
    unknown = sorted(set(config) - set(STAGES) - {"seed"})
    if unknown:
        raise SchemaError(f"{path}: unknown config sections {unknown}")
    if "corpus" not in config:
        raise SchemaError(f"{path}: missing required [corpus] section")
    if "input" not in config["corpus"]:
        raise SchemaError(f"{path}: [corpus] needs an 'input' path")
    return config


def _resolve_input(config_path: Path, raw: str) -> Path:
    path = Path(raw)
    return path if path.is_absolute() else config_path.parent / path


def _load_corpus(cfg: dict, input_path: Path) -> Corpus:
    fmt = cfg.get("format")
    if fmt is None:
        if input_path.is_dir():
            fmt = "dir"
        elif input_path.suffix.lower() == ".tsv":
            fmt = "tsv"
        else:
            fmt = "csv"
    if fmt == "dir":
        return ingest_directory(input_path, granularity=cfg.get("granularity", "paragraph"))
    if fmt in ("csv", "tsv"):
        return import_table(read_table(input_path, tsv=fmt == "tsv"))
    raise SchemaError(f"[corpus] format must be dir, csv, or tsv, got {fmt!r}")


def unit_stems(corpus: Corpus, stoplist=None) -> list[list[str]]:
    """Stopword-free stems per unit, unit order matching corpus.units."""
    if stoplist is None:
        stoplist = builtin_stopwords()
    out = []
    for unit in corpus.units:
        kept = remove_stopwords(list(tokenize(unit.text)), stoplist)
        out.append([t.stem for t in kept])
    return out


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


# ------------------------------------------------------------------- stages

def _stage_topics(cfg: dict, corpus: Corpus, stems, out: Path, seed: int) -> dict:
    out.mkdir(parents=True)
    model = topics_mod.fit_lda(
        stems,
        k=cfg.get("k", 5),
        iterations=cfg.get("iterations", 500),
        seed=seed,
    )
    topics_mod.save_model(model, out / "model.json")
    rows = []
    for t in range(model.k):
        for rank, (word, prob) in enumerate(topics_mod.top_words(model, t, cfg.get("top_words", 10)), 1):
            rows.append([t, rank, word, repr(prob)])
    _write_csv(out / "top_words.csv", ["topic", "rank", "word", "probability"], rows)
    unit_topics = {
        unit.key: model.dominant_topic(i) for i, unit in enumerate(corpus.units)
    }
    _write_csv(
        out / "unit_topics.csv",
        ["document", "reference", "topic"],
        [[doc, ref, topic] for (doc, ref), topic in sorted(unit_topics.items())],
    )
    return unit_topics


def _stage_embeddings(cfg: dict, stems, out: Path, seed: int) -> None:
    out.mkdir(parents=True)
    vectors = emb_mod.train_sgns(
        stems,
        dim=cfg.get("dim", 50),
        window=cfg.get("window", 5),
        negative=cfg.get("negative", 5),
        epochs=cfg.get("epochs", 5),
        min_count=cfg.get("min_count", 5),
        seed=seed,
    )
    emb_mod.save_vectors(vectors, out / "vectors.txt")
    projection = emb_mod.project_svd(vectors, dims=cfg.get("svd_dims", 2))
    k = cfg.get("clusters", 0)
    if k >= 2:
        labels = emb_mod.kmeans(vectors.matrix, k=k, seed=seed).labels
    else:
        labels = [0] * len(vectors.words)
    emb_mod.export_projection(projection, list(labels), out / "projection.csv")


def _stage_semnet(cfg: dict, corpus: Corpus, out: Path) -> None:
    out.mkdir(parents=True)
    annotated = annotate_corpus(corpus)
    token_filter = cfg.get("filter", "all")
    if isinstance(token_filter, list):
        token_filter = set(token_filter)
    graph = semnet_mod.build_cooccurrence(
        annotated, scope=cfg.get("scope", "unit"), token_filter=token_filter
    )
    graph = semnet_mod.prune(
        graph,
        min_weight=cfg.get("min_weight"),
        top_k_edges=cfg.get("top_edges"),
        top_k_nodes=cfg.get("top_nodes"),
    )
    partition, q = semnet_mod.detect_communities(graph)
    semnet_mod.export_graph(graph, out / "graph.graphml", fmt="graphml")
    semnet_mod.export_graph(graph, out / "edges.csv", fmt="edge_list_csv")
    _write_csv(
        out / "communities.csv",
        ["node", "community"],
        [[node, partition[node]] for node in sorted(partition)],
    )
    (out / "modularity.json").write_text(
        json.dumps({"communities": len(set(partition.values())), "q": q}, sort_keys=True) + "\n",
        "utf-8",
    )


def _stage_heatmap(cfg: dict, corpus: Corpus, unit_topics, out: Path) -> None:
    out.mkdir(parents=True)
    matrix = heatmap_mod.build_matrix(
        corpus, mode=cfg.get("mode", "count"), unit_topics=unit_topics
    )
    linkage = cfg.get("linkage", "average")
    metric = cfg.get("metric", "euclidean")
    rows = heatmap_mod.hier_cluster(matrix, axis="rows", linkage=linkage, metric=metric)
    cols = heatmap_mod.hier_cluster(matrix, axis="columns", linkage=linkage, metric=metric)
    heatmap_mod.save_tree(rows, out / "row_tree.json")
    heatmap_mod.save_tree(cols, out / "col_tree.json")
    heatmap_mod.render_heatmap(
        matrix,
        out / "heatmap.svg",
        out / "matrix.csv",
        row_order=rows.order,
        col_order=cols.order,
    )


def _stage_coder(cfg: dict, corpus: Corpus, out: Path, review_dir: Path, seed: int) -> None:
    codes = cfg.get("codes")
    if not codes:
        raise SchemaError("[coder] needs a non-empty 'codes' list")
    for code in codes:
        if code not in corpus.codebook:
            raise SchemaError(f"[coder] code {code!r} is not in the corpus codebook")
    units = list(corpus.units)
    keys = [u.key for u in units]
    by_key = {u.key: u for u in units}
    for code in codes:
        code_out = out / code
        code_out.mkdir(parents=True)
        labels = [code in u.codes for u in units]
        train_keys, eval_keys = coder_mod.split_train_eval(
            keys, labels, eval_fraction=cfg.get("eval_fraction", 0.25), seed=seed
        )
        train_labels = [code in by_key[k].codes for k in train_keys]
        train_keys, train_labels = coder_mod.downsample_negatives(
            train_keys, train_labels, max_ratio=cfg.get("max_negative_ratio", 3.0), seed=seed
        )
        train_units = [by_key[k] for k in train_keys]
        featurizer = coder_mod.fit_featurizer(train_units, mode=cfg.get("features", "tfidf"))
        features = featurizer.transform(train_units)
        model = coder_mod.train_classifier(
            features,
            train_labels,
            code=code,
            kind=cfg.get("kind", "logreg"),
            featurizer=featurizer,
            epochs=cfg.get("epochs", 200),
            seed=seed,
        )
        train_scores = model.scores(train_units)
        threshold = coder_mod.tune_threshold(
            list(train_scores), train_labels, target_recall=cfg.get("target_recall", 0.95)
        )
        model = model.with_threshold(threshold)
        coder_mod.save_classifier(model, code_out / "model.json")

        # hold-out evaluation plus a review queue over the predicted positives
        eval_units = [by_key[k] for k in eval_keys]
        assignments = coder_mod.CodeAssignments.from_corpus_codes(train_units)
        assignments, scores = coder_mod.apply_codes(model, eval_units, assignments)
        predicted = [scores[k] >= threshold for k in eval_keys]
        gold = [code in by_key[k].codes for k in eval_keys]
        report = coder_mod.evaluate(predicted, gold)
        (code_out / "report.json").write_text(
            json.dumps(
                {
                    "code": code,
                    "threshold": threshold,
                    "train_units": len(train_units),
                    "eval_units": len(eval_units),
                    "precision": report.precision,
                    "recall": report.recall,
                    "f1": report.f1,
                    "alpha": report.alpha,
                    "confusion": {"tp": report.tp, "fp": report.fp,
                                  "fn": report.fn, "tn": report.tn},
                    "notes": list(report.notes),
                },
                sort_keys=True,
                indent=2,
            ) + "\n",
            "utf-8",
        )
        queue = coder_mod.build_review_queue(
            scores, assignments, code, threshold, limit=cfg.get("queue_limit")
        )
        store = ProjectStore(review_dir, code)
        store.write_queue(code, [
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
        store.write_project_meta({"code": code, "threshold": threshold})


# -------------------------------------------------------------------- runner

def run_pipeline(config_path: str | Path, out_dir: str | Path) -> PipelineResult:
    config_path = Path(config_path)
    config = load_config(config_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    default_seed = config.get("seed", DEFAULT_SEED)
    seeds: dict[str, int] = {}

    def stage_seed(name: str) -> int:
        seed = config[name].get("seed", default_seed)
        seeds[name] = seed
        return seed

    input_path = _resolve_input(config_path, config["corpus"]["input"])
    corpus = _load_corpus(config["corpus"], input_path)
    corpus_out = out_dir / "corpus"
    corpus_out.mkdir(parents=True)
    write_table(export_table(corpus), corpus_out / "corpus.csv")
    ran = ["corpus"]

    stems = None
    if "topics" in config or "embeddings" in config:
        stems = unit_stems(corpus)

    unit_topics = None
    if "topics" in config:
        unit_topics = _stage_topics(
            config["topics"], corpus, stems, out_dir / "topics", stage_seed("topics")
        )
        ran.append("topics")
    if "embeddings" in config:
        _stage_embeddings(
            config["embeddings"], stems, out_dir / "embeddings", stage_seed("embeddings")
        )
        ran.append("embeddings")
    if "semnet" in config:
        _stage_semnet(config["semnet"], corpus, out_dir / "semnet")
        ran.append("semnet")
    if "heatmap" in config:
        _stage_heatmap(config["heatmap"], corpus, unit_topics, out_dir / "heatmap")
        ran.append("heatmap")
    if "coder" in config:
        _stage_coder(
            config["coder"], corpus, out_dir / "coder", out_dir / "review",
            stage_seed("coder"),
        )
        ran.append("coder")

    manifest_path = write_manifest(
        out_dir,
        command="pipeline run",
        inputs={"config": config_path, "corpus": input_path},
        params=config,
        seeds=seeds,
    )
    return PipelineResult(
        out_dir=out_dir, manifest_path=manifest_path, stages=tuple(ran)
    )
