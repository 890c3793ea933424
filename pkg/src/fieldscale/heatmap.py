"""Respondent-by-attribute matrices and clustered heatmaps.

Rows are attributes (codes, or ``topic:<k>`` when a unit->topic map is
supplied); columns are respondents, merging every document that shares a
participant id. Clustering is plain agglomerative merging with cluster
distances recomputed directly from the item-item matrix at every step, which
keeps the algorithm honest against a brute-force check. Rendering writes an
SVG grid plus the reordered CSV and embeds no timestamps, so identical input
produces identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import Corpus
from .errors import InvalidOrder, NotFound, TooFew

LINKAGES = ("single", "complete", "average")
METRICS = ("euclidean", "jaccard")
VALUE_MODES = ("binary", "count", "proportion")


@dataclass(frozen=True)
class AttributeMatrix:
    row_labels: tuple[str, ...]      # attributes
    col_labels: tuple[str, ...]      # respondents
    values: np.ndarray               # rows x cols
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.values.shape != (len(self.row_labels), len(self.col_labels)):
            raise InvalidOrder("matrix shape disagrees with its labels")

    def row(self, label: str) -> np.ndarray:
        try:
            return self.values[self.row_labels.index(label)]
        except ValueError:
            raise NotFound(f"no attribute {label!r}") from None


def _respondent(corpus: Corpus, doc_id: str) -> str:
    meta = corpus.documents.get(doc_id)
    return meta.participant_id if meta is not None else doc_id


def build_matrix(
    corpus: Corpus,
    mode: str = "count",
    attributes: Sequence[str] | None = None,
    unit_topics: Mapping[tuple[str, int], int] | None = None,
) -> AttributeMatrix:
    """Tabulate codes (and optional topic:<k> attributes) per respondent.

    count: units of the respondent carrying the attribute. binary: 1 if any.
    proportion: count divided by the respondent's total unit count.
    """
    if mode not in VALUE_MODES:
        raise ValueError(f"mode must be one of {VALUE_MODES}, got {mode!r}")
    topic_attrs: list[str] = []
    if unit_topics is not None:
        topic_attrs = [f"topic:{k}" for k in sorted(set(unit_topics.values()))]
    known = sorted(corpus.codebook) + topic_attrs
    if attributes is None:
        attributes = known
    else:
        if len(set(attributes)) != len(attributes):
            raise ValueError("attributes contains duplicates")
        for attr in attributes:
            if attr not in known:
                raise NotFound(f"attribute {attr!r} is neither a code nor a topic")
    respondents = sorted({_respondent(corpus, d) for d in corpus.documents})
    col = {r: i for i, r in enumerate(respondents)}
    row = {a: i for i, a in enumerate(attributes)}

    counts = np.zeros((len(attributes), len(respondents)))
    unit_totals = np.zeros(len(respondents))
    for unit in corpus.units:
        c = col[_respondent(corpus, unit.doc_id)]
        unit_totals[c] += 1
        for code in unit.codes:
            if code in row:
                counts[row[code], c] += 1
        if unit_topics is not None and unit.key in unit_topics:
            attr = f"topic:{unit_topics[unit.key]}"
            if attr in row:
                counts[row[attr], c] += 1

    if mode == "binary":
        values = (counts > 0).astype(np.float64)
    elif mode == "count":
        values = counts
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            values = np.where(unit_totals > 0, counts / unit_totals, 0.0)
    return AttributeMatrix(
        row_labels=tuple(attributes),
        col_labels=tuple(respondents),
        values=values,
        metadata={"mode": mode, "topics": bool(unit_topics)},
    )


# ----------------------------------------------------------------- clustering

@dataclass(frozen=True)
class ClusterResult:
    """Agglomerative merge history over one axis of a matrix.

    Item ids are 0..n-1 in label order; merge i creates cluster id n+i.
    Each merge records (low_id, high_id, distance, size) where low/high are
    ordered by each cluster's alphabetically first label.
    """

    labels: tuple[str, ...]
    merges: tuple[tuple[int, int, float, int], ...]
    order: tuple[str, ...]
    linkage: str
    metric: str

    def tree(self) -> dict:
        """Nested dict form of the dendrogram (leaves carry labels)."""
        nodes: dict[int, dict] = {
            i: {"label": lbl} for i, lbl in enumerate(self.labels)
        }
        n = len(self.labels)
        for i, (a, b, dist, size) in enumerate(self.merges):
            nodes[n + i] = {
                "left": nodes[a], "right": nodes[b],
                "distance": dist, "size": size,
            }
        return nodes[n + len(self.merges) - 1] if self.merges else nodes[0]

    def cut(self, k: int) -> dict[str, int]:
        """Partition labels into k clusters; ids follow first-label order."""
        n = len(self.labels)
        if not 1 <= k <= n:
            raise ValueError(f"k must be in [1, {n}], got {k}")
        members: dict[int, list[int]] = {i: [i] for i in range(n)}
        for i, (a, b, _, _) in enumerate(self.merges[: n - k]):
            members[n + i] = members.pop(a) + members.pop(b)
        groups = sorted(
            (sorted(self.labels[i] for i in ms) for ms in members.values()),
            key=lambda g: g[0],
        )
        return {label: cid for cid, group in enumerate(groups) for label in group}


def _item_distances(items: np.ndarray, metric: str) -> np.ndarray:
    n = items.shape[0]
    out = np.zeros((n, n))
    if metric == "euclidean":
        for i in range(n):
            for j in range(i + 1, n):
                out[i, j] = out[j, i] = float(np.sqrt(np.sum((items[i] - items[j]) ** 2)))
    elif metric == "jaccard":
        on = items > 0
        for i in range(n):
            for j in range(i + 1, n):
                union = int(np.sum(on[i] | on[j]))
                inter = int(np.sum(on[i] & on[j]))
                d = 0.0 if union == 0 else 1.0 - inter / union
                out[i, j] = out[j, i] = d
    else:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    return out


def _linkage_distance(d0: np.ndarray, a: list[int], b: list[int], linkage: str) -> float:
    pairs = [d0[i, j] for i in a for j in b]
    if linkage == "single":
        return min(pairs)
    if linkage == "complete":
        return max(pairs)
    if linkage == "average":
        return sum(pairs) / len(pairs)
    raise ValueError(f"linkage must be one of {LINKAGES}, got {linkage!r}")


def hier_cluster(
    matrix: AttributeMatrix,
    axis: str = "rows",
    linkage: str = "average",
    metric: str = "euclidean",
) -> ClusterResult:
    """Cluster one axis bottom-up; ties merge the alphabetically first pair."""
    if axis == "rows":
        labels, items = matrix.row_labels, matrix.values
    elif axis == "columns":
        labels, items = matrix.col_labels, matrix.values.T
    else:
        raise ValueError(f"axis must be 'rows' or 'columns', got {axis!r}")
    n = len(labels)
    if n < 2:
        raise TooFew(f"need at least 2 items on the {axis} axis, got {n}")
    if linkage not in LINKAGES:
        raise ValueError(f"linkage must be one of {LINKAGES}, got {linkage!r}")
    d0 = _item_distances(np.asarray(items, dtype=np.float64), metric)

    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    first_label = {i: labels[i] for i in range(n)}
    merges: list[tuple[int, int, float, int]] = []
    for step in range(n - 1):
        best: tuple[float, str, str, int, int] | None = None
        for a in sorted(members):
            for b in sorted(members):
                if a >= b:
                    continue
                dist = _linkage_distance(d0, members[a], members[b], linkage)
                lo, hi = sorted((first_label[a], first_label[b]))
                key = (dist, lo, hi)
                if best is None or key < (best[0], best[1], best[2]):
                    best = (dist, lo, hi, a, b)
        dist, lo, _, a, b = best
        if first_label[b] == lo:
            a, b = b, a
        new_id = n + step
        members[new_id] = members.pop(a) + members.pop(b)
        first_label[new_id] = min(first_label[a], first_label[b])
        merges.append((a, b, dist, len(members[new_id])))

    def expand(node: int) -> list[str]:
        if node < n:
            return [labels[node]]
        a, b, _, _ = merges[node - n]
        return expand(a) + expand(b)

    order = expand(n + len(merges) - 1) if merges else [labels[0]]
    return ClusterResult(
        labels=tuple(labels),
        merges=tuple(merges),
        order=tuple(order),
        linkage=linkage,
        metric=metric,
    )


def save_tree(result: ClusterResult, path: str | Path) -> None:
    payload = {
        "linkage": result.linkage,
        "metric": result.metric,
        "labels": list(result.labels),
        "order": list(result.order),
        "merges": [list(m) for m in result.merges],
        "tree": result.tree(),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", "utf-8")


# ------------------------------------------------------------------ rendering

def _check_order(order: Sequence[str], labels: tuple[str, ...], axis: str) -> list[int]:
    if sorted(order) != sorted(labels):
        raise InvalidOrder(f"{axis} order is not a permutation of the {axis} labels")
    index = {lbl: i for i, lbl in enumerate(labels)}
    return [index[lbl] for lbl in order]


def _shade(value: float, lo: float, hi: float) -> str:
    t = 0.5 if hi <= lo else (value - lo) / (hi - lo)
    level = int(round(255 * (1.0 - t)))
    return f"#{level:02x}{level:02x}ff"


def render_heatmap(
    matrix: AttributeMatrix,
    svg_path: str | Path,
    csv_path: str | Path,
    row_order: Sequence[str] | None = None,
    col_order: Sequence[str] | None = None,
    cell: int = 14,
) -> None:
    """Write the SVG grid and the reordered CSV for the given orderings."""
    row_order = list(row_order) if row_order is not None else list(matrix.row_labels)
    col_order = list(col_order) if col_order is not None else list(matrix.col_labels)
    ri = _check_order(row_order, matrix.row_labels, "row")
    ci = _check_order(col_order, matrix.col_labels, "column")
    grid = matrix.values[np.ix_(ri, ci)]

    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("attribute," + ",".join(col_order) + "\n")
        for r, label in enumerate(row_order):
            fh.write(label + "," + ",".join(repr(float(v)) for v in grid[r]) + "\n")

    lo, hi = float(grid.min()), float(grid.max())
    label_w = 8 * max((len(r) for r in row_order), default=1) + 10
    label_h = 8 * max((len(c) for c in col_order), default=1) + 10
    width = label_w + cell * len(col_order)
    height = label_h + cell * len(row_order)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="monospace" font-size="10">',
    ]
    for c, col in enumerate(col_order):
        x = label_w + c * cell + cell // 2
        parts.append(
            f'<text x="{x}" y="{label_h - 4}" text-anchor="start" '
            f'transform="rotate(-60 {x} {label_h - 4})">{col}</text>'
        )
    for r, rowlbl in enumerate(row_order):
        y = label_h + r * cell
        parts.append(f'<text x="{label_w - 6}" y="{y + cell - 4}" text-anchor="end">{rowlbl}</text>')
        for c in range(len(col_order)):
            parts.append(
                f'<rect x="{label_w + c * cell}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{_shade(float(grid[r, c]), lo, hi)}" stroke="#ffffff"/>'
            )
    parts.append("</svg>")
    Path(svg_path).write_text("\n".join(parts) + "\n", "utf-8")
