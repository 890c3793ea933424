"""Word and unit embeddings: training, loading, projection, clustering.

Training is skip-gram with negative sampling written directly over numpy
arrays and a seeded Generator, so results are reproducible per seed. Vector
files use the plain text layout ``<count> <dim>`` on the first line then one
``<id> <v1> ... <vdim>`` row per vector; ids are parsed by splitting each row
from the right so unit ids may contain spaces.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    CoverageWarning,
    FormatError,
    InsufficientVocabulary,
    InvalidK,
    NotFound,
    RankDeficient,
)


@dataclass(frozen=True)
class WordVectors:
    words: tuple[str, ...]
    matrix: np.ndarray  # len(words) x dim
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.matrix.shape[0] != len(self.words):
            raise FormatError("matrix row count disagrees with word list")
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(self.words)})

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def vector(self, word: str) -> np.ndarray:
        i = self._index.get(word)
        if i is None:
            raise NotFound(f"no vector for {word!r}")
        return self.matrix[i]


@dataclass(frozen=True)
class UnitEmbeddings:
    keys: tuple[str, ...]  # "doc_id:reference"
    matrix: np.ndarray
    metadata: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.matrix.shape[0] != len(self.keys):
            raise FormatError("matrix row count disagrees with key list")
        object.__setattr__(self, "_index", {k: i for i, k in enumerate(self.keys)})

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def vector(self, key: str) -> np.ndarray:
        i = self._index.get(key)
        if i is None:
            raise NotFound(f"no embedding for unit {key!r}")
        return self.matrix[i]


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def train_sgns(
    token_lists: Sequence[Sequence[str]],
    dim: int = 100,
    window: int = 5,
    negative: int = 5,
    epochs: int = 5,
    learning_rate: float = 0.025,
    min_count: int = 5,
    subsample_t: float | None = None,
    seed: int = 0,
) -> WordVectors:
    """Train skip-gram negative-sampling vectors on tokenized units.

    Words below min_count are dropped. Negatives are drawn from the unigram
    distribution raised to 0.75. Subsampling of frequent words is off unless
    subsample_t is given (typically 1e-4). The learning rate is constant.
    """
    if dim < 1 or window < 1 or negative < 1 or epochs < 1:
        raise ValueError("dim, window, negative, and epochs must all be >= 1")
    counts: dict[str, int] = {}
    for toks in token_lists:
        for w in toks:
            counts[w] = counts.get(w, 0) + 1
    vocab = tuple(sorted(w for w, c in counts.items() if c >= min_count))
    if len(vocab) < 2:
        raise InsufficientVocabulary(
            f"need at least 2 words with count >= {min_count}, got {len(vocab)}"
        )
    index = {w: i for i, w in enumerate(vocab)}

    freq = np.array([counts[w] for w in vocab], dtype=np.float64)
    noise = freq ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())
    total = freq.sum()
    keep_prob = np.ones(len(vocab))
    if subsample_t is not None:
        rel = freq / total
        keep_prob = np.minimum(1.0, np.sqrt(subsample_t / rel))

    rng = np.random.default_rng(seed)
    w_in = (rng.random((len(vocab), dim)) - 0.5) / dim
    w_out = np.zeros((len(vocab), dim))

    sentences = [[index[w] for w in toks if w in index] for toks in token_lists]
    for _ in range(epochs):
        for sent in sentences:
            if subsample_t is not None:
                sent = [i for i in sent if rng.random() < keep_prob[i]]
            for pos, center in enumerate(sent):
                span = int(rng.integers(1, window + 1))
                lo = max(0, pos - span)
                hi = min(len(sent), pos + span + 1)
                for ctx_pos in range(lo, hi):
                    if ctx_pos == pos:
                        continue
                    context = sent[ctx_pos]
                    v = w_in[center]
                    grad_v = np.zeros(dim)
                    # positive pair, then `negative` noise words
                    targets = [(context, 1.0)]
                    draws = rng.random(negative)
                    for d in draws:
                        targets.append((int(np.searchsorted(noise_cdf, d)), 0.0))
                    for t, label in targets:
                        u = w_out[t]
                        g = (_sigmoid(float(v @ u)) - label) * learning_rate
                        grad_v += g * u
                        w_out[t] = u - g * v
                    w_in[center] = v - grad_v
    return WordVectors(
        words=vocab,
        matrix=w_in,
        metadata={
            "dim": dim, "window": window, "negative": negative,
            "epochs": epochs, "min_count": min_count, "seed": seed,
            "subsample_t": subsample_t, "tokens": int(total),
        },
    )


def _parse_vector_file(path: str | Path) -> tuple[list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty vector file")
    header = lines[0].split()
    if len(header) != 2 or not all(p.isdigit() for p in header):
        raise FormatError(f"{path}: header must be '<count> <dim>', got {lines[0]!r}")
    count, dim = int(header[0]), int(header[1])
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != count:
        raise FormatError(f"{path}: header declares {count} rows, found {len(body)}")
    ids: list[str] = []
    rows = np.empty((count, dim))
    for r, line in enumerate(body):
        parts = line.rsplit(maxsplit=dim)
        if len(parts) != dim + 1 or not parts[0]:
            raise FormatError(f"{path}: row {r + 2} does not have an id and {dim} values")
        try:
            rows[r] = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise FormatError(f"{path}: row {r + 2}: {exc}") from exc
        ids.append(parts[0])
    if len(set(ids)) != len(ids):
        raise FormatError(f"{path}: duplicate ids")
    return ids, rows


def load_vectors(path: str | Path, vocab: Sequence[str] | None = None) -> WordVectors:
    """Load word vectors; when vocab is given, record coverage against it.

    Coverage below 90% emits a CoverageWarning and the missing words are
    listed (sorted) in the metadata either way.
    """
    ids, rows = _parse_vector_file(path)
    metadata: dict[str, object] = {"path": str(path)}
    if vocab is not None:
        wanted = set(vocab)
        have = wanted & set(ids)
        coverage = len(have) / len(wanted) if wanted else 1.0
        missing = sorted(wanted - have)
        metadata["coverage"] = coverage
        metadata["missing"] = missing
        if coverage < 0.9:
            warnings.warn(
                f"{path}: vectors cover {coverage:.1%} of the vocabulary "
                f"({len(missing)} words missing)",
                CoverageWarning,
                stacklevel=2,
            )
    return WordVectors(tuple(ids), rows, metadata)


def load_unit_embeddings(path: str | Path) -> UnitEmbeddings:
    """Load per-unit embeddings keyed by 'doc_id:reference'."""
    ids, rows = _parse_vector_file(path)
    return UnitEmbeddings(tuple(ids), rows, {"path": str(path)})


def save_vectors(vectors: WordVectors | UnitEmbeddings, path: str | Path) -> None:
    """Write the plain text vector layout with full float precision."""
    ids = vectors.words if isinstance(vectors, WordVectors) else vectors.keys
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(ids)} {vectors.matrix.shape[1]}\n")
        for i, name in enumerate(ids):
            row = " ".join(repr(float(x)) for x in vectors.matrix[i])
            fh.write(f"{name} {row}\n")


@dataclass(frozen=True)
class Projection:
    words: tuple[str, ...]
    coords: np.ndarray  # len(words) x dims
    singular_values: tuple[float, ...]
    metadata: Mapping[str, object] = field(default_factory=dict)


def project_svd(vectors: WordVectors, dims: int = 2) -> Projection:
    """Project vectors onto their top singular directions (coordinates U·S).

    Signs are fixed by making the largest-magnitude component of each left
    singular vector positive, so identical input gives identical output.
    """
    if dims < 1:
        raise ValueError("dims must be >= 1")
    matrix = np.asarray(vectors.matrix, dtype=np.float64)
    u, s, _ = np.linalg.svd(matrix, full_matrices=False)
    tol = max(matrix.shape) * np.finfo(np.float64).eps * (s[0] if s.size else 0.0)
    rank = int(np.sum(s > tol))
    if rank < dims:
        raise RankDeficient(f"matrix rank {rank} is below requested dims {dims}")
    u = u[:, :dims].copy()
    for j in range(dims):
        pivot = int(np.argmax(np.abs(u[:, j])))
        if u[pivot, j] < 0:
            u[:, j] = -u[:, j]
    coords = u * s[:dims]
    return Projection(
        words=vectors.words,
        coords=coords,
        singular_values=tuple(float(x) for x in s[:dims]),
        metadata={"dims": dims, "rank": rank},
    )


@dataclass(frozen=True)
class KMeansResult:
    labels: tuple[int, ...]
    centroids: np.ndarray
    inertia: float
    iterations: int


def kmeans(matrix: np.ndarray, k: int, seed: int = 0, max_iter: int = 100) -> KMeansResult:
    """Seeded k-means++ then Lloyd iterations to a fixed point.

    An emptied cluster is reseeded with the point farthest from its own
    centroid (lowest index on ties), keeping runs deterministic.
    """
    points = np.asarray(matrix, dtype=np.float64)
    n = points.shape[0]
    if k < 1 or k > n:
        raise InvalidK(f"k must be in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)

    centroids = np.empty((k, points.shape[1]))
    centroids[0] = points[int(rng.integers(n))]
    dist_sq = np.sum((points - centroids[0]) ** 2, axis=1)
    for c in range(1, k):
        total = float(dist_sq.sum())
        if total == 0.0:
            centroids[c] = points[int(rng.integers(n))]
        else:
            target = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(dist_sq), target))
            centroids[c] = points[min(idx, n - 1)]
        dist_sq = np.minimum(dist_sq, np.sum((points - centroids[c]) ** 2, axis=1))

    labels = np.zeros(n, dtype=np.int64)
    for iteration in range(1, max_iter + 1):
        distances = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(distances, axis=1)
        for c in range(k):
            members = points[new_labels == c]
            if len(members):
                centroids[c] = members.mean(axis=0)
            else:
                spread = np.sum((points - centroids[new_labels]) ** 2, axis=1)
                far = int(np.argmax(spread))
                centroids[c] = points[far]
                new_labels[far] = c
        if iteration > 1 and np.array_equal(new_labels, labels):
            break
        labels = new_labels
    inertia = float(np.sum((points - centroids[labels]) ** 2))
    return KMeansResult(tuple(int(x) for x in labels), centroids, inertia, iteration)


def neighbors(vectors: WordVectors, word: str, n: int = 10) -> list[tuple[str, float]]:
    """The n nearest words by cosine similarity, excluding the query.

    Zero vectors get similarity 0; equal similarities sort alphabetically.
    """
    query = vectors.vector(word)
    qn = float(np.linalg.norm(query))
    norms = np.linalg.norm(vectors.matrix, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(
            (norms > 0) & (qn > 0),
            (vectors.matrix @ query) / (norms * qn if qn > 0 else 1.0),
            0.0,
        )
    ranked = sorted(
        ((w, float(sims[i])) for i, w in enumerate(vectors.words) if w != word),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return ranked[:n]


def export_projection(
    projection: Projection,
    labels: Sequence[int],
    path: str | Path,
) -> None:
    """Write word,x,y,cluster,label_me rows for the 2-D scatter workflow.

    label_me flags the top max(1, round(10%)) of words by distance from the
    global centroid, the ones most worth a human annotation pass.
    """
    coords = projection.coords
    if coords.shape[1] < 2:
        raise ValueError("projection must have at least 2 dims to export")
    if len(labels) != len(projection.words):
        raise ValueError("labels length disagrees with projection")
    center = coords.mean(axis=0)
    dist = np.linalg.norm(coords - center, axis=1)
    n_flag = max(1, int(len(projection.words) * 0.1 + 0.5))
    flagged = set(
        sorted(range(len(projection.words)),
               key=lambda i: (-dist[i], projection.words[i]))[:n_flag]
    )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("word,x,y,cluster,label_me\n")
        for i, w in enumerate(projection.words):
            fh.write(
                f"{w},{coords[i, 0]!r},{coords[i, 1]!r},{labels[i]},"
                f"{'yes' if i in flagged else 'no'}\n"
            )
