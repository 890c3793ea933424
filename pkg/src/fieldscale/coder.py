"""Per-code classifiers and the recall-then-review workflow.

The working loop: split labeled units, featurize (bag of words, tf-idf, or
sidecar unit embeddings), train a logistic or linear-SVM scorer by seeded
gradient descent, tune the decision threshold for a recall target, apply to
the unlabeled corpus, queue the predicted positives for human review, then
merge decisions back. Machine output never overwrites a human label.

tf-idf weighting: count * (ln((1+D)/(1+df)) + 1) with df from the training
set only, then L2 row normalization. SVM scores pass through the logistic
link so both model kinds emit comparable [0, 1] scores.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Unit
from .embeddings import UnitEmbeddings
from .errors import (
    DegenerateLabels,
    EmptyEval,
    IncompleteReview,
    InvariantViolation,
    LengthMismatch,
    MissingEmbedding,
    NoPositives,
    TooFewExamples,
    UndefinedAlpha,
)
from .textprep.tokens import tokenize

UnitKey = tuple[str, int]

ORIGINS = ("human", "machine", "review")
FEATURE_MODES = ("bow", "tfidf", "unit_embedding")
MODEL_KINDS = ("logreg", "svm")


# ------------------------------------------------------------- assignments

@dataclass(frozen=True)
class CodeAssignments:
    """Code labels per unit with their origin, plus explicit negatives."""

    positive: Mapping[UnitKey, Mapping[str, str]] = field(default_factory=dict)
    negative: frozenset[tuple[UnitKey, str]] = frozenset()

    def __post_init__(self) -> None:
        for key, codes in self.positive.items():
            for code, origin in codes.items():
                if origin not in ORIGINS:
                    raise InvariantViolation(f"unknown origin {origin!r} on {key}/{code}")
                if (key, code) in self.negative:
                    raise InvariantViolation(f"{key}/{code} is both positive and negative")

    def origin(self, key: UnitKey, code: str) -> str | None:
        return self.positive.get(key, {}).get(code)

    def label(self, key: UnitKey, code: str) -> bool | None:
        """True/False when decided either way, None when unlabeled."""
        if self.origin(key, code) is not None:
            return True
        if (key, code) in self.negative:
            return False
        return None

    def positives_for(self, code: str) -> set[UnitKey]:
        return {k for k, codes in self.positive.items() if code in codes}

    def negatives_for(self, code: str) -> set[UnitKey]:
        return {k for k, c in self.negative if c == code}

    def with_positive(self, key: UnitKey, code: str, origin: str) -> "CodeAssignments":
        """Add or upgrade a positive; machine never replaces human or review."""
        if origin not in ORIGINS:
            raise InvariantViolation(f"unknown origin {origin!r}")
        current = self.origin(key, code)
        if origin == "machine" and current in ("human", "review"):
            return self
        negative = self.negative
        if (key, code) in negative:
            if origin == "machine":
                return self  # a decided negative outranks a machine guess
            negative = negative - {(key, code)}
        positive = {k: dict(v) for k, v in self.positive.items()}
        positive.setdefault(key, {})[code] = origin
        return CodeAssignments(positive, negative)

    def with_negative(self, key: UnitKey, code: str) -> "CodeAssignments":
        """Record an explicit negative; clears a machine positive if present."""
        current = self.origin(key, code)
        if current in ("human", "review"):
            raise InvariantViolation(
                f"cannot mark {key}/{code} negative over a {current} positive"
            )
        positive = {k: dict(v) for k, v in self.positive.items()}
        if current == "machine":
            del positive[key][code]
            if not positive[key]:
                del positive[key]
        return CodeAssignments(positive, self.negative | {(key, code)})

    @staticmethod
    def from_corpus_codes(units: Iterable[Unit], origin: str = "human") -> "CodeAssignments":
        positive: dict[UnitKey, dict[str, str]] = {}
        for unit in units:
            for code in unit.codes:
                positive.setdefault(unit.key, {})[code] = origin
        return CodeAssignments(positive, frozenset())


# ------------------------------------------------------------------ splits

def split_train_eval(
    keys: Sequence[UnitKey],
    labels: Sequence[bool],
    eval_fraction: float = 0.25,
    seed: int = 0,
) -> tuple[list[UnitKey], list[UnitKey]]:
    """Stratified split keeping at least one of each class on both sides."""
    if len(keys) != len(labels):
        raise LengthMismatch(f"{len(keys)} keys vs {len(labels)} labels")
    if not 0.0 < eval_fraction < 1.0:
        raise ValueError("eval_fraction must be in (0, 1)")
    pos = sorted(k for k, y in zip(keys, labels) if y)
    neg = sorted(k for k, y in zip(keys, labels) if not y)
    if len(pos) < 2 or len(neg) < 2:
        raise TooFewExamples(
            f"need >= 2 of each class to split, got {len(pos)} positive / {len(neg)} negative"
        )
    rng = random.Random(seed)
    rng.shuffle(pos)
    rng.shuffle(neg)
    train, evaluation = [], []
    for group in (pos, neg):
        n_eval = min(len(group) - 1, max(1, round(len(group) * eval_fraction)))
        evaluation.extend(group[:n_eval])
        train.extend(group[n_eval:])
    return sorted(train), sorted(evaluation)


# ------------------------------------------------------------ featurization

@dataclass(frozen=True)
class Featurizer:
    """Frozen featurization parameters fitted on the training units."""

    mode: str
    vocab: tuple[str, ...] = ()
    idf: tuple[float, ...] = ()
    dim: int = 0

    def transform(
        self,
        units: Sequence[Unit],
        embeddings: UnitEmbeddings | None = None,
    ) -> np.ndarray:
        if self.mode == "unit_embedding":
            if embeddings is None:
                raise MissingEmbedding("unit_embedding mode requires sidecar embeddings")
            rows = np.empty((len(units), self.dim))
            for i, unit in enumerate(units):
                key = f"{unit.doc_id}:{unit.reference}"
                if key not in embeddings:
                    raise MissingEmbedding(f"no embedding for unit {key!r}")
                rows[i] = embeddings.vector(key)
            return rows
        index = {w: i for i, w in enumerate(self.vocab)}
        counts = np.zeros((len(units), len(self.vocab)))
        for i, unit in enumerate(units):
            for token in tokenize(unit.text):
                j = index.get(token.stem)
                if j is not None:
                    counts[i, j] += 1.0
        if self.mode == "bow":
            return counts
        weighted = counts * np.asarray(self.idf)
        norms = np.linalg.norm(weighted, axis=1, keepdims=True)
        return np.where(norms > 0, weighted / np.where(norms > 0, norms, 1.0), 0.0)


def fit_featurizer(
    units: Sequence[Unit],
    mode: str = "tfidf",
    embeddings: UnitEmbeddings | None = None,
) -> Featurizer:
    """Learn vocabulary (and idf) from training units only."""
    if mode not in FEATURE_MODES:
        raise ValueError(f"mode must be one of {FEATURE_MODES}, got {mode!r}")
    if mode == "unit_embedding":
        if embeddings is None:
            raise MissingEmbedding("unit_embedding mode requires sidecar embeddings")
        return Featurizer(mode=mode, dim=int(embeddings.matrix.shape[1]))
    stems_per_unit = [{t.stem for t in tokenize(u.text)} for u in units]
    vocab = tuple(sorted({s for stems in stems_per_unit for s in stems}))
    if mode == "bow":
        return Featurizer(mode=mode, vocab=vocab, dim=len(vocab))
    n_docs = len(units)
    df = {w: 0 for w in vocab}
    for stems in stems_per_unit:
        for s in stems:
            df[s] += 1
    idf = tuple(math.log((1 + n_docs) / (1 + df[w])) + 1.0 for w in vocab)
    return Featurizer(mode=mode, vocab=vocab, idf=idf, dim=len(vocab))


# ---------------------------------------------------------------- gradients

def logloss_gradient(
    weights: np.ndarray, bias: float, features: np.ndarray, labels: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, float]:
    """Mean log-loss with L2 on weights (bias excluded) and its gradient."""
    z = features @ weights + bias
    # log(1 + exp(-m)) computed stably for both signs of the margin
    margins = np.where(labels > 0, z, -z)
    loss = float(np.mean(np.logaddexp(0.0, -margins))) + 0.5 * l2 * float(weights @ weights)
    p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
    err = p - labels
    grad_w = features.T @ err / len(labels) + l2 * weights
    grad_b = float(np.mean(err))
    return loss, grad_w, grad_b


def hinge_gradient(
    weights: np.ndarray, bias: float, features: np.ndarray, labels: np.ndarray,
    l2: float = 0.0,
) -> tuple[float, np.ndarray, float]:
    """Mean hinge loss with L2 on weights and a subgradient."""
    sign = 2.0 * labels - 1.0
    z = features @ weights + bias
    margins = sign * z
    active = margins < 1.0
    loss = float(np.mean(np.maximum(0.0, 1.0 - margins))) + 0.5 * l2 * float(weights @ weights)
    grad_w = -(features[active].T @ sign[active]) / len(labels) + l2 * weights
    grad_b = -float(np.sum(sign[active])) / len(labels)
    return loss, grad_w, grad_b


_GRADIENTS = {"logreg": logloss_gradient, "svm": hinge_gradient}


@dataclass(frozen=True)
class CodeModel:
    """A trained scorer for one code, with its frozen featurizer and threshold."""

    code: str
    kind: str
    featurizer: Featurizer
    weights: np.ndarray
    bias: float
    threshold: float = 0.5
    metadata: Mapping[str, object] = field(default_factory=dict)

    def scores(
        self, units: Sequence[Unit], embeddings: UnitEmbeddings | None = None
    ) -> np.ndarray:
        """Logistic-link scores in [0, 1] for both model kinds."""
        z = self.featurizer.transform(units, embeddings) @ self.weights + self.bias
        return 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))

    def with_threshold(self, threshold: float) -> "CodeModel":
        return replace(self, threshold=threshold)


def train_classifier(
    features: np.ndarray,
    labels: Sequence[bool],
    code: str,
    kind: str = "logreg",
    featurizer: Featurizer | None = None,
    learning_rate: float = 0.5,
    epochs: int = 200,
    batch_size: int = 32,
    l2: float = 1e-4,
    seed: int = 0,
) -> CodeModel:
    """Mini-batch gradient descent with seeded shuffling each epoch."""
    if kind not in MODEL_KINDS:
        raise ValueError(f"kind must be one of {MODEL_KINDS}, got {kind!r}")
    y = np.asarray([1.0 if v else 0.0 for v in labels])
    if len(set(y.tolist())) < 2:
        raise DegenerateLabels("training labels contain a single class")
    if features.shape[0] != len(y):
        raise LengthMismatch(f"{features.shape[0]} rows vs {len(y)} labels")
    gradient = _GRADIENTS[kind]
    rng = np.random.default_rng(seed)
    weights = np.zeros(features.shape[1])
    bias = 0.0
    n = len(y)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start:start + batch_size]
            _, grad_w, grad_b = gradient(weights, bias, features[batch], y[batch], l2)
            weights = weights - learning_rate * grad_w
            bias = bias - learning_rate * grad_b
    loss, _, _ = gradient(weights, bias, features, y, l2)
    return CodeModel(
        code=code,
        kind=kind,
        featurizer=featurizer if featurizer is not None else Featurizer(mode="bow"),
        weights=weights,
        bias=bias,
        metadata={
            "loss": loss, "epochs": epochs, "learning_rate": learning_rate,
            "batch_size": batch_size, "l2": l2, "seed": seed, "n_train": n,
        },
    )


def downsample_negatives(
    keys: Sequence[UnitKey],
    labels: Sequence[bool],
    max_ratio: float = 3.0,
    seed: int = 0,
) -> tuple[list[UnitKey], list[bool]]:
    """Cap negatives at max_ratio per positive, dropping a seeded sample."""
    pos = sorted(k for k, y in zip(keys, labels) if y)
    neg = sorted(k for k, y in zip(keys, labels) if not y)
    limit = int(max_ratio * len(pos))
    if len(neg) > limit:
        rng = random.Random(seed)
        rng.shuffle(neg)
        neg = neg[:limit]
    kept = sorted(pos) + sorted(neg)
    flags = [True] * len(pos) + [False] * (len(kept) - len(pos))
    order = sorted(range(len(kept)), key=lambda i: kept[i])
    return [kept[i] for i in order], [flags[i] for i in order]


# ---------------------------------------------------------------- threshold

def tune_threshold(
    scores: Sequence[float],
    labels: Sequence[bool],
    target_recall: float = 0.95,
) -> float:
    """Highest threshold whose recall on this set meets the target.

    Scoring a unit at exactly the threshold counts as positive, so the
    returned value is the k-th largest positive score with k = ceil(target*P).
    """
    if len(scores) != len(labels):
        raise LengthMismatch(f"{len(scores)} scores vs {len(labels)} labels")
    if not 0.0 <= target_recall <= 1.0:
        raise ValueError("target_recall must be in [0, 1]")
    positive_scores = sorted((s for s, y in zip(scores, labels) if y), reverse=True)
    if not positive_scores:
        raise NoPositives("evaluation set has no positive examples")
    if target_recall == 0.0:
        return math.inf
    k = math.ceil(target_recall * len(positive_scores))
    return positive_scores[k - 1]


def apply_codes(
    model: CodeModel,
    units: Sequence[Unit],
    assignments: CodeAssignments,
    embeddings: UnitEmbeddings | None = None,
) -> tuple[CodeAssignments, dict[UnitKey, float]]:
    """Assign the code to units scoring at or above the threshold.

    Existing human/review labels and decided negatives are left untouched.
    Returns the updated assignments and every unit's score.
    """
    scores = model.scores(units, embeddings)
    out = assignments
    score_map: dict[UnitKey, float] = {}
    for unit, score in zip(units, scores):
        score_map[unit.key] = float(score)
        if score >= model.threshold:
            out = out.with_positive(unit.key, model.code, "machine")
    return out, score_map


# --------------------------------------------------------------- reliability

def krippendorff_alpha(
    labels_a: Sequence[object],
    labels_b: Sequence[object],
) -> float:
    """Nominal two-coder alpha from the coincidence matrix.

    None marks a missing value; units missing either label are unpairable
    and drop out. Raises UndefinedAlpha when every pairable value is the
    same category (expected disagreement zero) and EmptyEval when nothing
    is pairable.
    """
    if len(labels_a) != len(labels_b):
        raise LengthMismatch(f"{len(labels_a)} vs {len(labels_b)} labels")
    pairs = [(a, b) for a, b in zip(labels_a, labels_b) if a is not None and b is not None]
    if not pairs:
        raise EmptyEval("no pairable units")
    categories = sorted({v for pair in pairs for v in pair}, key=repr)
    index = {c: i for i, c in enumerate(categories)}
    k = len(categories)
    coincidence = [[0.0] * k for _ in range(k)]
    for a, b in pairs:
        i, j = index[a], index[b]
        coincidence[i][j] += 1.0
        coincidence[j][i] += 1.0
    totals = [sum(row) for row in coincidence]
    n = sum(totals)
    observed_disagreement = sum(
        coincidence[i][j] for i in range(k) for j in range(k) if i != j
    )
    expected_pairs = sum(
        totals[i] * totals[j] for i in range(k) for j in range(k) if i != j
    )
    if expected_pairs == 0:
        raise UndefinedAlpha("all pairable values fall in one category")
    return 1.0 - (n - 1.0) * observed_disagreement / expected_pairs


@dataclass(frozen=True)
class ReliabilityReport:
    precision: float
    recall: float
    f1: float
    alpha: float | None
    tp: int
    fp: int
    fn: int
    tn: int
    notes: tuple[str, ...] = ()

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def evaluate(predicted: Sequence[bool], gold: Sequence[bool]) -> ReliabilityReport:
    """Confusion counts, precision/recall/f1, and alpha versus gold labels."""
    if len(predicted) != len(gold):
        raise LengthMismatch(f"{len(predicted)} predictions vs {len(gold)} gold labels")
    if not predicted:
        raise EmptyEval("nothing to evaluate")
    tp = sum(1 for p, g in zip(predicted, gold) if p and g)
    fp = sum(1 for p, g in zip(predicted, gold) if p and not g)
    fn = sum(1 for p, g in zip(predicted, gold) if not p and g)
    tn = sum(1 for p, g in zip(predicted, gold) if not p and not g)
    notes = []
    precision = tp / (tp + fp) if tp + fp else 0.0
    if tp + fp == 0:
        notes.append("no predicted positives")
    recall = tp / (tp + fn) if tp + fn else 0.0
    if tp + fn == 0:
        notes.append("no gold positives")
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    try:
        alpha = krippendorff_alpha([bool(p) for p in predicted], [bool(g) for g in gold])
    except UndefinedAlpha:
        alpha = None
        notes.append("alpha undefined: single category")
    return ReliabilityReport(
        precision=precision, recall=recall, f1=f1, alpha=alpha,
        tp=tp, fp=fp, fn=fn, tn=tn, notes=tuple(notes),
    )


# -------------------------------------------------------------------- review

@dataclass(frozen=True)
class ReviewItem:
    key: UnitKey
    code: str
    score: float


def build_review_queue(
    scores: Mapping[UnitKey, float],
    assignments: CodeAssignments,
    code: str,
    threshold: float,
    limit: int | None = None,
) -> list[ReviewItem]:
    """Predicted positives pending a decision, best score first.

    Units already human- or review-labeled for the code, or explicitly
    negative, are excluded. Equal scores order by unit key.
    """
    items = []
    for key, score in scores.items():
        if score < threshold:
            continue
        origin = assignments.origin(key, code)
        if origin in ("human", "review"):
            continue
        if (key, code) in assignments.negative:
            continue
        items.append(ReviewItem(key=key, code=code, score=float(score)))
    items.sort(key=lambda item: (-item.score, item.key))
    return items[:limit] if limit is not None else items


@dataclass(frozen=True)
class MergeOutcome:
    assignments: CodeAssignments
    accepted: int
    rejected: int
    post_review_precision: float
    no_confirmed_positives: bool


def merge_review(
    assignments: CodeAssignments,
    queue: Sequence[ReviewItem],
    decisions: Mapping[UnitKey, str],
) -> MergeOutcome:
    """Fold reviewer decisions back into the assignments.

    Every queued item needs an accept or reject; anything else raises
    IncompleteReview. Post-review precision counts confirmed positives
    against machine positives for the code that nobody reviewed.
    """
    code = queue[0].code if queue else ""
    accepted = rejected = 0
    out = assignments
    for item in queue:
        decision = decisions.get(item.key, "pending")
        if decision == "accept":
            out = out.with_positive(item.key, item.code, "review")
            accepted += 1
        elif decision == "reject":
            out = out.with_negative(item.key, item.code)
            rejected += 1
        else:
            raise IncompleteReview(f"unit {item.key} is still {decision!r}")
    unverified = sum(
        1 for key in out.positives_for(code) if out.origin(key, code) == "machine"
    ) if code else 0
    if accepted + unverified:
        precision = accepted / (accepted + unverified)
        flag = accepted == 0
    else:
        precision = 1.0
        flag = True
    return MergeOutcome(
        assignments=out,
        accepted=accepted,
        rejected=rejected,
        post_review_precision=precision,
        no_confirmed_positives=flag,
    )


# -------------------------------------------------------------- persistence

def save_classifier(model: CodeModel, path: str | Path) -> None:
    """Write a code model as sorted-key JSON; byte-stable for equal models."""
    payload = {
        "code": model.code,
        "kind": model.kind,
        "featurizer": {
            "mode": model.featurizer.mode,
            "vocab": list(model.featurizer.vocab),
            "idf": list(model.featurizer.idf),
            "dim": model.featurizer.dim,
        },
        "weights": [float(w) for w in model.weights],
        "bias": float(model.bias),
        "threshold": float(model.threshold),
        "metadata": dict(model.metadata),
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_classifier(path: str | Path) -> CodeModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    feat = payload["featurizer"]
    return CodeModel(
        code=payload["code"],
        kind=payload["kind"],
        featurizer=Featurizer(
            mode=feat["mode"],
            vocab=tuple(feat["vocab"]),
            idf=tuple(feat["idf"]),
            dim=int(feat["dim"]),
        ),
        weights=np.asarray(payload["weights"]),
        bias=payload["bias"],
        threshold=payload["threshold"],
        metadata=payload["metadata"],
    )
