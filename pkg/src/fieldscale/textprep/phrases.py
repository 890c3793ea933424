"""Multiword phrase detection over adjacent token pairs.

A pair of stems qualifies as a phrase when it occurs adjacently at least
min_count times and its pointwise mutual information (add-one smoothed to
keep rare counts finite) clears the threshold. Detected phrases are merged
into single ``a_b`` tokens by merge_phrases for downstream passes.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Sequence

from .tokens import Token


def detect_phrases(
    token_lists: Iterable[Sequence[Token]],
    min_count: int = 5,
    pmi_threshold: float = 3.0,
) -> set[tuple[str, str]]:
    """Return stem pairs with count >= min_count and smoothed PMI >= threshold."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    unigrams: Counter[str] = Counter()
    bigrams: Counter[tuple[str, str]] = Counter()
    for tokens in token_lists:
        stems = [t.stem for t in tokens]
        unigrams.update(stems)
        bigrams.update(zip(stems, stems[1:]))
    total_tokens = sum(unigrams.values())
    total_pairs = sum(bigrams.values())
    if total_pairs == 0:
        return set()
    phrases = set()
    for (a, b), count in bigrams.items():
        if count < min_count:
            continue
        p_pair = (count + 1) / (total_pairs + 1)
        p_a = (unigrams[a] + 1) / (total_tokens + 1)
        p_b = (unigrams[b] + 1) / (total_tokens + 1)
        pmi = math.log2(p_pair / (p_a * p_b))
        if pmi >= pmi_threshold:
            phrases.add((a, b))
    return phrases


def merge_phrases(tokens: Sequence[Token], phrases: set[tuple[str, str]]) -> list[Token]:
    """Greedy left-to-right merge of detected pairs into single tokens."""
    merged: list[Token] = []
    i = 0
    position = 0
    while i < len(tokens):
        if i + 1 < len(tokens) and (tokens[i].stem, tokens[i + 1].stem) in phrases:
            a, b = tokens[i], tokens[i + 1]
            merged.append(
                Token(
                    surface=f"{a.surface}_{b.surface}",
                    stem=f"{a.stem}_{b.stem}",
                    position=position,
                    pos=a.pos,
                    entity=a.entity,
                )
            )
            i += 2
        else:
            t = tokens[i]
            merged.append(Token(t.surface, t.stem, position, t.pos, t.entity))
            i += 1
        position += 1
    return merged
