"""Part-of-speech and entity annotation.

The builtin tagger knows closed-class words exactly and falls back to
suffix heuristics; it never tags entities. Real taggers feed the pipeline
through a sidecar CSV (columns doc, reference, position, pos, entity)
aligned by unit key and token position, whose values override the builtin.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping

from ..corpus import Corpus, Unit
from ..errors import AlignmentError
from .tokens import Entity, Pos, Token, tokenize

_CLOSED_CLASS: dict[str, Pos] = {}
for _w in ("the a an this that these those each every either neither some any no all "
           "both such what which whose another").split():
    _CLOSED_CLASS[_w] = Pos.DET
for _w in ("i you he she it we they me him her us them mine yours hers ours theirs "
           "myself yourself himself herself itself ourselves themselves who whom "
           "anyone everyone someone nobody anybody everybody somebody nothing "
           "anything everything something").split():
    _CLOSED_CLASS[_w] = Pos.PRON
for _w in ("am is are was were be been being have has had having do does did doing "
           "will would shall should can could may might must").split():
    _CLOSED_CLASS[_w] = Pos.VERB
for _w in ("very too also just now then here there always never often sometimes "
           "really quite rather soon already still again not perhaps maybe however").split():
    _CLOSED_CLASS[_w] = Pos.ADV
for _w in ("of in on at by for with about against between into through during before "
           "after above below to from up down out off over under and or but nor so "
           "yet if because as until while although though since unless whereas").split():
    _CLOSED_CLASS[_w] = Pos.OTHER

_SUFFIX_RULES: list[tuple[tuple[str, ...], Pos]] = [
    (("ly",), Pos.ADV),
    (("tion", "sion", "ment", "ness", "ance", "ence", "ship", "hood", "ism", "ist", "ity"), Pos.NOUN),
    (("ous", "ful", "ive", "able", "ible", "ish", "less", "ical", "ary"), Pos.ADJ),
    (("ize", "ise", "ify", "ing", "ed"), Pos.VERB),
]


def tag_pos(word: str) -> Pos:
    """Closed-class lookup, then suffix heuristics, defaulting to NOUN."""
    lower = word.lower()
    if lower in _CLOSED_CLASS:
        return _CLOSED_CLASS[lower]
    for suffixes, pos in _SUFFIX_RULES:
        if lower.endswith(suffixes) and len(lower) > max(len(s) for s in suffixes) + 1:
            return pos
    return Pos.NOUN


@dataclass(frozen=True)
class AnnotatedCorpus:
    """A corpus plus its tagged token lists, keyed by (doc_id, reference)."""

    corpus: Corpus
    tokens: Mapping[tuple[str, int], tuple[Token, ...]]

    def unit_tokens(self, doc_id: str, reference: int) -> tuple[Token, ...]:
        return self.tokens[(doc_id, reference)]

    def iter_units(self) -> Iterator[tuple[Unit, tuple[Token, ...]]]:
        for unit in self.corpus.units:
            yield unit, self.tokens[unit.key]


def tokenize_corpus(corpus: Corpus) -> dict[tuple[str, int], tuple[Token, ...]]:
    return {u.key: tuple(tokenize(u.text)) for u in corpus.units}


def _read_sidecar(path: str | Path) -> list[tuple[str, int, int, Pos, Entity]]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:5]] != [
            "doc", "reference", "position", "pos", "entity",
        ]:
            raise AlignmentError(f"{path}: expected header doc,reference,position,pos,entity")
        for lineno, row in enumerate(reader, start=2):
            if not row or not any(c.strip() for c in row):
                continue
            try:
                doc, ref, position = row[0], int(row[1]), int(row[2])
                pos = Pos[row[3].strip().upper()]
                entity = Entity[row[4].strip().upper()]
            except (IndexError, ValueError, KeyError) as exc:
                raise AlignmentError(f"{path}:{lineno}: bad row {row!r} ({exc})") from exc
            rows.append((doc, ref, position, pos, entity))
    return rows


def annotate_corpus(corpus: Corpus, sidecar: str | Path | None = None) -> AnnotatedCorpus:
    """Tokenize and tag every unit; sidecar rows override the builtin tagger."""
    tokens = {
        key: tuple(t.with_tags(tag_pos(t.surface), Entity.NONE) for t in toks)
        for key, toks in tokenize_corpus(corpus).items()
    }
    if sidecar is not None:
        for doc, ref, position, pos, entity in _read_sidecar(sidecar):
            key = (doc, ref)
            if key not in tokens:
                raise AlignmentError(f"sidecar row references unknown unit {key}")
            unit_toks = list(tokens[key])
            if not 0 <= position < len(unit_toks):
                raise AlignmentError(
                    f"sidecar row references position {position} outside unit {key} "
                    f"({len(unit_toks)} tokens)"
                )
            unit_toks[position] = unit_toks[position].with_tags(pos, entity)
            tokens[key] = tuple(unit_toks)
    return AnnotatedCorpus(corpus=corpus, tokens=tokens)
