"""Unicode-aware word segmentation.

Punctuation is dropped; hyphens and apostrophes inside a word are kept so
"state-of-the-art" and "don't" stay single tokens. Surfaces preserve case,
stems start as the case-folded surface and are replaced when a stemmer runs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum

_WORD_RE = re.compile(r"\w+(?:[-'’]\w+)*", re.UNICODE)


class Pos(str, Enum):
    NOUN = "NOUN"
    VERB = "VERB"
    ADJ = "ADJ"
    ADV = "ADV"
    PRON = "PRON"
    DET = "DET"
    OTHER = "OTHER"
    UNK = "UNK"


class Entity(str, Enum):
    PERSON = "PERSON"
    ORG = "ORG"
    GPE = "GPE"
    LOC = "LOC"
    EVENT = "EVENT"
    FAC = "FAC"
    NONE = "NONE"


@dataclass(frozen=True)
class Token:
    surface: str
    stem: str
    position: int
    pos: Pos = Pos.UNK
    entity: Entity = Entity.NONE

    def with_stem(self, stem: str) -> "Token":
        return replace(self, stem=stem)

    def with_tags(self, pos: Pos, entity: Entity) -> "Token":
        return replace(self, pos=pos, entity=entity)


def tokenize(text: str) -> list[Token]:
    """Segment text into word tokens; empty text yields an empty list."""
    return [
        Token(surface=m.group(0), stem=m.group(0).lower(), position=i)
        for i, m in enumerate(_WORD_RE.finditer(text))
    ]


_SENTENCE_RE = re.compile(r"[.!?]+")


def split_sentences(text: str) -> list[str]:
    """Split on sentence-final punctuation; empty fragments dropped."""
    parts = _SENTENCE_RE.split(text)
    return [p.strip() for p in parts if p.strip()]
