"""Stop-word lists: a builtin English list plus custom merge/replace."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .tokens import Token


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str]
    source: str  # builtin | custom | merged

    def __post_init__(self) -> None:
        for w in self.words:
            if w != w.lower() or any(ch.isspace() for ch in w):
                raise ValueError(f"stop word {w!r} must be lowercase with no whitespace")

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)


def _parse(text: str) -> frozenset[str]:
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def builtin_stopwords() -> StopwordList:
    """The ~180-word English list shipped with the package."""
    text = resources.files("fieldscale.data").joinpath("stopwords.txt").read_text("utf-8")
    return StopwordList(_parse(text), "builtin")


def load_stopwords(path: str | Path, merge_builtin: bool = False) -> StopwordList:
    """Load a one-word-per-line file ("#" comments); optionally merge builtin."""
    words = _parse(Path(path).read_text(encoding="utf-8"))
    if merge_builtin:
        return StopwordList(words | builtin_stopwords().words, "merged")
    return StopwordList(words, "custom")


def remove_stopwords(tokens: list[Token], stoplist: StopwordList) -> list[Token]:
    """Drop tokens whose stem is in the list; survivors keep their positions."""
    return [t for t in tokens if t.stem not in stoplist]
