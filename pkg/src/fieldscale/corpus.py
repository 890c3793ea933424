"""Paragraph-level corpus model and the one-paragraph-per-line table format.

Raw field data lives in a directory of ``<id>_<YYYYMMDD>_<initials>.txt``
files. Ingestion turns each file into a document and each blank-line-separated
paragraph into a Unit. The tabular interchange format is one row per unit with
columns Document, Reference, Speaker, Section, Codes, Quotation Content plus
any extra metadata columns; it round-trips losslessly through CSV or TSV.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    DuplicateUnit,
    EncodingError,
    InvalidDate,
    InvariantViolation,
    MalformedFilename,
    NotFound,
    SchemaError,
    SeparatorCollision,
)

SOURCE_KINDS = ("interview", "fieldnote", "other")

CODE_SEPARATORS = {
    "newline_in_cell": "\n",
    "comma": ",",
    "colon": ":",
}


@dataclass(frozen=True)
class DocumentMeta:
    """Provenance parsed from the underscore-separated file name."""

    participant_id: str
    collection_date: date
    collector: str
    source_kind: str = "other"

    def __post_init__(self) -> None:
        if not self.participant_id:
            raise InvariantViolation("participant_id must be non-empty")
        if not self.collector:
            raise InvariantViolation("collector must be non-empty")
        if self.source_kind not in SOURCE_KINDS:
            raise InvariantViolation(f"unknown source_kind: {self.source_kind!r}")


@dataclass(frozen=True)
class Unit:
    """One coded text segment: a paragraph, turn, or whole document."""

    doc_id: str
    reference: int
    text: str
    speaker: str | None = None
    section: str | None = None
    codes: frozenset[str] = frozenset()
    extra_metadata: Mapping[str, str] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.reference)


@dataclass(frozen=True)
class Corpus:
    """Immutable ordered collection of units plus per-document metadata.

    Units are kept sorted by (doc_id, reference); references within each
    document are contiguous from 0 and every code on any unit appears in
    the codebook.
    """

    units: tuple[Unit, ...]
    documents: Mapping[str, DocumentMeta | None]
    codebook: frozenset[str]

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.units, key=lambda u: (u.doc_id, u.reference)))
        object.__setattr__(self, "units", ordered)
        seen: set[tuple[str, int]] = set()
        per_doc: dict[str, list[int]] = {}
        for unit in ordered:
            if unit.key in seen:
                raise DuplicateUnit(f"duplicate unit {unit.key}")
            seen.add(unit.key)
            if unit.doc_id not in self.documents:
                raise InvariantViolation(f"unit references unknown document {unit.doc_id!r}")
            if not unit.text:
                raise InvariantViolation(f"unit {unit.key} has empty text")
            for code in unit.codes:
                if code not in self.codebook:
                    raise InvariantViolation(f"code {code!r} on unit {unit.key} not in codebook")
            per_doc.setdefault(unit.doc_id, []).append(unit.reference)
        for doc_id, refs in per_doc.items():
            if refs != list(range(len(refs))):
                raise InvariantViolation(f"references in {doc_id!r} not contiguous from 0: {refs}")
        object.__setattr__(self, "codebook", frozenset(self.codebook))

    def __len__(self) -> int:
        return len(self.units)

    def unit(self, doc_id: str, reference: int) -> Unit:
        for u in self.units:
            if u.doc_id == doc_id and u.reference == reference:
                return u
        raise NotFound(f"no unit ({doc_id!r}, {reference})")

    def doc_units(self, doc_id: str) -> list[Unit]:
        if doc_id not in self.documents:
            raise NotFound(f"unknown document {doc_id!r}")
        return [u for u in self.units if u.doc_id == doc_id]

    def with_codes(self, assignments: Mapping[tuple[str, int], Iterable[str]]) -> "Corpus":
        """Return a new corpus with the given codes added to units."""
        new_units = []
        added: set[str] = set()
        for u in self.units:
            extra = frozenset(assignments.get(u.key, ()))
            if extra:
                added |= extra
                u = Unit(u.doc_id, u.reference, u.text, u.speaker, u.section,
                         u.codes | extra, u.extra_metadata)
            new_units.append(u)
        return Corpus(tuple(new_units), dict(self.documents), self.codebook | added)


def parse_filename(name: str) -> DocumentMeta:
    """Parse ``<id>_<YYYYMMDD>_<initials>[_...].<ext>`` into DocumentMeta."""
    stem = Path(name).stem
    parts = stem.split("_")
    if len(parts) < 3:
        raise MalformedFilename(
            f"{name!r}: expected at least 3 underscore-separated components, got {len(parts)}"
        )
    participant_id, raw_date, collector = parts[0], parts[1], parts[2]
    if not participant_id:
        raise MalformedFilename(f"{name!r}: empty participant id")
    if not collector:
        raise MalformedFilename(f"{name!r}: empty collector initials")
    if len(raw_date) != 8 or not raw_date.isdigit():
        raise InvalidDate(f"{name!r}: date component {raw_date!r} is not YYYYMMDD")
    try:
        parsed = date(int(raw_date[0:4]), int(raw_date[4:6]), int(raw_date[6:8]))
    except ValueError as exc:
        raise InvalidDate(f"{name!r}: {exc}") from exc
    return DocumentMeta(participant_id, parsed, collector)


def split_paragraphs(text: str) -> list[str]:
    """Split on one-or-more blank lines; CR/LF normalized; blanks dropped."""
    normalized = text.replace("\r\n", "\n").replace("\r", "\n")
    paragraphs = []
    current: list[str] = []
    for line in normalized.split("\n"):
        if line.strip():
            current.append(line)
        elif current:
            paragraphs.append("\n".join(current).rstrip())
            current = []
    if current:
        paragraphs.append("\n".join(current).rstrip())
    return [p for p in paragraphs if p]


def ingest_directory(path: str | Path, granularity: str = "paragraph") -> Corpus:
    """Build a corpus from a directory of UTF-8 ``.txt`` files.

    ``granularity="paragraph"`` yields one unit per blank-line-separated
    paragraph; ``"document"`` yields a single unit per file. Zero-byte files
    contribute a document with no units.
    """
    if granularity not in ("paragraph", "document"):
        raise ValueError(f"granularity must be 'paragraph' or 'document', got {granularity!r}")
    root = Path(path)
    if not root.is_dir():
        raise NotFound(f"not a directory: {root}")
    units: list[Unit] = []
    documents: dict[str, DocumentMeta | None] = {}
    for file in sorted(root.glob("*.txt")):
        try:
            raw = file.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise EncodingError(f"{file.name}: not valid UTF-8 ({exc})") from exc
        meta = parse_filename(file.name)
        doc_id = file.stem
        documents[doc_id] = meta
        if granularity == "paragraph":
            texts = split_paragraphs(raw)
        else:
            stripped = raw.replace("\r\n", "\n").replace("\r", "\n").strip()
            texts = [stripped] if stripped else []
        for ref, text in enumerate(texts):
            units.append(Unit(doc_id=doc_id, reference=ref, text=text))
    return Corpus(tuple(units), documents, frozenset())


@dataclass(frozen=True)
class TableSchema:
    """Header names for the required table columns; remappable via config."""

    document: str = "Document"
    reference: str = "Reference"
    speaker: str = "Speaker"
    section: str = "Section"
    codes: str = "Codes"
    text: str = "Quotation Content"

    def required(self) -> tuple[str, str, str]:
        return (self.text, self.document, self.reference)

    def known(self) -> tuple[str, ...]:
        return (self.document, self.reference, self.speaker, self.section, self.codes, self.text)


def export_table(
    corpus: Corpus,
    code_separator: str = "newline_in_cell",
    schema: TableSchema = TableSchema(),
) -> list[list[str]]:
    """Serialize a corpus to rows (header first), one row per unit.

    Codes are joined in lexicographic order by the chosen separator; any
    extra metadata keys become additional columns after the standard six.
    """
    sep = CODE_SEPARATORS.get(code_separator)
    if sep is None:
        raise ValueError(f"unknown code separator {code_separator!r}")
    for unit in corpus.units:
        for code in unit.codes:
            if sep in code:
                raise SeparatorCollision(
                    f"code {code!r} contains the {code_separator!r} separator"
                )
    extra_keys = sorted({k for u in corpus.units for k in u.extra_metadata})
    header = list(schema.known()) + extra_keys
    rows = [header]
    for unit in corpus.units:
        rows.append(
            [
                unit.doc_id,
                str(unit.reference),
                unit.speaker or "",
                unit.section or "",
                sep.join(sorted(unit.codes)),
                unit.text,
            ]
            + [unit.extra_metadata.get(k, "") for k in extra_keys]
        )
    return rows


def import_table(
    rows: Sequence[Sequence[str]],
    code_separator: str = "newline_in_cell",
    schema: TableSchema = TableSchema(),
) -> Corpus:
    """Inverse of export_table; unknown columns become extra metadata."""
    sep = CODE_SEPARATORS.get(code_separator)
    if sep is None:
        raise ValueError(f"unknown code separator {code_separator!r}")
    if not rows:
        raise SchemaError("table has no header row")
    header = list(rows[0])
    for col in schema.required():
        if col not in header:
            raise SchemaError(f"missing required column {col!r}")
    idx = {name: header.index(name) for name in header}
    extra_cols = [h for h in header if h not in schema.known()]

    def cell(row: Sequence[str], name: str) -> str:
        i = idx.get(name)
        return row[i] if i is not None and i < len(row) else ""

    units: list[Unit] = []
    seen: set[tuple[str, int]] = set()
    codebook: set[str] = set()
    documents: dict[str, DocumentMeta | None] = {}
    for row in rows[1:]:
        if not any(str(c).strip() for c in row):
            continue
        doc_id = cell(row, schema.document)
        raw_ref = cell(row, schema.reference)
        try:
            reference = int(raw_ref)
        except ValueError as exc:
            raise SchemaError(f"reference {raw_ref!r} is not an integer") from exc
        key = (doc_id, reference)
        if key in seen:
            raise DuplicateUnit(f"duplicate unit {key}")
        seen.add(key)
        codes = frozenset(c for c in cell(row, schema.codes).split(sep) if c)
        codebook |= codes
        if doc_id not in documents:
            try:
                documents[doc_id] = parse_filename(doc_id + ".txt")
            except (MalformedFilename, InvalidDate, InvariantViolation):
                documents[doc_id] = None
        extra = {k: cell(row, k) for k in extra_cols if cell(row, k)}
        units.append(
            Unit(
                doc_id=doc_id,
                reference=reference,
                text=cell(row, schema.text),
                speaker=cell(row, schema.speaker) or None,
                section=cell(row, schema.section) or None,
                codes=codes,
                extra_metadata=extra,
            )
        )
    return Corpus(tuple(units), documents, frozenset(codebook))


def write_table(rows: Sequence[Sequence[str]], path: str | Path, tsv: bool = False) -> None:
    """Write rows as RFC-4180 CSV (or TSV) with UTF-8 encoding."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t" if tsv else ",", lineterminator="\n")
        writer.writerows(rows)


def read_table(path: str | Path, tsv: bool = False) -> list[list[str]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.reader(fh, delimiter="\t" if tsv else ","))


def table_to_string(rows: Sequence[Sequence[str]], tsv: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter="\t" if tsv else ",", lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def reconstruct_document(corpus: Corpus, doc_id: str) -> str:
    """Concatenate a document's unit texts with blank-line joiners."""
    return "\n\n".join(u.text for u in corpus.doc_units(doc_id))


def context_window(corpus: Corpus, doc_id: str, reference: int, radius: int) -> list[Unit]:
    """Units with references in [reference-radius, reference+radius], clipped."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    doc = corpus.doc_units(doc_id)
    if not any(u.reference == reference for u in doc):
        raise NotFound(f"no unit ({doc_id!r}, {reference})")
    lo, hi = reference - radius, reference + radius
    return [u for u in doc if lo <= u.reference <= hi]
