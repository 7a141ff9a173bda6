"""Corpus and registry ingestion.

The corpus wire format is UTF-8 JSON Lines, one publication per line:

    {"id": "...", "year": 2016, "doc_type": "article", "oa": ["gold"],
     "categories": ["..."], "doi": true, "countries": ["FRA"], "institutions": []}

`id`, `year`, `doc_type` and `categories` are required; `oa`, `countries` and
`institutions` default to empty and `doi` to false. Unknown keys are ignored.
Malformed lines are counted and skipped unless strict mode is on.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .errors import (
    DuplicateCategory,
    IoFailure,
    MalformedRecord,
    MalformedRow,
    UnknownCategory,
    UnknownDiscipline,
)
from .model import (
    Actor,
    ActorKind,
    ClassificationRegistry,
    DocType,
    OAStatus,
    PublicationRecord,
    DEFAULT_PRIORITY,
    is_canonical_erc_subfield,
    is_canonical_ost_discipline,
)

REASON_MALFORMED = "malformed"
REASON_EMPTY_CATEGORIES = "empty_categories"
REASON_DUPLICATE_ID = "duplicate_id"
REASON_DOC_TYPE = "doc_type_filtered"
REASON_YEAR = "year_filtered"
REASON_NO_DOI = "no_doi"
REASON_UNKNOWN_CATEGORY = "unknown_category"

_DOC_TYPES = {d.value: d for d in DocType}
_RAW_OA = {s.value: s for s in (OAStatus.GOLD, OAStatus.BRONZE, OAStatus.GREEN)}

#: Cap on per-line messages kept in CorpusStats; counts are always complete.
MAX_KEPT_DIAGNOSTICS = 50

REGISTRY_COLUMNS = ("subject_category", "ost_discipline", "erc_subfield")
ACTOR_COLUMNS = ("actor_id", "kind", "group", "display_name")


@dataclass(frozen=True)
class IngestOptions:
    """Perimeter filters applied while loading a corpus."""

    doc_types: frozenset[DocType] | None = None
    window: tuple[int, int] | None = None
    require_doi: bool = False
    strict: bool = False


@dataclass
class CorpusStats:
    records_read: int = 0
    records_accepted: int = 0
    records_rejected: int = 0
    rejection_reasons: Counter = field(default_factory=Counter)
    year_min: int | None = None
    year_max: int | None = None
    diagnostics: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "records_read": self.records_read,
            "records_accepted": self.records_accepted,
            "records_rejected": self.records_rejected,
            "rejection_reasons": dict(sorted(self.rejection_reasons.items())),
            "year_range": None if self.year_min is None else [self.year_min, self.year_max],
        }


def _parse_line(obj: dict) -> PublicationRecord:
    """Build a record from a parsed JSON object; ValueError on schema violations."""
    rec_id = obj.get("id")
    if not isinstance(rec_id, str) or not rec_id:
        raise ValueError("missing or invalid id")
    year = obj.get("year")
    if isinstance(year, bool) or not isinstance(year, int):
        raise ValueError("missing or invalid year")
    doc_type = _DOC_TYPES.get(obj.get("doc_type"))
    if doc_type is None:
        raise ValueError(f"invalid doc_type {obj.get('doc_type')!r}")
    oa = obj.get("oa", [])
    if not isinstance(oa, list):
        raise ValueError("oa must be an array")
    statuses = set()
    for s in oa:
        status = _RAW_OA.get(s)
        if status is None:
            raise ValueError(f"invalid oa status {s!r}")
        statuses.add(status)
    categories = obj.get("categories")
    if not isinstance(categories, list) or not all(
        isinstance(c, str) and c for c in categories
    ):
        raise ValueError("categories must be an array of non-empty strings")
    # Duplicate categories carry no extra information; keep first occurrences.
    deduped = tuple(dict.fromkeys(categories))
    doi = obj.get("doi", False)
    if not isinstance(doi, bool):
        raise ValueError("doi must be a boolean")
    countries = obj.get("countries", [])
    institutions = obj.get("institutions", [])
    for name, value in (("countries", countries), ("institutions", institutions)):
        if not isinstance(value, list) or not all(isinstance(v, str) and v for v in value):
            raise ValueError(f"{name} must be an array of non-empty strings")
    if not deduped:
        # Raised after the rest of the schema checks so the reason is specific.
        raise ValueError(REASON_EMPTY_CATEGORIES)
    return PublicationRecord(
        id=rec_id,
        year=year,
        doc_type=doc_type,
        raw_statuses=frozenset(statuses),
        subject_categories=deduped,
        has_doi=doi,
        countries=frozenset(countries),
        institutions=frozenset(institutions),
    )


class CorpusReader:
    """Streaming corpus reader; `stats` is complete once iteration finishes.

    When a registry is given, records with categories outside it are rejected
    (fatal in strict mode). Filters never raise: they only reject.
    """

    def __init__(
        self,
        path,
        registry: ClassificationRegistry | None = None,
        options: IngestOptions | None = None,
    ):
        self.path = path
        self.registry = registry
        self.options = options or IngestOptions()
        self.stats = CorpusStats()

    def _reject(self, line_no: int, reason: str, detail: str = ""):
        self.stats.records_rejected += 1
        self.stats.rejection_reasons[reason] += 1
        if len(self.stats.diagnostics) < MAX_KEPT_DIAGNOSTICS:
            message = f"line {line_no}: {reason}" + (f" ({detail})" if detail else "")
            self.stats.diagnostics.append(message)

    def __iter__(self) -> Iterator[PublicationRecord]:
        opts = self.options
        stats = self.stats
        registry = self.registry
        known = registry.categories if registry is not None else None
        seen_ids: set[str] = set()
        try:
            stream = open(self.path, encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot open corpus {self.path}: {exc}") from exc
        with stream:
            for line_no, line in enumerate(stream, start=1):
                line = line.strip()
                if not line:
                    continue
                stats.records_read += 1
                try:
                    obj = json.loads(line)
                    if not isinstance(obj, dict):
                        raise ValueError("line is not an object")
                    record = _parse_line(obj)
                except (ValueError, TypeError) as exc:
                    reason = (
                        REASON_EMPTY_CATEGORIES
                        if str(exc) == REASON_EMPTY_CATEGORIES
                        else REASON_MALFORMED
                    )
                    if opts.strict:
                        raise MalformedRecord(line_no, f"{reason}: {exc}") from exc
                    self._reject(line_no, reason, str(exc))
                    continue
                if opts.doc_types is not None and record.doc_type not in opts.doc_types:
                    self._reject(line_no, REASON_DOC_TYPE)
                    continue
                if opts.window is not None and not (
                    opts.window[0] <= record.year <= opts.window[1]
                ):
                    self._reject(line_no, REASON_YEAR)
                    continue
                if opts.require_doi and not record.has_doi:
                    self._reject(line_no, REASON_NO_DOI)
                    continue
                if record.id in seen_ids:
                    if opts.strict:
                        raise MalformedRecord(line_no, f"duplicate id {record.id!r}")
                    self._reject(line_no, REASON_DUPLICATE_ID, record.id)
                    continue
                if known is not None:
                    missing = [c for c in record.subject_categories if c not in known]
                    if missing:
                        if opts.strict:
                            raise UnknownCategory(
                                f"line {line_no}: record {record.id!r} has unknown "
                                f"categories {missing}"
                            )
                        self._reject(line_no, REASON_UNKNOWN_CATEGORY, ", ".join(missing))
                        continue
                seen_ids.add(record.id)
                stats.records_accepted += 1
                if stats.year_min is None or record.year < stats.year_min:
                    stats.year_min = record.year
                if stats.year_max is None or record.year > stats.year_max:
                    stats.year_max = record.year
                yield record


def load_corpus(
    path,
    registry: ClassificationRegistry | None = None,
    options: IngestOptions | None = None,
) -> tuple[list[PublicationRecord], CorpusStats]:
    """Read a whole corpus file into memory; use CorpusReader to stream instead."""
    reader = CorpusReader(path, registry, options)
    records = list(reader)
    return records, reader.stats


def serialize_record(record: PublicationRecord) -> dict:
    return {
        "id": record.id,
        "year": record.year,
        "doc_type": record.doc_type.value,
        "oa": [s.value for s in DEFAULT_PRIORITY if s in record.raw_statuses],
        "categories": list(record.subject_categories),
        "doi": record.has_doi,
        "countries": sorted(record.countries),
        "institutions": sorted(record.institutions),
    }


def write_corpus(records: Iterable[PublicationRecord], path) -> int:
    """Write records as canonical JSON Lines; returns the number written."""
    n = 0
    try:
        out = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise IoFailure(f"cannot write corpus {path}: {exc}") from exc
    with out:
        for record in records:
            out.write(json.dumps(serialize_record(record), separators=(",", ":")))
            out.write("\n")
            n += 1
    return n


@dataclass(frozen=True)
class Diagnostic:
    """A record whose categories cannot all be classified."""

    record_id: str
    unknown_categories: tuple[str, ...]

    def __str__(self) -> str:
        cats = ", ".join(repr(c) for c in self.unknown_categories)
        return f"record {self.record_id!r}: unknown categories {cats}"


def validate_corpus(
    corpus: Iterable[PublicationRecord], registry: ClassificationRegistry
) -> list[Diagnostic]:
    """One diagnostic per record with a category the registry cannot classify."""
    diagnostics = []
    for record in corpus:
        unknown = tuple(c for c in record.subject_categories if c not in registry)
        if unknown:
            diagnostics.append(Diagnostic(record.id, unknown))
    return diagnostics


def _read_csv_rows(path, expected: Sequence[str], label: str):
    try:
        stream = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise IoFailure(f"cannot open {label} {path}: {exc}") from exc
    with stream:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(f"{label} {path}: empty file, header required") from None
        header = [h.strip() for h in header]
        if header[: len(expected)] != list(expected):
            raise MalformedRow(
                f"{label} {path}: header must start with {','.join(expected)}"
            )
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(expected):
                raise MalformedRow(f"{label} {path} line {line_no}: expected {len(expected)} fields")
            yield line_no, [cell.strip() for cell in row]


def load_registry(path, strict_nomenclature: bool = False) -> ClassificationRegistry:
    """Load the subject-category -> (OST discipline, ERC sub-field) table.

    With strict_nomenclature, discipline names must be canonical (full name or
    short label) and sub-field ids must belong to the 25-entry ERC nomenclature.
    """
    categories: dict[str, tuple[str, str]] = {}
    for line_no, row in _read_csv_rows(path, REGISTRY_COLUMNS, "registry"):
        category, discipline, subfield = row[0], row[1], row[2]
        if not category or not discipline or not subfield:
            raise MalformedRow(f"registry {path} line {line_no}: empty field")
        if category in categories:
            raise DuplicateCategory(
                f"registry {path} line {line_no}: subject category {category!r} mapped twice"
            )
        if strict_nomenclature:
            if not is_canonical_ost_discipline(discipline):
                raise UnknownDiscipline(
                    f"registry {path} line {line_no}: OST discipline {discipline!r} "
                    "not in the 11-name nomenclature"
                )
            if not is_canonical_erc_subfield(subfield):
                raise UnknownDiscipline(
                    f"registry {path} line {line_no}: ERC sub-field {subfield!r} "
                    "not in the 25-id nomenclature"
                )
        categories[category] = (discipline, subfield)
    return ClassificationRegistry(categories=categories)


def load_actor_registry(path) -> dict[str, Actor]:
    """Load actor metadata: id -> Actor (kind, optional group, display name)."""
    actors: dict[str, Actor] = {}
    for line_no, row in _read_csv_rows(path, ACTOR_COLUMNS, "actor registry"):
        actor_id, kind_s, group, display_name = row[0], row[1], row[2], row[3]
        if not actor_id:
            raise MalformedRow(f"actor registry {path} line {line_no}: empty actor_id")
        if actor_id in actors:
            raise MalformedRow(
                f"actor registry {path} line {line_no}: duplicate actor_id {actor_id!r}"
            )
        try:
            kind = ActorKind(kind_s)
        except ValueError:
            raise MalformedRow(
                f"actor registry {path} line {line_no}: kind must be country or institution"
            ) from None
        try:
            actors[actor_id] = Actor(
                id=actor_id,
                kind=kind,
                group=group or None,
                display_name=display_name or actor_id,
            )
        except ValueError as exc:
            raise MalformedRow(f"actor registry {path} line {line_no}: {exc}") from None
    return actors
