"""Domain types for open-access indicator computation.

A corpus is a set of publication records. Each record carries zero or more
raw OA statuses (gold, bronze, green), one or more subject categories, and
the countries / institutions credited on it. Subject categories roll up to
coarser classification levels through a registry that maps every category
to exactly one OST discipline and one ERC sub-field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .errors import UnknownCategory


class OAStatus(str, Enum):
    GOLD = "gold"
    BRONZE = "bronze"
    GREEN = "green"
    CLOSED = "closed"


#: Statuses a record may carry in its raw data; CLOSED is derived, never raw.
RAW_STATUSES = frozenset({OAStatus.GOLD, OAStatus.BRONZE, OAStatus.GREEN})

#: Multi-status resolution order: an APC-funded gold version outranks a
#: publisher-opened bronze one, which outranks an author-archived green one.
DEFAULT_PRIORITY: tuple[OAStatus, ...] = (OAStatus.GOLD, OAStatus.BRONZE, OAStatus.GREEN)


class DocType(str, Enum):
    ARTICLE = "article"
    LETTER = "letter"
    REVIEW = "review"
    PROCEEDING = "proceeding"


class Level(str, Enum):
    """Classification granularity used for fractional counting and normalization."""

    SUBJECT_CATEGORY = "subject-category"
    OST_DISCIPLINE = "ost-discipline"
    ERC_SUBFIELD = "erc-subfield"


class ActorKind(str, Enum):
    COUNTRY = "country"
    INSTITUTION = "institution"


#: Canonical 11-discipline nomenclature, full name -> short label.
OST_DISCIPLINES: Mapping[str, str] = {
    "Applied biology - Ecology": "App. Bio. - Eco.",
    "Fundamental biology": "Fund. bio.",
    "Chemistry": "Chemistry",
    "Computer science": "Comp. Sc.",
    "Mathematics": "Maths",
    "Physics": "Physics",
    "Medical research": "Medical R.",
    "Engineering": "Engineering",
    "Earth sciences - Astronomy - Astrophysics": "Earth sc., Astro.",
    "Humanities": "Humanities",
    "Social sciences": "Soc. Sc.",
}

#: Canonical 25 ERC sub-fields, id -> wording. The panel (LS/PE/SH) is the id prefix.
ERC_SUBFIELDS: Mapping[str, str] = {
    "SH1": "Individuals, Markets and Organizations",
    "SH2": "Institutions, Values, Environment and Space",
    "SH3": "The Social World, Diversity, Population",
    "SH4": "The Human Mind and Its Complexity",
    "SH5": "Cultures and Cultural Production",
    "SH6": "The Study of the Human Past",
    "PE1": "Mathematics",
    "PE2": "Fundamental Constituents of Matter",
    "PE3": "Condensed Matter Physics",
    "PE4": "Physical and Analytical Chemical Sciences",
    "PE5": "Synthetic Chemistry and Materials",
    "PE6": "Computer Science and Informatics",
    "PE7": "Systems and Communication Engineering",
    "PE8": "Products and Processes Engineering",
    "PE9": "Universe Sciences",
    "PE10": "Earth System Science",
    "LS1": "Molecular Biology, Biochemistry, Structural Biology and Molecular Biophysics",
    "LS2": "Genetics, 'Omics', Bioinformatics and Systems Biology",
    "LS3": "Cellular and Developmental Biology",
    "LS4": "Physiology, Pathophysiology and Endocrinology",
    "LS5": "Neuroscience and Neural Disorders",
    "LS6": "Immunity and Infection",
    "LS7": "Applied Medical Technologies, Diagnostics, Therapies and Public Health",
    "LS8": "Ecology, Evolution and Environmental Biology",
    "LS9": "Applied Life Sciences, Biotechnology, and Molecular and Biosystems Engineering",
}


def erc_panel(subfield_id: str) -> str:
    """Panel group (LS, PE or SH) of an ERC sub-field id."""
    return subfield_id.rstrip("0123456789")


def _normalize_dashes(name: str) -> str:
    # Nomenclature files in the wild mix hyphens with en/em dashes.
    return " ".join(name.replace("–", "-").replace("—", "-").split())


_OST_STRICT_NAMES = frozenset(
    _normalize_dashes(n) for pair in OST_DISCIPLINES.items() for n in pair
)


def is_canonical_ost_discipline(name: str) -> bool:
    """True if name is a canonical discipline (full name or short label)."""
    return _normalize_dashes(name) in _OST_STRICT_NAMES


def is_canonical_erc_subfield(subfield_id: str) -> bool:
    return subfield_id in ERC_SUBFIELDS


def resolve_status(
    raw_statuses: Iterable[OAStatus],
    priority: tuple[OAStatus, ...] = DEFAULT_PRIORITY,
) -> OAStatus:
    """Collapse a record's raw OA statuses to a single one.

    A record carrying several statuses counts once, under the highest-priority
    status present (default order: gold, bronze, green). No status means closed.
    """
    statuses = frozenset(raw_statuses)
    if not statuses <= RAW_STATUSES:
        raise ValueError(f"not raw OA statuses: {statuses - RAW_STATUSES}")
    for status in priority:
        if status in statuses:
            return status
    return OAStatus.CLOSED


@dataclass(frozen=True, slots=True)
class PublicationRecord:
    """One indexed publication.

    subject_categories keeps input order (the first entry is the primary
    category); countries and institutions are sets because geographic credit
    is whole per distinct actor, not per signatory occurrence.
    """

    id: str
    year: int
    doc_type: DocType
    raw_statuses: frozenset[OAStatus]
    subject_categories: tuple[str, ...]
    has_doi: bool
    countries: frozenset[str]
    institutions: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "raw_statuses", frozenset(self.raw_statuses))
        object.__setattr__(self, "subject_categories", tuple(self.subject_categories))
        object.__setattr__(self, "countries", frozenset(self.countries))
        object.__setattr__(self, "institutions", frozenset(self.institutions))
        if not self.subject_categories:
            raise ValueError(f"record {self.id!r}: no subject categories")
        if len(set(self.subject_categories)) != len(self.subject_categories):
            raise ValueError(f"record {self.id!r}: duplicate subject categories")
        if not self.raw_statuses <= RAW_STATUSES:
            raise ValueError(f"record {self.id!r}: invalid raw statuses {self.raw_statuses}")

    def actors(self, kind: ActorKind) -> frozenset[str]:
        return self.countries if kind is ActorKind.COUNTRY else self.institutions


@dataclass(frozen=True, slots=True)
class Actor:
    """A country or institution, with optional reporting metadata.

    The group label (a benchmarking cohort such as G1/G2/G3) only makes
    sense for institutions and is used solely for filtering output
    tables, never in computation.
    """

    id: str
    kind: ActorKind
    group: str | None = None
    display_name: str = ""

    def __post_init__(self):
        if self.group is not None and self.kind is not ActorKind.INSTITUTION:
            raise ValueError(f"actor {self.id!r}: group set on a non-institution")
        if not self.display_name:
            object.__setattr__(self, "display_name", self.id)


@dataclass(frozen=True)
class ClassificationRegistry:
    """Maps each subject category to exactly one OST discipline and ERC sub-field."""

    categories: Mapping[str, tuple[str, str]]

    @property
    def ost_disciplines(self) -> frozenset[str]:
        return frozenset(d for d, _ in self.categories.values())

    @property
    def erc_subfields(self) -> frozenset[str]:
        return frozenset(s for _, s in self.categories.values())

    def __contains__(self, category: str) -> bool:
        return category in self.categories

    def classify(self, category: str, level: Level) -> str:
        """Field id of a category at the given level; identity at category level."""
        if level is Level.SUBJECT_CATEGORY:
            return category
        mapped = self.categories.get(category)
        if mapped is None:
            raise UnknownCategory(f"subject category {category!r} not in registry")
        return mapped[0] if level is Level.OST_DISCIPLINE else mapped[1]

    def field_map(self, level: Level) -> Mapping[str, str] | None:
        """category -> field lookup table for a level; None at category level."""
        if level is Level.SUBJECT_CATEGORY:
            return None
        idx = 0 if level is Level.OST_DISCIPLINE else 1
        return {cat: pair[idx] for cat, pair in self.categories.items()}


def classify(registry: ClassificationRegistry, category: str, level: Level) -> str:
    return registry.classify(category, level)


@dataclass(frozen=True, slots=True)
class ActorFieldAggregate:
    """Fractional counts of one (actor, field) cell at one level."""

    actor: str
    field: str
    level: Level
    pub_count: float
    oa_count: float
    oa_by_type: Mapping[OAStatus, float]


@dataclass(frozen=True, slots=True)
class WorldBaseline:
    """Per-field totals over the whole corpus, the normalization denominator."""

    field: str
    level: Level
    pub_count: float
    oa_count: float
    oa_by_type: Mapping[OAStatus, float]

    @property
    def oa_share(self) -> float | None:
        """World OA fraction for the field, or None when the field is empty."""
        if self.pub_count == 0:
            return None
        return self.oa_count / self.pub_count


@dataclass(frozen=True, slots=True)
class IndicatorRow:
    actor: str
    display_name: str
    kind: ActorKind
    group: str | None
    x_total: float
    oa_share: float
    noai: Mapping[Level, float | None]
    oa_type_shares: Mapping[OAStatus, float]
    n_oa_whole: int
    n_pubs_whole: int


@dataclass(frozen=True)
class IndicatorTable:
    """Per-actor results: shares, normalized indicators and whole-counted OA volume.

    Shares are percentages; normalized indicator values are ratios where 1.0
    means world-typical openness given the actor's disciplinary mix.
    """

    actor_kind: ActorKind
    window: tuple[int, int] | None
    levels: tuple[Level, ...]
    rows: tuple[IndicatorRow, ...] = field(default_factory=tuple)

    def by_actor(self) -> dict[str, IndicatorRow]:
        return {row.actor: row for row in self.rows}
