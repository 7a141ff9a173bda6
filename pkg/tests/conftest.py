"""Shared fixtures: a worked three-category publication, a ten-field
registry whose categories pool many-to-one at the coarser levels, and a
stdlib-random corpus builder independent of the package's generator."""

from __future__ import annotations

import random

import pytest

from noai.model import (
    ActorKind,
    ClassificationRegistry,
    DocType,
    OAStatus,
    PublicationRecord,
)

# A publication carrying three subject categories, two of which share an
# OST discipline, signed by two countries.  Fractions at category level
# are 1/3 each; at discipline level Computer science pools 2/3 and
# Medical research keeps 1/3.
TABLE_CATS = (
    "Medical Informatics",
    "Computer Science, Information Systems",
    "Health Care Sciences & Services",
)

TABLE_REGISTRY = ClassificationRegistry({
    "Medical Informatics": ("Computer science", "PE6"),
    "Computer Science, Information Systems": ("Computer science", "PE6"),
    "Health Care Sciences & Services": ("Medical research", "LS7"),
})


@pytest.fixture
def table_registry() -> ClassificationRegistry:
    return TABLE_REGISTRY


@pytest.fixture
def table_record() -> PublicationRecord:
    return PublicationRecord(
        id="w1",
        year=2016,
        doc_type=DocType.ARTICLE,
        raw_statuses=(OAStatus.GOLD,),
        subject_categories=TABLE_CATS,
        has_doi=True,
        countries=("FRA", "USA"),
        institutions=("univ-x",),
    )


# Ten categories over six disciplines and nine sub-fields, so the three
# levels genuinely differ and coarser fields pool several categories.
CATS10 = (
    "Astronomy & Astrophysics",
    "Cell Biology",
    "Biochemistry & Molecular Biology",
    "Clinical Neurology",
    "Oncology",
    "Computer Science, Artificial Intelligence",
    "Computer Science, Information Systems",
    "Mathematics",
    "Economics",
    "Sociology",
)

REG10 = ClassificationRegistry({
    "Astronomy & Astrophysics": ("Earth sciences - Astronomy - Astrophysics", "PE9"),
    "Cell Biology": ("Fundamental biology", "LS3"),
    "Biochemistry & Molecular Biology": ("Fundamental biology", "LS1"),
    "Clinical Neurology": ("Medical research", "LS5"),
    "Oncology": ("Medical research", "LS4"),
    "Computer Science, Artificial Intelligence": ("Computer science", "PE6"),
    "Computer Science, Information Systems": ("Computer science", "PE6"),
    "Mathematics": ("Mathematics", "PE1"),
    "Economics": ("Social sciences", "SH1"),
    "Sociology": ("Social sciences", "SH3"),
})

ACTORS20 = tuple(f"A{i:02d}" for i in range(20))


@pytest.fixture
def reg10() -> ClassificationRegistry:
    return REG10


def random_corpus(seed: int, n_records: int,
                  actor_pool=ACTORS20, categories=CATS10,
                  institution_pool=()) -> list[PublicationRecord]:
    """A corpus drawn with the stdlib PRNG, not the package generator.

    Stresses the full input space: arbitrary OA status subsets (including
    ones where priority resolution matters), 1 to 3 categories, 0 to 4
    signing actors, all document types.
    """
    rng = random.Random(seed)
    doc_types = list(DocType)
    records = []
    for i in range(n_records):
        k = min(rng.choice((1, 1, 1, 2, 2, 3)), len(categories))
        cats = rng.sample(list(categories), k)
        statuses = [s for s in (OAStatus.GOLD, OAStatus.BRONZE, OAStatus.GREEN)
                    if rng.random() < 0.25]
        n_countries = rng.randint(0, min(4, len(actor_pool)))
        countries = rng.sample(list(actor_pool), n_countries)
        institutions = ()
        if institution_pool:
            institutions = rng.sample(
                list(institution_pool), rng.randint(0, min(2, len(institution_pool)))
            )
        records.append(PublicationRecord(
            id=f"p{i:06d}",
            year=rng.randint(2015, 2019),
            doc_type=rng.choice(doc_types),
            raw_statuses=statuses,
            subject_categories=cats,
            has_doi=rng.random() < 0.9,
            countries=countries,
            institutions=institutions,
        ))
    return records


def registry_csv_text(registry: ClassificationRegistry) -> str:
    lines = ["subject_category,ost_discipline,erc_subfield"]
    for cat, (ost, erc) in registry.categories.items():
        lines.append(f'"{cat}","{ost}",{erc}')
    return "\n".join(lines) + "\n"


@pytest.fixture
def reg10_csv(tmp_path):
    path = tmp_path / "registry.csv"
    path.write_text(registry_csv_text(REG10), encoding="utf-8")
    return str(path)
