"""Counting and normalization against an exact rational brute-force oracle."""

from __future__ import annotations

import dataclasses
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import ACTORS20, CATS10, REG10, random_corpus
from noai.engine import (
    Aggregator,
    aggregate,
    build_indicator_table,
    field_fractions,
    fraction_entries,
    noai,
    normalized_share,
    oa_share,
    type_breakdown,
    yearly_series,
)
from noai.errors import (
    EmptyWindow,
    UndefinedIndicator,
    UndefinedShare,
    UnknownCategory,
)
from noai.model import (
    ActorFieldAggregate,
    ActorKind,
    DocType,
    Level,
    OAStatus,
    PublicationRecord,
    WorldBaseline,
)
from oracle import OA_TYPES, BruteForce

TOL = 1e-9
LEVELS = (Level.SUBJECT_CATEGORY, Level.OST_DISCIPLINE, Level.ERC_SUBFIELD)


def rec(rec_id, cats, statuses=(), countries=(), year=2018, doc=DocType.ARTICLE):
    return PublicationRecord(
        id=rec_id, year=year, doc_type=doc, raw_statuses=statuses,
        subject_categories=cats, has_doi=True, countries=countries,
        institutions=(),
    )


class TestFractionEntries:
    def test_three_categories_at_category_level(self, table_registry, table_record):
        entries = fraction_entries(table_record.subject_categories,
                                   table_registry, Level.SUBJECT_CATEGORY)
        assert set(entries) == set(table_record.subject_categories)
        for w in entries.values():
            assert abs(w - 1 / 3) <= 1e-12

    def test_pooling_at_discipline_level(self, table_registry, table_record):
        # Two of the three categories share a discipline: 2/3 + 1/3,
        # computed as one division, never by re-splitting.
        entries = fraction_entries(table_record.subject_categories,
                                   table_registry, Level.OST_DISCIPLINE)
        assert entries == {
            "Computer science": pytest.approx(2 / 3, abs=1e-12),
            "Medical research": pytest.approx(1 / 3, abs=1e-12),
        }

    def test_pooling_at_subfield_level(self, table_registry, table_record):
        entries = fraction_entries(table_record.subject_categories,
                                   table_registry, Level.ERC_SUBFIELD)
        assert entries == {
            "PE6": pytest.approx(2 / 3, abs=1e-12),
            "LS7": pytest.approx(1 / 3, abs=1e-12),
        }

    def test_single_category_is_whole(self, reg10):
        assert fraction_entries(("Mathematics",), reg10,
                                Level.OST_DISCIPLINE) == {"Mathematics": 1.0}

    def test_unknown_category_raises_at_coarser_level(self, reg10):
        with pytest.raises(UnknownCategory):
            fraction_entries(("Palmistry",), reg10, Level.ERC_SUBFIELD)

    def test_unknown_category_fine_at_category_level(self, reg10):
        assert fraction_entries(("Palmistry",), reg10,
                                Level.SUBJECT_CATEGORY) == {"Palmistry": 1.0}

    def test_field_fractions_wrapper(self, table_registry, table_record):
        vec = field_fractions(table_record, table_registry, Level.OST_DISCIPLINE)
        assert vec.publication_id == table_record.id
        assert vec.level is Level.OST_DISCIPLINE

    @given(st.lists(st.sampled_from(CATS10), min_size=1, max_size=6, unique=True),
           st.sampled_from(LEVELS))
    def test_weights_sum_to_one(self, cats, level):
        entries = fraction_entries(tuple(cats), REG10, level)
        assert abs(sum(entries.values()) - 1.0) <= 1e-12
        assert all(w > 0 for w in entries.values())

    @given(st.lists(st.sampled_from(CATS10), min_size=1, max_size=6, unique=True))
    def test_category_level_uniform(self, cats):
        entries = fraction_entries(tuple(cats), REG10, Level.SUBJECT_CATEGORY)
        k = len(cats)
        assert all(w == 1.0 / k for w in entries.values())


def assert_matches_oracle(result, oracle: BruteForce, tol=TOL):
    # World baselines: same fields, same tallies.
    assert set(result.baselines) == set(oracle.world)
    for f, baseline in result.baselines.items():
        ocell = oracle.world[f]
        assert abs(baseline.pub_count - float(ocell.x)) <= tol
        assert abs(baseline.oa_count - float(ocell.oa)) <= tol
        for t in OA_TYPES:
            assert abs(baseline.oa_by_type[t] - float(ocell.by_type[t])) <= tol

    # Per-(actor, field) cells.
    assert set(result.cells) == set(oracle.cells)
    for key, cell in result.cells.items():
        ocell = oracle.cells[key]
        assert abs(cell.pub_count - float(ocell.x)) <= tol
        assert abs(cell.oa_count - float(ocell.oa)) <= tol
        for t in OA_TYPES:
            assert abs(cell.oa_by_type[t] - float(ocell.by_type[t])) <= tol

    # Whole counts are integers and must be exact.
    assert result.world_whole.pubs == oracle.world_whole_pubs
    assert result.world_whole.oa == oracle.world_whole_oa
    for actor, counts in result.whole_counts.items():
        assert counts.pubs == oracle.whole_pubs[actor]
        assert counts.oa == oracle.whole_oa[actor]

    # Derived per-actor quantities, including the indicator itself.
    grouped = result.cells_by_actor()
    for actor in oracle.actors():
        cells = grouped[actor]
        expected = oracle.noai(actor)
        if expected is None:
            with pytest.raises(UndefinedIndicator):
                noai(cells, result.baselines)
        else:
            assert abs(noai(cells, result.baselines) - float(expected)) <= tol


class TestOracleEquivalence:
    @pytest.mark.parametrize("seed", range(8))
    @pytest.mark.parametrize("level", LEVELS)
    def test_streaming_equals_brute_force(self, seed, level):
        corpus = random_corpus(seed=seed, n_records=400)
        result = aggregate(corpus, REG10, level)
        oracle = BruteForce(corpus, REG10, level)
        assert_matches_oracle(result, oracle)

    def test_window_respected_both_routes(self):
        corpus = random_corpus(seed=99, n_records=300)
        window = (2016, 2017)
        result = aggregate(corpus, REG10, Level.OST_DISCIPLINE, window=window)
        oracle = BruteForce(corpus, REG10, Level.OST_DISCIPLINE, window=window)
        assert result.n_records == oracle.n_records > 0
        assert_matches_oracle(result, oracle)

    def test_institution_kind(self):
        corpus = random_corpus(seed=5, n_records=300,
                               institution_pool=("u1", "u2", "u3"))
        result = aggregate(corpus, REG10, Level.ERC_SUBFIELD,
                           actor_kind=ActorKind.INSTITUTION)
        oracle = BruteForce(corpus, REG10, Level.ERC_SUBFIELD,
                            actor_kind=ActorKind.INSTITUTION)
        assert oracle.actors()  # the draw must produce signed records
        assert_matches_oracle(result, oracle)

    def test_priority_override_both_routes(self):
        corpus = random_corpus(seed=11, n_records=300)
        priority = (OAStatus.GREEN, OAStatus.BRONZE, OAStatus.GOLD)
        result = aggregate(corpus, REG10, Level.OST_DISCIPLINE, priority=priority)
        oracle = BruteForce(corpus, REG10, Level.OST_DISCIPLINE, priority=priority)
        assert_matches_oracle(result, oracle)

    def test_multi_level_pass_equals_single_level_passes(self):
        corpus = random_corpus(seed=21, n_records=300)
        agg = Aggregator(REG10, LEVELS)
        agg.add_all(corpus)
        combined = agg.finish()
        for level in LEVELS:
            solo = aggregate(corpus, REG10, level)
            assert combined[level].cells.keys() == solo.cells.keys()
            for key, cell in combined[level].cells.items():
                assert cell.pub_count == solo.cells[key].pub_count
                assert cell.oa_count == solo.cells[key].oa_count

    def test_order_stability(self):
        # Kahan accumulation keeps permutations together far below the
        # advertised tolerance.
        corpus = random_corpus(seed=31, n_records=500)
        shuffled = corpus[:]
        random.Random(1).shuffle(shuffled)
        a = aggregate(corpus, REG10, Level.OST_DISCIPLINE)
        b = aggregate(shuffled, REG10, Level.OST_DISCIPLINE)
        for f in a.baselines:
            assert abs(a.baselines[f].pub_count - b.baselines[f].pub_count) <= 1e-12
            assert abs(a.baselines[f].oa_count - b.baselines[f].oa_count) <= 1e-12


class TestCountingRules:
    def test_hand_worked_two_record_corpus(self, table_registry):
        # r1: categories (MI, CSIS, HCSS) -> CS 2/3, MR 1/3; gold; FRA+USA.
        # r2: category HCSS -> MR 1; closed; FRA.
        corpus = [
            rec("r1", ("Medical Informatics", "Computer Science, Information Systems",
                       "Health Care Sciences & Services"),
                statuses=(OAStatus.GOLD,), countries=("FRA", "USA")),
            rec("r2", ("Health Care Sciences & Services",), countries=("FRA",)),
        ]
        result = aggregate(corpus, table_registry, Level.OST_DISCIPLINE)
        b = result.baselines
        assert b["Computer science"].pub_count == pytest.approx(2 / 3, abs=1e-12)
        assert b["Medical research"].pub_count == pytest.approx(4 / 3, abs=1e-12)
        assert b["Computer science"].oa_count == pytest.approx(2 / 3, abs=1e-12)
        assert b["Medical research"].oa_count == pytest.approx(1 / 3, abs=1e-12)

        fra_mr = result.cells[("FRA", "Medical research")]
        assert fra_mr.pub_count == pytest.approx(4 / 3, abs=1e-12)
        usa_cs = result.cells[("USA", "Computer science")]
        assert usa_cs.pub_count == pytest.approx(2 / 3, abs=1e-12)

        # Whole counting: every distinct signatory gets the full record.
        assert result.whole_counts["FRA"].pubs == 2
        assert result.whole_counts["FRA"].oa == 1
        assert result.whole_counts["USA"].pubs == 1
        assert result.world_whole.pubs == 2

    def test_multi_status_counts_once_under_winner(self, reg10):
        r = rec("r1", ("Mathematics",), statuses=(OAStatus.GOLD, OAStatus.GREEN),
                countries=("FRA",))
        result = aggregate([r], reg10, Level.SUBJECT_CATEGORY)
        cell = result.cells[("FRA", "Mathematics")]
        assert cell.oa_count == 1.0
        assert cell.oa_by_type[OAStatus.GOLD] == 1.0
        assert cell.oa_by_type[OAStatus.GREEN] == 0.0

    def test_actorless_record_feeds_world_baseline_only(self, reg10):
        corpus = [
            rec("r1", ("Economics",), statuses=(OAStatus.GREEN,)),
            rec("r2", ("Economics",), countries=("FRA",)),
        ]
        result = aggregate(corpus, reg10, Level.SUBJECT_CATEGORY)
        assert result.baselines["Economics"].pub_count == pytest.approx(2.0)
        assert result.cells[("FRA", "Economics")].pub_count == pytest.approx(1.0)
        assert result.world_whole.pubs == 2

    def test_empty_window_warns_then_raises_in_strict(self, reg10):
        corpus = [rec("r1", ("Economics",), year=2010)]
        with pytest.warns(RuntimeWarning):
            result = aggregate(corpus, reg10, Level.SUBJECT_CATEGORY,
                               window=(2015, 2019))
        assert result.n_records == 0
        with pytest.raises(EmptyWindow):
            aggregate(corpus, reg10, Level.SUBJECT_CATEGORY,
                      window=(2015, 2019), strict=True)


class TestInvariants:
    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000), st.sampled_from(LEVELS))
    def test_conservation_and_dominance(self, seed, level):
        corpus = random_corpus(seed=seed, n_records=250)
        result = aggregate(corpus, REG10, level)
        # Conservation: world fractional counts sum to the record count.
        total_x = sum(b.pub_count for b in result.baselines.values())
        assert abs(total_x - result.n_records) <= TOL
        # Dominance and per-type decomposition on every cell.
        for cell in list(result.cells.values()) + list(result.baselines.values()):
            assert cell.oa_count <= cell.pub_count + 1e-12
            assert abs(sum(cell.oa_by_type[t] for t in OA_TYPES) - cell.oa_count) <= TOL

    @settings(max_examples=15, deadline=None)
    @given(st.integers(min_value=0, max_value=10_000))
    def test_type_shares_sum_to_total(self, seed):
        corpus = random_corpus(seed=seed, n_records=250)
        result = aggregate(corpus, REG10, Level.OST_DISCIPLINE)
        breakdown = type_breakdown(corpus, REG10, Level.OST_DISCIPLINE)
        grouped = result.cells_by_actor()
        for actor, shares in breakdown.items():
            total = oa_share_of_cells(grouped[actor])
            assert abs(sum(shares.values()) - total) <= TOL

    def test_world_actor_indicator_is_exactly_one(self):
        # An actor present on every record reproduces the baseline cells
        # bit for bit, so the indicator is 1.0 with no tolerance at all.
        corpus = [
            dataclasses.replace(r, countries=frozenset(r.countries) | {"WORLD"})
            for r in random_corpus(seed=77, n_records=400)
        ]
        for level in LEVELS:
            result = aggregate(corpus, REG10, level)
            cells = result.cells_by_actor()["WORLD"]
            assert noai(cells, result.baselines) == 1.0


def oa_share_of_cells(cells):
    x = sum(c.pub_count for c in cells)
    oa = sum(c.oa_count for c in cells)
    return 100.0 * oa / x


class TestShares:
    def test_oa_share(self, reg10):
        corpus = [
            rec("r1", ("Mathematics",), statuses=(OAStatus.GOLD,), countries=("A",)),
            rec("r2", ("Mathematics",), countries=("A",)),
        ]
        result = aggregate(corpus, reg10, Level.SUBJECT_CATEGORY)
        assert oa_share(result.cells[("A", "Mathematics")]) == pytest.approx(50.0)

    def test_oa_share_undefined_on_empty(self):
        empty = WorldBaseline(field="f", level=Level.SUBJECT_CATEGORY,
                              pub_count=0.0, oa_count=0.0,
                              oa_by_type={t: 0.0 for t in OA_TYPES})
        with pytest.raises(UndefinedShare):
            oa_share(empty)

    def test_normalized_share_value(self, reg10):
        # Actor at 100% OA in a field where the world is at 50%.
        corpus = [
            rec("r1", ("Economics",), statuses=(OAStatus.GREEN,), countries=("A",)),
            rec("r2", ("Economics",)),
        ]
        result = aggregate(corpus, reg10, Level.SUBJECT_CATEGORY)
        share = normalized_share(result.cells[("A", "Economics")],
                                 result.baselines["Economics"])
        assert share.value == pytest.approx(2.0)

    def test_normalized_share_undefined_when_world_closed(self, reg10):
        corpus = [rec("r1", ("Economics",), countries=("A",))]
        result = aggregate(corpus, reg10, Level.SUBJECT_CATEGORY)
        share = normalized_share(result.cells[("A", "Economics")],
                                 result.baselines["Economics"])
        assert share.value is None

    def test_normalized_share_mismatch_raises(self, reg10):
        agg = ActorFieldAggregate(actor="A", field="f1",
                                  level=Level.SUBJECT_CATEGORY, pub_count=1.0,
                                  oa_count=0.0, oa_by_type={t: 0.0 for t in OA_TYPES})
        base = WorldBaseline(field="f2", level=Level.SUBJECT_CATEGORY,
                             pub_count=1.0, oa_count=1.0,
                             oa_by_type={t: 0.0 for t in OA_TYPES})
        with pytest.raises(ValueError):
            normalized_share(agg, base)

    def test_undefined_fields_left_out_of_weighting(self, reg10):
        # Economics: world all closed (share undefined there); Sociology:
        # world 50% OA, actor 100%. The indicator must weight Sociology
        # alone, giving exactly its normalized share.
        corpus = [
            rec("r1", ("Economics",), countries=("A",)),
            rec("r2", ("Economics",)),
            rec("r3", ("Sociology",), statuses=(OAStatus.GOLD,), countries=("A",)),
            rec("r4", ("Sociology",)),
        ]
        result = aggregate(corpus, reg10, Level.SUBJECT_CATEGORY)
        cells = result.cells_by_actor()["A"]
        assert noai(cells, result.baselines) == pytest.approx(2.0, abs=1e-12)

    def test_indicator_undefined_when_no_field_qualifies(self, reg10):
        corpus = [rec("r1", ("Economics",), countries=("A",))]
        result = aggregate(corpus, reg10, Level.SUBJECT_CATEGORY)
        with pytest.raises(UndefinedIndicator):
            noai(result.cells_by_actor()["A"], result.baselines)


class TestYearlySeries:
    def test_single_year(self, reg10):
        corpus = [rec("r1", ("Economics",), statuses=(OAStatus.GOLD,), year=2017)]
        rows = yearly_series(corpus, reg10, Level.OST_DISCIPLINE)
        assert len(rows) == 1
        assert rows[0].year == 2017
        assert rows[0].total_share == pytest.approx(100.0)

    def test_all_closed_is_zero(self, reg10):
        corpus = [rec(f"r{i}", ("Economics",), year=2017) for i in range(5)]
        rows = yearly_series(corpus, reg10, Level.OST_DISCIPLINE)
        assert rows[0].total_share == 0.0
        assert all(v == 0.0 for v in rows[0].type_shares.values())

    def test_empty_years_omitted_and_sorted(self, reg10):
        corpus = [
            rec("r1", ("Economics",), year=2019),
            rec("r2", ("Economics",), year=2015),
        ]
        rows = yearly_series(corpus, reg10, Level.OST_DISCIPLINE)
        assert [r.year for r in rows] == [2015, 2019]

    def test_matches_per_year_oracle(self, reg10):
        corpus = random_corpus(seed=13, n_records=300)
        rows = yearly_series(corpus, REG10, Level.OST_DISCIPLINE)
        for row in rows:
            year_slice = [r for r in corpus if r.year == row.year]
            oracle = BruteForce(year_slice, REG10, Level.OST_DISCIPLINE)
            assert abs(row.total_share - float(oracle.world_oa_share())) <= TOL


class TestIndicatorTable:
    def test_matches_oracle_rows(self):
        corpus = random_corpus(seed=41, n_records=400)
        agg = Aggregator(REG10, (Level.SUBJECT_CATEGORY, Level.OST_DISCIPLINE))
        agg.add_all(corpus)
        results = agg.finish()
        table = build_indicator_table(results)
        oracle = BruteForce(corpus, REG10, Level.SUBJECT_CATEGORY)
        oracle_ost = BruteForce(corpus, REG10, Level.OST_DISCIPLINE)
        assert {r.actor for r in table.rows} == set(oracle.actors())
        for row in table.rows:
            assert abs(row.x_total - float(oracle.x_total(row.actor))) <= TOL
            assert abs(row.oa_share - float(oracle.oa_share(row.actor))) <= TOL
            for status in OA_TYPES:
                assert abs(row.oa_type_shares[status]
                           - float(oracle.type_share(row.actor, status))) <= TOL
            expected = oracle.noai(row.actor)
            got = row.noai[Level.SUBJECT_CATEGORY]
            if expected is None:
                assert got is None
            else:
                assert abs(got - float(expected)) <= TOL
            expected_ost = oracle_ost.noai(row.actor)
            got_ost = row.noai[Level.OST_DISCIPLINE]
            if expected_ost is None:
                assert got_ost is None
            else:
                assert abs(got_ost - float(expected_ost)) <= TOL
            assert row.n_oa_whole == oracle.whole_oa[row.actor]
            assert row.n_pubs_whole == oracle.whole_pubs[row.actor]

    def test_rows_sorted_by_size(self):
        corpus = random_corpus(seed=43, n_records=300)
        result = aggregate(corpus, REG10, Level.SUBJECT_CATEGORY)
        table = build_indicator_table({Level.SUBJECT_CATEGORY: result})
        sizes = [r.x_total for r in table.rows]
        assert sizes == sorted(sizes, reverse=True)

    def test_display_names_from_metadata(self, reg10):
        from noai.model import Actor
        corpus = [rec("r1", ("Economics",), statuses=(OAStatus.GOLD,),
                      countries=("FRA",))]
        result = aggregate(corpus, reg10, Level.SUBJECT_CATEGORY)
        meta = {"FRA": Actor(id="FRA", kind=ActorKind.COUNTRY,
                             display_name="France")}
        table = build_indicator_table({Level.SUBJECT_CATEGORY: result}, meta)
        assert table.rows[0].display_name == "France"

    def test_undefined_indicator_becomes_none(self, reg10):
        corpus = [rec("r1", ("Economics",), countries=("FRA",))]
        result = aggregate(corpus, reg10, Level.SUBJECT_CATEGORY)
        table = build_indicator_table({Level.SUBJECT_CATEGORY: result})
        assert table.rows[0].noai[Level.SUBJECT_CATEGORY] is None
