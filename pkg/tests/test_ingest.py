"""CSV parsing, window aggregation, reporting round trips, rounding rules."""
import datetime
import io
import json
from fractions import Fraction

import pytest
from numpy.testing import assert_allclose

from conftest import DATA_DIR
from safelevel.classify import Category, Decision
from safelevel.ingest import (
    ACCIDENT_HEADER,
    AccidentRecord,
    ComparisonResult,
    EXPOSURE_HEADER,
    ExposureRecord,
    FATALITY_INJURY_CORRELATIONS,
    IngestError,
    ReportBundle,
    aggregate,
    aggregate_detail,
    emit_accidents_csv,
    emit_exposures_csv,
    emit_report,
    format_fixed,
    load_report,
    parse_accidents,
    parse_exposures,
    pearson_correlation,
    round_half_up,
)

D = datetime.date


class TestRounding:
    @pytest.mark.parametrize("value,decimals,expected", [
        (0.5, 0, 1.0),
        (2.5, 0, 3.0),      # ties go up, not to even
        (-0.5, 0, -1.0),    # away from zero
        (3.5, 0, 4.0),
        (2.45, 1, 2.5),
        (0.0285, 3, 0.029),
        (0.104, 3, 0.104),
        (1.0, 2, 1.0),
    ])
    def test_round_half_up(self, value, decimals, expected):
        assert round_half_up(value, decimals) == expected

    @pytest.mark.parametrize("value,decimals,expected", [
        (0.2, 3, "0.200"),
        (0.1035, 3, "0.104"),
        (0.0856414, 2, "0.09"),
        (1.0, 3, "1.000"),
        (0.0005, 3, "0.001"),
    ])
    def test_format_fixed(self, value, decimals, expected):
        assert format_fixed(value, decimals) == expected

    def test_rounds_the_printed_value_not_the_binary_one(self):
        # repr(2.675) is '2.675' even though the stored double is slightly
        # below; the rule follows the printed digits
        assert round_half_up(2.675, 2) == 2.68


class TestRecordValidation:
    def test_accident_ok(self):
        r = AccidentRecord(D(2020, 1, 1), "OP1", "collision", 1, 2)
        assert r.fatalities == 1

    @pytest.mark.parametrize("kwargs,msg", [
        ({"date": "2020-01-01"}, "date must be a calendar date"),
        ({"operator": ""}, "operator must be non-empty"),
        ({"category": ""}, "category must be non-empty"),
        ({"fatalities": -1}, "fatalities must be a non-negative integer"),
        ({"serious_injuries": 1.5}, "serious_injuries must be a non-negative integer"),
    ])
    def test_accident_invalid(self, kwargs, msg):
        base = dict(date=D(2020, 1, 1), operator="OP1", category="collision",
                    fatalities=0, serious_injuries=0)
        base.update(kwargs)
        with pytest.raises(ValueError, match=msg):
            AccidentRecord(**base)

    def test_exposure_ok(self):
        r = ExposureRecord("OP1", D(2020, 1, 1), D(2021, 1, 1), 1.5, "train-years")
        assert r.volume == 1.5

    @pytest.mark.parametrize("kwargs,msg", [
        ({"period_end": D(2020, 1, 1)}, "period_end must follow period_start"),
        ({"volume": 0.0}, "volume must be a positive finite number"),
        ({"volume": float("nan")}, "volume must be a positive finite number"),
        ({"operator": ""}, "operator must be non-empty"),
    ])
    def test_exposure_invalid(self, kwargs, msg):
        base = dict(operator="OP1", period_start=D(2020, 1, 1),
                    period_end=D(2021, 1, 1), volume=1.0, unit="train-years")
        base.update(kwargs)
        with pytest.raises(ValueError, match=msg):
            ExposureRecord(**base)


class TestParsing:
    def test_accidents_from_fixture_path(self):
        records = parse_accidents(DATA_DIR / "accidents.csv")
        assert len(records) == 6
        assert records[0] == AccidentRecord(D(2020, 6, 15), "OP1", "level-crossing", 2, 1)

    def test_exposures_from_fixture_path(self):
        records = parse_exposures(DATA_DIR / "exposure.csv")
        assert len(records) == 5
        assert records[0].unit == "train-years"

    def test_from_bytes_and_stream(self):
        text = ("date,operator,category,fatalities,serious_injuries\n"
                "2020-01-05,OP9,collision,1,0\n")
        for source in (text.encode(), io.BytesIO(text.encode()), io.StringIO(text)):
            records = parse_accidents(source)
            assert len(records) == 1
            assert records[0].operator == "OP9"

    def test_blank_lines_tolerated(self):
        text = ("date,operator,category,fatalities,serious_injuries\n\n"
                "2020-01-05,OP9,collision,1,0\n\n")
        assert len(parse_accidents(text.encode())) == 1

    def test_missing_header(self):
        with pytest.raises(IngestError, match="missing header"):
            parse_accidents(b"")

    def test_wrong_header(self):
        with pytest.raises(IngestError, match="bad header"):
            parse_accidents(b"when,operator,category,fatalities,serious_injuries\n")

    def test_duplicate_header_columns(self):
        with pytest.raises(IngestError, match=r"duplicate header column\(s\): date"):
            parse_accidents(b"date,date,category,fatalities,serious_injuries\n")

    def test_all_row_errors_collected_with_line_numbers(self):
        text = ("date,operator,category,fatalities,serious_injuries\n"
                "2020-01-05,OP9,collision,1,0\n"       # line 2, ok
                "not-a-date,OP9,collision,1,0\n"       # line 3
                "2020-01-07,OP9,collision,many,0\n"    # line 4
                "2020-01-08,OP9,collision,1\n")        # line 5, short row
        with pytest.raises(IngestError) as err:
            parse_accidents(text.encode())
        assert [ln for ln, _ in err.value.row_errors] == [3, 4, 5]
        assert "line 3: date must be an ISO-8601 date" in str(err.value)
        assert "line 4: fatalities must be an integer" in str(err.value)
        assert "line 5: expected 5 fields, got 4" in str(err.value)

    def test_exposure_row_errors(self):
        text = ("operator,period_start,period_end,volume,unit\n"
                "OP1,2020-01-01,2019-01-01,1.0,train-years\n"
                "OP1,2020-01-01,2021-01-01,zero,train-years\n")
        with pytest.raises(IngestError) as err:
            parse_exposures(text.encode())
        assert [ln for ln, _ in err.value.row_errors] == [2, 3]
        assert "volume must be a number" in str(err.value)

    def test_bad_source_type(self):
        with pytest.raises(TypeError, match="expected a path or stream"):
            parse_accidents(42)


class TestEmitRoundTrip:
    def test_accidents(self):
        records = parse_accidents(DATA_DIR / "accidents.csv")
        assert parse_accidents(emit_accidents_csv(records)) == records

    def test_exposures_preserve_volume_exactly(self):
        records = [
            ExposureRecord("OP1", D(2020, 1, 1), D(2021, 1, 1),
                           0.1 + 0.2, "train-years"),  # 0.30000000000000004
            ExposureRecord("OP2", D(2020, 1, 1), D(2021, 1, 1), 2.0, "train-km"),
        ]
        back = parse_exposures(emit_exposures_csv(records))
        assert back == records
        assert back[0].volume == 0.1 + 0.2

    def test_emitted_header(self):
        assert emit_accidents_csv([]).decode().strip() == ",".join(ACCIDENT_HEADER)
        assert emit_exposures_csv([]).decode().strip() == ",".join(EXPOSURE_HEADER)


def _exposure(operator="OP1", start=D(2016, 1, 1), end=D(2021, 1, 1), volume=5.0):
    return ExposureRecord(operator, start, end, volume, "train-years")


def _accident(date, operator="OP1", category="collision", fatalities=0, injuries=0):
    return AccidentRecord(date, operator, category, fatalities, injuries)


class TestAggregation:
    def test_fixture_events(self):
        records = parse_accidents(DATA_DIR / "accidents.csv")
        exposures = parse_exposures(DATA_DIR / "exposure.csv")
        detail = aggregate_detail(records, exposures,
                                  (D(2017, 1, 1), D(2019, 1, 1)), "OP2")
        assert detail.window.events == 2
        # 365 of the 731 days of 2016-2018 (leap year) plus half of 2018-2020
        assert detail.exposure_exact == Fraction(2 * 365, 731) + 1

    def test_window_is_half_open(self):
        records = [
            _accident(D(2020, 1, 1)),   # on the start: included
            _accident(D(2020, 6, 1)),
            _accident(D(2021, 1, 1)),   # on the end: excluded
        ]
        window = aggregate(records, [_exposure()], (D(2020, 1, 1), D(2021, 1, 1)), "OP1")
        assert window.events == 2

    def test_category_filter(self):
        records = [
            _accident(D(2020, 2, 1), category="collision"),
            _accident(D(2020, 3, 1), category="derailment"),
        ]
        window = aggregate(records, [_exposure()], (D(2020, 1, 1), D(2021, 1, 1)),
                           "OP1", category="derailment")
        assert window.events == 1

    def test_operator_filter_and_empty_window(self):
        records = [_accident(D(2020, 2, 1), operator="OP2")]
        window = aggregate(records, [_exposure()], (D(2020, 1, 1), D(2021, 1, 1)), "OP1")
        assert window.events == 0
        assert window.exposure > 0

    def test_fatalities_basis(self):
        records = [
            _accident(D(2020, 2, 1), fatalities=2),
            _accident(D(2020, 3, 1), fatalities=1),
        ]
        window = aggregate(records, [_exposure()], (D(2020, 1, 1), D(2021, 1, 1)),
                           "OP1", basis="fatalities")
        assert window.events == 3

    def test_fwsi_basis(self):
        # 1 + 0.1 * 5 = 1.5 and 2 + 0 = 2: raw 3.5, rounded half-up to 4
        records = [
            _accident(D(2020, 2, 1), fatalities=1, injuries=5),
            _accident(D(2020, 3, 1), fatalities=2, injuries=0),
        ]
        detail = aggregate_detail(records, [_exposure()],
                                  (D(2020, 1, 1), D(2021, 1, 1)), "OP1", basis="fwsi")
        assert detail.raw_total == 3.5
        assert detail.window.events == 4
        assert detail.fwsi_weight == 0.1
        assert detail.matched_records == 2

    def test_fwsi_weight_zero_is_fatalities(self):
        records = [
            _accident(D(2020, 2, 1), fatalities=1, injuries=7),
            _accident(D(2020, 3, 1), fatalities=2, injuries=3),
        ]
        fwsi = aggregate(records, [_exposure()], (D(2020, 1, 1), D(2021, 1, 1)),
                         "OP1", basis="fwsi", fwsi_weight=0.0)
        fatal = aggregate(records, [_exposure()], (D(2020, 1, 1), D(2021, 1, 1)),
                          "OP1", basis="fatalities")
        assert fwsi.events == fatal.events

    def test_exposure_prorated_exactly(self):
        # 2 volume units over 2019-2021 (731 days); one year's window takes
        # exactly 366/731 of it
        exposures = [_exposure(start=D(2019, 1, 1), end=D(2021, 1, 1), volume=2.0)]
        detail = aggregate_detail([], exposures, (D(2020, 1, 1), D(2021, 1, 1)), "OP1")
        assert detail.exposure_exact == Fraction(2) * Fraction(366, 731)
        assert detail.window.exposure == float(Fraction(732, 731))

    def test_adjacent_windows_partition_exposure(self):
        exposures = [
            _exposure(start=D(2016, 1, 1), end=D(2020, 1, 1), volume=4.0),
            _exposure(start=D(2020, 1, 1), end=D(2021, 1, 1), volume=1.0),
        ]
        records = [_accident(D(2018, 2, 1)), _accident(D(2020, 2, 1))]
        left = aggregate_detail(records, exposures, (D(2016, 1, 1), D(2019, 1, 1)), "OP1")
        right = aggregate_detail(records, exposures, (D(2019, 1, 1), D(2021, 1, 1)), "OP1")
        both = aggregate_detail(records, exposures, (D(2016, 1, 1), D(2021, 1, 1)), "OP1")
        assert left.window.events + right.window.events == both.window.events
        # exact rational exposures add with no rounding at all
        assert left.exposure_exact + right.exposure_exact == both.exposure_exact

    def test_unknown_operator(self):
        with pytest.raises(IngestError, match="no exposure records for operator 'OP9'"):
            aggregate([], [_exposure()], (D(2020, 1, 1), D(2021, 1, 1)), "OP9")

    def test_coverage_gap_names_the_gap(self):
        exposures = [
            _exposure(start=D(2016, 1, 1), end=D(2018, 1, 1)),
            _exposure(start=D(2019, 1, 1), end=D(2021, 1, 1)),
        ]
        with pytest.raises(IngestError, match="uncovered from 2018-01-01"):
            aggregate([], exposures, (D(2016, 1, 1), D(2021, 1, 1)), "OP1")

    def test_window_validation(self):
        with pytest.raises(ValueError, match="window end must follow start"):
            aggregate([], [_exposure()], (D(2021, 1, 1), D(2020, 1, 1)), "OP1")
        with pytest.raises(ValueError, match="basis must be"):
            aggregate([], [_exposure()], (D(2020, 1, 1), D(2021, 1, 1)), "OP1",
                      basis="losses")
        with pytest.raises(ValueError, match="fwsi_weight must be"):
            aggregate([], [_exposure()], (D(2020, 1, 1), D(2021, 1, 1)), "OP1",
                      basis="fwsi", fwsi_weight=-0.1)


class TestPearsonCorrelation:
    def test_perfect_positive(self):
        assert_allclose(pearson_correlation([1, 2, 3], [2, 4, 6]), 1.0, rtol=1e-15)

    def test_perfect_negative(self):
        assert_allclose(pearson_correlation([1, 2, 3], [6, 4, 2]), -1.0, rtol=1e-15)

    def test_known_value(self):
        assert_allclose(pearson_correlation([1, 2, 3], [1, 2, 4]),
                        0.9819805060619657, rtol=1e-12)

    def test_affine_invariance(self):
        xs = [0.3, 1.9, 2.2, 5.0, 4.1]
        ys = [1.0, 0.7, 2.5, 3.3, 2.9]
        base = pearson_correlation(xs, ys)
        shifted = pearson_correlation([3.0 * x - 7.0 for x in xs], ys)
        assert_allclose(shifted, base, rtol=1e-12)

    def test_antisymmetry(self):
        xs = [0.3, 1.9, 2.2, 5.0]
        ys = [1.0, 0.7, 2.5, 3.3]
        assert_allclose(pearson_correlation(xs, [-y for y in ys]),
                        -pearson_correlation(xs, ys), rtol=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError, match="length mismatch"):
            pearson_correlation([1, 2], [1, 2, 3])
        with pytest.raises(ValueError, match="at least two points"):
            pearson_correlation([1], [1])
        with pytest.raises(ValueError, match="constant series"):
            pearson_correlation([1, 1, 1], [1, 2, 3])


def test_published_correlations_are_sane():
    assert set(FATALITY_INJURY_CORRELATIONS) == {
        "total", "passenger", "level_crossing_user", "other"}
    assert all(0.0 < v <= 1.0 for v in FATALITY_INJURY_CORRELATIONS.values())


def _comparison(label="OP1 2016-2020 vs 2020", statistic=0.2,
                category=Category.POTENTIAL_DETERIORATION, extras=()):
    return ComparisonResult(
        label=label,
        method="rate-ratio",
        reference_events=0,
        reference_exposure=4.0,
        target_events=1,
        target_exposure=1.0,
        statistic_kind="p_one_sided",
        statistic=statistic,
        decision=Decision(category, source="p_one_sided"),
        extras=tuple(extras),
    )


class TestReportBundle:
    def test_json_round_trip_is_identity(self):
        bundle = ReportBundle(
            comparisons=(
                _comparison(extras=(("null_ratio", 1.0), ("p_two_sided", 0.4))),
                _comparison(label="fatalities", statistic=0.04,
                            category=Category.PROBABLE_DETERIORATION),
            ),
            fwsi_weight=0.1,
        )
        assert load_report(emit_report(bundle, "json")) == bundle

    def test_extras_keep_their_order(self):
        bundle = ReportBundle(
            comparisons=(_comparison(extras=(("zeta", 2.0), ("alpha", 1.0))),))
        doc = json.loads(emit_report(bundle, "json"))
        assert list(doc["comparisons"][0]["extras"]) == ["zeta", "alpha"]
        back = load_report(emit_report(bundle, "json"))
        assert back.comparisons[0].extras == (("zeta", 2.0), ("alpha", 1.0))

    def test_text_rendering(self):
        bundle = ReportBundle(comparisons=(_comparison(),))
        text = emit_report(bundle, "text").decode()
        assert text.startswith("safety level assessment (schema v1)\n")
        assert "p_one_sided: * 0.200" in text
        assert "decision: PotentialDeterioration" in text
        assert "reference: 0 events / exposure 4" in text

    def test_text_marker_absent_for_no_deterioration(self):
        bundle = ReportBundle(
            comparisons=(_comparison(statistic=0.9,
                                     category=Category.NO_DETERIORATION),))
        text = emit_report(bundle, "text").decode()
        assert "p_one_sided: 0.900" in text

    def test_empty_bundle(self):
        bundle = ReportBundle()
        assert "no comparisons" in emit_report(bundle, "text").decode()
        assert load_report(emit_report(bundle, "json")) == bundle

    def test_csv_rendering(self):
        import csv as csv_module
        bundle = ReportBundle(comparisons=(_comparison(),))
        rows = list(csv_module.reader(io.StringIO(emit_report(bundle, "csv").decode())))
        assert rows[0][:3] == ["label", "method", "reference_events"]
        assert len(rows) == 2
        # full-precision floats survive a csv round trip
        assert float(rows[1][7]) == 0.2

    def test_version_gate(self):
        with pytest.raises(ValueError, match="unsupported report version 2"):
            load_report(json.dumps({"spec_version": 2, "comparisons": []}))
        with pytest.raises(ValueError, match="unsupported report version None"):
            load_report(json.dumps({"comparisons": []}))

    def test_unknown_format(self):
        with pytest.raises(ValueError, match="format must be text, json, or csv"):
            emit_report(ReportBundle(), "yaml")
