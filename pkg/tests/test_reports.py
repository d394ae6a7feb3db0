"""Tests for report frames and rendering."""

from models.forest import F1Report
from models.simulation import Condition, MetricComparison, PeriodWindow, SimReport
from reports import f1_frame, importance_frame, mode_share_frame, render_csv, render_table


def _report():
    comparison = MetricComparison(
        metric="fuel_l",
        condition=Condition.INFLUENCE,
        baseline_mean=100.0,
        comparison_mean=95.0,
        change_pct=-5.0,
        difference=5.0,
        ci_low=4.0,
        ci_high=6.0,
        change_ci_low_pct=-6.0,
        change_ci_high_pct=-4.0,
    )
    return SimReport(
        scenario="unit",
        seed=1,
        n_trials=2,
        period=PeriodWindow.named("am"),
        trials=(),
        means={"baseline": {"fuel_l": 100.0}, "influence": {"fuel_l": 95.0}},
        comparisons=(comparison,),
        mode_share_pct={"influence": {"bus": 40.0, "walk": 70.0}},
    )


def test_f1_frame_adds_total_row():
    reports = {
        "forest": F1Report(per_class={"d": 0.9, "w": 0.5}, support={"d": 3, "w": 1}, weighted=0.8),
        "most_frequent": F1Report(per_class={"d": 0.857}, support={"d": 3}, weighted=0.64),
    }

    frame = f1_frame(reports)

    assert list(frame.columns) == ["class", "forest", "most_frequent"]
    assert list(frame["class"]) == ["d", "w", "total"]
    assert frame.loc[1, "most_frequent"] == 0.0
    assert frame.loc[2, "forest"] == 0.8


def test_f1_frame_records_the_baseline_seed():
    reports = {"forest": F1Report(per_class={"d": 1.0}, support={"d": 2}, weighted=1.0)}

    frame = f1_frame(reports, baseline_seed=11)

    assert list(frame.columns) == ["class", "forest", "baseline_seed"]
    assert list(frame["baseline_seed"]) == [11, 11]


def test_importance_frame_is_sorted():
    frame = importance_frame({"a": 0.1, "b": 0.6, "c": 0.3})

    assert list(frame["feature"]) == ["b", "c", "a"]


def test_mode_shares_may_exceed_one_hundred_percent():
    frame = mode_share_frame(_report())

    assert frame["share_pct"].sum() == 110.0


def test_table_and_csv_rendering():
    report = _report()

    table = render_table(report)
    csv_text = render_csv(report)

    assert "Scenario unit (seed 1, 2 trials per condition, period am 07:00:00-10:00:00)" in table
    assert "-5.00%" in table
    assert csv_text.splitlines()[1].startswith("fuel_delay,influence,Total Fuel (l),")
    assert sum(line.startswith("mode_share,") for line in csv_text.splitlines()) == 2
