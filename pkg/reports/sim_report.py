"""Fuel/delay and mode-share sections of a simulation report."""

import pandas as pd
from tabulate import tabulate

from models.simulation import SimReport
from utils.helpers import format_clock

METRIC_LABELS = {
    "fuel_l": "Total Fuel (l)",
    "delay_hr": "Total Delay (hr)",
}


def fuel_delay_frame(report: SimReport) -> pd.DataFrame:
    """Per comparison condition and metric: means, percent change and Welch 95% intervals."""
    rows = [
        {
            "condition": c.condition.value,
            "metric": METRIC_LABELS.get(c.metric, c.metric),
            "baseline_mean": c.baseline_mean,
            "comparison_mean": c.comparison_mean,
            "change_pct": c.change_pct,
            "difference": c.difference,
            "ci_low": c.ci_low,
            "ci_high": c.ci_high,
            "change_ci_low_pct": c.change_ci_low_pct,
            "change_ci_high_pct": c.change_ci_high_pct,
        }
        for c in report.comparisons
    ]
    return pd.DataFrame(rows, columns=[
        "condition", "metric", "baseline_mean", "comparison_mean", "change_pct",
        "difference", "ci_low", "ci_high", "change_ci_low_pct", "change_ci_high_pct",
    ])


def mode_share_frame(report: SimReport) -> pd.DataFrame:
    """Share of the influenced population that used each mode; shares may exceed 100% in total."""
    rows = [
        {"condition": condition, "mode": mode, "share_pct": share}
        for condition, shares in report.mode_share_pct.items()
        for mode, share in shares.items()
    ]
    return pd.DataFrame(rows, columns=["condition", "mode", "share_pct"])


def render_table(report: SimReport) -> str:
    """Human-readable report with both sections."""
    period = f"{report.period.name} {format_clock(report.period.start_s)}-{format_clock(report.period.end_s)}"
    fuel = fuel_delay_frame(report)
    fuel_rows = [
        [
            r.condition,
            r.metric,
            r.baseline_mean,
            r.comparison_mean,
            f"{r.change_pct:+.2f}%",
            f"[{r.ci_low:.3f}, {r.ci_high:.3f}]",
            f"[{r.change_ci_low_pct:+.2f}%, {r.change_ci_high_pct:+.2f}%]",
        ]
        for r in fuel.itertuples(index=False)
    ]
    shares = mode_share_frame(report)
    share_rows = [[r.condition, r.mode, f"{r.share_pct:.1f}%"] for r in shares.itertuples(index=False)]

    lines = [
        f"Scenario {report.scenario} (seed {report.seed}, {report.n_trials} trials per condition, period {period})",
        "",
        tabulate(
            fuel_rows,
            headers=["Condition", "Metric", "Baseline", "Comparison", "Change", "95% CI (baseline - comparison)", "95% CI change"],
            tablefmt="github",
            floatfmt=".3f",
        ),
        "",
        tabulate(share_rows, headers=["Condition", "Mode", "Share of influenced"], tablefmt="github"),
    ]
    return "\n".join(lines) + "\n"


def render_csv(report: SimReport) -> str:
    """Both sections stacked into one CSV with a `section` column."""
    fuel = fuel_delay_frame(report)
    fuel.insert(0, "section", "fuel_delay")
    shares = mode_share_frame(report)
    shares.insert(0, "section", "mode_share")
    return pd.concat([fuel, shares], ignore_index=True).to_csv(index=False, float_format="%.6f")
