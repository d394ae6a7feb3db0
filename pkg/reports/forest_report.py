"""F1 and feature-importance reports for likelihood models."""

import pandas as pd

from models.forest import F1Report

TOTAL_ROW = "total"


def f1_frame(reports: dict[str, F1Report], baseline_seed: int | None = None) -> pd.DataFrame:
    """One row per class plus the weighted total, one column per predictor.

    With `baseline_seed`, every row also carries the seed of the weighted-random baseline.
    """
    classes = sorted({c for r in reports.values() for c in r.per_class})
    rows = []
    for label in [*classes, TOTAL_ROW]:
        row: dict[str, object] = {"class": label}
        for name, report in reports.items():
            row[name] = report.weighted if label == TOTAL_ROW else report.per_class.get(label, 0.0)
        rows.append(row)
    frame = pd.DataFrame(rows, columns=["class", *reports])
    if baseline_seed is not None:
        frame["baseline_seed"] = baseline_seed
    return frame


def importance_frame(importances: dict[str, float]) -> pd.DataFrame:
    """Features by decreasing Gini importance; ties keep feature order."""
    frame = pd.DataFrame({"feature": list(importances), "importance": list(importances.values())})
    return frame.sort_values("importance", ascending=False, kind="stable").reset_index(drop=True)


def render_frame(frame: pd.DataFrame) -> str:
    return frame.to_csv(index=False, float_format="%.6f")
