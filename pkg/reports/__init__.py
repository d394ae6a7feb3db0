"""Report rendering for Copter."""

from .forest_report import f1_frame, importance_frame, render_frame
from .sim_report import fuel_delay_frame, mode_share_frame, render_csv, render_table

__all__ = [
    "f1_frame",
    "importance_frame",
    "render_frame",
    "fuel_delay_frame",
    "mode_share_frame",
    "render_csv",
    "render_table",
]
