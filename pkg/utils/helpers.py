"""Helper functions shared by planning and simulation services."""

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

EARTH_RADIUS_M = 6_371_008.8
METERS_PER_MILE = 1609.34


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance between two WGS84 points in meters."""
    phi1, phi2 = math.radians(lat1), math.radians(lat2)
    dphi = phi2 - phi1
    dlam = math.radians(lon2 - lon1)
    a = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    return 2 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(a)))


def format_clock(seconds: float | None) -> str:
    """Format seconds since midnight as HH:MM:SS (hours may exceed 23)."""
    if seconds is None or seconds < 0:
        return "Unknown"

    total = int(round(seconds))
    hours = total // 3600
    minutes = (total % 3600) // 60
    secs = total % 60
    return f"{hours:02d}:{minutes:02d}:{secs:02d}"


def derive_seeds(seed: int, count: int) -> list[int]:
    """Derive `count` independent 32-bit seeds from a parent seed."""
    if count <= 0:
        return []
    state = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint32)
    return [int(s) for s in state]


def person_rng(trial_seed: int, person_seed: int) -> np.random.Generator:
    """Random stream owned by one traveler within one trial."""
    return np.random.default_rng([trial_seed, person_seed])


def dumps_canonical(payload: Any) -> str:
    """Serialize JSON deterministically so repeated runs are byte-identical."""
    return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_json(path: Path, payload: Any) -> None:
    """Write canonical JSON to a file, creating parent directories."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_canonical(payload), encoding="utf-8")


def read_json(path: Path) -> Any:
    """Read a JSON document from disk."""
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)
