"""Utils package for Copter."""

from .errors import CopterError, DataError
from .helpers import (
    derive_seeds,
    dumps_canonical,
    format_clock,
    haversine_m,
    person_rng,
    read_json,
    write_json,
)

__all__ = [
    "CopterError",
    "DataError",
    "haversine_m",
    "format_clock",
    "derive_seeds",
    "person_rng",
    "dumps_canonical",
    "write_json",
    "read_json",
]
