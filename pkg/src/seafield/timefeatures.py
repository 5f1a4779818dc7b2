"""Auxiliary time coordinates: time of day, day of week and a weekend flag."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

# 1970-01-01 was a Thursday; weekday index with Monday = 0
_EPOCH_WEEKDAY = 3


class AuxCoordinates(NamedTuple):
    time_of_day: float
    day_of_week: float
    weekend: int


def _as_seconds(timestamps) -> np.ndarray:
    return np.asarray(timestamps, dtype="datetime64[s]").astype(np.int64)


def coords_for_window(timestamps, weekend: bool = False) -> np.ndarray:
    """Coordinate matrix with columns (time_of_day, day_of_week[, weekend]).

    time_of_day is seconds since midnight / 86400 and day_of_week is the
    Monday-based weekday index / 7, so both lie in [0, 1).
    """
    seconds = _as_seconds(timestamps)
    days, second_of_day = np.divmod(seconds, 86400)
    weekday = (days + _EPOCH_WEEKDAY) % 7
    cols = [second_of_day / 86400.0, weekday / 7.0]
    if weekend:
        cols.append((weekday >= 5).astype(np.float64))
    return np.stack(cols, axis=-1)


def extract_coords(timestamp) -> AuxCoordinates:
    tod, dow, wkd = coords_for_window(np.array([timestamp], dtype="datetime64[s]"),
                                      weekend=True)[0]
    return AuxCoordinates(float(tod), float(dow), int(wkd))
