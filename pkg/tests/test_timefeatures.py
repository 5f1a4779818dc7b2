import datetime as dt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from seafield.timefeatures import coords_for_window, extract_coords


def test_monday_midnight():
    assert extract_coords("2012-03-05T00:00") == (0.0, 0.0, 0)


def test_noon():
    assert extract_coords("2012-03-07T12:00").time_of_day == 0.5


def test_calendar_oracle():
    stamp = dt.datetime(2012, 3, 1, 8, 30)
    c = extract_coords(np.datetime64(stamp))
    assert c.day_of_week == stamp.weekday() / 7 == 3 / 7
    assert c.time_of_day == (stamp.hour * 60 + stamp.minute) / 1440


def test_window_from_monday():
    stamps = np.datetime64("2012-03-05T00:00") + np.arange(12) * np.timedelta64(5, "m")
    coords = coords_for_window(stamps)
    assert coords.shape == (12, 2)
    np.testing.assert_allclose(coords[:, 0], np.arange(12) * 5 / 1440)
    assert np.all(coords[:, 1] == 0)


def test_window_over_sunday_midnight():
    stamps = np.datetime64("2012-03-04T23:45") + np.arange(6) * np.timedelta64(5, "m")
    dows = coords_for_window(stamps)[:, 1]
    expected = [dt.datetime.fromisoformat(str(s)).weekday() / 7 for s in stamps]
    assert dows.tolist() == expected
    assert dows[0] == 6 / 7 and dows[-1] == 0


def test_weekend_flag_flips_friday_night():
    stamps = np.datetime64("2012-03-09T23:50") + np.arange(4) * np.timedelta64(5, "m")
    coords = coords_for_window(stamps, weekend=True)
    assert coords[:, 2].tolist() == [0, 0, 1, 1]


@given(st.datetimes(min_value=dt.datetime(1990, 1, 1), max_value=dt.datetime(2040, 1, 1)))
def test_weekly_periodicity_and_range(stamp):
    stamp = stamp.replace(microsecond=0)
    a = extract_coords(np.datetime64(stamp))
    b = extract_coords(np.datetime64(stamp + dt.timedelta(days=7)))
    assert a == b
    assert 0 <= a.time_of_day < 1 and 0 <= a.day_of_week < 1
    assert a.weekend == (stamp.weekday() >= 5)
    assert a.day_of_week * 7 == pytest.approx(stamp.weekday())


def test_time_of_day_slope():
    stamps = np.datetime64("2013-01-01T00:00") + np.arange(1440) * np.timedelta64(1, "m")
    np.testing.assert_allclose(np.diff(coords_for_window(stamps)[:, 0]), 1 / 1440)
