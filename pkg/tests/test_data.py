import numpy as np
import pytest

from storage_dqn.data import (
    DataError, LoadProfile, SyntheticSpec, constant_profile, generate, load_csv, split, write_csv,
)


def _write(path, rows):
    path.write_text("hour_index,load_wh\n" + "".join(f"{i},{v}\n" for i, v in enumerate(rows)))
    return path


def test_load_csv_30_days(tmp_path):
    profile = load_csv(_write(tmp_path / "l.csv", [250.0] * 720))
    assert profile.day_count == 30
    assert profile.day(3).shape == (24,)


def test_negative_load_row_reported(tmp_path):
    rows = [100.0] * 48
    rows[30] = -5
    with pytest.raises(DataError, match="row"):
        load_csv(_write(tmp_path / "l.csv", rows))


def test_partial_day_rejected(tmp_path):
    with pytest.raises(DataError):
        load_csv(_write(tmp_path / "l.csv", [1.0] * 25))


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "absent.csv")


def test_csv_round_trip(tmp_path):
    profile = generate(SyntheticSpec(days=3, seed=4))
    again = load_csv(write_csv(profile, tmp_path / "p.csv"))
    np.testing.assert_array_equal(again.hourly, profile.hourly)
    assert again.digest == profile.digest


def test_generate_is_deterministic_and_whole_wh():
    a = generate(SyntheticSpec(seed=1, days=5))
    b = generate(SyntheticSpec(seed=1, days=5))
    c = generate(SyntheticSpec(seed=2, days=5))
    np.testing.assert_array_equal(a.hourly, b.hourly)
    assert not np.array_equal(a.hourly, c.hourly)
    np.testing.assert_array_equal(a.hourly, np.round(a.hourly))
    assert a.hourly.min() >= 0


def test_generated_evening_peak():
    p = generate(SyntheticSpec(noise_frac=0.0, days=1))
    assert p.hourly[19] == 800 and p.hourly[3] == 200


def test_split_60_days():
    train, test = split(constant_profile(300, 60), 30, 30)
    assert train.day_count == 30 and test.day_count == 30


def test_split_too_short():
    with pytest.raises(DataError):
        split(constant_profile(300, 10), 8, 8)
    with pytest.raises(DataError):
        split(constant_profile(300, 10), 0, 5)


def test_profile_rejects_nan():
    with pytest.raises(DataError):
        LoadProfile(np.array([np.nan] * 24))
