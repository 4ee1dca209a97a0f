"""Hourly household load profiles: CSV ingestion and a synthetic generator."""
from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HOURS_PER_DAY = 24
CSV_HEADER = ("hour_index", "load_wh")


class DataError(ValueError):
    pass


def _digest(values: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(values, dtype="<f8").tobytes()).hexdigest()


@dataclass(frozen=True)
class LoadProfile:
    hourly: np.ndarray
    source: str = "synthetic"
    digest: str = field(default="", compare=False)

    def __post_init__(self):
        values = np.array(self.hourly, dtype=np.float64)
        if values.ndim != 1 or values.size == 0 or values.size % HOURS_PER_DAY:
            raise DataError(f"load length {values.size} is not a positive multiple of 24")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise DataError("loads must be finite and non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "hourly", values)
        object.__setattr__(self, "digest", _digest(values))

    @property
    def day_count(self) -> int:
        return self.hourly.size // HOURS_PER_DAY

    def day(self, index: int) -> np.ndarray:
        if not 0 <= index < self.day_count:
            raise DataError(f"day {index} out of range 0..{self.day_count - 1}")
        return self.hourly[index * HOURS_PER_DAY:(index + 1) * HOURS_PER_DAY]

    def days(self, start: int, stop: int) -> "LoadProfile":
        return LoadProfile(self.hourly[start * HOURS_PER_DAY:stop * HOURS_PER_DAY], self.source)


def load_csv(path) -> LoadProfile:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"load profile not found: {path}")
    values = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataError(f"{path}: header must be {','.join(CSV_HEADER)}, got {header}")
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise DataError(f"{path}: row {row_no}: expected 2 columns, got {len(row)}")
            try:
                index, load = int(row[0]), float(row[1])
            except ValueError:
                raise DataError(f"{path}: row {row_no}: non-numeric cell in {row}") from None
            if index != len(values):
                raise DataError(
                    f"{path}: row {row_no}: hour_index {index}, expected {len(values)} (missing rows?)"
                )
            if not np.isfinite(load) or load < 0:
                raise DataError(f"{path}: row {row_no}: invalid load {row[1]!r}")
            values.append(load)
    if not values or len(values) % HOURS_PER_DAY:
        raise DataError(f"{path}: {len(values)} rows is not a positive multiple of 24")
    return LoadProfile(np.array(values), source="csv")


def write_csv(profile: LoadProfile, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for i, v in enumerate(profile.hourly):
            writer.writerow((i, repr(float(v))))
    return path


@dataclass(frozen=True)
class SyntheticSpec:
    """Flat base load plus an evening bump, with multiplicative uniform noise.

    ``peak_hours`` is a half-open hour range. Loads are rounded to whole Wh so
    battery energy stays on the oracle's 1 Wh grid.
    """

    base_load: float = 200.0
    evening_peak: float = 600.0
    peak_hours: tuple[int, int] = (18, 24)
    noise_frac: float = 0.1
    seed: int = 0
    days: int = 60

    def __post_init__(self):
        if self.base_load < 0 or self.evening_peak < 0:
            raise DataError("load magnitudes must be non-negative")
        if not 0 <= self.noise_frac < 1:
            raise DataError("noise_frac must be in [0, 1)")
        if self.days < 1:
            raise DataError("days must be >= 1")
        lo, hi = self.peak_hours
        if not 0 <= lo <= hi <= HOURS_PER_DAY:
            raise DataError(f"bad peak_hours {self.peak_hours}")


def generate(spec: SyntheticSpec) -> LoadProfile:
    hours = np.arange(HOURS_PER_DAY)
    lo, hi = spec.peak_hours
    shape = spec.base_load + spec.evening_peak * ((hours >= lo) & (hours < hi))
    loads = np.tile(shape, spec.days).astype(np.float64)
    if spec.noise_frac > 0:
        rng = np.random.default_rng(spec.seed)
        loads *= 1.0 + spec.noise_frac * rng.uniform(-1.0, 1.0, size=loads.size)
    return LoadProfile(np.round(loads), source="synthetic")


def constant_profile(load_wh: float, days: int = 1) -> LoadProfile:
    return LoadProfile(np.full(days * HOURS_PER_DAY, float(load_wh)), source="synthetic")


def split(profile: LoadProfile, train_days: int, test_days: int) -> tuple[LoadProfile, LoadProfile]:
    """Contiguous prefix for training, the following days for testing."""
    if train_days < 1 or test_days < 1:
        raise DataError("train and test splits each need at least one day")
    if train_days + test_days > profile.day_count:
        raise DataError(
            f"need {train_days + test_days} days, profile has {profile.day_count}"
        )
    return (
        profile.days(0, train_days),
        profile.days(train_days, train_days + test_days),
    )
