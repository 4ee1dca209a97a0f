"""Time-of-day price schedules and demand-response penalty settings."""
from __future__ import annotations

import re
import shlex
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

HOURS_PER_DAY = 24
DR_MODES = ("per_interval", "daily_cumulative")


class TariffError(ValueError):
    """Raised for malformed schedules, unknown builtins or bad hours."""


@dataclass(frozen=True)
class TariffSchedule:
    """Piecewise-constant hourly price, ``base_price + adder`` per slot.

    ``slots`` holds half-open ``(start_hour, end_hour, adder)`` intervals. A slot
    whose start is after its end (``(22, 6, -0.75)``) wraps midnight and is
    split into two intervals on construction.
    """

    slots: tuple = ()
    base_price: float = 0.0
    _hourly: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        split = []
        for start, end, adder in self.slots:
            start, end, adder = int(start), int(end), float(adder)
            if start > end:
                split.append((start, HOURS_PER_DAY, adder))
                if end > 0:
                    split.append((0, end, adder))
            else:
                split.append((start, end, adder))
        split.sort(key=lambda s: (s[0], s[1]))
        object.__setattr__(self, "slots", tuple(split))
        object.__setattr__(self, "base_price", float(self.base_price))
        if not self.validate():
            prices = np.empty(HOURS_PER_DAY)
            for start, end, adder in self.slots:
                prices[start:end] = self.base_price + adder
            prices.setflags(write=False)
            object.__setattr__(self, "_hourly", prices)

    def validate(self) -> list[str]:
        """Return a list of human-readable violations; empty means valid."""
        problems = []
        cover = np.zeros(HOURS_PER_DAY, dtype=int)
        for start, end, adder in self.slots:
            if not (0 <= start < end <= HOURS_PER_DAY):
                problems.append(f"slot ({start}, {end}) outside [0, 24) or empty")
                continue
            cover[start:end] += 1
            if self.base_price + adder < 0:
                problems.append(
                    f"slot [{start}, {end}) has negative effective price {self.base_price + adder:g}"
                )
        for hour in range(HOURS_PER_DAY):
            if cover[hour] == 0:
                problems.append(f"gap: hour {hour} not covered")
            elif cover[hour] > 1:
                problems.append(f"overlap: hour {hour} covered by {cover[hour]} slots")
        return problems

    @property
    def valid(self) -> bool:
        return self._hourly is not None

    def hourly_prices(self) -> np.ndarray:
        """Read-only array of the 24 effective hourly prices."""
        if self._hourly is None:
            raise TariffError("invalid schedule: " + "; ".join(self.validate()))
        return self._hourly

    def price_at(self, hour: int) -> float:
        if not isinstance(hour, (int, np.integer)) or not 0 <= hour < HOURS_PER_DAY:
            raise TariffError(f"hour must be an integer in 0..23, got {hour!r}")
        return float(self.hourly_prices()[hour])

    def slot_of(self, hour: int) -> tuple[int, int]:
        for start, end, _ in self.slots:
            if start <= hour < end:
                return start, end
        raise TariffError(f"hour {hour} not covered")

    def price_slots(self) -> list[tuple[int, int, float]]:
        """Maximal runs of equal price, merging the halves of a wrapped slot."""
        prices = self.hourly_prices()
        runs = []
        start = 0
        for hour in range(1, HOURS_PER_DAY + 1):
            if hour == HOURS_PER_DAY or prices[hour] != prices[start]:
                runs.append((start, hour, float(prices[start])))
                start = hour
        return runs


def price_at(schedule: TariffSchedule, hour: int) -> float:
    return schedule.price_at(hour)


def validate(schedule: TariffSchedule) -> list[str]:
    return schedule.validate()


TABLE1 = TariffSchedule(slots=((0, 8, 1.0), (8, 16, 3.0), (16, 24, 2.0)), base_price=0.0)
TATA = TariffSchedule(
    slots=((6, 9, 0.0), (9, 12, 0.5), (12, 18, 0.0), (18, 22, 1.0), (22, 6, -0.75)),
    base_price=5.0,
)
BUILTINS = {"table1": TABLE1, "tata": TATA}


def builtin_schedule(name: str) -> TariffSchedule:
    try:
        return BUILTINS[name]
    except KeyError:
        raise TariffError(f"unknown tariff {name!r}; choose from {sorted(BUILTINS)}") from None


def flat_schedule(price: float) -> TariffSchedule:
    return TariffSchedule(slots=((0, HOURS_PER_DAY, float(price)),), base_price=0.0)


_LINE = re.compile(r"^\s*([A-Za-z_][\w.]*)\s*=\s*(.*?)\s*$")


def parse_schedule(text: str) -> TariffSchedule:
    """Parse ``slot = "start,end,adder"`` lines (repeatable) and ``base_price``."""
    slots, base = [], 0.0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise TariffError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = m.group(1), " ".join(shlex.split(m.group(2)))
        try:
            if key == "slot":
                start, end, adder = (v.strip() for v in value.split(","))
                slots.append((int(start), int(end), float(adder)))
            elif key == "base_price":
                base = float(value)
            else:
                raise TariffError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, TariffError):
                raise
            raise TariffError(f"line {lineno}: cannot parse {raw!r}") from exc
    schedule = TariffSchedule(slots=tuple(slots), base_price=base)
    problems = schedule.validate()
    if problems:
        raise TariffError("invalid schedule: " + "; ".join(problems))
    return schedule


def load_schedule(path) -> TariffSchedule:
    return parse_schedule(Path(path).read_text())


def format_schedule(schedule: TariffSchedule) -> str:
    lines = [f"base_price = {schedule.base_price!r}"]
    lines += [f'slot = "{s},{e},{a!r}"' for s, e, a in schedule.slots]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DemandResponseConfig:
    """Grid-draw limit with a per-kWh penalty on the excess.

    ``per_interval`` compares each hourly draw with ``limit_wh``;
    ``daily_cumulative`` charges only the energy pushed past ``limit_wh``
    within a calendar day.
    """

    enabled: bool = False
    limit_wh: float = 700.0
    mode: str = "per_interval"
    penalty_rate: float = 2.0

    def __post_init__(self):
        if self.mode not in DR_MODES:
            raise TariffError(f"dr mode must be one of {DR_MODES}, got {self.mode!r}")
        if self.enabled and (self.limit_wh <= 0 or self.penalty_rate < 0):
            raise TariffError("enabled demand response needs limit_wh > 0 and penalty_rate >= 0")


NO_DR = DemandResponseConfig()
