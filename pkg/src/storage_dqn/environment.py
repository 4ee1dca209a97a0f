"""Residential battery MDP: one 24-hour day per episode, hourly decisions.

Energy is in Wh, prices in currency per kWh. The single Wh -> kWh conversion
happens in :func:`reward` and :func:`trajectory_cost`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import HOURS_PER_DAY, LoadProfile
from .tariff import NO_DR, DemandResponseConfig, TariffSchedule


class EnvError(RuntimeError):
    pass


class Action(enum.IntEnum):
    GRID = 0
    DISCHARGE = 1
    CHARGE = 2


N_ACTIONS = len(Action)


@dataclass(frozen=True)
class BatteryConfig:
    capacity_wh: float = 900.0
    max_charge_w: float = 300.0
    max_discharge_w: float = 300.0
    soc_min: float = 0.0
    soc_max: float = 1.0

    def __post_init__(self):
        if not 0 <= self.soc_min < self.soc_max <= 1:
            raise ValueError("need 0 <= soc_min < soc_max <= 1")
        if self.capacity_wh < 0 or self.max_charge_w < 0 or self.max_discharge_w < 0:
            raise ValueError("capacity and rates must be non-negative")

    @property
    def floor_wh(self) -> float:
        return self.soc_min * self.capacity_wh

    @property
    def ceiling_wh(self) -> float:
        return self.soc_max * self.capacity_wh

    @classmethod
    def scaled(cls, capacity_wh, rate_frac=0.7, soc_min=0.1, soc_max=0.9):
        """Battery whose charge/discharge rate is a fraction of capacity per hour.

        Rates are rounded to whole watts so hourly energy moves stay on a 1 Wh grid.
        """
        rate = float(round(rate_frac * capacity_wh))
        return cls(float(capacity_wh), rate, rate, soc_min, soc_max)


def apply_action(energy, battery: BatteryConfig, action, load, dt=1.0):
    """Return ``(new_energy, grid_draw)`` for one interval.

    Infeasible moves clip to the SoC bounds; the battery never exports and
    never discharges more than the load.
    """
    action = Action(action)
    if action is Action.DISCHARGE:
        out = min(battery.max_discharge_w * dt, energy - battery.floor_wh, load)
        out = max(out, 0.0)
        return energy - out, load - out
    if action is Action.CHARGE:
        into = max(min(battery.max_charge_w * dt, battery.ceiling_wh - energy), 0.0)
        return energy + into, load + into
    return energy, load


def excess_wh(grid_draw, day_cumulative, dr: DemandResponseConfig):
    """Energy (Wh) of this step's draw that the DR rule penalizes."""
    if not dr.enabled:
        return 0.0
    if dr.mode == "per_interval":
        return max(0.0, grid_draw - dr.limit_wh)
    return max(0.0, day_cumulative + grid_draw - dr.limit_wh) - max(0.0, day_cumulative - dr.limit_wh)


def penalty(grid_draw, day_cumulative, dr: DemandResponseConfig) -> float:
    return dr.penalty_rate * excess_wh(grid_draw, day_cumulative, dr) / 1000.0 if dr.enabled else 0.0


def reward(price, grid_draw, penalty_value) -> float:
    # The penalty is a cost, so it lowers the reward.
    return -(price * grid_draw / 1000.0) - penalty_value


def trajectory_cost(prices, grid_draws, dr: DemandResponseConfig = NO_DR) -> float:
    """Total cost of a run of hourly draws starting at hour 0.

    Summed exactly in milli-currency (price x Wh) then divided once, so any two
    plans with the same exact cost report the same float. The DR cumulative
    counter resets every 24 hours.
    """
    terms = []
    cumulative = 0.0
    for t, (price, draw) in enumerate(zip(prices, grid_draws)):
        if t % HOURS_PER_DAY == 0:
            cumulative = 0.0
        terms.append(float(price) * float(draw))
        if dr.enabled:
            terms.append(dr.penalty_rate * excess_wh(draw, cumulative, dr))
        cumulative += draw
    return math.fsum(terms) / 1000.0


def prices_for(tariff: TariffSchedule, n_hours: int, start_hour: int = 0) -> np.ndarray:
    return tariff.hourly_prices()[(start_hour + np.arange(n_hours)) % HOURS_PER_DAY]


def baseline_cost(loads, tariff: TariffSchedule, dr: DemandResponseConfig = NO_DR) -> float:
    """Cost of serving ``loads`` (hourly Wh from hour 0) straight from the grid."""
    loads = np.asarray(loads, dtype=float)
    return trajectory_cost(prices_for(tariff, loads.size), loads, dr)


def cost_saving(agent_cost, baseline) -> float:
    if baseline <= 0:
        raise ValueError(f"baseline cost must be positive, got {baseline}")
    return (1.0 - agent_cost / baseline) * 100.0


@dataclass(frozen=True)
class EnvConfig:
    """Everything the environment needs for a run.

    ``normalize`` min-max scales prices, load and the DR counter into [0, 1].
    ``price_series`` (same length as the load) replaces the static schedule in
    the price lookahead when given.
    """

    tariff: TariffSchedule
    battery: BatteryConfig
    load: LoadProfile
    dr: DemandResponseConfig = NO_DR
    horizon: int = 24
    normalize: bool = True
    initial_soc: float | None = None
    price_series: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("price horizon must be >= 1")
        if self.price_series is not None and len(self.price_series) != self.load.hourly.size:
            raise ValueError("price_series must align with the load profile")

    @property
    def tracks_cumulative(self) -> bool:
        return self.dr.enabled and self.dr.mode == "daily_cumulative"

    @property
    def obs_dim(self) -> int:
        return self.horizon + 2 + int(self.tracks_cumulative)

    @property
    def initial_energy(self) -> float:
        if self.initial_soc is None:
            return self.battery.floor_wh
        energy = self.initial_soc * self.battery.capacity_wh
        return min(max(energy, self.battery.floor_wh), self.battery.ceiling_wh)

    def with_(self, **changes) -> "EnvConfig":
        return replace(self, **changes)


@dataclass
class StepOutcome:
    next_observation: np.ndarray
    reward: float
    grid_draw: float
    done: bool
    price: float = 0.0
    load: float = 0.0
    energy: float = 0.0


class BatteryEnv:
    """Single-owner environment; mutate only through :meth:`reset` and :meth:`step`."""

    def __init__(self, config: EnvConfig):
        self.config = config
        tariff_prices = config.tariff.hourly_prices()
        loads = config.load.hourly
        if config.price_series is not None:
            self._prices = np.asarray(config.price_series, dtype=float)
        else:
            self._prices = np.tile(tariff_prices, config.load.day_count)
        if config.normalize:
            lo, hi = float(self._prices.min()), float(self._prices.max())
            self._price_shift, self._price_scale = lo, (hi - lo) or 1.0
            lo, hi = float(loads.min()), float(loads.max())
            self._load_shift, self._load_scale = lo, (hi - lo) or 1.0
            self._cum_scale = config.dr.limit_wh
        else:
            self._price_shift, self._price_scale = 0.0, 1.0
            self._load_shift, self._load_scale = 0.0, 1.0
            self._cum_scale = 1.0
        self.day = None
        self.hour = 0
        self.energy = 0.0
        self.day_cumulative = 0.0
        self.done = True

    def reset(self, day_index: int = 0) -> np.ndarray:
        if not 0 <= day_index < self.config.load.day_count:
            raise EnvError(f"day {day_index} out of range 0..{self.config.load.day_count - 1}")
        self.day = day_index
        self.hour = 0
        self.energy = self.config.initial_energy
        self.day_cumulative = 0.0
        self.done = False
        return self.observation()

    @property
    def _index(self) -> int:
        return self.day * HOURS_PER_DAY + self.hour

    def current_price(self) -> float:
        if self.config.price_series is not None:
            return float(self._prices[self._index % self._prices.size])
        return self.config.tariff.price_at(self.hour % HOURS_PER_DAY)

    def current_load(self) -> float:
        i = self._index
        loads = self.config.load.hourly
        return float(loads[i]) if i < loads.size else 0.0

    def observation(self) -> np.ndarray:
        cfg = self.config
        idx = (self._index + np.arange(cfg.horizon)) % self._prices.size
        obs = np.empty(cfg.obs_dim)
        obs[:cfg.horizon] = (self._prices[idx] - self._price_shift) / self._price_scale
        cap = cfg.battery.capacity_wh
        obs[cfg.horizon] = self.energy / cap if cap > 0 else 0.0
        obs[cfg.horizon + 1] = (self.current_load() - self._load_shift) / self._load_scale
        if cfg.tracks_cumulative:
            obs[cfg.horizon + 2] = self.day_cumulative / self._cum_scale
        return obs

    def step(self, action) -> StepOutcome:
        if self.done:
            raise EnvError("episode finished; call reset()")
        price, load = self.current_price(), self.current_load()
        self.energy, draw = apply_action(self.energy, self.config.battery, action, load)
        pen = penalty(draw, self.day_cumulative, self.config.dr)
        self.day_cumulative += draw
        self.hour += 1
        self.done = self.hour >= HOURS_PER_DAY
        return StepOutcome(
            next_observation=self.observation(),
            reward=reward(price, draw, pen),
            grid_draw=draw,
            done=self.done,
            price=price,
            load=load,
            energy=self.energy,
        )


def simulate(actions, loads, tariff, battery, dr=NO_DR, initial_energy=None):
    """Replay an action list from hour 0; returns ``(energies, grid_draws, cost)``.

    The battery resets to ``initial_energy`` (default the SoC floor) at every
    day boundary, matching the episodic environment.
    """
    start = battery.floor_wh if initial_energy is None else initial_energy
    energies, draws = [], []
    energy = start
    for t, (action, load) in enumerate(zip(actions, loads)):
        if t % HOURS_PER_DAY == 0:
            energy = start
        energy, draw = apply_action(energy, battery, action, float(load))
        energies.append(energy)
        draws.append(draw)
    prices = prices_for(tariff, len(draws))
    return np.array(energies), np.array(draws), trajectory_cost(prices, draws, dr)
