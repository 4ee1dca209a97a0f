"""Exact minimum-cost dispatch by backward induction, plus a brute-force check.

Both solvers use the environment's semantics: hourly steps, SoC clipping,
a battery that resets to its starting energy at each day boundary, and costs
totalled by :func:`environment.trajectory_cost`. The DP works on a grid of
battery energies spaced ``quantum`` Wh apart; with whole-Wh loads, rates and
SoC bounds and ``quantum=1`` every reachable energy lies on that grid and the
result is exact.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import HOURS_PER_DAY
from .environment import Action, BatteryConfig, apply_action, baseline_cost, cost_saving, prices_for, simulate, trajectory_cost
from .tariff import NO_DR, DemandResponseConfig, TariffSchedule

DEFAULT_MAX_STATES = 20_000_000
MAX_BRUTE_FORCE_HOURS = 12


class OracleCapacityError(RuntimeError):
    pass


@dataclass
class DispatchPlan:
    actions: list
    total_cost: float
    grid_draws: np.ndarray
    energies: np.ndarray
    exact: bool = True
    baseline_cost: float = field(default=float("nan"))

    @property
    def savings_pct(self) -> float:
        return cost_saving(self.total_cost, self.baseline_cost)


def _transitions(energies, battery: BatteryConfig, load):
    """Vectorized apply_action over an array of energies: (next_energy, draw) per action."""
    out = np.maximum(np.minimum(np.minimum(battery.max_discharge_w, energies - battery.floor_wh), load), 0.0)
    into = np.maximum(np.minimum(battery.max_charge_w, battery.ceiling_wh - energies), 0.0)
    grid = (energies, np.full_like(energies, load))
    return grid, (energies - out, load - out), (energies + into, load + into)


def _solve_day(loads, prices, battery, dr, quantum, start, max_states):
    lo = battery.floor_wh
    n_e = int(np.floor((battery.ceiling_wh - lo) / quantum + 1e-9)) + 1
    energies = lo + quantum * np.arange(n_e)
    cumulative = dr.enabled and dr.mode == "daily_cumulative"
    if cumulative:
        n_c = int(np.ceil(dr.limit_wh / quantum - 1e-9)) + 1
        levels = np.minimum(quantum * np.arange(n_c), dr.limit_wh)
    else:
        n_c = 1
        levels = np.zeros(1)
    if n_e * n_c > max_states:
        raise OracleCapacityError(
            f"{n_e * n_c} DP states exceed the budget of {max_states}; use a coarser quantum"
        )

    exact = True
    tol = 1e-9 * max(1.0, battery.ceiling_wh)
    T = len(loads)
    policy = np.zeros((T, n_e, n_c), dtype=np.int8)
    value = np.zeros((n_e, n_c))
    for t in range(T - 1, -1, -1):
        candidates = []
        for next_e, draw in _transitions(energies, battery, float(loads[t])):
            ei = np.clip(np.rint((next_e - lo) / quantum).astype(np.int64), 0, n_e - 1)
            exact &= bool(np.all(np.abs(energies[ei] - next_e) <= tol))
            milli = prices[t] * draw  # (n_e,)
            if cumulative:
                reach = levels[None, :] + draw[:, None]
                excess = np.maximum(0.0, reach - dr.limit_wh)
                cost = milli[:, None] + dr.penalty_rate * excess
                capped = np.minimum(reach, dr.limit_wh)
                ci = np.clip(np.rint(capped / quantum).astype(np.int64), 0, n_c - 1)
                exact &= bool(np.all(np.abs(levels[ci] - capped) <= tol))
                candidates.append(cost + value[ei[:, None], ci])
            else:
                cost = milli
                if dr.enabled:
                    cost = cost + dr.penalty_rate * np.maximum(0.0, draw - dr.limit_wh)
                candidates.append((cost + value[ei, 0])[:, None])
        stacked = np.stack(candidates)
        policy[t] = np.argmin(stacked, axis=0)
        value = stacked.min(axis=0)

    ei = int(np.rint((start - lo) / quantum))
    exact &= abs(energies[min(max(ei, 0), n_e - 1)] - start) <= tol
    ei = min(max(ei, 0), n_e - 1)
    energy, cum, actions = float(energies[ei]), 0.0, []
    for t in range(T):
        ci = min(int(np.rint(min(cum, dr.limit_wh) / quantum)), n_c - 1) if cumulative else 0
        ei = min(max(int(np.rint((energy - lo) / quantum)), 0), n_e - 1)
        a = int(policy[t, ei, ci])
        actions.append(Action(a))
        energy, draw = apply_action(energy, battery, a, float(loads[t]))
        cum += draw
    return actions, bool(exact)


def dp_optimal(loads, tariff: TariffSchedule, battery: BatteryConfig,
               dr: DemandResponseConfig = NO_DR, quantum: float = 1.0,
               initial_energy: float | None = None, max_states: int = DEFAULT_MAX_STATES) -> DispatchPlan:
    """Minimum-cost action sequence for ``loads`` (hourly Wh from hour 0).

    Days are independent because the battery restarts every day, so each
    24-hour chunk is solved on its own. Ties go to the lowest action index.
    ``total_cost`` is always the cost of replaying the plan; ``exact`` is False
    when some transition fell off the energy grid and had to be snapped.
    """
    if quantum <= 0:
        raise ValueError("quantum must be positive")
    loads = np.asarray(loads, dtype=float)
    start = battery.floor_wh if initial_energy is None else float(initial_energy)
    prices = prices_for(tariff, loads.size)
    actions, exact = [], True
    for d in range(0, loads.size, HOURS_PER_DAY):
        chunk = slice(d, d + HOURS_PER_DAY)
        day_actions, day_exact = _solve_day(loads[chunk], prices[chunk], battery, dr, quantum, start, max_states)
        actions += day_actions
        exact &= day_exact
    energies, draws, cost = simulate(actions, loads, tariff, battery, dr, start)
    return DispatchPlan(actions, cost, draws, energies, exact, baseline_cost(loads, tariff, dr))


def brute_force_optimal(loads, tariff: TariffSchedule, battery: BatteryConfig,
                        dr: DemandResponseConfig = NO_DR, initial_energy: float | None = None) -> DispatchPlan:
    """Cheapest of all 3^T action sequences, each simulated step by step (T <= 12)."""
    loads = [float(x) for x in loads]
    T = len(loads)
    if T > MAX_BRUTE_FORCE_HOURS:
        raise ValueError(f"brute force is limited to {MAX_BRUTE_FORCE_HOURS} hours, got {T}")
    prices = prices_for(tariff, T)
    start = battery.floor_wh if initial_energy is None else float(initial_energy)
    best = {"cost": float("inf"), "actions": None}
    actions, draws = [], []

    def visit(t, energy):
        if t == T:
            cost = trajectory_cost(prices, draws, dr)
            if cost < best["cost"]:
                best["cost"], best["actions"] = cost, list(actions)
            return
        for a in Action:
            new_energy, draw = apply_action(energy, battery, a, loads[t])
            actions.append(a)
            draws.append(draw)
            visit(t + 1, new_energy)
            actions.pop()
            draws.pop()

    visit(0, start)
    energies, grid, cost = simulate(best["actions"], loads, tariff, battery, dr, start)
    return DispatchPlan(best["actions"], cost, grid, energies, True, baseline_cost(loads, tariff, dr))


@dataclass
class OracleCurve:
    capacities: list
    savings_pct: list
    costs: list
    baseline: float
    exact: bool = True


def savings_curve(capacities, loads, tariff, dr=NO_DR, rate_frac=0.7, soc_min=0.1, soc_max=0.9,
                  quantum=1.0) -> OracleCurve:
    """Optimal savings per capacity with rates and SoC limits scaled to each battery."""
    caps = [float(c) for c in capacities]
    if caps != sorted(caps):
        raise ValueError("capacities must be sorted ascending")
    base = baseline_cost(loads, tariff, dr)
    savings, costs, exact = [], [], True
    for cap in caps:
        plan = dp_optimal(loads, tariff, BatteryConfig.scaled(cap, rate_frac, soc_min, soc_max), dr, quantum)
        costs.append(plan.total_cost)
        savings.append(cost_saving(plan.total_cost, base))
        exact &= bool(plan.exact)
    return OracleCurve(caps, savings, costs, base, exact)


def flattening_index(values, tol=0.5):
    """Index i of the first pair with ``|values[i+1] - values[i]| < tol``, else None."""
    for i in range(len(values) - 1):
        if abs(values[i + 1] - values[i]) < tol:
            return i
    return None
