"""Greedy-policy evaluation, behaviour summaries, capacity sweeps and reports."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import network as nw
from .agent import AgentConfig, fine_tune, greedy, train
from .data import HOURS_PER_DAY
from .environment import BatteryConfig, BatteryEnv, EnvConfig, cost_saving, penalty, reward, trajectory_cost
from .oracle import DispatchPlan, dp_optimal, flattening_index
from .tariff import NO_DR

TRACE_HEADER = ("hour", "price", "load_wh", "action", "battery_wh", "grid_wh", "reward")


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.6g}"


@dataclass
class EpisodeTrace:
    day: int
    prices: np.ndarray
    loads: np.ndarray
    actions: np.ndarray
    battery_wh: np.ndarray  # energy after each step
    grid_wh: np.ndarray
    rewards: np.ndarray
    initial_energy: float

    @property
    def energy_before(self) -> np.ndarray:
        return np.concatenate([[self.initial_energy], self.battery_wh[:-1]])

    @property
    def delta_wh(self) -> np.ndarray:
        return self.battery_wh - self.energy_before

    def rows(self):
        for h in range(len(self.prices)):
            yield (h, self.prices[h], self.loads[h], int(self.actions[h]), self.battery_wh[h],
                   self.grid_wh[h], self.rewards[h])


@dataclass
class EvalResult:
    traces: list
    agent_cost: float
    baseline_cost: float
    savings_pct: float


def run_episode(params, env: BatteryEnv, day: int) -> EpisodeTrace:
    obs = env.reset(day)
    start = env.energy
    cols = {k: [] for k in ("prices", "loads", "actions", "battery_wh", "grid_wh", "rewards")}
    while not env.done:
        action = greedy(nw.forward(params, obs))
        out = env.step(action)
        for key, value in zip(cols, (out.price, out.load, action, out.energy, out.grid_draw, out.reward)):
            cols[key].append(value)
        obs = out.next_observation
    return EpisodeTrace(day, initial_energy=start, **{k: np.array(v) for k, v in cols.items()})


def evaluate(params, env_config: EnvConfig, days=None) -> EvalResult:
    """Greedy (epsilon = 0) rollout over ``days`` (default: every day in the profile)."""
    if params.input_dim != env_config.obs_dim:
        raise nw.ShapeError(
            f"network takes {params.input_dim} inputs, environment emits {env_config.obs_dim}"
        )
    env = BatteryEnv(env_config)
    days = range(env_config.load.day_count) if days is None else days
    traces = [run_episode(params, env, d) for d in days]
    prices = np.concatenate([t.prices for t in traces])
    agent = trajectory_cost(prices, np.concatenate([t.grid_wh for t in traces]), env_config.dr)
    base = trajectory_cost(prices, np.concatenate([t.loads for t in traces]), env_config.dr)
    return EvalResult(traces, agent, base, cost_saving(agent, base))


def plan_traces(plan: DispatchPlan, loads, tariff, initial_energy, dr=NO_DR) -> list:
    """Split an oracle plan into per-day traces in the same format as agent rollouts."""
    loads = np.asarray(loads, dtype=float)
    prices = tariff.hourly_prices()[np.arange(loads.size) % HOURS_PER_DAY]
    rewards, cumulative = [], 0.0
    for t, (price, draw) in enumerate(zip(prices, plan.grid_draws)):
        if t % HOURS_PER_DAY == 0:
            cumulative = 0.0
        rewards.append(reward(price, draw, penalty(draw, cumulative, dr)))
        cumulative += draw
    rewards = np.array(rewards)
    traces = []
    for d in range(0, loads.size, HOURS_PER_DAY):
        s = slice(d, d + HOURS_PER_DAY)
        traces.append(EpisodeTrace(d // HOURS_PER_DAY, prices[s], loads[s],
                                   np.array([int(a) for a in plan.actions[s]]),
                                   plan.energies[s], plan.grid_draws[s], rewards[s], initial_energy))
    return traces


@dataclass
class SlotActionHistogram:
    """Per tariff slot: Wh charged, Wh discharged and hours with no battery movement."""

    slots: list  # (start, end, price)
    charged_wh: np.ndarray
    discharged_wh: np.ndarray
    idle_hours: np.ndarray

    def share(self, start, end, kind="charged") -> float:
        """Fraction of all charged (or discharged) Wh that fell inside [start, end)."""
        values = self.charged_wh if kind == "charged" else self.discharged_wh
        total = values.sum()
        if total == 0:
            return 0.0
        inside = sum(v for (s, e, _), v in zip(self.slots, values) if s >= start and e <= end)
        return float(inside / total)

    def rows(self):
        for (s, e, p), c, d, i in zip(self.slots, self.charged_wh, self.discharged_wh, self.idle_hours):
            yield s, e, p, c, d, int(i)


def slot_histogram(trace: EpisodeTrace, tariff) -> SlotActionHistogram:
    slots = [(s, e, tariff.base_price + a) for s, e, a in tariff.slots]
    delta = trace.delta_wh
    hours = np.arange(len(delta)) % HOURS_PER_DAY
    charged, discharged, idle = [], [], []
    for s, e, _ in slots:
        mask = (hours >= s) & (hours < e)
        charged.append(np.maximum(delta[mask], 0.0).sum())
        discharged.append(np.maximum(-delta[mask], 0.0).sum())
        idle.append(int(np.count_nonzero(delta[mask] == 0)))
    return SlotActionHistogram(slots, np.array(charged), np.array(discharged), np.array(idle))


def learning_progression(checkpoints, env_config: EnvConfig, probe_day: int = 0) -> list:
    """``(epoch, SlotActionHistogram)`` per checkpoint, greedy policy on one day."""
    if len(checkpoints) < 2:
        raise ValueError("need at least two checkpoints to show a progression")
    env = BatteryEnv(env_config)
    return [(epoch, slot_histogram(run_episode(p, env, probe_day), env_config.tariff))
            for epoch, p in checkpoints]


# --- sweeps -----------------------------------------------------------------

@dataclass
class SweepRow:
    train_capacity: float
    eval_capacity: float
    savings_pct: float
    oracle_savings_pct: float

    @property
    def fraction_of_oracle(self) -> float:
        if self.oracle_savings_pct > 0:
            return self.savings_pct / self.oracle_savings_pct
        return math.nan


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    params: dict = field(default_factory=dict, repr=False)  # train capacity -> NetworkParams

    def diagonal(self) -> list:
        return [r for r in self.rows if r.train_capacity == r.eval_capacity]

    def capacities(self) -> list:
        return sorted({r.train_capacity for r in self.rows})

    def cell(self, train_capacity, eval_capacity) -> SweepRow:
        for r in self.rows:
            if r.train_capacity == train_capacity and r.eval_capacity == eval_capacity:
                return r
        raise KeyError((train_capacity, eval_capacity))

    def flattening_capacity(self, tol=0.5, oracle=False):
        diag = self.diagonal()
        values = [r.oracle_savings_pct if oracle else r.savings_pct for r in diag]
        i = flattening_index(values, tol)
        return None if i is None else diag[i].train_capacity


def battery_for(capacity, rate_frac=0.7, soc_min=0.1, soc_max=0.9) -> BatteryConfig:
    return BatteryConfig.scaled(capacity, rate_frac, soc_min, soc_max)


def _train_cell(args):
    env_config, agent_config = args
    return train(env_config, agent_config).params


def _train_all(env_configs, agent_config, jobs):
    work = [(cfg, agent_config) for cfg in env_configs]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_train_cell, work))
    return [_train_cell(w) for w in work]


def oracle_savings(env_config: EnvConfig, quantum=1.0) -> float:
    plan = dp_optimal(env_config.load.hourly, env_config.tariff, env_config.battery, env_config.dr,
                      quantum, env_config.initial_energy)
    return plan.savings_pct


def capacity_sweep(capacities, train_config: EnvConfig, agent_config: AgentConfig, eval_config: EnvConfig,
                   rate_frac=0.7, soc_min=0.1, soc_max=0.9, cross=True, jobs=1, quantum=1.0) -> SweepResult:
    """Train one agent per capacity, then evaluate every agent on every capacity.

    ``cross=False`` keeps only the diagonal. Each cell is deterministic, so
    running the training cells in parallel (``jobs > 1``) changes nothing but
    wall time.
    """
    caps = [float(c) for c in capacities]
    if not caps:
        raise ValueError("capacity list is empty")
    batteries = {c: battery_for(c, rate_frac, soc_min, soc_max) for c in caps}
    trained = _train_all([train_config.with_(battery=batteries[c]) for c in caps], agent_config, jobs)
    params = dict(zip(caps, trained))
    oracle = {c: oracle_savings(eval_config.with_(battery=batteries[c]), quantum) for c in caps}
    result = SweepResult(params=params)
    for tc in caps:
        for ec in caps if cross else [tc]:
            ev = evaluate(params[tc], eval_config.with_(battery=batteries[ec]))
            result.rows.append(SweepRow(tc, ec, ev.savings_pct, oracle[ec]))
    return result


@dataclass
class DRComparison:
    tod: SweepResult
    dr: SweepResult

    def flattening(self, tol=0.5) -> dict:
        return {"tod": self.tod.flattening_capacity(tol), "dr": self.dr.flattening_capacity(tol)}


def dr_comparison(capacities, train_config: EnvConfig, agent_config: AgentConfig, eval_config: EnvConfig,
                  dr_config, rate_frac=0.7, soc_min=0.1, soc_max=0.9, jobs=1, quantum=1.0,
                  tod: SweepResult | None = None) -> DRComparison:
    """ToD-only arm, then a DR arm fine-tuned from each ToD network."""
    if not dr_config.enabled:
        raise ValueError("the DR arm needs an enabled DemandResponseConfig")
    if tod is None:
        tod = capacity_sweep(capacities, train_config, agent_config, eval_config,
                             rate_frac, soc_min, soc_max, cross=False, jobs=jobs, quantum=quantum)
    dr_train, dr_eval = train_config.with_(dr=dr_config), eval_config.with_(dr=dr_config)
    arm = SweepResult()
    for cap in [float(c) for c in capacities]:
        battery = battery_for(cap, rate_frac, soc_min, soc_max)
        tuned = fine_tune(tod.params[cap], dr_train.with_(battery=battery), agent_config).params
        arm.params[cap] = tuned
        ev = evaluate(tuned, dr_eval.with_(battery=battery))
        arm.rows.append(SweepRow(cap, cap, ev.savings_pct, oracle_savings(dr_eval.with_(battery=battery), quantum)))
    return DRComparison(tod, arm)


# --- reports ----------------------------------------------------------------

def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, (int, float, np.integer, np.floating)) else v for v in row])
    return path


def write_trace(trace: EpisodeTrace, path) -> Path:
    return _write_csv(Path(path), TRACE_HEADER, trace.rows())


def read_trace(path) -> dict:
    with Path(path).open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {k: np.array([float(r[k]) for r in rows]) for k in TRACE_HEADER}


def write_histogram(hist: SlotActionHistogram, path) -> Path:
    return _write_csv(Path(path), ("slot_start", "slot_end", "price", "charged_wh", "discharged_wh", "idle_hours"),
                      hist.rows())


def _sweep_rows(rows):
    for r in rows:
        yield r.train_capacity, r.eval_capacity, r.savings_pct, r.oracle_savings_pct, r.fraction_of_oracle


SWEEP_HEADER = ("train_capacity_wh", "eval_capacity_wh", "savings_pct", "oracle_savings_pct", "fraction_of_oracle")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return None if math.isnan(obj) else float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def emit_report(output_dir, traces=None, histograms=None, sweep: SweepResult | None = None,
                dr: DRComparison | None = None, summary: dict | None = None) -> list:
    """Write plot-ready CSVs and ``summary.json`` under ``output_dir``.

    ``traces`` and ``histograms`` map a file stem to the object to write.
    Returns the written paths.
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, trace in (traces or {}).items():
        written.append(write_trace(trace, out / "traces" / f"{name}.csv"))
    for name, hist in (histograms or {}).items():
        written.append(write_histogram(hist, out / "histograms" / f"{name}.csv"))
    summary = dict(summary or {})
    if sweep is not None:
        written.append(_write_csv(out / "sweep.csv", SWEEP_HEADER, _sweep_rows(sweep.diagonal())))
        written.append(_write_csv(out / "cross_matrix.csv", SWEEP_HEADER, _sweep_rows(sweep.rows)))
        summary["sweep"] = [
            {"capacity_wh": r.train_capacity, "savings_pct": r.savings_pct,
             "oracle_savings_pct": r.oracle_savings_pct, "fraction_of_oracle": r.fraction_of_oracle}
            for r in sweep.diagonal()
        ]
        summary["flattening_capacity_wh"] = sweep.flattening_capacity()
        summary["oracle_flattening_capacity_wh"] = sweep.flattening_capacity(oracle=True)
    if dr is not None:
        written.append(_write_csv(out / "dr_sweep.csv", SWEEP_HEADER, _sweep_rows(dr.dr.rows)))
        summary["dr"] = {
            "savings_pct": {fmt(r.train_capacity): r.savings_pct for r in dr.dr.rows},
            "oracle_savings_pct": {fmt(r.train_capacity): r.oracle_savings_pct for r in dr.dr.rows},
            "flattening_capacity_wh": dr.flattening(),
        }
    path = out / "summary.json"
    path.write_text(json.dumps(_clean(summary), indent=2, sort_keys=True) + "\n")
    written.append(path)
    return written
