import numpy as np
import pytest

from storage_dqn.data import SyntheticSpec, generate
from storage_dqn.environment import BatteryConfig, baseline_cost, simulate
from storage_dqn.oracle import (
    OracleCapacityError, brute_force_optimal, dp_optimal, flattening_index, savings_curve,
)
from storage_dqn.tariff import TABLE1, TATA, DemandResponseConfig, flat_schedule

HOURLY = DemandResponseConfig(True, 700.0, "per_interval", 2.0)
DAILY = DemandResponseConfig(True, 700.0, "daily_cumulative", 2.0)


def test_constant_load_table1_optimum():
    plan = dp_optimal(np.full(24, 300.0), TABLE1, BatteryConfig())
    assert plan.baseline_cost == pytest.approx(14.4)
    # 900 Wh bought at 1 instead of 3 saves 1.8
    assert plan.total_cost == pytest.approx(12.6)
    assert plan.savings_pct == pytest.approx(12.5)
    assert plan.exact


def test_zero_capacity_is_baseline():
    loads = generate(SyntheticSpec(days=2)).hourly
    plan = dp_optimal(loads, TATA, BatteryConfig(0, 0, 0))
    assert plan.total_cost == baseline_cost(loads, TATA)
    assert plan.savings_pct == 0.0


def test_flat_tariff_cannot_save():
    loads = generate(SyntheticSpec(days=1, seed=3)).hourly
    plan = dp_optimal(loads, flat_schedule(4.0), BatteryConfig())
    assert plan.savings_pct == 0.0
    assert all(int(a) == 0 for a in plan.actions)  # ties go to the lowest action


@pytest.mark.parametrize("dr", [None, HOURLY, DAILY])
def test_dp_equals_brute_force(dr):
    rng = np.random.default_rng(11)
    battery = BatteryConfig(900, 300, 300, 0.1, 0.9)
    for _ in range(8):
        loads = rng.integers(0, 1001, size=8).astype(float)
        kw = {} if dr is None else {"dr": dr}
        dp = dp_optimal(loads, TATA, battery, **kw)
        bf = brute_force_optimal(loads, TATA, battery, **kw)
        assert dp.total_cost == bf.total_cost


def test_plan_replays_to_reported_cost():
    loads = generate(SyntheticSpec(days=3, seed=5)).hourly
    plan = dp_optimal(loads, TATA, BatteryConfig(), HOURLY)
    energies, draws, cost = simulate(plan.actions, loads, TATA, BatteryConfig(), HOURLY)
    assert cost == plan.total_cost
    np.testing.assert_array_equal(draws, plan.grid_draws)


def test_daily_cumulative_dr_never_helps():
    # with the battery reset each day, the daily grid total is at least the daily load,
    # so the penalty can only be added on top of the no-DR optimum
    loads = generate(SyntheticSpec(days=2, seed=1)).hourly
    battery = BatteryConfig(900, 300, 300)
    tod = dp_optimal(loads, TATA, battery).savings_pct
    daily = dp_optimal(loads, TATA, battery, DAILY).savings_pct
    assert daily < tod


def test_state_budget():
    with pytest.raises(OracleCapacityError):
        dp_optimal(np.full(24, 300.0), TABLE1, BatteryConfig(), max_states=100)


def test_coarse_quantum_is_flagged_inexact():
    plan = dp_optimal(np.full(24, 301.0), TABLE1, BatteryConfig(), quantum=70.0)
    assert not plan.exact
    _, _, cost = simulate(plan.actions, np.full(24, 301.0), TABLE1, BatteryConfig())
    assert cost == plan.total_cost


def test_brute_force_limit():
    with pytest.raises(ValueError):
        brute_force_optimal(np.zeros(13), TABLE1, BatteryConfig())


def test_savings_curve_can_dip_with_scaled_rates():
    # Charging is all-or-nothing at 70% of capacity per hour. Once one charge hour
    # stores more than the whole cheap-to-expensive load it can displace, the
    # battery cannot be used profitably and savings fall to zero.
    loads = generate(SyntheticSpec(days=2)).hourly
    curve = savings_curve([5000, 10000, 15000], loads, TATA)
    assert curve.savings_pct[1] > curve.savings_pct[0] > 0
    assert curve.savings_pct[2] == 0.0


def test_flattening_index():
    assert flattening_index([1, 5, 8, 8.3, 8.4]) == 2
    assert flattening_index([1, 2, 3]) is None
