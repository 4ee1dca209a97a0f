import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from storage_dqn.data import constant_profile
from storage_dqn.environment import (
    Action, BatteryConfig, BatteryEnv, EnvConfig, EnvError, apply_action, baseline_cost,
    cost_saving, penalty, reward, simulate, trajectory_cost,
)
from storage_dqn.tariff import NO_DR, TABLE1, TATA, DemandResponseConfig

DAILY = DemandResponseConfig(True, 700.0, "daily_cumulative", 2.0)
HOURLY = DemandResponseConfig(True, 700.0, "per_interval", 2.0)


def make_env(battery=BatteryConfig(), tariff=TABLE1, load=300.0, days=2, dr=NO_DR, **kw):
    return BatteryEnv(EnvConfig(tariff, battery, constant_profile(load, days), dr, **kw))


def test_reset_starts_at_floor():
    env = make_env(normalize=False)
    obs = env.reset(0)
    assert obs.shape == (26,)
    assert obs[24] == 0.0
    np.testing.assert_array_equal(obs[:24], TABLE1.hourly_prices())
    big = make_env(BatteryConfig(20_000, 14_000, 14_000, 0.1, 0.9))
    assert big.reset(0)[24] == pytest.approx(0.1)


def test_reset_out_of_range():
    env = make_env(days=2)
    with pytest.raises(EnvError):
        env.reset(2)


@pytest.mark.parametrize("energy, action, load, expected", [
    (900, Action.CHARGE, 200, (900, 200)),
    (600, Action.DISCHARGE, 500, (300, 200)),
    (100, Action.DISCHARGE, 50, (50, 0)),
    (0, Action.CHARGE, 100, (300, 400)),
    (400, Action.GRID, 123, (400, 123)),
])
def test_apply_action_examples(energy, action, load, expected):
    assert apply_action(energy, BatteryConfig(), action, load) == expected


def test_penalty_examples():
    assert penalty(100, 650, NO_DR) == 0
    assert penalty(100, 650, DAILY) == pytest.approx(0.1)
    assert penalty(100, 800, DAILY) == pytest.approx(0.2)
    assert penalty(900, 5000, HOURLY) == pytest.approx(0.4)
    assert penalty(600, 5000, HOURLY) == 0


def test_reward_examples():
    assert reward(3, 500, 0) == -1.5
    assert reward(1, 0, 0) == 0
    assert reward(5, 1000, 0.2) == pytest.approx(-5.2)


def test_baseline_examples():
    loads = np.full(24, 300.0)
    assert baseline_cost(loads, TABLE1) == pytest.approx(14.4)
    # 300 Wh * (8 * 4.25 + 3 * 5 + 3 * 5.5 + 6 * 5 + 4 * 6) = 300 * 119.5 milli-rupees
    assert baseline_cost(loads, TATA) == pytest.approx(35.85)


def test_cost_saving():
    assert cost_saving(14.4, 14.4) == 0.0
    assert cost_saving(0.88 * 10, 10) == pytest.approx(12.0)
    assert cost_saving(0, 5) == 100.0
    with pytest.raises(ValueError):
        cost_saving(1.0, 0.0)


def test_step_sequence():
    env = make_env(normalize=False)
    env.reset(0)
    out = env.step(Action.CHARGE)
    assert (out.energy, out.grid_draw, out.price) == (300, 600, 1.0)
    assert out.reward == pytest.approx(-0.6)
    assert out.next_observation[24] == pytest.approx(300 / 900)
    for _ in range(22):
        out = env.step(Action.GRID)
    assert not out.done
    assert env.step(Action.GRID).done
    with pytest.raises(EnvError):
        env.step(Action.GRID)


def test_cumulative_observation_only_in_daily_mode():
    assert make_env(dr=DAILY).config.obs_dim == 27
    assert make_env(dr=HOURLY).config.obs_dim == 26


def test_normalized_observation_in_unit_range():
    env = make_env(tariff=TATA, load=250.0)
    obs = env.reset(1)
    assert obs.min() >= 0 and obs.max() <= 1


def test_trajectory_cost_resets_cumulative_each_day():
    draws = np.full(48, 100.0)
    prices = np.ones(48)
    # 2400 Wh per day, 1700 Wh over the daily limit, twice
    assert trajectory_cost(prices, draws, DAILY) == pytest.approx(4.8 + 2 * 2 * 1.7)


def test_simulate_matches_env():
    env = make_env(tariff=TATA, days=2, normalize=False)
    rng = np.random.default_rng(3)
    actions = rng.integers(0, 3, size=48)
    total = 0.0
    for d in range(2):
        env.reset(d)
        for a in actions[d * 24:(d + 1) * 24]:
            total += env.step(a).reward
    _, _, cost = simulate(actions, np.full(48, 300.0), TATA, BatteryConfig())
    assert -total == pytest.approx(cost, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    energy_frac=st.floats(0, 1),
    action=st.sampled_from(list(Action)),
    load=st.floats(0, 2000, allow_nan=False),
    cap=st.floats(0, 30000),
    soc=st.tuples(st.floats(0, 0.45), st.floats(0.55, 1)),
)
def test_step_invariants(energy_frac, action, load, cap, soc):
    battery = BatteryConfig(cap, 0.7 * cap, 0.7 * cap, *soc)
    energy = battery.floor_wh + energy_frac * (battery.ceiling_wh - battery.floor_wh)
    new, draw = apply_action(energy, battery, action, load)
    tol = 1e-9 * max(1.0, cap)
    assert battery.floor_wh - tol <= new <= battery.ceiling_wh + tol
    assert draw >= -tol
    # energy balance: grid draw = load + stored energy change
    assert math.isclose(draw, load + (new - energy), abs_tol=1e-6)


def test_zero_battery_is_grid_only():
    battery = BatteryConfig(0, 0, 0)
    for a in Action:
        assert apply_action(0.0, battery, a, 321.0) == (0.0, 321.0)
