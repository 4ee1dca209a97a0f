"""
Tariffs, baselines and the optimal dispatch
===========================================

A battery earns money only by moving energy from cheap hours to expensive
ones. Before training anything it helps to know how much there is to earn,
so this script prices a day of load and asks the exact dynamic-programming
oracle for the best possible schedule.
"""

import numpy as np

from storage_dqn.data import SyntheticSpec, generate
from storage_dqn.environment import BatteryConfig, baseline_cost
from storage_dqn.oracle import dp_optimal, savings_curve
from storage_dqn.tariff import TABLE1, TATA

# Both built-in tariffs, hour by hour.
for name, tariff in (("table1", TABLE1), ("tata", TATA)):
    print(name, tariff.hourly_prices())

# A constant 300 W load under the three-slot tariff costs 14.4 a day from the grid.
flat_day = np.full(24, 300.0)
print("baseline", baseline_cost(flat_day, TABLE1))

# The 900 Wh battery can shift exactly one full charge from price 1 to price 3.
plan = dp_optimal(flat_day, TABLE1, BatteryConfig())
print("actions ", [int(a) for a in plan.actions])
print("cost %.2f, savings %.2f%%" % (plan.total_cost, plan.savings_pct))

# A noisier household with an evening peak, priced on the Tata schedule.
week = generate(SyntheticSpec(days=7, seed=1))
plan = dp_optimal(week.hourly, TATA, BatteryConfig(900, 300, 300, 0.1, 0.9))
print("tata week: %.2f%% saved by the optimal plan" % plan.savings_pct)

# Bigger batteries, with charge rate tied to capacity. Charging is all or
# nothing, so past some size a single charge hour stores more than the day
# can use and the battery stops paying for itself.
curve = savings_curve([1000, 3000, 5000, 10000, 15000], week.hourly, TATA)
for cap, s in zip(curve.capacities, curve.savings_pct):
    print("%6.0f Wh  %6.2f%%" % (cap, s))
