"""
Training a dueling double DQN and watching it learn
===================================================

The agent sees the next 24 prices, its state of charge and the current load,
and picks one of three actions each hour. We train it on a month of constant
load, then compare it with the oracle and look at where in the day it charges.

Training for the full 500 epochs takes about a minute; set ``EPOCHS`` lower
for a quicker look.
"""

from storage_dqn import analysis
from storage_dqn.agent import AgentConfig, train
from storage_dqn.data import constant_profile
from storage_dqn.environment import BatteryConfig, EnvConfig
from storage_dqn.oracle import dp_optimal
from storage_dqn.tariff import TABLE1

EPOCHS = 500

env = EnvConfig(TABLE1, BatteryConfig(), constant_profile(300.0, 30))
config = AgentConfig(epochs=EPOCHS, checkpoint_every=100)


def progress(record):
    if record.epoch % 50 == 0:
        print("epoch %3d  savings %6.2f%%  epsilon %.2f" % (record.epoch, record.savings_pct, record.epsilon))


result = train(env, config, progress=progress)

# Greedy evaluation against the best achievable schedule.
ev = analysis.evaluate(result.params, env)
oracle = dp_optimal(env.load.hourly, TABLE1, env.battery)
print("agent %.2f%%, oracle %.2f%%" % (ev.savings_pct, oracle.savings_pct))

# Where does the energy go? One histogram per checkpoint shows the policy
# moving its charging into the cheap night slot and its discharging into the
# expensive day slot.
for epoch, hist in analysis.learning_progression(result.checkpoints, env):
    print("epoch %3d  charged %s  discharged %s" % (epoch, hist.charged_wh, hist.discharged_wh))
