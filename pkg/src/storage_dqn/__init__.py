"""Dueling double DQN battery scheduling under time-of-day tariffs, with an exact DP oracle."""
from .agent import AgentConfig, DQNAgent, TabularProblem, epsilon_at, fine_tune, select_action, tabular_q_learning, td_target, train
from .analysis import capacity_sweep, dr_comparison, emit_report, evaluate, learning_progression, slot_histogram
from .data import LoadProfile, SyntheticSpec, generate, load_csv, split
from .environment import Action, BatteryConfig, BatteryEnv, EnvConfig, apply_action, baseline_cost, cost_saving
from .network import LayerSpec, NetworkParams
from .oracle import brute_force_optimal, dp_optimal, savings_curve
from .replay import Experience, PerBuffer, SumTree
from .tariff import TABLE1, TATA, DemandResponseConfig, TariffSchedule, builtin_schedule

__version__ = "0.1.0"
