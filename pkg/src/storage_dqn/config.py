"""Flat ``section.key = value`` run configuration with typed defaults."""
from __future__ import annotations

import ast
import re
from dataclasses import fields
from pathlib import Path

from .agent import AgentConfig, ConfigError
from .data import LoadProfile, SyntheticSpec, generate, load_csv, split
from .environment import BatteryConfig, EnvConfig
from .tariff import DemandResponseConfig, builtin_schedule, load_schedule

_AGENT_DEFAULTS = {f"agent.{f.name}": getattr(AgentConfig(), f.name)
                   for f in fields(AgentConfig) if f.name != "seed"}

DEFAULTS = {
    "run.seed": 0,
    "run.out": "runs/default",
    "tariff.name": "table1",
    "tariff.file": "",
    "battery.capacity_wh": 900.0,
    "battery.max_charge_w": 300.0,
    "battery.max_discharge_w": 300.0,
    "battery.soc_min": 0.0,
    "battery.soc_max": 1.0,
    "dr.enabled": False,
    "dr.limit_wh": 700.0,
    "dr.mode": "per_interval",
    "dr.penalty_rate": 2.0,
    "env.horizon": 24,
    "env.normalize": True,
    "env.initial_soc": "floor",
    **_AGENT_DEFAULTS,
    "data.csv": "",
    "data.base_load_w": 200.0,
    "data.evening_peak_w": 600.0,
    "data.peak_start": 18,
    "data.peak_end": 24,
    "data.noise_frac": 0.1,
    "data.days": 60,
    "data.seed": 0,
    "data.train_days": 30,
    "data.test_days": 30,
    "sweep.capacities": "5000..30000 step 5000",
    "sweep.rate_frac": 0.7,
    "sweep.soc_min": 0.1,
    "sweep.soc_max": 0.9,
    "sweep.cross": True,
    "oracle.quantum": 1.0,
    "oracle.max_states": 20_000_000,
}

_LINE = re.compile(r"^\s*([A-Za-z_][\w]*\.[\w]+)\s*=\s*(.*?)\s*$")


def _coerce(key, raw, default):
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        text = text[1:-1]
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, tuple):
            return tuple(int(v) for v in text.strip("()[] ").split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{key}: cannot interpret {raw!r} as {type(default).__name__}") from None
    return text


class RunConfig(dict):
    """Mapping of every known dotted key to its typed value."""

    def __init__(self, values=None):
        super().__init__(DEFAULTS)
        for key, value in (values or {}).items():
            self.set(key, value)

    def set(self, key, value):
        if key not in DEFAULTS:
            raise ConfigError(f"unknown config key {key!r}")
        self[key] = _coerce(key, value, DEFAULTS[key]) if isinstance(value, str) else value

    def override(self, assignments):
        for item in assignments or ():
            if "=" not in item:
                raise ConfigError(f"--set expects key=value, got {item!r}")
            key, value = item.split("=", 1)
            self.set(key.strip(), value)
        return self

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        cfg = cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            m = _LINE.match(line)
            if not m:
                raise ConfigError(f"config line {lineno}: expected 'section.key = value'")
            cfg.set(m.group(1), m.group(2))
        return cfg

    @classmethod
    def load(cls, path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"config file not found: {path}")
        return cls.parse(path.read_text())

    def dump(self) -> str:
        lines = []
        for key in DEFAULTS:
            value = self[key]
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, tuple):
                text = '"' + ",".join(str(v) for v in value) + '"'
            elif isinstance(value, str):
                text = '"' + value + '"'
            else:
                text = repr(value)
            lines.append(f"{key} = {text}")
        return "\n".join(lines) + "\n"

    # --- builders --------------------------------------------------------

    def tariff(self):
        return load_schedule(self["tariff.file"]) if self["tariff.file"] else builtin_schedule(self["tariff.name"])

    def dr(self) -> DemandResponseConfig:
        return DemandResponseConfig(self["dr.enabled"], self["dr.limit_wh"], self["dr.mode"], self["dr.penalty_rate"])

    def battery(self) -> BatteryConfig:
        return BatteryConfig(self["battery.capacity_wh"], self["battery.max_charge_w"],
                             self["battery.max_discharge_w"], self["battery.soc_min"], self["battery.soc_max"])

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(self["data.base_load_w"], self["data.evening_peak_w"],
                             (self["data.peak_start"], self["data.peak_end"]), self["data.noise_frac"],
                             self["data.seed"], self["data.days"])

    def profile(self) -> LoadProfile:
        return load_csv(self["data.csv"]) if self["data.csv"] else generate(self.synthetic_spec())

    def splits(self) -> tuple[LoadProfile, LoadProfile]:
        return split(self.profile(), self["data.train_days"], self["data.test_days"])

    def env(self, load: LoadProfile, **changes) -> EnvConfig:
        soc = self["env.initial_soc"]
        initial = None if soc in ("", "floor") else float(soc)
        cfg = EnvConfig(self.tariff(), self.battery(), load, self.dr(), self["env.horizon"],
                        self["env.normalize"], initial)
        return cfg.with_(**changes) if changes else cfg

    def agent(self) -> AgentConfig:
        values = {k.split(".", 1)[1]: self[k] for k in _AGENT_DEFAULTS}
        return AgentConfig(seed=self["run.seed"], **values)

    def capacities(self) -> list[float]:
        return parse_capacities(self["sweep.capacities"])


def parse_capacities(text) -> list[float]:
    """``"5000..30000 step 5000"`` or a comma list ``"5000,10000"``."""
    text = str(text).strip()
    m = re.fullmatch(r"([\d.]+)\s*\.\.\s*([\d.]+)(?:\s+step\s+([\d.]+))?", text)
    try:
        if m:
            start, stop = float(m.group(1)), float(m.group(2))
            step = float(m.group(3) or (stop - start) or 1)
            if step <= 0:
                raise ValueError
            n = int(round((stop - start) / step))
            return [start + i * step for i in range(n + 1)]
        values = [float(ast.literal_eval(v.strip())) for v in text.split(",") if v.strip()]
    except (ValueError, SyntaxError):
        raise ConfigError(f"cannot parse capacity list {text!r}") from None
    if not values:
        raise ConfigError("capacity list is empty")
    return values


def keys_for(*sections) -> list[str]:
    return [k for k in DEFAULTS if k.split(".", 1)[0] in sections]
