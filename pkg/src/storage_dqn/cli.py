"""Command-line entry point: ``storage-dqn {train,eval,sweep,oracle,explain,gen-data}``.

Exit codes: 0 success, 1 internal error, 2 user or configuration error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from . import analysis, network as nw
from .agent import ConfigError, train
from .config import RunConfig, keys_for
from .data import DataError, SyntheticSpec, generate, load_csv, write_csv
from .environment import BatteryEnv, EnvError
from .oracle import OracleCapacityError, dp_optimal
from .tariff import NO_DR, TariffError

log = logging.getLogger("storage_dqn")

USER_ERRORS = (ConfigError, DataError, TariffError, nw.ShapeError, OracleCapacityError,
               FileNotFoundError, EnvError, ValueError)

READS = {
    "train": ("run", "tariff", "battery", "dr", "env", "agent", "data"),
    "eval": ("run", "tariff", "battery", "dr", "env", "data"),
    "sweep": ("run", "tariff", "dr", "env", "agent", "data", "sweep", "oracle"),
    "oracle": ("run", "tariff", "battery", "dr", "env", "data", "oracle"),
    "explain": ("run", "tariff", "battery", "dr", "env", "data"),
    "gen-data": ("data",),
}

RECORD_HEADER = ("epoch", "total_reward", "cost", "savings_pct", "mean_loss", "epsilon")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _out_dir(args, config) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    return Path(os.environ.get("STORAGE_DQN_OUT") or config["run.out"])


def _load_config(args) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    config.override(args.set)
    if args.seed is not None:
        config.set("run.seed", args.seed)
    return config


def _write_json(path: Path, payload):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(analysis._clean(payload), indent=2, sort_keys=True) + "\n")


def cmd_train(args, config: RunConfig) -> int:
    train_load, _ = config.splits()
    env_config = config.env(train_load)
    agent_config = config.agent()
    out = _out_dir(args, config)
    log.info("training %d epochs on %d days -> %s", agent_config.epochs, train_load.day_count, out)
    result = train(env_config, agent_config)

    ckpt_dir = out / "checkpoints"
    entries = []
    for epoch, params in result.checkpoints:
        path = nw.save(params, ckpt_dir / f"epoch_{epoch:04d}.ckpt")
        entries.append({"epoch": epoch, "file": str(path.relative_to(out)), "sha256": _sha256(path)})
    records = out / "train_records.csv"
    analysis._write_csv(records, RECORD_HEADER,
                        ((r.epoch, r.total_reward, r.cost, r.savings_pct, r.mean_loss, r.epsilon)
                         for r in result.records))
    (out / "config.cfg").write_text(config.dump())
    _write_json(out / "manifest.json", {
        "config": dict(config),
        "seed": config["run.seed"],
        "data_digest": train_load.digest,
        "agent": agent_config.as_dict(),
        "checkpoints": entries,
        "train_records": {"file": records.name, "sha256": _sha256(records)},
        "skipped_updates": result.skipped_updates,
        "steps": result.steps,
    })
    return 0


def _eval_load(config, which):
    train_load, test_load = config.splits()
    return {"train": train_load, "test": test_load}[which]


def cmd_eval(args, config: RunConfig) -> int:
    params = nw.load(args.checkpoint)
    load = _eval_load(config, args.days)
    env_config = config.env(load)
    result = analysis.evaluate(params, env_config)
    out = _out_dir(args, config)
    traces = {f"day_{t.day:03d}": t for t in result.traces}
    oracle = analysis.oracle_savings(env_config, config["oracle.quantum"])
    analysis.emit_report(out, traces=traces, summary={
        "checkpoint": str(args.checkpoint),
        "days": args.days,
        "data_digest": load.digest,
        "baseline_cost": result.baseline_cost,
        "agent_cost": result.agent_cost,
        "savings_pct": result.savings_pct,
        "oracle_savings_pct": oracle,
        "fraction_of_oracle": result.savings_pct / oracle if oracle > 0 else None,
    })
    print(f"savings {result.savings_pct:.4g}% (oracle {oracle:.4g}%)")
    return 0


def cmd_sweep(args, config: RunConfig) -> int:
    train_load, test_load = config.splits()
    tod_train = config.env(train_load, dr=NO_DR)
    tod_eval = config.env(test_load, dr=NO_DR)
    kwargs = dict(rate_frac=config["sweep.rate_frac"], soc_min=config["sweep.soc_min"],
                  soc_max=config["sweep.soc_max"], jobs=args.jobs, quantum=config["oracle.quantum"])
    caps = config.capacities()
    sweep = analysis.capacity_sweep(caps, tod_train, config.agent(), tod_eval, cross=config["sweep.cross"], **kwargs)
    dr = None
    if config["dr.enabled"]:
        dr = analysis.dr_comparison(caps, tod_train, config.agent(), tod_eval, config.dr(), tod=sweep, **kwargs)
    analysis.emit_report(_out_dir(args, config), sweep=sweep, dr=dr, summary={
        "config": dict(config), "seed": config["run.seed"], "data_digest": train_load.digest,
    })
    return 0


def cmd_oracle(args, config: RunConfig) -> int:
    load = _eval_load(config, args.days)
    env_config = config.env(load)
    plan = dp_optimal(load.hourly, env_config.tariff, env_config.battery, env_config.dr,
                      config["oracle.quantum"], env_config.initial_energy, config["oracle.max_states"])
    traces = analysis.plan_traces(plan, load.hourly, env_config.tariff, env_config.initial_energy, env_config.dr)
    analysis.emit_report(_out_dir(args, config), traces={f"oracle_day_{t.day:03d}": t for t in traces}, summary={
        "days": args.days, "data_digest": load.digest, "quantum_wh": config["oracle.quantum"],
        "baseline_cost": plan.baseline_cost, "oracle_cost": plan.total_cost,
        "savings_pct": plan.savings_pct, "exact": plan.exact,
    })
    print(f"optimal savings {plan.savings_pct:.4g}%")
    return 0


def cmd_explain(args, config: RunConfig) -> int:
    run = Path(args.run)
    manifest = json.loads((run / "manifest.json").read_text())
    checkpoints = [(e["epoch"], nw.load(run / e["file"])) for e in manifest["checkpoints"]]
    load = _eval_load(config, args.days)
    env_config = config.env(load)
    progression = analysis.learning_progression(checkpoints, env_config, args.day)
    env = BatteryEnv(env_config)
    traces = {f"epoch_{e:04d}": analysis.run_episode(p, env, args.day) for e, p in checkpoints}
    histograms = {f"epoch_{e:04d}": h for e, h in progression}
    shares = {
        f"{e:04d}": {f"{s}-{t}": {"charged_share": h.share(s, t, "charged"),
                                   "discharged_share": h.share(s, t, "discharged")}
                     for s, t, _ in h.slots}
        for e, h in progression
    }
    analysis.emit_report(_out_dir(args, config), traces=traces, histograms=histograms,
                         summary={"run": str(run), "probe_day": args.day, "slot_shares": shares})
    return 0


def cmd_gen_data(args, config: RunConfig) -> int:
    if args.days is not None:
        config.set("data.days", args.days)
    if args.seed is not None:
        config.set("data.seed", args.seed)
    if config["data.days"] < 1:
        raise ConfigError("--days must be at least 1")
    profile = generate(config.synthetic_spec())
    path = write_csv(profile, args.output)
    load_csv(path)
    print(f"wrote {profile.day_count} days to {path} (sha256 of loads {profile.digest[:12]})")
    return 0


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep, "oracle": cmd_oracle,
            "explain": cmd_explain, "gen-data": cmd_gen_data}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="storage-dqn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, formatter_class=argparse.RawDescriptionHelpFormatter,
                           epilog="config keys read:\n  " + "\n  ".join(keys_for(*READS[name])))
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        p.add_argument("--seed", type=int, help="run seed (data seed for gen-data)")
        if name != "gen-data":
            p.add_argument("--out", help="output directory (default $STORAGE_DQN_OUT or run.out)")
        if name in ("eval", "oracle", "explain"):
            p.add_argument("--days", choices=("train", "test"), default="test", help="which data split")
        if name == "eval":
            p.add_argument("--checkpoint", required=True)
        if name == "explain":
            p.add_argument("--run", required=True, help="directory written by 'train'")
            p.add_argument("--day", type=int, default=0, help="probe day within the split")
        if name == "sweep":
            p.add_argument("--jobs", type=int, default=1, help="train capacity cells in parallel")
        if name == "gen-data":
            p.add_argument("--days", type=int)
            p.add_argument("--output", required=True, help="CSV path to write")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen-data":
            config = RunConfig.load(args.config) if args.config else RunConfig()
            config.override(args.set)
        else:
            config = _load_config(args)
        return COMMANDS[args.command](args, config)
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
