"""Command-line entry point.

Subcommands: ``single`` (one paired trial), ``sweep-users``,
``sweep-data``.  Effective configuration = defaults, overlaid by the
JSON config file (``--config``), overlaid by ``--set key=value``
overrides; the result is snapshotted to ``config.snapshot.json`` next to
the CSV outputs so any run can be reproduced from its artifact
directory.

Exit codes: 0 success, 2 configuration error, 3 I/O error,
4 simulation error.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .channel import ChannelParams
from .config import ConfigError, SimConfig
from .harness import sweep_data, sweep_users, write_results

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SIM = 4

_INT_FIELDS = {"n_subcarriers", "n_ues", "n_tags", "k_max", "n_trials",
               "seed"}
_BOOL_FIELDS = {"ambc_enabled"}
_SIM_FIELDS = {f.name for f in dataclasses.fields(SimConfig)}
_CHANNEL_FIELDS = {f.name for f in dataclasses.fields(ChannelParams)}

DEFAULT_UE_COUNTS = list(range(10, 101, 10))
DEFAULT_DATA_SIZES = [s * 1000.0 for s in range(20, 101, 10)]


def _coerce(key, raw):
    try:
        if key in _BOOL_FIELDS:
            if isinstance(raw, bool):
                return raw
            if str(raw).lower() in ("true", "1"):
                return True
            if str(raw).lower() in ("false", "0"):
                return False
            raise ValueError("expected true/false")
        if key in _INT_FIELDS:
            return int(raw)
        return float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid value for {key!r}: {raw!r} ({exc})")


def _merge(base: dict, updates: dict) -> dict:
    for key, value in updates.items():
        if key == "channel":
            if not isinstance(value, dict):
                raise ConfigError("channel must be an object")
            for ck, cv in value.items():
                if ck not in _CHANNEL_FIELDS:
                    raise ConfigError(f"unknown channel parameter {ck!r}")
                base["channel"][ck] = _coerce(ck, cv)
        elif key in _SIM_FIELDS:
            base[key] = _coerce(key, value)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    return base


def _build(base: dict) -> SimConfig:
    channel_kwargs = base.pop("channel")
    try:
        cfg = SimConfig(channel=ChannelParams(**channel_kwargs), **base)
    except ValueError as exc:
        raise ConfigError(str(exc))
    return cfg.validate()


def parse_config(text: str) -> SimConfig:
    """SimConfig from a JSON object; absent fields keep their defaults."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    base = dataclasses.asdict(SimConfig())
    return _build(_merge(base, data))


def _parse_overrides(pairs):
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override {pair!r} is not key=value")
        key, value = pair.split("=", 1)
        if key.startswith("channel."):
            out.setdefault("channel", {})[key[len("channel."):]] = value
        else:
            out[key] = value
    return out


def build_effective_config(config_path=None, overrides=(), seed=None,
                           trials=None) -> SimConfig:
    """defaults <- config file <- --set overrides <- --seed/--trials."""
    base = dataclasses.asdict(SimConfig())
    if config_path is not None:
        try:
            text = Path(config_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {config_path} is not valid "
                              f"JSON: {exc}")
        if not isinstance(data, dict):
            raise ConfigError(f"config file {config_path} must hold a "
                              f"JSON object")
        base = _merge(base, data)
    base = _merge(base, _parse_overrides(overrides))
    if seed is not None:
        base["seed"] = int(seed)
    if trials is not None:
        base["n_trials"] = int(trials)
    return _build(base)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ambcsim",
        description="Uplink cell simulator: UAV relay, backscatter tags, "
                    "NOMA power allocation.")
    parser.add_argument("--config", metavar="PATH",
                        help="JSON config file (SimConfig field names)")
    parser.add_argument("--out", metavar="DIR", default="results",
                        help="output directory for CSVs and snapshot")
    parser.add_argument("--seed", type=int, help="override base seed")
    parser.add_argument("--set", dest="overrides", action="append",
                        default=[], metavar="KEY=VALUE",
                        help="override a config field (repeatable)")
    parser.add_argument("--trials", type=int, help="trials per sweep point")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("subcommand",
                        choices=["single", "sweep-users", "sweep-data"])
    return parser


def _print_summary(report, out):
    by_value = {}
    for agg in report.aggregates:
        by_value.setdefault(agg.sweep_value, {})[agg.mode] = agg
    print(f"{'sweep_value':>12} {'mode':>9} {'mean_ee':>15} "
          f"{'ci95_half':>12}", file=out)
    gains = []
    for value in sorted(by_value):
        modes = by_value[value]
        for mode in ("baseline", "triad"):
            agg = modes[mode]
            print(f"{value:>12g} {mode:>9} {agg.mean_ee:>15.6g} "
                  f"{agg.ci95_half:>12.4g}", file=out)
        base = modes["baseline"].mean_ee
        if base > 0:
            gains.append(100.0 * (modes["triad"].mean_ee - base) / base)
    if gains:
        print(f"mean triad-vs-baseline improvement: "
              f"{sum(gains) / len(gains):.2f}%", file=out)


def run_cli(args, out=sys.stdout, err=sys.stderr) -> int:
    try:
        cfg = build_effective_config(args.config, args.overrides, args.seed,
                                     args.trials)
    except (ConfigError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=err)
        return EXIT_CONFIG
    if args.subcommand == "single" and args.trials is None:
        cfg = dataclasses.replace(cfg, n_trials=1)

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        snapshot = json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
        (out_dir / "config.snapshot.json").write_text(snapshot + "\n",
                                                      encoding="utf-8")
    except OSError as exc:
        print(f"I/O error: {exc}", file=err)
        return EXIT_IO

    try:
        if args.subcommand == "single":
            report = sweep_users(cfg, [cfg.n_ues])
        elif args.subcommand == "sweep-users":
            report = sweep_users(cfg, DEFAULT_UE_COUNTS)
        else:
            report = sweep_data(cfg, DEFAULT_DATA_SIZES)
    except (ValueError, ArithmeticError) as exc:
        print(f"simulation error: {exc}", file=err)
        return EXIT_SIM

    try:
        write_results(report, out_dir)
    except OSError as exc:
        print(f"I/O error: {exc}", file=err)
        return EXIT_IO

    if args.subcommand == "single":
        for r in sorted(report.records, key=lambda r: (r.trial, r.mode)):
            print(f"trial {r.trial} {r.mode}: ee={r.ee:.6g} bits/J "
                  f"served={r.served} outage={r.outage} k={r.k}", file=out)
    _print_summary(report, out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run_cli(args)


if __name__ == "__main__":
    sys.exit(main())
