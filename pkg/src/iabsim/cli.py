"""Command-line entry point: experiment runs, parameter sweeps, config
validation, and the acceptance verifier.

Exit codes: 0 success, 1 acceptance failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from .model import FULL_BUFFER
from .simulate import DUPLEX_MODES, ExperimentConfig, Scheme, run_simulation

SWEEP_AXES = ("ue_count", "bt_enabled_count", "duplex", "switch_point")


class ConfigError(ValueError):
    pass


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def parse_config(doc: dict) -> ExperimentConfig:
    """Validate a raw config document and build an ExperimentConfig.

    Every diagnostic names the offending field.
    """
    _expect(isinstance(doc, dict), "config root must be an object")
    known = {"scenario", "schemes", "duplex", "routing", "switch_point",
             "snapshots", "seed", "slots_per_frame"}
    for key in doc:
        _expect(key in known, f"unknown field: {key}")

    _expect("scenario" in doc, "missing field: scenario")
    sc = doc["scenario"]
    _expect(isinstance(sc, dict), "scenario: must be an object")
    kind = sc.get("kind")
    _expect(kind in ("manhattan", "platoon", "file"),
            "scenario.kind: must be manhattan, platoon, or file")

    _expect("schemes" in doc, "missing field: schemes")
    schemes = doc["schemes"]
    _expect(isinstance(schemes, list) and len(schemes) > 0,
            "schemes: must be a non-empty list")
    valid = {s.value for s in Scheme}
    for name in schemes:
        _expect(name in valid, f"schemes: unknown scheme {name!r}")

    snapshots = doc.get("snapshots", 2)
    _expect(isinstance(snapshots, int) and snapshots >= 1,
            "snapshots: must be an integer >= 1")
    seed = doc.get("seed", 1)
    _expect(isinstance(seed, int), "seed: must be an integer")
    slots = doc.get("slots_per_frame", 100)
    _expect(isinstance(slots, int) and slots >= 1,
            "slots_per_frame: must be an integer >= 1")

    duplex = doc.get("duplex", "half")
    _expect(duplex in DUPLEX_MODES,
            f"duplex: must be one of {sorted(DUPLEX_MODES)}")
    routing = doc.get("routing", "fixed")
    _expect(routing in ("fixed", "dynamic"),
            "routing: must be fixed or dynamic")
    switch_point = doc.get("switch_point", "flexible")
    _expect(switch_point in ("flexible", "fixed"),
            "switch_point: must be flexible or fixed")

    kw = dict(
        scenario_kind=kind,
        schemes=tuple(schemes),
        duplex=duplex,
        routing=routing,
        switch_point=switch_point,
        snapshots=snapshots,
        seed=seed,
        slots_per_frame=slots,
    )
    if kind == "manhattan":
        kw["ue_count"] = sc.get("ue_count", 20)
        kw["n_assoc"] = sc.get("n_assoc", 2)
        kw["dl_demand_bits"] = sc.get("dl_demand_bits", FULL_BUFFER)
        kw["ul_demand_bits"] = sc.get("ul_demand_bits", FULL_BUFFER)
        _expect(isinstance(kw["ue_count"], int) and kw["ue_count"] >= 0,
                "scenario.ue_count: must be an integer >= 0")
    elif kind == "platoon":
        kw["n_vehicles"] = sc.get("n_vehicles", 10)
        kw["speed_kmh"] = sc.get("speed_kmh", 50.0)
        kw["bt_enabled_count"] = sc.get("bt_enabled_count", 0)
        kw["packet_bits"] = sc.get("packet_bits", 5e6)
        _expect(isinstance(kw["n_vehicles"], int) and kw["n_vehicles"] >= 2,
                "scenario.n_vehicles: must be an integer >= 2")
    else:
        _expect("path" in sc, "scenario.path: required for kind=file")
        kw["scenario_path"] = sc["path"]
    return ExperimentConfig(**kw)


def load_config(path: str) -> tuple[ExperimentConfig, str]:
    """Parse a config file; returns the config and its content hash."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    cfg = parse_config(doc)
    digest = hashlib.sha256(
        json.dumps(doc, sort_keys=True).encode()
    ).hexdigest()[:16]
    return cfg, digest


def _write_rows(rows: list[dict], path: Path, extra: Optional[dict] = None) -> None:
    fieldnames = list(extra or {}) + ["snapshot", "scheme", "metric", "value"]
    with path.open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fieldnames)
        w.writeheader()
        for r in rows:
            w.writerow({**(extra or {}), **r})


def _print_summaries(summaries) -> None:
    print(f"{'scheme':<14} {'edge rate':>12} {'avg rate':>12} {'latency':>10}")
    for s in summaries:
        lat = f"{s.mean_latency:.2f}" if s.mean_latency is not None else "-"
        print(f"{s.scheme:<14} {s.edge_rate:>12.4g} {s.avg_rate:>12.4g} {lat:>10}")


def cmd_run(args) -> int:
    cfg, digest = load_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.snapshots is not None:
        cfg = dataclasses.replace(cfg, snapshots=args.snapshots)
    rows, summaries = run_simulation(cfg, threads=args.threads)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(rows, out / "results.csv")
    summary_doc = {
        "config_hash": digest,
        "seed": cfg.seed,
        "snapshots": cfg.snapshots,
        "summaries": [dataclasses.asdict(s) for s in summaries],
    }
    (out / "summary.json").write_text(json.dumps(summary_doc, indent=2))
    _print_summaries(summaries)
    print(f"wrote {out / 'results.csv'} and {out / 'summary.json'}")
    return 0


def _parse_axis_value(axis: str, raw: str):
    if axis in ("ue_count", "bt_enabled_count"):
        return int(raw)
    return raw


def cmd_sweep(args) -> int:
    cfg, digest = load_config(args.config)
    if args.axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis: {args.axis} (use one of {SWEEP_AXES})")
    if not args.values:
        raise ConfigError("sweep needs at least one value")
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.snapshots is not None:
        cfg = dataclasses.replace(cfg, snapshots=args.snapshots)

    values = [_parse_axis_value(args.axis, v) for v in args.values.split(",") if v]
    if not values:
        raise ConfigError("sweep needs at least one value")

    all_rows: list[dict] = []
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for v in values:
        point = dataclasses.replace(cfg, **{args.axis: v})
        if args.axis == "duplex":
            if v not in DUPLEX_MODES:
                raise ConfigError(f"duplex: unknown mode {v!r}")
        rows, summaries = run_simulation(point, threads=args.threads)
        for r in rows:
            all_rows.append({args.axis: v, **r})
        print(f"-- {args.axis}={v}")
        _print_summaries(summaries)

    fieldnames = [args.axis, "snapshot", "scheme", "metric", "value"]
    with (out / "sweep.csv").open("w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fieldnames)
        w.writeheader()
        w.writerows(all_rows)
    (out / "sweep.json").write_text(json.dumps(
        {"config_hash": digest, "seed": cfg.seed, "axis": args.axis,
         "values": values}, indent=2))
    print(f"wrote {out / 'sweep.csv'}")
    return 0


def cmd_verify(args) -> int:
    from .acceptance import run_all

    indices = None
    if args.only:
        indices = [int(x) for x in args.only.split(",")]
    results = run_all(indices=indices)
    failures = [r for r in results if not r.passed]
    if failures:
        names = ", ".join(f"{r.index} ({r.name})" for r in failures)
        print(f"FAILED: {names}")
        return 1
    print(f"all {len(results)} criteria passed")
    return 0


def cmd_validate_config(args) -> int:
    cfg, digest = load_config(args.config)
    print(f"ok: {args.config} (hash {digest})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="iabsim",
        description="Multihop mm-wave access/backhaul scheduling simulator",
    )
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("config")
    run_p.add_argument("--out", default="results")
    run_p.add_argument("--seed", type=int, default=None)
    run_p.add_argument("--snapshots", type=int, default=None)
    run_p.add_argument("--threads", type=int, default=1)
    run_p.set_defaults(fn=cmd_run)

    sweep_p = sub.add_parser("sweep", help="run one experiment per axis value")
    sweep_p.add_argument("config")
    sweep_p.add_argument("--axis", required=True)
    sweep_p.add_argument("--values", required=True,
                         help="comma-separated axis values")
    sweep_p.add_argument("--out", default="results")
    sweep_p.add_argument("--seed", type=int, default=None)
    sweep_p.add_argument("--snapshots", type=int, default=None)
    sweep_p.add_argument("--threads", type=int, default=1)
    sweep_p.set_defaults(fn=cmd_sweep)

    verify_p = sub.add_parser("verify", help="run the acceptance suite")
    verify_p.add_argument("--only", default=None,
                          help="comma-separated criterion numbers")
    verify_p.set_defaults(fn=cmd_verify)

    val_p = sub.add_parser("validate-config", help="check a config file")
    val_p.add_argument("config")
    val_p.set_defaults(fn=cmd_validate_config)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
