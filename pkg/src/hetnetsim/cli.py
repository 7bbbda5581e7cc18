"""Command-line front end.

Four subcommands: ``deploy`` samples a network and writes it out,
``simulate`` runs seeded trials and reports every bound check,
``sweep`` fits a scaling exponent across densities, and ``verify``
is a compact simulate that exists to turn bound checks into an exit
code.

Exit codes: 0 all checked bounds hold (pass fraction at least 0.95
per family), 1 a bound family failed, 2 bad configuration or usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from . import figures
from .analysis import (
    DEFAULT_FRAMES,
    STATISTICS,
    aggregate_checks,
    default_workers,
    scaling_sweep,
    simulate_trial,
    write_fit_json,
    write_loads_csv,
    write_sweep_csv,
    write_trace_csv,
    write_trials_json,
)
from .deployment import Model, ScalingConfig, deploy
from .geometry import substream_seed
from .regions import build_avoidance_regions, build_preservation_regions

EMIT_CHOICES = ("json", "csv", "png", "pbm", "slot-trace")
PASS_FRACTION = 0.95


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with configuration fields")
    common.add_argument("--n", type=float, help="primary node density")
    common.add_argument("--beta", type=float, help="secondary density exponent")
    common.add_argument("--gamma", type=float, help="base-station density exponent")
    common.add_argument("--alpha", type=float, help="path-loss exponent")
    common.add_argument("--model", choices=[m.value for m in Model])
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument(
        "--emit", default="json,csv,png",
        help=f"comma-separated artifact kinds from {','.join(EMIT_CHOICES)}",
    )

    parser = argparse.ArgumentParser(
        prog="hetnetsim",
        description="co-existing licensed/unlicensed network simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("deploy", parents=[common],
                   help="sample one deployment and write it out")

    sim = sub.add_parser("simulate", parents=[common],
                         help="run seeded trials and check every bound")
    sim.add_argument("--trials", type=int, default=1)
    sim.add_argument("--frames", type=int, default=DEFAULT_FRAMES)

    sweep = sub.add_parser("sweep", parents=[common],
                           help="fit a scaling exponent across densities")
    sweep.add_argument("--densities", required=True,
                       help="comma-separated density values")
    sweep.add_argument("--trials", type=int, default=5)
    sweep.add_argument("--statistic", default="s_alone",
                       choices=sorted(STATISTICS))
    sweep.add_argument("--workers", type=int, default=None,
                       help="process count (default: HETNET_THREADS or CPUs)")
    sweep.add_argument("--frames", type=int, default=DEFAULT_FRAMES)

    ver = sub.add_parser("verify", parents=[common],
                         help="run trials purely to grade the bound checks")
    ver.add_argument("--trials", type=int, default=10)
    ver.add_argument("--frames", type=int, default=DEFAULT_FRAMES)
    return parser


def _load_config(args: argparse.Namespace) -> ScalingConfig:
    data: dict = {}
    if args.config:
        with open(args.config) as f:
            loaded = json.load(f)
        if not isinstance(loaded, dict):
            raise ValueError(f"config file {args.config} must hold a JSON object")
        data.update(loaded)
    for key in ("n", "beta", "gamma", "alpha", "model"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    try:
        return ScalingConfig.from_dict(data)
    except TypeError as exc:
        raise ValueError(f"bad configuration: {exc}") from exc


def _parse_emit(value: str) -> set:
    kinds = {item.strip() for item in value.split(",") if item.strip()}
    unknown = kinds - set(EMIT_CHOICES)
    if unknown:
        raise ValueError(
            f"unknown emit kinds {sorted(unknown)}; choose from {list(EMIT_CHOICES)}"
        )
    return kinds


def _trial_seed(master: int, n: float, trial: int) -> int:
    # the same (seed, n, trial) triple maps to the same stream in
    # simulate and sweep, so single runs reproduce sweep points
    return substream_seed(master, int(np.float64(n).view(np.uint64)), trial)


def _print_checks(trials: list) -> bool:
    families = aggregate_checks(trials)
    all_pass = True
    for name, fam in families.items():
        ok = fam["pass_fraction"] >= PASS_FRACTION
        all_pass = all_pass and ok
        status = "PASS" if ok else "FAIL"
        extras = []
        if fam["voided"]:
            extras.append(f"{fam['voided']} voided")
        if fam["vacuous"]:
            extras.append(f"{fam['vacuous']} vacuous")
        note = f" ({', '.join(extras)})" if extras else ""
        print(f"{status} {name}: {fam['passed']}/{fam['counted']}{note}")
    return all_pass


def _regions_for_plot(instance):
    preservation = avoidance = None
    try:
        preservation = build_preservation_regions(instance)
        if instance.model is Model.INFRASTRUCTURE:
            avoidance = build_avoidance_regions(instance)
    except ValueError:
        pass  # grid too coarse; plot without shading
    return preservation, avoidance


def cmd_deploy(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    emit = _parse_emit(args.emit)
    os.makedirs(args.out, exist_ok=True)
    instance = deploy(cfg, args.seed)
    preservation = build_preservation_regions(instance)
    avoidance = None
    if cfg.model is Model.INFRASTRUCTURE:
        avoidance = build_avoidance_regions(instance)
    print(
        f"deployed n={instance.primary.count} primary, "
        f"m={instance.secondary.count} secondary, l={instance.l} base stations"
    )
    print(f"blocked cells: {preservation.num_blocked}"
          f" of {instance.secondary_grid.num_cells}")
    if "json" in emit:
        path = os.path.join(args.out, "instance.json")
        instance.write_json(path)
        print(f"wrote {path}")
        path = os.path.join(args.out, "regions.json")
        preservation.write_json(path)
        print(f"wrote {path}")
    if "csv" in emit:
        for name, nodes in (("primary_nodes.csv", instance.primary),
                            ("secondary_nodes.csv", instance.secondary)):
            path = os.path.join(args.out, name)
            nodes.to_csv(path)
            print(f"wrote {path}")
    if "pbm" in emit:
        path = os.path.join(args.out, "regions.pbm")
        preservation.write_pbm(path)
        print(f"wrote {path}")
    if "png" in emit:
        path = os.path.join(args.out, "deployment.png")
        figures.plot_deployment(instance, path, preservation, avoidance)
        print(f"wrote {path}")
    return 0


def _run_trials(cfg: ScalingConfig, args: argparse.Namespace, emit: set) -> list:
    trials = []
    for t in range(args.trials):
        trials.append(simulate_trial(
            cfg,
            _trial_seed(args.seed, cfg.n, t),
            frames=args.frames,
            trace=("slot-trace" in emit and t == 0),
            keep_loads=(t == 0),
        ))
    return trials


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    emit = _parse_emit(args.emit)
    if args.trials < 1:
        raise ValueError(f"trials must be >= 1, got {args.trials}")
    os.makedirs(args.out, exist_ok=True)
    trials = _run_trials(cfg, args, emit)
    first = trials[0]
    rep = first.report
    print(f"trials: {len(trials)}, n={cfg.n:g}, model={cfg.model.value}")
    print(f"throughput per pair (trial 0): primary {rep.t_primary:.4g}, "
          f"alone {rep.t_alone:.4g}, secondary {rep.t_secondary:.4g}")
    if first.epsilon_s is not None:
        print(f"secondary outage (trial 0): {first.epsilon_s:.4g} "
              f"({rep.served_secondary}/{rep.total_secondary} served)")
    if "json" in emit:
        path = os.path.join(args.out, "report.json")
        write_trials_json(trials, path)
        print(f"wrote {path}")
    if "csv" in emit and first.cell_loads:
        path = os.path.join(args.out, "loads.csv")
        write_loads_csv(first.cell_loads, path)
        print(f"wrote {path}")
    if "slot-trace" in emit and first.trace is not None:
        path = os.path.join(args.out, "trace.csv")
        write_trace_csv(first.trace, path)
        print(f"wrote {path}")
    if "png" in emit:
        instance = deploy(cfg, _trial_seed(args.seed, cfg.n, 0))
        preservation, avoidance = _regions_for_plot(instance)
        path = os.path.join(args.out, "deployment.png")
        figures.plot_deployment(instance, path, preservation, avoidance)
        print(f"wrote {path}")
        if first.cell_loads:
            path = os.path.join(args.out, "loads.png")
            figures.plot_load_heatmap(_load_grid(first.cell_loads), path)
            print(f"wrote {path}")
    ok = _print_checks(trials)
    return 0 if ok else 1


def _load_grid(rows: list) -> np.ndarray:
    """Pick the densest network's counts out of a load table."""
    preferred = ("secondary", "primary", "downlink", "uplink")
    by_network: dict = {}
    for network, col, row, count, _, _ in rows:
        by_network.setdefault(network, []).append((col, row, count))
    for name in preferred:
        entries = by_network.get(name)
        if not entries:
            continue
        side = max(r for _, r, _ in entries) + 1
        grid = np.zeros((side, side))
        for col, row, count in entries:
            grid[row, col] = count
        return grid
    raise ValueError("load table is empty")


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    emit = _parse_emit(args.emit)
    densities = [float(x) for x in args.densities.split(",") if x.strip()]
    workers = args.workers if args.workers is not None else default_workers()
    os.makedirs(args.out, exist_ok=True)
    fit = scaling_sweep(
        cfg, densities, args.trials, args.statistic, args.seed,
        workers=workers, frames=args.frames,
    )
    print(f"{fit.statistic} ~ {fit.x_name}^{fit.slope:.4f} "
          f"(r^2 {fit.r_squared:.4f}, {fit.trials} trials x {len(fit.densities)} densities)")
    if fit.excluded:
        print(f"excluded densities (non-positive mean): {fit.excluded}")
    if "json" in emit:
        path = os.path.join(args.out, "fit.json")
        write_fit_json(fit, path)
        print(f"wrote {path}")
    if "csv" in emit:
        path = os.path.join(args.out, "sweep.csv")
        write_sweep_csv(fit, path)
        print(f"wrote {path}")
    if "png" in emit:
        path = os.path.join(args.out, "fit.png")
        figures.plot_scaling_fit(fit, path)
        print(f"wrote {path}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    cfg = _load_config(args)
    emit = _parse_emit(args.emit)
    if args.trials < 1:
        raise ValueError(f"trials must be >= 1, got {args.trials}")
    os.makedirs(args.out, exist_ok=True)
    trials = _run_trials(cfg, args, emit=set())
    ok = _print_checks(trials)
    if "json" in emit:
        path = os.path.join(args.out, "verify.json")
        write_trials_json(trials, path)
        print(f"wrote {path}")
    print("result: " + ("all bound families hold" if ok else "bound family failed"))
    return 0 if ok else 1


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "deploy": cmd_deploy,
        "simulate": cmd_simulate,
        "sweep": cmd_sweep,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
