"""Command-line interface.

Subcommands
-----------
generate   build a scenario replay file from a config and seed
run        one seeded end-to-end run (association, allocators, metrics)
sweep      Monte Carlo sweep over a parameter grid (presets fig3/4/5)
compare    paired per-seed comparison of the two allocators
validate   run the built-in oracle suites

Every output file embeds the resolved config hash and the seed(s); bodies
contain no timestamps, so identical invocations produce byte-identical
files.  Exit codes: 0 success, 2 configuration error, 3 infeasible
scenario/instance, 4 internal failure.  Sweep items run in a worker pool
sized by the HAPSRIS_WORKERS environment variable (default 1).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__, diagnostics
from .allocation import AllocationError, AllocationResult
from .channel import channels_to_dict, effective_gain
from .config import (ConfigError, ScenarioConfig, apply_overrides,
                     config_hash, load_config)
from .experiments import (SWEEP_PARAMETERS, SweepSpec, preset_sweep,
                          raw_csv, report_csv, run_sweep, simulate_run,
                          summary_text)
from .metrics import RunMetrics
from .scenario import (ScenarioInfeasibleError, build_scenario,
                       scenario_from_file, scenario_to_file)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4


def _parse_seeds(raw: str) -> tuple[int, ...]:
    raw = raw.strip()
    if ":" in raw:
        lo, hi = raw.split(":", 1)
        return tuple(range(int(lo), int(hi)))
    if "," in raw:
        return tuple(int(part) for part in raw.split(",") if part.strip())
    return (int(raw),)


def _load(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    cfg = apply_overrides(cfg, args.set or [])
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(rng_seed=args.seed)
    return cfg


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default="paper_defaults",
                        help="config file path or 'paper_defaults'")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field (repeatable)")


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_generate(args) -> int:
    cfg = _load(args)
    scenario = build_scenario(cfg)
    channels = None
    if args.dump_channels:
        channels = channels_to_dict(effective_gain(scenario))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    scenario_to_file(scenario, out, channels=channels)
    print(f"wrote {out} (config {config_hash(cfg)}, seed {cfg.rng_seed})")
    return EXIT_OK


def _metrics_block(m: RunMetrics) -> list[str]:
    eta = f"{m.eta_per_w:.6e}" if m.eta_per_w is not None else "absent"
    eta_dbm = f"{m.eta_per_dbm:.6e}" if m.eta_per_dbm is not None else "absent"
    avg = (f"{m.avg_power_per_served_w:.6e}"
           if m.avg_power_per_served_w is not None else "absent")
    return [
        f"method: {m.method}",
        f"  connected: {m.within_cell} within-cell + {m.served_beyond} "
        f"beyond-cell = {100 * m.pct_connected:.2f}% of {m.total_ues}",
        f"  avg power per served UE: {avg} W",
        f"  resource efficiency: {eta} /W (dBm-denominator variant: {eta_dbm})",
        f"  totals: {m.total_cs_power_w:.6e} W transmit, "
        f"{m.total_ris_units} units ({m.total_ris_power_w:.6e} W)",
    ]


def _allocation_csv(alloc: AllocationResult, h_by_ue) -> str:
    lines = ["ue_id,h_sq,power_w,units,rate_bps,method"]
    for i, ue in enumerate(alloc.served_ids):
        lines.append(f"{ue},{h_by_ue[ue]:.10e},{alloc.power_w[i]:.10e},"
                     f"{int(alloc.units[i])},{alloc.per_ue_rate_bps[i]:.10e},"
                     f"{alloc.method}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    cfg = _load(args)
    if args.scenario:
        scenario = scenario_from_file(args.scenario)
        cfg = scenario.config
    methods = (("algorithm1", "benchmark") if args.method == "both"
               else (args.method,))
    result = simulate_run(cfg, cfg.rng_seed, methods=methods,
                          objective_mask=args.objective_mask)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = config_hash(cfg)

    lines = [
        f"hapsris {__version__} run report",
        f"config_hash: {digest}",
        f"seed: {cfg.rng_seed}",
        f"objective_mask: {args.objective_mask}",
        "",
        f"association: {result.association.within_cell_count} within-cell, "
        f"{len(result.association.stranded)} stranded "
        f"(capacity {result.association.bs_capacity}/BS)",
        "per-BS load: " + " ".join(str(int(x)) for x in result.association.bs_load),
        "",
    ]
    for method in methods:
        lines.extend(_metrics_block(result.metrics[method]))
        lines.append("")
        h_by_ue = {ue: float(result.channels.haps_gain_sq[ue])
                   for ue in result.association.stranded}
        table = _allocation_csv(result.allocations[method], h_by_ue)
        (out_dir / f"allocation_{method}.csv").write_text(
            f"# hapsris {__version__}\n# config_hash: {digest}\n"
            f"# seed: {cfg.rng_seed}\n" + table)
    (out_dir / "run_summary.txt").write_text("\n".join(lines))
    print("\n".join(lines))
    return EXIT_OK


def _sweep_spec(args, cfg: ScenarioConfig) -> SweepSpec:
    seeds = tuple(range(args.seeds)) if args.seeds_list is None \
        else _parse_seeds(args.seeds_list)
    if args.preset:
        spec = preset_sweep(args.preset, cfg, num_seeds=len(seeds))
        return SweepSpec(spec.parameter, spec.grid, spec.base_config,
                         spec.methods, seeds, spec.objective_mask, spec.label)
    if not args.param or not args.grid:
        raise ConfigError("sweep needs --preset or both --param and --grid")
    grid = tuple(float(v) for v in args.grid.split(","))
    return SweepSpec(args.param, grid, cfg, seeds=seeds,
                     objective_mask=args.objective_mask, label="custom")


def cmd_sweep(args) -> int:
    cfg = _load(args)
    spec = _sweep_spec(args, cfg)
    report = run_sweep(spec)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = spec.label or "sweep"
    (out_dir / f"{stem}_table.csv").write_text(report_csv(report))
    (out_dir / f"{stem}_runs.csv").write_text(raw_csv(report))
    (out_dir / f"{stem}_summary.txt").write_text(summary_text(report))
    if args.plots:
        from .experiments import plot_report
        for path in plot_report(report, out_dir, stem):
            print(f"wrote {path}")
    print(summary_text(report))

    failures = sum(r.num_failed for r in report.rows)
    successes = sum(r.num_seeds - r.num_failed for r in report.rows)
    return EXIT_OK if successes > 0 else EXIT_INTERNAL if failures else EXIT_OK


def cmd_compare(args) -> int:
    cfg = _load(args)
    seeds = _parse_seeds(args.seeds)
    rows = ["seed,pct_alg1,pct_bench,eta_alg1,eta_bench,eta_advantage"]
    pct_diff, eta_ratio = [], []
    for seed in seeds:
        result = simulate_run(cfg, seed, objective_mask=args.objective_mask)
        m1, mb = result.metrics["algorithm1"], result.metrics["benchmark"]
        e1 = m1.eta_per_w if m1.eta_per_w is not None else float("nan")
        eb = mb.eta_per_w if mb.eta_per_w is not None else float("nan")
        adv = e1 / eb if eb and np.isfinite(eb) and eb > 0 else float("nan")
        rows.append(f"{seed},{m1.pct_connected:.6f},{mb.pct_connected:.6f},"
                    f"{e1:.6e},{eb:.6e},{adv:.6f}")
        pct_diff.append(m1.pct_connected - mb.pct_connected)
        if np.isfinite(adv):
            eta_ratio.append(adv)

    digest = config_hash(cfg)
    body = (f"# hapsris {__version__}\n# config_hash: {digest}\n"
            f"# seeds: {','.join(str(s) for s in seeds)}\n"
            + "\n".join(rows) + "\n")
    if args.out_dir:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "compare.csv").write_text(body)
    print(body)
    print(f"mean connectivity advantage: {100 * np.mean(pct_diff):+.3f} points")
    if eta_ratio:
        print(f"mean efficiency ratio (algorithm1/benchmark): "
              f"{np.mean(eta_ratio):.4f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    results = diagnostics.run_all(quick=args.quick)
    all_ok = True
    for check in results:
        state = "PASS" if check.ok else "FAIL"
        print(f"[{state}] {check.name}: {check.detail}")
        all_ok &= check.ok
    return EXIT_OK if all_ok else EXIT_INTERNAL


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapsris",
        description="Beyond-cell connectivity simulator and resource allocator")
    parser.add_argument("--version", action="version",
                        version=f"hapsris {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a scenario replay file")
    _add_common(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="scenario.json")
    p.add_argument("--dump-channels", action="store_true",
                   help="embed the channel state for debugging")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("run", help="one seeded end-to-end run")
    _add_common(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--scenario", default=None,
                   help="replay file instead of generating from config")
    p.add_argument("--method", choices=("both", "algorithm1", "benchmark"),
                   default="both")
    p.add_argument("--objective-mask",
                   choices=("full", "power-only", "units-only"), default="full")
    p.add_argument("--out-dir", default="runs")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="Monte Carlo parameter sweep")
    _add_common(p)
    p.add_argument("--preset", choices=("fig3", "fig4", "fig5"), default=None)
    p.add_argument("--param", choices=sorted(SWEEP_PARAMETERS), default=None)
    p.add_argument("--grid", default=None, help="comma-separated values")
    p.add_argument("--seeds", type=int, default=100,
                   help="number of seeds (0..N-1)")
    p.add_argument("--seeds-list", default=None,
                   help="explicit seeds, e.g. '0:100' or '1,2,7'")
    p.add_argument("--objective-mask",
                   choices=("full", "power-only", "units-only"), default="full")
    p.add_argument("--out-dir", default="sweeps")
    p.add_argument("--plots", action="store_true",
                   help="also write vector plots (requires matplotlib)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="paired allocator comparison")
    _add_common(p)
    p.add_argument("--seeds", default="0:20", help="'0:100', '7', or '1,2,5'")
    p.add_argument("--objective-mask",
                   choices=("full", "power-only", "units-only"), default="full")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="run the built-in oracle suites")
    p.add_argument("--quick", action="store_true",
                   help="reduced sample counts, under a minute")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ScenarioInfeasibleError, AllocationError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
