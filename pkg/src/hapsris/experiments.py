"""Monte Carlo sweeps: seeded end-to-end runs, aggregation, and reports.

A sweep varies one parameter (rate threshold, RIS unit budget, or CS
power budget) over a grid, runs both allocators on every (grid point,
seed) pair, and aggregates connectivity and resource efficiency with
95% confidence intervals.  Seeds are shared across grid points and
methods (common random numbers), so per-seed paired comparisons between
the allocators are valid, not just comparisons in the mean.

Reported efficiency is also normalised per method by that method's own
maximum mean over the sweep, which is how the batch studies present it.

Reports are deterministic: identical spec plus seeds yield byte-identical
bodies.  No timestamps are written.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__ as _version
from .allocation import AllocationResult, benchmark_allocate, run_algorithm1
from .association import AssociationResult, associate
from .channel import ChannelState, effective_gain
from .config import ScenarioConfig, config_hash
from .metrics import RunMetrics, resource_efficiency
from .scenario import Scenario, build_scenario
from .units import watts_to_dbm

__all__ = [
    "RunResult",
    "simulate_run",
    "SweepSpec",
    "RawRun",
    "SweepRow",
    "ExperimentReport",
    "run_sweep",
    "preset_sweep",
    "PRESETS",
    "WORKERS_ENV_VAR",
]

WORKERS_ENV_VAR = "HAPSRIS_WORKERS"

SWEEP_PARAMETERS = {
    "r_min": "rate_threshold_bps",
    "n_max": "ris_total_units",
    "p_max_cs": "cs_total_power_w",
}

_PARAM_CASTS = {"ris_total_units": lambda v: int(round(v))}


# --------------------------------------------------------------------------
# Single end-to-end run
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RunResult:
    """Everything produced by one seeded drop."""

    seed: int
    config: ScenarioConfig
    scenario: Scenario
    channels: ChannelState
    association: AssociationResult
    allocations: dict[str, AllocationResult]
    metrics: dict[str, RunMetrics]


def simulate_run(config: ScenarioConfig, seed: int,
                 methods: tuple[str, ...] = ("algorithm1", "benchmark"),
                 objective_mask: str = "full") -> RunResult:
    """Scenario -> channels -> association -> allocation -> metrics."""
    cfg = config.replace(rng_seed=seed)
    scenario = build_scenario(cfg)
    channels = effective_gain(scenario)
    assoc = associate(scenario, channels)

    allocations: dict[str, AllocationResult] = {}
    metrics: dict[str, RunMetrics] = {}
    k2_gains = [(ue, float(channels.haps_gain_sq[ue])) for ue in assoc.stranded]
    for method in methods:
        if method == "algorithm1":
            alloc = run_algorithm1(scenario, channels, assoc, cfg,
                                   objective_mask)
        elif method == "benchmark":
            alloc = benchmark_allocate(k2_gains, cfg)
        else:
            raise ValueError(f"unknown method {method!r}")
        allocations[method] = alloc
        metrics[method] = resource_efficiency(alloc, assoc, cfg)
    return RunResult(seed, cfg, scenario, channels, assoc, allocations, metrics)


# --------------------------------------------------------------------------
# Sweep specification and records
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    """One parameter sweep: grid, methods, seeds, and the base config."""

    parameter: str                       # key of SWEEP_PARAMETERS
    grid: tuple[float, ...]
    base_config: ScenarioConfig
    methods: tuple[str, ...] = ("algorithm1", "benchmark")
    seeds: tuple[int, ...] = tuple(range(100))
    objective_mask: str = "full"
    label: str = ""

    def __post_init__(self) -> None:
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(
                f"parameter must be one of {sorted(SWEEP_PARAMETERS)}, "
                f"got {self.parameter!r}")
        if len(self.grid) == 0:
            raise ValueError("grid must be non-empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if len(self.seeds) < 1:
            raise ValueError("at least one seed is required")

    def config_at(self, value: float) -> ScenarioConfig:
        config_field = SWEEP_PARAMETERS[self.parameter]
        cast = _PARAM_CASTS.get(config_field, float)
        return self.base_config.replace(**{config_field: cast(value)})


@dataclass(frozen=True)
class RawRun:
    """One (grid value, method, seed) outcome, flattened for aggregation."""

    param_value: float
    method: str
    seed: int
    ok: bool
    error: str = ""
    pct_connected: float = float("nan")
    eta_per_w: float | None = None
    within_cell: int = 0
    served_beyond: int = 0
    avg_power_per_served_w: float | None = None


@dataclass(frozen=True)
class SweepRow:
    """Aggregate over seeds for one (grid value, method) cell."""

    param_value: float
    method: str
    num_seeds: int
    num_failed: int
    mean_pct_connected: float
    ci95_pct_connected: float
    mean_eta_per_w: float          # nan when eta was always absent
    ci95_eta_per_w: float
    mean_eta_normalized: float
    ci95_eta_normalized: float
    mean_served_beyond: float
    mean_within_cell: float


@dataclass(frozen=True)
class ExperimentReport:
    parameter: str
    rows: tuple[SweepRow, ...]
    raw: tuple[RawRun, ...]
    config_digest: str
    seeds: tuple[int, ...]
    version: str = field(default=_version)
    label: str = ""


# --------------------------------------------------------------------------
# Sweep execution
# --------------------------------------------------------------------------

def _run_item(args) -> RawRun:
    spec, value, method, seed = args
    try:
        cfg = spec.config_at(value)
        result = simulate_run(cfg, seed, methods=(method,),
                              objective_mask=spec.objective_mask)
        m = result.metrics[method]
        return RawRun(value, method, seed, True, "",
                      m.pct_connected, m.eta_per_w, m.within_cell,
                      m.served_beyond, m.avg_power_per_served_w)
    except Exception as exc:  # noqa: BLE001 - failures become report rows
        return RawRun(value, method, seed, False, f"{type(exc).__name__}: {exc}")


def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(spec: SweepSpec) -> ExperimentReport:
    """Run the full grid x method x seed lattice and aggregate."""
    items = [(spec, value, method, seed)
             for value in spec.grid
             for method in spec.methods
             for seed in spec.seeds]

    workers = _worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_run_item, items, chunksize=4))
    else:
        raw = [_run_item(item) for item in items]

    rows = _aggregate(spec, raw)
    return ExperimentReport(
        parameter=spec.parameter,
        rows=tuple(rows),
        raw=tuple(raw),
        config_digest=config_hash(spec.base_config),
        seeds=tuple(spec.seeds),
        label=spec.label,
    )


def _mean_ci(values: np.ndarray) -> tuple[float, float]:
    if values.size == 0:
        return float("nan"), float("nan")
    mean = float(np.mean(values))
    if values.size == 1:
        return mean, 0.0
    sd = float(np.std(values, ddof=1))
    return mean, 1.96 * sd / float(np.sqrt(values.size))


def _aggregate(spec: SweepSpec, raw: list[RawRun]) -> list[SweepRow]:
    cells: dict[tuple[float, str], list[RawRun]] = {}
    for record in raw:
        cells.setdefault((record.param_value, record.method), []).append(record)

    partial = []
    for value in spec.grid:
        for method in spec.methods:
            records = cells.get((value, method), [])
            done = [r for r in records if r.ok]
            pct = np.array([r.pct_connected for r in done])
            eta = np.array([r.eta_per_w for r in done
                            if r.eta_per_w is not None])
            served = np.array([r.served_beyond for r in done], dtype=float)
            k1 = np.array([r.within_cell for r in done], dtype=float)
            mean_pct, ci_pct = _mean_ci(pct)
            mean_eta, ci_eta = _mean_ci(eta)
            partial.append(dict(
                param_value=float(value), method=method,
                num_seeds=len(records), num_failed=len(records) - len(done),
                mean_pct_connected=mean_pct, ci95_pct_connected=ci_pct,
                mean_eta_per_w=mean_eta, ci95_eta_per_w=ci_eta,
                mean_served_beyond=float(np.mean(served)) if done else float("nan"),
                mean_within_cell=float(np.mean(k1)) if done else float("nan"),
            ))

    # Normalise eta per method family by its own sweep maximum.
    rows = []
    for method in spec.methods:
        family = [p for p in partial if p["method"] == method]
        etas = [p["mean_eta_per_w"] for p in family
                if np.isfinite(p["mean_eta_per_w"])]
        peak = max(etas) if etas else float("nan")
        for p in partial:
            if p["method"] != method:
                continue
            if np.isfinite(p["mean_eta_per_w"]) and peak > 0:
                norm = p["mean_eta_per_w"] / peak
                ci_norm = p["ci95_eta_per_w"] / peak
            else:
                norm, ci_norm = float("nan"), float("nan")
            rows.append(SweepRow(mean_eta_normalized=norm,
                                 ci95_eta_normalized=ci_norm, **p))
    rows.sort(key=lambda r: (r.param_value, r.method))
    return rows


# --------------------------------------------------------------------------
# Presets reproducing the batch studies
# --------------------------------------------------------------------------

def _fig3(base: ScenarioConfig, seeds) -> SweepSpec:
    return SweepSpec("r_min", (1e6, 2e6, 4e6, 8e6), base,
                     seeds=seeds, objective_mask="full", label="fig3")


def _fig4(base: ScenarioConfig, seeds) -> SweepSpec:
    grid = (10_000, 40_000, 70_000, 100_000, 130_000, 160_000, 190_000, 220_000)
    return SweepSpec("n_max", tuple(float(g) for g in grid), base,
                     seeds=seeds, objective_mask="units-only", label="fig4")


def _fig5(base: ScenarioConfig, seeds) -> SweepSpec:
    base = base.replace(ris_total_units=150_000)
    grid = tuple(10.0 ** ((dbm - 30.0) / 10.0) for dbm in range(30, 36))
    return SweepSpec("p_max_cs", grid, base,
                     seeds=seeds, objective_mask="power-only", label="fig5")


PRESETS = {"fig3": _fig3, "fig4": _fig4, "fig5": _fig5}


def preset_sweep(name: str, base_config: ScenarioConfig | None = None,
                 num_seeds: int = 100) -> SweepSpec:
    """Pinned parameter sets for the three batch studies."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    base = base_config if base_config is not None else ScenarioConfig()
    return PRESETS[name](base, tuple(range(num_seeds)))


# --------------------------------------------------------------------------
# Rendering (deterministic text bodies)
# --------------------------------------------------------------------------

def _fmt(x: float) -> str:
    if x is None:
        return ""
    if isinstance(x, float) and not np.isfinite(x):
        return "nan"
    return f"{x:.10g}"


REPORT_HEADER = ("parameter,param_value,method,num_seeds,num_failed,"
                 "mean_pct_connected,ci95_pct_connected,mean_eta_per_w,"
                 "ci95_eta_per_w,mean_eta_normalized,ci95_eta_normalized,"
                 "mean_served_beyond,mean_within_cell")

RAW_HEADER = ("parameter,param_value,method,seed,ok,pct_connected,eta_per_w,"
              "within_cell,served_beyond,avg_power_per_served_w,error")


def report_csv(report: ExperimentReport) -> str:
    lines = [
        f"# hapsris {report.version}",
        f"# config_hash: {report.config_digest}",
        f"# seeds: {','.join(str(s) for s in report.seeds)}",
        REPORT_HEADER,
    ]
    for r in report.rows:
        lines.append(",".join([
            report.parameter, _fmt(r.param_value), r.method,
            str(r.num_seeds), str(r.num_failed),
            _fmt(r.mean_pct_connected), _fmt(r.ci95_pct_connected),
            _fmt(r.mean_eta_per_w), _fmt(r.ci95_eta_per_w),
            _fmt(r.mean_eta_normalized), _fmt(r.ci95_eta_normalized),
            _fmt(r.mean_served_beyond), _fmt(r.mean_within_cell),
        ]))
    return "\n".join(lines) + "\n"


def raw_csv(report: ExperimentReport) -> str:
    lines = [
        f"# hapsris {report.version}",
        f"# config_hash: {report.config_digest}",
        RAW_HEADER,
    ]
    for r in report.raw:
        lines.append(",".join([
            report.parameter, _fmt(r.param_value), r.method, str(r.seed),
            "1" if r.ok else "0", _fmt(r.pct_connected), _fmt(r.eta_per_w),
            str(r.within_cell), str(r.served_beyond),
            _fmt(r.avg_power_per_served_w),
            r.error.replace(",", ";"),
        ]))
    return "\n".join(lines) + "\n"


def summary_text(report: ExperimentReport) -> str:
    lines = [
        f"sweep over {report.parameter} ({report.label or 'custom'})",
        f"config_hash {report.config_digest}, {len(report.seeds)} seeds, "
        f"version {report.version}",
        "",
    ]
    for r in report.rows:
        eta = f"{r.mean_eta_normalized:.4f}" if np.isfinite(r.mean_eta_normalized) else "n/a"
        lines.append(
            f"  {report.parameter}={_fmt(r.param_value):>12}  {r.method:<10}"
            f"  connected {100 * r.mean_pct_connected:6.2f}%"
            f" +- {100 * r.ci95_pct_connected:4.2f}"
            f"  eta_norm {eta}"
            f"  failures {r.num_failed}")
    return "\n".join(lines) + "\n"


def plot_report(report: ExperimentReport, out_dir, stem: str = "sweep") -> list:
    """Optional vector plots (requires matplotlib); returns written paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    x_is_power = report.parameter == "p_max_cs"

    def x_of(row):
        return watts_to_dbm(row.param_value) if x_is_power else row.param_value

    for key, ylabel, suffix in (
            ("mean_pct_connected", "connected UEs (fraction)", "pct"),
            ("mean_eta_normalized", "normalized resource efficiency", "eta")):
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        methods = sorted({r.method for r in report.rows})
        for method in methods:
            rows = [r for r in report.rows if r.method == method]
            ax.plot([x_of(r) for r in rows], [getattr(r, key) for r in rows],
                    marker="o", label=method)
        ax.set_xlabel(report.parameter + (" (dBm)" if x_is_power else ""))
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.4)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"{stem}_{suffix}.pdf"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)
    return written
