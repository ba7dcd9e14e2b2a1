"""hapsris: beyond-cell connectivity through a RIS-equipped stratospheric relay.

A numpy-based system simulator plus resource allocator.  Stranded urban
UEs (out of terrestrial coverage or capacity) are admitted and served by
a ground control station whose signal reflects off a large RIS mounted
on a high-altitude platform; transmit power and RIS units are assigned
by a two-stage algorithm (greedy admission, then a specialised geometric
program) and compared against an equal-power benchmark on connectivity
and resource-efficiency metrics.
"""

__version__ = "0.1.0"

from .allocation import (AllocationResult, benchmark_allocate, min_units,
                         run_algorithm1, stage1_select, stage2_allocate)
from .association import AssociationResult, associate
from .channel import (ChannelState, RisPhaseConfig, effective_gain,
                      min_snr_for_rate, rate_bps, reflection_gain, snr)
from .config import (ConfigError, ScenarioConfig, apply_overrides,
                     config_hash, load_config, paper_defaults, write_config)
from .experiments import (ExperimentReport, SweepSpec, preset_sweep,
                          run_sweep, simulate_run)
from .gp import Stage2Instance, Stage2Solution, oracle_kkt, round_and_repair
from .gp import solve as solve_stage2
from .metrics import RunMetrics, resource_efficiency
from .scenario import (Scenario, ScenarioInfeasibleError, build_scenario,
                       scenario_from_file, scenario_to_file)
from .units import (NoiseSpec, db_to_linear, dbm_to_watts, linear_to_db,
                    noise_power, watts_to_dbm)

__all__ = [
    "__version__",
    "AllocationResult", "benchmark_allocate", "min_units", "run_algorithm1",
    "stage1_select", "stage2_allocate",
    "AssociationResult", "associate",
    "ChannelState", "RisPhaseConfig", "effective_gain", "min_snr_for_rate",
    "rate_bps", "reflection_gain", "snr",
    "ConfigError", "ScenarioConfig", "apply_overrides", "config_hash",
    "load_config", "paper_defaults", "write_config",
    "ExperimentReport", "SweepSpec", "preset_sweep", "run_sweep",
    "simulate_run",
    "Stage2Instance", "Stage2Solution", "oracle_kkt", "round_and_repair",
    "solve_stage2",
    "RunMetrics", "resource_efficiency",
    "Scenario", "ScenarioInfeasibleError", "build_scenario",
    "scenario_from_file", "scenario_to_file",
    "NoiseSpec", "db_to_linear", "dbm_to_watts", "linear_to_db",
    "noise_power", "watts_to_dbm",
]
