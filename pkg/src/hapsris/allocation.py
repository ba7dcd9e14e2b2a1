"""Beyond-cell resource allocation: admission and power/RIS-unit assignment.

Two allocators share the same admission rule and differ in what happens
afterwards:

* ``benchmark_allocate`` splits the CS power budget equally over all
  stranded UEs, walks them in descending channel gain, gives each the
  minimum RIS-unit count that meets the rate threshold at that fixed
  power, and stops admitting when the unit budget runs out.  No
  refinement.
* ``run_algorithm1`` performs the same greedy admission (stage 1) and
  then re-optimises power and units jointly over the admitted set by
  solving the continuous minimisation of ``gp.solve`` and rounding the
  units up to integers (stage 2).  If rounding cannot be repaired within
  the budgets, the weakest admitted UE is dropped and stage 2 re-runs.

The minimum-unit sizing inverts the SNR chain at fixed power:

    N = ceil( sqrt( N0 B gamma_min / (p rho^2 |h|^2) ) )

which is the smallest integer unit count whose squared reflection gain
lifts the UE to the rate threshold.

Every returned allocation is re-verified from first principles (SNR and
rate recomputed from the channel constants), never trusted from the
solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gp
from .association import AssociationResult
from .channel import ChannelState, min_snr_for_rate, rate_bps, snr
from .config import ScenarioConfig
from .scenario import Scenario
from .units import NoiseSpec, noise_power

__all__ = [
    "AllocationResult",
    "AllocationError",
    "min_units",
    "qos_constant",
    "Stage1Seed",
    "stage1_select",
    "build_stage2_instance",
    "stage2_allocate",
    "benchmark_allocate",
    "run_algorithm1",
    "OBJECTIVE_MASKS",
]

# Objective masks for restricted studies: weights (power, units).
OBJECTIVE_MASKS = {
    "full": (1.0, 1.0),
    "power-only": (1.0, 0.0),
    "units-only": (0.0, 1.0),
}


class AllocationError(RuntimeError):
    """Solver failure surfaced with the offending instance attached."""

    def __init__(self, message: str, instance: gp.Stage2Instance | None = None):
        super().__init__(message)
        self.instance = instance


@dataclass(frozen=True)
class AllocationResult:
    """Beyond-cell service decision for the stranded set of one scenario."""

    served_ids: tuple[int, ...]      # admission order (descending gain)
    k2_ids: tuple[int, ...]          # the full stranded set, ascending id
    power_w: np.ndarray              # per served UE, watts
    units: np.ndarray                # per served UE, integer RIS units
    per_ue_rate_bps: np.ndarray      # recomputed achieved rates
    method: str                      # "algorithm1" | "benchmark"

    @property
    def served_count(self) -> int:
        return len(self.served_ids)

    @property
    def u(self) -> dict[int, int]:
        """Service indicator over the stranded set."""
        served = set(self.served_ids)
        return {ue: int(ue in served) for ue in self.k2_ids}

    @property
    def total_cs_power_w(self) -> float:
        return float(np.sum(self.power_w))

    @property
    def total_ris_units(self) -> int:
        return int(np.sum(self.units))

    def total_power_w(self, ris_unit_power_w: float) -> float:
        """Transmit power plus RIS configuration power."""
        return self.total_cs_power_w + ris_unit_power_w * self.total_ris_units

    def verify(self, h_by_ue: dict[int, float], config: ScenarioConfig,
               rel_tol: float = 1e-9) -> None:
        """Re-derive every feasibility claim from the channel constants."""
        noise = config.noise_spec
        rho = config.reflection_loss
        for i, ue in enumerate(self.served_ids):
            gamma = snr(float(self.power_w[i]), h_by_ue[ue],
                        rho * float(self.units[i]), noise)
            rate = rate_bps(gamma, config.ue_bandwidth_hz)
            if rate < config.rate_threshold_bps * (1.0 - rel_tol):
                raise AllocationError(
                    f"served UE {ue} misses the rate threshold "
                    f"({rate:.6e} < {config.rate_threshold_bps:.6e} bps)")
        if self.total_cs_power_w > config.cs_total_power_w * (1.0 + rel_tol):
            raise AllocationError("CS power budget exceeded")
        if self.total_ris_units > config.ris_total_units:
            raise AllocationError("RIS unit budget exceeded")
        if np.any(self.power_w > config.per_ue_power_cap_w * (1.0 + rel_tol)):
            raise AllocationError("per-UE power cap exceeded")
        if np.any(self.units > config.per_ue_unit_cap):
            raise AllocationError("per-UE unit cap exceeded")


def _empty_result(k2_ids, method: str) -> AllocationResult:
    return AllocationResult(tuple(), tuple(sorted(k2_ids)), np.zeros(0),
                            np.zeros(0, dtype=np.int64), np.zeros(0), method)


# --------------------------------------------------------------------------
# Minimum-unit sizing
# --------------------------------------------------------------------------

def min_units(p_w: float, h_sq: float, snr_min: float, noise: NoiseSpec,
              reflection_loss: float = 1.0) -> int:
    """Smallest integer RIS-unit count meeting the SNR target at power p.

    May exceed any cap; the caller enforces caps and budgets.
    """
    radicand = (noise_power(noise) * snr_min
                / (p_w * reflection_loss * reflection_loss * h_sq))
    return max(1, math.ceil(math.sqrt(radicand)))


def qos_constant(h_sq: float, snr_min: float, noise: NoiseSpec,
                 reflection_loss: float) -> float:
    """c = gamma_min N0 B / (rho^2 |h|^2); the rate constraint is p n^2 >= c."""
    return (snr_min * noise_power(noise)
            / (reflection_loss * reflection_loss * h_sq))


# --------------------------------------------------------------------------
# Stage 1: greedy admission at equal power
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Stage1Seed:
    """Admitted set with its equal-power initial allocation."""

    served_ids: tuple[int, ...]      # descending channel gain
    equal_power_w: float
    units: np.ndarray                # initial minimum units per served UE


def _sorted_by_gain(k2_gains) -> list[tuple[int, float]]:
    # Descending gain; ties break on ascending UE id for determinism.
    return sorted(k2_gains, key=lambda item: (-item[1], item[0]))


def stage1_select(k2_gains: list[tuple[int, float]],
                  config: ScenarioConfig) -> Stage1Seed:
    """Greedy admission: equal power split over all stranded UEs, best
    channels first, minimum units each, until the unit budget is spent.

    A UE failing a per-UE cap is skipped and admission continues; with
    uniform caps this matches stopping outright, but it keeps behaviour
    sensible under heterogeneous caps.
    """
    if not k2_gains:
        return Stage1Seed(tuple(), 0.0, np.zeros(0, dtype=np.int64))

    p_eq = config.cs_total_power_w / len(k2_gains)
    snr_min = min_snr_for_rate(config.rate_threshold_bps, config.ue_bandwidth_hz)
    noise = config.noise_spec

    served: list[int] = []
    units: list[int] = []
    used_units = 0
    for ue, h_sq in _sorted_by_gain(k2_gains):
        n = min_units(p_eq, h_sq, snr_min, noise, config.reflection_loss)
        if n > config.per_ue_unit_cap:
            continue
        if p_eq > config.per_ue_power_cap_w * (1.0 + 1e-12):
            continue
        if used_units + n > config.ris_total_units:
            continue
        if (len(served) + 1) * p_eq > config.cs_total_power_w * (1.0 + 1e-12):
            continue
        served.append(ue)
        units.append(n)
        used_units += n

    return Stage1Seed(tuple(served), p_eq, np.array(units, dtype=np.int64))


# --------------------------------------------------------------------------
# Stage 2: optimal allocation over the admitted set
# --------------------------------------------------------------------------

def build_stage2_instance(h_sqs: np.ndarray, config: ScenarioConfig,
                          objective_mask: str = "full") -> gp.Stage2Instance:
    snr_min = min_snr_for_rate(config.rate_threshold_bps, config.ue_bandwidth_hz)
    c = np.array([qos_constant(h, snr_min, config.noise_spec,
                               config.reflection_loss) for h in h_sqs])
    w_power, w_units = OBJECTIVE_MASKS[objective_mask]
    return gp.Stage2Instance(
        qos_constants=c,
        ris_unit_power_w=config.ris_unit_power_w,
        cs_power_budget_w=config.cs_total_power_w,
        ris_unit_budget=float(config.ris_total_units),
        per_ue_power_cap_w=config.per_ue_power_cap_w,
        per_ue_unit_cap=float(config.per_ue_unit_cap),
        power_weight=w_power,
        unit_weight=w_units,
    )


def stage2_allocate(served_ids, h_by_ue: dict[int, float],
                    config: ScenarioConfig, k2_ids,
                    objective_mask: str = "full",
                    seed: Stage1Seed | None = None) -> AllocationResult:
    """Optimally allocate power and integral units over the admitted set.

    If integral rounding cannot be repaired, the served UE with the
    weakest channel is dropped and the solve repeats.  When the stage-1
    seed point is supplied and turns out cheaper than the rounded
    optimum (unit ceiling can cost a few units on near-symmetric
    instances), the seed point is kept: the output never does worse than
    its own feasible starting point.
    """
    ids = list(served_ids)
    while ids:
        h_sqs = np.array([h_by_ue[ue] for ue in ids])
        instance = build_stage2_instance(h_sqs, config, objective_mask)
        solution = gp.solve(instance)
        if solution.status == "infeasible":
            raise AllocationError(
                f"stage-2 instance infeasible for a stage-1 seed: "
                f"{solution.message}", instance)
        if solution.status != "optimal":
            raise AllocationError(
                f"stage-2 solver did not converge (status "
                f"{solution.status!r}, kkt {solution.kkt_residual:.3e})",
                instance)
        try:
            integral = gp.round_and_repair(solution, instance)
        except gp.RoundingInfeasibleError:
            weakest = min(range(len(ids)), key=lambda i: h_sqs[i])
            ids.pop(weakest)
            continue
        power, units = integral.power_w, integral.units
        if seed is not None and tuple(ids) == seed.served_ids:
            seed_power = np.full(len(ids), seed.equal_power_w)
            seed_cost = instance.objective(seed_power, seed.units)
            if seed_cost < integral.objective_w:
                power, units = seed_power, seed.units
        result = _assemble(ids, power, units, h_by_ue,
                           config, k2_ids, "algorithm1")
        result.verify(h_by_ue, config)
        return result
    return _empty_result(k2_ids, "algorithm1")


def _assemble(ids, power_w, units, h_by_ue, config, k2_ids,
              method: str) -> AllocationResult:
    noise = config.noise_spec
    rho = config.reflection_loss
    rates = np.array([
        rate_bps(snr(float(p), h_by_ue[ue], rho * float(n), noise),
                 config.ue_bandwidth_hz)
        for ue, p, n in zip(ids, power_w, units)
    ])
    return AllocationResult(
        served_ids=tuple(ids),
        k2_ids=tuple(sorted(k2_ids)),
        power_w=np.asarray(power_w, dtype=float),
        units=np.asarray(units).astype(np.int64),
        per_ue_rate_bps=rates,
        method=method,
    )


# --------------------------------------------------------------------------
# Allocators
# --------------------------------------------------------------------------

def benchmark_allocate(k2_gains: list[tuple[int, float]],
                       config: ScenarioConfig) -> AllocationResult:
    """Equal power, best channels first, minimum units, no refinement."""
    k2_ids = [ue for ue, _ in k2_gains]
    if not k2_gains:
        return _empty_result(k2_ids, "benchmark")
    seed = stage1_select(k2_gains, config)
    if not seed.served_ids:
        return _empty_result(k2_ids, "benchmark")
    h_by_ue = dict(k2_gains)
    power = np.full(len(seed.served_ids), seed.equal_power_w)
    result = _assemble(list(seed.served_ids), power, seed.units, h_by_ue,
                       config, k2_ids, "benchmark")
    result.verify(h_by_ue, config)
    return result


def run_algorithm1(scenario: Scenario, channels: ChannelState,
                   association: AssociationResult,
                   config: ScenarioConfig | None = None,
                   objective_mask: str = "full") -> AllocationResult:
    """Greedy admission followed by optimal stage-2 allocation."""
    config = config if config is not None else scenario.config
    k2_gains = [(ue, float(channels.haps_gain_sq[ue]))
                for ue in association.stranded]
    if not k2_gains:
        return _empty_result([], "algorithm1")
    seed = stage1_select(k2_gains, config)
    if not seed.served_ids:
        return _empty_result([ue for ue, _ in k2_gains], "algorithm1")
    return stage2_allocate(seed.served_ids, dict(k2_gains), config,
                           [ue for ue, _ in k2_gains], objective_mask,
                           seed=seed)
