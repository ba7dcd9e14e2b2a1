"""Connectivity and resource-efficiency metrics for one simulated drop.

Resource efficiency is the ratio of the fraction of connected UEs
(within-cell plus beyond-cell) to the average power spent per
beyond-cell-served UE, where that power counts both the CS transmit
share and the RIS configuration power:

    eta = [ (K1 + sum_k u_k) / K ] / [ (sum_k (p_k + P_ris n_k) u_k) / |U| ]

The denominator is evaluated in watts, giving eta in 1/W.  A variant
with the denominator expressed in dBm is also reported for comparison;
it is undefined (None) at or below the 1 mW boundary where dBm crosses
zero, which is one reason the linear form is the canonical one.  With no
served UE both efficiencies are absent (None).
"""

from __future__ import annotations

from dataclasses import dataclass

from .allocation import AllocationResult
from .association import AssociationResult
from .config import ScenarioConfig
from .units import watts_to_dbm

__all__ = ["RunMetrics", "resource_efficiency"]


@dataclass(frozen=True)
class RunMetrics:
    """Aggregated outcome of one (scenario, allocator) evaluation."""

    method: str
    total_ues: int
    within_cell: int
    served_beyond: int
    pct_connected: float                  # fraction in [0, 1]
    avg_power_per_served_w: float | None  # None when no UE is served
    eta_per_w: float | None               # connectivity per watt
    eta_per_dbm: float | None             # dBm-denominator variant
    total_cs_power_w: float
    total_ris_units: int
    total_ris_power_w: float


def resource_efficiency(alloc: AllocationResult, assoc: AssociationResult,
                        config: ScenarioConfig) -> RunMetrics:
    """Evaluate connectivity and resource efficiency for one drop."""
    k = config.num_ues
    k1 = assoc.within_cell_count
    served = alloc.served_count
    pct = (k1 + served) / k

    ris_power = config.ris_unit_power_w * alloc.total_ris_units
    if served > 0:
        avg_power = (alloc.total_cs_power_w + ris_power) / served
        eta = pct / avg_power
        avg_dbm = watts_to_dbm(avg_power)
        eta_dbm = pct / avg_dbm if avg_dbm > 0 else None
    else:
        avg_power = None
        eta = None
        eta_dbm = None

    return RunMetrics(
        method=alloc.method,
        total_ues=k,
        within_cell=k1,
        served_beyond=served,
        pct_connected=pct,
        avg_power_per_served_w=avg_power,
        eta_per_w=eta,
        eta_per_dbm=eta_dbm,
        total_cs_power_w=alloc.total_cs_power_w,
        total_ris_units=alloc.total_ris_units,
        total_ris_power_w=ris_power,
    )
