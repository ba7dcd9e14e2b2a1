"""UE-BS association: split the population into within-cell and stranded sets.

Each BS carries ``floor(B_bs / B_ue)`` subcarriers and splits its transmit
power equally across them.  UEs are processed in descending order of their
best achievable BS rate; each one attaches to its highest-rate BS among
those with spare capacity, provided that rate meets the threshold.
Everything else is stranded and becomes a candidate for beyond-cell
service.

The greedy order makes the outcome deterministic (ties break on lower BS
index, then lower UE id) and leaves no UE stranded while a BS with spare
capacity could still serve it above threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelState
from .scenario import Scenario
from .units import noise_power

__all__ = ["AssociationResult", "associate"]


@dataclass(frozen=True)
class AssociationResult:
    """Within-cell assignments (K_1) and the stranded set (K_2)."""

    assignments: dict[int, int]          # UE id -> BS index
    stranded: tuple[int, ...]            # K_2, ascending UE id
    per_ue_rate_bps: dict[int, float]    # achieved rate for assigned UEs
    bs_load: np.ndarray                  # (L,) assigned UEs per BS
    bs_capacity: int

    @property
    def within_cell_count(self) -> int:
        return len(self.assignments)


def associate(scenario: Scenario, channels: ChannelState) -> AssociationResult:
    """Greedy best-rate-first association under per-BS capacity."""
    cfg = scenario.config
    capacity = cfg.bs_capacity
    p_subcarrier = cfg.bs_tx_power_w / capacity
    noise = noise_power(cfg.noise_spec)

    # (K, L) achievable direct rates
    snr = p_subcarrier * channels.terrestrial_gain / noise
    rates = cfg.ue_bandwidth_hz * np.log2(1.0 + snr)

    k = rates.shape[0]
    best = rates.max(axis=1)
    order = np.lexsort((np.arange(k), -best))   # descending best rate, then id

    loads = np.zeros(rates.shape[1], dtype=int)
    assignments: dict[int, int] = {}
    per_ue_rate: dict[int, float] = {}
    for ue in order:
        ue = int(ue)
        candidate = np.where(loads < capacity, rates[ue], -np.inf)
        bs = int(np.argmax(candidate))           # argmax ties -> lowest index
        if candidate[bs] >= cfg.rate_threshold_bps:
            assignments[ue] = bs
            per_ue_rate[ue] = float(candidate[bs])
            loads[bs] += 1

    stranded = tuple(ue for ue in range(k) if ue not in assignments)
    loads.flags.writeable = False
    result = AssociationResult(assignments, stranded, per_ue_rate, loads, capacity)
    _check(result, rates, cfg.rate_threshold_bps)
    return result


def _check(result: AssociationResult, rates: np.ndarray, threshold: float) -> None:
    if np.any(result.bs_load > result.bs_capacity):
        raise RuntimeError("BS capacity exceeded; association logic broken")
    for ue, bs in result.assignments.items():
        if rates[ue, bs] < threshold:
            raise RuntimeError(f"assigned UE {ue} below rate threshold")
