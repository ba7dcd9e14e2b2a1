"""Power and gain conversions between logarithmic and linear domains.

Every computation inside the simulator runs in linear units (watts,
dimensionless power ratios).  Decibel values appear only at the
configuration and reporting boundaries, and these helpers are the only
sanctioned crossing points.  Mixing the two domains halfway through a
link-budget chain is the classic bug this module exists to prevent.

Conventions
-----------
watts / linear gain : plain nonnegative floats
dB / dBm / dBi      : plain finite floats, suffix-named (``_db``, ``_dbm``)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "PowerW",
    "GainLinear",
    "Decibel",
    "NoiseSpec",
    "dbm_to_watts",
    "watts_to_dbm",
    "db_to_linear",
    "linear_to_db",
    "noise_power",
]

# Type vocabulary used across the package.  Quantities stay plain floats;
# the aliases keep signatures honest about which domain a value lives in.
PowerW = float       # power in watts, >= 0, finite
GainLinear = float   # dimensionless power ratio, >= 0, finite
Decibel = float      # 10*log10 of a power ratio; dBm when power-referenced


@dataclass(frozen=True)
class NoiseSpec:
    """Receiver noise description: one-sided PSD and signal bandwidth."""

    n0_w_per_hz: float
    bandwidth_hz: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.n0_w_per_hz) and self.n0_w_per_hz > 0):
            raise ValueError(
                f"noise PSD must be positive and finite, got {self.n0_w_per_hz!r}")
        if not (math.isfinite(self.bandwidth_hz) and self.bandwidth_hz > 0):
            raise ValueError(
                f"bandwidth must be positive and finite, got {self.bandwidth_hz!r}")


def dbm_to_watts(p_dbm: Decibel) -> PowerW:
    """Convert a power level in dBm to watts: 10^((p - 30) / 10)."""
    if not math.isfinite(p_dbm):
        raise ValueError(f"dBm value must be finite, got {p_dbm!r}")
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w: PowerW) -> Decibel:
    """Convert watts to dBm.  Requires strictly positive input."""
    if not (p_w > 0 and math.isfinite(p_w)):
        raise ValueError(f"power must be positive and finite to express in dBm, got {p_w!r}")
    return 10.0 * math.log10(p_w) + 30.0


def db_to_linear(x_db: Decibel) -> GainLinear:
    """Convert a dB ratio (e.g. antenna gain in dBi) to a linear power ratio."""
    if not math.isfinite(x_db):
        raise ValueError(f"dB value must be finite, got {x_db!r}")
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: GainLinear) -> Decibel:
    """Convert a linear power ratio to dB.  Requires strictly positive input."""
    if not (x > 0 and math.isfinite(x)):
        raise ValueError(f"ratio must be positive and finite to express in dB, got {x!r}")
    return 10.0 * math.log10(x)


def noise_power(spec: NoiseSpec) -> PowerW:
    """Total noise power over the signal bandwidth: N0 * B."""
    return spec.n0_w_per_hz * spec.bandwidth_hz
