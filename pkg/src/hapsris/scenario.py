"""Deployment scenario construction: UE, BS, platform, and CS placement.

A scenario is a concrete, validated snapshot of the deployment:

* UEs are dropped uniformly at random over the square service area,
  conditioned on a minimum pairwise separation (rejection sampling).
* BSs sit on a regular grid, one per cell, at standard macro height.
* The relay platform hovers over the area centre at stratospheric
  altitude; the control station (CS) is a configurable ground node.

The CS-to-platform geometry must respect the gateway deployment rules
for stratospheric relays: elevation at least 5 degrees and slant range
at most 229 km.  Construction is fully deterministic given
``(config, config.rng_seed)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import (ConfigError, ScenarioConfig, config_from_dict,
                     config_hash, config_to_dict)

__all__ = [
    "Scenario",
    "ScenarioInfeasibleError",
    "place_ues",
    "place_bss",
    "place_haps_cs",
    "build_scenario",
    "validate_scenario",
    "scenario_to_file",
    "scenario_from_file",
]

MIN_CS_ELEVATION_RAD = math.radians(5.0)
MAX_CS_SLANT_RANGE_M = 229_000.0

# Tightest packing of K separation disks cannot beat hexagonal density in
# the separation-inflated square; used as a cheap infeasibility pre-check.
_HEX_PACKING_DENSITY = 0.9069


class ScenarioInfeasibleError(RuntimeError):
    """UE placement cannot satisfy the separation constraint."""


@dataclass(frozen=True)
class Scenario:
    """Concrete node placements plus the config that generated them."""

    ue_positions: np.ndarray    # (K, 3) metres
    bs_positions: np.ndarray    # (L, 3) metres
    haps_position: np.ndarray   # (3,) metres
    cs_position: np.ndarray     # (3,) metres
    config: ScenarioConfig


def place_ues(config: ScenarioConfig, rng: np.random.Generator,
              max_attempts: int = 1_000_000) -> np.ndarray:
    """Drop K UEs uniformly over the square with minimum pairwise separation.

    Rejection sampling keeps the conditional distribution exactly uniform.
    ``max_attempts`` bounds the total number of rejected draws.
    """
    k = config.num_ues
    side = config.area_side_m
    min_sep = config.min_ue_separation_m

    if min_sep > 0 and k > 1:
        disk_area = k * math.pi * (min_sep / 2.0) ** 2
        budget_area = _HEX_PACKING_DENSITY * (side + min_sep) ** 2
        if disk_area > budget_area:
            raise ScenarioInfeasibleError(
                f"cannot place {k} UEs with {min_sep} m separation in a "
                f"{side} m square: separation disks exceed the packing bound")

    min_sep_sq = min_sep * min_sep
    points = np.empty((k, 2))
    placed = 0
    rejections = 0
    while placed < k:
        candidate = rng.uniform(0.0, side, size=2)
        if min_sep > 0 and placed > 0:
            d_sq = np.sum((points[:placed] - candidate) ** 2, axis=1)
            if np.any(d_sq < min_sep_sq):
                rejections += 1
                if rejections > max_attempts:
                    raise ScenarioInfeasibleError(
                        f"UE placement exhausted {max_attempts} rejections "
                        f"({placed}/{k} UEs placed)")
                continue
        points[placed] = candidate
        placed += 1

    out = np.column_stack([points, np.full(k, config.ue_height_m)])
    out.flags.writeable = False
    return out


def place_bss(config: ScenarioConfig) -> np.ndarray:
    """Regular-grid BS placement: L cells tiling the square, BS at each centre.

    The factorisation rows x cols is the most square one with
    rows <= cols; positions are emitted row-major.  This convention is
    arbitrary but fixed.
    """
    l_max = config.max_bs
    rows = int(math.isqrt(l_max))
    while l_max % rows:
        rows -= 1
    cols = l_max // rows

    cell_w = config.area_side_m / cols
    cell_h = config.area_side_m / rows
    centres = [((j + 0.5) * cell_w, (i + 0.5) * cell_h, config.bs_height_m)
               for i in range(rows) for j in range(cols)]
    out = np.array(centres)
    out.flags.writeable = False
    return out


def place_haps_cs(config: ScenarioConfig) -> tuple[np.ndarray, np.ndarray]:
    """Platform over the area centre; CS at its configured ground position.

    Raises ConfigError naming the violated gateway constraint if the
    CS-platform elevation or slant range is out of bounds.
    """
    haps = np.array([config.area_side_m / 2.0, config.area_side_m / 2.0,
                     config.haps_altitude_m])
    cs = np.array(config.cs_position, dtype=float)

    horiz = math.hypot(haps[0] - cs[0], haps[1] - cs[1])
    vert = haps[2] - cs[2]
    elevation = math.atan2(vert, horiz)
    slant = math.sqrt(horiz * horiz + vert * vert)

    if slant > MAX_CS_SLANT_RANGE_M:
        raise ConfigError(
            f"CS-platform distance {slant / 1000.0:.1f} km violates the "
            f"229 km maximum gateway distance")
    if elevation < MIN_CS_ELEVATION_RAD:
        raise ConfigError(
            f"CS-platform elevation {math.degrees(elevation):.2f} deg violates "
            f"the 5 deg minimum gateway elevation")

    haps.flags.writeable = False
    cs.flags.writeable = False
    return haps, cs


def build_scenario(config: ScenarioConfig) -> Scenario:
    """Construct and validate a scenario; identical output for identical
    (config, config.rng_seed)."""
    rng = np.random.default_rng(np.random.SeedSequence((config.rng_seed, 0)))
    haps, cs = place_haps_cs(config)
    scenario = Scenario(
        ue_positions=place_ues(config, rng),
        bs_positions=place_bss(config),
        haps_position=haps,
        cs_position=cs,
        config=config,
    )
    validate_scenario(scenario)
    return scenario


def validate_scenario(s: Scenario) -> None:
    """Check every placement invariant; raises on violation.

    UEs and BSs must lie inside the square; the CS may sit anywhere the
    gateway elevation/range constraints allow.
    """
    cfg = s.config
    if s.ue_positions.shape != (cfg.num_ues, 3):
        raise ValueError(f"expected {cfg.num_ues} UE positions, got "
                         f"{s.ue_positions.shape}")
    side = cfg.area_side_m
    for name, pts in (("UE", s.ue_positions), ("BS", s.bs_positions)):
        xy = np.atleast_2d(pts)[:, :2]
        if np.any(xy < -1e-9) or np.any(xy > side + 1e-9):
            raise ValueError(f"{name} positions fall outside the service area")

    if cfg.min_ue_separation_m > 0 and cfg.num_ues > 1:
        xy = s.ue_positions[:, :2]
        d = np.linalg.norm(xy[:, None, :] - xy[None, :, :], axis=-1)
        np.fill_diagonal(d, np.inf)
        if d.min() < cfg.min_ue_separation_m - 1e-9:
            raise ValueError(
                f"minimum UE separation violated: {d.min():.3f} m < "
                f"{cfg.min_ue_separation_m} m")

    horiz = math.hypot(s.haps_position[0] - s.cs_position[0],
                       s.haps_position[1] - s.cs_position[1])
    vert = s.haps_position[2] - s.cs_position[2]
    if math.atan2(vert, horiz) < MIN_CS_ELEVATION_RAD - 1e-12:
        raise ValueError("CS-platform elevation below 5 deg")
    if math.hypot(horiz, vert) > MAX_CS_SLANT_RANGE_M + 1e-6:
        raise ValueError("CS-platform distance above 229 km")


# --------------------------------------------------------------------------
# Replay files
# --------------------------------------------------------------------------

def scenario_to_file(scenario: Scenario, path: str | Path,
                     channels: dict | None = None) -> None:
    """Write a structured replay file: positions plus a config echo.

    ``channels`` may carry an optional channel-state dump (see
    ``channel.channels_to_dict``) for debugging.
    """
    payload = {
        "format": "hapsris-scenario",
        "version": 1,
        "config_hash": config_hash(scenario.config),
        "config": config_to_dict(scenario.config),
        "ue_positions": scenario.ue_positions.tolist(),
        "bs_positions": scenario.bs_positions.tolist(),
        "haps_position": scenario.haps_position.tolist(),
        "cs_position": scenario.cs_position.tolist(),
    }
    if channels is not None:
        payload["channels"] = channels
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def scenario_from_file(path: str | Path) -> Scenario:
    """Load and re-validate a replay file written by ``scenario_to_file``."""
    data = json.loads(Path(path).read_text())
    if data.get("format") != "hapsris-scenario":
        raise ConfigError(f"{path}: not a scenario replay file")
    scenario = Scenario(
        ue_positions=_frozen(data["ue_positions"]),
        bs_positions=_frozen(data["bs_positions"]),
        haps_position=_frozen(data["haps_position"]),
        cs_position=_frozen(data["cs_position"]),
        config=config_from_dict(data["config"]),
    )
    validate_scenario(scenario)
    return scenario


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.flags.writeable = False
    return arr
