"""Channel models: terrestrial macro links, stratospheric relay links,
RIS reflection gain, SNR, and achievable rate.

Two very different propagation regimes coexist:

* BS-UE links follow the urban-macro (UMa) model: distance-dependent
  LOS probability, dual LOS/NLOS path-loss laws, and lognormal
  shadowing.  These links decide which UEs the terrestrial network can
  serve directly.
* CS-platform and platform-UE links are strong line-of-sight: free-space
  path loss plus dry-air atmospheric absorption scaled by the cosecant
  of the elevation angle.  No shadowing.

The end-to-end reflected channel for UE k factors as

    |h_k|^2 = G_cs * G_ue / (PL_cs_haps * PL_haps_ue)

with both path losses linear.  The RIS contributes a separate reflection
gain Phi_k, the coherent sum of per-unit phasors; under perfect phase
alignment |Phi_k| = rho * N_k, which is the closed form the allocators
use (summing tens of thousands of complex terms per UE would be wasted
work).  The complex-sum form stays available for validation and phase
quantisation studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .scenario import Scenario
from .units import GainLinear, NoiseSpec, PowerW, noise_power

__all__ = [
    "SPEED_OF_LIGHT_M_S",
    "ChannelState",
    "RisPhaseConfig",
    "free_space_pl_db",
    "atmospheric_attenuation_db",
    "haps_link_pl_db",
    "los_probability",
    "uma_path_loss_db",
    "terrestrial_gain",
    "effective_gain",
    "channels_to_dict",
    "reflection_gain",
    "quantize_phases",
    "snr",
    "rate_bps",
    "min_snr_for_rate",
]

SPEED_OF_LIGHT_M_S = 299_792_458.0

# Zenith dry-air attenuation vs frequency (GHz -> dB), mean annual global
# reference atmosphere, sea level.  Linearly interpolated; values outside
# the table clamp to the nearest endpoint.
_ZENITH_DRY_AIR_DB = (
    (1.0, 0.033),
    (2.0, 0.035),
    (4.0, 0.040),
    (6.0, 0.044),
    (10.0, 0.053),
    (15.0, 0.072),
    (20.0, 0.119),
    (30.0, 0.240),
)

_UMA_MIN_2D_DISTANCE_M = 10.0   # model validity floor; closer UEs clamp here


# --------------------------------------------------------------------------
# Line-of-sight links to the stratospheric platform
# --------------------------------------------------------------------------

def free_space_pl_db(distance_m: float, carrier_hz: float) -> float:
    """Free-space path loss 20 log10(4 pi d f / c) in dB."""
    if distance_m <= 0:
        raise ValueError(f"distance must be positive, got {distance_m!r}")
    return 20.0 * math.log10(4.0 * math.pi * distance_m * carrier_hz
                             / SPEED_OF_LIGHT_M_S)


def atmospheric_attenuation_db(elevation_rad: float, carrier_hz: float) -> float:
    """Dry-air absorption on a slant path: zenith value / sin(elevation)."""
    if elevation_rad <= 0:
        raise ValueError(
            f"elevation must be positive, got {elevation_rad!r} rad")
    f_ghz = carrier_hz / 1e9
    freqs = [row[0] for row in _ZENITH_DRY_AIR_DB]
    values = [row[1] for row in _ZENITH_DRY_AIR_DB]
    zenith = float(np.interp(f_ghz, freqs, values))
    return zenith / math.sin(elevation_rad)


def haps_link_pl_db(ground_pos, haps_pos, carrier_hz: float) -> float:
    """Path loss of one ground-platform leg: FSPL plus gas absorption."""
    ground = np.asarray(ground_pos, dtype=float)
    haps = np.asarray(haps_pos, dtype=float)
    horiz = math.hypot(haps[0] - ground[0], haps[1] - ground[1])
    vert = haps[2] - ground[2]
    slant = math.sqrt(horiz * horiz + vert * vert)
    elevation = math.atan2(vert, horiz)
    return (free_space_pl_db(slant, carrier_hz)
            + atmospheric_attenuation_db(elevation, carrier_hz))


# --------------------------------------------------------------------------
# Terrestrial urban-macro links
# --------------------------------------------------------------------------

def los_probability(d2d_m):
    """UMa LOS probability: min(18/d, 1) (1 - e^{-d/63}) + e^{-d/63}."""
    d = np.maximum(np.asarray(d2d_m, dtype=float), 1e-9)
    decay = np.exp(-d / 63.0)
    return np.minimum(18.0 / d, 1.0) * (1.0 - decay) + decay


def uma_path_loss_db(d2d_m, los, carrier_hz: float, ue_height_m: float,
                     bs_height_m: float):
    """Deterministic UMa path loss (no shadowing) for given LOS states.

    LOS:  28 + 22 log10(d3d) + 20 log10(f_GHz)
    NLOS: max(LOS, 13.54 + 39.08 log10(d3d) + 20 log10(f_GHz)
               - 0.6 (h_ue - 1.5))
    """
    d2d = np.maximum(np.asarray(d2d_m, dtype=float), _UMA_MIN_2D_DISTANCE_M)
    d3d = np.sqrt(d2d ** 2 + (bs_height_m - ue_height_m) ** 2)
    f_ghz_term = 20.0 * math.log10(carrier_hz / 1e9)
    pl_los = 28.0 + 22.0 * np.log10(d3d) + f_ghz_term
    pl_nlos = (13.54 + 39.08 * np.log10(d3d) + f_ghz_term
               - 0.6 * (ue_height_m - 1.5))
    return np.where(los, pl_los, np.maximum(pl_los, pl_nlos))


def terrestrial_gain(bs_pos, ue_pos, config: ScenarioConfig,
                     rng: np.random.Generator) -> GainLinear:
    """One BS-UE link gain: antenna gains over UMa path loss with a random
    LOS draw and lognormal shadowing (deterministic given ``rng``)."""
    bs = np.asarray(bs_pos, dtype=float)
    ue = np.asarray(ue_pos, dtype=float)
    d2d = math.hypot(bs[0] - ue[0], bs[1] - ue[1])
    los = rng.random() < float(los_probability(d2d))
    pl_db = float(uma_path_loss_db(d2d, los, config.carrier_hz,
                                   config.ue_height_m, config.bs_height_m))
    pl_db += rng.normal(0.0, config.shadowing_sigma_db)
    return config.bs_antenna_gain * config.ue_antenna_gain * 10.0 ** (-pl_db / 10.0)


# --------------------------------------------------------------------------
# Channel state
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ChannelState:
    """All link gains of one scenario, everything in linear units."""

    terrestrial_gain: np.ndarray     # (K, L) BS-UE gains incl. shadowing
    haps_gain_sq: np.ndarray         # (K,) |h_k|^2 via the platform
    cs_haps_path_loss: float         # linear PL of the CS-platform leg
    haps_ue_path_loss: np.ndarray    # (K,) linear PL of each platform-UE leg
    cs_antenna_gain: float
    ue_antenna_gain: float

    def verify_composition(self, rel_tol: float = 1e-12) -> None:
        """|h_k|^2 must recompose from its stored factors."""
        expected = (self.cs_antenna_gain * self.ue_antenna_gain
                    / (self.cs_haps_path_loss * self.haps_ue_path_loss))
        err = np.max(np.abs(expected - self.haps_gain_sq)
                     / np.maximum(np.abs(expected), 1e-300))
        if err > rel_tol:
            raise ValueError(f"channel recomposition identity violated: {err:.3e}")


def effective_gain(scenario: Scenario,
                   rng: np.random.Generator | None = None) -> ChannelState:
    """Compute the full channel state of a scenario.

    The terrestrial matrix uses one LOS draw and one shadowing draw per
    BS-UE pair.  ``rng`` defaults to a stream derived from the scenario
    seed, so (config, seed) fully determines the result.
    """
    cfg = scenario.config
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence((cfg.rng_seed, 1)))

    ue_xy = scenario.ue_positions[:, :2]
    bs_xy = scenario.bs_positions[:, :2]
    d2d = np.linalg.norm(ue_xy[:, None, :] - bs_xy[None, :, :], axis=-1)

    los = rng.random(d2d.shape) < los_probability(d2d)
    pl_db = uma_path_loss_db(d2d, los, cfg.carrier_hz, cfg.ue_height_m,
                             cfg.bs_height_m)
    pl_db = pl_db + rng.normal(0.0, cfg.shadowing_sigma_db, size=d2d.shape)
    terr = cfg.bs_antenna_gain * cfg.ue_antenna_gain * 10.0 ** (-pl_db / 10.0)

    cs_haps_db = haps_link_pl_db(scenario.cs_position, scenario.haps_position,
                                 cfg.carrier_hz)
    haps_ue_db = np.array([
        haps_link_pl_db(ue, scenario.haps_position, cfg.carrier_hz)
        for ue in scenario.ue_positions
    ])
    cs_haps_pl = 10.0 ** (cs_haps_db / 10.0)
    haps_ue_pl = 10.0 ** (haps_ue_db / 10.0)
    h_sq = cfg.cs_antenna_gain * cfg.ue_antenna_gain / (cs_haps_pl * haps_ue_pl)

    for arr in (terr, h_sq, haps_ue_pl):
        arr.flags.writeable = False
    return ChannelState(
        terrestrial_gain=terr,
        haps_gain_sq=h_sq,
        cs_haps_path_loss=cs_haps_pl,
        haps_ue_path_loss=haps_ue_pl,
        cs_antenna_gain=cfg.cs_antenna_gain,
        ue_antenna_gain=cfg.ue_antenna_gain,
    )


def channels_to_dict(channels: ChannelState) -> dict:
    """JSON-ready channel dump for the scenario replay file."""
    return {
        "terrestrial_gain": channels.terrestrial_gain.tolist(),
        "haps_gain_sq": channels.haps_gain_sq.tolist(),
        "cs_haps_path_loss": channels.cs_haps_path_loss,
        "haps_ue_path_loss": channels.haps_ue_path_loss.tolist(),
        "cs_antenna_gain": channels.cs_antenna_gain,
        "ue_antenna_gain": channels.ue_antenna_gain,
    }


# --------------------------------------------------------------------------
# RIS reflection
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RisPhaseConfig:
    """Per-unit phase bookkeeping for one UE's RIS partition.

    ``unit_phases`` are the applied shifts, ``incident_phases`` and
    ``departure_phases`` the propagation phases of the two legs.  When
    ``phase_bits`` is set, applied shifts must lie on the uniform grid
    {0, dphi, ..., (2^b - 1) dphi} with dphi = 2 pi / 2^b.
    """

    unit_phases: np.ndarray
    incident_phases: np.ndarray
    departure_phases: np.ndarray
    reflection_loss: float | np.ndarray = 1.0
    phase_bits: int | None = None

    def __post_init__(self) -> None:
        for name in ("unit_phases", "incident_phases", "departure_phases"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        n = self.unit_phases.shape[0]
        if self.incident_phases.shape != (n,) or self.departure_phases.shape != (n,):
            raise ValueError("phase arrays must share one length")
        for name in ("unit_phases", "incident_phases", "departure_phases"):
            arr = getattr(self, name)
            if np.any(arr < 0) or np.any(arr >= 2 * np.pi):
                raise ValueError(f"{name} must lie in [0, 2 pi)")
        rho = np.asarray(self.reflection_loss, dtype=float)
        if np.any(rho <= 0) or np.any(rho > 1):
            raise ValueError("reflection_loss must lie in (0, 1]")
        if self.phase_bits is not None:
            if self.phase_bits < 1:
                raise ValueError("phase_bits must be >= 1")
            step = 2 * np.pi / 2 ** self.phase_bits
            ticks = self.unit_phases / step
            if np.max(np.abs(ticks - np.round(ticks))) > 1e-9:
                raise ValueError("unit_phases must lie on the quantisation grid")

    @classmethod
    def aligned(cls, n_units: int, reflection_loss: float = 1.0) -> "RisPhaseConfig":
        """Perfect alignment: every residual phase zero, |Phi| = rho n."""
        zeros = np.zeros(n_units)
        return cls(zeros, zeros, zeros, reflection_loss)

    @classmethod
    def from_targets(cls, incident_phases, departure_phases, phase_bits: int,
                     reflection_loss: float = 1.0) -> "RisPhaseConfig":
        """Quantise the ideal per-unit shifts onto the b-bit grid."""
        incident = np.mod(np.asarray(incident_phases, dtype=float), 2 * np.pi)
        departure = np.mod(np.asarray(departure_phases, dtype=float), 2 * np.pi)
        target = np.mod(incident + departure, 2 * np.pi)
        return cls(quantize_phases(target, phase_bits), incident, departure,
                   reflection_loss, phase_bits)


def quantize_phases(phases, phase_bits: int) -> np.ndarray:
    """Nearest grid point (mod 2 pi) on {0, dphi, ..., (2^b - 1) dphi}."""
    if phase_bits < 1:
        raise ValueError("phase_bits must be >= 1")
    levels = 2 ** phase_bits
    step = 2 * np.pi / levels
    ticks = np.round(np.asarray(phases, dtype=float) / step)
    return np.mod(ticks, levels) * step


def reflection_gain(cfg: RisPhaseConfig) -> complex:
    """Coherent reflection gain Phi = sum_i rho_i e^{-j (phi_i - th_i - th'_i)}."""
    residual = cfg.unit_phases - cfg.incident_phases - cfg.departure_phases
    rho = np.broadcast_to(np.asarray(cfg.reflection_loss, dtype=float),
                          cfg.unit_phases.shape)
    return complex(np.sum(rho * np.exp(-1j * residual)))


# --------------------------------------------------------------------------
# SNR and rate
# --------------------------------------------------------------------------

def snr(p_tx_w: PowerW, h_sq: GainLinear, phi_mag: float,
        noise: NoiseSpec) -> float:
    """Received SNR: p |h|^2 |Phi|^2 / (N0 B)."""
    return p_tx_w * h_sq * phi_mag * phi_mag / noise_power(noise)


def rate_bps(snr_value: float, bandwidth_hz: float) -> float:
    """Shannon rate B log2(1 + snr)."""
    if snr_value < 0:
        raise ValueError(f"SNR must be >= 0, got {snr_value!r}")
    return bandwidth_hz * math.log2(1.0 + snr_value)


def min_snr_for_rate(rate_threshold_bps: float, bandwidth_hz: float) -> float:
    """Invert the rate formula: gamma_min = 2^(R/B) - 1."""
    return 2.0 ** (rate_threshold_bps / bandwidth_hz) - 1.0
