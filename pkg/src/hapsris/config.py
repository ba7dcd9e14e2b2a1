"""Scenario configuration: tunable parameters, file I/O, and hashing.

A configuration is a flat, immutable record of every knob in the system:
deployment geometry, radio parameters, power budgets, RIS sizing, QoS
threshold, and the RNG seed.  Defaults reproduce the reference urban
setup (10 km x 10 km, 100 UEs, 4 BSs, 2 GHz, 2 MHz subcarriers,
33 dBm control-station budget, 220k RIS units).

Config files are human-editable ``key = value`` text.  Keys mirror the
field names below and use SI units; power/gain fields additionally
accept ``_dbm`` / ``_db`` suffixed alternates, e.g.::

    cs_total_power_dbm = 33       # instead of cs_total_power_w
    cs_antenna_gain_db = 43.2     # instead of cs_antenna_gain

Calibration note: the BS transmit power and BS antenna gain defaults are
deliberate calibration knobs.  The within-cell channel sub-model is not
fully pinned down by the radio parameters alone, so these two defaults
were chosen to land the mean within-cell connectivity near 76% of UEs
under the default geometry.  Adjust them freely; nothing else depends on
their particular values.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .units import NoiseSpec, db_to_linear, dbm_to_watts

__all__ = [
    "ScenarioConfig",
    "ConfigError",
    "paper_defaults",
    "load_config",
    "parse_config_text",
    "apply_overrides",
    "write_config",
    "config_to_dict",
    "config_from_dict",
    "config_hash",
]


class ConfigError(ValueError):
    """Raised on unknown keys, malformed values, or violated invariants."""


@dataclass(frozen=True)
class ScenarioConfig:
    """All tunable parameters of the simulated system (SI units)."""

    # Deployment geometry
    area_side_m: float = 10_000.0
    num_ues: int = 100
    max_bs: int = 4
    min_ue_separation_m: float = 100.0
    haps_altitude_m: float = 20_000.0
    cs_position: tuple[float, float, float] = (0.0, 0.0, 10.0)
    bs_height_m: float = 25.0
    ue_height_m: float = 1.5

    # Radio
    carrier_hz: float = 2.0e9
    bs_bandwidth_hz: float = 50.0e6
    ue_bandwidth_hz: float = 2.0e6
    rate_threshold_bps: float = 2.0e6
    shadowing_sigma_db: float = 8.0
    noise_psd_w_per_hz: float = 3.981071705534986e-21   # -174 dBm/Hz

    # Control-station power and antennas
    cs_total_power_w: float = 1.9952623149688795        # 33 dBm
    per_ue_power_cap_w: float = 1.0                     # 30 dBm
    cs_antenna_gain: float = 20892.96130854041          # 43.2 dB
    ue_antenna_gain: float = 1.0                        # 0 dB

    # Terrestrial BS defaults (calibration knobs, see module docstring)
    bs_tx_power_w: float = 39.810717055349734           # 46 dBm total
    bs_antenna_gain: float = 8.912509381337454          # 9.5 dB

    # RIS sizing and per-unit power
    ris_total_units: int = 220_000
    per_ue_unit_cap: int = 50_000
    ris_unit_power_w: float = 7.8e-3
    phase_bits: int = 2
    reflection_loss: float = 1.0

    # Reproducibility
    rng_seed: int = 1

    def __post_init__(self) -> None:
        validate_config(self)

    # Derived quantities -------------------------------------------------

    @property
    def noise_spec(self) -> NoiseSpec:
        """Per-UE receiver noise over one subcarrier."""
        return NoiseSpec(self.noise_psd_w_per_hz, self.ue_bandwidth_hz)

    @property
    def bs_capacity(self) -> int:
        """Subcarriers (hence simultaneous UEs) each BS can carry."""
        return int(self.bs_bandwidth_hz // self.ue_bandwidth_hz)

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def validate_config(cfg: ScenarioConfig) -> None:
    def positive(name, value):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ConfigError(f"{name} must be positive and finite, got {value!r}")

    if cfg.num_ues < 1:
        raise ConfigError(f"num_ues must be >= 1, got {cfg.num_ues}")
    if cfg.max_bs < 1:
        raise ConfigError(f"max_bs must be >= 1, got {cfg.max_bs}")
    if cfg.phase_bits < 1:
        raise ConfigError(f"phase_bits must be >= 1, got {cfg.phase_bits}")
    if cfg.ris_total_units < 0 or cfg.per_ue_unit_cap < 0:
        raise ConfigError("RIS unit counts must be >= 0")

    positive("area_side_m", cfg.area_side_m)
    if cfg.min_ue_separation_m < 0:
        raise ConfigError("min_ue_separation_m must be >= 0")
    if cfg.area_side_m <= cfg.min_ue_separation_m:
        raise ConfigError(
            f"area_side_m ({cfg.area_side_m}) must exceed min_ue_separation_m "
            f"({cfg.min_ue_separation_m})")

    for name in ("carrier_hz", "bs_bandwidth_hz", "ue_bandwidth_hz",
                 "rate_threshold_bps", "noise_psd_w_per_hz", "cs_total_power_w",
                 "per_ue_power_cap_w", "cs_antenna_gain", "ue_antenna_gain",
                 "bs_tx_power_w", "bs_antenna_gain", "ris_unit_power_w",
                 "haps_altitude_m", "bs_height_m", "ue_height_m"):
        positive(name, getattr(cfg, name))

    if cfg.shadowing_sigma_db < 0 or not math.isfinite(cfg.shadowing_sigma_db):
        raise ConfigError("shadowing_sigma_db must be >= 0 and finite")
    if not (0.0 < cfg.reflection_loss <= 1.0):
        raise ConfigError(f"reflection_loss must lie in (0, 1], got {cfg.reflection_loss}")
    if cfg.bs_bandwidth_hz < cfg.ue_bandwidth_hz:
        raise ConfigError("bs_bandwidth_hz must be >= ue_bandwidth_hz (capacity >= 1)")
    if len(cfg.cs_position) != 3:
        raise ConfigError("cs_position must have exactly three coordinates")
    if not all(math.isfinite(v) for v in cfg.cs_position):
        raise ConfigError("cs_position coordinates must be finite")


def paper_defaults() -> ScenarioConfig:
    """The shipped default configuration (same as ``ScenarioConfig()``)."""
    return ScenarioConfig()


# --------------------------------------------------------------------------
# Flat key=value file format
# --------------------------------------------------------------------------

_INT_FIELDS = {"num_ues", "max_bs", "ris_total_units", "per_ue_unit_cap",
               "phase_bits", "rng_seed"}
_TUPLE_FIELDS = {"cs_position"}
_FIELD_NAMES = [f.name for f in dataclasses.fields(ScenarioConfig)]

# Alternate keys accepted in config files / overrides: value is parsed as a
# float in the log domain and converted to the canonical linear-SI field.
_ALTERNATES = {
    "cs_total_power_dbm": ("cs_total_power_w", dbm_to_watts),
    "per_ue_power_cap_dbm": ("per_ue_power_cap_w", dbm_to_watts),
    "ris_unit_power_dbm": ("ris_unit_power_w", dbm_to_watts),
    "bs_tx_power_dbm": ("bs_tx_power_w", dbm_to_watts),
    "noise_psd_dbm_hz": ("noise_psd_w_per_hz", dbm_to_watts),
    "cs_antenna_gain_db": ("cs_antenna_gain", db_to_linear),
    "bs_antenna_gain_db": ("bs_antenna_gain", db_to_linear),
    "ue_antenna_gain_db": ("ue_antenna_gain", db_to_linear),
}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _TUPLE_FIELDS:
            parts = raw.replace(",", " ").split()
            if len(parts) != 3:
                raise ValueError("expected three coordinates")
            return tuple(float(p) for p in parts)
        if key in _INT_FIELDS:
            value = float(raw)
            if value != int(value):
                raise ValueError("expected an integer")
            return int(value)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"field '{key}': cannot parse {raw!r} ({exc})") from None


def _resolve_key_value(key: str, raw: str) -> tuple[str, object]:
    """Map a raw file/override entry to a canonical (field, value) pair."""
    if key in _ALTERNATES:
        field, conv = _ALTERNATES[key]
        return field, conv(float(_parse_value(field if field not in _INT_FIELDS else key, raw)))
    if key not in _FIELD_NAMES:
        raise ConfigError(f"unknown configuration key '{key}'")
    return key, _parse_value(key, raw)


def parse_config_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse ``key = value`` lines into a config, starting from ``base``.

    Lines may carry ``#`` comments; blank lines are ignored.  Specifying
    both a canonical field and its dB alternate is rejected.
    """
    entries: dict[str, object] = {}
    sources: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        field, value = _resolve_key_value(key, raw)
        if field in entries:
            raise ConfigError(
                f"line {lineno}: field '{field}' set twice "
                f"(via '{sources[field]}' and '{key}')")
        entries[field] = value
        sources[field] = key
    base = base if base is not None else ScenarioConfig()
    try:
        return dataclasses.replace(base, **entries)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def apply_overrides(cfg: ScenarioConfig, overrides: list[str]) -> ScenarioConfig:
    """Apply ``key=value`` override strings (CLI style) to a config."""
    if not overrides:
        return cfg
    return parse_config_text("\n".join(overrides), base=cfg)


def load_config(name_or_path: str | Path) -> ScenarioConfig:
    """Load a config file by path, or the shipped ``paper_defaults``."""
    path = Path(name_or_path)
    if path.is_file():
        return parse_config_text(path.read_text())
    if str(name_or_path) == "paper_defaults":
        text = resources.files("hapsris.data").joinpath("paper_defaults.cfg").read_text()
        return parse_config_text(text)
    raise ConfigError(f"config file not found: {name_or_path}")


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out = {}
    for name in _FIELD_NAMES:
        value = getattr(cfg, name)
        out[name] = list(value) if isinstance(value, tuple) else value
    return out


def config_from_dict(data: dict) -> ScenarioConfig:
    entries = {}
    for key, value in data.items():
        if key not in _FIELD_NAMES:
            raise ConfigError(f"unknown configuration key '{key}'")
        entries[key] = tuple(value) if key in _TUPLE_FIELDS else value
    try:
        return ScenarioConfig(**entries)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def _canonical_lines(cfg: ScenarioConfig) -> list[str]:
    lines = []
    for name in sorted(_FIELD_NAMES):
        value = getattr(cfg, name)
        if isinstance(value, tuple):
            rendered = " ".join(repr(float(v)) for v in value)
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{name} = {rendered}")
    return lines


def write_config(cfg: ScenarioConfig, path: str | Path) -> None:
    """Write a config in canonical (re-loadable, hash-stable) form."""
    Path(path).write_text("\n".join(_canonical_lines(cfg)) + "\n")


def config_hash(cfg: ScenarioConfig) -> str:
    """Short stable digest of the resolved configuration."""
    payload = "\n".join(_canonical_lines(cfg)).encode()
    return hashlib.sha256(payload).hexdigest()[:16]
