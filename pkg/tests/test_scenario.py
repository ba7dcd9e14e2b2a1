import math

import numpy as np
import pytest

from hapsris.config import (ConfigError, ScenarioConfig, apply_overrides,
                            config_hash, load_config, parse_config_text,
                            write_config)
from hapsris.scenario import (ScenarioInfeasibleError, build_scenario,
                              place_bss, place_haps_cs, place_ues,
                              scenario_from_file, scenario_to_file,
                              validate_scenario)


def rng(seed=0):
    return np.random.default_rng(seed)


# --------------------------------------------------------------------------
# UE placement
# --------------------------------------------------------------------------

def test_place_ues_respects_separation():
    cfg = ScenarioConfig(rng_seed=7)
    pts = place_ues(cfg, rng(7))
    assert pts.shape == (100, 3)
    xy = pts[:, :2]
    d = np.linalg.norm(xy[:, None] - xy[None, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    assert d.min() >= 100.0
    assert xy.min() >= 0.0 and xy.max() <= 10_000.0


def test_place_single_ue():
    cfg = ScenarioConfig(num_ues=1)
    pts = place_ues(cfg, rng())
    assert pts.shape == (1, 3)


def test_place_two_ues_tight_area():
    cfg = ScenarioConfig(num_ues=2, area_side_m=150.0,
                         min_ue_separation_m=100.0)
    pts = place_ues(cfg, rng(3))
    assert np.linalg.norm(pts[0, :2] - pts[1, :2]) >= 100.0


def test_place_ues_infeasible_packing():
    cfg = ScenarioConfig(num_ues=50, area_side_m=200.0,
                         min_ue_separation_m=100.0)
    with pytest.raises(ScenarioInfeasibleError):
        place_ues(cfg, rng(), max_attempts=10_000)


def test_uniformity_mean_near_centre():
    # CLT sanity: with no separation, the sample mean of 10k uniform points
    # stays within 3 sigma of the centre (sigma = side / sqrt(12 N)).
    cfg = ScenarioConfig(num_ues=10_000, min_ue_separation_m=0.0)
    pts = place_ues(cfg, rng(123))
    bound = 3.0 * 10_000.0 / math.sqrt(12.0 * 10_000)
    assert abs(pts[:, 0].mean() - 5000.0) < bound
    assert abs(pts[:, 1].mean() - 5000.0) < bound


# --------------------------------------------------------------------------
# BS grid
# --------------------------------------------------------------------------

def test_bs_grid_2x2():
    got = place_bss(ScenarioConfig(max_bs=4))
    expected = {(2500.0, 2500.0), (7500.0, 2500.0),
                (2500.0, 7500.0), (7500.0, 7500.0)}
    assert {(p[0], p[1]) for p in got} == expected
    assert np.all(got[:, 2] == 25.0)


def test_bs_grid_single_and_3x3():
    single = place_bss(ScenarioConfig(max_bs=1))
    assert single.tolist() == [[5000.0, 5000.0, 25.0]]
    nine = place_bss(ScenarioConfig(max_bs=9))
    xs = sorted({p[0] for p in nine})
    assert xs == [pytest.approx(10_000 / 6), pytest.approx(5000.0),
                  pytest.approx(50_000 / 6)]
    assert len(nine) == 9


# --------------------------------------------------------------------------
# Platform / CS geometry
# --------------------------------------------------------------------------

def test_haps_cs_default_geometry():
    haps, cs = place_haps_cs(ScenarioConfig())
    assert haps.tolist() == [5000.0, 5000.0, 20_000.0]
    assert cs.tolist() == [0.0, 0.0, 10.0]
    elev = math.degrees(math.atan2(haps[2] - cs[2],
                                   math.hypot(*(haps[:2] - cs[:2]))))
    assert elev == pytest.approx(70.5197721992369, abs=1e-9)
    assert np.linalg.norm(haps - cs) == pytest.approx(21203.77560718845, rel=1e-12)


def test_cs_under_platform_is_valid():
    cfg = ScenarioConfig(cs_position=(5000.0, 5000.0, 0.0))
    place_haps_cs(cfg)  # elevation 90 degrees


def test_cs_too_far_names_the_bound():
    cfg = ScenarioConfig(cs_position=(305_000.0, 5000.0, 0.0))
    with pytest.raises(ConfigError, match="229"):
        place_haps_cs(cfg)


def test_cs_low_elevation_names_the_bound():
    # lower platform: 10 km up, 150 km out is inside the range bound but
    # the elevation is only ~3.8 deg
    cfg = ScenarioConfig(haps_altitude_m=10_000.0,
                         cs_position=(150_000.0, 5000.0, 0.0))
    with pytest.raises(ConfigError, match="5 deg"):
        place_haps_cs(cfg)


# --------------------------------------------------------------------------
# Full scenario determinism
# --------------------------------------------------------------------------

def test_build_scenario_deterministic():
    cfg = ScenarioConfig(rng_seed=1)
    a = build_scenario(cfg)
    b = build_scenario(cfg)
    assert np.array_equal(a.ue_positions, b.ue_positions)
    assert np.array_equal(a.bs_positions, b.bs_positions)
    validate_scenario(a)


def test_seed_changes_only_ue_positions():
    a = build_scenario(ScenarioConfig(rng_seed=1))
    b = build_scenario(ScenarioConfig(rng_seed=2))
    assert not np.array_equal(a.ue_positions, b.ue_positions)
    assert np.array_equal(a.bs_positions, b.bs_positions)
    assert np.array_equal(a.haps_position, b.haps_position)
    assert np.array_equal(a.cs_position, b.cs_position)


def test_scenario_invariants_over_seeds():
    for seed in range(25):
        validate_scenario(build_scenario(ScenarioConfig(rng_seed=seed)))


def test_scenario_file_round_trip(tmp_path):
    scenario = build_scenario(ScenarioConfig(rng_seed=11))
    path = tmp_path / "scenario.json"
    scenario_to_file(scenario, path)
    loaded = scenario_from_file(path)
    assert np.array_equal(loaded.ue_positions, scenario.ue_positions)
    assert loaded.config == scenario.config


# --------------------------------------------------------------------------
# Config files and overrides
# --------------------------------------------------------------------------

def test_paper_defaults_loadable():
    cfg = load_config("paper_defaults")
    assert cfg == ScenarioConfig()


def test_config_file_round_trip(tmp_path):
    cfg = ScenarioConfig(num_ues=42, rng_seed=9)
    path = tmp_path / "test.cfg"
    write_config(cfg, path)
    assert load_config(path) == cfg


def test_dbm_alternate_keys():
    cfg = parse_config_text("cs_total_power_dbm = 33\nbs_antenna_gain_db = 8\n")
    assert cfg.cs_total_power_w == pytest.approx(1.9952623149688795)
    assert cfg.bs_antenna_gain == pytest.approx(10 ** 0.8)


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown configuration key 'frobnicate'"):
        parse_config_text("frobnicate = 3\n")


def test_duplicate_via_alternate_rejected():
    with pytest.raises(ConfigError, match="set twice"):
        parse_config_text("cs_total_power_w = 2\ncs_total_power_dbm = 33\n")


def test_override_type_checked():
    cfg = ScenarioConfig()
    with pytest.raises(ConfigError, match="num_ues"):
        apply_overrides(cfg, ["num_ues=12.5"])
    assert apply_overrides(cfg, ["num_ues=12"]).num_ues == 12


def test_invariant_violations_rejected():
    with pytest.raises(ConfigError):
        ScenarioConfig(reflection_loss=1.5)
    with pytest.raises(ConfigError):
        ScenarioConfig(area_side_m=50.0, min_ue_separation_m=100.0)
    with pytest.raises(ConfigError):
        ScenarioConfig(phase_bits=0)


def test_config_hash_stability():
    a, b = ScenarioConfig(), ScenarioConfig()
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(ScenarioConfig(rng_seed=2))


def test_scenario_invariants_thousand_seeds():
    # full placement-invariant battery across 1000 seeds of the default
    # configuration (separation, bounds, gateway geometry)
    cfg = ScenarioConfig()
    for seed in range(1000):
        validate_scenario(build_scenario(cfg.replace(rng_seed=seed)))
