import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hapsris.channel import (RisPhaseConfig, atmospheric_attenuation_db,
                             effective_gain, free_space_pl_db, haps_link_pl_db,
                             los_probability, min_snr_for_rate, quantize_phases,
                             rate_bps, reflection_gain, snr, terrestrial_gain,
                             uma_path_loss_db)
from hapsris.config import ScenarioConfig
from hapsris.scenario import build_scenario
from hapsris.units import NoiseSpec


# --------------------------------------------------------------------------
# Free-space and atmospheric pieces
# --------------------------------------------------------------------------

def test_fspl_zero_point():
    # at f = c / (4 pi) and d = 1 m the log argument is exactly 1
    assert free_space_pl_db(1.0, 23856725.79618471) == pytest.approx(0.0, abs=1e-9)


def test_fspl_at_platform_altitude():
    assert free_space_pl_db(20_000.0, 2e9) == pytest.approx(124.48898304844262,
                                                            rel=1e-12)


def test_fspl_doubling_distance():
    base = free_space_pl_db(1234.0, 2e9)
    assert free_space_pl_db(2468.0, 2e9) - base == pytest.approx(
        20 * math.log10(2), abs=1e-9)


def test_atmospheric_cosecant_scaling():
    assert atmospheric_attenuation_db(math.pi / 2, 2e9) == pytest.approx(0.035)
    assert atmospheric_attenuation_db(math.radians(30), 2e9) == pytest.approx(
        0.070, abs=1e-12)
    assert atmospheric_attenuation_db(math.radians(5), 2e9) == pytest.approx(
        0.401579963598445, rel=1e-9)
    with pytest.raises(ValueError):
        atmospheric_attenuation_db(0.0, 2e9)


def test_haps_link_pl_corner_geometry():
    # CS at the area corner, platform over the centre at 20 km
    pl = haps_link_pl_db((0.0, 0.0, 10.0), (5000.0, 5000.0, 20_000.0), 2e9)
    assert pl == pytest.approx(125.03377229662793, rel=1e-12)


def test_haps_link_pl_directly_below():
    pl = haps_link_pl_db((5000.0, 5000.0, 0.0), (5000.0, 5000.0, 20_000.0), 2e9)
    assert pl == pytest.approx(124.48898304844262 + 0.035, rel=1e-12)


def test_haps_link_frequency_shift():
    at2 = haps_link_pl_db((0, 0, 0), (0, 0, 20_000.0), 2e9)
    at4 = haps_link_pl_db((0, 0, 0), (0, 0, 20_000.0), 4e9)
    fspl_shift = 20 * math.log10(2)
    atm_shift = 0.040 - 0.035   # zenith table entries at 4 and 2 GHz
    assert at4 - at2 == pytest.approx(fspl_shift + atm_shift, abs=1e-9)


# --------------------------------------------------------------------------
# Urban-macro terrestrial model
# --------------------------------------------------------------------------

def test_uma_los_formula_at_1km():
    pl = uma_path_loss_db(math.sqrt(1000.0 ** 2 - 23.5 ** 2), True, 2e9, 1.5, 25.0)
    assert float(pl) == pytest.approx(100.02059991327963, rel=1e-12)


def test_uma_nlos_formula_at_1km():
    pl = uma_path_loss_db(math.sqrt(1000.0 ** 2 - 23.5 ** 2), False, 2e9, 1.5, 25.0)
    assert float(pl) == pytest.approx(136.80059991327963, rel=1e-12)


def test_uma_nlos_floors_at_los():
    # very close in, the NLOS law dips below LOS and must be floored
    close_los = uma_path_loss_db(10.0, True, 2e9, 1.5, 25.0)
    close_nlos = uma_path_loss_db(10.0, False, 2e9, 1.5, 25.0)
    assert close_nlos >= close_los


def test_los_probability_shape():
    assert float(los_probability(1.0)) == pytest.approx(1.0)
    assert float(los_probability(18.0)) == pytest.approx(1.0)
    far = float(los_probability(5000.0))
    assert 0.0 < far < 0.01
    d = np.array([10.0, 100.0, 1000.0, 5000.0])
    assert np.all(np.diff(los_probability(d)) < 0)


def test_shadowing_sample_std():
    cfg = ScenarioConfig(shadowing_sigma_db=8.0, bs_antenna_gain=1.0,
                         ue_antenna_gain=1.0)
    rng = np.random.default_rng(42)
    # inside 18 m the LOS probability is exactly 1, so the spread of the
    # path loss at fixed distance is pure shadowing
    bs, ue = np.array([0.0, 0.0, 25.0]), np.array([15.0, 0.0, 1.5])
    gains_db = np.array([
        10 * math.log10(terrestrial_gain(bs, ue, cfg, rng))
        for _ in range(100_000)
    ])
    assert np.std(gains_db) == pytest.approx(8.0, abs=0.2)


def test_terrestrial_gain_matches_matrix_path():
    cfg = ScenarioConfig(num_ues=1, max_bs=1, rng_seed=5)
    scenario = build_scenario(cfg)
    channels = effective_gain(scenario)
    rng = np.random.default_rng(np.random.SeedSequence((5, 1)))
    single = terrestrial_gain(scenario.bs_positions[0], scenario.ue_positions[0],
                              cfg, rng)
    assert single == pytest.approx(float(channels.terrestrial_gain[0, 0]),
                                   rel=1e-12)


# --------------------------------------------------------------------------
# Effective relayed channel
# --------------------------------------------------------------------------

def test_effective_gain_db_arithmetic():
    # G_cs = 43.2 dB, G_ue = 0 dB, total path loss 250 dB
    h_sq = 10 ** 4.32 * 1.0 * 10 ** (-250.0 / 10.0)
    assert h_sq == pytest.approx(2.0892961308540408e-21, rel=1e-12)


def test_effective_gain_identity_on_scenario():
    scenario = build_scenario(ScenarioConfig(rng_seed=3))
    channels = effective_gain(scenario)
    channels.verify_composition()
    assert np.all(channels.haps_gain_sq > 0)
    assert np.all(channels.terrestrial_gain > 0)


def test_unit_gain_when_everything_is_unity():
    # zero-gain antennas and 0 dB path loss leave |h|^2 = 1
    assert 1.0 * 1.0 / (1.0 * 1.0) == 1.0


# --------------------------------------------------------------------------
# RIS reflection gain
# --------------------------------------------------------------------------

def test_reflection_perfect_alignment():
    phi = reflection_gain(RisPhaseConfig.aligned(4000, 1.0))
    assert phi == pytest.approx(4000.0 + 0.0j)


def test_reflection_cancellation():
    cfg = RisPhaseConfig(unit_phases=[0.0, math.pi],
                         incident_phases=[0.0, 0.0],
                         departure_phases=[0.0, 0.0])
    assert abs(reflection_gain(cfg)) == pytest.approx(0.0, abs=1e-12)


def test_reflection_bound_and_loss():
    rng = np.random.default_rng(0)
    n = 500
    cfg = RisPhaseConfig(unit_phases=rng.uniform(0, 2 * np.pi, n),
                         incident_phases=rng.uniform(0, 2 * np.pi, n),
                         departure_phases=rng.uniform(0, 2 * np.pi, n),
                         reflection_loss=0.8)
    assert abs(reflection_gain(cfg)) <= 0.8 * n + 1e-9


def test_one_bit_quantisation_mean():
    rng = np.random.default_rng(99)
    n = 10_000
    ratios = []
    for _ in range(100):
        cfg = RisPhaseConfig.from_targets(rng.uniform(0, 2 * np.pi, n),
                                          rng.uniform(0, 2 * np.pi, n),
                                          phase_bits=1)
        ratios.append(abs(reflection_gain(cfg)) / n)
    assert np.mean(ratios) == pytest.approx(2.0 / math.pi, abs=0.02)


@pytest.mark.parametrize("bits,expected", [
    (1, 0.6366197723675814),
    (2, 0.9003163161571061),
    (4, 0.9935868511442058),
    (8, 0.9999749004870501),
])
def test_quantisation_loss_tracks_sinc(bits, expected):
    # quantising ideal phases leaves residuals uniform on +-pi/2^b, whose
    # mean cosine is sinc(pi / 2^b)
    rng = np.random.default_rng(bits)
    n = 10_000
    cfg = RisPhaseConfig.from_targets(rng.uniform(0, 2 * np.pi, n),
                                      rng.uniform(0, 2 * np.pi, n),
                                      phase_bits=bits)
    assert abs(reflection_gain(cfg)) / n == pytest.approx(expected, abs=0.02)


def test_quantize_phases_grid():
    grid = quantize_phases([0.1, 3.0, 6.2], 2)
    step = math.pi / 2
    assert np.allclose(np.mod(grid / step, 1.0), 0.0)
    assert grid[0] == 0.0
    assert grid[2] == 0.0   # 6.2 wraps to 2 pi -> 0


def test_phase_grid_validation():
    with pytest.raises(ValueError, match="quantisation grid"):
        RisPhaseConfig(unit_phases=[0.3], incident_phases=[0.0],
                       departure_phases=[0.0], phase_bits=1)


# --------------------------------------------------------------------------
# SNR and rate
# --------------------------------------------------------------------------

def test_snr_unit_case():
    noise = NoiseSpec(1e-15, 2e6)
    p = 1e-15 * 2e6
    assert snr(p, 1.0, 1.0, noise) == pytest.approx(1.0)


def test_snr_quadratic_in_reflection():
    noise = NoiseSpec(1e-15, 2e6)
    base = snr(0.5, 1e-18, 1.0, noise)
    assert snr(0.5, 1e-18, 40.0, noise) == pytest.approx(1600.0 * base)


def test_snr_reference_chain():
    noise = NoiseSpec(7.9433e-15 / 2e6, 2e6)
    gamma = snr(0.33, 10 ** (-20.68), 1e4, noise)
    assert gamma == pytest.approx(8.679865083552597, rel=1e-9)


def test_rate_examples():
    assert rate_bps(1.0, 2e6) == pytest.approx(2e6)
    assert rate_bps(0.0, 2e6) == 0.0
    assert rate_bps(3.0, 1e6) == pytest.approx(2e6)


def test_min_snr_inverts_rate():
    assert min_snr_for_rate(2e6, 2e6) == pytest.approx(1.0)
    assert min_snr_for_rate(8e6, 2e6) == pytest.approx(15.0)


@given(st.floats(min_value=1e-6, max_value=1e6),
       st.floats(min_value=1.01, max_value=10.0))
def test_rate_monotone_in_snr(gamma, factor):
    assert rate_bps(gamma * factor, 2e6) > rate_bps(gamma, 2e6)


@given(st.floats(min_value=1e-3, max_value=1e3),
       st.floats(min_value=1.01, max_value=5.0))
def test_snr_strictly_increasing_in_each_argument(p, factor):
    noise = NoiseSpec(1e-15, 2e6)
    base = snr(p, 1e-18, 100.0, noise)
    assert snr(p * factor, 1e-18, 100.0, noise) > base
    assert snr(p, 1e-18 * factor, 100.0, noise) > base
    assert snr(p, 1e-18, 100.0 * factor, noise) > base
