import numpy as np
import pytest

from hapsris import gp
from hapsris.diagnostics import random_stage2_instance


def single_ue(c, p_ris, p_budget=1e9, n_budget=1e9, p_cap=1e9, n_cap=1e9,
              **kw) -> gp.Stage2Instance:
    return gp.Stage2Instance(
        qos_constants=np.array([c]), ris_unit_power_w=p_ris,
        cs_power_budget_w=p_budget, ris_unit_budget=n_budget,
        per_ue_power_cap_w=p_cap, per_ue_unit_cap=n_cap, **kw)


# --------------------------------------------------------------------------
# Closed-form single-UE optima: stationarity of c/n^2 + P_ris n gives
# n* = (2c / P_ris)^(1/3), p* = c / n*^2 when nothing else binds.
# --------------------------------------------------------------------------

def test_single_ue_unit_stationarity():
    # n* = 1 sits exactly on the unit floor; complementarity is degenerate
    # there, so variables are held to 1e-5 while the objective (flat to
    # second order at a stationary point) is held much tighter.
    sol = gp.solve(single_ue(c=1.0, p_ris=2.0))
    assert sol.status == "optimal"
    assert sol.units[0] == pytest.approx(1.0, rel=1e-5)
    assert sol.power_w[0] == pytest.approx(1.0, rel=1e-5)
    assert sol.objective_w == pytest.approx(3.0, rel=1e-9)


def test_single_ue_cbrt_scaling():
    sol = gp.solve(single_ue(c=4.0, p_ris=1.0))
    assert sol.units[0] == pytest.approx(2.0, rel=1e-8)
    assert sol.power_w[0] == pytest.approx(1.0, rel=1e-8)
    assert sol.objective_w == pytest.approx(3.0, rel=1e-9)


def test_oracle_reproduces_closed_forms():
    for c, p_ris, n_star in ((1.0, 2.0, 1.0), (4.0, 1.0, 2.0)):
        sol = gp.oracle_kkt(single_ue(c=c, p_ris=p_ris))
        assert sol.status == "optimal"
        assert sol.units[0] == pytest.approx(n_star, rel=1e-10)
        assert sol.objective_w == pytest.approx(3.0, rel=1e-10)


# --------------------------------------------------------------------------
# Budget binding behaviour
# --------------------------------------------------------------------------

def test_oracle_power_bisection_hits_budget():
    rng = np.random.default_rng(1)
    c = 10.0 ** rng.uniform(2.0, 5.0, size=8)
    p_ris = 7.8e-3
    free = gp.oracle_kkt(gp.Stage2Instance(
        qos_constants=c, ris_unit_power_w=p_ris,
        cs_power_budget_w=1e9, ris_unit_budget=1e9,
        per_ue_power_cap_w=1e9, per_ue_unit_cap=1e9))
    tight_budget = 0.5 * float(np.sum(free.power_w))
    sol = gp.oracle_kkt(gp.Stage2Instance(
        qos_constants=c, ris_unit_power_w=p_ris,
        cs_power_budget_w=tight_budget, ris_unit_budget=1e9,
        per_ue_power_cap_w=1e9, per_ue_unit_cap=1e9))
    assert sol.status == "optimal"
    assert float(np.sum(sol.power_w)) == pytest.approx(tight_budget, rel=1e-9)


def test_solve_tracks_oracle_with_binding_units():
    rng = np.random.default_rng(5)
    for _ in range(10):
        inst = random_stage2_instance(rng, 20, force_binding=True)
        a, b = gp.solve(inst), gp.oracle_kkt(inst)
        assert a.status == "optimal" and b.status == "optimal"
        assert a.objective_w == pytest.approx(b.objective_w, rel=1e-6)
        np.testing.assert_allclose(a.units, b.units, rtol=1e-4)
        np.testing.assert_allclose(a.power_w, b.power_w, rtol=1e-4)


def test_qos_active_at_optimum():
    rng = np.random.default_rng(9)
    for size in (1, 5, 20):
        inst = random_stage2_instance(rng, size)
        sol = gp.solve(inst)
        activity = sol.power_w * sol.units ** 2 / inst.qos_constants
        np.testing.assert_allclose(activity, 1.0, rtol=1e-6)


def test_objective_monotone_in_budgets():
    rng = np.random.default_rng(13)
    inst = random_stage2_instance(rng, 10, force_binding=True)
    base = gp.solve(inst).objective_w
    grown_p = gp.Stage2Instance(
        inst.qos_constants, inst.ris_unit_power_w,
        inst.cs_power_budget_w * 2.0, inst.ris_unit_budget,
        inst.per_ue_power_cap_w, inst.per_ue_unit_cap)
    grown_n = gp.Stage2Instance(
        inst.qos_constants, inst.ris_unit_power_w,
        inst.cs_power_budget_w, inst.ris_unit_budget * 2.0,
        inst.per_ue_power_cap_w, inst.per_ue_unit_cap)
    assert gp.solve(grown_p).objective_w <= base * (1 + 1e-9)
    assert gp.solve(grown_n).objective_w <= base * (1 + 1e-9)


def test_kkt_residual_reported_small():
    rng = np.random.default_rng(17)
    inst = random_stage2_instance(rng, 20, force_binding=True)
    sol = gp.solve(inst)
    assert sol.status == "optimal"
    assert sol.kkt_residual <= 1e-6


def test_solution_constraint_checker():
    inst = single_ue(c=4.0, p_ris=1.0)
    sol = gp.solve(inst)
    sol.check_feasible(inst)
    bad = gp.Stage2Solution(sol.power_w * 0.5, sol.units, sol.objective_w,
                            "optimal", 0.0)
    with pytest.raises(ValueError, match="rate constraint"):
        bad.check_feasible(inst)


# --------------------------------------------------------------------------
# Infeasibility certificates
# --------------------------------------------------------------------------

def test_infeasible_per_ue_cap():
    sol = gp.solve(single_ue(c=100.0, p_ris=1.0, p_cap=1.0, n_cap=5.0))
    assert sol.status == "infeasible"
    assert "per-UE caps" in sol.message


def test_infeasible_unit_budget():
    # each UE needs >= sqrt(c / p_cap) = 10 units; 3 UEs exceed budget 25
    inst = gp.Stage2Instance(
        qos_constants=np.array([100.0, 100.0, 100.0]),
        ris_unit_power_w=1.0, cs_power_budget_w=10.0, ris_unit_budget=25.0,
        per_ue_power_cap_w=1.0, per_ue_unit_cap=1e9)
    sol = gp.solve(inst)
    assert sol.status == "infeasible"
    assert "unit budget" in sol.message


def test_infeasible_power_budget():
    # even at the unit caps each UE needs c / n_cap^2 = 1 W; 3 W > 2 W budget
    inst = gp.Stage2Instance(
        qos_constants=np.array([100.0, 100.0, 100.0]),
        ris_unit_power_w=1.0, cs_power_budget_w=2.0, ris_unit_budget=1e9,
        per_ue_power_cap_w=10.0, per_ue_unit_cap=10.0)
    sol = gp.solve(inst)
    assert sol.status == "infeasible"
    assert "power budget" in sol.message
    oracle = gp.oracle_kkt(inst)
    assert oracle.status == "infeasible"


def test_jointly_infeasible_detected_by_phase1():
    # both budgets individually attainable, jointly impossible:
    # min total power at n_budget is 2 * 100/8^2 = 3.125 W > 2.0 W,
    # while at the unit caps (12 each) power would fit and units would not.
    inst = gp.Stage2Instance(
        qos_constants=np.array([100.0, 100.0]),
        ris_unit_power_w=1.0, cs_power_budget_w=2.0, ris_unit_budget=16.0,
        per_ue_power_cap_w=4.0, per_ue_unit_cap=12.0)
    sol = gp.solve(inst)
    assert sol.status == "infeasible"
    oracle = gp.oracle_kkt(inst)
    assert oracle.status == "infeasible"


# --------------------------------------------------------------------------
# Rounding and repair
# --------------------------------------------------------------------------

def test_round_keeps_integral_units():
    inst = single_ue(c=4.0, p_ris=1.0)
    sol = gp.Stage2Solution(np.array([1.0]), np.array([2.0]), 3.0,
                            "optimal", 0.0)
    rounded = gp.round_and_repair(sol, inst)
    assert rounded.units[0] == 2.0


def test_round_ceils_fractional_units():
    # unit-sizing style case: the power cap pins the continuous optimum at
    # n* = sqrt(c / p_cap) = 891.25..., which must round to 892
    c = 794330.0
    inst = single_ue(c=c, p_ris=0.1, p_cap=1.0)
    sol = gp.solve(inst)
    assert sol.units[0] == pytest.approx(891.2519284691618, rel=1e-6)
    rounded = gp.round_and_repair(sol, inst)
    assert rounded.units[0] == 892.0
    assert rounded.power_w[0] == pytest.approx(c / 892.0 ** 2, rel=1e-12)


def test_repair_single_decrement():
    # free optimum (2c)^(1/3) = (9.28, 10.0, 10.63) ceils to (10, 10, 11);
    # rounding against a 30-unit budget forces exactly one decrement on the
    # UE with the smallest power penalty
    c = np.array([400.0, 500.0, 600.0])
    loose = gp.Stage2Instance(
        qos_constants=c, ris_unit_power_w=1.0,
        cs_power_budget_w=1e9, ris_unit_budget=1e9,
        per_ue_power_cap_w=1e9, per_ue_unit_cap=1e9)
    continuous = gp.solve(loose)
    ceiling = np.ceil(continuous.units - 1e-6)
    assert ceiling.sum() == 31.0
    tight = gp.Stage2Instance(
        qos_constants=c, ris_unit_power_w=1.0,
        cs_power_budget_w=1e9, ris_unit_budget=30.0,
        per_ue_power_cap_w=1e9, per_ue_unit_cap=1e9)
    rounded = gp.round_and_repair(continuous, tight)
    assert rounded.units.sum() == 30.0
    # exhaustive check over the three candidate decrements
    best = None
    for j in range(3):
        n = ceiling.copy()
        n[j] -= 1
        cost = float(np.sum(c / n ** 2) + np.sum(n))
        if best is None or cost < best[0]:
            best = (cost, j)
    expected = ceiling.copy()
    expected[best[1]] -= 1
    np.testing.assert_array_equal(rounded.units, expected)


def test_repair_signals_power_overflow():
    # small unit counts make a single decrement expensive: continuous
    # optimum n = (2.9, 2.9) with 2.38 W fits the 2.5 W budget, but the
    # repaired integral point (2, 3) needs 3.6 W -> infeasible signal
    inst = gp.Stage2Instance(
        qos_constants=np.array([10.0, 10.0]),
        ris_unit_power_w=1.0, cs_power_budget_w=2.5,
        ris_unit_budget=5.8, per_ue_power_cap_w=1e9,
        per_ue_unit_cap=1e9)
    sol = gp.solve(inst)
    assert sol.status == "optimal"
    with pytest.raises(gp.RoundingInfeasibleError):
        gp.round_and_repair(sol, inst)


def test_objective_monotone_in_caps():
    rng = np.random.default_rng(29)
    inst = random_stage2_instance(rng, 10, force_binding=True)
    base = gp.solve(inst).objective_w
    wider_pcap = gp.Stage2Instance(
        inst.qos_constants, inst.ris_unit_power_w, inst.cs_power_budget_w,
        inst.ris_unit_budget, inst.per_ue_power_cap_w * 2.0,
        inst.per_ue_unit_cap)
    wider_ncap = gp.Stage2Instance(
        inst.qos_constants, inst.ris_unit_power_w, inst.cs_power_budget_w,
        inst.ris_unit_budget, inst.per_ue_power_cap_w,
        inst.per_ue_unit_cap * 2.0)
    assert gp.solve(wider_pcap).objective_w <= base * (1 + 1e-9)
    assert gp.solve(wider_ncap).objective_w <= base * (1 + 1e-9)


def test_solve_trace_file(tmp_path):
    trace = tmp_path / "trace.txt"
    gp.solve(single_ue(c=4.0, p_ris=1.0), trace_path=trace)
    text = trace.read_text()
    assert "barrier t=" in text
    assert "final status=optimal" in text
