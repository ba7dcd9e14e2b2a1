"""Built-in oracle suites: self-contained checks runnable from the CLI.

Each check recomputes an expected result through an independent route
(brute-force scan, dual bisection, algebraic identity) and compares it
against the production path.  They are the release gate behind
``hapsris validate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gp
from .allocation import min_units
from .channel import RisPhaseConfig, rate_bps, reflection_gain
from .units import NoiseSpec, dbm_to_watts, watts_to_dbm

__all__ = ["CheckResult", "run_all",
           "check_unit_round_trip", "check_min_units_scan",
           "check_solver_vs_oracle", "check_reflection_gain"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str


def check_unit_round_trip(num_samples: int = 2000) -> CheckResult:
    """dBm <-> watts round trips within 1e-12 relative across 24 decades."""
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(num_samples):
        x_dbm = rng.uniform(-180.0, 60.0)
        back = watts_to_dbm(dbm_to_watts(x_dbm))
        worst = max(worst, abs(back - x_dbm) / max(1.0, abs(x_dbm)))
    ok = worst < 1e-12
    return CheckResult("unit-round-trip", ok, f"worst relative error {worst:.2e}")


def _scan_min_units(p_w, h_sq, snr_min, noise, rho, n_limit=2_000_000):
    """Oracle: smallest integer N with rate >= threshold, by linear scan.

    The scan walks candidate counts in vectorised blocks but examines
    every integer from 1 upward; nothing is inferred from the closed form.
    """
    bandwidth = noise.bandwidth_hz
    target = rate_bps(snr_min, bandwidth)
    start = 1
    block = 4096
    while start <= n_limit:
        counts = np.arange(start, min(start + block, n_limit + 1))
        gammas = p_w * h_sq * (rho * counts) ** 2 / (noise.n0_w_per_hz * bandwidth)
        rates = bandwidth * np.log2(1.0 + gammas)
        hit = np.nonzero(rates >= target)[0]
        if hit.size:
            return int(counts[hit[0]])
        start += block
    raise RuntimeError("scan limit exceeded")


def check_min_units_scan(num_draws: int = 1000, seed: int = 7) -> CheckResult:
    """Closed-form unit sizing equals the brute-force scan, exactly.

    Draw parameters so that the required-unit radicand spans about
    thirteen orders of magnitude while the scan stays tractable.
    """
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(num_draws):
        target_radicand = 10.0 ** rng.uniform(-4.0, 9.0)
        snr_min = 10.0 ** rng.uniform(-1.0, 2.0)
        p_w = 10.0 ** rng.uniform(-3.0, 1.0)
        rho = rng.uniform(0.5, 1.0)
        n0b = 10.0 ** rng.uniform(-15.0, -12.0)
        h_sq = snr_min * n0b / (p_w * rho * rho * target_radicand)
        noise = NoiseSpec(n0b / 2e6, 2e6)
        fast = min_units(p_w, h_sq, snr_min, noise, rho)
        slow = _scan_min_units(p_w, h_sq, snr_min, noise, rho)
        if fast != slow:
            mismatches += 1
    ok = mismatches == 0
    return CheckResult("min-units-vs-scan", ok,
                       f"{mismatches}/{num_draws} mismatches")


def random_stage2_instance(rng: np.random.Generator, size: int,
                           force_binding: bool = False) -> gp.Stage2Instance:
    """Randomised instance family used by the solver cross-validation.

    Instances are feasible by construction: budgets are drawn as multiples
    (>= 1) of the consumption of a jittered reference allocation that
    respects every per-UE cap.  Tight multiples make the budgets bind.
    """
    c = 10.0 ** rng.uniform(2.0, 6.0, size=size)
    p_ris = 7.8e-3
    p_cap = float(10.0 ** rng.uniform(-0.5, 0.5))
    n_cap = float(max(rng.uniform(2e4, 8e4),
                      1.05 * np.max(np.sqrt(c / p_cap))))

    jitter = np.exp(rng.uniform(-1.0, 1.0, size=size))
    n_ref = np.clip((2.0 * c / p_ris) ** (1.0 / 3.0) * jitter,
                    1.02 * np.sqrt(c / p_cap), 0.98 * n_cap)
    p_ref = c / n_ref ** 2

    if force_binding:
        n_budget = float(np.sum(n_ref)) * rng.uniform(1.0, 1.1)
        p_budget = float(np.sum(p_ref)) * rng.uniform(1.0, 1.2)
    else:
        n_budget = float(np.sum(n_ref)) * rng.uniform(1.1, 2.5)
        p_budget = float(np.sum(p_ref)) * rng.uniform(1.2, 6.0)
    return gp.Stage2Instance(
        qos_constants=c,
        ris_unit_power_w=p_ris,
        cs_power_budget_w=p_budget,
        ris_unit_budget=n_budget,
        per_ue_power_cap_w=p_cap,
        per_ue_unit_cap=n_cap,
    )


def check_solver_vs_oracle(sizes=(1, 5, 20, 50), instances_per_size: int = 100,
                           seed: int = 11) -> CheckResult:
    """Barrier solve and KKT dual bisection agree on randomised instances."""
    rng = np.random.default_rng(seed)
    worst_obj = 0.0
    worst_var = 0.0
    failures = []
    for size in sizes:
        for i in range(instances_per_size):
            inst = random_stage2_instance(rng, size, force_binding=(i % 3 == 0))
            a = gp.solve(inst)
            b = gp.oracle_kkt(inst)
            if a.status != "optimal" or b.status != "optimal":
                failures.append(f"size {size} #{i}: status {a.status}/{b.status}")
                continue
            try:
                a.check_feasible(inst)
                b.check_feasible(inst)
            except ValueError as exc:
                failures.append(f"size {size} #{i}: {exc}")
                continue
            rel_obj = abs(a.objective_w - b.objective_w) / abs(b.objective_w)
            rel_var = float(np.max(np.abs(a.units - b.units)
                                   / np.maximum(np.abs(b.units), 1e-12)))
            rel_var = max(rel_var,
                          float(np.max(np.abs(a.power_w - b.power_w)
                                       / np.maximum(np.abs(b.power_w), 1e-12))))
            worst_obj = max(worst_obj, rel_obj)
            worst_var = max(worst_var, rel_var)
    ok = not failures and worst_obj < 1e-6 and worst_var < 1e-4
    detail = (f"worst objective gap {worst_obj:.2e}, worst variable gap "
              f"{worst_var:.2e}, {len(failures)} failures")
    if failures:
        detail += "; first: " + failures[0]
    return CheckResult("solver-vs-kkt-oracle", ok, detail)


def check_reflection_gain(trials: int = 100, n_units: int = 10_000,
                          seed: int = 5) -> CheckResult:
    """|Phi| <= rho N with equality under alignment; 1-bit quantisation loses
    a factor 2/pi on average."""
    rng = np.random.default_rng(seed)
    aligned = reflection_gain(RisPhaseConfig.aligned(4000, 1.0))
    if abs(aligned - 4000.0) > 1e-9:
        return CheckResult("reflection-gain", False, "alignment identity broken")

    ratios = []
    for _ in range(trials):
        incident = rng.uniform(0, 2 * np.pi, n_units)
        departure = rng.uniform(0, 2 * np.pi, n_units)
        cfg = RisPhaseConfig.from_targets(incident, departure, phase_bits=1)
        phi = reflection_gain(cfg)
        if abs(phi) > n_units + 1e-9:
            return CheckResult("reflection-gain", False, "bound |Phi| <= N broken")
        ratios.append(abs(phi) / n_units)
    mean_ratio = float(np.mean(ratios))
    ok = abs(mean_ratio - 2.0 / math.pi) < 0.02
    return CheckResult("reflection-gain", ok,
                       f"1-bit mean |Phi|/N = {mean_ratio:.4f} "
                       f"(target {2.0 / math.pi:.4f})")


def run_all(quick: bool = False) -> list[CheckResult]:
    """Run every oracle suite; ``quick`` trims sample counts below 60 s."""
    if quick:
        return [
            check_unit_round_trip(200),
            check_min_units_scan(num_draws=100),
            check_solver_vs_oracle(sizes=(1, 5, 20), instances_per_size=10),
            check_reflection_gain(trials=20),
        ]
    return [
        check_unit_round_trip(),
        check_min_units_scan(),
        check_solver_vs_oracle(),
        check_reflection_gain(),
    ]
