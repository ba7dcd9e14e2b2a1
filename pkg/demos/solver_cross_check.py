"""Cross-validate the barrier solver against the closed-form dual oracle.

The continuous allocation problem has enough structure that two entirely
different solution routes exist: a log-domain interior-point method, and
a KKT reduction solved by nested bisection on the two budget multipliers.
This script builds a random instance, runs both, and prints the match.

Run:  python demos/solver_cross_check.py
"""

import numpy as np

from hapsris import gp
from hapsris.diagnostics import random_stage2_instance

rng = np.random.default_rng(2027)
inst = random_stage2_instance(rng, size=12, force_binding=True)

print(f"instance: {inst.size} UEs, qos constants "
      f"{inst.qos_constants.min():.3g} .. {inst.qos_constants.max():.3g}, "
      f"budgets {inst.cs_power_budget_w:.3f} W / "
      f"{inst.ris_unit_budget:.0f} units")

barrier = gp.solve(inst)
oracle = gp.oracle_kkt(inst)
print(f"\nbarrier : objective {barrier.objective_w:.9f} W "
      f"(status {barrier.status}, kkt residual {barrier.kkt_residual:.2e})")
print(f"oracle  : objective {oracle.objective_w:.9f} W "
      f"(status {oracle.status})")

rel = abs(barrier.objective_w - oracle.objective_w) / oracle.objective_w
var = float(np.max(np.abs(barrier.units - oracle.units) / oracle.units))
print(f"\nobjective agreement : {rel:.2e} relative")
print(f"variable agreement  : {var:.2e} relative (worst unit count)")

print("\nper-UE allocation (barrier route):")
print(f"{'ue':>4} {'power_w':>12} {'units':>10} {'p*n^2/c':>10}")
for k in range(inst.size):
    activity = barrier.power_w[k] * barrier.units[k] ** 2 / inst.qos_constants[k]
    print(f"{k:>4} {barrier.power_w[k]:>12.6f} {barrier.units[k]:>10.2f} "
          f"{activity:>10.6f}")
print("\nthe rate constraint is active (p n^2 = c) at every optimum: any"
      "\nslack would let the solver shave transmit power for free.")

rounded = gp.round_and_repair(barrier, inst)
print(f"\nafter integral rounding: {int(rounded.units.sum())} units, "
      f"objective {rounded.objective_w:.9f} W")
