"""Continuous power/RIS-unit minimisation: a specialised geometric program.

The stage-2 allocation problem is, per served UE k with QoS constant
c_k = gamma_min N0 B / (rho^2 |h_k|^2):

    minimize    sum_k  w_p p_k + w_n P_ris n_k
    subject to  p_k n_k^2 >= c_k                (rate constraint)
                sum_k p_k <= P_budget
                sum_k n_k <= N_budget
                floors <= p_k <= p_cap_k,  floors <= n_k <= n_cap_k

All terms are posynomials, so the substitution x = ln p, y = ln n makes
the problem convex: the objective becomes a sum of exponentials, each
rate constraint the *linear* inequality ln c_k - x_k - 2 y_k <= 0, and
each budget a log-sum-exp.  No general-purpose posynomial front end is
needed; the solver below is specialised to exactly this structure.

Solution path:
  1. structural prechecks (cheap infeasibility certificates),
  2. a strictly interior start (direct construction, or a phase-1
     program minimising the worst log-domain violation),
  3. a logarithmic-barrier interior method with damped Newton inner
     steps (t starts at 1, grows 10x, Newton decrement tolerance 1e-10)
     run until the duality measure m/t falls below 1e-9 (1 + |objective|),
  4. a short primal-dual Newton refinement of the KKT system, which
     sharpens the barrier iterate to near machine precision so that the
     rate constraints are numerically active at the optimum.

``oracle_kkt`` is an independent cross-check: it substitutes
p_k = c_k / n_k^2 (the rate constraint is always active at an optimum
because the objective increases in both variables), reduces each UE to a
closed-form response to the two budget multipliers, and finds the
multipliers by nested bisection.  It shares no code with the barrier
path.

The objective weights (w_p, w_n) support restricted studies that charge
only transmit power or only RIS-unit power.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Stage2Instance",
    "Stage2Solution",
    "RoundingInfeasibleError",
    "solve",
    "oracle_kkt",
    "round_and_repair",
]

BARRIER_T0 = 1.0
BARRIER_GROWTH = 10.0
BARRIER_EPS_REL = 1e-9
NEWTON_DECREMENT_TOL = 1e-10
NEWTON_MAX_INNER = 120
BARRIER_MAX_OUTER = 48
OPTIMAL_KKT_TOL = 1e-6

ORACLE_OUTER_ITERS = 90
ORACLE_INNER_ITERS = 80


class RoundingInfeasibleError(RuntimeError):
    """Integral rounding cannot be repaired within the budgets."""


# --------------------------------------------------------------------------
# Problem data
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Stage2Instance:
    """One continuous allocation problem over a fixed served set."""

    qos_constants: np.ndarray            # c_k > 0, units W * units^2
    ris_unit_power_w: float
    cs_power_budget_w: float
    ris_unit_budget: float
    per_ue_power_cap_w: np.ndarray = field(default=None)  # broadcastable
    per_ue_unit_cap: np.ndarray = field(default=None)
    power_floor_w: float = 1e-9
    unit_floor: float = 1.0
    power_weight: float = 1.0
    unit_weight: float = 1.0

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.qos_constants, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("qos_constants must be a non-empty 1-D array")
        if np.any(~np.isfinite(c)) or np.any(c <= 0):
            raise ValueError("qos_constants must be positive and finite")
        object.__setattr__(self, "qos_constants", c)

        for name, default in (("per_ue_power_cap_w", np.inf),
                              ("per_ue_unit_cap", np.inf)):
            raw = getattr(self, name)
            arr = np.broadcast_to(
                np.asarray(default if raw is None else raw, dtype=float),
                c.shape).copy()
            if np.any(arr <= 0):
                raise ValueError(f"{name} must be positive")
            object.__setattr__(self, name, arr)

        for name in ("ris_unit_power_w", "cs_power_budget_w", "ris_unit_budget",
                     "power_floor_w", "unit_floor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if np.any(self.per_ue_power_cap_w < self.power_floor_w):
            raise ValueError("per-UE power caps must be >= the power floor")
        if np.any(self.per_ue_unit_cap < self.unit_floor):
            raise ValueError("per-UE unit caps must be >= the unit floor")
        if self.power_weight < 0 or self.unit_weight < 0:
            raise ValueError("objective weights must be >= 0")
        if self.power_weight == 0 and self.unit_weight == 0:
            raise ValueError("at least one objective weight must be positive")

    @property
    def size(self) -> int:
        return self.qos_constants.shape[0]

    def objective(self, power_w: np.ndarray, units: np.ndarray) -> float:
        return float(self.power_weight * np.sum(power_w)
                     + self.unit_weight * self.ris_unit_power_w * np.sum(units))


@dataclass
class Stage2Solution:
    """Solver output; arrays are per-UE in instance order."""

    power_w: np.ndarray
    units: np.ndarray
    objective_w: float
    status: str                 # "optimal" | "infeasible" | "max-iterations"
    kkt_residual: float
    message: str = ""

    def check_feasible(self, inst: Stage2Instance, rel_tol: float = 1e-8) -> None:
        """Verify every constraint of the instance within rel_tol."""
        p, n, c = self.power_w, self.units, inst.qos_constants
        if np.any(p * n * n < c * (1.0 - rel_tol)):
            raise ValueError("rate constraint violated")
        if np.sum(p) > inst.cs_power_budget_w * (1.0 + rel_tol):
            raise ValueError("power budget violated")
        if np.sum(n) > inst.ris_unit_budget * (1.0 + rel_tol):
            raise ValueError("unit budget violated")
        if (np.any(p > inst.per_ue_power_cap_w * (1.0 + rel_tol))
                or np.any(p < inst.power_floor_w * (1.0 - rel_tol))):
            raise ValueError("per-UE power bounds violated")
        if (np.any(n > inst.per_ue_unit_cap * (1.0 + rel_tol))
                or np.any(n < inst.unit_floor * (1.0 - rel_tol))):
            raise ValueError("per-UE unit bounds violated")


def _infeasible(inst: Stage2Instance, message: str) -> Stage2Solution:
    k = inst.size
    return Stage2Solution(np.zeros(k), np.zeros(k), math.nan, "infeasible",
                          math.inf, message)


def _qos_unit_floor(inst: Stage2Instance) -> np.ndarray:
    """Fewest units per UE at which the power cap can still meet the QoS."""
    return np.maximum(inst.unit_floor,
                      np.sqrt(inst.qos_constants / inst.per_ue_power_cap_w))


def _precheck_certificate(inst: Stage2Instance) -> str | None:
    """Cheap infeasibility certificates (necessary conditions only)."""
    n_lo = _qos_unit_floor(inst)
    bad = n_lo > inst.per_ue_unit_cap * (1.0 + 1e-12)
    if np.any(bad):
        k = int(np.argmax(bad))
        return (f"UE {k} cannot meet its rate constraint within per-UE caps "
                f"(needs {n_lo[k]:.1f} units, cap {inst.per_ue_unit_cap[k]:.1f})")
    if n_lo.sum() > inst.ris_unit_budget * (1.0 + 1e-12):
        return (f"unit budget insufficient: minimum total {n_lo.sum():.1f} units "
                f"exceeds budget {inst.ris_unit_budget:.1f}")
    p_min = np.maximum(inst.qos_constants / inst.per_ue_unit_cap ** 2,
                       inst.power_floor_w).sum()
    if p_min > inst.cs_power_budget_w * (1.0 + 1e-12):
        return (f"power budget insufficient: minimum total {p_min:.3e} W "
                f"(at per-UE unit caps) exceeds budget "
                f"{inst.cs_power_budget_w:.3e} W")
    return None


# --------------------------------------------------------------------------
# Convex machinery: constraint set, objectives, Newton/barrier drivers
# --------------------------------------------------------------------------

def _lse(v: np.ndarray) -> tuple[float, np.ndarray]:
    """Stable log-sum-exp value and softmax weights."""
    m = float(np.max(v))
    e = np.exp(v - m)
    s = float(np.sum(e))
    return m + math.log(s), e / s


class _ConstraintSet:
    """Inequalities f_i(z) <= 0: dense linear rows plus log-sum-exp rows.

    Each LSE row is f(z) = lse(z[idx]) - rhs + tail . z (tail optional).
    """

    def __init__(self, a_lin, b_lin, lse_groups, dim):
        self.a = a_lin
        self.b = b_lin
        self.groups = lse_groups
        self.dim = dim
        self.m = len(b_lin) + len(lse_groups)

    def values(self, z: np.ndarray) -> np.ndarray:
        out = np.empty(self.m)
        out[:len(self.b)] = self.a @ z + self.b
        for i, (idx, rhs, tail) in enumerate(self.groups):
            v, _ = _lse(z[idx])
            if tail is not None:
                v += float(tail @ z)
            out[len(self.b) + i] = v - rhs
        return out

    def barrier_value(self, z: np.ndarray) -> float:
        s = -self.values(z)
        if np.any(s <= 0):
            return math.inf
        return -float(np.sum(np.log(s)))

    def _lse_gradients(self, z: np.ndarray):
        grads = []
        for idx, rhs, tail in self.groups:
            v, sigma = _lse(z[idx])
            if tail is not None:
                v += float(tail @ z)
            grad = np.zeros(self.dim)
            grad[idx] = sigma
            if tail is not None:
                grad = grad + tail
            grads.append((v - rhs, grad, idx, sigma))
        return grads

    def barrier_grad_hess(self, z: np.ndarray):
        """Gradient and Hessian of -sum_i ln(-f_i(z))."""
        f_lin = self.a @ z + self.b
        s_lin = -f_lin
        inv = 1.0 / s_lin
        g = self.a.T @ inv
        h = (self.a.T * inv ** 2) @ self.a
        for f, grad, idx, sigma in self._lse_gradients(z):
            s = -f
            g = g + grad / s
            h = h + np.outer(grad, grad) / (s * s)
            block = (np.diag(sigma) - np.outer(sigma, sigma)) / s
            h[np.ix_(idx, idx)] += block
        return g, h

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        j = np.zeros((self.m, self.dim))
        j[:len(self.b)] = self.a
        for i, (_, grad, _, _) in enumerate(self._lse_gradients(z)):
            j[len(self.b) + i] = grad
        return j

    def hess_weighted(self, z: np.ndarray, w: np.ndarray) -> np.ndarray:
        """sum_i w_i hess(f_i); only the LSE rows carry curvature."""
        h = np.zeros((self.dim, self.dim))
        for i, (_, _, idx, sigma) in enumerate(self._lse_gradients(z)):
            wi = w[len(self.b) + i]
            h[np.ix_(idx, idx)] += wi * (np.diag(sigma) - np.outer(sigma, sigma))
        return h


class _ExpObjective:
    """f0(z) = coeff . exp(z); zero coefficients are allowed (masked terms)."""

    def __init__(self, coeff: np.ndarray):
        self.coeff = coeff

    def value(self, z):
        return float(self.coeff @ np.exp(z))

    def grad(self, z):
        return self.coeff * np.exp(z)

    def hess(self, z):
        return np.diag(self.coeff * np.exp(z))


class _LinearObjective:
    """f0(z) = direction . z (used by the phase-1 feasibility program)."""

    def __init__(self, direction: np.ndarray):
        self.direction = direction
        self._hess = np.zeros((direction.size, direction.size))

    def value(self, z):
        return float(self.direction @ z)

    def grad(self, z):
        return self.direction

    def hess(self, z):
        return self._hess


def _solve_spd(h: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve h x = rhs with escalating ridge regularisation on failure."""
    ridge = 0.0
    eye = np.eye(h.shape[0])
    for _ in range(8):
        try:
            return np.linalg.solve(h + ridge * eye, rhs)
        except np.linalg.LinAlgError:
            ridge = 1e-12 * float(np.trace(h)) / h.shape[0] if ridge == 0 else ridge * 100.0
            ridge = max(ridge, 1e-300)
    raise np.linalg.LinAlgError("Newton system unsolvable even with ridge")


def _newton_minimize(obj, cons, t: float, z0: np.ndarray) -> np.ndarray:
    """Damped Newton on psi(z) = t f0(z) - sum ln(-f_i(z))."""

    def psi(z):
        bv = cons.barrier_value(z)
        if not np.isfinite(bv):
            return math.inf
        return t * obj.value(z) + bv

    z = z0
    value = psi(z)
    stalls = 0
    for _ in range(NEWTON_MAX_INNER):
        gb, hb = cons.barrier_grad_hess(z)
        g = t * obj.grad(z) + gb
        h = t * obj.hess(z) + hb
        step = _solve_spd(h, -g)
        decrement_sq = float(-g @ step)
        if decrement_sq <= 2.0 * NEWTON_DECREMENT_TOL:
            break
        # Trial steps: full Newton, then the self-concordant damped step
        # 1/(1+lambda) (almost always accepted far from centre), then halvings.
        decrement = math.sqrt(max(decrement_sq, 0.0))
        trials = [1.0]
        if decrement > 0.25:
            trials.append(1.0 / (1.0 + decrement))
        slope = float(g @ step)
        accepted = False
        alpha = trials[-1]
        improvement = 0.0
        for attempt in range(60):
            alpha = trials[attempt] if attempt < len(trials) else alpha * 0.5
            candidate = z + alpha * step
            cand_value = psi(candidate)
            if np.isfinite(cand_value) and cand_value <= value + 0.25 * alpha * slope:
                improvement = value - cand_value
                z, value = candidate, cand_value
                accepted = True
                break
        if not accepted:
            break
        # Large t exhausts double precision before the decrement target;
        # stop once accepted steps no longer move the value.
        if improvement <= 1e-12 * (1.0 + abs(value)):
            stalls += 1
            if stalls >= 2:
                break
        else:
            stalls = 0
    return z


def _barrier_path(obj, cons, z0, stop_when=None, trace=None):
    """Outer barrier continuation.  Returns (z, t, converged)."""
    t = BARRIER_T0
    z = z0
    for _ in range(BARRIER_MAX_OUTER):
        z = _newton_minimize(obj, cons, t, z)
        objective = obj.value(z)
        measure = cons.m / t
        if trace is not None:
            trace.append(f"barrier t={t:.3e} objective={objective:.12e} "
                         f"measure={measure:.3e}")
        if stop_when is not None and stop_when(z):
            return z, t, True
        if measure <= BARRIER_EPS_REL * (1.0 + abs(objective)):
            return z, t, True
        t *= BARRIER_GROWTH
    return z, t / BARRIER_GROWTH, False


def _pd_refine(obj, cons, z, lam, trace=None, max_iter=40):
    """Primal-dual Newton on the KKT system, warm-started from the barrier.

    Drives complementarity and the dual residual toward machine zero; the
    rate constraints come out numerically active.  Keeps the best iterate.
    """
    best = None

    def residual(z, lam):
        s = -cons.values(z)
        g0 = obj.grad(z)
        r_d = g0 + cons.jacobian(z).T @ lam
        scale_d = 1.0 + float(np.max(np.abs(g0)))
        scale_c = 1.0 + abs(obj.value(z))
        return max(float(np.max(np.abs(r_d))) / scale_d,
                   float(np.max(lam * s)) / scale_c)

    for it in range(max_iter):
        s = -cons.values(z)
        if np.any(s <= 0) or np.any(lam <= 0):
            break
        res = residual(z, lam)
        if best is None or res < best[0]:
            best = (res, z.copy(), lam.copy())
        if trace is not None:
            trace.append(f"refine iter={it} residual={res:.3e}")
        if res < 1e-13:
            break

        g0 = obj.grad(z)
        j = cons.jacobian(z)
        r_d = g0 + j.T @ lam
        mu = float(lam @ s) / cons.m
        sigma = 0.1 if it < 2 else 0.0
        r_c = lam * s - sigma * mu
        h = (obj.hess(z) + cons.hess_weighted(z, lam)
             + j.T @ ((lam / s)[:, None] * j))
        try:
            dz = _solve_spd(h, -r_d + j.T @ (r_c / s))
        except np.linalg.LinAlgError:
            break
        jdz = j @ dz
        dlam = (lam * jdz - r_c) / s
        ds = -jdz

        alpha = 1.0
        neg = ds < 0
        if np.any(neg):
            alpha = min(alpha, 0.995 * float(np.min(s[neg] / -ds[neg])))
        neg = dlam < 0
        if np.any(neg):
            alpha = min(alpha, 0.995 * float(np.min(lam[neg] / -dlam[neg])))
        if alpha <= 0:
            break
        z = z + alpha * dz
        lam = lam + alpha * dlam

    if best is None:
        return z, lam
    res_final = residual(z, lam) if np.all(-cons.values(z) > 0) else math.inf
    if res_final <= best[0]:
        return z, lam
    return best[1], best[2]


# --------------------------------------------------------------------------
# Problem assembly
# --------------------------------------------------------------------------

def _phase2_constraints(inst: Stage2Instance) -> _ConstraintSet:
    k = inst.size
    dim = 2 * k
    eye = np.eye(k)
    a = np.zeros((5 * k, dim))
    b = np.zeros(5 * k)

    a[0:k, 0:k] = -eye                      # rate: ln c - x - 2y <= 0
    a[0:k, k:dim] = -2.0 * eye
    b[0:k] = np.log(inst.qos_constants)
    a[k:2 * k, 0:k] = eye                   # x <= ln p_cap
    b[k:2 * k] = -np.log(inst.per_ue_power_cap_w)
    a[2 * k:3 * k, 0:k] = -eye              # x >= ln p_floor
    b[2 * k:3 * k] = math.log(inst.power_floor_w)
    a[3 * k:4 * k, k:dim] = eye             # y <= ln n_cap
    b[3 * k:4 * k] = -np.log(inst.per_ue_unit_cap)
    a[4 * k:5 * k, k:dim] = -eye            # y >= ln n_floor
    b[4 * k:5 * k] = math.log(inst.unit_floor)

    groups = [
        (np.arange(k), math.log(inst.cs_power_budget_w), None),
        (np.arange(k, dim), math.log(inst.ris_unit_budget), None),
    ]
    return _ConstraintSet(a, b, groups, dim)


def _phase2_objective(inst: Stage2Instance) -> _ExpObjective:
    k = inst.size
    coeff = np.concatenate([
        np.full(k, inst.power_weight),
        np.full(k, inst.unit_weight * inst.ris_unit_power_w),
    ])
    return _ExpObjective(coeff)


def _interior_guess(inst: Stage2Instance) -> np.ndarray | None:
    """Direct construction of a strictly interior point, if one is easy."""
    n_lo = _qos_unit_floor(inst)
    n_hi = inst.per_ue_unit_cap.astype(float)
    if np.any(n_hi / n_lo < 1.0 + 1e-9):
        return None
    if inst.power_floor_w * 2.0 >= np.min(inst.per_ue_power_cap_w):
        return None

    y_lo, y_hi = np.log(n_lo), np.log(n_hi)
    w = 0.5
    cons = _phase2_constraints(inst)
    for _ in range(80):
        y = y_lo + w * (y_hi - y_lo)
        n = np.exp(y)
        p_qos = inst.qos_constants / (n * n)
        # Generous rate-constraint slack keeps the start well centred;
        # fall back to thinner margins when the power budget is tight.
        for margin in (8.0, 3.0, 1.2, 1.02):
            p = np.minimum(np.maximum(p_qos * margin, inst.power_floor_w * 2.0),
                           np.sqrt(p_qos * inst.per_ue_power_cap_w))
            ok_power = p.sum() < 0.98 * inst.cs_power_budget_w
            ok_caps = np.all(p < inst.per_ue_power_cap_w * 0.999)
            ok_qos = np.all(p > p_qos * 1.01)
            if ok_power and ok_caps and ok_qos:
                break
        ok_units = n.sum() < 0.98 * inst.ris_unit_budget
        if ok_units and ok_power and ok_caps and ok_qos:
            z = np.concatenate([np.log(p), y])
            if np.all(cons.values(z) < -1e-9):
                return z
            return None
        if not ok_units:
            w *= 0.5
        else:
            w += (1.0 - w) * 0.5
    return None


def _phase1(inst: Stage2Instance, trace=None):
    """Minimise the worst log-domain violation s over (z, s); boxes stay hard.

    Returns (interior z, True) as soon as s is safely negative, or
    (None, False) when the minimised violation stays nonnegative.
    """
    k = inst.size
    dim = 2 * k
    base = _phase2_constraints(inst)

    a1 = np.zeros((5 * k, dim + 1))
    a1[:, :dim] = base.a
    a1[0:k, dim] = -1.0                      # only rate rows are relaxed by s
    tail = np.zeros(dim + 1)
    tail[dim] = -1.0
    groups = [(idx, rhs, tail) for idx, rhs, _ in base.groups]
    cons1 = _ConstraintSet(a1, base.b, groups, dim + 1)

    direction = np.zeros(dim + 1)
    direction[dim] = 1.0
    obj1 = _LinearObjective(direction)

    x_mid = 0.5 * (math.log(inst.power_floor_w) + np.log(inst.per_ue_power_cap_w))
    y_mid = 0.5 * (math.log(inst.unit_floor) + np.log(inst.per_ue_unit_cap))
    z_mid = np.concatenate([x_mid, y_mid, [0.0]])
    worst = float(np.max(base.values(z_mid[:dim])))
    z_mid[dim] = worst + 1.0

    z, _, _ = _barrier_path(obj1, cons1, z_mid,
                            stop_when=lambda zz: zz[dim] <= -1e-4,
                            trace=trace)
    if z[dim] <= -1e-9:
        return z[:dim], True
    return None, False


def _kkt_residual(obj, cons, z, lam) -> float:
    s = -cons.values(z)
    if np.any(s < 0):
        return math.inf
    g0 = obj.grad(z)
    r_d = g0 + cons.jacobian(z).T @ lam
    scale_d = 1.0 + float(np.max(np.abs(g0)))
    scale_c = 1.0 + abs(obj.value(z))
    comp = float(np.max(lam * np.maximum(s, 0.0))) / scale_c
    return max(float(np.max(np.abs(r_d))) / scale_d, comp)


# --------------------------------------------------------------------------
# Public entry points
# --------------------------------------------------------------------------

def solve(inst: Stage2Instance, trace_path=None) -> Stage2Solution:
    """Solve the continuous allocation problem to optimality.

    Returns status "optimal" with a KKT residual certificate, "infeasible"
    with a human-readable certificate message, or "max-iterations" with the
    best iterate found.
    """
    trace: list[str] | None = [] if trace_path is not None else None

    certificate = _precheck_certificate(inst)
    if certificate is not None:
        _write_trace(trace_path, trace, f"infeasible: {certificate}")
        return _infeasible(inst, certificate)

    cons = _phase2_constraints(inst)
    obj = _phase2_objective(inst)

    z0 = _interior_guess(inst)
    if z0 is None:
        z0, feasible = _phase1(inst, trace=trace)
        if not feasible:
            message = ("budgets jointly insufficient: no power/unit split "
                       "meets every rate constraint (phase-1 violation >= 0)")
            _write_trace(trace_path, trace, f"infeasible: {message}")
            return _infeasible(inst, message)

    z, t, converged = _barrier_path(obj, cons, z0, trace=trace)
    slack = -cons.values(z)
    lam = 1.0 / (t * slack)
    z, lam = _pd_refine(obj, cons, z, lam, trace=trace)

    k = inst.size
    x, y = z[:k], z[k:]
    # Rate constraints are active at any optimum (the objective increases in
    # both variables), so pin them exactly; clip keeps box bounds intact.
    x = np.maximum(np.log(inst.qos_constants) - 2.0 * y,
                   math.log(inst.power_floor_w))
    x = np.minimum(x, np.log(inst.per_ue_power_cap_w))
    z = np.concatenate([x, y])

    power = np.exp(x)
    units = np.exp(y)
    objective = inst.objective(power, units)
    residual = _kkt_residual(obj, cons, z, lam)
    status = "optimal" if (converged and residual <= OPTIMAL_KKT_TOL) else "max-iterations"
    solution = Stage2Solution(power, units, objective, status, residual)
    _write_trace(trace_path, trace,
                 f"final status={status} objective={objective:.12e} "
                 f"kkt={residual:.3e}")
    return solution


def _write_trace(trace_path, trace, final_line):
    if trace_path is None or trace is None:
        return
    from pathlib import Path
    Path(trace_path).write_text("\n".join(trace + [final_line]) + "\n")


def oracle_kkt(inst: Stage2Instance) -> Stage2Solution:
    """Independent optimum via KKT reduction and nested dual bisection.

    With the rate constraint active, p_k = c_k / n_k^2, and for budget
    multipliers (lam for power, mu for units) each UE responds in closed
    form:

        n_k(lam, mu) = clip( cbrt(2 c_k (w_p + lam) / (w_n P_ris + mu)),
                             n_lo_k, n_hi_k )

    where n_lo_k enforces the per-UE power cap and n_hi_k the unit cap
    (tightened where the power floor makes further units useless).  The
    inner bisection finds mu(lam) restoring the unit budget; the outer
    bisection finds lam restoring the power budget.  Complementary
    slackness holds by construction: multipliers stay zero while their
    budgets are slack.
    """
    c = inst.qos_constants
    wp, wn = inst.power_weight, inst.unit_weight
    pr = inst.ris_unit_power_w
    n_budget = inst.ris_unit_budget
    p_budget = inst.cs_power_budget_w

    n_lo = _qos_unit_floor(inst)
    # Beyond sqrt(c / p_floor), power is pinned at its floor and extra units
    # only cost; never optimal to exceed it.
    n_hi = np.minimum(inst.per_ue_unit_cap,
                      np.maximum(n_lo, np.sqrt(c / inst.power_floor_w)))

    bad = n_lo > inst.per_ue_unit_cap * (1.0 + 1e-12)
    if np.any(bad):
        k = int(np.argmax(bad))
        return _infeasible(inst, f"UE {k} cannot meet its rate constraint "
                                 f"within per-UE caps")
    if n_lo.sum() > n_budget * (1.0 + 1e-12):
        return _infeasible(inst, "unit budget insufficient at the per-UE minima")

    def units_for(lam: float, mu: float) -> np.ndarray:
        denom = wn * pr + mu
        if denom <= 0.0:
            return n_hi.copy()
        return np.clip(np.cbrt(2.0 * c * (wp + lam) / denom), n_lo, n_hi)

    def inner(lam: float) -> tuple[float, np.ndarray]:
        n0 = units_for(lam, 0.0)
        if n0.sum() <= n_budget:
            return 0.0, n0
        hi = max(1.0, wn * pr)
        for _ in range(400):
            if units_for(lam, hi).sum() <= n_budget:
                break
            hi *= 4.0
        lo = 0.0
        for _ in range(ORACLE_INNER_ITERS):
            mid = 0.5 * (lo + hi)
            if units_for(lam, mid).sum() > n_budget:
                lo = mid
            else:
                hi = mid
        return hi, units_for(lam, hi)

    def total_power(n: np.ndarray) -> float:
        return float(np.maximum(c / (n * n), inst.power_floor_w).sum())

    mu, n = inner(0.0)
    lam = 0.0
    if total_power(n) > p_budget:
        _, n_extreme = inner(1e18)
        if total_power(n_extreme) > p_budget * (1.0 + 1e-9):
            return _infeasible(inst, "power budget unattainable even at "
                                     "maximum admissible units")
        hi = 1.0
        for _ in range(400):
            if total_power(inner(hi)[1]) <= p_budget:
                break
            hi *= 4.0
        lo = 0.0
        for _ in range(ORACLE_OUTER_ITERS):
            mid = 0.5 * (lo + hi)
            if total_power(inner(mid)[1]) > p_budget:
                lo = mid
            else:
                hi = mid
        lam = hi
        mu, n = inner(lam)

    p = np.maximum(c / (n * n), inst.power_floor_w)
    residual = max(
        lam * abs(p_budget - p.sum()) / (1.0 + p_budget),
        mu * abs(n_budget - n.sum()) / (1.0 + n_budget),
    )
    return Stage2Solution(p, n, inst.objective(p, n), "optimal", residual,
                          "kkt dual bisection")


def round_and_repair(sol: Stage2Solution, inst: Stage2Instance) -> Stage2Solution:
    """Ceil the continuous units and repair any budget overshoot.

    Decrements, one unit at a time, the UE whose decrement costs the least
    extra power while its rate constraint stays satisfiable under the
    per-UE power cap.  Raises RoundingInfeasibleError when the power budget
    cannot be restored; the caller then shrinks the served set.
    """
    if sol.status != "optimal":
        raise ValueError(f"cannot round a solution with status {sol.status!r}")
    c = inst.qos_constants
    p_cap = inst.per_ue_power_cap_w

    n = np.ceil(sol.units - 1e-6)
    n = np.maximum(n, inst.unit_floor)
    n = np.minimum(n, np.floor(inst.per_ue_unit_cap + 1e-9))
    if np.any(c / (n * n) > p_cap * (1.0 + 1e-9)):
        raise RoundingInfeasibleError(
            "per-UE power cap violated once units are integral")

    guard = int(np.sum(n))
    while n.sum() > inst.ris_unit_budget:
        feasible = (n - 1.0 >= inst.unit_floor - 1e-9)
        with np.errstate(divide="ignore"):
            p_after = np.where(n > 1.0, c / (n - 1.0) ** 2, np.inf)
        feasible &= p_after <= p_cap * (1.0 + 1e-12)
        if not np.any(feasible):
            raise RoundingInfeasibleError(
                "cannot shed RIS units without breaking a rate constraint")
        extra = np.where(feasible, p_after - c / (n * n), np.inf)
        n[int(np.argmin(extra))] -= 1.0
        guard -= 1
        if guard < 0:
            raise RoundingInfeasibleError("unit-shedding loop failed to converge")

    p = np.maximum(c / (n * n), inst.power_floor_w)
    if p.sum() > inst.cs_power_budget_w * (1.0 + 1e-9):
        raise RoundingInfeasibleError(
            f"power budget violated after integral rounding "
            f"({p.sum():.6e} W > {inst.cs_power_budget_w:.6e} W)")
    return Stage2Solution(p, n, inst.objective(p, n), "optimal",
                          sol.kkt_residual, "integral units")
