"""Full-sweep iteration schemes and the outer run loop.

Covers classical SOR/Gauss-Seidel, the Itoh-Abe discrete gradient sweep,
the generic Bregman coordinate sweep (with and without box-subgradient
forgetting), the closed-form shrinkage-SOR variants for elastic-net
Bregman functions, and Bregman linearised coordinate descent, all sharing
one dissipative structure: every sweep decreases the objective by at least
``mu / tau_max`` times the squared step length.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .bregman import (BregmanSpec, PrimalDualState, interval_project, shrink)
from .inclusion import InclusionProblem, solve_inclusion
from .metrics import (RunReference, TraceRecord, clarke_dist,
                      dissipation_slack, relative_objective, support_stats)
from .objectives import (CoordinateObjective, L1QuadraticObjective,
                         QuadraticObjective)

VARIANTS = ("sor", "gauss_seidel", "ia", "bia", "bia_modified", "bsor",
            "l1_bsor", "blcd")

#: Relative slack allowed in the monotonicity / dissipation checks.
DISSIPATION_TOL = 1e-9

#: Consecutive small-step sweeps required before declaring convergence.
_STOP_STREAK = 3


class SolverError(RuntimeError):
    pass


class InvariantViolation(SolverError):
    """A structural guarantee (monotone decrease, case analysis) failed."""


@dataclass(frozen=True)
class SolverConfig:
    variant: str
    tau: float = 1.0
    omega: float = 1.0
    alpha: float = 1.0
    tau_schedule: str = "constant"  # constant | diag_scaled
    max_iters: int = 200
    stop_tol: float = 1e-8

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise SolverError(f"unknown variant {self.variant!r}")
        if self.tau_schedule not in ("constant", "diag_scaled"):
            raise SolverError(f"unknown schedule {self.tau_schedule!r}")
        if self.variant in ("sor", "gauss_seidel") and not 0 < self.omega < 2:
            raise SolverError("omega must lie in (0, 2)")
        if self.variant == "blcd" and not 0 < self.alpha < 2:
            raise SolverError("alpha must lie in (0, 2)")
        if self.tau <= 0:
            raise SolverError("tau must be > 0")


@dataclass
class SweepResult:
    state: PrimalDualState
    decrease: float
    step_sq: float
    dual_step_sq: float


def _result(V, state, x_new, p_new, v_before=None):
    v_after = V.value(x_new)
    if v_before is None:
        v_before = V.value(state.x)
    step = x_new - state.x
    dstep = p_new - state.p
    return SweepResult(
        PrimalDualState(x_new, p_new, state.k + 1),
        float(v_before - v_after),
        float(step @ step),
        float(dstep @ dstep),
    )


# ---------------------------------------------------------------------------
# Classical SOR / Gauss-Seidel
# ---------------------------------------------------------------------------

def sor_sweep(q: QuadraticObjective, x: np.ndarray,
              omega: float) -> np.ndarray:
    """One sequential relaxation sweep for the linear system ``A x = b``."""
    if not 0 < omega < 2:
        raise SolverError(f"omega must lie in (0, 2), got {omega}")
    y = np.asarray(x, dtype=float).copy()
    r = q.A @ y - q.b
    diag = q.diag
    for i in range(q.n):
        delta = -(omega / diag[i]) * r[i]
        if delta != 0.0:
            y[i] += delta
            r += q.A[:, i] * delta
    return y


def gauss_seidel_sweep(q: QuadraticObjective, x: np.ndarray) -> np.ndarray:
    return sor_sweep(q, x, 1.0)


# ---------------------------------------------------------------------------
# Generic Bregman coordinate sweeps (scalar-inclusion based)
# ---------------------------------------------------------------------------

def bia_sweep(V: CoordinateObjective, spec: BregmanSpec,
              state: PrimalDualState, taus: np.ndarray,
              mode: str = "keep_box") -> SweepResult:
    """One Bregman coordinate sweep solving n scalar inclusions in order."""
    taus = np.asarray(taus, dtype=float)
    ctx = V.sweep_context(state.x)
    v_before = V.value(state.x)
    p_new = state.p.copy()
    for i in range(spec.n):
        prob = InclusionProblem(
            sb=spec.per_coordinate[i],
            x=float(ctx.y[i]),
            p=float(p_new[i]),
            tau=float(taus[i]),
            dq=ctx.dq(i),
            clarke=ctx.clarke(i),
        )
        sol = solve_inclusion(prob, mode)
        p_new[i] = sol.p_new
        if not sol.stationary:
            ctx.commit(i, sol.y)
    return _result(V, state, ctx.y.copy(), p_new, v_before)


def ia_sweep(V: CoordinateObjective, state: PrimalDualState,
             taus: np.ndarray) -> SweepResult:
    """Itoh-Abe discrete gradient sweep (euclidean Bregman function)."""
    spec = BregmanSpec.euclidean(len(state.x))
    return bia_sweep(V, spec, state, taus)


# ---------------------------------------------------------------------------
# Closed-form elastic-net sweeps for quadratic objectives
# ---------------------------------------------------------------------------

def bsor_sweep(q: QuadraticObjective, state: PrimalDualState, gamma: float,
               tau: float) -> SweepResult:
    """Shrinkage-modified SOR sweep for ``J = ||.||^2/2 + gamma*||.||_1``.

    Equivalent to the scalar-inclusion sweep with elastic-net pieces, in
    closed form; the subgradient decomposes as ``p = x + gamma * r`` with
    ``r`` an l1 subgradient.
    """
    if gamma <= 0:
        raise SolverError("bsor requires gamma > 0")
    v_before = q.value(state.x)
    y = state.x.copy()
    rsub = (state.p - state.x) / gamma
    resid = q.A @ y - q.b
    diag = q.diag
    omega = 2.0 * tau / (2.0 + tau)
    thr = 2.0 * gamma / (2.0 + tau)
    for i in range(q.n):
        aii = diag[i]
        g = resid[i]
        xi = y[i]
        xt = xi - (omega / aii) * g
        x_new = shrink(xt + thr * rsub[i], thr)
        rsub[i] += (tau / (gamma * aii)) * (
            -g - (aii * (2.0 + tau) / (2.0 * tau)) * (x_new - xi))
        delta = x_new - xi
        if delta != 0.0:
            y[i] = x_new
            resid += q.A[:, i] * delta
    return _result(q, state, y, y + gamma * rsub, v_before)


def _l1_case1_subgradient(p, g, t, gamma, lam):
    """Stationary-at-zero subgradient, matching the scalar-inclusion rule:
    the admissible Clarke element of smallest magnitude."""
    alo = max(g - lam, (p - gamma) / t)
    ahi = min(g + lam, (p + gamma) / t)
    v = interval_project(0.0, alo, ahi)
    return p - t * v


def l1_bsor_sweep(q: QuadraticObjective, state: PrimalDualState,
                  gamma: float, lam: float, tau: float) -> SweepResult:
    """Closed-form sweep for the l1-regularised quadratic objective with an
    elastic-net Bregman function: four coordinate cases (stay at zero,
    same-side shrinkage move, cross to zero, sign-crossing quadratic root),
    tried in order; exactly one applies away from predicate boundaries.
    """
    if gamma <= 0 or lam < 0:
        raise SolverError("l1_bsor requires gamma > 0 and lam >= 0")
    V = L1QuadraticObjective(q, lam)
    v_before = V.value(state.x)
    y = state.x.copy()
    rsub = (state.p - state.x) / gamma
    resid = q.A @ y - q.b
    diag = q.diag
    kappa = 1.0 + tau / 2.0
    for i in range(q.n):
        aii = diag[i]
        t = tau / aii
        g = resid[i]
        xi = y[i]
        ri = rsub[i]
        c = kappa * xi + gamma * ri - t * g
        tl = t * lam
        x_new, r_new = _l1_coordinate_update(xi, ri, g, c, t, tl, gamma,
                                             lam, kappa, aii, tau)
        rsub[i] = r_new
        delta = x_new - xi
        if delta != 0.0:
            y[i] = x_new
            resid += q.A[:, i] * delta
    return _result(V, state, y, y + gamma * rsub, v_before)


def _l1_coordinate_update(xi, ri, g, c, t, tl, gamma, lam, kappa, aii, tau):
    sgn_c = math.copysign(1.0, c) if c != 0 else 0.0
    sgn_x = math.copysign(1.0, xi) if xi != 0 else 0.0

    # Case 1: already at zero and zero remains admissible.
    if xi == 0.0 and abs(c) <= gamma + tl:
        p_new = _l1_case1_subgradient(gamma * ri, g, t, gamma, lam)
        return 0.0, p_new / gamma

    # Case 2: shrinkage-type move staying on (or entering) the side of c.
    if abs(c) > gamma + tl and (xi == 0.0 or sgn_x == sgn_c):
        x_new = (c - (gamma + tl) * sgn_c) / kappa
        return x_new, sgn_c

    # Case 3: move from a nonzero value to exactly zero.
    if xi != 0.0 and abs(c - tl * sgn_x) <= gamma:
        return 0.0, (c - tl * sgn_x) / gamma

    # Case 4: cross zero to the opposite side; quadratic in the new value
    # because the l1 difference quotient depends on it.
    if xi != 0.0:
        s = -sgn_x
        B = gamma * s + tl * s - c - kappa * xi
        C = xi * (c - gamma * s + tl * s)
        disc = B * B - 4.0 * kappa * C
        if disc >= 0.0:
            sq = math.sqrt(disc)
            # Stable pairing: the root nearest zero comes from the
            # product relation, not from cancelling -B against sq.
            if B >= 0.0:
                qq = -0.5 * (B + sq)
            else:
                qq = -0.5 * (B - sq)
            roots = [qq / kappa]
            if qq != 0.0:
                roots.append(C / qq)
            if 0.0 in roots:
                # Crossing collapses exactly onto the kink; the dual
                # value is the case-3 boundary subgradient.
                r0 = min(1.0, max(-1.0, (c - tl * sgn_x) / gamma))
                return 0.0, r0
            best = None
            best_res = math.inf
            for root in roots:
                if root * s <= 0:
                    continue
                res = _l1_scalar_residual(root, xi, ri, g, t, gamma, lam,
                                          aii, tau)
                if res < best_res:
                    best, best_res = root, res
            if best is not None:
                # The residual check guards against picking a spurious
                # branch, but its own rounding error grows like the
                # derivative of the difference quotient when the root
                # sits very close to the old value; scale the tolerance
                # by that sensitivity so ill-conditioned (yet exact)
                # roots are not rejected.
                den = best - xi
                sens = (1.0 + 0.5 * t * aii
                        + 2.0 * t * lam * max(abs(best), abs(xi))
                        / (den * den))
                scale = max(abs(best), abs(xi), abs(B) / (2.0 * kappa))
                tol = max(1e-8, 32.0 * sens * math.ulp(scale))
                if best_res <= tol:
                    return best, s

    raise InvariantViolation(
        "no closed-form case applies: "
        f"x={xi}, r={ri}, g={g}, c={c}, t={t}, gamma={gamma}, lam={lam}, "
        f"predicates: case1={xi == 0.0 and abs(c) <= gamma + tl}, "
        f"case2={abs(c) > gamma + tl}, "
        f"case3={xi != 0.0 and abs(c - tl * sgn_x) <= gamma}")


def _l1_scalar_residual(y_new, xi, ri, g, t, gamma, lam, aii, tau):
    """|p_new - (p - t * DQ(y_new))| for the candidate crossing root."""
    dq = g + 0.5 * aii * (y_new - xi) \
        + lam * (abs(y_new) - abs(xi)) / (y_new - xi)
    target = xi + gamma * ri - t * dq
    s = math.copysign(1.0, y_new)
    p_new = y_new + gamma * s
    return abs(p_new - target)


# ---------------------------------------------------------------------------
# Bregman linearised coordinate descent
# ---------------------------------------------------------------------------

def blcd_sweep(q: QuadraticObjective, state: PrimalDualState, gamma: float,
               alpha: float) -> SweepResult:
    """Linearised coordinate step through the elastic-net Bregman geometry.

    Each coordinate minimises the local linearisation plus a diagonal-scaled
    Bregman distance; the update is a plain shrinkage of the shifted
    subgradient.  With ``gamma = 0`` this is explicit coordinate descent
    with steps ``alpha / a_ii``.
    """
    if not 0 < alpha < 2:
        raise SolverError(f"alpha must lie in (0, 2), got {alpha}")
    v_before = q.value(state.x)
    y = state.x.copy()
    p = state.p.copy()
    resid = q.A @ y - q.b
    diag = q.diag
    for i in range(q.n):
        p[i] -= (alpha / diag[i]) * resid[i]
        x_new = shrink(p[i], gamma)
        delta = x_new - y[i]
        if delta != 0.0:
            y[i] = x_new
            resid += q.A[:, i] * delta
    return _result(q, state, y, p, v_before)


# ---------------------------------------------------------------------------
# Stationarity diagnostics
# ---------------------------------------------------------------------------

def stationarity_residual(V: CoordinateObjective, x: np.ndarray,
                          spec: BregmanSpec | None = None) -> np.ndarray:
    """Coordinate-wise first-order deficit at ``x``.

    Zero where every coordinate direction is non-descending (or blocked by
    an active box constraint); reduces to ``|grad V|`` at smooth interior
    points.
    """
    from .metrics import clarke_intervals
    x = np.asarray(x, dtype=float)
    lo, hi = clarke_intervals(V, x)
    out = np.zeros_like(x)
    for i in range(len(x)):
        at_upper = at_lower = False
        if spec is not None:
            sb = spec.per_coordinate[i]
            at_upper = x[i] >= sb.upper
            at_lower = x[i] <= sb.lower
        deficit_up = 0.0 if at_upper else max(0.0, -hi[i])
        deficit_down = 0.0 if at_lower else max(0.0, lo[i])
        out[i] = max(deficit_up, deficit_down)
    return out


# ---------------------------------------------------------------------------
# Outer run loop
# ---------------------------------------------------------------------------

def coordinate_time_steps(cfg: SolverConfig, V: CoordinateObjective,
                          n: int) -> np.ndarray:
    if cfg.tau_schedule == "constant":
        return np.full(n, cfg.tau)
    diag = _quadratic_part(V, required=True).diag
    return cfg.tau / diag


def _quadratic_part(V, required=False):
    if isinstance(V, QuadraticObjective):
        return V
    if isinstance(V, L1QuadraticObjective):
        return V.quad
    if required:
        raise SolverError(
            "diag-scaled time steps require a quadratic objective part")
    return None


def effective_tau_max(cfg: SolverConfig, V: CoordinateObjective,
                      n: int) -> float:
    """Largest coordinate time step of the equivalent Bregman sweep, used
    in the dissipation bound."""
    q = _quadratic_part(V)
    if cfg.variant in ("sor", "gauss_seidel"):
        omega = 1.0 if cfg.variant == "gauss_seidel" else cfg.omega
        return float(np.max(2.0 * omega / ((2.0 - omega) * q.diag)))
    if cfg.variant == "blcd":
        return float(np.max(
            2.0 * cfg.alpha / ((2.0 - cfg.alpha) * q.diag)))
    if cfg.variant in ("bsor", "l1_bsor"):
        return float(np.max(cfg.tau / q.diag))
    return float(np.max(coordinate_time_steps(cfg, V, n)))


def make_sweeper(V: CoordinateObjective, spec: BregmanSpec,
                 cfg: SolverConfig):
    """Bind a config to a single-sweep callable ``state -> SweepResult``."""
    variant = cfg.variant
    if variant in ("sor", "gauss_seidel", "bsor", "l1_bsor", "blcd"):
        q = _quadratic_part(V)
        if q is None:
            raise SolverError(f"{variant} requires a quadratic objective")

    if variant in ("sor", "gauss_seidel"):
        omega = 1.0 if variant == "gauss_seidel" else cfg.omega

        def sweep(state):
            y = sor_sweep(q, state.x, omega)
            return _result(q, state, y, y.copy())
        return sweep

    if variant == "ia":
        if any(sb.gamma != 0 for sb in spec.per_coordinate):
            raise SolverError("ia requires a euclidean Bregman function")
        taus = coordinate_time_steps(cfg, V, spec.n)
        return lambda state: bia_sweep(V, spec, state, taus)

    if variant in ("bia", "bia_modified"):
        mode = "forget_box" if variant == "bia_modified" else "keep_box"
        taus = coordinate_time_steps(cfg, V, spec.n)
        return lambda state: bia_sweep(V, spec, state, taus, mode)

    if variant == "bsor":
        gamma = spec.gamma
        if isinstance(V, L1QuadraticObjective) and V.lam != 0:
            raise SolverError("use l1_bsor for l1-regularised objectives")
        return lambda state: bsor_sweep(q, state, gamma, cfg.tau)

    if variant == "l1_bsor":
        if not isinstance(V, L1QuadraticObjective):
            raise SolverError("l1_bsor requires an l1-regularised objective")
        gamma = spec.gamma
        return lambda state: l1_bsor_sweep(q, state, gamma, V.lam, cfg.tau)

    if variant == "blcd":
        gamma = spec.gamma
        return lambda state: blcd_sweep(q, state, gamma, cfg.alpha)

    raise SolverError(f"unknown variant {variant!r}")


def run(V: CoordinateObjective, spec: BregmanSpec, x0: np.ndarray,
        cfg: SolverConfig, ref: RunReference | None = None,
        check_membership: bool = False):
    """Iterate sweeps until convergence or the iteration budget.

    Returns ``(final_state, [TraceRecord])``.  Stops when the squared step
    stays below ``stop_tol**2`` for three consecutive sweeps.  Raises
    :class:`InvariantViolation` if the objective trace increases beyond
    rounding slack.
    """
    x0 = np.asarray(x0, dtype=float)
    state = PrimalDualState.initial(spec, x0)
    sweep = make_sweeper(V, spec, cfg)
    tau_max = effective_tau_max(cfg, V, spec.n)
    v_current = V.value(state.x)
    v0 = v_current
    records: list[TraceRecord] = []
    streak = 0
    for _ in range(cfg.max_iters):
        t_start = time.perf_counter()
        result = sweep(state)
        wall_ms = (time.perf_counter() - t_start) * 1e3
        v_next = v_current - result.decrease
        if result.decrease < -DISSIPATION_TOL * max(1.0, abs(v_current)):
            raise InvariantViolation(
                f"objective increased by {-result.decrease:.3e} at sweep "
                f"{result.state.k}")
        state = result.state
        if check_membership:
            state.validate(spec)
        records.append(_trace_record(V, spec, state, result, v_next, v0,
                                     ref, tau_max, wall_ms))
        v_current = v_next
        # A frozen primal iterate is not enough: the subgradient can still
        # be drifting across a kink, after which the primal moves again.
        small = max(result.step_sq, result.dual_step_sq) <= cfg.stop_tol ** 2
        streak = streak + 1 if small else 0
        if streak >= _STOP_STREAK:
            break
    return state, records


def _trace_record(V, spec, state, result, v_next, v0, ref, tau_max,
                  wall_ms):
    rel = math.nan
    match = err = math.nan
    if ref is not None:
        if ref.vstar is not None and v0 > ref.vstar:
            rel = relative_objective(v_next, v0, ref.vstar)
        if ref.xstar is not None:
            match, err = support_stats(state.x, ref.xstar)
    return TraceRecord(
        iter=state.k,
        objective=v_next,
        rel_objective=rel,
        support_match=match,
        support_error=err,
        grad_dist=clarke_dist(V, state.x),
        step_norm=math.sqrt(result.step_sq),
        dissipation_slack=dissipation_slack(result.decrease, result.step_sq,
                                            spec.mu, tau_max),
        wall_ms=wall_ms,
    )
