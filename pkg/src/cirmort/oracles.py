"""Independent numerical oracles for the closed-form solution:

* shooting/bisection on the steady ODE,
* an implicit finite-difference obstacle solver for the time-dependent
  system, marched to its steady state,
* Monte Carlo valuation of the threshold prepayment policy with exact CIR
  transition sampling.

Shooting geometry (empirical, asserted by the classifier tests): starting the
IVP at V = 1, V' = 0 from a candidate BELOW the true boundary produces a
trajectory that dives down (classified "decayed"); a candidate ABOVE it picks
up the growing mode and exits upward ("diverged_up").  The classification is
monotone in the candidate, so bisection on the decayed -> diverged_up
transition converges to the boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConvergenceError, NoBracketError, ValidationError
from .model import CirParams, ContractParams, balance
from .numerics import ode_integrate

__all__ = [
    "ShootingReport",
    "GridSpec",
    "FdReport",
    "McReport",
    "CflWarning",
    "shoot_classify",
    "shoot_solve",
    "fd_steady_state",
    "mc_value",
    "mc_optimality_probe",
]


class CflWarning(UserWarning):
    """Advisory: the time step is coarse relative to the advection term."""


# ---------------------------------------------------------------------------
# Shooting

DIVERGED_UP = "diverged_up"
DECAYED = "decayed"

_V_UP_BAND = 2.0
_V_DOWN_BAND = 0.0


@dataclass(frozen=True)
class ShootingReport:
    r_star: float
    iterations: int
    classification_trace: tuple          # of (candidate, label)
    bracket: tuple                       # (lo, hi) at exit


def shoot_classify(cir: CirParams, contract: ContractParams,
                   r_candidate: float, x_max: float | None = None,
                   ode_tol: float = 1e-10) -> str:
    """Integrate the steady ODE from (r, V=1, V'=0) and classify the exit.

    Returns DIVERGED_UP if V exits through the upper band (candidate above
    the boundary: the IVP start V = 1 overshoots the true value and excites
    the growing mode) or DECAYED if V crosses below zero / settles onto the
    c/x tail (candidate at or below the boundary).
    """
    if x_max is None:
        x_max = 50.0 * max(cir.theta, contract.c)
    if not (0.0 < r_candidate < x_max):
        raise ValidationError(
            "r_candidate", f"must lie in (0, {x_max!r}), got {r_candidate!r}")
    k, theta, sigma2, c = cir.k, cir.theta, cir.sigma ** 2, contract.c

    def rhs(x, y):
        v, vp = y
        return (vp, (x * v - c - k * (theta - x) * vp) / (0.5 * sigma2 * x))

    def hit_up(x, y):
        return y[0] - _V_UP_BAND

    def hit_down(x, y):
        return y[0] - _V_DOWN_BAND

    hit_up.terminal = True
    hit_down.terminal = True
    traj = ode_integrate(rhs, r_candidate, (1.0, 0.0), x_max,
                         tol=ode_tol, events=(hit_up, hit_down))
    if len(traj.event_xs[0]) > 0:
        return DIVERGED_UP
    if len(traj.event_xs[1]) > 0:
        return DECAYED
    # no band exit before x_max: compare the endpoint against the c/x tail
    v_end = traj.states[-1, 0]
    return DIVERGED_UP if v_end > 2.0 * c / x_max else DECAYED


def shoot_solve(cir: CirParams, contract: ContractParams,
                tol: float = 1e-8, x_max: float | None = None,
                ode_tol: float = 1e-10) -> ShootingReport:
    """Bisection on shoot_classify over a geometric candidate scan."""
    if not tol >= 1e-10:
        raise ValidationError("tol", f"must be >= 1e-10, got {tol!r}")
    scan = np.geomspace(1e-4 * min(cir.theta, contract.c),
                        2.0 * max(cir.theta, contract.c), 24)
    trace = []
    labels = []
    for r in scan:
        label = shoot_classify(cir, contract, float(r), x_max, ode_tol)
        trace.append((float(r), label))
        labels.append(label)
    flips = [i for i in range(len(labels) - 1)
             if labels[i] != labels[i + 1]]
    if not flips:
        raise NoBracketError(
            f"all {len(scan)} scan candidates classified {labels[0]}",
            scan_points=scan, scan_values=labels)
    if len(flips) > 1 or labels[0] != DECAYED:
        raise ConvergenceError(
            "classification is not a monotone decayed -> diverged_up step",
            trace=tuple(trace))
    lo, hi = float(scan[flips[0]]), float(scan[flips[0] + 1])

    iterations = 0
    while hi - lo > tol * 0.5 * (lo + hi):
        mid = 0.5 * (lo + hi)
        label = shoot_classify(cir, contract, mid, x_max, ode_tol)
        trace.append((mid, label))
        if label == DECAYED:
            lo = mid
        else:
            hi = mid
        iterations += 1
        if iterations > 200:
            raise ConvergenceError("bisection failed to close the bracket",
                                   trace=tuple(trace))
    return ShootingReport(r_star=0.5 * (lo + hi), iterations=iterations,
                          classification_trace=tuple(trace),
                          bracket=(lo, hi))


# ---------------------------------------------------------------------------
# Finite differences

@dataclass(frozen=True)
class GridSpec:
    x_max: float
    n_nodes: int

    def __post_init__(self):
        if not self.x_max > 0:
            raise ValidationError("x_max", "must be positive")
        if self.n_nodes < 10:
            raise ValidationError("n_nodes", "need at least 10 nodes")


@dataclass(frozen=True)
class FdReport:
    grid: np.ndarray
    v_steady: np.ndarray
    h_trace: np.ndarray                 # rows (tau, h(tau))
    steps_to_steady: int


def _operator_coeffs(cir: CirParams, xs: np.ndarray, dx: float):
    """Tridiagonal coefficients of the generator on interior nodes, central
    where that keeps the scheme monotone, upwind otherwise."""
    diff = 0.5 * cir.sigma ** 2 * xs / dx ** 2
    adv = cir.k * (cir.theta - xs)
    lo_c = diff - adv / (2.0 * dx)
    up_c = diff + adv / (2.0 * dx)
    central_ok = (lo_c >= 0) & (up_c >= 0)
    pos = adv >= 0
    lo = np.where(central_ok, lo_c, np.where(pos, diff, diff - adv / dx))
    up = np.where(central_ok, up_c, np.where(pos, diff + adv / dx, diff))
    dg = np.where(central_ok, -2.0 * diff,
                  np.where(pos, -2.0 * diff - adv / dx,
                           -2.0 * diff + adv / dx)) - xs
    return lo, dg, up


def fd_steady_state(cir: CirParams, contract: ContractParams,
                    grid_spec: GridSpec, dtau: float = 0.05,
                    tau_max: float | None = None, psor_omega: float = 1.6,
                    psor_tol: float = 1e-12, steady_tol: float = 1e-10,
                    max_sweeps: int = 5000) -> FdReport:
    """Implicit time stepping of the obstacle problem with projected SOR.

    The obstacle is the balance (m/c)(1 - e^{-c tau}); at x = 0 the operator
    degenerates to first order and is discretized one-sided; at x_max a
    Dirichlet value c/x_max (the tail of the steady solution) is imposed.
    """
    if not dtau > 0:
        raise ValidationError("dtau", "must be positive")
    if tau_max is None:
        tau_max = 200.0 / cir.k
    n = grid_spec.n_nodes
    xs = np.linspace(0.0, grid_spec.x_max, n)
    dx = xs[1] - xs[0]
    c = contract.c

    adv_cfl = dtau * np.max(np.abs(cir.k * (cir.theta - xs))) / dx
    if adv_cfl > 100.0:
        warnings.warn(
            f"dtau advects across {adv_cfl:.0f} cells per step; "
            f"consider a smaller dtau", CflWarning, stacklevel=2)

    lo_i, dg_i, up_i = _operator_coeffs(cir, xs[1:-1], dx)
    # system (I - dtau A); row 0 is the degenerate one-sided equation
    m_lo = np.zeros(n)
    m_dg = np.ones(n)
    m_up = np.zeros(n)
    m_lo[1:-1] = -dtau * lo_i
    m_dg[1:-1] = 1.0 - dtau * dg_i
    m_up[1:-1] = -dtau * up_i
    adv0 = cir.k * cir.theta / dx
    m_dg[0] = 1.0 + dtau * adv0
    m_up[0] = -dtau * adv0

    red = np.arange(1, n - 1, 2)
    black = np.arange(2, n - 1, 2)

    # banded form of the system for the unconstrained warm-start solve; the
    # last row is the Dirichlet condition
    banded = np.zeros((3, n))
    banded[0, 1:] = m_up[:-1]
    banded[1, :] = m_dg
    banded[2, :-1] = m_lo[1:]
    banded[1, -1] = 1.0
    banded[2, -2] = 0.0

    v = np.zeros(n)
    contact_tol = 1e-9
    h_trace = []
    n_steps = int(math.ceil(tau_max / dtau))
    steps_taken = n_steps
    contact = np.zeros(n, dtype=bool)
    for step in range(1, n_steps + 1):
        tau = step * dtau
        obstacle = balance(contract, tau)
        rhs = v + dtau * c
        v_old = v.copy()
        # warm start by Howard policy iteration on the contact set: pinned
        # rows carry v = obstacle, the complement is solved exactly, and each
        # row keeps whichever constraint (PDE row or obstacle) is binding.
        # PSOR below then certifies and enforces the obstacle for the step.
        rhs_sys = rhs.copy()
        rhs_sys[-1] = c / grid_spec.x_max
        v_new = v
        for _ in range(40):
            bb = banded.copy()
            rr = rhs_sys.copy()
            idx_c = np.nonzero(contact)[0]
            bb[1, idx_c] = 1.0
            bb[0, idx_c[idx_c < n - 1] + 1] = 0.0
            bb[2, idx_c[idx_c > 0] - 1] = 0.0
            rr[idx_c] = obstacle
            v_new = solve_banded((1, 1), bb, rr)
            # slack of the PDE row under the original system
            mv = m_dg * v_new
            mv[:-1] += m_up[:-1] * v_new[1:]
            mv[1:] += m_lo[1:] * v_new[:-1]
            # complementarity: min(obstacle - v, rhs - M v) = 0, so contact
            # rows carry rhs - M v > 0 and free rows carry obstacle - v > 0
            slack_pde = rhs_sys - mv
            slack_obs = obstacle - v_new
            new_contact = slack_obs < slack_pde
            new_contact[-1] = False
            if np.array_equal(new_contact, contact):
                break
            contact = new_contact
        v_new = np.minimum(v_new, obstacle)
        v_new[-1] = c / grid_spec.x_max
        for sweep in range(max_sweeps):
            delta = 0.0
            # node 0, then the red/black interior halves
            g0 = (rhs[0] - m_up[0] * v_new[1]) / m_dg[0]
            cand = min((1 - psor_omega) * v_new[0] + psor_omega * g0, obstacle)
            delta = max(delta, abs(cand - v_new[0]))
            v_new[0] = cand
            for group in (red, black):
                gs = (rhs[group] - m_lo[group] * v_new[group - 1]
                      - m_up[group] * v_new[group + 1]) / m_dg[group]
                cand = np.minimum(
                    (1 - psor_omega) * v_new[group] + psor_omega * gs,
                    obstacle)
                delta = max(delta, float(np.max(np.abs(cand - v_new[group]))))
                v_new[group] = cand
            if delta <= psor_tol * max(1.0, float(np.max(np.abs(v_new)))):
                break
        else:
            raise ConvergenceError(
                f"PSOR did not reach {psor_tol} in {max_sweeps} sweeps "
                f"at tau = {tau:g}")
        v = v_new
        # contact region: contiguous run from x = 0 where v touches the
        # obstacle; its right edge is the moving boundary h(tau)
        touching = (obstacle - v) <= contact_tol * max(1.0, obstacle)
        if touching[0]:
            edge = int(np.argmin(touching)) - 1 if not touching.all() else n - 1
            h = xs[max(edge, 0)]
        else:
            h = 0.0
        h_trace.append((tau, float(h)))
        if float(np.max(np.abs(v - v_old))) <= steady_tol:
            steps_taken = step
            break
    return FdReport(grid=xs, v_steady=v, h_trace=np.array(h_trace),
                    steps_to_steady=steps_taken)


# ---------------------------------------------------------------------------
# Monte Carlo

@dataclass(frozen=True)
class McReport:
    x0: float
    boundary_used: float
    value_estimate: float
    std_error: float
    paths: int
    dt: float
    seed: int


# Russian-roulette tail schedule (years): unbiased geometric thinning of
# long-lived paths so deep-tail discounted payments need not be truncated.
_ROULETTE_START = 30.0
_ROULETTE_PERIOD = 15.0


def _simulate_threshold(cir: CirParams, contract: ContractParams, x0: float,
                        boundaries: Sequence[float], paths: int, dt: float,
                        horizon: float, seed: int):
    """Common-path valuation of several threshold policies at once.

    Exact CIR transition: x' = cbar * noncentral-chi2(df, nc) with
    cbar = sigma^2 (1 - e^{-k dt})/(4k), df = 4 k theta / sigma^2,
    nc = x e^{-k dt} / cbar.  Discounting uses trapezoidal accrual of the
    rate integral.  The deep tail is handled by Russian-roulette
    resampling: past _ROULETTE_START, every _ROULETTE_PERIOD years each
    surviving path is kept with probability 1/2 and its weight doubled,
    which keeps the estimator unbiased while the active set (and cost)
    decays geometrically.  A path is also dropped once its weighted
    discount factor is below 1e-8; the horizon is a final hard cap with
    truncation error bounded by the surviving weighted discount.
    """
    if not dt > 0:
        raise ValidationError("dt", "must be positive")
    if not horizon >= dt:
        raise ValidationError("horizon", "must be at least dt")
    if paths < 1:
        raise ValidationError("paths", "need at least one path")
    if not x0 > 0:
        raise ValidationError("x0", "must be positive")
    rng = np.random.Generator(np.random.SFC64(seed))
    k, sigma2, c = cir.k, cir.sigma ** 2, contract.c
    edt = math.exp(-k * dt)
    cbar = sigma2 * (1.0 - edt) / (4.0 * k)
    df = 4.0 * k * cir.theta / sigma2
    nb = len(boundaries)
    bvec = np.asarray(boundaries, dtype=float)
    b_max = float(bvec.max())
    pay_rate = c * dt * 0.5

    # full-size accumulators indexed by original path id
    pay = np.zeros((nb, paths))
    payoff = np.zeros((nb, paths))
    started = x0 > bvec
    payoff[~started, :] = 1.0

    # compact working set: paths still being simulated
    ids = np.arange(paths)
    x = np.full(paths, x0, dtype=float)
    disc = np.ones(paths)
    log_disc = np.zeros(paths)
    accrual = np.zeros(paths)           # per-path weighted running payments
    weight = np.ones(paths)
    alive = np.broadcast_to(started[:, None], (nb, paths)).copy()

    n_steps = int(round(horizon / dt))
    roulette_every = max(1, int(round(_ROULETTE_PERIOD / dt)))
    roulette_from = int(round(_ROULETTE_START / dt))
    shape_g = 0.5 * (df - 1.0)
    for step in range(1, n_steps + 1):
        n_act = ids.size
        if n_act == 0 or not alive.any():
            break
        if df > 1.0:
            zn = rng.standard_normal(n_act, dtype=np.float32)
            g = rng.standard_gamma(shape_g, n_act)
            xn = cbar * (2.0 * g + (zn + np.sqrt(x * (edt / cbar))) ** 2)
        else:
            mix = rng.poisson(0.5 * x * (edt / cbar))
            g = rng.standard_gamma(0.5 * df + mix)
            xn = cbar * 2.0 * g
        ln = log_disc + (0.5 * dt) * (x + xn)
        dn = np.exp(-ln)
        accrual += (pay_rate * weight) * (disc + dn)
        if float(xn.min()) <= b_max:
            cross = alive & (xn[None, :] <= bvec[:, None])
            if cross.any():
                for j in range(nb):
                    hit = cross[j]
                    if hit.any():
                        rows = ids[hit]
                        payoff[j, rows] = (weight[hit] * dn[hit])
                        pay[j, rows] = accrual[hit]
                alive &= ~cross
        x = xn
        log_disc = ln
        disc = dn
        if step >= roulette_from and step % roulette_every == 0:
            # keep each running path with probability 1/2 at doubled weight;
            # payments accrued so far are banked at full weight either way
            survive = (alive.any(axis=0) & (weight * disc >= 1e-8)
                       & (rng.random(n_act) < 0.5))
            for j in range(nb):
                rows = alive[j] & ~survive
                if rows.any():
                    pay[j, ids[rows]] = accrual[rows]
            sel = np.nonzero(survive)[0]
            ids = ids[sel]
            x = x[sel]
            disc = disc[sel]
            log_disc = log_disc[sel]
            accrual = accrual[sel]
            weight = 2.0 * weight[sel]
            alive = alive[:, sel]

    # paths alive at the horizon contribute their accrued payments
    for j in range(nb):
        rows = alive[j]
        if rows.any():
            pay[j, ids[rows]] = accrual[rows]

    reports = []
    for j, b in enumerate(boundaries):
        totals = pay[j] + payoff[j]
        mean = float(totals.mean())
        se = (float(totals.std(ddof=1)) / math.sqrt(paths)
              if paths > 1 else 0.0)
        reports.append(McReport(x0=x0, boundary_used=float(b),
                                value_estimate=mean, std_error=se,
                                paths=paths, dt=dt, seed=seed))
    return reports


def mc_value(cir: CirParams, contract: ContractParams, x0: float,
             boundary: float, paths: int, dt: float, horizon: float,
             seed: int = 0) -> McReport:
    """Value of the threshold policy: pay c continuously, prepay 1 at the
    first step where the rate is at or below the boundary."""
    if x0 <= boundary:
        return McReport(x0=x0, boundary_used=boundary, value_estimate=1.0,
                        std_error=0.0, paths=paths, dt=dt, seed=seed)
    return _simulate_threshold(cir, contract, x0, [boundary], paths, dt,
                               horizon, seed)[0]


def mc_optimality_probe(cir: CirParams, contract: ContractParams, x0: float,
                        boundary: float, delta: float, paths: int, dt: float,
                        horizon: float, seed: int = 0):
    """Common-random-number valuation at boundary - delta, boundary, and
    boundary + delta; the borrower minimizes, so the middle estimate should
    not exceed the neighbors by more than noise when boundary is optimal."""
    if not boundary - delta > 0:
        raise ValidationError("delta", "requires boundary - delta > 0")
    reports = _simulate_threshold(
        cir, contract, x0, [boundary - delta, boundary, boundary + delta],
        paths, dt, horizon, seed)
    return tuple(reports)
