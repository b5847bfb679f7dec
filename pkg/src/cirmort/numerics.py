"""Shared numerical kernels: adaptive quadrature, bracketed root refinement,
and an adaptive ODE stepper.

The quadrature is a Gauss-Kronrod 7/15 rule with adaptive bisection.  The
integrand is called on numpy arrays (all nodes of a generation at once), which
keeps the Python overhead per subdivision level constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import ConvergenceError, NoBracketError, QuadratureError

__all__ = [
    "QuadratureResult",
    "Trajectory",
    "integrate_adaptive",
    "find_root_bracketed",
    "ode_integrate",
]

# Kronrod-15 abscissae on [-1, 1] (symmetric; nonnegative half listed) and the
# matching Kronrod and embedded Gauss-7 weights, QUADPACK values.
_XGK_HALF = np.array([
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898, 0.0,
])
_WGK_HALF = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
])
_WG_HALF = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469,
])

_XGK = np.concatenate([-_XGK_HALF[:-1], _XGK_HALF[::-1]])          # 15 nodes
_WGK = np.concatenate([_WGK_HALF[:-1], _WGK_HALF[::-1]])
_WG = np.zeros(15)
_WG[1:14:2] = np.concatenate([_WG_HALF[:-1], _WG_HALF[::-1]])      # Gauss nodes


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


def _gk_batch(f, lo: np.ndarray, hi: np.ndarray):
    """Apply the GK15 rule to a batch of intervals.

    Returns per-interval Kronrod values, error estimates, and resabs (the
    rule applied to |f|, used for the rounding-noise floor).  The raw
    |K15 - G7| difference is rescaled QUADPACK-style against the variation
    resasc so the estimate keeps shrinking once the rule has converged
    instead of saturating at rounding noise.
    """
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    nodes = mid[:, None] + half[:, None] * _XGK[None, :]
    fv = np.asarray(f(nodes.ravel()), dtype=float).reshape(nodes.shape)
    k15 = half * (fv @ _WGK)
    g7 = half * (fv @ _WG)
    resabs = half * (np.abs(fv) @ _WGK)
    width = hi - lo
    # repeated bisection can reach adjacent floats (width 0 after rounding)
    mean = k15 / np.where(width > 0.0, width, 1.0)
    resasc = half * (np.abs(fv - mean[:, None]) @ _WGK)
    raw = np.abs(k15 - g7)
    scaled = np.where(
        resasc > 0.0,
        resasc * np.minimum(1.0, (200.0 * raw
                                  / np.where(resasc > 0, resasc, 1.0)) ** 1.5),
        raw)
    return k15, scaled, resabs


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    tol: float = 1e-10,
    tol_abs: float = 0.0,
    max_intervals: int = 4096,
    initial: int = 1,
) -> QuadratureResult:
    """Adaptive GK15 quadrature of ``f`` over the finite interval [a, b].

    ``f`` must accept a 1-D numpy array of abscissae and return values of the
    same shape.  Converges when the summed Kronrod error estimate is below
    max(tol * |value|, tol_abs).  Semi-infinite integrals are handled by the
    caller via certified truncation (see closed_form).
    """
    if not (a < b):
        if a == b:
            return QuadratureResult(0.0, 0.0, 0)
        raise ValueError("integration bounds must satisfy a < b")
    edges = np.linspace(a, b, initial + 1)
    lo = edges[:-1].copy()
    hi = edges[1:].copy()
    vals, errs, resabs = _gk_batch(f, lo, hi)
    evaluations = 15 * lo.size

    eps = np.finfo(float).eps
    for _ in range(200):
        total = float(vals.sum())
        total_err = float(errs.sum())
        # the last term is the unavoidable rounding floor of the rule
        allowed = max(tol * abs(total), tol_abs,
                      50.0 * eps * float(resabs.sum()))
        if total_err <= allowed:
            return QuadratureResult(total, total_err, evaluations)
        if lo.size >= max_intervals:
            raise QuadratureError(
                f"subdivision limit {max_intervals} reached "
                f"(estimate {total_err:.3e} > allowed {allowed:.3e})",
                total, total_err)
        # Split every interval carrying more than its share of the budget;
        # always split at least the worst one.
        split = errs > allowed / (2.0 * lo.size)
        if not split.any():
            split[np.argmax(errs)] = True
        mid = 0.5 * (lo[split] + hi[split])
        new_lo = np.concatenate([lo[split], mid])
        new_hi = np.concatenate([mid, hi[split]])
        new_vals, new_errs, new_resabs = _gk_batch(f, new_lo, new_hi)
        evaluations += 15 * new_lo.size
        keep = ~split
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        vals = np.concatenate([vals[keep], new_vals])
        errs = np.concatenate([errs[keep], new_errs])
        resabs = np.concatenate([resabs[keep], new_resabs])

    raise QuadratureError("generation limit reached",
                          float(vals.sum()), float(errs.sum()))


def find_root_bracketed(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Brent's method: inverse quadratic / secant steps with bisection
    fallback.  Requires f(lo) and f(hi) of opposite sign; never evaluates
    outside [lo, hi].  Stops when the bracket width is ≤ tol * max(1, |root|)
    (plus the unavoidable floating-point floor).
    """
    a, b = float(lo), float(hi)
    fa, fb = float(f(a)), float(f(b))
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise NoBracketError(
            f"f({a!r}) = {fa!r} and f({b!r}) = {fb!r} have the same sign")
    c, fc = a, fa
    d = e = b - a
    for _ in range(max_iter):
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * np.finfo(float).eps * abs(b) + 0.5 * tol * max(1.0, abs(b))
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d, e = xm, xm
        else:
            d, e = xm, xm
        a, fa = b, fb
        b = b + (d if abs(d) > tol1 else math.copysign(tol1, xm))
        fb = float(f(b))
    raise ConvergenceError(
        f"root refinement did not converge in {max_iter} iterations")


@dataclass
class Trajectory:
    xs: np.ndarray
    states: np.ndarray                 # shape (len(xs), dim)
    success: bool
    event_xs: Sequence[np.ndarray]
    event_states: Sequence[np.ndarray]
    message: str


def ode_integrate(
    rhs: Callable,
    x0: float,
    state0,
    x_end: float,
    tol: float = 1e-10,
    events=None,
    max_step: float = np.inf,
) -> Trajectory:
    """Adaptive explicit Runge-Kutta (DOP853) integration with event
    detection.  Raises ConvergenceError on step-size underflow, reporting the
    last abscissa reached.
    """
    sol = solve_ivp(
        rhs, (x0, x_end), np.asarray(state0, dtype=float),
        method="DOP853", rtol=tol, atol=tol, events=events,
        max_step=max_step, dense_output=False)
    if sol.status == -1:
        last = sol.t[-1] if sol.t.size else x0
        raise ConvergenceError(
            f"ODE step failed near x = {last!r}: {sol.message}")
    return Trajectory(
        xs=sol.t,
        states=sol.y.T,
        success=sol.status == 0 or sol.status == 1,
        event_xs=sol.t_events if sol.t_events is not None else [],
        event_states=sol.y_events if sol.y_events is not None else [],
        message=sol.message,
    )
