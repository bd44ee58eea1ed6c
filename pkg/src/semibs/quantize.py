"""Spectrum from the quantization condition, and the analytic Gram determinant.

The level condition solved here is

    S0(E) - h \\oint p1 dt + s2_sign h^2 S2(E) = 2 pi h (k + 1/2),

with the Maslov contribution of the two focal points folded into the
half-integer offset.  The Gram determinant is the closed form
-cos^2(action_diff/(2h) + pi/2) whose zero set coincides with the level
set of the condition above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .actions import action_series
from .exprjet import evaluate, is_zero_expr
from .orbit import action_s0, orbit_integral, trace_orbit
from .symbols import EnergyWindow, HamiltonianSymbol

# Overall sign of the h^2 term, calibrated once against the independent
# eigenvalue oracle on the quartic well (see tests).
S2_SIGN = -1.0

MASLOV_PHASE = math.pi / 2.0


class QuantizeError(Exception):
    pass


@dataclass
class SpectrumRow:
    n: int
    e_order0: float
    e_order1: float
    e_order2: float
    e_oracle: float | None = None
    err0: float | None = None
    err2: float | None = None


@dataclass
class SpectrumTable:
    h: float
    rows: list = field(default_factory=list)
    monotone: bool = True  # False when the h^2 term broke monotonicity

    def energies(self, order):
        key = {0: "e_order0", 1: "e_order1", 2: "e_order2"}[order]
        return [getattr(r, key) for r in self.rows]


@dataclass
class GramEval:
    e: float
    h: float
    action_diff: float
    maslov_phase: float
    det: float


class _SeriesEvaluator:
    """Truncated action series S_eff(E) with shared orbit/series caches."""

    def __init__(self, sym, h, order, eta, quad_tol=1e-12, ode_tol=1e-12,
                 s2_sign=None):
        self.sym = sym
        self.h = h
        self.order = order
        self.eta = eta
        self.quad_tol = quad_tol
        self.ode_tol = ode_tol
        self.s2_sign = S2_SIGN if s2_sign is None else s2_sign
        self.p1_zero = is_zero_expr(sym.p1)
        self._orbits = {}
        self._series = {}

    def orbit(self, e):
        key = round(e, 14)
        if key not in self._orbits:
            self._orbits[key] = trace_orbit(self.sym, e, rtol=self.ode_tol)
        return self._orbits[key]

    def s0(self, e):
        return action_s0(self.orbit(e), rel_tol=self.quad_tol)

    def sub_principal(self, e):
        if self.p1_zero:
            return 0.0
        return orbit_integral(
            self.orbit(e),
            lambda x, xi: evaluate(self.sym.p1, x, xi) + 0.0 * x,
            rel_tol=self.quad_tol)

    def s2(self, e):
        key = round(e, 14)
        if key not in self._series:
            self._series[key] = action_series(
                self.sym, e, self.eta, rtol=self.ode_tol,
                quad_tol=self.quad_tol, _orbit_cache=self._orbits)
        return self._series[key].s2

    def correction(self, e):
        """The terms beyond S0 at the working order."""
        c = 0.0
        if self.order >= 1:
            c -= self.h * self.sub_principal(e)
        if self.order >= 2:
            c += self.s2_sign * self.h * self.h * self.s2(e)
        return c

    def value(self, e):
        return self.s0(e) + self.correction(e)


def _monotone_s0_grid(ev, e_min, e_max, n=33):
    es = np.linspace(e_min, e_max, n)
    vals = np.array([ev.s0(e) for e in es])
    if not np.all(np.diff(vals) > 0):
        raise QuantizeError(
            "S0 is not increasing on the window; the well hypotheses fail")
    return es, vals


def _solve_s0(ev, es, vals, target, root_tol):
    """Root of S0(E) = target using the precomputed monotone grid."""
    if target <= vals[0]:
        lo, hi = es[0], es[1]
    elif target >= vals[-1]:
        lo, hi = es[-2], es[-1]
    else:
        i = int(np.searchsorted(vals, target))
        lo, hi = es[i - 1], es[i]
    # widen the bracket if the target sits at (or just past) a window edge
    span = es[-1] - es[0]
    f = lambda e: ev.s0(e) - target
    for _ in range(12):
        if f(lo) <= 0 <= f(hi):
            break
        lo, hi = lo - 0.05 * span, hi + 0.05 * span
    else:
        raise QuantizeError(f"could not bracket the level S0 = {target}")
    return brentq(f, lo, hi, xtol=root_tol, rtol=4 * np.finfo(float).eps)


def _solve_level(ev, es, vals, target, root_tol):
    """Solve S_eff(E) = target by fixed-point iteration on the correction.

    The iteration contracts by O(h^2) per step; it is accepted either at
    root_tol or when the step size stops shrinking, which marks the noise
    floor of the finite-difference S2 evaluation.
    """
    e = _solve_s0(ev, es, vals, target, root_tol)
    if ev.order == 0:
        return e
    prev_step = math.inf
    for _ in range(40):
        e_new = _solve_s0(ev, es, vals, target - ev.correction(e), root_tol)
        step = abs(e_new - e)
        if step <= root_tol * (1.0 + abs(e_new)):
            return e_new
        if step >= 0.5 * prev_step:
            if step <= 1e-6 * (1.0 + abs(e_new)):
                return e_new  # stalled at the S2 noise floor
            break  # not contracting: h too large for the fixed point
        prev_step = step
        e = e_new
    raise QuantizeError(
        f"level iteration did not converge near E = {e} (h too large?)")


def _dense_scan_roots(ev, e_min, e_max, target, root_tol, steps=801):
    """Fallback when S_eff is non-monotone: locate every sign change."""
    es = np.linspace(e_min, e_max, steps)
    g = np.array([ev.value(e) - target for e in es])
    roots = []
    for i in np.nonzero(np.diff(np.sign(g)) != 0)[0]:
        roots.append(brentq(lambda e: ev.value(e) - target, es[i], es[i + 1],
                            xtol=root_tol, rtol=4 * np.finfo(float).eps))
    return roots


def bs_solve(sym, h, window, order=2, eta=None, quad_tol=1e-12, ode_tol=1e-12,
             root_tol=1e-10, s2_sign=None):
    """Solve the quantization condition on the window at the given order.

    Returns a SpectrumTable whose rows carry the eigenvalue at every order
    up to ``order`` (higher-order columns repeat the last computed one).
    """
    if order not in (0, 1, 2):
        raise QuantizeError("order must be 0, 1 or 2")
    if h <= 0:
        raise QuantizeError("h must be positive")
    span = window.e_max - window.e_min
    if eta is None:
        eta = 0.02 * span

    evaluators = [
        _SeriesEvaluator(sym, h, m, eta, quad_tol=quad_tol, ode_tol=ode_tol,
                         s2_sign=s2_sign)
        for m in range(order + 1)
    ]
    # all orders share one orbit cache
    for ev in evaluators[1:]:
        ev._orbits = evaluators[0]._orbits
        ev._series = getattr(evaluators[-1], "_series")
    ev_top = evaluators[-1]

    es, vals = _monotone_s0_grid(ev_top, window.e_min, window.e_max)

    s_lo = ev_top.value(window.e_min)
    s_hi = ev_top.value(window.e_max)
    monotone = s_lo < s_hi
    lo, hi = (s_lo, s_hi) if monotone else (s_hi, s_lo)
    two_pi_h = 2.0 * math.pi * h
    k_min = math.ceil(lo / two_pi_h - 0.5 - 1e-12)
    k_max = math.floor(hi / two_pi_h - 0.5 + 1e-12)
    if k_max < k_min:
        raise QuantizeError("no quantization levels inside the window")

    table = SpectrumTable(h=h)
    for k in range(k_min, k_max + 1):
        target = two_pi_h * (k + 0.5)
        levels = []
        for ev in evaluators:
            try:
                levels.append(_solve_level(ev, es, vals, target, root_tol))
            except QuantizeError:
                roots = _dense_scan_roots(ev, window.e_min, window.e_max,
                                          target, root_tol)
                if not roots:
                    raise
                table.monotone = False
                levels.append(roots[0])
        while len(levels) < 3:
            levels.append(levels[-1])
        table.rows.append(SpectrumRow(n=k, e_order0=levels[0],
                                      e_order1=levels[1], e_order2=levels[2]))
    table.rows.sort(key=lambda r: r.n)
    return table


def attach_oracle(table, oracle_energies):
    """Pair oracle eigenvalues with table rows (in order) and fill errors."""
    for row, e_ref in zip(table.rows, oracle_energies):
        row.e_oracle = e_ref
        row.err0 = abs(row.e_order0 - e_ref)
        row.err2 = abs(row.e_order2 - e_ref)
    return table


def gram_det(sym, e, h, order=2, eta=None, quad_tol=1e-12, ode_tol=1e-12,
             s2_sign=None, _evaluator=None):
    """Analytic Gram determinant at energy e.

    action_diff is the difference of the two generalized branch actions,
    which equals S_eff(E) minus the pi h contributed by the focal-point
    prefactors; with maslov_phase = pi/2 the determinant reduces to
    -cos^2(S_eff/(2h)).
    """
    ev = _evaluator
    if ev is None:
        if eta is None:
            eta = 0.02 * max(abs(e), 1.0)
        ev = _SeriesEvaluator(sym, h, order, eta, quad_tol=quad_tol,
                              ode_tol=ode_tol, s2_sign=s2_sign)
    s_eff = ev.value(e)
    action_diff = s_eff - math.pi * h
    det = -math.cos(0.5 * action_diff / h + MASLOV_PHASE) ** 2
    return GramEval(e=e, h=h, action_diff=action_diff,
                    maslov_phase=MASLOV_PHASE, det=det)


def gram_scan(sym, window, h, steps=200, order=2, eta=None, quad_tol=1e-12,
              ode_tol=1e-12, s2_sign=None, zero_tol=1e-6):
    """Scan the Gram determinant on a uniform grid and localize its zeros.

    Returns (evals, zeros): the grid of GramEval records and the refined
    energies where |det| dips below ``zero_tol``.
    """
    if steps < 2:
        raise QuantizeError("gram_scan requires steps >= 2")
    span = window.e_max - window.e_min
    if eta is None:
        eta = 0.02 * span
    ev = _SeriesEvaluator(sym, h, order, eta, quad_tol=quad_tol,
                          ode_tol=ode_tol, s2_sign=s2_sign)

    es = np.linspace(window.e_min, window.e_max, steps)
    evals = [gram_det(sym, e, h, order, _evaluator=ev) for e in es]
    mags = np.array([abs(g.det) for g in evals])

    zeros = []
    for i in range(1, steps - 1):
        if mags[i] <= mags[i - 1] and mags[i] <= mags[i + 1]:
            res = minimize_scalar(
                lambda e: abs(gram_det(sym, e, h, order, _evaluator=ev).det),
                bounds=(es[i - 1], es[i + 1]), method="bounded",
                options={"xatol": 1e-12})
            if abs(res.fun) < zero_tol:
                zeros.append(float(res.x))
    return evals, zeros


def convergence_fit(errs):
    """Least-squares slope/intercept of log(err) against log(h)."""
    pts = [(float(h), float(e)) for h, e in errs]
    if len(pts) < 3:
        raise QuantizeError("convergence_fit needs at least 3 points")
    if any(e <= 0 for _, e in pts):
        raise QuantizeError("convergence_fit requires positive errors")
    lh = np.log([h for h, _ in pts])
    le = np.log([e for _, e in pts])
    if np.ptp(lh) < 1e-12:
        raise QuantizeError("degenerate spread of h values")
    slope, intercept = np.polyfit(lh, le, 1)
    residual = float(np.sqrt(np.mean((np.polyval([slope, intercept], lh)
                                      - le) ** 2)))
    return float(slope), float(intercept), residual
