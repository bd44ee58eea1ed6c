"""Action series S0, S1, S2 and the pointwise quantities feeding them.

S2 is assembled from the closed-orbit form

    S2 = (1/48) (d/dE)^2 \\oint Gamma dt - \\oint p2 dt
         - (1/2) (d/dE) \\oint p1^2 dt

where Gamma dt is the restriction to the orbit of the curvature 1-form of
p0.  E-derivatives are 5-point central differences across neighboring
orbits, with one Richardson extrapolation at half step.  The pointwise
Fourier-side density t1_value and the d1 bracket terms are kept for
near-focal-arc verification; full-orbit quadrature of them is never
attempted (they are singular at the well bottom).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exprjet import evaluate, jet_eval, is_zero_expr
from .orbit import FocalFrame, Orbit, trace_orbit, orbit_integral, action_s0
from .symbols import HamiltonianSymbol

MASLOV_TERM = math.pi  # two simple focal points, pi/2 each


class FocalEvaluationError(Exception):
    """t1/d1 evaluated where alpha = d_x p0 is too small."""


ALPHA_TOL = 1e-6


@dataclass
class ActionSeries:
    e: float
    s0: float
    period: float
    maslov: float
    sub_principal: float  # \oint p1 dt
    s1: float
    gamma_dd: float       # (d/dE)^2 \oint Gamma dt
    p2_int: float         # \oint p2 dt
    p1sq_d: float         # (d/dE) \oint p1^2 dt
    s2: float
    derivative_consistent: bool  # eta vs eta/2 estimates agreed to 1e-6


def gamma_value(sym, point):
    """Gamma at (x, xi): the curvature form of p0 restricted to the flow."""
    j = jet_eval(sym.p0, point)
    px, pxi = j.derivative(1, 0), j.derivative(0, 1)
    pxx, pxxi, pxixi = j.derivative(2, 0), j.derivative(1, 1), j.derivative(0, 2)
    return pxx * pxi * pxi - 2.0 * pxxi * px * pxi + pxixi * px * px


def _gamma_on_samples(sym, x, xi):
    if sym.schrodinger:
        _, v1, v2 = sym.v_derivs(x)
        return 4.0 * xi * xi * v2 + 2.0 * v1 * v1
    out = np.empty_like(np.asarray(x, dtype=float))
    for k, (xk, xik) in enumerate(zip(np.atleast_1d(x), np.atleast_1d(xi))):
        out[k] = gamma_value(sym, (xk, xik))
    return out


def gamma_integral(sym, orb, rel_tol=1e-12):
    return orbit_integral(orb, lambda x, xi: _gamma_on_samples(sym, x, xi),
                          rel_tol=rel_tol)


def _d1_5pt(values, eta):
    """4th-order first derivative from values at E + {-2,-1,0,1,2} eta."""
    m2, m1, _, p1, p2 = values
    return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * eta)


def _d2_5pt(values, eta):
    """4th-order second derivative from values at E + {-2,-1,0,1,2} eta."""
    m2, m1, c, p1, p2 = values
    return (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * eta * eta)


def action_series(sym, e, eta, rtol=1e-12, quad_tol=1e-12,
                  s2_sign=None, _orbit_cache=None):
    """Compute the action series at energy e with E-derivative step eta."""
    cache = _orbit_cache if _orbit_cache is not None else {}

    def orb_at(energy):
        key = round(energy, 14)
        if key not in cache:
            cache[key] = trace_orbit(sym, energy, rtol=rtol)
        return cache[key]

    base = orb_at(e)
    s0 = action_s0(base, rel_tol=quad_tol)
    period = base.period

    p1_zero = is_zero_expr(sym.p1)
    p2_zero = is_zero_expr(sym.p2)

    sub = 0.0 if p1_zero else orbit_integral(
        base, lambda x, xi: evaluate(sym.p1, x, xi) + 0.0 * x, rel_tol=quad_tol)
    p2_int = 0.0 if p2_zero else orbit_integral(
        base, lambda x, xi: evaluate(sym.p2, x, xi) + 0.0 * x, rel_tol=quad_tol)

    # stencil energies for step eta and eta/2 (Richardson)
    offsets = (-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0)
    g_vals = {}
    q_vals = {}
    for off in offsets:
        orb = orb_at(e + off * eta)
        g_vals[off] = gamma_integral(sym, orb, rel_tol=quad_tol)
        if not p1_zero:
            q_vals[off] = orbit_integral(
                orb, lambda x, xi: evaluate(sym.p1, x, xi) ** 2 + 0.0 * x,
                rel_tol=quad_tol)

    def stencil(vals, offs):
        return [vals[o] for o in offs]

    full = (-2.0, -1.0, 0.0, 1.0, 2.0)
    half = (-1.0, -0.5, 0.0, 0.5, 1.0)

    g_dd_eta = _d2_5pt(stencil(g_vals, full), eta)
    g_dd_half = _d2_5pt(stencil(g_vals, half), 0.5 * eta)
    gamma_dd = (16.0 * g_dd_half - g_dd_eta) / 15.0
    consistent = abs(g_dd_eta - g_dd_half) <= 1e-6 * (1.0 + abs(gamma_dd))

    if p1_zero:
        p1sq_d = 0.0
    else:
        q_d_eta = _d1_5pt(stencil(q_vals, full), eta)
        q_d_half = _d1_5pt(stencil(q_vals, half), 0.5 * eta)
        p1sq_d = (16.0 * q_d_half - q_d_eta) / 15.0
        consistent = consistent and (
            abs(q_d_eta - q_d_half) <= 1e-6 * (1.0 + abs(p1sq_d)))

    s2 = gamma_dd / 48.0 - p2_int - 0.5 * p1sq_d
    return ActionSeries(
        e=e, s0=s0, period=period, maslov=MASLOV_TERM, sub_principal=sub,
        s1=MASLOV_TERM - sub, gamma_dd=gamma_dd, p2_int=p2_int,
        p1sq_d=p1sq_d, s2=s2, derivative_consistent=consistent)


def _frame_data(sym, frame, xi):
    x = frame.x_of_xi(xi)
    j0 = jet_eval(sym.p0, (x, xi))
    alpha = j0.derivative(1, 0)
    if abs(alpha) < ALPHA_TOL:
        raise FocalEvaluationError(
            f"alpha = {alpha:.3e} too small at xi = {xi} (not a focal arc)")
    psi2 = j0.derivative(0, 1) / alpha
    alpha_p = -j0.derivative(2, 0) * psi2 + j0.derivative(1, 1)
    return x, j0, alpha, psi2, alpha_p


def t1_value(sym, frame, xi):
    """Fourier-representation density T1 on a near-focal arc."""
    x, j0, alpha, psi2, alpha_p = _frame_data(sym, frame, xi)
    p2 = evaluate(sym.p2, x, xi)
    j1 = jet_eval(sym.p1, (x, xi))
    p1v = j1.value
    p1x = j1.derivative(1, 0)
    px2 = j0.derivative(2, 0)
    px3 = j0.derivative(3, 0)
    px4 = j0.derivative(4, 0)
    px2xi2 = j0.derivative(2, 2)
    px3xi = j0.derivative(3, 1)
    return ((p2 - px2xi2 / 8.0 + psi2 * px3xi / 12.0
             + psi2 * psi2 * px4 / 24.0) / alpha
            + (alpha_p ** 2 / alpha ** 3) * px2 / 8.0
            + psi2 * (alpha_p / alpha ** 2) * px3 / 6.0
            - (p1v / alpha ** 2) * (p1x - p1v * px2 / (2.0 * alpha)))


def d1_brackets(sym, frame, xi):
    """(re_part, im_bracket): the exact-derivative real part of D1 and the
    boundary bracket of its imaginary part."""
    x, j0, alpha, psi2, alpha_p = _frame_data(sym, frame, xi)
    j1 = jet_eval(sym.p1, (x, xi))
    px2 = j0.derivative(2, 0)
    px3 = j0.derivative(3, 0)
    # d_x (p1 / d_x p0) by the quotient rule
    re_part = -0.5 * (j1.derivative(1, 0) * alpha - j1.value * px2) / alpha ** 2
    im_bracket = psi2 / (6.0 * alpha) * px3 + 0.25 * alpha_p * px2
    return re_part, im_bracket


C0 = 1.0 / math.sqrt(2.0)


def normalization_c1(sym, frame):
    """Second normalization constant C1 at the focal point (C0 = 1/sqrt 2)."""
    re_part, _ = d1_brackets(sym, frame, frame.xi_focal)
    # re_part is already -(1/2) d_x(p1/d_x p0)
    return C0 * re_part
