"""Periodic-orbit tracing for a single-well Hamiltonian.

The flow of p0 = xi^2 + V(x) is integrated with an adaptive high-order
Runge-Kutta pair; the period is detected on the Poincare section xi = 0
(same-orientation crossing near the right turning point) and refined on
the dense output.  Orbit integrals of the form \\oint f dt use uniform
resampling of the dense output plus the trapezoid rule, which converges
spectrally for smooth periodic integrands.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import exprjet
from .exprjet import jet_eval
from .symbols import HamiltonianSymbol, SymbolError


class OrbitError(Exception):
    pass


class ConvergenceError(OrbitError):
    """A quadrature or refinement loop failed to reach its tolerance."""


ENERGY_DRIFT_TOL = 1e-9
CLOSURE_TOL = 1e-8


def turning_points(sym, e):
    """Locate (x_left, x_right) with V = e by bracketed root refinement."""
    if not sym.schrodinger:
        raise SymbolError("turning_points requires a Schrodinger symbol")
    x0 = _well_minimum(sym, e)
    xl = _bracket_root(sym, e, x0, direction=-1)
    xr = _bracket_root(sym, e, x0, direction=+1)
    return xl, xr


def _well_minimum(sym, e):
    from scipy.optimize import minimize_scalar
    # coarse scan outward from 0 until V > e on both sides
    lo, hi = -1.0, 1.0
    for _ in range(80):
        if sym.v(lo) > e and sym.v(hi) > e:
            break
        if sym.v(lo) <= e:
            lo *= 2
        if sym.v(hi) <= e:
            hi *= 2
    xs = np.linspace(lo, hi, 2001)
    vs = sym.v(xs)
    i0 = int(np.argmin(vs))
    res = minimize_scalar(sym.v, bracket=(xs[max(i0 - 1, 0)], xs[i0],
                                          xs[min(i0 + 1, len(xs) - 1)]),
                          method="brent", options={"xtol": 1e-13})
    return float(res.x)


def _bracket_root(sym, e, x0, direction):
    step = max(0.1, 0.1 * abs(x0))
    a = x0
    for _ in range(200):
        b = a + direction * step
        if sym.v(b) > e:
            lo, hi = (b, a) if direction < 0 else (a, b)
            x = brentq(lambda t: sym.v(t) - e, lo, hi,
                       xtol=1e-15, rtol=8.9e-16)
            # Newton polish using V' for |V - E| <= 1e-12 absolute
            for _ in range(3):
                v, v1, _ = sym.v_derivs(x)
                if v1 == 0:
                    break
                x -= (v - e) / v1
            return float(x)
        step *= 1.5
    raise OrbitError("failed to bracket a turning point (invalid window?)")


@dataclass
class Orbit:
    """One closed trajectory of the Hamilton field at energy e."""

    symbol: HamiltonianSymbol
    e: float
    x_left: float
    x_right: float
    period: float
    samples: np.ndarray  # shape (n, 3): (t, x, xi) over one period
    _sol: object  # scipy OdeSolution (dense output)

    def at(self, t):
        """(x, xi) at flow times t (scalar or array), t in [0, period]."""
        y = self._sol(t)
        return y[0], y[1]

    def sample_uniform(self, n):
        t = np.linspace(0.0, self.period, n, endpoint=False)
        x, xi = self.at(t)
        return t, x, xi

    def xi_plus(self, x):
        v = self.symbol.v(x)
        return np.sqrt(np.maximum(self.e - v, 0.0))

    def xi_minus(self, x):
        return -self.xi_plus(x)


def _period_estimate(sym, e, xl, xr, n=96):
    """Time of flight 2 * int dx / (2 xi+) via Gauss-Chebyshev quadrature."""
    k = np.arange(1, n + 1)
    nodes = np.cos((2 * k - 1) * np.pi / (2 * n))
    mid, rad = 0.5 * (xl + xr), 0.5 * (xr - xl)
    x = mid + rad * nodes
    v = sym.v(x)
    # dt = dx / (2 xi); regularize the sqrt((x-xl)(xr-x)) factor
    g = np.sqrt(np.maximum((x - xl) * (xr - x) / np.maximum(e - v, 1e-300), 0.0))
    return float(np.pi / n * np.sum(g))


def trace_orbit(sym, e, rtol=1e-12, atol=1e-14):
    """Trace one period of the Hamilton flow starting at (x_right, 0)."""
    if not sym.schrodinger:
        raise SymbolError("trace_orbit requires a Schrodinger symbol")
    xl, xr = turning_points(sym, e)
    t_est = _period_estimate(sym, e, xl, xr)

    pot = sym.potential

    def rhs(t, y):
        _, v1, _ = exprjet.eval_x_derivs2(pot, y[0])
        return (2.0 * y[1], -v1)

    def section(t, y):
        return y[1]

    section.direction = -1  # same orientation as the start point

    t_max = 1.5 * t_est
    for attempt in range(4):
        sol = solve_ivp(rhs, (0.0, t_max), (xr, 0.0), method="DOP853",
                        rtol=rtol, atol=atol, dense_output=True,
                        events=section)
        events = [t for t in sol.t_events[0] if t > 1e-6 * t_est]
        if events:
            break
        t_max *= 3.0
        if t_max > 10.0 * t_est * 3.0:
            raise OrbitError(f"orbit did not close within 10x the period "
                             f"estimate at E = {e}")
    else:
        raise OrbitError(f"orbit did not close at E = {e}")
    period = float(events[0])

    y_end = sol.sol(period)
    closure = float(np.hypot(y_end[0] - xr, y_end[1] - 0.0))
    if closure > CLOSURE_TOL:
        raise OrbitError(f"orbit closure defect {closure:.3e} at E = {e}")

    mask = sol.t <= period
    ts = np.append(sol.t[mask], period)
    states = sol.sol(ts)
    samples = np.column_stack([ts, states[0], states[1]])

    drift = np.max(np.abs(sym.p0_value(states[0], states[1]) - e))
    if drift > ENERGY_DRIFT_TOL * (1.0 + abs(e)):
        raise OrbitError(f"energy drift {drift:.3e} along orbit at E = {e}")

    return Orbit(symbol=sym, e=e, x_left=xl, x_right=xr, period=period,
                 samples=samples, _sol=sol.sol)


def orbit_integral(orb, f, rel_tol=1e-10, n0=64, max_refine=6):
    """\\oint f(x(t), xi(t)) dt over one period.

    ``f`` must accept numpy arrays.  Resolution is doubled until two
    successive trapezoid values agree to rel_tol.
    """
    n = n0
    _, x, xi = orb.sample_uniform(n)
    prev = orb.period * float(np.mean(f(x, xi)))
    for _ in range(max_refine):
        n *= 2
        _, x, xi = orb.sample_uniform(n)
        cur = orb.period * float(np.mean(f(x, xi)))
        if abs(cur - prev) <= rel_tol * (1.0 + abs(cur)):
            return cur
        prev = cur
    raise ConvergenceError("orbit integral did not converge "
                           f"after {max_refine} refinements")


def action_s0(orb, rel_tol=1e-10):
    """S0 = \\oint xi dx, evaluated as \\oint xi * (d_xi p0) dt."""
    if orb.symbol.schrodinger:
        return orbit_integral(orb, lambda x, xi: 2.0 * xi * xi, rel_tol=rel_tol)

    p0 = orb.symbol.p0

    def f(x, xi):
        out = np.empty_like(np.asarray(x, dtype=float))
        for k, (xk, xik) in enumerate(zip(np.atleast_1d(x), np.atleast_1d(xi))):
            out[k] = xik * jet_eval(p0, (xk, xik)).derivative(0, 1)
        return out

    return orbit_integral(orb, f, rel_tol=rel_tol)


class FocalFrame:
    """Local data of the Lagrangian curve near a focal point, as functions
    of xi along the branch: x(xi), alpha = d_x p0, psi'' = d_xi p0 / alpha,
    and alpha' = d alpha / d xi along the curve."""

    def __init__(self, sym, e, side="right"):
        if side not in ("right", "left"):
            raise ValueError("side must be 'right' or 'left'")
        self.symbol = sym
        self.e = e
        self.side = side
        xl, xr = turning_points(sym, e)
        self.x_focal = xr if side == "right" else xl
        self.xi_focal = 0.0

    def x_of_xi(self, xi):
        """Solve p0(x, xi) = E for x on the branch through the focal point."""
        sym, e = self.symbol, self.e
        x = self.x_focal
        target = e - xi * xi  # V(x) = E - xi^2 in the Schrodinger case
        if sym.schrodinger:
            for _ in range(60):
                v, v1, _ = sym.v_derivs(x)
                if v1 == 0:
                    raise OrbitError("V' vanished during focal-frame solve")
                dx = (v - target) / v1
                x -= dx
                if abs(dx) < 1e-14 * (1.0 + abs(x)):
                    return float(x)
            raise ConvergenceError("focal-frame Newton solve did not converge")
        for _ in range(60):
            j = jet_eval(sym.p0, (x, xi))
            px = j.derivative(1, 0)
            if px == 0:
                raise OrbitError("d_x p0 vanished during focal-frame solve")
            dx = (j.value - e) / px
            x -= dx
            if abs(dx) < 1e-14 * (1.0 + abs(x)):
                return float(x)
        raise ConvergenceError("focal-frame Newton solve did not converge")

    def jet(self, xi):
        return jet_eval(self.symbol.p0, (self.x_of_xi(xi), xi))

    def alpha(self, xi):
        return self.jet(xi).derivative(1, 0)

    def psi_dd(self, xi):
        j = self.jet(xi)
        return j.derivative(0, 1) / j.derivative(1, 0)

    def alpha_prime(self, xi):
        # along the branch x'(xi) = -psi'', so d alpha/d xi =
        # -d2x p0 * psi'' + dx dxi p0
        j = self.jet(xi)
        psi2 = j.derivative(0, 1) / j.derivative(1, 0)
        return -j.derivative(2, 0) * psi2 + j.derivative(1, 1)
