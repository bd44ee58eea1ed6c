"""Periodic-orbit tracing, turning points, and orbit integrals."""

import math

import numpy as np
import pytest

from semibs.orbit import (FocalFrame, action_s0, orbit_integral, trace_orbit,
                          turning_points)
from semibs.symbols import builtin


ALL_WELLS = [
    ("harmonic", {}),
    ("quartic", {}),
    ("anharmonic", {"lam": 0.3}),
    ("morse", {"D": 3.0, "a": 0.5}),
]


def test_turning_points_harmonic(harmonic):
    for e in (0.1, 0.5, 1.0):
        xl, xr = turning_points(harmonic, e)
        assert xl == pytest.approx(-math.sqrt(e), abs=1e-12)
        assert xr == pytest.approx(math.sqrt(e), abs=1e-12)


def test_turning_points_sit_on_level_set():
    for name, params in ALL_WELLS:
        sym = builtin(name, params)
        for e in (0.2, 0.7):
            xl, xr = turning_points(sym, e)
            assert sym.v(xl) == pytest.approx(e, abs=1e-11)
            assert sym.v(xr) == pytest.approx(e, abs=1e-11)
            assert xl < xr


def test_energy_conservation_along_orbits():
    for name, params in ALL_WELLS:
        sym = builtin(name, params)
        for e in (0.3, 0.9):
            orb = trace_orbit(sym, e)
            _, x, xi = orb.sample_uniform(512)
            drift = np.max(np.abs(sym.p0_value(x, xi) - e))
            assert drift <= 1e-9 * (1.0 + abs(e))


def test_harmonic_period_and_action(harmonic):
    # x(t) = sqrt(E) sin(2t): period pi, S0 = oint xi dx = pi E
    for e in (0.25, 1.0):
        orb = trace_orbit(harmonic, e)
        assert orb.period == pytest.approx(math.pi, rel=1e-10)
        assert action_s0(orb) == pytest.approx(math.pi * e, rel=1e-10)


def test_action_derivative_equals_period():
    """dS0/dE = T(E) at 5 energies for every built-in well."""
    eta = 2e-3
    for name, params in ALL_WELLS:
        sym = builtin(name, params)
        for e in np.linspace(0.2, 1.0, 5):
            orbs = {k: trace_orbit(sym, e + k * eta) for k in (-2, -1, 1, 2)}
            s = {k: action_s0(o) for k, o in orbs.items()}
            ds = (s[-2] - 8 * s[-1] + 8 * s[1] - s[2]) / (12 * eta)
            period = trace_orbit(sym, e).period
            assert abs(ds - period) <= 1e-6 * (1.0 + period), (name, e)


def test_action_tolerance_robustness(quartic):
    e = 0.6
    s_a = action_s0(trace_orbit(quartic, e, rtol=1e-11))
    s_b = action_s0(trace_orbit(quartic, e, rtol=5e-12))
    assert abs(s_a - s_b) <= 1e-10 * (1.0 + abs(s_a))


def test_orbit_integral_of_one_is_period(quartic):
    orb = trace_orbit(quartic, 0.5)
    val = orbit_integral(orb, lambda x, xi: np.ones_like(x))
    assert val == pytest.approx(orb.period, rel=1e-12)


def test_orbit_closure(quartic):
    orb = trace_orbit(quartic, 0.8)
    x0, xi0 = orb.at(0.0)
    x1, xi1 = orb.at(orb.period)
    assert math.hypot(x1 - x0, xi1 - xi0) <= 1e-8


def test_focal_frame_harmonic(harmonic):
    e = 1.0
    frame = FocalFrame(harmonic, e, side="right")
    assert frame.x_focal == pytest.approx(1.0, abs=1e-12)
    for xi in (0.1, 0.3, 0.6):
        x = frame.x_of_xi(xi)
        assert x == pytest.approx(math.sqrt(e - xi * xi), rel=1e-12)
        assert frame.alpha(xi) == pytest.approx(2.0 * x, rel=1e-12)
        assert frame.psi_dd(xi) == pytest.approx(xi / x, rel=1e-12)


def test_focal_frame_left_side(quartic):
    frame = FocalFrame(quartic, 0.5, side="left")
    assert frame.x_focal < 0
    x = frame.x_of_xi(0.2)
    assert quartic.p0_value(x, 0.2) == pytest.approx(0.5, abs=1e-12)
