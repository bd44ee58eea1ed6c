"""Quantization-condition solving and the analytic Gram determinant."""

import math

import numpy as np
import pytest

from semibs.oracle import oracle_spectrum
from semibs.quantize import (QuantizeError, attach_oracle, bs_solve,
                             convergence_fit, gram_det, gram_scan)
from semibs.symbols import EnergyWindow, builtin


def test_harmonic_order0_levels_exact(harmonic, window):
    h = 0.1
    table = bs_solve(harmonic, h, window, order=0)
    assert [r.n for r in table.rows] == list(range(5))
    for r in table.rows:
        assert r.e_order0 == pytest.approx(h * (2 * r.n + 1), abs=1e-10)


def test_orders_share_root_when_corrections_vanish(harmonic, window):
    # p1 = p2 = 0 and S2 = 0: all three orders coincide for the harmonic well
    table = bs_solve(harmonic, 0.1, window, order=2)
    for r in table.rows:
        assert r.e_order1 == pytest.approx(r.e_order0, abs=1e-9)
        assert r.e_order2 == pytest.approx(r.e_order0, abs=1e-8)


def test_subprincipal_shift_covariance(harmonic, window):
    c, h = 0.3, 0.1
    shifted = builtin("harmonic", {"p1": f"{c}"})
    base = bs_solve(harmonic, h, window, order=1)
    pert = bs_solve(shifted, h, window, order=1)
    for rb, rp in zip(base.rows, pert.rows):
        assert rp.e_order1 - rb.e_order1 == pytest.approx(c * h, abs=1e-8)


def test_order_monotonicity_quartic(quartic, window):
    h = 0.1
    table = bs_solve(quartic, h, window, order=2)
    ref = oracle_spectrum(quartic, h, window)
    attach_oracle(table, ref)
    err0 = max(r.err0 for r in table.rows)
    err2 = max(r.err2 for r in table.rows)
    assert err2 <= err0


def test_attach_oracle_fills_errors(harmonic, window):
    table = bs_solve(harmonic, 0.2, window, order=0)
    attach_oracle(table, [0.2, 0.6, 1.0])
    for r in table.rows:
        assert r.e_oracle is not None
        assert r.err0 == abs(r.e_order0 - r.e_oracle)


def test_bs_solve_argument_validation(harmonic, window):
    with pytest.raises(QuantizeError):
        bs_solve(harmonic, 0.1, window, order=3)
    with pytest.raises(QuantizeError):
        bs_solve(harmonic, -0.1, window)
    with pytest.raises(QuantizeError):
        # window too narrow to contain any level
        bs_solve(harmonic, 0.3, EnergyWindow(0.35, 0.55), order=0)


def test_gram_det_zero_at_levels_and_minus_one_between(harmonic):
    h = 0.1
    # order-0 closed form: det = -cos^2(S0 / 2h) with S0 = pi E
    for n in range(3):
        at_level = gram_det(harmonic, h * (2 * n + 1), h, order=0)
        assert abs(at_level.det) <= 1e-12
        midway = gram_det(harmonic, h * (2 * n + 2), h, order=0)
        assert midway.det == pytest.approx(-1.0, abs=1e-10)


def test_gram_det_vanishes_at_order2_roots(quartic, window):
    h = 0.05
    table = bs_solve(quartic, h, window, order=2)
    for e in table.energies(2)[::3]:
        g = gram_det(quartic, e, h, order=2)
        assert abs(g.det) <= 1e-8


def test_gram_scan_zeros_match_bs_roots(harmonic, window):
    h = 0.1
    table = bs_solve(harmonic, h, window, order=0)
    _, zeros = gram_scan(harmonic, window, h, steps=120, order=0)
    roots = table.energies(0)
    assert len(zeros) == len(roots)
    for z, r in zip(sorted(zeros), sorted(roots)):
        assert abs(z - r) <= 1e-8 * (1.0 + abs(r))


def test_gram_scan_grid_shape(harmonic, window):
    evals, _ = gram_scan(harmonic, window, 0.2, steps=50, order=0)
    assert len(evals) == 50
    assert all(-1.0 - 1e-12 <= g.det <= 1e-12 for g in evals)


def test_convergence_fit_recovers_exact_slopes():
    hs = [0.2, 0.1, 0.05, 0.025]
    slope, intercept, residual = convergence_fit(
        [(h, 3.0 * h ** 2) for h in hs])
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert intercept == pytest.approx(math.log(3.0), abs=1e-12)
    assert residual <= 1e-13
    slope0, _, _ = convergence_fit([(h, 0.7) for h in hs])
    assert slope0 == pytest.approx(0.0, abs=1e-12)


def test_convergence_fit_input_validation():
    with pytest.raises(QuantizeError):
        convergence_fit([(0.1, 1e-3), (0.05, 1e-4)])
    with pytest.raises(QuantizeError):
        convergence_fit([(0.1, 1e-3), (0.05, 0.0), (0.025, 1e-5)])
    with pytest.raises(QuantizeError):
        convergence_fit([(0.1, 1e-3), (0.1, 1e-4), (0.1, 1e-5)])
