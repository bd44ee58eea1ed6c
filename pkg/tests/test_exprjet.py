"""Expression parsing and second-order jet differentiation."""

import math

import numpy as np
import pytest

from semibs.exprjet import (ExprDomainError, ExprSyntaxError, JET_INDICES,
                            evaluate, eval_x_derivs2, is_zero_expr, jet_eval,
                            parse, to_string)


def _random_expr_text(rng):
    """A random smooth expression with a safe domain on |x|, |xi| <= 1.5."""
    def poly():
        c = rng.uniform(-1.0, 1.0, size=4)
        return (f"({c[0]:.6f} + {c[1]:.6f}*x + {c[2]:.6f}*xi "
                f"+ {c[3]:.6f}*x*xi)")

    pieces = [poly()]
    for _ in range(rng.integers(1, 4)):
        kind = rng.integers(0, 6)
        if kind == 0:
            pieces.append(f"sin({poly()})")
        elif kind == 1:
            pieces.append(f"cos({poly()})")
        elif kind == 2:
            pieces.append(f"tanh({poly()})")
        elif kind == 3:
            pieces.append(f"exp(0.3*{poly()})")
        elif kind == 4:
            pieces.append(f"sqrt(4 + x^2 + xi^2)")
        else:
            pieces.append(f"log(4 + x^2 + xi^2)")
    op = rng.choice(["+", "*", "-"])
    return f" {op} ".join(pieces)


_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _fd_weights(order, step):
    if order == 0:
        return np.array([0.0, 0.0, 1.0, 0.0, 0.0])
    if order == 1:
        return _D1 / step
    return _D2 / step ** 2


def _fd_stencil(f, x, xi, i, j, step):
    offs = np.arange(-2, 3)
    grid = np.array([[f(x + a * step, xi + b * step) for b in offs]
                     for a in offs])
    return float(_fd_weights(i, step) @ grid @ _fd_weights(j, step))


def _fd_partial(f, x, xi, i, j, step=0.12):
    """Twice Richardson-extrapolated central difference for d^{i+j} f."""
    d = [_fd_stencil(f, x, xi, i, j, step / 2 ** k) for k in range(3)]
    r = [(16.0 * d[k + 1] - d[k]) / 15.0 for k in range(2)]
    return (64.0 * r[1] - r[0]) / 63.0


def test_jet_partials_match_finite_differences(rng):
    """100 random expressions: every jet partial up to second order in each
    variable agrees with a high-order finite difference."""
    checked = 0
    for _ in range(100):
        text = _random_expr_text(rng)
        e = parse(text)
        x = float(rng.uniform(-1.2, 1.2))
        xi = float(rng.uniform(-1.2, 1.2))
        jet = jet_eval(e, (x, xi))

        def f(a, b):
            return evaluate(e, a, b)

        for i in range(3):
            for j in range(3):
                if i + j > 4:
                    continue
                ref = _fd_partial(f, x, xi, i, j)
                got = jet.derivative(i, j)
                scale = 1.0 + abs(ref)
                assert abs(got - ref) <= 1e-6 * scale, \
                    f"d^({i},{j}) of {text} at ({x}, {xi}): {got} vs {ref}"
        checked += 1
    assert checked == 100


def test_product_rule_exact(rng):
    """Jets of products are exact (no truncation below the jet order)."""
    for _ in range(20):
        c = rng.uniform(-1, 1, size=6)
        ta = f"({c[0]:.5f} + {c[1]:.5f}*x + {c[2]:.5f}*xi^2)"
        tb = f"({c[3]:.5f}*x^2 + {c[4]:.5f}*x*xi + {c[5]:.5f})"
        pa, pb, pab = parse(ta), parse(tb), parse(f"{ta} * {tb}")
        pt = (float(rng.uniform(-2, 2)), float(rng.uniform(-2, 2)))
        ja, jb, jab = jet_eval(pa, pt), jet_eval(pb, pt), jet_eval(pab, pt)
        prod = ja * jb
        for i, j in JET_INDICES:
            assert prod.derivative(i, j) == pytest.approx(
                jab.derivative(i, j), rel=1e-12, abs=1e-12)


def test_round_trip_through_to_string(rng):
    for _ in range(25):
        text = _random_expr_text(rng)
        e = parse(text)
        e2 = parse(to_string(e))
        x, xi = float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))
        assert evaluate(e2, x, xi) == pytest.approx(evaluate(e, x, xi),
                                                    rel=1e-15, abs=1e-15)


def test_parameters_bound_at_parse_time():
    e = parse("a*x^2 + b", {"a": 2.0, "b": -1.0})
    assert evaluate(e, 3.0) == pytest.approx(17.0)


def test_power_right_associative():
    e = parse("2^3^2")
    assert evaluate(e, 0.0) == pytest.approx(512.0)


def test_syntax_error_reports_offset():
    with pytest.raises(ExprSyntaxError) as err:
        parse("x + * 2")
    assert err.value.offset == 4


def test_domain_errors():
    with pytest.raises(ExprDomainError):
        evaluate(parse("log(x)"), -1.0)
    with pytest.raises(ExprDomainError):
        evaluate(parse("sqrt(x)"), -2.0)
    with pytest.raises(ExprDomainError):
        evaluate(parse("x^0.5"), -2.0)


def test_vectorized_evaluation():
    e = parse("x^2 + sin(xi)")
    x = np.linspace(-1, 1, 7)
    xi = np.linspace(0, 1, 7)
    out = evaluate(e, x, xi)
    assert np.allclose(out, x ** 2 + np.sin(xi))


def test_eval_x_derivs2_matches_jets():
    e = parse("exp(0.2*x) * (1 + x^2)")
    for x in (-1.3, 0.0, 0.7):
        v, d1, d2 = eval_x_derivs2(e, x)
        jet = jet_eval(e, (x, 0.0))
        assert v == pytest.approx(jet.value, rel=1e-13)
        assert d1 == pytest.approx(jet.derivative(1, 0), rel=1e-13)
        assert d2 == pytest.approx(jet.derivative(2, 0), rel=1e-13)


def test_is_zero_expr():
    assert is_zero_expr(parse("0"))
    assert not is_zero_expr(parse("x"))
