"""Expression language in (x, xi) with truncated-Taylor jet differentiation.

Expressions are small infix formulas over the two phase-space variables
``x`` and ``xi``, the arithmetic operators ``+ - * / ^`` and the unary
functions exp, log, sqrt, sin, cos, tanh.  Named parameters are bound to
numeric values at parse time, so a parsed tree only ever contains numbers,
the two variables, operators and function calls.

Differentiation is forward-mode on bivariate Taylor jets truncated at
total degree 4 (enough for the fourth x-derivatives that the second-order
action corrections require).  Jet arithmetic is exact truncated-polynomial
algebra; no finite differences are involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

MAX_DEGREE = 4

# multi-indices (i, j) with i + j <= MAX_DEGREE, graded order
JET_INDICES = tuple(
    (i, j)
    for d in range(MAX_DEGREE + 1)
    for i in range(d, -1, -1)
    for j in (d - i,)
)
_POS = {ij: k for k, ij in enumerate(JET_INDICES)}

# precomputed (k_out, k_a, k_b) triples for the truncated product
_PROD_TABLE = tuple(
    (_POS[(ia + ib, ja + jb)], _POS[(ia, ja)], _POS[(ib, jb)])
    for (ia, ja) in JET_INDICES
    for (ib, jb) in JET_INDICES
    if ia + ib + ja + jb <= MAX_DEGREE
)

_FACT = tuple(math.factorial(k) for k in range(MAX_DEGREE + 1))


class ExprError(Exception):
    """Base class for expression-language errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExprDomainError(ExprError):
    """Evaluation hit an undefined point (log/sqrt of non-positive, 0^neg...)."""

    def __init__(self, message, subexpr):
        super().__init__(f"{message} in '{subexpr}'")
        self.subexpr = subexpr


class JetDivisionError(ExprError):
    """Division by a jet whose constant term vanishes."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Var:
    name: str  # "x" or "xi"

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / ^
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Neg:
    arg: "Expr"

    def __str__(self):
        return f"(-{self.arg})"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"

    def __str__(self):
        return f"{self.func}({self.arg})"


Expr = Union[Num, Var, BinOp, Neg, Call]

FUNCTIONS = ("exp", "log", "sqrt", "sin", "cos", "tanh")
VARIABLES = ("x", "xi")


# ---------------------------------------------------------------------------
# Tokenizer / recursive-descent parser
# ---------------------------------------------------------------------------

class _Tokenizer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.idx = 0

    def _scan(self):
        text, n = self.text, len(self.text)
        i = 0
        while i < n:
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
                j = i
                while j < n and (text[j].isdigit() or text[j] == "."):
                    j += 1
                # exponent part
                if j < n and text[j] in "eE":
                    k = j + 1
                    if k < n and text[k] in "+-":
                        k += 1
                    if k < n and text[k].isdigit():
                        j = k
                        while j < n and text[j].isdigit():
                            j += 1
                try:
                    value = float(text[i:j])
                except ValueError:
                    raise ExprSyntaxError(f"bad number '{text[i:j]}'", i)
                self.tokens.append(("num", value, i))
                i = j
            elif c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("ident", text[i:j], i))
                i = j
            elif c in "+-*/^()":
                self.tokens.append((c, c, i))
                i += 1
            else:
                raise ExprSyntaxError(f"unexpected character '{c}'", i)
        self.tokens.append(("end", None, n))

    def peek(self):
        return self.tokens[self.idx]

    def next(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok


def parse(text, params=None):
    """Parse an expression string into an AST.

    ``params`` maps identifier names to numeric values; they are substituted
    at parse time so the returned tree only references x and xi.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    params = dict(params or {})
    toks = _Tokenizer(text)

    def expr():
        node = term()
        while toks.peek()[0] in ("+", "-"):
            op = toks.next()[0]
            node = BinOp(op, node, term())
        return node

    def term():
        node = factor()
        while toks.peek()[0] in ("*", "/"):
            op = toks.next()[0]
            node = BinOp(op, node, factor())
        return node

    def factor():
        node = base()
        if toks.peek()[0] == "^":
            toks.next()
            node = BinOp("^", node, factor())  # right-associative
        return node

    def base():
        kind, value, offset = toks.next()
        if kind == "num":
            return Num(value)
        if kind == "-":
            return Neg(base())
        if kind == "(":
            node = expr()
            kind2, _, off2 = toks.next()
            if kind2 != ")":
                raise ExprSyntaxError("expected ')'", off2)
            return node
        if kind == "ident":
            if value in VARIABLES:
                return Var(value)
            if value in FUNCTIONS:
                kind2, _, off2 = toks.next()
                if kind2 != "(":
                    raise ExprSyntaxError(f"expected '(' after {value}", off2)
                node = expr()
                kind3, _, off3 = toks.next()
                if kind3 != ")":
                    raise ExprSyntaxError("expected ')'", off3)
                return Call(value, node)
            if value in params:
                return Num(float(params[value]))
            raise ExprSyntaxError(f"unknown identifier '{value}'", offset)
        raise ExprSyntaxError(f"unexpected token '{value}'", offset)

    node = expr()
    kind, value, offset = toks.peek()
    if kind != "end":
        raise ExprSyntaxError(f"trailing input '{value}'", offset)
    return node


def to_string(e):
    """Pretty-print; parse(to_string(e)) is evaluation-equivalent to e."""
    return str(e)


# ---------------------------------------------------------------------------
# Plain evaluation (floats or numpy arrays)
# ---------------------------------------------------------------------------

_NP_FUNCS = {
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
}


def evaluate(e, x, xi=0.0):
    """Evaluate the expression at (x, xi); x, xi may be numpy arrays."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return x if e.name == "x" else xi
    if isinstance(e, Neg):
        return -evaluate(e.arg, x, xi)
    if isinstance(e, Call):
        v = evaluate(e.arg, x, xi)
        if e.func == "log" and np.any(np.asarray(v) <= 0):
            raise ExprDomainError("log of non-positive value", str(e))
        if e.func == "sqrt" and np.any(np.asarray(v) < 0):
            raise ExprDomainError("sqrt of negative value", str(e))
        return _NP_FUNCS[e.func](v)
    l = evaluate(e.left, x, xi)
    r = evaluate(e.right, x, xi)
    if e.op == "+":
        return l + r
    if e.op == "-":
        return l - r
    if e.op == "*":
        return l * r
    if e.op == "/":
        if np.any(np.asarray(r) == 0):
            raise ExprDomainError("division by zero", str(e))
        return l / r
    # power
    r_arr = np.asarray(r)
    if np.any(np.asarray(l) < 0) and np.any(r_arr != np.floor(r_arr)):
        raise ExprDomainError("fractional power of negative base", str(e))
    with np.errstate(invalid="raise", divide="raise"):
        try:
            return l ** r
        except FloatingPointError:
            raise ExprDomainError("invalid power", str(e))


# ---------------------------------------------------------------------------
# Bivariate jets, total degree <= 4
# ---------------------------------------------------------------------------

class Jet2:
    """Truncated Taylor expansion in (x, xi) around a base point.

    ``coef[k]`` stores d^i_x d^j_xi f / (i! j!) for (i, j) = JET_INDICES[k].
    Coefficients may be floats or numpy arrays (elementwise jets).
    """

    __slots__ = ("point", "coef")

    def __init__(self, point, coef):
        self.point = point
        self.coef = coef

    @classmethod
    def constant(cls, point, value):
        coef = [0.0] * len(JET_INDICES)
        coef[0] = value
        return cls(point, coef)

    @classmethod
    def variable(cls, point, name):
        coef = [0.0] * len(JET_INDICES)
        coef[0] = point[0] if name == "x" else point[1]
        coef[_POS[(1, 0)] if name == "x" else _POS[(0, 1)]] = 1.0
        return cls(point, coef)

    @property
    def value(self):
        return self.coef[0]

    def derivative(self, i, j):
        """Return d^i_x d^j_xi f at the base point."""
        return self.coef[_POS[(i, j)]] * (_FACT[i] * _FACT[j])

    def coefficient(self, i, j):
        return self.coef[_POS[(i, j)]]

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        return Jet2(self.point, [a + b for a, b in zip(self.coef, other.coef)])

    __radd__ = __add__

    def __neg__(self):
        return Jet2(self.point, [-a for a in self.coef])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        out = [0.0] * len(JET_INDICES)
        a, b = self.coef, other.coef
        for k_out, k_a, k_b in _PROD_TABLE:
            out[k_out] = out[k_out] + a[k_a] * b[k_b]
        return Jet2(self.point, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * self._coerce(other)._reciprocal()

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def _coerce(self, other):
        if isinstance(other, Jet2):
            return other
        return Jet2.constant(self.point, other)

    def _nilpotent(self):
        """Return self minus its constant term."""
        coef = list(self.coef)
        coef[0] = coef[0] * 0.0
        return Jet2(self.point, coef)

    def _reciprocal(self):
        c = self.coef[0]
        if np.any(np.asarray(c) == 0):
            raise JetDivisionError("division by a jet with zero constant term")
        u = self._nilpotent() * (1.0 / c)
        # 1/(c(1+u)) = (1 - u + u^2 - u^3 + u^4)/c
        one = Jet2.constant(self.point, 1.0)
        acc = one
        pw = one
        for k in range(1, MAX_DEGREE + 1):
            pw = pw * u
            acc = acc + pw if k % 2 == 0 else acc - pw
        return acc * (1.0 / c)

    def compose_univariate(self, derivs):
        """Apply a scalar function with derivatives ``derivs[k] = f^(k)(c)``
        at c = self.value, via truncated Taylor composition."""
        u = self._nilpotent()
        out = Jet2.constant(self.point, derivs[0])
        pw = Jet2.constant(self.point, 1.0)
        for k in range(1, MAX_DEGREE + 1):
            pw = pw * u
            out = out + pw * (derivs[k] / _FACT[k])
        return out

    def ipow(self, n):
        """Integer power by binary exponentiation (n may be negative)."""
        if n < 0:
            return self._reciprocal().ipow(-n)
        out = Jet2.constant(self.point, 1.0)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out


def _unary_derivs(func, c, subexpr):
    c = np.asarray(c, dtype=float) if isinstance(c, np.ndarray) else float(c)
    if func == "exp":
        e = np.exp(c)
        return (e, e, e, e, e)
    if func == "log":
        if np.any(np.asarray(c) <= 0):
            raise ExprDomainError("log of non-positive value", subexpr)
        return (np.log(c), 1 / c, -1 / c ** 2, 2 / c ** 3, -6 / c ** 4)
    if func == "sqrt":
        if np.any(np.asarray(c) <= 0):
            raise ExprDomainError("sqrt of non-positive value", subexpr)
        s = np.sqrt(c)
        return (s, 0.5 / s, -0.25 / (s * c), 0.375 / (s * c ** 2),
                -0.9375 / (s * c ** 3))
    if func == "sin":
        s, co = np.sin(c), np.cos(c)
        return (s, co, -s, -co, s)
    if func == "cos":
        s, co = np.sin(c), np.cos(c)
        return (co, -s, -co, s, co)
    if func == "tanh":
        t = np.tanh(c)
        sech2 = 1 - t ** 2
        d1 = sech2
        d2 = -2 * t * sech2
        d3 = 4 * t ** 2 * sech2 - 2 * sech2 ** 2
        d4 = -8 * t ** 3 * sech2 + 16 * t * sech2 ** 2
        return (t, d1, d2, d3, d4)
    raise ExprError(f"unknown function {func}")


def _real_pow_derivs(c, r, subexpr):
    if np.any(np.asarray(c) <= 0):
        raise ExprDomainError("real power of non-positive base", subexpr)
    out = [c ** r]
    fac = 1.0
    for k in range(1, MAX_DEGREE + 1):
        fac *= r - (k - 1)
        out.append(fac * c ** (r - k))
    return tuple(out)


def jet_eval(e, point):
    """Evaluate the expression as a degree-4 jet at point = (x, xi)."""
    if isinstance(e, Num):
        return Jet2.constant(point, e.value)
    if isinstance(e, Var):
        return Jet2.variable(point, e.name)
    if isinstance(e, Neg):
        return -jet_eval(e.arg, point)
    if isinstance(e, Call):
        j = jet_eval(e.arg, point)
        return j.compose_univariate(_unary_derivs(e.func, j.value, str(e)))
    if e.op == "^":
        base = jet_eval(e.left, point)
        if isinstance(e.right, Num) and float(e.right.value).is_integer():
            return base.ipow(int(e.right.value))
        if isinstance(e.right, Neg) and isinstance(e.right.arg, Num) \
                and float(e.right.arg.value).is_integer():
            return base.ipow(-int(e.right.arg.value))
        expo = jet_eval(e.right, point)
        if any(np.any(np.asarray(c) != 0) for c in expo.coef[1:]):
            # b^g = exp(g log b) for non-constant exponents
            logb = base.compose_univariate(
                _unary_derivs("log", base.value, str(e)))
            arg = expo * logb
            return arg.compose_univariate(
                _unary_derivs("exp", arg.value, str(e)))
        return base.compose_univariate(
            _real_pow_derivs(base.value, expo.value, str(e)))
    l = jet_eval(e.left, point)
    r = jet_eval(e.right, point)
    if e.op == "+":
        return l + r
    if e.op == "-":
        return l - r
    if e.op == "*":
        return l * r
    try:
        return l / r
    except JetDivisionError:
        raise ExprDomainError("division by zero", str(e))


# ---------------------------------------------------------------------------
# Fast univariate second-order evaluation in x (hot path for V, V', V'')
# ---------------------------------------------------------------------------

def eval_x_derivs2(e, x):
    """Return (f, f', f'') of the expression as a function of x alone.

    ``x`` may be a float or a numpy array; xi must not appear in ``e``.
    Cheaper than a full Jet2 evaluation; used in orbit tracing loops.
    """
    f, d1, d2 = _d2(e, x)
    return f, d1, d2


def _d2(e, x):
    if isinstance(e, Num):
        z = x * 0.0
        return e.value + z, z, z
    if isinstance(e, Var):
        if e.name != "x":
            raise ExprError("xi appears in a potential expression")
        return x, x * 0.0 + 1.0, x * 0.0
    if isinstance(e, Neg):
        f, d1, d2 = _d2(e.arg, x)
        return -f, -d1, -d2
    if isinstance(e, Call):
        u, u1, u2 = _d2(e.arg, x)
        F, F1, F2, _, _ = _unary_derivs(e.func, u, str(e))
        return F, F1 * u1, F2 * u1 * u1 + F1 * u2
    l, l1, l2 = _d2(e.left, x)
    if e.op == "^":
        r = e.right
        if isinstance(r, Num) and float(r.value).is_integer():
            n = int(r.value)
            F = l ** n
            F1 = n * l ** (n - 1)
            F2 = n * (n - 1) * l ** (n - 2) if n != 1 else l * 0.0
            return F, F1 * l1, F2 * l1 * l1 + F1 * l2
        rr, r1, _ = _d2(r, x)
        if np.any(np.asarray(r1) != 0):
            raise ExprError("non-constant exponents unsupported in fast path")
        F, F1, F2, _, _ = _real_pow_derivs(l, rr, str(e))
        return F, F1 * l1, F2 * l1 * l1 + F1 * l2
    r, r1, r2 = _d2(e.right, x)
    if e.op == "+":
        return l + r, l1 + r1, l2 + r2
    if e.op == "-":
        return l - r, l1 - r1, l2 - r2
    if e.op == "*":
        return l * r, l1 * r + l * r1, l2 * r + 2 * l1 * r1 + l * r2
    if np.any(np.asarray(r) == 0):
        raise ExprDomainError("division by zero", str(e))
    q = l / r
    q1 = (l1 - q * r1) / r
    q2 = (l2 - 2 * q1 * r1 - q * r2) / r
    return q, q1, q2


def is_zero_expr(e):
    """True when the expression is the literal constant 0."""
    if isinstance(e, Num):
        return e.value == 0.0
    if isinstance(e, Neg):
        return is_zero_expr(e.arg)
    return False
