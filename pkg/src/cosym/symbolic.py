"""Scalar expressions over named coordinates.

Expressions are symengine objects. This module adds the text grammar used in
manifests, exact canonical forms for the rational tier, and a two-tier zero
test (exact cancellation first, pole-avoiding sampling second).
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import symengine as se
import sympy

Expr = se.Basic

ZERO = se.Integer(0)
ONE = se.Integer(1)

FUNCTIONS = {"sin": se.sin, "cos": se.cos, "exp": se.exp, "sqrt": se.sqrt}

_MAX_RESAMPLE_ROUNDS = 16
_WITNESS_CANDIDATES = 8


class ExpressionError(ValueError):
    pass


class ParseError(ExpressionError):
    def __init__(self, message: str, text: str, pos: int):
        line = text.count("\n", 0, pos) + 1
        column = pos - (text.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {column}: {text!r}")
        self.line = line
        self.column = column


class UnknownVariableError(ExpressionError):
    pass


class PoleError(ExpressionError):
    pass


def var(name: str) -> se.Symbol:
    return se.Symbol(name)


def const(value) -> Expr:
    if isinstance(value, se.Basic):
        return value
    if isinstance(value, float):
        value = Fraction(value)
    if isinstance(value, Fraction):
        return se.Rational(value.numerator, value.denominator)
    return se.Integer(value)


def as_expr(value) -> Expr:
    """Coerce a string, number or symengine object to an expression."""
    if isinstance(value, se.Basic):
        return value
    if isinstance(value, str):
        return parse_expr(value)
    return const(value)


# ---------------------------------------------------------------------------
# text grammar

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?|\.\d+)|(?P<name>[A-Za-z_][A-Za-z0-9_.']*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables, caveats):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = None if variables is None else set(variables)
        self.caveats = caveats

    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            raise ParseError(f"expected {value!r}, found {tok[1] or 'end of input'!r}", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self) -> Expr:
        e = self.sum()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", self.text, tok[2])
        return e

    def sum(self) -> Expr:
        e = self.product()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.product()
            e = e + rhs if op == "+" else e - rhs
        return e

    def product(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                e = e * rhs
            else:
                if rhs == 0:
                    raise ParseError("division by zero", self.text, pos)
                if self.caveats is not None and not rhs.is_Number:
                    self.caveats.append(rhs)
                e = e / rhs
        return e

    def unary(self) -> Expr:
        if self.peek()[1] == "-":
            self.take()
            return -self.unary()
        if self.peek()[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] == "^":
            _, _, pos = self.take()
            exponent = self.unary()
            if not (exponent.is_Number and exponent.is_integer):
                raise ParseError("exponent must be an integer constant", self.text, pos)
            if exponent < 0 and base == 0:
                raise ParseError("division by zero", self.text, pos)
            return base ** exponent
        return base

    def atom(self) -> Expr:
        kind, value, pos = self.take()
        if kind == "num":
            return const(Fraction(value))
        if kind == "name":
            if self.peek()[1] == "(":
                if value not in FUNCTIONS:
                    raise ParseError(f"unknown function {value!r}", self.text, pos)
                self.take("(")
                arg = self.sum()
                self.take(")")
                return FUNCTIONS[value](arg)
            if self.variables is not None and value not in self.variables:
                raise ParseError(f"unknown variable {value!r}", self.text, pos)
            return se.Symbol(value)
        if value == "(":
            e = self.sum()
            self.take(")")
            return e
        raise ParseError(f"unexpected token {value or 'end of input'!r}", self.text, pos)


def parse_expr(text: str, variables: Iterable[str] | None = None,
               caveats: list | None = None) -> Expr:
    """Parse infix text (``+ - * / ^``, sin/cos/exp/sqrt) into an expression.

    When ``variables`` is given, any other identifier is a parse error. Non-constant
    divisors are appended to ``caveats`` so callers can record where a
    cancellation such as ``x/x -> 1`` dropped a pole.
    """
    if not isinstance(text, str):
        raise ParseError("expression must be a string", repr(text), 0)
    return _Parser(text, variables, caveats).parse()


def to_text(e: Expr) -> str:
    return str(e).replace("**", "^")


# ---------------------------------------------------------------------------
# calculus and canonical forms

def free_variables(e: Expr) -> list[str]:
    return sorted(str(s) for s in e.free_symbols)


def differentiate(e: Expr, v, variables: Iterable[str] | None = None) -> Expr:
    name = str(v)
    if variables is not None and name not in set(variables):
        raise UnknownVariableError(f"unknown variable {name!r}")
    return se.diff(e, se.Symbol(name))


def substitute(e: Expr, mapping: Mapping) -> Expr:
    """Simultaneous substitution of variables by expressions."""
    if not mapping:
        return e
    return e.subs({se.Symbol(str(k)) if isinstance(k, str) else k: as_expr(v)
                   for k, v in mapping.items()})


def _is_transcendental(e: Expr) -> bool:
    if isinstance(e, se.Pow):
        exponent = e.args[1]
        return not (exponent.is_Number and exponent.is_integer)
    return isinstance(e, se.Function)


def expand(e: Expr) -> Expr:
    """Two passes of se.expand.

    symengine 0.14 can leave a rational factor inside an Add key after one
    pass (e.g. expanding c/2 - 3c^2 with c = 1/2 + (-1 - a)/2); as_numer_denom
    and .args then drop that factor. The second pass rebuilds the sum.
    """
    return se.expand(se.expand(e))


def _opaque(e: Expr, table: dict) -> Expr:
    """Replace transcendental subterms by placeholder symbols."""
    if e.is_Number or e.is_Symbol:
        return e
    if _is_transcendental(e):
        key = e
        if key not in table:
            table[key] = se.Symbol(f"__atom{len(table)}")
        return table[key]
    args = e.args
    if not args:
        return e
    new = [_opaque(a, table) for a in args]
    if all(a is b for a, b in zip(args, new)):
        return e
    return e.func(*new)


def normal(e: Expr) -> Expr:
    """Cheap normal form: one fraction with expanded numerator and denominator."""
    num, den = expand(e).as_numer_denom()
    num = expand(num)
    if den.is_Number:
        return num / den if den != 1 else num
    return num / expand(den)


def _has_singularity(e: Expr) -> bool:
    if e == se.zoo or e == se.nan or e == se.oo or e == -se.oo:
        return True
    return any(_has_singularity(a) for a in e.args)


@dataclass(frozen=True)
class CanonicalForm:
    numerator: Expr
    denominator: Expr

    def expr(self) -> Expr:
        return self.numerator / self.denominator


def canonical_form(e: Expr) -> CanonicalForm:
    """Expanded numerator/denominator with common factors cancelled.

    Transcendental atoms are treated as independent symbols, so no
    trigonometric or exponential relations are applied.
    """
    table: dict = {}
    opaque = _opaque(e, table)
    if _has_singularity(opaque):
        raise ZeroDivisionError(f"division by an identically zero polynomial in {to_text(e)}")
    num, den = expand(opaque).as_numer_denom()
    if expand(den) == 0:
        raise ZeroDivisionError(f"division by an identically zero polynomial in {to_text(e)}")
    back = {v: k for k, v in table.items()}
    if den.is_Number:
        num = expand(num / den)
        return CanonicalForm(num.subs(back) if back else num, ONE)
    p, q = sympy.fraction(sympy.cancel(sympy.sympify(num) / sympy.sympify(den)))
    num_c, den_c = se.sympify(sympy.expand(p)), se.sympify(sympy.expand(q))
    if back:
        num_c, den_c = num_c.subs(back), den_c.subs(back)
    return CanonicalForm(num_c, den_c)


def simplify(e: Expr) -> Expr:
    return canonical_form(e).expr()


# ---------------------------------------------------------------------------
# evaluation and zero testing

def evaluate(e: Expr, point: Mapping) -> float:
    assignment = {str(k): v for k, v in point.items()}
    missing = [v for v in free_variables(e) if v not in assignment]
    if missing:
        raise UnknownVariableError(f"no value for {', '.join(missing)}")
    value = e.subs({se.Symbol(k): const(Fraction(v)) for k, v in assignment.items()})
    try:
        result = complex(value.n(real=False))
    except (RuntimeError, TypeError, ValueError) as exc:
        raise PoleError(f"{to_text(e)} is singular at {assignment}") from exc
    if not np.isfinite(result.real) or not np.isfinite(result.imag) or abs(result.imag) > 0:
        raise PoleError(f"{to_text(e)} is singular at {assignment}")
    return result.real


@dataclass(frozen=True)
class SamplePolicy:
    samples: int = 64
    tol: float = 1e-9
    seed: int = 0
    box: tuple[float, float] = (-2.0, 2.0)

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("sample count must be at least 1")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        lo, hi = self.box
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError(f"invalid sampling box {self.box}")


DEFAULT_POLICY = SamplePolicy()


class VerdictKind(enum.IntEnum):
    EXACT_ZERO = 0
    NUMERIC_ZERO = 1
    NONZERO = 2


@dataclass(frozen=True)
class ZeroVerdict:
    kind: VerdictKind
    max_abs: float = 0.0
    witness: dict | None = None
    value: float | None = None
    index: tuple | None = None

    @property
    def is_zero(self) -> bool:
        return self.kind != VerdictKind.NONZERO

    def to_json(self) -> dict:
        out: dict = {"verdict": self.kind.name}
        if self.kind == VerdictKind.NUMERIC_ZERO:
            out["max_abs"] = self.max_abs
        if self.kind == VerdictKind.NONZERO:
            if self.index is not None:
                out["index"] = list(self.index)
            out["witness"] = dict(self.witness or {})
            out["value"] = self.value
        return out


EXACT = ZeroVerdict(VerdictKind.EXACT_ZERO)


def weakest(verdicts: Iterable[ZeroVerdict]) -> ZeroVerdict:
    """EXACT < NUMERIC < NONZERO; the largest class wins."""
    worst = EXACT
    for v in verdicts:
        if v.kind > worst.kind or (v.kind == worst.kind == VerdictKind.NUMERIC_ZERO
                                   and v.max_abs > worst.max_abs):
            worst = v
    return worst


def is_exactly_zero(e: Expr) -> bool:
    if e.is_Number:
        return e == 0
    num, _ = expand(e).as_numer_denom()
    return expand(num) == 0


def sample_points(names: Sequence[str], policy: SamplePolicy, count: int | None = None,
                  round_: int = 0) -> np.ndarray:
    rng = np.random.default_rng([policy.seed, round_])
    lo, hi = policy.box
    return rng.uniform(lo, hi, size=(count or policy.samples, len(names)))


def sample_values(exprs: Sequence[Expr], names: Sequence[str] | None,
                  policy: SamplePolicy) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate expressions at pole-free sample points.

    Returns ``(points, values)`` with shapes ``(k, len(names))`` and
    ``(k, len(exprs))``. Rows where any expression is singular are redrawn a
    bounded number of times and dropped if they stay singular.
    """
    if names is None:
        names = sorted({str(s) for e in exprs for s in e.free_symbols})
    names = list(names)
    symbols = [se.Symbol(n) for n in names]
    if not names:
        vals = np.array([[_const_value(e) for e in exprs]])
        return np.zeros((1, 0)), vals
    fn = se.Lambdify(symbols, list(exprs), real=True)
    points = sample_points(names, policy)
    values = np.asarray(fn(points), dtype=float).reshape(len(points), len(exprs))
    for round_ in range(1, _MAX_RESAMPLE_ROUNDS + 1):
        bad = ~np.all(np.isfinite(values), axis=1)
        if not bad.any():
            break
        fresh = sample_points(names, policy, count=int(bad.sum()), round_=round_)
        points[bad] = fresh
        values[bad] = np.asarray(fn(fresh), dtype=float).reshape(len(fresh), len(exprs))
    good = np.all(np.isfinite(values), axis=1)
    if not good.any():
        raise PoleError("no pole-free sample point found")
    return points[good], values[good]


def _const_value(e: Expr) -> float:
    try:
        v = complex(e.n(real=False))
    except (RuntimeError, TypeError, ValueError):
        return float("nan")
    return v.real if v.imag == 0 else float("nan")


def _precise_value(e: Expr, names: Sequence[str], point: np.ndarray) -> float:
    subs = {se.Symbol(n): const(Fraction(float(x))) for n, x in zip(names, point)}
    try:
        v = complex(e.subs(subs).n(prec=160, real=False))
    except (RuntimeError, TypeError, ValueError):
        return float("nan")
    return v.real if abs(v.imag) == 0 else float("nan")


def is_zero(e: Expr, policy: SamplePolicy = DEFAULT_POLICY,
            names: Sequence[str] | None = None) -> ZeroVerdict:
    """Two-tier zero test.

    EXACT_ZERO when the numerator cancels identically (transcendental atoms
    treated as opaque), otherwise NUMERIC_ZERO if every sample is within
    ``policy.tol``, otherwise NONZERO with a witness re-checked at high precision.
    """
    if is_exactly_zero(e):
        return EXACT
    if names is None:
        names = free_variables(e)
    points, values = sample_values([e], names, policy)
    mags = np.abs(values[:, 0])
    order = np.argsort(-mags, kind="stable")
    if mags[order[0]] > policy.tol:
        for row in order[:_WITNESS_CANDIDATES]:
            if mags[row] <= policy.tol:
                break
            precise = _precise_value(e, names, points[row]) if names else float(values[row, 0])
            if np.isfinite(precise) and abs(precise) > policy.tol:
                witness = {n: float(x) for n, x in zip(names, points[row])}
                return ZeroVerdict(VerdictKind.NONZERO, float(mags[row]), witness, precise)
    return ZeroVerdict(VerdictKind.NUMERIC_ZERO, float(mags[order[0]]) if len(mags) else 0.0)


def is_constant(e: Expr) -> bool:
    return not e.free_symbols


def is_continuous_everywhere(e: Expr) -> bool:
    """True when e has no variable denominators and no sqrt (so no poles, no domain edges)."""
    if e.is_Number or e.is_Symbol:
        return True
    if isinstance(e, se.Pow):
        base, exponent = e.args
        if not (exponent.is_Number and exponent.is_integer):
            return False
        if exponent < 0 and not is_constant(base):
            return False
    return all(is_continuous_everywhere(a) for a in e.args)


def random_polynomial(names: Sequence[str], rng: np.random.Generator, degree: int = 2,
                      terms: int = 3, coeff_range: int = 3) -> Expr:
    """Sparse polynomial with small rational coefficients, for randomized law checks."""
    syms = [se.Symbol(n) for n in names]
    out = ZERO
    for _ in range(terms):
        num = int(rng.integers(-coeff_range, coeff_range + 1))
        den = int(rng.integers(1, coeff_range + 1))
        mono = ONE
        if syms:
            for _ in range(int(rng.integers(0, degree + 1))):
                mono = mono * syms[int(rng.integers(len(syms)))]
        out = out + se.Rational(num, den) * mono
    return out
