"""Immutable symbolic expression trees over named coordinates.

Constants are exact rationals; floats appear only at evaluation time.
Every constructor canonicalizes: sums and products are flattened and
sorted in a deterministic structural order, rational constants are
folded, identical additive/multiplicative inverses cancel, and
sin(u)^2 + cos(u)^2 collapses to 1.  Nothing stronger is attempted;
deciding equality of arbitrary expressions is the job of the
probabilistic zero test in ``equality``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping, Union

from ..errors import DomainError, UnboundSymbolError

Number = Union[int, Fraction]

#: functions with built-in calculus rules; everything else is opaque
BUILTIN_FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "sign")


class Expr:
    """Base node. Trees are immutable; hash and ordering key are precomputed."""

    __slots__ = ("_hash", "_key")

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    def __ne__(self, other):
        result = self.__eq__(other)
        return NotImplemented if result is NotImplemented else not result

    def __hash__(self):
        return self._hash

    # arithmetic sugar; every route funnels through the canonicalizing
    # constructors at the bottom of this module
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __pow__(self, exponent):
        return pow_(self, exponent)

    def __neg__(self):
        return neg(self)

    def __repr__(self):
        return f"Expr({to_text(self)})"

    def __str__(self):
        return to_text(self)


class Rat(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Fraction):
        object.__setattr__(self, "value", value)
        key = (0, value.numerator, value.denominator)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))


class Sym(Expr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        object.__setattr__(self, "name", name)
        key = (1, name)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))


class Call(Expr):
    """Unary function application; ``order`` counts derivative primes."""

    __slots__ = ("func", "order", "arg")

    def __init__(self, func: str, order: int, arg: Expr):
        object.__setattr__(self, "func", func)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "arg", arg)
        key = (2, func, order, arg._key)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))


class Pow(Expr):
    """base ** exponent with an exact rational exponent."""

    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: Fraction):
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", exponent)
        key = (3, base._key, exponent.numerator, exponent.denominator)
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple):
        object.__setattr__(self, "factors", factors)
        key = (4, tuple(f._key for f in factors))
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple):
        object.__setattr__(self, "terms", terms)
        key = (5, tuple(t._key for t in terms))
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))


ZERO = Rat(Fraction(0))
ONE = Rat(Fraction(1))
MINUS_ONE = Rat(Fraction(-1))
HALF = Rat(Fraction(1, 2))


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return Rat(Fraction(x))
    raise TypeError(f"cannot interpret {x!r} as an expression")


def rational(numerator: Number, denominator: Number | None = None) -> Expr:
    if denominator is None:
        return Rat(Fraction(numerator))
    return Rat(Fraction(numerator) / Fraction(denominator))


def sym(name: str) -> Expr:
    return Sym(name)


def syms(names: Iterable[str]) -> tuple:
    return tuple(Sym(n) for n in names)


def _split_coeff(t: Expr) -> tuple:
    """Split a canonical term into (rational coefficient, monomial)."""
    if isinstance(t, Rat):
        return t.value, ONE
    if isinstance(t, Mul) and isinstance(t.factors[0], Rat):
        rest = t.factors[1:]
        mono = rest[0] if len(rest) == 1 else Mul(rest)
        return t.factors[0].value, mono
    return Fraction(1), t


def _monomial_powers(mono: Expr) -> dict:
    """View a canonical monomial as a base -> exponent map."""
    powers = {}
    factors = mono.factors if isinstance(mono, Mul) else (mono,)
    for f in factors:
        if isinstance(f, Pow):
            powers[f.base] = powers.get(f.base, Fraction(0)) + f.exponent
        else:
            powers[f] = powers.get(f, Fraction(0)) + Fraction(1)
    return powers


def _monomial_from_powers(powers: Mapping) -> Expr:
    parts = []
    for base, e in powers.items():
        if e == 0:
            continue
        parts.append(base if e == 1 else Pow(base, e))
    if not parts:
        return ONE
    if len(parts) == 1:
        return parts[0]
    parts.sort(key=lambda p: p._key)
    return Mul(tuple(parts))


def _pythagoras(coefmap: dict) -> None:
    """Rewrite c*sin(u)^2*R + c*cos(u)^2*R -> c*R in place, to fixpoint."""
    changed = True
    while changed:
        changed = False
        for mono in list(coefmap.keys()):
            coeff = coefmap.get(mono)
            if coeff is None or coeff == 0:
                continue
            powers = _monomial_powers(mono)
            for base, e in powers.items():
                if not (isinstance(base, Call) and base.func == "sin"
                        and base.order == 0 and e >= 2):
                    continue
                cos_base = Call("cos", 0, base.arg)
                reduced = dict(powers)
                reduced[base] = e - 2
                partner_powers = dict(reduced)
                partner_powers[cos_base] = partner_powers.get(cos_base, Fraction(0)) + 2
                partner = _monomial_from_powers(partner_powers)
                if coefmap.get(partner) == coeff:
                    rest = _monomial_from_powers(reduced)
                    del coefmap[mono]
                    del coefmap[partner]
                    coefmap[rest] = coefmap.get(rest, Fraction(0)) + coeff
                    if coefmap[rest] == 0:
                        del coefmap[rest]
                    changed = True
                    break
            if changed:
                break


def add(*terms) -> Expr:
    const = Fraction(0)
    coefmap: dict = {}
    stack = [_coerce(t) for t in reversed(terms)]
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(reversed(t.terms))
            continue
        if isinstance(t, Rat):
            const += t.value
            continue
        coeff, mono = _split_coeff(t)
        if mono == ONE:
            const += coeff
        else:
            coefmap[mono] = coefmap.get(mono, Fraction(0)) + coeff

    coefmap = {m: c for m, c in coefmap.items() if c != 0}
    _pythagoras(coefmap)
    const += coefmap.pop(ONE, Fraction(0))

    out = []
    for mono, coeff in coefmap.items():
        if coeff == 1:
            out.append(mono)
        else:
            out.append(mul(Rat(coeff), mono))
    if const != 0:
        out.append(Rat(const))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=lambda t: t._key)
    return Add(tuple(out))


def _add_sign(a: Add) -> int:
    """Deterministic sign of a canonical sum: its leading coefficient."""
    c, _ = _split_coeff(a.terms[0])
    return -1 if c < 0 else 1


def _negated_sum(a: Add) -> Expr:
    return add(*(mul(MINUS_ONE, t) for t in a.terms))


def mul(*factors) -> Expr:
    coeff = Fraction(1)
    powmap: dict = {}
    stack = [_coerce(f) for f in reversed(factors)]
    while stack:
        f = stack.pop()
        if isinstance(f, Mul):
            stack.extend(reversed(f.factors))
            continue
        if isinstance(f, Rat):
            coeff *= f.value
            continue
        if isinstance(f, Pow):
            base, e = f.base, f.exponent
        else:
            base, e = f, Fraction(1)
        # normalize sum factors to positive leading sign so that B and -B
        # collect into the same monomial and cancel by coefficient
        if isinstance(base, Add) and e.denominator == 1 and _add_sign(base) < 0:
            base = _negated_sum(base)
            if e.numerator % 2:
                coeff = -coeff
            if not isinstance(base, Add):
                stack.append(pow_(base, e))
                continue
        powmap[base] = powmap.get(base, Fraction(0)) + e

    if coeff == 0:
        return ZERO

    out = []
    for base, e in powmap.items():
        p = pow_(base, e)
        if isinstance(p, Rat):
            coeff *= p.value
        elif p != ONE:
            out.append(p)
    if coeff == 0:
        return ZERO
    if not out:
        return Rat(coeff)
    out.sort(key=lambda f: f._key)
    if coeff != 1:
        # fold the coefficient into a lone sum so that a - b cancels
        # structurally; products of sums stay unexpanded
        if len(out) == 1 and isinstance(out[0], Add):
            return add(*(mul(Rat(coeff), t) for t in out[0].terms))
        out.insert(0, Rat(coeff))
    if len(out) == 1:
        return out[0]
    return Mul(tuple(out))


def _exact_root(n: int, k: int):
    """Integer k-th root of n >= 0, or None if inexact."""
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def pow_(base, exponent) -> Expr:
    base = _coerce(base)
    if isinstance(exponent, Expr):
        if not isinstance(exponent, Rat):
            raise TypeError("exponents must be exact rationals")
        exponent = exponent.value
    e = Fraction(exponent)
    if e == 0:
        return ONE
    if e == 1:
        return base
    if isinstance(base, Rat):
        v = base.value
        if e.denominator == 1:
            if not (v == 0 and e < 0):
                return Rat(v ** e.numerator)  # 0**-n stays for eval to reject
        elif v >= 0:
            np_ = _exact_root(v.numerator, e.denominator)
            dp = _exact_root(v.denominator, e.denominator)
            if np_ is not None and dp is not None:
                return pow_(Rat(Fraction(np_, dp)), Fraction(e.numerator))
    if isinstance(base, Pow) and e.denominator == 1:
        # (b^a)^n = b^(a n) is only safe for integer outer exponents
        return pow_(base.base, base.exponent * e)
    if isinstance(base, Mul) and e.denominator == 1:
        return mul(*(pow_(f, e) for f in base.factors))
    if isinstance(base, Add) and e.denominator == 1 and _add_sign(base) < 0:
        flipped = pow_(_negated_sum(base), e)
        return flipped if e.numerator % 2 == 0 else mul(MINUS_ONE, flipped)
    return Pow(base, e)


def div(a, b) -> Expr:
    return mul(_coerce(a), pow_(_coerce(b), Fraction(-1)))


def neg(x) -> Expr:
    return mul(MINUS_ONE, _coerce(x))


def call(func: str, arg, order: int = 0) -> Expr:
    arg = _coerce(arg)
    if func == "sqrt" and order == 0:
        return pow_(arg, Fraction(1, 2))
    if isinstance(arg, Rat) and order == 0:
        if func == "abs":
            return Rat(abs(arg.value))
        if func == "sign":
            v = arg.value
            return Rat(Fraction(0 if v == 0 else (1 if v > 0 else -1)))
    return Call(func, order, arg)


def free_symbols(e: Expr) -> frozenset:
    if isinstance(e, Sym):
        return frozenset((e.name,))
    if isinstance(e, Rat):
        return frozenset()
    if isinstance(e, Call):
        return free_symbols(e.arg)
    if isinstance(e, Pow):
        return free_symbols(e.base)
    children = e.factors if isinstance(e, Mul) else e.terms
    out: frozenset = frozenset()
    for c in children:
        out |= free_symbols(c)
    return out


def opaque_functions(e: Expr) -> frozenset:
    """Names of non-builtin functions appearing in the tree."""
    if isinstance(e, Call):
        inner = opaque_functions(e.arg)
        if e.func not in BUILTIN_FUNCTIONS:
            inner |= frozenset((e.func,))
        return inner
    if isinstance(e, Pow):
        return opaque_functions(e.base)
    if isinstance(e, (Rat, Sym)):
        return frozenset()
    children = e.factors if isinstance(e, Mul) else e.terms
    out: frozenset = frozenset()
    for c in children:
        out |= opaque_functions(c)
    return out


# --- calculus ---------------------------------------------------------------

def differentiate(e: Expr, x: str) -> Expr:
    """Partial derivative with respect to the symbol named ``x``.

    d|u|/du = sign(u) and d sign(u)/du = 0, valid away from u = 0;
    opaque functions gain a derivative prime.
    """
    if isinstance(e, Rat):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == x else ZERO
    if isinstance(e, Add):
        return add(*(differentiate(t, x) for t in e.terms))
    if isinstance(e, Mul):
        parts = []
        for i, f in enumerate(e.factors):
            df = differentiate(f, x)
            if df == ZERO:
                continue
            rest = e.factors[:i] + e.factors[i + 1:]
            parts.append(mul(df, *rest))
        return add(*parts)
    if isinstance(e, Pow):
        db = differentiate(e.base, x)
        if db == ZERO:
            return ZERO
        return mul(Rat(e.exponent), pow_(e.base, e.exponent - 1), db)
    if isinstance(e, Call):
        du = differentiate(e.arg, x)
        if du == ZERO:
            return ZERO
        return mul(_call_derivative(e), du)
    raise TypeError(f"cannot differentiate {e!r}")


def _call_derivative(e: Call) -> Expr:
    u = e.arg
    if e.func in BUILTIN_FUNCTIONS:
        if e.func == "sin":
            return call("cos", u)
        if e.func == "cos":
            return neg(call("sin", u))
        if e.func == "tan":
            return add(ONE, pow_(call("tan", u), 2))
        if e.func == "exp":
            return call("exp", u)
        if e.func == "log":
            return pow_(u, Fraction(-1))
        if e.func == "abs":
            return call("sign", u)
        if e.func == "sign":
            return ZERO
        raise AssertionError(e.func)  # sqrt canonicalizes to Pow
    return Call(e.func, e.order + 1, u)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Simultaneous substitution of symbols by expressions."""
    if isinstance(e, Rat):
        return e
    if isinstance(e, Sym):
        replacement = mapping.get(e.name)
        return e if replacement is None else _coerce(replacement)
    if isinstance(e, Add):
        return add(*(substitute(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(substitute(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return pow_(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Call):
        return Call(e.func, e.order, substitute(e.arg, mapping))
    raise TypeError(f"cannot substitute into {e!r}")


# --- numeric evaluation ------------------------------------------------------

class EvalPoint:
    """Finite real bindings for every free symbol of an expression."""

    __slots__ = ("bindings",)

    def __init__(self, bindings: Mapping[str, float]):
        clean = {}
        for name, value in bindings.items():
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"binding for '{name}' is not finite")
            clean[name] = value
        self.bindings = clean

    def __getitem__(self, name: str) -> float:
        return self.bindings[name]

    def __repr__(self):
        inner = ", ".join(f"{k}={v:.6g}" for k, v in sorted(self.bindings.items()))
        return f"EvalPoint({inner})"


class FunctionBindings:
    """Closed-form stand-ins for opaque functions, used when sampling.

    Each entry maps a base function name to a one-variable expression;
    derivative orders are produced by differentiating the binding.
    """

    def __init__(self, bindings: Mapping[str, Expr]):
        self._exprs = {}
        self._cache: dict = {}
        for name, body in bindings.items():
            body = _coerce(body)
            fs = free_symbols(body)
            if len(fs) > 1:
                raise ValueError(f"binding for '{name}' must use one variable, got {sorted(fs)}")
            var = next(iter(fs)) if fs else "_u"
            self._exprs[name] = (var, body)

    def __contains__(self, name: str) -> bool:
        return name in self._exprs

    def derivative(self, name: str, order: int) -> tuple:
        key = (name, order)
        if key not in self._cache:
            var, body = self._exprs[name]
            for _ in range(order):
                body = differentiate(body, var)
            self._cache[key] = (var, body)
        return self._cache[key]


def evaluate(e: Expr, point, funcs: FunctionBindings | None = None) -> float:
    """IEEE-double value of ``e`` at ``point``.

    Raises DomainError when the real value does not exist and
    UnboundSymbolError when a symbol or opaque function lacks a binding.
    """
    bindings = point.bindings if isinstance(point, EvalPoint) else point
    return _eval(e, bindings, funcs)


def _eval(e: Expr, b: Mapping[str, float], funcs) -> float:
    if isinstance(e, Rat):
        return float(e.value)
    if isinstance(e, Sym):
        try:
            return b[e.name]
        except KeyError:
            raise UnboundSymbolError(e.name) from None
    if isinstance(e, Add):
        return math.fsum(_eval(t, b, funcs) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= _eval(f, b, funcs)
        return out
    if isinstance(e, Pow):
        base = _eval(e.base, b, funcs)
        exp = e.exponent
        if base == 0.0 and exp < 0:
            raise DomainError("division by zero")
        if base < 0.0 and exp.denominator != 1:
            raise DomainError(f"negative base {base!r} with fractional exponent {exp}")
        try:
            return base ** float(exp) if exp.denominator != 1 else base ** exp.numerator
        except OverflowError:
            raise DomainError("overflow in power") from None
    if isinstance(e, Call):
        u = _eval(e.arg, b, funcs)
        if e.func in BUILTIN_FUNCTIONS:
            if e.func == "log" and u <= 0.0:
                raise DomainError("log of non-positive value")
            try:
                value = {
                    "sin": math.sin, "cos": math.cos, "tan": math.tan,
                    "exp": math.exp, "log": math.log, "abs": abs,
                    "sign": lambda t: 0.0 if t == 0 else math.copysign(1.0, t),
                }[e.func](u)
            except OverflowError:
                raise DomainError("overflow in function evaluation") from None
            if not math.isfinite(value):
                raise DomainError(f"non-finite value from {e.func}")
            return value
        if funcs is None or e.func not in funcs:
            raise UnboundSymbolError(e.func)
        var, body = funcs.derivative(e.func, e.order)
        return _eval(body, {var: u}, funcs)
    raise TypeError(f"cannot evaluate {e!r}")


# --- printing ----------------------------------------------------------------

def _fmt_rat(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _needs_parens_in_product(e: Expr) -> bool:
    return isinstance(e, Add) or (isinstance(e, Rat) and e.value < 0)


def to_text(e: Expr) -> str:
    """Grammar-conforming rendering; parses back to the same canonical tree."""
    if isinstance(e, Rat):
        return _fmt_rat(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Call):
        primes = "'" * e.order
        return f"{e.func}{primes}({to_text(e.arg)})"
    if isinstance(e, Pow):
        base = to_text(e.base)
        if not isinstance(e.base, (Sym, Call)):
            base = f"({base})"
        exp = e.exponent
        if exp.denominator == 1 and exp >= 0:
            return f"{base}^{exp.numerator}"
        return f"{base}^({_fmt_rat(exp)})"
    if isinstance(e, Mul):
        coeff, mono = _split_coeff(e)
        factors = mono.factors if isinstance(mono, Mul) else (mono,)
        body = "*".join(
            f"({to_text(f)})" if _needs_parens_in_product(f) else to_text(f)
            for f in factors
        )
        if coeff == 1:
            return body
        if coeff == -1:
            return f"-{body}"
        return f"{_fmt_rat(coeff)}*{body}"
    if isinstance(e, Add):
        parts = []
        for i, t in enumerate(e.terms):
            text = to_text(t)
            if i == 0:
                parts.append(text)
            elif text.startswith("-"):
                parts.append(f" - {text[1:]}")
            else:
                parts.append(f" + {text}")
        return "".join(parts)
    raise TypeError(f"cannot print {e!r}")
