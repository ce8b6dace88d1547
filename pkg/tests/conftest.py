"""Shared fixtures: the expression corpus and small helpers."""

from __future__ import annotations

import random

import pytest

from geomech.symexpr import Expr, parse

# Expressions that are smooth on the sampling box [-2, 2]^n; these feed
# the finite-difference derivative checks.
SMOOTH_CORPUS = [
    ("v^2/2", ("q", "v")),
    ("(v^2 - q^2)/2", ("q", "v")),
    ("q^3*v - 2*q*v^2 + 5", ("q", "v")),
    ("sin(q)", ("q",)),
    ("cos(q*v)", ("q", "v")),
    ("sin(q)^2*cos(v)", ("q", "v")),
    ("exp(q/3)", ("q",)),
    ("exp(-q^2)", ("q",)),
    ("log(3 + q)", ("q",)),
    ("sqrt(5 + q^2)", ("q",)),
    ("1/(3 + q^2)", ("q",)),
    ("q^4/4 - q^2/2", ("q",)),
    ("v*sin(q) + q*cos(v)", ("q", "v")),
    ("(1 + v^2)^3", ("v",)),
    ("exp(sin(q))", ("q",)),
]

# Wider corpus for parse/print round-trips; may be non-smooth at 0.
PRINTABLE_CORPUS = SMOOTH_CORPUS + [
    ("abs(q)", ("q",)),
    ("sign(q)*q", ("q",)),
    ("tan(q/4)", ("q",)),
    ("q^(-2)", ("q",)),
    ("v^(1/2)", ("v",)),
    ("-q + 3/4*v", ("q", "v")),
    ("2*(q + v)^2", ("q", "v")),
]


@pytest.fixture(scope="session")
def smooth_corpus():
    return [(parse(text, names), names) for text, names in SMOOTH_CORPUS]


def central_difference(f, x: float, h: float = 1e-5) -> float:
    """Independent derivative oracle used throughout the suite."""
    return (f(x + h) - f(x - h)) / (2.0 * h)


def rng_points(names, count: int, seed: int, lo: float = -2.0, hi: float = 2.0):
    rng = random.Random(seed)
    return [{name: rng.uniform(lo, hi) for name in names} for _ in range(count)]


def random_expr(rng: random.Random, names, depth: int = 3) -> Expr:
    """Small random expression over ``names``: polynomials plus sin/cos/exp."""
    from geomech.symexpr import add, call, mul, pow_, rational, sym

    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.4:
            return rational(rng.randint(-3, 3))
        return sym(rng.choice(names))
    choice = rng.random()
    if choice < 0.35:
        return add(random_expr(rng, names, depth - 1),
                   random_expr(rng, names, depth - 1))
    if choice < 0.7:
        return mul(random_expr(rng, names, depth - 1),
                   random_expr(rng, names, depth - 1))
    if choice < 0.85:
        return pow_(random_expr(rng, names, depth - 1), rng.randint(1, 3))
    fn = rng.choice(("sin", "cos", "exp"))
    inner = random_expr(rng, names, depth - 1)
    if fn == "exp":
        # keep magnitudes sane on the sampling box
        inner = mul(rational(1, 4), inner) if rng.random() < 0.8 else inner
    return call(fn, inner)
