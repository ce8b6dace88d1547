"""Probabilistic equality of expressions.

A disagreement at an admissible sample point is definitive and comes
with a witness.  Agreement at every sampled point is reported as Equal
but is probabilistic by nature: canonical simplification is limited on
purpose, so the zero test carries the burden of deciding identities.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from typing import Mapping, Optional

from ..errors import DomainError, UnboundSymbolError
from .nodes import (
    Expr, EvalPoint, FunctionBindings, Rat, ZERO, add, evaluate, free_symbols,
    neg,
)

DEFAULT_SAMPLES = 16
DEFAULT_TOL = 1e-9
DEFAULT_SEED = 20830
SAMPLE_RANGE = (-2.0, 2.0)


class Verdict(enum.Enum):
    EQUAL = "equal"
    NOT_EQUAL = "not_equal"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class EqualityResult:
    verdict: Verdict
    witness: Optional[EvalPoint] = None
    samples_used: int = 0

    def __bool__(self) -> bool:
        return self.verdict is Verdict.EQUAL

    @property
    def is_equal(self) -> bool:
        return self.verdict is Verdict.EQUAL

    @property
    def is_not_equal(self) -> bool:
        return self.verdict is Verdict.NOT_EQUAL


def _as_bindings(funcs) -> Optional[FunctionBindings]:
    if funcs is None or isinstance(funcs, FunctionBindings):
        return funcs
    return FunctionBindings(funcs)


def sample_points(names, n_samples: int, rng: random.Random,
                  reject=None, max_draws: Optional[int] = None):
    """Uniform draws on the sampling box, resampled past rejected points."""
    names = sorted(names)
    if max_draws is None:
        max_draws = 50 * n_samples
    points = []
    lo, hi = SAMPLE_RANGE
    for _ in range(max_draws):
        point = EvalPoint({name: rng.uniform(lo, hi) for name in names})
        if reject is not None and reject(point):
            continue
        points.append(point)
        if len(points) == n_samples:
            break
    return points


def equal(a: Expr, b: Expr, n_samples: int = DEFAULT_SAMPLES,
          tol: float = DEFAULT_TOL, funcs: Mapping | FunctionBindings | None = None,
          seed: int = DEFAULT_SEED) -> EqualityResult:
    """Decide whether two expressions agree as functions.

    NotEqual results carry a witness point.  Equal means agreement
    within relative ``tol`` at ``n_samples`` admissible random points
    (or a canonical-form structural zero).  Undecided is returned when
    fewer than ``n_samples`` admissible points turn up in
    ``50 * n_samples`` draws.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    diff = add(a, neg(b))
    if diff == ZERO:
        return EqualityResult(Verdict.EQUAL)
    if isinstance(diff, Rat):
        return EqualityResult(Verdict.NOT_EQUAL, EvalPoint({}))

    bindings = _as_bindings(funcs)
    names = free_symbols(a) | free_symbols(b)
    rng = random.Random(seed)
    lo, hi = SAMPLE_RANGE
    used = 0
    for _ in range(50 * n_samples):
        point = EvalPoint({name: rng.uniform(lo, hi) for name in sorted(names)})
        try:
            va = evaluate(a, point, bindings)
            vb = evaluate(b, point, bindings)
        except (DomainError, UnboundSymbolError):
            continue
        used += 1
        if abs(va - vb) > tol * max(1.0, abs(va), abs(vb)):
            return EqualityResult(Verdict.NOT_EQUAL, point, used)
        if used == n_samples:
            return EqualityResult(Verdict.EQUAL, None, used)
    return EqualityResult(Verdict.UNDECIDED, None, used)


def is_zero(e: Expr, **kwargs) -> EqualityResult:
    return equal(e, ZERO, **kwargs)
