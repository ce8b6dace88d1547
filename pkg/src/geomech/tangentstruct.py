"""Tangent-bundle structures: axiom verification, second-order fields,
structure transport, the vertical differential, and curve lifting.

A tangent-bundle structure on an even chart is the pair (S, Delta) of a
vertical endomorphism and a dilation field.  The five defining axioms
are verified, never presumed: S^2 = 0, Ker S = Im S, vanishing
Nijenhuis tensor, L_Delta S = -S and S(Delta) = 0.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import DimensionMismatchError, DomainError, OddDimensionError
from .geomcalc import (
    Chart, Diffeo, DiffForm, Tensor11, VectorField, chart, fields_equal,
    lie_derivative, matrix_rank_check, nijenhuis, one_form, pullback,
    pushforward,
)
from .results import CheckResult, Report, merge_componentwise
from .symexpr import (
    DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL, SAMPLE_RANGE, Expr, ZERO,
    add, differentiate, equal, evaluate, free_symbols, mul, rational,
    substitute, sym,
)


@dataclass(frozen=True)
class TangentStructure:
    """Chart of dimension 2m with a candidate (S, Delta) pair."""

    chart: Chart
    S: Tensor11
    Delta: VectorField

    def __post_init__(self):
        if self.S.chart != self.chart or self.Delta.chart != self.chart:
            raise DimensionMismatchError("S and Delta must live on the structure chart")

    @property
    def half_dim(self) -> int:
        return self.chart.dim // 2


def canonical_structure(m: int, base_names=None, fiber_names=None) -> TangentStructure:
    """Canonical pair S = d/dv^i (x) dq^i, Delta = v^i d/dv^i on R^{2m}."""
    if m < 1:
        raise ValueError("m must be at least 1")
    if base_names is None:
        base_names = ("q",) if m == 1 else tuple(f"q{i+1}" for i in range(m))
    if fiber_names is None:
        fiber_names = ("v",) if m == 1 else tuple(f"v{i+1}" for i in range(m))
    c = chart(f"T{m}", tuple(base_names) + tuple(fiber_names))
    return canonical_structure_on(c)


def canonical_structure_on(c: Chart) -> TangentStructure:
    """Canonical structure on an even chart: first half base, second half fiber."""
    if c.dim % 2:
        raise OddDimensionError(f"chart {c} has odd dimension")
    m = c.dim // 2
    n = c.dim
    rows = [[ZERO] * n for _ in range(n)]
    for i in range(m):
        rows[m + i][i] = rational(1)
    delta = [ZERO] * m + [sym(name) for name in c.coords[m:]]
    return TangentStructure(c, Tensor11(c, rows), VectorField(c, delta))


def verify_axioms(ts: TangentStructure, funcs=None, seed: int = DEFAULT_SEED,
                  n_samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL,
                  rank_samples: int = 16) -> Report:
    """Check all five structure axioms, each reported with a witness on failure.

    Ker S = Im S is decided by numeric rank at sample points: S^2 = 0
    already gives Im within Ker, and rank m closes the dimension count.
    """
    if ts.chart.dim % 2:
        raise OddDimensionError(f"chart {ts.chart} has odd dimension")
    eq_opts = dict(funcs=funcs, seed=seed, n_samples=n_samples, tol=tol)
    names = ts.chart.coords
    n, m = ts.chart.dim, ts.half_dim
    report = Report()

    s_squared = ts.S.compose(ts.S)
    report.add("S^2 = 0", merge_componentwise(
        (f"(S^2)^{names[i]}_{names[j]}", equal(s_squared.rows[i][j], ZERO, **eq_opts))
        for i in range(n) for j in range(n)))

    nij = nijenhuis(ts.S)
    report.add("N_S = 0", merge_componentwise(
        (f"N^{names[i]}_{{{names[j]},{names[k]}}}", equal(nij[i][j][k], ZERO, **eq_opts))
        for i in range(n) for j in range(n) for k in range(j + 1, n)))

    lie_s = lie_derivative(ts.Delta, ts.S)
    target = ts.S.scaled(rational(-1))
    report.add("L_Delta S = -S", merge_componentwise(
        (f"T^{names[i]}_{names[j]}", equal(lie_s.rows[i][j], target.rows[i][j], **eq_opts))
        for i in range(n) for j in range(n)))

    s_delta = ts.S.apply(ts.Delta)
    report.add("S(Delta) = 0", merge_componentwise(
        (f"d/d{names[i]}", equal(s_delta.components[i], ZERO, **eq_opts))
        for i in range(n)))

    report.add("Ker S = Im S", matrix_rank_check(ts.S.rows, m, funcs=funcs,
                                                 seed=seed, samples=rank_samples))
    return report


def is_sode(gamma: VectorField, ts: TangentStructure, funcs=None,
            seed: int = DEFAULT_SEED, n_samples: int = DEFAULT_SAMPLES,
            tol: float = DEFAULT_TOL) -> CheckResult:
    """Second-order condition S(Gamma) = Delta."""
    return fields_equal(ts.S.apply(gamma), ts.Delta, funcs=funcs, seed=seed,
                        n_samples=n_samples, tol=tol)


def transport_structure(ts: TangentStructure, phi: Diffeo, funcs=None,
                        seed: int = DEFAULT_SEED) -> TangentStructure:
    """Move (S, Delta) to phi's target chart.

    S transforms by pullback along the inverse map, Delta by
    pushforward; axiom preservation is a checkable fact (run
    verify_axioms on the result), not an assumption.
    """
    if phi.src != ts.chart:
        raise DimensionMismatchError(f"structure lives on {ts.chart}, diffeo starts at {phi.src}")
    s_new = pullback(phi.inverted(), ts.S, funcs=funcs, seed=seed)
    delta_new = pushforward(phi, ts.Delta)
    return TangentStructure(phi.dst, s_new, delta_new)


def vertical_differential(f: Expr, ts: TangentStructure) -> DiffForm:
    """d_S f, the one-form X -> df(S X); semibasic by construction."""
    n = ts.chart.dim
    df = [differentiate(f, x) for x in ts.chart.coords]
    comps = [add(*(mul(df[i], ts.S.rows[i][j]) for i in range(n)))
             for j in range(n)]
    return one_form(ts.chart, comps)


@dataclass(frozen=True)
class CurveSpec:
    """A curve on a configuration chart, components in one time symbol."""

    chart: Chart
    time: str
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components",
                           tuple(c if isinstance(c, Expr) else rational(c)
                                 for c in self.components))
        if len(self.components) != self.chart.dim:
            raise DimensionMismatchError("curve components must match the chart dimension")
        for c in self.components:
            extra = free_symbols(c) - {self.time}
            if extra:
                raise ValueError(f"curve component depends on {sorted(extra)}")


def lift_curve(gamma: CurveSpec) -> dict:
    """First and second tangent lifts of a curve.

    tgamma = (gamma, gamma'); ttgamma = (gamma, gamma', gamma', gamma'')
    with the repeated velocity block structurally identical.
    """
    velocity = tuple(differentiate(c, gamma.time) for c in gamma.components)
    acceleration = tuple(differentiate(c, gamma.time) for c in velocity)
    return {
        "tgamma": gamma.components + velocity,
        "ttgamma": gamma.components + velocity + velocity + acceleration,
    }


def check_integral_curve(gamma: CurveSpec, field: VectorField,
                         t_samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL,
                         seed: int = DEFAULT_SEED) -> CheckResult:
    """Residual d(tgamma)/dt - Gamma o tgamma, tested to vanish in t."""
    lift = lift_curve(gamma)["tgamma"]
    if field.chart.dim != len(lift):
        raise DimensionMismatchError(
            f"field chart dimension {field.chart.dim} != lifted curve size {len(lift)}")
    sub = dict(zip(field.chart.coords, lift))
    residuals = []
    for name, lifted, comp in zip(field.chart.coords, lift, field.components):
        residuals.append((f"d/d{name}",
                          equal(differentiate(lifted, gamma.time),
                                substitute(comp, sub),
                                n_samples=t_samples, tol=tol, seed=seed)))
    result = merge_componentwise(residuals)
    if result.passed:
        return result
    max_resid = _max_residual(lift, field, sub, gamma.time, t_samples, seed)
    return CheckResult(result.status, component=result.component,
                       witness=result.witness,
                       detail=f"max residual {max_resid:.3e}")


def _max_residual(lift, field: VectorField, sub, time: str, t_samples: int,
                  seed: int) -> float:
    rng = random.Random(seed)
    lo, hi = SAMPLE_RANGE
    worst = 0.0
    for _ in range(t_samples):
        t = rng.uniform(lo, hi)
        try:
            for lifted, comp in zip(lift, field.components):
                lhs = evaluate(differentiate(lifted, time), {time: t})
                rhs = evaluate(substitute(comp, sub), {time: t})
                worst = max(worst, abs(lhs - rhs))
        except DomainError:
            continue
    return worst
