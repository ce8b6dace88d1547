"""Intrinsic Lagrangian formalism on a tangent-bundle structure.

Cartan forms, energy, regularity, and the tensorial Euler-Lagrange
equation i_Gamma omega_L = dE_L, solved symbolically by Gaussian
elimination over the expression field with zero-test-certified pivots.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .errors import DegenerateLagrangianError, DomainError, SingularJacobianError
from .geomcalc import (
    Diffeo, DiffForm, VectorField, differential, exterior_derivative,
    interior_product, lie_derivative, one_form,
)
from .results import CheckResult
from .symexpr import (
    DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL, EvalPoint, Expr, ZERO, add,
    differentiate, equal, evaluate, free_symbols, mul, neg, rational,
    substitute,
)
from .tangentstruct import TangentStructure, transport_structure, vertical_differential


@dataclass(frozen=True)
class LagrangianSystem:
    """A tangent-bundle structure together with a Lagrangian function."""

    ts: TangentStructure
    L: Expr

    def __post_init__(self):
        extra = free_symbols(self.L) - set(self.ts.chart.coords)
        # free parameters (masses, frequencies) are fine; chart handles the rest
        object.__setattr__(self, "_parameters", tuple(sorted(extra)))

    @property
    def chart(self):
        return self.ts.chart


def cartan_one_form(sys: LagrangianSystem) -> DiffForm:
    """theta_L = d_S L; in adapted coordinates (dL/dv^i) dq^i."""
    return vertical_differential(sys.L, sys.ts)


def lagrangian_two_form(sys: LagrangianSystem) -> DiffForm:
    """omega_L = -d theta_L, a closed two-form."""
    return exterior_derivative(cartan_one_form(sys)).scaled(rational(-1))


def energy(sys: LagrangianSystem) -> Expr:
    """E_L = Delta(L) - L."""
    return add(sys.ts.Delta(sys.L), neg(sys.L))


@dataclass(frozen=True)
class RegularityReport:
    status: str                      # "regular" | "degenerate"
    det: Expr
    witness: Optional[EvalPoint] = None
    degenerate_at: tuple = ()        # probe points where det vanishes

    @property
    def regular(self) -> bool:
        return self.status == "regular"


def fiber_hessian(sys: LagrangianSystem):
    """Hessian of L in the fiber (velocity) coordinates.

    Assumes the chart is structure-adapted: first half base, second
    half fiber, which is how every constructor in this package lays
    charts out.
    """
    fiber = sys.chart.coords[sys.ts.half_dim:]
    return tuple(tuple(differentiate(differentiate(sys.L, a), b) for b in fiber)
                 for a in fiber)


def regularity(sys: LagrangianSystem, funcs=None, seed: int = DEFAULT_SEED,
               n_samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL) -> RegularityReport:
    """Sample-point regularity with the symbolic Hessian determinant.

    Degeneracy is decided at random sample points ("regular on a dense
    open set"); isolated zeros of the determinant found on a small probe
    grid are reported as witnesses without flipping the status.
    """
    from .geomcalc import determinant

    det = determinant(fiber_hessian(sys))
    res = equal(det, ZERO, funcs=funcs, seed=seed, n_samples=n_samples, tol=tol)
    if res.is_equal:
        rng = random.Random(seed)
        names = sorted(free_symbols(det) | set(sys.chart.coords))
        witness = EvalPoint({n: rng.uniform(-2.0, 2.0) for n in names})
        return RegularityReport("degenerate", det, witness=witness)
    return RegularityReport("regular", det, degenerate_at=_probe_zeros(det, sys, funcs))


def _probe_zeros(det: Expr, sys: LagrangianSystem, funcs) -> tuple:
    names = sorted(free_symbols(det))
    if not names or len(names) > 4:
        return ()
    zeros = []
    for values in itertools.product((-1.0, 0.0, 1.0), repeat=len(names)):
        point = EvalPoint(dict(zip(names, values)))
        try:
            if abs(evaluate(det, point, funcs)) < 1e-12:
                zeros.append(point)
        except DomainError:
            continue
    return tuple(zeros)


class _DegenerateSystem(Exception):
    def __init__(self, column: int):
        self.column = column


def solve_linear(matrix: Sequence[Sequence[Expr]], rhs: Sequence[Expr], *,
                 funcs=None, seed: int = DEFAULT_SEED) -> list:
    """Gauss-Jordan over the expression field.

    A pivot is only accepted when the probabilistic zero test certifies
    it nonzero; if a column offers no certified pivot the system is
    reported degenerate.
    """
    n = len(rhs)
    aug = [list(row) + [b] for row, b in zip(matrix, rhs)]
    pivot_of_col = [0] * n
    used = set()
    for col in range(n):
        pivot = None
        for r in range(n):
            if r in used or aug[r][col] == ZERO:
                continue
            if equal(aug[r][col], ZERO, funcs=funcs, seed=seed).is_not_equal:
                pivot = r
                break
        if pivot is None:
            raise _DegenerateSystem(col)
        used.add(pivot)
        pivot_of_col[col] = pivot
        inv = aug[pivot][col] ** -1
        aug[pivot] = [mul(inv, v) for v in aug[pivot]]
        for r in range(n):
            if r == pivot or aug[r][col] == ZERO:
                continue
            factor = aug[r][col]
            aug[r] = [add(vr, neg(mul(factor, vp)))
                      for vr, vp in zip(aug[r], aug[pivot])]
    return [aug[pivot_of_col[col]][n] for col in range(n)]


def el_solve(sys: LagrangianSystem, funcs=None, seed: int = DEFAULT_SEED) -> VectorField:
    """The unique second-order field with i_Gamma omega_L = dE_L.

    Raises DegenerateLagrangianError when omega_L fails to pivot or the
    fiber Hessian vanishes identically, which is the implicit-equation
    regime handled by the submanifold view instead.
    """
    reg = regularity(sys, funcs=funcs, seed=seed)
    if not reg.regular:
        raise DegenerateLagrangianError("fiber Hessian determinant vanishes identically",
                                        witness=reg.witness, det=reg.det)
    omega = lagrangian_two_form(sys)
    n = sys.chart.dim
    # equations: sum_i Gamma^i omega(e_i, e_j) = (dE)_j
    matrix = [[omega.component(i, j) for i in range(n)] for j in range(n)]
    rhs = [differentiate(energy(sys), x) for x in sys.chart.coords]
    try:
        comps = solve_linear(matrix, rhs, funcs=funcs, seed=seed)
    except _DegenerateSystem as exc:
        raise DegenerateLagrangianError(
            f"Lagrangian two-form has no certified pivot in column {exc.column}",
            det=reg.det) from None
    return VectorField(sys.chart, comps)


def el_residual(sys: LagrangianSystem, gamma: VectorField) -> DiffForm:
    """L_Gamma theta_L - dL; zero exactly when Gamma solves the
    Euler-Lagrange equation (given the second-order condition)."""
    theta = cartan_one_form(sys)
    return lie_derivative(gamma, theta) - differential(sys.chart, sys.L)


def euler_lagrange_coordinate_residuals(sys: LagrangianSystem, gamma: VectorField):
    """Expanded coordinate residuals
    sum_j L_{v^i v^j} Gamma^{v^j} + sum_j L_{v^i q^j} v^j - L_{q^i}."""
    m = sys.ts.half_dim
    base = sys.chart.coords[:m]
    fiber = sys.chart.coords[m:]
    residuals = []
    for i in range(m):
        dLdvi = differentiate(sys.L, fiber[i])
        terms = []
        for j in range(m):
            terms.append(mul(differentiate(dLdvi, fiber[j]), gamma.components[m + j]))
            terms.append(mul(differentiate(dLdvi, base[j]), gamma.components[j]))
        terms.append(neg(differentiate(sys.L, base[i])))
        residuals.append(add(*terms))
    return tuple(residuals)


def transform_description(sys: LagrangianSystem, phi: Diffeo, funcs=None,
                          seed: int = DEFAULT_SEED) -> LagrangianSystem:
    """Carry the whole description to phi's target chart.

    The structure transports as in transport_structure and the
    Lagrangian composes with the inverse map, so a vanishing
    Euler-Lagrange residual stays zero.
    """
    ts_new = transport_structure(sys.ts, phi, funcs=funcs, seed=seed)
    L_new = substitute(sys.L, phi.inverse_subst())
    return LagrangianSystem(ts_new, L_new)
