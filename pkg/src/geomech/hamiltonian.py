"""Hamiltonian and Poisson formalism, plus the machinery of alternative
invariant structures: transported symplectic forms, invariant (1,1)
tensors, two-forms built from constants of motion, recursion operators
and Magri compatibility.

Sign conventions: the canonical symplectic form is omega = dq^i ^ dp_i
and Hamilton equations read dq/dt = dH/dp, dp/dt = -dH/dq, which makes
i_X omega = dH and X = Lambda(dH) mutually consistent with
Lambda = d/dq ^ d/dp.  (The opposite orientation also appears in the
literature; this engine never normalizes user input silently.)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .errors import (
    BadStructureConstantsError, ChartMismatchError, DegenerateOmegaError,
    NotPoissonError,
)
from .geomcalc import (
    Bivector, Chart, DiffForm, Tensor11, VectorField, chart, determinant,
    differential, exterior_derivative, fields_equal, identity_tensor,
    jacobiator_check, lie_derivative, mat_inverse, mat_mul, one_form,
    tensors_equal, zero_form,
)
from .results import CheckResult, merge_componentwise
from .symexpr import (
    DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL, Expr, ZERO, add, equal, mul,
    neg, rational, sym,
)
from .lagrangian import _DegenerateSystem, solve_linear


def phase_chart(m: int) -> Chart:
    if m == 1:
        return chart("T*Q", ("q", "p"))
    names = tuple(f"q{i+1}" for i in range(m)) + tuple(f"p{i+1}" for i in range(m))
    return chart(f"T*Q{m}", names)


@dataclass(frozen=True)
class CanonicalCotangent:
    chart: Chart
    theta: DiffForm
    omega: DiffForm
    Lambda: Bivector
    Delta: VectorField


def canonical_cotangent(m: int) -> CanonicalCotangent:
    """Liouville form, symplectic form, Poisson bivector and dilation
    field in adapted coordinates; d theta = -omega in this orientation."""
    if m < 1:
        raise ValueError("m must be at least 1")
    c = phase_chart(m)
    theta = one_form(c, [sym(c.coords[m + i]) for i in range(m)] + [ZERO] * m)
    omega = DiffForm(c, 2, {(i, m + i): rational(1) for i in range(m)})
    Lam = Bivector.from_upper(c, {(i, m + i): rational(1) for i in range(m)})
    Delta = VectorField(c, [ZERO] * m + [sym(c.coords[m + i]) for i in range(m)])
    return CanonicalCotangent(c, theta, omega, Lam, Delta)


@dataclass(frozen=True)
class HamiltonianSystem:
    """Phase chart, Hamiltonian, and the (default canonical) structures."""

    chart: Chart
    H: Expr
    omega: Optional[DiffForm] = None
    Lambda: Optional[Bivector] = None

    def __post_init__(self):
        if self.chart.dim % 2:
            raise ValueError("phase charts must be even-dimensional")
        m = self.chart.dim // 2
        if self.omega is None:
            object.__setattr__(self, "omega",
                               DiffForm(self.chart, 2,
                                        {(i, m + i): rational(1) for i in range(m)}))
        if self.Lambda is None:
            object.__setattr__(self, "Lambda", bivector_from_omega(self.omega))

    def validate(self, **eq_opts) -> CheckResult:
        """Lambda o omega-flat must be the identity when both are supplied."""
        composed = t_phi(self.Lambda, self.omega)
        return tensors_equal(composed, identity_tensor(self.chart), **eq_opts)


def omega_matrix(omega: DiffForm):
    """M[i][j] = omega(e_i, e_j)."""
    n = omega.chart.dim
    return tuple(tuple(omega.component(i, j) for j in range(n)) for i in range(n))


def bivector_from_omega(omega: DiffForm, funcs=None, seed: int = DEFAULT_SEED) -> Bivector:
    """Inverse bivector of a symplectic form: Lambda = -(M)^{-1} so that
    Lambda-sharp undoes omega-flat."""
    if omega.degree != 2:
        raise ValueError("expected a two-form")
    M = omega_matrix(omega)
    try:
        inv = mat_inverse(M, context="symplectic matrix", funcs=funcs, seed=seed)
    except Exception as exc:
        raise DegenerateOmegaError(str(exc)) from None
    return Bivector(omega.chart, [[neg(v) for v in row] for row in inv])


def omega_flat(omega: DiffForm, X: VectorField) -> DiffForm:
    """(omega-flat X)_j = omega(X, e_j) = i_X omega."""
    from .geomcalc import interior_product
    return interior_product(X, omega)


def hamiltonian_vf(sys: HamiltonianSystem, funcs=None,
                   seed: int = DEFAULT_SEED) -> VectorField:
    """Hamiltonian field through both routes, cross-checked.

    Route one solves i_X omega = dH as a linear system; route two
    contracts X = Lambda(dH).  The two must agree under the zero test;
    route two's field is returned.
    """
    dH = differential(sys.chart, sys.H)
    via_lambda = sys.Lambda.sharp(dH)
    n = sys.chart.dim
    M = omega_matrix(sys.omega)
    matrix = [[M[i][j] for i in range(n)] for j in range(n)]  # row j: sum_i X^i M_ij
    rhs = [dH.component(j) for j in range(n)]
    try:
        comps = solve_linear(matrix, rhs, funcs=funcs, seed=seed)
    except _DegenerateSystem as exc:
        raise DegenerateOmegaError(
            f"symplectic form has no certified pivot in column {exc.column}") from None
    via_omega = VectorField(sys.chart, comps)
    agreement = fields_equal(via_omega, via_lambda, funcs=funcs, seed=seed)
    if agreement.status == "fail":
        raise DegenerateOmegaError(
            "omega-route and Lambda-route disagree; omega and Lambda are inconsistent",
            witness=agreement.witness)
    return via_lambda


def poisson_bracket(f: Expr, g: Expr, Lam: Bivector) -> Expr:
    """{f, g} = Lambda(df, dg)."""
    return Lam.pairing(differential(Lam.chart, f), differential(Lam.chart, g))


@dataclass(frozen=True)
class StructureConstants:
    """c^k_{ij} for a finite-dimensional Lie algebra, stored exactly."""

    dim: int
    c: tuple

    @classmethod
    def from_table(cls, dim: int, entries) -> "StructureConstants":
        """entries: {(i, j, k): value} for [e_i, e_j] = c^k_{ij} e_k."""
        table = [[[Fraction(0)] * dim for _ in range(dim)] for _ in range(dim)]
        for (i, j, k), value in entries.items():
            table[i][j][k] = Fraction(value)
        return cls(dim, tuple(tuple(tuple(r) for r in plane) for plane in table))

    def validate(self) -> None:
        c = self.c
        d = self.dim
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    if c[i][j][k] != -c[j][i][k]:
                        raise BadStructureConstantsError(
                            "structure constants are not antisymmetric",
                            witness=(i, j, k))
        for i in range(d):
            for j in range(d):
                for k in range(d):
                    for l in range(d):
                        total = sum(c[i][j][m] * c[m][k][l]
                                    + c[j][k][m] * c[m][i][l]
                                    + c[k][i][m] * c[m][j][l]
                                    for m in range(d))
                        if total != 0:
                            raise BadStructureConstantsError(
                                "Jacobi identity fails",
                                witness=(i, j, k, l))


def so3_constants() -> StructureConstants:
    eps = {(0, 1, 2): 1, (1, 2, 0): 1, (2, 0, 1): 1,
           (1, 0, 2): -1, (2, 1, 0): -1, (0, 2, 1): -1}
    return StructureConstants.from_table(3, eps)


def lie_poisson(sc: StructureConstants, names: Sequence[str] | None = None) -> Bivector:
    """Linear Poisson bivector Lambda^{ij} = c^k_{ij} xi_k on the dual."""
    sc.validate()
    if names is None:
        names = tuple(f"xi{i+1}" for i in range(sc.dim))
    c = chart("g*", tuple(names))
    mat = [[add(*(mul(rational(sc.c[i][j][k]), sym(names[k]))
                  for k in range(sc.dim)))
            for j in range(sc.dim)] for i in range(sc.dim)]
    return Bivector(c, mat)


def t_phi(Lam: Bivector, omega_phi: DiffForm) -> Tensor11:
    """T = Lambda o omega_phi-flat as a (1,1) tensor.

    With the conventions above, T^i_k = sum_j Lambda^{ij} omega(e_k, e_j),
    so the canonical pair composes to the identity.
    """
    if Lam.chart != omega_phi.chart:
        raise ChartMismatchError(f"{Lam.chart} vs {omega_phi.chart}")
    if omega_phi.degree != 2:
        raise ValueError("expected a two-form")
    n = Lam.chart.dim
    M = omega_matrix(omega_phi)
    MT = tuple(tuple(M[j][i] for j in range(n)) for i in range(n))
    return Tensor11(Lam.chart, mat_mul([list(r) for r in Lam.mat], MT))


def horizontal_differential(f: Expr, T: Tensor11) -> DiffForm:
    """d_T f: X -> df(T X), matching the vertical differential convention."""
    return T.coapply(differential(T.chart, f))


def omega_from_constant(f: Expr, T: Tensor11) -> DiffForm:
    """omega_f = d d_T f, closed by construction."""
    return exterior_derivative(horizontal_differential(f, T))


def invariance_check(gamma: VectorField, target, funcs=None,
                     seed: int = DEFAULT_SEED, n_samples: int = DEFAULT_SAMPLES,
                     tol: float = DEFAULT_TOL) -> CheckResult:
    """L_Gamma target = 0 (Gamma(f) = 0 for scalars)."""
    eq_opts = dict(funcs=funcs, seed=seed, n_samples=n_samples, tol=tol)
    derived = lie_derivative(gamma, target)
    if isinstance(derived, Expr):
        return merge_componentwise([("value", equal(derived, ZERO, **eq_opts))])
    if isinstance(derived, VectorField):
        return fields_equal(derived, VectorField(gamma.chart, [ZERO] * gamma.chart.dim),
                            **eq_opts)
    if isinstance(derived, DiffForm):
        from .geomcalc import form_is_zero
        return form_is_zero(derived, **eq_opts)
    if isinstance(derived, Tensor11):
        zero = Tensor11(gamma.chart, [[ZERO] * gamma.chart.dim
                                      for _ in range(gamma.chart.dim)])
        return tensors_equal(derived, zero, **eq_opts)
    raise TypeError(f"cannot check invariance of {type(target).__name__}")


def recursion_operator(omega1: DiffForm, omega2: DiffForm, funcs=None,
                       seed: int = DEFAULT_SEED) -> Tensor11:
    """N = omega2-sharp o omega1-flat; satisfies omega2(N X, Y) = omega1(X, Y)."""
    if omega1.chart != omega2.chart:
        raise ChartMismatchError(f"{omega1.chart} vs {omega2.chart}")
    lam2 = bivector_from_omega(omega2, funcs=funcs, seed=seed)
    det1 = determinant(omega_matrix(omega1))
    if equal(det1, ZERO, funcs=funcs, seed=seed).is_equal:
        raise DegenerateOmegaError("first two-form is degenerate")
    return t_phi(lam2, omega1)


def trace_invariants(N: Tensor11, k_max: int) -> list:
    """tr(N^k) for k = 1..k_max; symmetric functions of the spectrum
    standing in for the eigenvalues themselves."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    out = []
    power = N
    for _ in range(k_max):
        out.append(power.trace())
        power = power.compose(N)
    return out


def magri_compatible(lam1: Bivector, lam2: Bivector, funcs=None,
                     seed: int = DEFAULT_SEED, n_samples: int = DEFAULT_SAMPLES,
                     tol: float = DEFAULT_TOL) -> CheckResult:
    """Magri compatibility: the sum of two Poisson structures is Poisson."""
    eq_opts = dict(funcs=funcs, seed=seed, n_samples=n_samples, tol=tol)
    first = jacobiator_check(lam1, **eq_opts)
    if not first.passed:
        raise NotPoissonError("first", witness=first.witness)
    second = jacobiator_check(lam2, **eq_opts)
    if not second.passed:
        raise NotPoissonError("second", witness=second.witness)
    return jacobiator_check(lam1 + lam2, **eq_opts)
