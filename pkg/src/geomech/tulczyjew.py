"""Implicit differential equations as parametrized submanifolds.

The canonical isomorphism between the iterated bundles casts
Euler-Lagrange equations as an isotropic (Lagrangian, when regular)
submanifold of the tangent bundle of phase space.  Coordinate
conventions, fixed once here: the TT*Q-style ambient chart is ordered
(q, p, vq, vp) and the T*TQ-style chart (q, v, pq, pv).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import RankDeficientEmbeddingError
from .geomcalc import (
    Chart, Diffeo, DiffForm, VectorField, chart, form_is_zero,
    matrix_rank_check, one_form, pullback_form_along,
)
from .hamiltonian import HamiltonianSystem, hamiltonian_vf
from .results import CheckResult
from .symexpr import (
    DEFAULT_SEED, Expr, ZERO, differentiate, rational, sym,
)


def _block_names(prefix: str, m: int):
    if m == 1:
        return (prefix,)
    return tuple(f"{prefix}{i+1}" for i in range(m))


def double_phase_chart(m: int) -> Chart:
    """TT*Q-style chart (q, p, vq, vp)."""
    names = (_block_names("q", m) + _block_names("p", m)
             + _block_names("vq", m) + _block_names("vp", m))
    return chart(f"TT*Q{m}", names)


def cophase_tangent_chart(m: int) -> Chart:
    """T*TQ-style chart (q, v, pq, pv)."""
    names = (_block_names("q", m) + _block_names("v", m)
             + _block_names("pq", m) + _block_names("pv", m))
    return chart(f"T*TQ{m}", names)


def tangent_lift_symplectic_form(m: int) -> DiffForm:
    """The symplectic form dq^dvp + dvq^dp on the (q, p, vq, vp) chart."""
    c = double_phase_chart(m)
    comps = {}
    for i in range(m):
        comps[(i, 3 * m + i)] = rational(1)        # dq^i ^ dvp_i
        comps[(2 * m + i, m + i)] = rational(1)    # dvq^i ^ dp_i
    return DiffForm(c, 2, comps)


def cotangent_symplectic_form(m: int) -> DiffForm:
    """Canonical dq^dpq + dv^dpv on the (q, v, pq, pv) chart."""
    c = cophase_tangent_chart(m)
    comps = {}
    for i in range(m):
        comps[(i, 2 * m + i)] = rational(1)
        comps[(m + i, 3 * m + i)] = rational(1)
    return DiffForm(c, 2, comps)


def tau(m: int) -> Diffeo:
    """The coordinate permutation (q, p, vq, vp) -> (q, vq, vp, p).

    A symplectomorphism: it pulls the canonical two-form of the
    (q, v, pq, pv) chart back to the tangent-lift form above.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    src = double_phase_chart(m)
    dst = cophase_tangent_chart(m)
    q, p, vq, vp = (_block_names("q", m), _block_names("p", m),
                    _block_names("vq", m), _block_names("vp", m))
    qd, v, pq, pv = (_block_names("q", m), _block_names("v", m),
                     _block_names("pq", m), _block_names("pv", m))
    forward = ([sym(n) for n in q] + [sym(n) for n in vq]
               + [sym(n) for n in vp] + [sym(n) for n in p])
    inverse = ([sym(n) for n in qd] + [sym(n) for n in pv]
               + [sym(n) for n in v] + [sym(n) for n in pq])
    return Diffeo(src, dst, forward, inverse)


@dataclass(frozen=True)
class ImplicitEquation:
    """A submanifold of an ambient chart, stored as an embedding.

    Everything here arrives as an image (of a differential, of a
    Hamiltonian field), so the parametric description is primary.
    """

    ambient: Chart
    params: Chart
    embedding: tuple

    def __post_init__(self):
        if len(self.embedding) != self.ambient.dim:
            raise ValueError("embedding must provide every ambient coordinate")
        object.__setattr__(self, "embedding",
                           tuple(e if isinstance(e, Expr) else rational(e)
                                 for e in self.embedding))

    def jacobian(self):
        return tuple(tuple(differentiate(comp, x) for x in self.params.coords)
                     for comp in self.embedding)

    def rank_report(self, funcs=None, seed: int = DEFAULT_SEED,
                    samples: int = 16) -> CheckResult:
        """Immersion check: embedding Jacobian has full parameter rank."""
        return matrix_rank_check(self.jacobian(), self.params.dim,
                                 funcs=funcs, seed=seed, samples=samples)

    def graph_over(self, ambient_indices, funcs=None, seed: int = DEFAULT_SEED,
                   samples: int = 16) -> CheckResult:
        """Is the submanifold a graph over the selected ambient block?"""
        jac = self.jacobian()
        block = tuple(jac[i] for i in ambient_indices)
        return matrix_rank_check(block, self.params.dim, funcs=funcs,
                                 seed=seed, samples=samples)


def el_submanifold(L: Expr, tq_chart: Chart) -> ImplicitEquation:
    """The Euler-Lagrange submanifold p = dL/dv, vp = dL/dq.

    Works for degenerate Lagrangians too; that is the point of the
    implicit description.  The parameter chart is the (q, v) chart of L.
    """
    if tq_chart.dim % 2:
        raise ValueError("the Lagrangian chart must be even-dimensional")
    m = tq_chart.dim // 2
    base = tq_chart.coords[:m]
    fiber = tq_chart.coords[m:]
    ambient = double_phase_chart(m)
    embedding = ([sym(x) for x in base]
                 + [differentiate(L, v) for v in fiber]
                 + [sym(v) for v in fiber]
                 + [differentiate(L, x) for x in base])
    return ImplicitEquation(ambient, tq_chart, tuple(embedding))


def isotropy_check(ie: ImplicitEquation, omega_ambient: DiffForm, funcs=None,
                   seed: int = DEFAULT_SEED, **eq_opts) -> CheckResult:
    """Pullback of the ambient two-form along the embedding vanishes."""
    if omega_ambient.degree != 2:
        raise ValueError("isotropy is a two-form condition")
    if ie.ambient.dim % 2:
        raise ValueError("ambient chart must be even-dimensional")
    rank = ie.rank_report(funcs=funcs, seed=seed)
    if rank.status == "fail":
        raise RankDeficientEmbeddingError(
            f"embedding is not an immersion: {rank.detail}")
    pulled = pullback_form_along(ie.embedding, ie.params, ie.ambient, omega_ambient)
    return form_is_zero(pulled, funcs=funcs, seed=seed, **eq_opts)


@dataclass(frozen=True)
class FiberDerivativeReport:
    """The Legendre-type map (q, v) -> (q, dL/dv) with its regularity."""

    map_exprs: tuple
    regularity: "RegularityReport"

    @property
    def invertible(self) -> bool:
        return self.regularity.regular


def fiber_derivative(L: Expr, tq_chart: Chart, funcs=None,
                     seed: int = DEFAULT_SEED) -> FiberDerivativeReport:
    from .lagrangian import LagrangianSystem, regularity
    from .tangentstruct import canonical_structure_on

    m = tq_chart.dim // 2
    fiber = tq_chart.coords[m:]
    map_exprs = tuple(sym(x) for x in tq_chart.coords[:m]) \
        + tuple(differentiate(L, v) for v in fiber)
    sys = LagrangianSystem(canonical_structure_on(tq_chart), L)
    return FiberDerivativeReport(map_exprs, regularity(sys, funcs=funcs, seed=seed))


def pullback_structures(L: Expr, tq_chart: Chart) -> dict:
    """theta and Omega pulled back along the fiber derivative.

    theta_L = (dL/dv_i) dq^i always; Omega_L may degenerate (acquire a
    kernel) for non-regular L, e.g. L = q v gives Omega_L = 0.
    """
    from .hamiltonian import canonical_cotangent

    m = tq_chart.dim // 2
    can = canonical_cotangent(m)
    fd = fiber_derivative(L, tq_chart)
    theta_L = pullback_form_along(fd.map_exprs, tq_chart, can.chart, can.theta)
    omega_L = pullback_form_along(fd.map_exprs, tq_chart, can.chart, can.omega)
    return {"theta_L": theta_L, "Omega_L": omega_L}


def hamiltonian_graph(H: Expr, phase: Chart, funcs=None,
                      seed: int = DEFAULT_SEED) -> ImplicitEquation:
    """The image of the Hamiltonian vector field inside (q, p, vq, vp).

    Always a graph over (q, p): Hamiltonian dynamics is explicit.
    """
    m = phase.dim // 2
    sys = HamiltonianSystem(phase, H)
    X = hamiltonian_vf(sys, funcs=funcs, seed=seed)
    ambient = double_phase_chart(m)
    embedding = tuple(sym(x) for x in phase.coords) + X.components
    return ImplicitEquation(ambient, phase, embedding)
