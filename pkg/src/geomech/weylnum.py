"""Finite-dimensional realizations of Weyl commutation relations and
nonlinearly related symplectic vector-space structures.

Clock-and-shift pairs realize the commutation phase law exactly at any
dimension; truncated ladder matrices realize the canonical pair up to a
single corner artifact that is reported, never hidden.  hbar = 1
throughout: it only ever scales phases here.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimMismatchError, DomainError, InversionFailureError,
    TruncationOverflowError,
)
from .results import CheckResult
from .symexpr import (
    Expr, FunctionBindings, call, differentiate, evaluate, free_symbols,
    mul, sym,
)

UNITARITY_TOL = 1e-12


@dataclass(frozen=True)
class DenseOp:
    """Immutable complex dense matrix with max-norm tolerance arithmetic."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("DenseOp entries must be square")
        if not np.all(np.isfinite(arr)):
            raise ValueError("DenseOp entries must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> "DenseOp":
        return DenseOp(self.entries.conj().T)

    def __matmul__(self, other: "DenseOp") -> "DenseOp":
        if self.dim != other.dim:
            raise DimMismatchError(f"{self.dim} vs {other.dim}")
        return DenseOp(self.entries @ other.entries)

    def __add__(self, other: "DenseOp") -> "DenseOp":
        return DenseOp(self.entries + other.entries)

    def __sub__(self, other: "DenseOp") -> "DenseOp":
        return DenseOp(self.entries - other.entries)

    def scaled(self, factor: complex) -> "DenseOp":
        return DenseOp(self.entries * factor)

    def power(self, k: int) -> "DenseOp":
        return DenseOp(np.linalg.matrix_power(self.entries, k))

    def norm_max(self) -> float:
        return float(np.abs(self.entries).max())

    def is_unitary(self, tol: float = UNITARITY_TOL) -> bool:
        probe = self.entries.conj().T @ self.entries - np.eye(self.dim)
        return float(np.abs(probe).max()) <= tol

    def is_hermitian(self, tol: float = UNITARITY_TOL) -> bool:
        return float(np.abs(self.entries - self.entries.conj().T).max()) <= tol


def identity_op(dim: int) -> DenseOp:
    return DenseOp(np.eye(dim, dtype=np.complex128))


def clock_shift(d: int) -> dict:
    """Clock U = diag(1, zeta, ..., zeta^{d-1}) and cyclic shift V.

    V e_j = e_{j+1 mod d}, so U V = zeta V U exactly: the group
    commutator U V U^-1 V^-1 is the global phase zeta.
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    zeta = cmath.exp(2j * math.pi / d)
    U = np.diag([zeta ** k for k in range(d)]).astype(np.complex128)
    V = np.zeros((d, d), dtype=np.complex128)
    for j in range(d):
        V[(j + 1) % d, j] = 1.0
    return {"U": DenseOp(U), "V": DenseOp(V), "zeta": zeta}


def weyl_commutation_check(U: DenseOp, V: DenseOp, phase: complex,
                           tol: float = UNITARITY_TOL) -> CheckResult:
    """max-norm test of U V = phase * V U."""
    if U.dim != V.dim:
        raise DimMismatchError(f"{U.dim} vs {V.dim}")
    deviation = (U @ V - (V @ U).scaled(phase)).norm_max()
    if deviation <= tol:
        return CheckResult("pass", detail=f"max deviation {deviation:.3e}")
    return CheckResult("fail", detail=f"max deviation {deviation:.3e}")


def weyl_word(U: DenseOp, V: DenseOp, a: int, b: int) -> DenseOp:
    """The group element W(a, b) = V^a U^b.

    The first slot translates (shift), the second modulates (clock);
    with this ordering the exchange law reads
    W(a,b) W(c,d) = zeta^{b c - a d} W(c,d) W(a,b).
    """
    return V.power(a) @ U.power(b)


def phase_law_check(d: int, tol: float = UNITARITY_TOL) -> CheckResult:
    """Exhaustive exchange-phase law over all pairs of words for dimension d."""
    ops = clock_shift(d)
    U, V, zeta = ops["U"], ops["V"], ops["zeta"]
    u_pow = [U.power(k) for k in range(d)]
    v_pow = [V.power(k) for k in range(d)]
    words = [[v_pow[a] @ u_pow[b] for b in range(d)] for a in range(d)]
    worst = 0.0
    for a in range(d):
        for b in range(d):
            for c in range(d):
                for e in range(d):
                    phase = zeta ** ((b * c - a * e) % d)
                    lhs = words[a][b] @ words[c][e]
                    rhs = (words[c][e] @ words[a][b]).scaled(phase)
                    worst = max(worst, (lhs - rhs).norm_max())
                    if worst > tol:
                        return CheckResult(
                            "fail", component=f"(a,b,c,d)=({a},{b},{c},{e})",
                            detail=f"max deviation {worst:.3e}")
    return CheckResult("pass", detail=f"max deviation {worst:.3e}")


def truncated_fock(n_max: int) -> dict:
    """Ladder matrices on the first n_max number states.

    [a, a+] equals the identity except the bottom-right entry, which the
    truncation forces to 1 - n_max; that artifact is part of the
    contract, not an error.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    a = np.zeros((n_max, n_max), dtype=np.complex128)
    for n in range(1, n_max):
        a[n - 1, n] = math.sqrt(n)
    a_op = DenseOp(a)
    a_dag = a_op.dagger()
    return {"a": a_op, "a_dag": a_dag, "N": a_dag @ a_op}


def fock_state(n: int, a_dag: DenseOp, vacuum: np.ndarray) -> np.ndarray:
    """|n> = (a+)^n |0> / sqrt(n!), a unit-norm number eigenvector."""
    if n >= a_dag.dim:
        raise TruncationOverflowError(f"|{n}> does not fit in dimension {a_dag.dim}")
    state = np.asarray(vacuum, dtype=np.complex128)
    for _ in range(n):
        state = a_dag.entries @ state
    return state / math.sqrt(math.factorial(n))


class NonlinearStructure:
    """The reparametrized linear structure carried by (q, p) -> (q K(|q|), p).

    K is a one-variable expression; the regularity quantity
    K(|q|) + q K'(|q|) sign(q) must stay nonzero for the map to be a
    diffeomorphism (q = 0 is a documented puncture when K involves
    |q|-type kinks).  The base-coordinate inverse comes either from a
    supplied closed form or from monotone bisection.
    """

    def __init__(self, K: Expr, inverse_expr: Optional[Expr] = None,
                 funcs: Optional[FunctionBindings | dict] = None):
        self.K = K
        free = free_symbols(K)
        if len(free) > 1:
            raise ValueError(f"K must use one variable, got {sorted(free)}")
        self.var = next(iter(free)) if free else "u"
        self.inverse_expr = inverse_expr
        if inverse_expr is not None:
            inv_free = free_symbols(inverse_expr)
            if len(inv_free) > 1:
                raise ValueError("inverse expression must use one variable")
            self.inverse_var = next(iter(inv_free)) if inv_free else "Q"
        self.funcs = funcs if funcs is None or isinstance(funcs, FunctionBindings) \
            else FunctionBindings(funcs)

    # q K(|q|) and its regularity expression, symbolically
    def forward_base_expr(self, name: str = "q") -> Expr:
        from .symexpr import substitute
        q = sym(name)
        return mul(q, substitute(self.K, {self.var: call("abs", q)}))

    def regularity_expr(self, name: str = "q") -> Expr:
        return differentiate(self.forward_base_expr(name), name)

    def _k_value(self, u: float) -> float:
        return evaluate(self.K, {self.var: u}, self.funcs)

    def forward_base(self, q: float) -> float:
        return q * self._k_value(abs(q))

    def forward(self, z: Sequence[float]) -> tuple:
        q, p = z
        return (self.forward_base(q), float(p))

    def inverse_base(self, Q: float) -> float:
        if self.inverse_expr is not None:
            return evaluate(self.inverse_expr, {self.inverse_var: Q}, self.funcs)
        return self._bisect(Q)

    def inverse(self, z: Sequence[float]) -> tuple:
        Q, P = z
        return (self.inverse_base(Q), float(P))

    def _bisect(self, target: float, tol: float = 1e-12, max_iter: int = 200) -> float:
        """Monotone bisection; the bracket grows geometrically from 0."""
        if target == 0.0:
            return 0.0
        try:
            span = 1.0
            for _ in range(60):
                lo, hi = -span, span
                flo = self.forward_base(lo) - target
                fhi = self.forward_base(hi) - target
                if flo == 0.0:
                    return lo
                if fhi == 0.0:
                    return hi
                if flo * fhi < 0.0:
                    break
                span *= 2.0
            else:
                raise InversionFailureError(
                    f"could not bracket {target!r}", point=target)
            for _ in range(max_iter):
                mid = 0.5 * (lo + hi)
                fmid = self.forward_base(mid) - target
                if fmid == 0.0 or (hi - lo) < tol:
                    return mid
                if flo * fmid < 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fmid
            return 0.5 * (lo + hi)
        except DomainError as exc:
            raise InversionFailureError(str(exc), point=target) from None

    def regularity_check(self, samples: int = 16, seed: int = 7) -> CheckResult:
        """Nonvanishing of K(|q|) + q K'(|q|) sign(q) at sampled q != 0."""
        import random

        from .symexpr import SAMPLE_RANGE

        expr = self.regularity_expr()
        rng = random.Random(seed)
        lo, hi = SAMPLE_RANGE
        checked = 0
        for _ in range(50 * samples):
            if checked == samples:
                break
            q = rng.uniform(lo, hi)
            if q == 0.0:
                continue
            try:
                value = evaluate(expr, {"q": q}, self.funcs)
            except DomainError:
                continue
            checked += 1
            if abs(value) < 1e-12:
                from .symexpr import EvalPoint
                return CheckResult("fail", component="regularity",
                                   witness=EvalPoint({"q": q}))
        if checked < samples:
            return CheckResult("undecided", component="regularity")
        return CheckResult("pass")


def nonlinear_add(s: NonlinearStructure, z1: Sequence[float],
                  z2: Sequence[float]) -> tuple:
    """(q,p) +_phi (q',p') = phi^{-1}(phi(q,p) + phi(q',p'))."""
    Q1, P1 = s.forward(z1)
    Q2, P2 = s.forward(z2)
    return s.inverse((Q1 + Q2, P1 + P2))


def nonlinear_scale(s: NonlinearStructure, a: float, z: Sequence[float]) -> tuple:
    """a ._phi (q,p) = phi^{-1}(a * phi(q,p))."""
    Q, P = s.forward(z)
    return s.inverse((a * Q, a * P))


@dataclass(frozen=True)
class TranslationReport:
    table: tuple              # (x, x +_phi beta) pairs
    group_residual: float
    passed: bool


def nonlinear_translation_action(s: NonlinearStructure, beta: float,
                                 grid: Sequence[float], beta2: Optional[float] = None,
                                 tol: float = 1e-9) -> TranslationReport:
    """Tabulate x -> x +_phi beta and verify the translation group law.

    Shifting by beta then beta2 must agree pointwise with shifting by
    beta +_phi beta2.
    """
    if beta2 is None:
        beta2 = beta
    shifted = []
    worst = 0.0
    combined = nonlinear_add(s, (beta, 0.0), (beta2, 0.0))[0]
    for x in grid:
        once = nonlinear_add(s, (float(x), 0.0), (beta, 0.0))[0]
        shifted.append((float(x), once))
        twice = nonlinear_add(s, (once, 0.0), (beta2, 0.0))[0]
        direct = nonlinear_add(s, (float(x), 0.0), (combined, 0.0))[0]
        worst = max(worst, abs(twice - direct))
    return TranslationReport(tuple(shifted), worst, worst <= tol)
