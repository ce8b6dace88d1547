"""Chart-level tensor calculus.

Differential forms, vector fields, (1,1) tensors and bivectors with
expression components over a fixed chart, plus the exterior derivative,
wedge, interior product, Lie bracket/derivative, Nijenhuis tensor,
jacobiator, and transport under diffeomorphisms.  Everything is
per-chart and coordinate-explicit; there is no intrinsic manifold
layer.  All values are immutable and all operations pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Optional, Sequence

from .errors import (
    ChartMismatchError, DegreeOverflowError, SingularJacobianError,
    ZeroDegreeError,
)
from .results import CheckResult, merge_componentwise
from .symexpr import (
    DEFAULT_SAMPLES, DEFAULT_SEED, DEFAULT_TOL, Expr, ONE, ZERO, add,
    differentiate, equal, mul, neg, rational, substitute, sym, to_text,
)


@dataclass(frozen=True)
class Chart:
    """An ordered list of coordinate names modelling a local R^n."""

    name: str
    coords: tuple

    def __post_init__(self):
        if len(self.coords) < 1:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise ValueError(f"duplicate coordinate names in chart '{self.name}'")
        object.__setattr__(self, "coords", tuple(self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def index(self, coord: str) -> int:
        return self.coords.index(coord)

    def __str__(self):
        return f"{self.name}({', '.join(self.coords)})"


def chart(name: str, coords: Iterable[str]) -> Chart:
    return Chart(name, tuple(coords))


def _require_same_chart(a, b):
    if a.chart != b.chart:
        raise ChartMismatchError(f"{a.chart} vs {b.chart}")


def _coerce_expr(x) -> Expr:
    return x if isinstance(x, Expr) else rational(x)


class VectorField:
    """X = X^i d/dx^i with expression components."""

    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components: Sequence):
        if len(components) != chart.dim:
            raise ValueError(f"expected {chart.dim} components, got {len(components)}")
        self.chart = chart
        self.components = tuple(_coerce_expr(c) for c in components)

    def __call__(self, f: Expr) -> Expr:
        """Directional derivative X(f)."""
        return add(*(mul(c, differentiate(f, x))
                     for c, x in zip(self.components, self.chart.coords)))

    def __add__(self, other):
        _require_same_chart(self, other)
        return VectorField(self.chart, tuple(add(a, b) for a, b in
                                             zip(self.components, other.components)))

    def __sub__(self, other):
        _require_same_chart(self, other)
        return VectorField(self.chart, tuple(add(a, neg(b)) for a, b in
                                             zip(self.components, other.components)))

    def scaled(self, factor) -> "VectorField":
        factor = _coerce_expr(factor)
        return VectorField(self.chart, tuple(mul(factor, c) for c in self.components))

    def __eq__(self, other):
        return (isinstance(other, VectorField) and self.chart == other.chart
                and self.components == other.components)

    def __hash__(self):
        return hash((self.chart, self.components))

    def __str__(self):
        parts = [f"({to_text(c)}) d/d{x}" for c, x in
                 zip(self.components, self.chart.coords) if c != ZERO]
        return " + ".join(parts) if parts else "0"


def coordinate_field(chart: Chart, coord: str) -> VectorField:
    comps = [ZERO] * chart.dim
    comps[chart.index(coord)] = ONE
    return VectorField(chart, comps)


class DiffForm:
    """Degree-k form stored sparsely on strictly increasing index tuples."""

    __slots__ = ("chart", "degree", "components")

    def __init__(self, chart: Chart, degree: int, components: Mapping = ()):
        if not 0 <= degree <= chart.dim:
            raise DegreeOverflowError(f"degree {degree} on {chart.dim}-dim chart")
        self.chart = chart
        self.degree = degree
        clean = {}
        items = components.items() if isinstance(components, Mapping) else components
        for idx, value in items:
            idx = tuple(idx)
            value = _coerce_expr(value)
            if len(idx) != degree:
                raise ValueError(f"index {idx} does not match degree {degree}")
            sign, sorted_idx = _sort_index(idx)
            if sign == 0:
                continue
            value = value if sign == 1 else neg(value)
            prev = clean.get(sorted_idx)
            value = add(prev, value) if prev is not None else value
            if value == ZERO:
                clean.pop(sorted_idx, None)
            else:
                clean[sorted_idx] = value
        self.components = dict(sorted(clean.items()))

    def component(self, *idx) -> Expr:
        """Component at an arbitrary index tuple, antisymmetry applied."""
        sign, sorted_idx = _sort_index(tuple(idx))
        if sign == 0:
            return ZERO
        value = self.components.get(sorted_idx, ZERO)
        return value if sign == 1 else neg(value)

    @property
    def is_zero_form(self) -> bool:
        return not self.components

    def scalar(self) -> Expr:
        if self.degree != 0:
            raise ValueError("not a 0-form")
        return self.components.get((), ZERO)

    def __add__(self, other):
        _require_same_chart(self, other)
        if self.degree != other.degree:
            raise ValueError("cannot add forms of different degrees")
        merged = dict(self.components)
        out = list(merged.items()) + list(other.components.items())
        return DiffForm(self.chart, self.degree, out)

    def __sub__(self, other):
        return self + other.scaled(rational(-1))

    def scaled(self, factor) -> "DiffForm":
        factor = _coerce_expr(factor)
        return DiffForm(self.chart, self.degree,
                        {i: mul(factor, v) for i, v in self.components.items()})

    def __eq__(self, other):
        return (isinstance(other, DiffForm) and self.chart == other.chart
                and self.degree == other.degree and self.components == other.components)

    def __hash__(self):
        return hash((self.chart, self.degree, tuple(self.components.items())))

    def __str__(self):
        if not self.components:
            return "0"
        names = self.chart.coords
        parts = []
        for idx, value in self.components.items():
            basis = "∧".join(f"d{names[i]}" for i in idx) or "1"
            parts.append(f"({to_text(value)}) {basis}".strip())
        return " + ".join(parts)


def _sort_index(idx: tuple):
    """Sort an index tuple, returning (parity sign, sorted tuple); 0 on repeats."""
    if len(set(idx)) != len(idx):
        return 0, idx
    inv = sum(1 for a in range(len(idx)) for b in range(a + 1, len(idx))
              if idx[a] > idx[b])
    return (-1 if inv % 2 else 1), tuple(sorted(idx))


def zero_form(chart: Chart, degree: int) -> DiffForm:
    return DiffForm(chart, degree, {})


def scalar_form(chart: Chart, value) -> DiffForm:
    return DiffForm(chart, 0, {(): _coerce_expr(value)})


def one_form(chart: Chart, components: Sequence) -> DiffForm:
    return DiffForm(chart, 1, {(i,): c for i, c in enumerate(components)})


def differential(chart: Chart, f) -> DiffForm:
    """df as a 1-form."""
    f = _coerce_expr(f)
    return one_form(chart, [differentiate(f, x) for x in chart.coords])


class Tensor11:
    """(1,1) tensor T = T^i_j d/dx^i (x) dx^j; rows[i][j] = T^i_j."""

    __slots__ = ("chart", "rows")

    def __init__(self, chart: Chart, rows: Sequence[Sequence]):
        n = chart.dim
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"expected a {n}x{n} component matrix")
        self.chart = chart
        self.rows = tuple(tuple(_coerce_expr(v) for v in r) for r in rows)

    def apply(self, X: VectorField) -> VectorField:
        _require_same_chart(self, X)
        n = self.chart.dim
        comps = [add(*(mul(self.rows[i][j], X.components[j]) for j in range(n)))
                 for i in range(n)]
        return VectorField(self.chart, comps)

    def coapply(self, alpha: DiffForm) -> DiffForm:
        """Transpose action on 1-forms: (T* a)_j = a_i T^i_j."""
        _require_same_chart(self, alpha)
        if alpha.degree != 1:
            raise ValueError("coapply expects a 1-form")
        n = self.chart.dim
        comps = [add(*(mul(alpha.component(i), self.rows[i][j]) for i in range(n)))
                 for j in range(n)]
        return one_form(self.chart, comps)

    def compose(self, other: "Tensor11") -> "Tensor11":
        _require_same_chart(self, other)
        return Tensor11(self.chart, mat_mul(self.rows, other.rows))

    def __add__(self, other):
        _require_same_chart(self, other)
        return Tensor11(self.chart, [[add(a, b) for a, b in zip(ra, rb)]
                                     for ra, rb in zip(self.rows, other.rows)])

    def __sub__(self, other):
        return self + other.scaled(rational(-1))

    def scaled(self, factor) -> "Tensor11":
        factor = _coerce_expr(factor)
        return Tensor11(self.chart, [[mul(factor, v) for v in r] for r in self.rows])

    def trace(self) -> Expr:
        return add(*(self.rows[i][i] for i in range(self.chart.dim)))

    def power(self, k: int) -> "Tensor11":
        result = identity_tensor(self.chart)
        for _ in range(k):
            result = result.compose(self)
        return result

    def __eq__(self, other):
        return (isinstance(other, Tensor11) and self.chart == other.chart
                and self.rows == other.rows)

    def __hash__(self):
        return hash((self.chart, self.rows))

    def __str__(self):
        return "[" + "; ".join(", ".join(to_text(v) for v in r) for r in self.rows) + "]"


def identity_tensor(chart: Chart) -> Tensor11:
    n = chart.dim
    return Tensor11(chart, [[ONE if i == j else ZERO for j in range(n)]
                            for i in range(n)])


class Bivector:
    """Antisymmetric (2,0) tensor; mat[i][j] with mat[j][i] = -mat[i][j]."""

    __slots__ = ("chart", "mat")

    def __init__(self, chart: Chart, mat: Sequence[Sequence]):
        n = chart.dim
        if len(mat) != n or any(len(r) != n for r in mat):
            raise ValueError(f"expected a {n}x{n} component matrix")
        self.chart = chart
        self.mat = tuple(tuple(_coerce_expr(v) for v in r) for r in mat)

    @classmethod
    def from_upper(cls, chart: Chart, upper: Mapping) -> "Bivector":
        """Build from {(i, j): value} entries with i < j."""
        n = chart.dim
        mat = [[ZERO] * n for _ in range(n)]
        for (i, j), value in upper.items():
            value = _coerce_expr(value)
            if i == j:
                raise ValueError("diagonal bivector entries must vanish")
            if i > j:
                i, j, value = j, i, neg(value)
            mat[i][j] = add(mat[i][j], value)
            mat[j][i] = neg(mat[i][j])
        return cls(chart, mat)

    def pairing(self, alpha: DiffForm, beta: DiffForm) -> Expr:
        """Lambda(alpha, beta) for 1-forms."""
        _require_same_chart(self, alpha)
        _require_same_chart(self, beta)
        n = self.chart.dim
        return add(*(mul(alpha.component(i), self.mat[i][j], beta.component(j))
                     for i in range(n) for j in range(n)))

    def sharp(self, alpha: DiffForm) -> VectorField:
        """X^i = Lambda^{ij} a_j (the i_alpha Lambda contraction)."""
        _require_same_chart(self, alpha)
        if alpha.degree != 1:
            raise ValueError("sharp expects a 1-form")
        n = self.chart.dim
        comps = [add(*(mul(self.mat[i][j], alpha.component(j)) for j in range(n)))
                 for i in range(n)]
        return VectorField(self.chart, comps)

    def __add__(self, other):
        _require_same_chart(self, other)
        return Bivector(self.chart, [[add(a, b) for a, b in zip(ra, rb)]
                                     for ra, rb in zip(self.mat, other.mat)])

    def scaled(self, factor) -> "Bivector":
        factor = _coerce_expr(factor)
        return Bivector(self.chart, [[mul(factor, v) for v in r] for r in self.mat])

    def antisymmetry_check(self, **eq_opts) -> CheckResult:
        n = self.chart.dim
        names = self.chart.coords
        pairs = []
        for i in range(n):
            for j in range(i, n):
                pairs.append((f"{names[i]},{names[j]}",
                              equal(self.mat[i][j], neg(self.mat[j][i]), **eq_opts)))
        return merge_componentwise(pairs)

    def __eq__(self, other):
        return (isinstance(other, Bivector) and self.chart == other.chart
                and self.mat == other.mat)

    def __hash__(self):
        return hash((self.chart, self.mat))

    def __str__(self):
        names = self.chart.coords
        parts = [f"({to_text(self.mat[i][j])}) d/d{names[i]}∧d/d{names[j]}"
                 for i in range(self.chart.dim) for j in range(i + 1, self.chart.dim)
                 if self.mat[i][j] != ZERO]
        return " + ".join(parts) if parts else "0"


# --- expression matrices -----------------------------------------------------

def mat_mul(a, b):
    n, m, p = len(a), len(b), len(b[0])
    return tuple(tuple(add(*(mul(a[i][k], b[k][j]) for k in range(m)))
                       for j in range(p)) for i in range(n))


def mat_vec(a, v):
    return tuple(add(*(mul(a[i][k], v[k]) for k in range(len(v))))
                 for i in range(len(a)))


def determinant(rows) -> Expr:
    """Laplace expansion; fine for the small charts this engine targets."""
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return add(mul(rows[0][0], rows[1][1]), neg(mul(rows[0][1], rows[1][0])))
    total = []
    for j in range(n):
        if rows[0][j] == ZERO:
            continue
        minor = [[rows[i][k] for k in range(n) if k != j] for i in range(1, n)]
        term = mul(rows[0][j], determinant(minor))
        total.append(term if j % 2 == 0 else neg(term))
    return add(*total)


def adjugate(rows):
    n = len(rows)
    if n == 1:
        return ((ONE,),)
    out = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[rows[r][c] for c in range(n) if c != j]
                     for r in range(n) if r != i]
            cof = determinant(minor)
            out[j][i] = cof if (i + j) % 2 == 0 else neg(cof)
    return tuple(tuple(r) for r in out)


def mat_inverse(rows, *, context: str = "matrix", funcs=None,
                seed: int = DEFAULT_SEED):
    """Symbolic inverse via adjugate/determinant.

    Raises SingularJacobianError when the determinant is (probabilistically)
    identically zero; an undecidable determinant is let through, since the
    caller's diffeomorphism invariant asserts nonsingularity.
    """
    det = determinant(rows)
    res = equal(det, ZERO, funcs=funcs, seed=seed)
    if res.is_equal:
        raise SingularJacobianError(f"{context}: determinant vanishes identically",
                                    point=res.witness)
    adj = adjugate(rows)
    det_inv = det ** -1
    return tuple(tuple(mul(v, det_inv) for v in r) for r in adj)


# --- exterior calculus --------------------------------------------------------

def exterior_derivative(omega: DiffForm) -> DiffForm:
    if omega.degree >= omega.chart.dim:
        raise DegreeOverflowError(
            f"d of a degree-{omega.degree} form on a {omega.chart.dim}-dim chart")
    chart_ = omega.chart
    out = []
    for idx, value in omega.components.items():
        for j, x in enumerate(chart_.coords):
            dv = differentiate(value, x)
            if dv == ZERO:
                continue
            out.append(((j,) + idx, dv))
    return DiffForm(chart_, omega.degree + 1, out)


def wedge(alpha: DiffForm, beta: DiffForm) -> DiffForm:
    _require_same_chart(alpha, beta)
    k = alpha.degree + beta.degree
    if k > alpha.chart.dim:
        raise DegreeOverflowError(f"wedge of degrees {alpha.degree} and {beta.degree} "
                                  f"on a {alpha.chart.dim}-dim chart")
    out = []
    for ia, va in alpha.components.items():
        for ib, vb in beta.components.items():
            out.append((ia + ib, mul(va, vb)))
    return DiffForm(alpha.chart, k, out)


def interior_product(X: VectorField, omega: DiffForm) -> DiffForm:
    _require_same_chart(X, omega)
    if omega.degree < 1:
        raise ZeroDegreeError("interior product needs a form of degree >= 1")
    out = []
    for idx, value in omega.components.items():
        for t, i in enumerate(idx):
            coeff = X.components[i]
            if coeff == ZERO:
                continue
            reduced = idx[:t] + idx[t + 1:]
            term = mul(coeff, value)
            out.append((reduced, term if t % 2 == 0 else neg(term)))
    return DiffForm(omega.chart, omega.degree - 1, out)


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    _require_same_chart(X, Y)
    comps = [add(X(Y.components[i]), neg(Y(X.components[i])))
             for i in range(X.chart.dim)]
    return VectorField(X.chart, comps)


def lie_derivative(X: VectorField, target, funcs=None):
    """Lie derivative along X of a scalar, field, form or (1,1) tensor.

    Forms go through the Cartan identity L_X = i_X d + d i_X; (1,1)
    tensors through (L_X T)(Y) = [X, T(Y)] - T([X, Y]) on coordinate
    fields; vector fields through the bracket.
    """
    if isinstance(target, Expr):
        return X(target)
    if isinstance(target, VectorField):
        return lie_bracket(X, target)
    if isinstance(target, DiffForm):
        _require_same_chart(X, target)
        if target.degree == 0:
            return scalar_form(X.chart, X(target.scalar()))
        inner = interior_product(X, target)
        result = exterior_derivative(inner)
        if target.degree < target.chart.dim:
            result = result + interior_product(X, exterior_derivative(target))
        return result
    if isinstance(target, Tensor11):
        _require_same_chart(X, target)
        n = X.chart.dim
        cols = []
        for j, xj in enumerate(X.chart.coords):
            ej = coordinate_field(X.chart, xj)
            tej = target.apply(ej)
            col = lie_bracket(X, tej) - target.apply(lie_bracket(X, ej))
            cols.append(col.components)
        rows = [[cols[j][i] for j in range(n)] for i in range(n)]
        return Tensor11(X.chart, rows)
    raise TypeError(f"cannot take a Lie derivative of {type(target).__name__}")


def nijenhuis(S: Tensor11):
    """Components N^i_{jk} of the Nijenhuis tensor of S.

    N(X, Y) = [SX, SY] - S[SX, Y] - S[X, SY] + S^2 [X, Y], evaluated on
    coordinate fields.  Returned as a plain nested tuple indexed
    [i][j][k]; only the zero test consumes it.
    """
    chart_ = S.chart
    n = chart_.dim
    basis = [coordinate_field(chart_, x) for x in chart_.coords]
    s_basis = [S.apply(e) for e in basis]
    comps = [[[ZERO] * n for _ in range(n)] for _ in range(n)]
    for j in range(n):
        for k in range(j + 1, n):
            # [e_j, e_k] = 0 for coordinate fields, so the S^2 term drops
            value = (lie_bracket(s_basis[j], s_basis[k])
                     - S.apply(lie_bracket(s_basis[j], basis[k]))
                     - S.apply(lie_bracket(basis[j], s_basis[k])))
            for i in range(n):
                comps[i][j][k] = value.components[i]
                comps[i][k][j] = neg(value.components[i])
    return tuple(tuple(tuple(r) for r in plane) for plane in comps)


def jacobiator(Lam: Bivector):
    """J^{ijk} = sum over cyclic (i,j,k) of Lambda^{il} d_l Lambda^{jk}.

    Identically zero exactly when Lambda is Poisson; agrees with the
    Schouten self-bracket up to the fixed antisymmetrization factor 1/2.
    Returned as {(i, j, k): Expr} on strictly increasing triples.
    """
    chart_ = Lam.chart
    n = chart_.dim
    out = {}
    for i, j, k in combinations(range(n), 3):
        terms = []
        for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
            for l, x in enumerate(chart_.coords):
                if Lam.mat[a][l] == ZERO:
                    continue
                terms.append(mul(Lam.mat[a][l], differentiate(Lam.mat[b][c], x)))
        out[(i, j, k)] = add(*terms)
    return out


def jacobiator_check(Lam: Bivector, **eq_opts) -> CheckResult:
    names = Lam.chart.coords
    pairs = []
    for (i, j, k), value in jacobiator(Lam).items():
        pairs.append((f"J^{{{names[i]},{names[j]},{names[k]}}}",
                      equal(value, ZERO, **eq_opts)))
    return merge_componentwise(pairs)


# --- diffeomorphisms ----------------------------------------------------------

@dataclass(frozen=True)
class Diffeo:
    """Forward and inverse coordinate maps between two charts.

    ``forward`` expresses dst coordinates in src coordinates and
    ``inverse`` the other way around.  No symbolic inversion is ever
    attempted; the inverse must be supplied.
    """

    src: Chart
    dst: Chart
    forward: tuple
    inverse: tuple

    def __post_init__(self):
        if self.src.dim != self.dst.dim:
            raise ChartMismatchError("diffeomorphism between charts of different dimension")
        if len(self.forward) != self.dst.dim or len(self.inverse) != self.src.dim:
            raise ValueError("component count does not match chart dimension")
        object.__setattr__(self, "forward", tuple(_coerce_expr(c) for c in self.forward))
        object.__setattr__(self, "inverse", tuple(_coerce_expr(c) for c in self.inverse))

    def inverted(self) -> "Diffeo":
        return Diffeo(self.dst, self.src, self.inverse, self.forward)

    def forward_subst(self) -> dict:
        """dst-name -> expr in src coordinates."""
        return dict(zip(self.dst.coords, self.forward))

    def inverse_subst(self) -> dict:
        """src-name -> expr in dst coordinates."""
        return dict(zip(self.src.coords, self.inverse))

    def validate(self, funcs=None, seed: int = DEFAULT_SEED,
                 n_samples: int = DEFAULT_SAMPLES, tol: float = DEFAULT_TOL) -> CheckResult:
        """Check inverse o forward = id and a nonsingular forward Jacobian."""
        pairs = []
        inv_sub = self.inverse_subst()
        for name, fwd in zip(self.dst.coords, self.forward):
            composed = substitute(fwd, inv_sub)
            pairs.append((f"{name} o inverse", equal(composed, sym(name), funcs=funcs,
                                                     seed=seed, n_samples=n_samples, tol=tol)))
        fwd_sub = self.forward_subst()
        for name, inv in zip(self.src.coords, self.inverse):
            composed = substitute(inv, fwd_sub)
            pairs.append((f"{name} o forward", equal(composed, sym(name), funcs=funcs,
                                                     seed=seed, n_samples=n_samples, tol=tol)))
        det = determinant(jacobian(self.forward, self.src))
        res = equal(det, ZERO, funcs=funcs, seed=seed, n_samples=n_samples, tol=tol)
        if res.is_equal:
            pairs.append(("jacobian", res))
            return CheckResult("fail", component="jacobian", witness=res.witness,
                               detail="forward Jacobian is singular")
        return merge_componentwise(pairs)


def jacobian(map_exprs: Sequence[Expr], src: Chart):
    """Rows indexed by target component, columns by src coordinate."""
    return tuple(tuple(differentiate(comp, x) for x in src.coords)
                 for comp in map_exprs)


def pushforward(phi: Diffeo, X: VectorField) -> VectorField:
    """(phi_* X)^a = (d phi^a / d x^i X^i) o phi^{-1}."""
    if X.chart != phi.src:
        raise ChartMismatchError(f"field lives on {X.chart}, diffeo starts at {phi.src}")
    jac = jacobian(phi.forward, phi.src)
    comps_src = mat_vec(jac, X.components)
    inv_sub = phi.inverse_subst()
    return VectorField(phi.dst, tuple(substitute(c, inv_sub) for c in comps_src))


def pullback_form_along(map_exprs: Sequence[Expr], src: Chart, dst: Chart,
                        omega: DiffForm) -> DiffForm:
    """Pullback of a form on dst along an arbitrary smooth map src -> dst."""
    if omega.chart != dst:
        raise ChartMismatchError(f"form lives on {omega.chart}, map targets {dst}")
    sub = dict(zip(dst.coords, map_exprs))
    if omega.degree == 0:
        return scalar_form(src, substitute(omega.scalar(), sub))
    differentials = [one_form(src, [differentiate(comp, x) for x in src.coords])
                     for comp in map_exprs]
    out = zero_form(src, omega.degree)
    for idx, value in omega.components.items():
        block = differentials[idx[0]]
        for i in idx[1:]:
            block = wedge(block, differentials[i])
        out = out + block.scaled(substitute(value, sub))
    return out


def pullback(phi: Diffeo, target, funcs=None, seed: int = DEFAULT_SEED):
    """Pullback of a form or a (1,1) tensor living on phi.dst.

    Tensors transform as (D phi)^{-1} (T o phi) (D phi), so the
    transformed SODE identity holds; the inverse Jacobian is computed
    symbolically via adjugate/determinant.
    """
    if isinstance(target, DiffForm):
        return pullback_form_along(phi.forward, phi.src, phi.dst, target)
    if isinstance(target, Tensor11):
        if target.chart != phi.dst:
            raise ChartMismatchError(f"tensor lives on {target.chart}, diffeo ends at {phi.dst}")
        jac = jacobian(phi.forward, phi.src)
        jac_inv = mat_inverse(jac, context="pullback Jacobian", funcs=funcs, seed=seed)
        fwd_sub = phi.forward_subst()
        t_comp = tuple(tuple(substitute(v, fwd_sub) for v in r) for r in target.rows)
        rows = mat_mul(mat_mul(jac_inv, t_comp), jac)
        return Tensor11(phi.src, rows)
    raise TypeError(f"cannot pull back {type(target).__name__}")


# --- componentwise equality helpers -------------------------------------------

def fields_equal(X: VectorField, Y: VectorField, **eq_opts) -> CheckResult:
    _require_same_chart(X, Y)
    names = X.chart.coords
    return merge_componentwise(
        (f"d/d{names[i]}", equal(a, b, **eq_opts))
        for i, (a, b) in enumerate(zip(X.components, Y.components)))


def forms_equal(a: DiffForm, b: DiffForm, **eq_opts) -> CheckResult:
    _require_same_chart(a, b)
    if a.degree != b.degree:
        raise ValueError("forms of different degree are never equal")
    names = a.chart.coords
    keys = sorted(set(a.components) | set(b.components))
    return merge_componentwise(
        ("d" + "^d".join(names[i] for i in idx) if idx else "scalar",
         equal(a.components.get(idx, ZERO), b.components.get(idx, ZERO), **eq_opts))
        for idx in keys)


def tensors_equal(a: Tensor11, b: Tensor11, **eq_opts) -> CheckResult:
    _require_same_chart(a, b)
    names = a.chart.coords
    return merge_componentwise(
        (f"T^{names[i]}_{names[j]}", equal(a.rows[i][j], b.rows[i][j], **eq_opts))
        for i in range(a.chart.dim) for j in range(a.chart.dim))


def form_is_zero(a: DiffForm, **eq_opts) -> CheckResult:
    return forms_equal(a, zero_form(a.chart, a.degree), **eq_opts)


def matrix_rank_check(rows, expected_rank: int, funcs=None,
                      seed: int = DEFAULT_SEED, samples: int = 16) -> CheckResult:
    """Numeric rank of an expression matrix at random sample points.

    Symbolic rank is brittle; the conditions this backs (Ker S = Im S,
    embedding regularity, graph detection) are pointwise anyway.
    """
    import random as _random

    import numpy as _np

    from .errors import DomainError, UnboundSymbolError
    from .symexpr import EvalPoint, FunctionBindings, SAMPLE_RANGE, evaluate, free_symbols

    bindings = funcs if funcs is None or isinstance(funcs, FunctionBindings) \
        else FunctionBindings(funcs)
    names = set()
    for row in rows:
        for entry in row:
            names |= free_symbols(entry)
    rng = _random.Random(seed)
    lo, hi = SAMPLE_RANGE
    checked = 0
    for _ in range(50 * samples):
        if checked == samples:
            break
        point = EvalPoint({name: rng.uniform(lo, hi) for name in sorted(names)})
        try:
            numeric = _np.array([[evaluate(v, point, bindings) for v in row]
                                 for row in rows], dtype=float)
        except (DomainError, UnboundSymbolError):
            continue
        checked += 1
        rank = int(_np.linalg.matrix_rank(numeric, tol=1e-9))
        if rank != expected_rank:
            return CheckResult("fail", component="rank", witness=point,
                               detail=f"rank {rank} != {expected_rank}")
    if checked < samples:
        return CheckResult("undecided", component="rank",
                           detail=f"only {checked} admissible sample points")
    return CheckResult("pass")
