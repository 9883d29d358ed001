"""Polynomial loop algebra, its Casimir families and compatible Poisson tensors.

A ``LoopContext`` fixes the algebra, the polynomial degree ``n`` and the top
coefficient: either symbolic (the full loop algebra, carrying the plain
Lie-Poisson tensor ``P_0``) or a constant matrix (the subspace with frozen top
coefficient, carrying the tower of compatible tensors ``P_1 .. P_{n+1}``).

Conventions
-----------
* Copy ``j`` of the base algebra holds the coefficient of ``lambda^(n-j)``.
* ``A_j`` is the adjoint operator matrix of part ``j``; all tensors are
  block-Hankel assemblies of the ``A_j`` applied to stacked coordinate
  gradients, never materialized as one big symbolic matrix.
* The spectral parameter is a registered unit variable (default ``lam``) so
  pencil computations stay inside the polynomial ring.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exactmat import Matrix, commutator, det, mat_eq, mat_mul, trace
from .liealg import LieAlgebraSpec
from .poly import Poly, RatExpr, VarTable, as_ratexpr

Vector = List[RatExpr]
VectorField = Dict[str, RatExpr]


class MismatchCertificate(AssertionError):
    """A claimed exact identity failed; carries the offending component."""


@dataclass
class LoopContext:
    """Symbolic coordinates for g-valued lambda-polynomials of degree n."""

    spec: LieAlgebraSpec
    n: int
    table: VarTable
    x0: Optional[List[Fraction]]  # None => symbolic top coefficient
    lam: str = "lam"
    _adjoint_cache: Dict[int, Matrix] = field(default_factory=dict, repr=False)

    @property
    def symbolic_top(self) -> bool:
        return self.x0 is None

    @property
    def copies(self) -> range:
        """Indices of the copies that carry variables."""
        return range(0 if self.symbolic_top else 1, self.n + 1)

    def part_vars(self, j: int) -> List[str]:
        return self.spec.copy_names(j)

    def all_vars(self) -> List[str]:
        out: List[str] = []
        for j in self.copies:
            out.extend(self.part_vars(j))
        return out

    def coords(self, j: int) -> Vector:
        """Coordinate vector of part j (constants for a frozen part 0)."""
        if j == 0 and not self.symbolic_top:
            return [as_ratexpr(self.table, c) for c in self.x0]
        return [as_ratexpr(self.table, self.table.var(v)) for v in self.part_vars(j)]

    def part_matrix(self, j: int) -> Matrix:
        return self.spec.element_matrix(self.table, self.coords(j))

    def x_lambda(self) -> Matrix:
        """The assembled matrix sum_j lambda^(n-j) X_j."""
        lam = self.table.var(self.lam)
        acc = None
        for j in range(self.n + 1):
            m = self.part_matrix(j)
            weight = as_ratexpr(self.table, lam ** (self.n - j))
            m = [[x * weight for x in row] for row in m]
            acc = m if acc is None else [[a + b for a, b in zip(ra, rb)]
                                         for ra, rb in zip(acc, m)]
        return acc

    def adjoint_block(self, j: int) -> Matrix:
        """A_j = adjoint operator matrix of part j (cached)."""
        if j not in self._adjoint_cache:
            self._adjoint_cache[j] = self.spec.adjoint_matrix(self.table, self.coords(j))
        return self._adjoint_cache[j]

    def covector(self, f, j: int) -> Vector:
        """Partials of f with respect to the part-j coordinates."""
        fe = as_ratexpr(self.table, f)
        return [fe.partial(v) for v in self.part_vars(j)]

    def nabla(self, f, j: int) -> Matrix:
        """Trace-dual gradient of f in the part-j coordinates."""
        return self.spec.gradient(self.table, self.covector(f, j))


def make_context(spec: LieAlgebraSpec, n: int,
                 x0: Optional[Sequence] = None,
                 table: Optional[VarTable] = None,
                 lam: str = "lam") -> LoopContext:
    """Register the loop coordinates and return a computation context."""
    table = table if table is not None else VarTable()
    table.register(lam, unit=True)
    x0_f = None if x0 is None else [Fraction(c) for c in x0]
    first = 0 if x0 is None else 1
    for j in range(first, n + 1):
        table.register_all(spec.copy_names(j))
    return LoopContext(spec=spec, n=n, table=table, x0=x0_f, lam=lam)


# -- loop bracket and bilinear form ---------------------------------------------------


def bracket_n(ctx: LoopContext, x_parts: List[Vector], y_parts: List[Vector]
              ) -> List[Vector]:
    """Truncated commutator: part c of the result collects a+b = n+c."""
    n = ctx.n
    zero = [as_ratexpr(ctx.table, 0) for _ in range(ctx.spec.dim)]
    out = [list(zero) for _ in range(n + 1)]
    for c in range(n + 1):
        for a in range(n + 1):
            b = n + c - a
            if 0 <= b <= n:
                br = ctx.spec.bracket(ctx.table, x_parts[a], y_parts[b])
                out[c] = [acc + term for acc, term in zip(out[c], br)]
    return out


def eta(ctx: LoopContext, x_parts: List[Vector], y_parts: List[Vector]) -> RatExpr:
    """Nondegenerate pairing sum_i Tr(X_i Y_{n-i})."""
    acc = as_ratexpr(ctx.table, 0)
    for i in range(ctx.n + 1):
        mx = ctx.spec.element_matrix(ctx.table, x_parts[i])
        my = ctx.spec.element_matrix(ctx.table, y_parts[ctx.n - i])
        acc = acc + trace(mat_mul(mx, my))
    return acc


# -- Casimir families -----------------------------------------------------------------


def casimir_family(ctx: LoopContext) -> Dict[Tuple[int, int], Poly]:
    """All lambda-expansion coefficients of the base invariants.

    Returns ``{(i, j): poly}`` with ``i`` the 1-based invariant index and
    ``wdeg(poly) = j``.  With a frozen top coefficient the ``j = 0`` entries
    are constants and are omitted.
    """
    table = ctx.table
    mu = "_mu"
    table.register(mu)
    x = ctx.x_lambda()
    nrep = ctx.spec.rep_dim
    char = [[(table.var(mu) if i == j else table.zero()) - x[i][j].as_poly()
             for j in range(nrep)] for i in range(nrep)]
    charpoly = det(char)
    mu_coeffs = charpoly.coefficients_in(mu)
    out: Dict[Tuple[int, int], Poly] = {}
    for i, m_i in enumerate(ctx.spec.exponents, start=1):
        deg = m_i + 1
        inv = mu_coeffs.get(nrep - deg, table.zero()) * ctx.spec.invariant_normalizations[i - 1]
        lam_coeffs = inv.coefficients_in(ctx.lam)
        top = deg * ctx.n
        first = 0 if ctx.symbolic_top else 1
        for j in range(first, top + 1):
            out[(i, j)] = lam_coeffs.get(top - j, table.zero())
    return out


# -- Poisson tensors ------------------------------------------------------------------


def tensor_blocks(ctx: LoopContext, kappa: int) -> Dict[Tuple[int, int], Tuple[int, int]]:
    """Sparse block pattern of tensor P_kappa as {(row, col): (sign, A-index)}.

    Rows and columns are copy indices.  ``kappa = 0`` is the plain Lie-Poisson
    tensor on the full loop algebra; ``kappa = 1 .. n+1`` are the compatible
    tensors on the frozen-top subspace.
    """
    n = ctx.n
    blocks: Dict[Tuple[int, int], Tuple[int, int]] = {}
    if kappa == 0:
        if not ctx.symbolic_top:
            raise ValueError("P_0 lives on the full loop algebra")
        for i in range(n + 1):
            for j in range(n + 1):
                if i + j <= n:
                    blocks[(i, j)] = (-1, i + j)
        return blocks
    if ctx.symbolic_top:
        raise ValueError("P_1..P_{n+1} live on the frozen-top subspace")
    if not 1 <= kappa <= n + 1:
        raise ValueError(f"tensor index {kappa} out of range 1..{n + 1}")
    k = kappa - 1
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i <= k and j <= k and i + j >= k + 1:
                blocks[(i, j)] = (1, i + j - k - 1)
            elif i >= k + 1 and j >= k + 1 and i + j - k - 1 <= n:
                blocks[(i, j)] = (-1, i + j - k - 1)
    return blocks


def apply_tensor(ctx: LoopContext, kappa: int, g) -> VectorField:
    """The vector field P_kappa dG as {coordinate name: velocity}."""
    covectors = {j: ctx.covector(g, j) for j in ctx.copies}
    field: Dict[str, RatExpr] = {v: as_ratexpr(ctx.table, 0) for v in ctx.all_vars()}
    for (i, j), (sign, a_idx) in tensor_blocks(ctx, kappa).items():
        block = ctx.adjoint_block(a_idx)
        cov = covectors[j]
        names = ctx.part_vars(i)
        for r in range(ctx.spec.dim):
            acc = field[names[r]]
            row = block[r]
            for c in range(ctx.spec.dim):
                if not row[c].is_zero() and not cov[c].is_zero():
                    acc = acc + sign * (row[c] * cov[c])
            field[names[r]] = acc
    return field


def pencil_field(ctx: LoopContext, kappa_hi: int, kappa_lo: int, g) -> VectorField:
    """The field (lambda P_hi - P_lo) dG with symbolic lambda."""
    lam = ctx.table.var(ctx.lam)
    hi = apply_tensor(ctx, kappa_hi, g)
    lo = apply_tensor(ctx, kappa_lo, g)
    return {v: lam * hi[v] - lo[v] for v in hi}


def poisson_bracket(ctx: LoopContext, kappa: int, f, g) -> RatExpr:
    """{f, g}_kappa = df . (P_kappa dG)."""
    fe = as_ratexpr(ctx.table, f)
    field = apply_tensor(ctx, kappa, g)
    acc = as_ratexpr(ctx.table, 0)
    for v, vel in field.items():
        if vel.is_zero():
            continue
        pf = fe.partial(v)
        if not pf.is_zero():
            acc = acc + pf * vel
    return acc


def field_applied(field: VectorField, f, table: VarTable) -> RatExpr:
    """Directional derivative of f along a coordinate vector field."""
    fe = as_ratexpr(table, f)
    acc = as_ratexpr(table, 0)
    for v, vel in field.items():
        if vel.is_zero():
            continue
        pf = fe.partial(v)
        if not pf.is_zero():
            acc = acc + pf * vel
    return acc


def field_commutator(a: VectorField, b: VectorField, table: VarTable) -> VectorField:
    """Lie bracket of two coordinate vector fields (same coordinate set)."""
    out: VectorField = {}
    for v in a:
        out[v] = field_applied(a, b[v], table) - field_applied(b, a[v], table)
    return out


def lax_form_of(ctx: LoopContext, k: int, g) -> Matrix:
    """Certify that (lambda P_{k+1} - P_k) dG is the flow of [X_lambda, nabla_k G].

    Returns the matrix nabla_k G after checking, block by lambda-degree, that
    the tensor field assembles to the commutator right-hand side.  Raises
    ``MismatchCertificate`` with the offending coordinate on failure.
    """
    nab = ctx.nabla(g, k)
    cov_k = ctx.covector(g, k)
    hi = _stacked(ctx, apply_tensor(ctx, k + 1, g))
    lo = _stacked(ctx, apply_tensor(ctx, k, g))
    d = ctx.spec.dim
    zero = [as_ratexpr(ctx.table, 0)] * d
    for c in range(ctx.n + 1):
        lhs = hi.get(c + 1, zero)
        lhs = [x - y for x, y in zip(lhs, lo.get(c, zero))]
        a_c = ctx.adjoint_block(c)
        for r in range(d):
            rhs = as_ratexpr(ctx.table, 0)
            for col in range(d):
                if not a_c[r][col].is_zero() and not cov_k[col].is_zero():
                    rhs = rhs + a_c[r][col] * cov_k[col]
            if not (lhs[r] - rhs).is_zero():
                name = ctx.spec.coord_name(r, c) if c in ctx.copies else f"part{c}[{r}]"
                raise MismatchCertificate(
                    f"Lax-form identity fails at lambda^{ctx.n - c}, coordinate {name}")
    return nab


def _stacked(ctx: LoopContext, field: VectorField) -> Dict[int, Vector]:
    out: Dict[int, Vector] = {}
    for j in ctx.copies:
        out[j] = [field[v] for v in ctx.part_vars(j)]
    return out


def expected_dimension(spec: LieAlgebraSpec, n: int) -> int:
    """Phase dimension after reduction and leaf restriction: nd - nh - 2h."""
    return n * spec.dim - n * spec.rank - 2 * spec.rank
