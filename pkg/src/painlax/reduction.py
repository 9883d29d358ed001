"""Quotient by the linear distribution spanned by the weight-one flows.

The distribution is generated by the h linear vector fields attached to the
weight-one Casimir coefficients.  A ``ReductionChart`` describes a section of
the quotient declaratively (which coordinates are pinned, the invariant
functions, the inverse parametrization); the engine verifies the chart and
pushes Poisson tensors, Casimir coefficients and Lax data through it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exactmat import (DecompositionSingular, Matrix, commutator, frac_rank,
                       mat_sub)
from .liealg import LieAlgebraSpec
from .looppoisson import (LoopContext, VectorField, field_applied,
                          poisson_bracket)
from .poly import Poly, RatExpr, VarTable, as_ratexpr, serialize

CasimirTable = Dict[Tuple[int, int], Poly]


class ChartInvalid(ValueError):
    """A declared reduction chart failed verification."""


def distribution(ctx: LoopContext, fam: CasimirTable) -> List[VectorField]:
    """The h linear generator fields dx_k/dt = -A_k dpsi_{i,1}/dx_1."""
    gens: List[VectorField] = []
    for i in range(1, ctx.spec.rank + 1):
        cov = ctx.covector(fam[(i, 1)], 1)
        gen: VectorField = {}
        for k in ctx.copies:
            a_k = ctx.adjoint_block(k)
            names = ctx.part_vars(k)
            for r in range(ctx.spec.dim):
                acc = as_ratexpr(ctx.table, 0)
                for c in range(ctx.spec.dim):
                    if not a_k[r][c].is_zero() and not cov[c].is_zero():
                        acc = acc - a_k[r][c] * cov[c]
                gen[names[r]] = acc
        gens.append(gen)
    return gens


@dataclass
class ReductionChart:
    """Declarative section-plus-invariants description of the quotient.

    ``section`` pins the coordinates transversal to the distribution (one per
    generator); ``frozen`` pins additional common-Casimir coordinates.  The
    ordered ``invariants`` become the coordinates of the reduced space, and
    ``inverse`` parametrizes the section by them.
    """

    invariant_names: List[str]
    invariants: Dict[str, RatExpr]
    section: Dict[str, Fraction]
    frozen: Dict[str, Fraction]
    inverse: Dict[str, RatExpr]

    def section_subs(self) -> Dict[str, RatExpr]:
        subs: Dict[str, RatExpr] = dict(self.inverse)
        return subs


def verify_chart(ctx: LoopContext, chart: ReductionChart,
                 gens: Sequence[VectorField], rng=None) -> None:
    """Check invariance, transversality and the inverse round trip.

    Raises ``ChartInvalid`` naming the failing piece.  Transversality is a
    rank check at random rational points; a failure retries at three more
    points before being reported.
    """
    table = ctx.table
    frozen_subs: Dict[str, RatExpr] = {
        v: as_ratexpr(table, table.const(c)) for v, c in chart.frozen.items()}
    for name in chart.invariant_names:
        expr = chart.invariants[name]
        for idx, gen in enumerate(gens):
            lie = field_applied(gen, expr, table)
            if frozen_subs:
                # frozen coordinates are common Casimirs; invariance is only
                # required on their level set
                lie = lie.substitute(frozen_subs)
            if not lie.is_zero():
                raise ChartInvalid(
                    f"invariant {name} is not constant along generator {idx}: "
                    f"{serialize(lie)}")

    pinned = list(chart.section)
    if len(pinned) != len(gens):
        raise ChartInvalid("section must pin one coordinate per generator")
    import random
    rng = rng or random.Random(0)
    for attempt in range(4):
        point = {v: Fraction(rng.randint(-9, 9), rng.randint(1, 4))
                 for v in ctx.all_vars()}
        point.update({v: Fraction(c) for v, c in chart.section.items()})
        point.update({v: Fraction(c) for v, c in chart.frozen.items()})
        m = [[_eval_rat(gen[v], point) for gen in gens] for v in pinned]
        if frac_rank(m) == len(gens):
            break
    else:
        raise ChartInvalid("section is not transversal to the distribution")

    subs = chart.section_subs()
    for name in chart.invariant_names:
        back = chart.invariants[name].substitute(subs)
        if not (back - table.var(name)).is_zero():
            raise ChartInvalid(
                f"inverse round trip fails for {name}: {serialize(back)}")
    for var, value in {**chart.section, **chart.frozen}.items():
        got = chart.inverse.get(var)
        if got is None or not (got - table.const(value)).is_zero():
            raise ChartInvalid(f"inverse does not respect pinned {var}")


def _eval_rat(expr: RatExpr, point: Mapping[str, Fraction]) -> Fraction:
    denom = Fraction(1)
    for i, e in expr.den:
        denom *= Fraction(point[expr.table.name(i)]) ** e
    return expr.num.evaluate_exact(point) / denom


@dataclass
class ReducedSystem:
    """Casimir coefficients, tensors and Lax matrices in chart coordinates."""

    ctx: LoopContext
    chart: ReductionChart
    fam: CasimirTable
    psit: Dict[Tuple[int, int], Poly]
    _tensors: Dict[int, Matrix] = field(default_factory=dict, repr=False)

    @property
    def table(self) -> VarTable:
        return self.ctx.table

    @property
    def names(self) -> List[str]:
        return self.chart.invariant_names

    def tensor(self, kappa: int) -> Matrix:
        """Reduced Poisson tensor as a matrix over the chart coordinates."""
        if kappa not in self._tensors:
            subs = self.chart.section_subs()
            names = self.names
            n = len(names)
            mat = [[None] * n for _ in range(n)]
            for a in range(n):
                mat[a][a] = as_ratexpr(self.table, 0)
                for b in range(a + 1, n):
                    br = poisson_bracket(self.ctx, kappa,
                                         self.chart.invariants[names[a]],
                                         self.chart.invariants[names[b]])
                    red = br.substitute(subs)
                    mat[a][b] = red
                    mat[b][a] = -red
            self._tensors[kappa] = mat
        return self._tensors[kappa]

    def reduced_field(self, kappa: int, f) -> VectorField:
        """The reduced Hamiltonian field of a chart-coordinate function."""
        fe = as_ratexpr(self.table, f)
        mat = self.tensor(kappa)
        names = self.names
        grads = [fe.partial(nm) for nm in names]
        out: VectorField = {}
        for a, nm in enumerate(names):
            acc = as_ratexpr(self.table, 0)
            for b in range(len(names)):
                if not mat[a][b].is_zero() and not grads[b].is_zero():
                    acc = acc + mat[a][b] * grads[b]
            out[nm] = acc
        return out

    def pencil_field(self, kappa_hi: int, kappa_lo: int, f) -> VectorField:
        lam = self.table.var(self.ctx.lam)
        hi = self.reduced_field(kappa_hi, f)
        lo = self.reduced_field(kappa_lo, f)
        return {v: lam * hi[v] - lo[v] for v in hi}

    def x_tilde(self) -> Matrix:
        """The loop matrix expressed in chart coordinates (on the section)."""
        subs = self.chart.section_subs()
        return [[entry.substitute(subs) for entry in row]
                for row in self.ctx.x_lambda()]

    def nabla_reduced(self, i: int, j: int, k: int) -> Matrix:
        """(nabla_k psi_{i,j}) restricted to the section, in chart coordinates."""
        subs = self.chart.section_subs()
        nab = self.ctx.nabla(self.fam[(i, j)], k)
        return [[entry.substitute(subs) for entry in row] for row in nab]

    def weight_one_gradients(self) -> List[Matrix]:
        return [self.nabla_reduced(i, 1, 1) for i in range(1, self.ctx.spec.rank + 1)]


def reduce_system(ctx: LoopContext, chart: ReductionChart, fam: CasimirTable
                  ) -> ReducedSystem:
    """Push the Casimir family onto the section; tensors are computed lazily."""
    subs = chart.section_subs()
    psit = {key: f.substitute(subs).as_poly() for key, f in fam.items()}
    return ReducedSystem(ctx=ctx, chart=chart, fam=fam, psit=psit)


def matrix_ddt(x: Matrix, flow: VectorField, table: VarTable,
               extra: Optional[Mapping[str, RatExpr]] = None) -> Matrix:
    """Entrywise time derivative of a matrix along a coordinate flow."""
    out = []
    for row in x:
        new_row = []
        for entry in row:
            e = as_ratexpr(table, entry)
            acc = as_ratexpr(table, 0)
            for v, vel in flow.items():
                if vel.is_zero():
                    continue
                pe = e.partial(v)
                if not pe.is_zero():
                    acc = acc + pe * vel
            if extra:
                for v, vel in extra.items():
                    pe = e.partial(v)
                    if not pe.is_zero():
                        acc = acc + pe * vel
            new_row.append(acc)
        out.append(new_row)
    return out


def beta_corrections(reduced: ReducedSystem, i: int, k: int, j: int
                     ) -> Tuple[List[RatExpr], Matrix]:
    """Correction multipliers making the reduced flow a plain Lax equation.

    For the flow of psit_{i,k+j} under tensor k+1, returns ``(betas, A)``
    where ``A = sum_m lambda^(j-1-m) nabla_k psit_{i,k+m} - sum_i beta_i N_i``
    satisfies d/dt X~ = [A, X~] exactly (``N_i`` are the weight-one
    gradients).  Raises ``DecompositionSingular`` when the multipliers cannot
    be solved with invertible pivots.
    """
    ctx = reduced.ctx
    table = reduced.table
    lam = table.var(ctx.lam)
    a_raw = None
    for m in range(j):
        nab = reduced.nabla_reduced(i, k + m, k)
        weight = as_ratexpr(table, lam ** (j - 1 - m))
        scaled = [[x * weight for x in row] for row in nab]
        a_raw = scaled if a_raw is None else [
            [p + q for p, q in zip(ra, rb)] for ra, rb in zip(a_raw, scaled)]

    x_t = reduced.x_tilde()
    flow = reduced.reduced_field(k + 1, reduced.psit[(i, k + j)])
    lhs = matrix_ddt(x_t, flow, table)
    residual = mat_sub(lhs, commutator(a_raw, x_t))
    correctors = [commutator(n_i, x_t) for n_i in reduced.weight_one_gradients()]

    h = len(correctors)
    components = []
    nrep = ctx.spec.rep_dim
    for r in range(nrep):
        for c in range(nrep):
            res_by_lam = _lambda_split(residual[r][c], ctx.lam)
            comp_by_lam = [_lambda_split(corr[r][c], ctx.lam) for corr in correctors]
            powers = set(res_by_lam)
            for d in comp_by_lam:
                powers.update(d)
            zero = as_ratexpr(table, 0)
            for p in sorted(powers):
                row = [d.get(p, zero) for d in comp_by_lam]
                rhs = res_by_lam.get(p, zero)
                if rhs.is_zero() and all(x.is_zero() for x in row):
                    continue
                components.append((row, rhs))
    betas = _solve_multipliers(components, h, table)

    a_corr = a_raw
    for beta, n_i in zip(betas, reduced.weight_one_gradients()):
        a_corr = [[x - beta * y for x, y in zip(ra, rb)]
                  for ra, rb in zip(a_corr, n_i)]
    check = mat_sub(lhs, commutator(a_corr, x_t))
    for r in range(nrep):
        for c in range(nrep):
            if not check[r][c].is_zero():
                raise DecompositionSingular(
                    f"corrected Lax identity fails at entry ({r},{c}): "
                    f"{serialize(check[r][c])}")
    return betas, a_corr


def _lambda_split(expr: RatExpr, lam: str) -> Dict[int, RatExpr]:
    """Coefficients of a lambda-polynomial RatExpr (lambda-free denominator)."""
    table = expr.table
    lam_idx = table.index(lam)
    den = dict(expr.den)
    shift = den.pop(lam_idx, 0)
    base = tuple(sorted(den.items()))
    out: Dict[int, RatExpr] = {}
    for p, coeff in expr.num.coefficients_in(lam).items():
        out[p - shift] = RatExpr(coeff, base)
    return out


def _solve_multipliers(components, h: int, table: VarTable) -> List[RatExpr]:
    """Solve residual = -sum_i beta_i * corrector_i from stacked components.

    Sequential elimination over the (overdetermined) component list, taking
    the first invertible pivot in each column; consistency of the remaining
    components is certified by the caller's full matrix check.
    """
    if h == 0:
        return []
    rows = [(list(row), -rhs) for row, rhs in components]
    pivots: List[Tuple[int, List[RatExpr], RatExpr]] = []
    used_cols: List[int] = []
    for col in range(h):
        found = None
        for rr, (row, rhs) in enumerate(rows):
            entry = row[col]
            if entry.is_zero():
                continue
            try:
                entry.num.as_unit_term()
            except Exception:
                continue
            found = rr
            break
        if found is None:
            raise DecompositionSingular(f"no invertible pivot for multiplier {col}")
        row, rhs = rows.pop(found)
        inv = as_ratexpr(table, 1) / row[col]
        row = [x * inv for x in row]
        rhs = rhs * inv
        for rr in range(len(rows)):
            orow, orhs = rows[rr]
            f = orow[col]
            if not f.is_zero():
                rows[rr] = ([x - f * y for x, y in zip(orow, row)], orhs - f * rhs)
        pivots.append((col, row, rhs))
        used_cols.append(col)
    betas = [as_ratexpr(table, 0)] * h
    for col, row, rhs in reversed(pivots):
        acc = rhs
        for c2 in range(col + 1, h):
            if not row[c2].is_zero():
                acc = acc - row[c2] * betas[c2]
        betas[col] = acc
    return betas
