"""Leaf restriction, time promotion and the isomonodromic Lax pair.

The chain implemented here takes a reduced system and produces, per case:

1. restriction to a symplectic leaf (Casimir level sets solved triangularly,
   optionally after recentring shifts),
2. the exactness condition singling out the parameter that may be promoted
   to a time variable, with its integer lambda power,
3. the promoted Lax matrix ``L = lambda^-l X|_{alpha=t}`` and companion
   matrices, everything rewritten in verified Darboux coordinates,
4. polynomial Hamiltonians with their golden-form comparison, weight checks
   and (for the fourth-order case) scalar-ODE elimination.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .exactmat import Matrix, commutator, mat_sub
from .poly import (NonUnitDenominator, Poly, RatExpr, VarTable, WeightVector,
                   as_ratexpr, serialize, weighted_degree)
from .reduction import ReducedSystem, matrix_ddt

Subs = Dict[str, RatExpr]


class NonTriangular(ValueError):
    """A leaf level equation is not linear in its declared unknown."""


class NoSuchParameter(KeyError):
    """The exactness condition referenced an unknown parameter."""


class ConditionFailed(ValueError):
    """No integer power satisfies the exactness condition."""


class ResidualNonzero(AssertionError):
    """The zero-curvature identity left a nonzero matrix entry."""


class NotPolynomial(ValueError):
    """A Hamiltonian kept a denominator after the declared parameter choice."""


class GoldenMismatch(AssertionError):
    """A derived Hamiltonian differs from its golden form."""


class WeightMismatch(AssertionError):
    """A quasihomogeneity check failed."""


class MomentaNotAffine(ValueError):
    """The flow map is not affine in the momenta."""


class EliminationSingular(ValueError):
    """Sequential elimination found no solvable variable."""


@dataclass
class LeafSpec:
    """Casimir level sets with a triangular solve order.

    ``shifts`` recentre coordinates before solving (``old = new + offset``);
    each level pins one Casimir coefficient to an expression in the
    parameters and names the coordinate it is solved for.
    """

    shifts: List[Tuple[str, str, RatExpr]]
    levels: List[Tuple[Tuple[int, int], RatExpr, str]]
    params: List[str]


@dataclass
class LeafSystem:
    """A reduced system restricted to one symplectic leaf."""

    reduced: ReducedSystem
    leaf: LeafSpec
    bindings: Subs
    free: List[str]

    @property
    def table(self) -> VarTable:
        return self.reduced.table

    def restrict(self, expr) -> RatExpr:
        """Apply the recentring shifts and the solved level bindings."""
        e = as_ratexpr(self.table, expr)
        shift_subs: Subs = {old: self.table.var(new) + off
                            for old, new, off in self.leaf.shifts}
        if shift_subs:
            e = e.substitute({k: as_ratexpr(self.table, v)
                              for k, v in shift_subs.items()})
        if self.bindings:
            e = e.substitute(self.bindings)
        return e

    def restrict_matrix(self, m: Matrix) -> Matrix:
        return [[self.restrict(x) for x in row] for row in m]

    def x_leaf(self) -> Matrix:
        return self.restrict_matrix(self.reduced.x_tilde())

    def psit_leaf(self, i: int, j: int) -> RatExpr:
        return self.restrict(self.reduced.psit[(i, j)])


def restrict_to_leaf(reduced: ReducedSystem, leaf: LeafSpec) -> LeafSystem:
    """Solve the level equations in order and return the restricted system.

    Each level must be linear in its declared unknown with an invertible
    (unit-monomial) coefficient; substitutions are fully triangularized so
    every binding refers only to free coordinates and parameters.
    """
    table = reduced.table
    shift_subs: Subs = {}
    for old, new, off in leaf.shifts:
        table.register(new)
        shift_subs[old] = as_ratexpr(table, table.var(new) + off)

    bindings: Subs = {}
    for (i, j), value, target in leaf.levels:
        expr = as_ratexpr(table, reduced.psit[(i, j)])
        if shift_subs:
            expr = expr.substitute(shift_subs)
        if bindings:
            expr = expr.substitute(bindings)
        eq = expr - as_ratexpr(table, value)
        coeff = eq.partial(target)
        if target in coeff.variable_names():
            raise NonTriangular(
                f"level for psi~_{i},{j} is not linear in {target}")
        if coeff.is_zero():
            raise NonTriangular(f"{target} does not occur in psi~_{i},{j}")
        rest = eq - coeff * table.var(target)
        solution = -rest / coeff
        for prev in list(bindings):
            bindings[prev] = bindings[prev].substitute({target: solution})
        bindings[target] = solution

    solved = set(bindings)
    shifted_old = {old for old, _, _ in leaf.shifts}
    free = [nm for nm in reduced.names if nm not in solved and nm not in shifted_old]
    free += [new for old, new, _ in leaf.shifts if new not in solved]
    sys = LeafSystem(reduced=reduced, leaf=leaf, bindings=bindings, free=free)

    for (i, j), value, _ in leaf.levels:
        if not (sys.restrict(reduced.psit[(i, j)]) - value).is_zero():
            raise NonTriangular(f"level psi~_{i},{j} does not hold after solving")
    return sys


# -- promotion -----------------------------------------------------------------------


def check_condition(x_leaf: Matrix, a_leaf: Matrix, alpha: str, lam: str,
                    table: VarTable, max_l: int = 6) -> int:
    """Find the integer l with dX/dalpha = lambda^l dA/dlambda, exactly.

    Raises ``NoSuchParameter`` for an unregistered name and
    ``ConditionFailed`` when no power works.
    """
    if alpha not in table:
        raise NoSuchParameter(alpha)
    dx = [[as_ratexpr(table, e).partial(alpha) for e in row] for row in x_leaf]
    da = [[as_ratexpr(table, e).partial(lam) for e in row] for row in a_leaf]
    lam_poly = table.var(lam)
    for l in range(max_l + 1):
        factor = as_ratexpr(table, lam_poly ** l)
        ok = True
        for r, row in enumerate(dx):
            for c, entry in enumerate(row):
                if not (entry - factor * da[r][c]).is_zero():
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return l
    raise ConditionFailed(
        f"no integer power matches dX/d{alpha} against dA/d{lam}")


def promote(matrices: Sequence[Matrix], time_subs: Subs, l: int, lam: str,
            table: VarTable) -> List[Matrix]:
    """Replace promoted parameters by times; divide the first matrix by lambda^l.

    The first entry of ``matrices`` is the restricted loop matrix (becoming
    the Lax matrix ``L``); the rest are companions, substituted but not
    rescaled.
    """
    out = []
    lam_inv = RatExpr(table.one(), ((table.index(lam), l),)) if l else None
    for pos, m in enumerate(matrices):
        sub = [[as_ratexpr(table, e).substitute(time_subs) for e in row] for row in m]
        if pos == 0 and lam_inv is not None:
            sub = [[e * lam_inv for e in row] for row in sub]
        out.append(sub)
    return out


# -- Darboux charts -------------------------------------------------------------------


@dataclass
class DarbouxChart:
    """Map from leaf coordinates to canonical pairs, with a sign convention.

    ``substitution`` rewrites each leaf coordinate as a polynomial in the
    canonical variables (identity when empty).  ``sign`` is +1 when the
    pushforward of the leaf tensor is the standard symplectic matrix and -1
    when it is its negative; the Hamiltonian flow below respects it.
    """

    substitution: Subs
    pairs: List[Tuple[str, str]]
    sign: int = 1

    def apply(self, expr, table: VarTable) -> RatExpr:
        e = as_ratexpr(table, expr)
        return e.substitute(self.substitution) if self.substitution else e

    def apply_matrix(self, m: Matrix, table: VarTable) -> Matrix:
        return [[self.apply(x, table) for x in row] for row in m]

    def canonical_bracket(self, f, g, table: VarTable) -> RatExpr:
        fe, ge = as_ratexpr(table, f), as_ratexpr(table, g)
        acc = as_ratexpr(table, 0)
        for q, p in self.pairs:
            acc = acc + (fe.partial(q) * ge.partial(p)
                         - fe.partial(p) * ge.partial(q))
        return acc

    def hamilton_flow(self, h, table: VarTable) -> Subs:
        """Velocities q' = s dH/dp, p' = -s dH/dq with the chart sign s."""
        he = as_ratexpr(table, h)
        flow: Subs = {}
        for q, p in self.pairs:
            flow[q] = self.sign * he.partial(p)
            flow[p] = -self.sign * he.partial(q)
        return flow


def verify_darboux(leaf_sys: LeafSystem, chart: DarbouxChart, kappa: int) -> None:
    """Check the chart turns the leaf tensor into sign * (canonical form).

    Shifted coordinates (recentred by parameter offsets) share the brackets
    of their originals, so they are looked up under the original name.
    """
    red = leaf_sys.reduced
    table = red.table
    full = red.tensor(kappa)
    names = red.names
    original = {new: old for old, new, _ in leaf_sys.leaf.shifts}
    idx = {nm: names.index(original.get(nm, nm)) for nm in leaf_sys.free}
    for a, nm_a in enumerate(leaf_sys.free):
        expr_a = chart.apply(table.var(nm_a), table)
        for nm_b in leaf_sys.free[a + 1:]:
            expr_b = chart.apply(table.var(nm_b), table)
            lhs = chart.canonical_bracket(expr_a, expr_b, table)
            target = leaf_sys.restrict(full[idx[nm_a]][idx[nm_b]])
            rhs = chart.sign * chart.apply(target, table)
            if not (lhs - rhs).is_zero():
                raise GoldenMismatch(
                    f"Darboux chart fails on bracket ({nm_a},{nm_b}): "
                    f"{serialize(lhs)} vs {serialize(rhs)}")


@dataclass
class DerivedHamiltonian:
    """A polynomial Hamiltonian in canonical coordinates plus its metadata."""

    case_id: str
    flow_name: str
    h: Poly
    time: str
    pairs: List[Tuple[str, str]]
    sign: int
    notes: str = ""


def hamiltonian_in_darboux(case_id: str, flow_name: str, psit_leaf_expr: RatExpr,
                           chart: DarbouxChart, table: VarTable,
                           time_subs: Subs, constraints: Subs,
                           time: str, scale: Fraction = Fraction(1)
                           ) -> DerivedHamiltonian:
    """Promoted, Darboux-substituted Hamiltonian; must clear denominators."""
    h = psit_leaf_expr.substitute(time_subs) if time_subs else psit_leaf_expr
    h = chart.apply(h, table)
    if constraints:
        h = h.substitute(constraints)
    h = h * scale
    try:
        poly = h.as_poly()
    except NonUnitDenominator as exc:
        raise NotPolynomial(
            f"{case_id}/{flow_name}: parameter choice leaves denominator "
            f"({exc})") from exc
    return DerivedHamiltonian(case_id=case_id, flow_name=flow_name, h=poly,
                              time=time, pairs=chart.pairs, sign=chart.sign)


def golden_match(h: DerivedHamiltonian, target: Poly, drop_vars: Sequence[str]
                 ) -> Poly:
    """Exact comparison, ignoring terms in the time/parameter variables only.

    Returns the dropped remainder; raises ``GoldenMismatch`` when the
    difference touches any phase variable.
    """
    diff = h.h - target
    allowed = set(drop_vars)
    offending = diff.variable_names() - allowed
    if offending:
        raise GoldenMismatch(
            f"{h.case_id}/{h.flow_name}: difference involves {sorted(offending)}: "
            f"{serialize(diff)}")
    return diff


def verify_zero_curvature(l_matrix: Matrix, a_matrix: Matrix,
                          ham: DerivedHamiltonian, chart: DarbouxChart,
                          table: VarTable, lam: str,
                          orientation: str = "[A,X]",
                          isomonodromic: bool = True) -> None:
    """Check dL/dt = [A, L] + dA/dlambda (or the recorded orientation) exactly.

    ``dL/dt`` combines the Hamiltonian flow of ``ham`` with the explicit time
    dependence.  With ``isomonodromic=False`` the dA/dlambda term is dropped
    (the plain spectrum-preserving form).
    """
    flow = chart.hamilton_flow(ham.h, table)
    time_var = {ham.time: as_ratexpr(table, 1)} if ham.time in table else {}
    lhs = matrix_ddt(l_matrix, flow, table, extra=time_var)
    if orientation == "[A,X]":
        rhs = commutator(a_matrix, l_matrix)
    elif orientation == "[X,A]":
        rhs = commutator(l_matrix, a_matrix)
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    if isomonodromic:
        da = [[as_ratexpr(table, e).partial(lam) for e in row] for row in a_matrix]
        rhs = [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(rhs, da)]
    res = mat_sub(lhs, rhs)
    for r, row in enumerate(res):
        for c, entry in enumerate(row):
            if not entry.is_zero():
                raise ResidualNonzero(
                    f"{ham.case_id}/{ham.flow_name}: zero-curvature residual at "
                    f"({r},{c}): {serialize(entry)}")


# -- scalar ODE reduction -------------------------------------------------------------


def reduce_to_scalar_ode(ham: DerivedHamiltonian, y_var: str, table: VarTable,
                         time: str) -> Poly:
    """Eliminate the other phase variables into one higher-order scalar ODE.

    Successive time derivatives of ``y`` are matched against fresh symbols
    ``y'' = _d2`` etc.; each step must solve one remaining phase variable
    linearly with a constant rational coefficient.  Returns the polynomial
    right-hand side of ``y^(order) = F(y, y', ..., t)``.
    """
    chart = DarbouxChart(substitution={}, pairs=ham.pairs, sign=ham.sign)
    flow = chart.hamilton_flow(ham.h, table)
    state = [v for pair in ham.pairs for v in pair]
    if y_var not in state:
        raise ValueError(f"{y_var} is not a phase variable")
    order = len(state)
    dnames = ["_d0"] + [f"_d{s}" for s in range(1, order)]
    for nm in dnames:
        table.register(nm)

    solved: Subs = {y_var: as_ratexpr(table, table.var("_d0"))}
    current = as_ratexpr(table, table.var(y_var))
    for step in range(1, order + 1):
        nxt = as_ratexpr(table, 0)
        for v, vel in flow.items():
            pe = current.partial(v)
            if not pe.is_zero():
                nxt = nxt + pe * vel
        if time in table:
            nxt = nxt + current.partial(time)
        expr = nxt.substitute(solved) if solved else nxt
        if step == order:
            remaining = [v for v in state if v not in solved]
            if any(v in expr.variable_names() for v in remaining):
                raise EliminationSingular(
                    f"final derivative still contains {remaining}")
            return expr.as_poly()
        target = None
        for v in state:
            if v in solved or v not in expr.variable_names():
                continue
            coeff = expr.partial(v)
            if not coeff.is_poly() or not coeff.as_poly().is_constant():
                continue
            target = (v, coeff.as_poly().constant_value())
            break
        if target is None:
            present = [v for v in state if v not in solved
                       and v in expr.variable_names()]
            if present:
                raise MomentaNotAffine(
                    f"derivative {step} not solvable linearly in {present}")
            raise EliminationSingular(
                f"derivative {step} introduces no new phase variable")
        v, c = target
        rest = expr - c * table.var(v)
        solution = (as_ratexpr(table, table.var(dnames[step])) - rest) / c
        for prev in list(solved):
            solved[prev] = solved[prev].substitute({v: solution})
        solved[v] = solution
        current = nxt
    raise AssertionError("unreachable")


# -- weights --------------------------------------------------------------------------


def weight_table_check(h: Poly, weights: Mapping[str, int], expected: int,
                       label: str) -> None:
    """Assert quasihomogeneity at the declared weighted degree."""
    w = WeightVector(h.table, dict(weights))
    ok, deg = weighted_degree(h, w)
    if not ok or deg != expected:
        raise WeightMismatch(
            f"{label}: expected homogeneous of weighted degree {expected}, "
            f"got ({'homog' if ok else 'mixed'}, {deg})")
