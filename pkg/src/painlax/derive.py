"""The full per-case derivation pipeline with every certificate checked.

``derive_case`` runs: loop context -> Casimir family -> distribution ->
chart verification -> reduction -> leaf restriction -> correction
multipliers -> exactness condition -> promotion -> Darboux chart -> golden
Hamiltonians -> zero curvature -> weight checks.  Any failed certificate
raises; a returned ``CaseResult`` is fully verified.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .cases import CaseDefinition, FlowDef, load_case
from .exactmat import Matrix
from .isomono import (ConditionFailed, DarbouxChart, DerivedHamiltonian,
                      LeafSpec, LeafSystem, check_condition, golden_match,
                      hamiltonian_in_darboux, promote, restrict_to_leaf,
                      verify_darboux, verify_zero_curvature,
                      weight_table_check)
from .liealg import get_algebra
from .looppoisson import LoopContext, casimir_family, make_context
from .poly import Poly, RatExpr, VarTable, as_ratexpr, parse, serialize
from .reduction import (CasimirTable, ReducedSystem, ReductionChart,
                        beta_corrections, distribution, reduce_system,
                        verify_chart)


@dataclass
class FlowResult:
    flow: FlowDef
    betas: List[RatExpr]
    a_matrix: Matrix           # promoted, Darboux coordinates
    hamiltonian: DerivedHamiltonian
    dropped: Poly              # golden-match remainder (time/parameter terms)
    condition_l: int


@dataclass
class CaseResult:
    case: CaseDefinition
    ctx: LoopContext
    fam: CasimirTable
    reduced: ReducedSystem
    leaf_sys: LeafSystem
    chart: DarbouxChart
    l_matrix: Matrix           # promoted Lax matrix, Darboux coordinates
    flows: List[FlowResult]
    failed_condition_params: List[str]

    @property
    def table(self) -> VarTable:
        return self.ctx.table


def _parse_expr(text, table: VarTable) -> RatExpr:
    if isinstance(text, (list, tuple)):
        num, den = text
        if den is None:
            return as_ratexpr(table, parse(num, table))
        return as_ratexpr(table, parse(num, table)) / parse(den, table)
    return as_ratexpr(table, parse(text, table))


def build_context(case: CaseDefinition):
    """Loop context plus verified chart and reduced system for a case."""
    spec = get_algebra(case.algebra)
    ctx = make_context(spec, case.n, x0=case.x0)
    table = ctx.table
    for v in case.loop_units:
        table.mark_unit(v)
    for nm in case.chart_order:
        table.register(nm)
    for nm in case.chart_new_units:
        table.mark_unit(nm)
    for nm in case.params + case.times + case.extra_params:
        table.register(nm)
    for nm in case.darboux_vars:
        table.register(nm)
    for nm in case.darboux_units:
        table.mark_unit(nm)

    fam = casimir_family(ctx)
    gens = distribution(ctx, fam)
    invariants = {nm: _parse_expr(case.chart_invariants[nm], table)
                  for nm in case.chart_order}
    inverse = {v: _parse_expr(e, table) for v, e in case.chart_inverse.items()}
    chart = ReductionChart(
        invariant_names=list(case.chart_order),
        invariants=invariants,
        section=dict(case.chart_section),
        frozen=dict(case.chart_frozen),
        inverse=inverse,
    )
    verify_chart(ctx, chart, gens)
    reduced = reduce_system(ctx, chart, fam)
    return ctx, fam, gens, chart, reduced


def derive_case(case_or_id) -> CaseResult:
    case = load_case(case_or_id) if isinstance(case_or_id, str) else case_or_id
    ctx, fam, gens, rchart, reduced = build_context(case)
    table = ctx.table

    shifts = [(old, new, _parse_expr(off, table)) for old, new, off in case.shifts]
    levels = [((lv["i"], lv["j"]), _parse_expr(lv["value"], table), lv["solve_for"])
              for lv in case.leaf_levels]
    leaf = LeafSpec(shifts=shifts, levels=levels, params=list(case.params))
    leaf_sys = restrict_to_leaf(reduced, leaf)

    x_leaf = leaf_sys.x_leaf()
    time_subs = {f.promote_param: _parse_expr(f.time_expr, table)
                 for f in case.flows}
    constraints = {p: _parse_expr(e, table) for p, e in case.constraints.items()}

    dchart = DarbouxChart(
        substitution={v: _parse_expr(e, table)
                      for v, e in case.darboux_substitution.items()},
        pairs=list(case.darboux_pairs),
        sign=case.darboux_sign,
    )
    verify_darboux(leaf_sys, dchart, case.kappa)

    l_common: Optional[int] = None
    flow_results: List[FlowResult] = []
    a_promoted: List[Matrix] = []
    for f in case.flows:
        betas, a_red = beta_corrections(reduced, f.i, f.k, f.j)
        a_leaf = leaf_sys.restrict_matrix(a_red)
        l_found = check_condition(x_leaf, a_leaf, f.promote_param, ctx.lam, table)
        if l_found != f.promote_l:
            raise ConditionFailed(
                f"{case.id}/{f.name}: expected l={f.promote_l}, found {l_found}")
        if l_common is None:
            l_common = l_found
        elif l_common != l_found:
            raise ConditionFailed(f"{case.id}: flows disagree on lambda power")
        a_promoted.append(a_leaf)
        flow_results.append(FlowResult(flow=f, betas=betas, a_matrix=None,
                                       hamiltonian=None, dropped=None,
                                       condition_l=l_found))

    failed_params: List[str] = []
    for fc in case.failed_conditions:
        _, a_red = beta_corrections(reduced, fc.i, fc.k, fc.j)
        a_leaf = leaf_sys.restrict_matrix(a_red)
        for p in fc.params:
            try:
                check_condition(x_leaf, a_leaf, p, ctx.lam, table)
            except ConditionFailed:
                failed_params.append(p)
            else:
                raise ConditionFailed(
                    f"{case.id}: condition unexpectedly holds for {p}")

    promoted = promote([x_leaf] + a_promoted, time_subs, l_common or 0,
                       ctx.lam, table)
    l_matrix = dchart.apply_matrix(promoted[0], table)
    l_matrix = [[e.substitute(constraints) for e in row] for row in l_matrix] \
        if constraints else l_matrix

    for pos, (f, fr) in enumerate(zip(case.flows, flow_results)):
        a_d = dchart.apply_matrix(promoted[1 + pos], table)
        if constraints:
            a_d = [[e.substitute(constraints) for e in row] for row in a_d]
        ham = hamiltonian_in_darboux(
            case.id, f.name, leaf_sys.psit_leaf(f.i, f.k + f.j), dchart, table,
            time_subs, constraints, f.time, scale=f.h_scale)
        if f.h_extra and f.h_extra != "0":
            extra = parse(f.h_extra, table)
            ham.h = ham.h + extra
            ham.notes = f"includes recorded correction {serialize(extra)}"
        golden = parse(f.golden, table)
        dropped = golden_match(ham, golden, case.drop_vars)
        verify_zero_curvature(l_matrix, a_d, ham, dchart, table, ctx.lam,
                              orientation=case.orientation)
        weight_table_check(ham.h, case.weights, f.weight_degree,
                           f"{case.id}/{f.name}")
        fr.a_matrix = a_d
        fr.hamiltonian = ham
        fr.dropped = dropped

    return CaseResult(case=case, ctx=ctx, fam=fam, reduced=reduced,
                      leaf_sys=leaf_sys, chart=dchart, l_matrix=l_matrix,
                      flows=flow_results, failed_condition_params=failed_params)
