"""One-time solver for the canonical-coordinate maps of the n=3 twin-flow cases.

The leaf tensors and restricted Hamiltonians come from the exact engine; this
script finds the polynomial change of variables (weight-graded ansatz with
rational coefficients, time-dependent shifts allowed) that matches both
Hamiltonian flows and the bracket relations, then prints the map together
with the induced Hamiltonian corrections.  The results are frozen into the
case data files and re-verified exactly by the engine's own test suite; this
script is kept for provenance only.

Run:  python scripts/solve_canonical_maps.py [p22|p4h]
"""

from __future__ import annotations

import sys
from fractions import Fraction
from itertools import count

import sympy as sp

sys.path.insert(0, "src")

from painlax.cases import load_case  # noqa: E402
from painlax.derive import build_context, _parse_expr  # noqa: E402
from painlax.isomono import LeafSpec, restrict_to_leaf  # noqa: E402
from painlax.poly import serialize  # noqa: E402


def engine_leaf(case_id):
    """Leaf tensor, restricted Hamiltonians and flow fields as sympy objects."""
    case = load_case(case_id)
    ctx, fam, gens, rchart, reduced = build_context(case)
    table = ctx.table
    shifts = [(o, n, _parse_expr(e, table)) for o, n, e in case.shifts]
    levels = [((lv["i"], lv["j"]), _parse_expr(lv["value"], table), lv["solve_for"])
              for lv in case.leaf_levels]
    ls = restrict_to_leaf(reduced, LeafSpec(shifts=shifts, levels=levels,
                                            params=list(case.params)))

    def to_sp(expr):
        return sp.sympify(serialize(expr).replace("^", "**"))

    free = ls.free
    kappa = case.kappa
    original = {new: old for old, new, _ in shifts}
    names = reduced.names
    full = reduced.tensor(kappa)
    p_leaf = {}
    for a, na in enumerate(free):
        for b, nb in enumerate(free):
            ia, ib = names.index(original.get(na, na)), names.index(original.get(nb, nb))
            p_leaf[(na, nb)] = to_sp(ls.restrict(full[ia][ib]))
    hams = {}
    flows_fields = {}
    for f in case.flows:
        h = ls.psit_leaf(f.i, f.k + f.j)
        hams[f.name] = to_sp(h)
        fld = reduced.reduced_field(kappa, reduced.psit[(f.i, f.k + f.j)])
        flows_fields[f.name] = {
            nm: to_sp(ls.restrict(fld[original.get(nm, nm)])) for nm in free}
    return case, free, p_leaf, hams, flows_fields


def solve_case(case_id, ansatz, time_map, param_map, extra_syms):
    """ansatz: {leaf_var: sympy expr with unknown coefficient symbols}."""
    case, free, p_leaf, hams, flow_fields = engine_leaf(case_id)
    qp = [sp.Symbol(s) for s in ("q1", "p1", "q2", "p2")]
    q1, p1, q2, p2 = qp
    unknowns = sorted({s for e in ansatz.values() for s in e.free_symbols
                       if s.name.startswith("k")}, key=lambda s: s.name)
    unknowns += sorted({s for e in list(time_map.values()) + list(param_map.values())
                        for s in e.free_symbols if s.name.startswith("k")},
                       key=lambda s: s.name)
    unknowns = list(dict.fromkeys(unknowns))
    sign = sp.Symbol("sgn")

    def canb(f, g):
        return (sp.diff(f, q1) * sp.diff(g, p1) - sp.diff(f, p1) * sp.diff(g, q1)
                + sp.diff(f, q2) * sp.diff(g, p2) - sp.diff(f, p2) * sp.diff(g, q2))

    phi = dict(ansatz)
    sub_phi = {sp.Symbol(k): v for k, v in phi.items()}
    sub_all = dict(sub_phi)
    sub_all.update({sp.Symbol(k): v for k, v in param_map.items()})
    sub_all.update({sp.Symbol(k): v for k, v in time_map.items()})

    eqs = []
    # bracket conditions
    for a in free:
        for b in free:
            if a >= b:
                continue
            lhs = canb(phi[a], phi[b])
            rhs = sign * p_leaf[(a, b)].subs(sub_all, simultaneous=True)
            eqs.append(sp.expand(lhs - rhs))
    # flow matching for both Hamiltonian flows
    goldens = {}
    for f in case.flows:
        goldens[f.name] = sp.sympify(f.golden.replace("^", "**"))
    for f in case.flows:
        tsym = sp.Symbol(f.time)
        h = goldens[f.name]
        c = sp.Symbol(f"kc_{f.name}")
        unknowns.append(c)
        for a in free:
            lhs = (sp.diff(phi[a], q1) * sp.diff(h, p1) - sp.diff(phi[a], p1) * sp.diff(h, q1)
                   + sp.diff(phi[a], q2) * sp.diff(h, p2) - sp.diff(phi[a], p2) * sp.diff(h, q2)
                   + sp.diff(phi[a], tsym))
            rhs = c * flow_fields[f.name][a].subs(sub_all, simultaneous=True)
            eqs.append(sp.expand(lhs - rhs))

    all_vars = set(qp) | {sp.Symbol(t) for t in case.times} | set(extra_syms)
    coeff_eqs = set()
    for e in eqs:
        poly = sp.Poly(e, *sorted(all_vars, key=lambda s: s.name))
        for coeff in poly.coeffs():
            coeff_eqs.add(sp.expand(coeff))
    coeff_eqs.discard(0)

    for s in (1, -1):
        system = [e.subs(sign, s) for e in coeff_eqs]
        sols = sp.solve(system, unknowns, dict=True)
        rational = []
        for sol in sols:
            if all(v.is_rational for v in sol.values()):
                rational.append(sol)
        if rational:
            print(f"sign = {s}: {len(rational)} rational solution(s)")
            for sol in rational:
                print("  ", {str(k): v for k, v in sol.items()})
                yield s, sol, phi, goldens, hams, time_map, param_map, case
            return
    print("NO SOLUTION FOUND")


def report(case_id, ansatz, time_map, param_map, extra_syms):
    for s, sol, phi, goldens, hams, tmap, pmap, case in solve_case(
            case_id, ansatz, time_map, param_map, extra_syms):
        print(f"\n=== {case_id}: sign {s} ===")
        subst = {}
        for k, v in phi.items():
            subst[k] = sp.expand(v.subs(sol))
            print(f"  {k} = {subst[k]}")
        for k, v in tmap.items():
            print(f"  {k} -> {sp.expand(v.subs(sol))}")
        for k, v in pmap.items():
            print(f"  {k} -> {sp.expand(v.subs(sol))}")
        # induced Hamiltonian correction per flow
        sub_all = {sp.Symbol(k): v.subs(sol) for k, v in phi.items()}
        sub_all.update({sp.Symbol(k): v.subs(sol) for k, v in pmap.items()})
        sub_all.update({sp.Symbol(k): v.subs(sol) for k, v in tmap.items()})
        for f in case.flows:
            c = sol.get(sp.Symbol(f"kc_{f.name}"), 1)
            hsub = sp.expand(hams[f.name].subs(sub_all, simultaneous=True))
            scale = sp.Rational(s, 1) * c
            extra = sp.expand(goldens[f.name] - scale * hsub)
            print(f"  flow {f.name}: h_scale = {scale}, extra = {extra}")
        break


def p22():
    q1, p1, q2, p2, t1, t2 = sp.symbols("q1 p1 q2 p2 t1 t2")
    alpha = sp.Symbol("alpha4g")   # golden parameter name placeholder
    k = sp.numbered_symbols("k", start=0)
    ks = [next(k) for _ in range(40)]
    ansatz = {
        "W1": ks[0] * q1,
        "V2": ks[1] * q2 + ks[2] * p2 + ks[3] * q1 ** 2 + ks[4] * t2,
        "Wt2": ks[5] * q2 + ks[6] * p2 + ks[7] * q1 ** 2 + ks[8] * t2,
        "V3": (ks[9] * p1 + ks[10] * q1 * q2 + ks[11] * q1 * p2
               + ks[12] * q1 ** 3 + ks[13] * q1 * t2 + ks[14] * t1),
    }
    time_map = {"alpha3": ks[15] * t1, "alpha2": ks[16] * t2}
    param_map = {"alpha4": ks[17] * alpha + ks[18] * t2 ** 2}
    report("sl2n3-I-P22", ansatz, time_map, param_map, [alpha])


def p4h():
    q1, p1, q2, p2, t1, t2 = sp.symbols("q1 p1 q2 p2 t1 t2")
    alpha = sp.Symbol("alphag")
    beta = sp.Symbol("betag")
    b3 = sp.Symbol("beta3")
    k = sp.numbered_symbols("k", start=0)
    ks = [next(k) for _ in range(40)]
    # weights: V2~2, Wt1~1, U3~3, W2~2 with (q1,p1,q2,p2)=(1,2,1,2), t1~2, t2~1
    ansatz = {
        "V2": (ks[0] * p1 + ks[1] * p2 + ks[2] * q1 ** 2 + ks[3] * q1 * q2
               + ks[4] * q2 ** 2 + ks[5] * t1 + ks[6] * t2 * q1 + ks[7] * t2 * q2
               + ks[8] * t2 ** 2),
        "Wt1": ks[9] * q1 + ks[10] * q2 + ks[11] * t2,
        "U3": (ks[12] * q2 * p2 + ks[13] * b3 + ks[14] * q1 * p1 + ks[15] * q1 * p2
               + ks[16] * q1 ** 3 + ks[17] * t1 * q1 + ks[18] * t1 * q2
               + ks[19] * t2 * q1 ** 2 + ks[20] * t2 ** 2 * q1 + ks[21] * t2 ** 2 * q2
               + ks[22] * t2 ** 3 + ks[23] * t2 * t1 + ks[24] * q1 ** 2 * q2
               + ks[25] * q1 * q2 ** 2 + ks[26] * q2 ** 3 + ks[27] * q2 * p1
               + ks[28] * t2 * q1 * q2 + ks[29] * t2 * q2 ** 2),
        "W2": (ks[30] * p2 + ks[31] * p1 + ks[32] * q1 ** 2 + ks[33] * q1 * q2
               + ks[34] * q2 ** 2 + ks[35] * t1 + ks[36] * t2 * q1 + ks[37] * t2 * q2
               + ks[38] * t2 ** 2),
    }
    time_map = {"alpha2": ks[39] * t1, "alpha1": sp.Symbol("k40") * t2}
    param_map = {"alpha6": b3 ** 2}
    report("sl2n3-I-P4h", ansatz, time_map, param_map, [alpha, beta, b3])


if __name__ == "__main__":
    which = sys.argv[1] if len(sys.argv) > 1 else "p22"
    {"p22": p22, "p4h": p4h}[which]()
