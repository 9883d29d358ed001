"""One-time derivation of the rank-two reduction chart for the so5 case.

The two weight-one generator flows are conjugations by exponentials of
constant nilpotent matrices, so they integrate in closed form.  Flowing a
generic point onto the section (first zeroing the top-left entry's partner,
then the remaining one) expresses the invariant coordinates exactly, with
powers of the nonvanishing coordinate in denominators.  The result is frozen
into the case file and re-verified by the engine.

Run:  python scripts/derive_so5_chart.py
"""

from __future__ import annotations

import sys
from fractions import Fraction

sys.path.insert(0, "src")

from painlax.exactmat import mat_mul
from painlax.liealg import get_algebra
from painlax.looppoisson import casimir_family, make_context
from painlax.poly import RatExpr, VarTable, as_ratexpr, serialize
from painlax.reduction import distribution


def main():
    so5 = get_algebra("so5")
    x0 = [0, 0, 0, 0, 1, 0, 0, 0, 1, 0]  # t_0 = 1, x_0 = 1
    ctx = make_context(so5, 1, x0=x0)
    table = ctx.table
    table.mark_unit("s_1")
    fam = casimir_family(ctx)

    # constant generator matrices of the two weight-one flows
    n_mats = [ctx.nabla(fam[(i, 1)], 1) for i in (1, 2)]
    for i, m in enumerate(n_mats, 1):
        print(f"N{i} =", [[serialize(x) for x in row] for row in m])

    for nm in ("_s", "_r"):
        table.register(nm)
    s, r = table.var("_s"), table.var("_r")

    # exp(s N1 + r N2): strictly lower triangular, so the series terminates
    gen = [[as_ratexpr(table, n_mats[0][i][j].num * s + n_mats[1][i][j].num * r)
            for j in range(5)] for i in range(5)]

    def mexp(m):
        out = [[as_ratexpr(table, 1 if i == j else 0) for j in range(5)]
               for i in range(5)]
        power = [[as_ratexpr(table, 1 if i == j else 0) for j in range(5)]
                 for i in range(5)]
        fact = 1
        for k in range(1, 6):
            power = mat_mul(power, m)
            fact *= k
            out = [[a + b * Fraction(1, fact) for a, b in zip(ra, rb)]
                   for ra, rb in zip(out, power)]
        return out

    e_plus = mexp(gen)
    e_minus = mexp([[-x for x in row] for row in gen])
    x1 = ctx.part_matrix(1)
    conj = mat_mul(mat_mul(e_plus, x1), e_minus)
    coords = so5.matrix_coords(conj, table)
    names = so5.copy_names(1)
    flowed = dict(zip(names, coords))

    # land on the section: first flow kills r_1, then the second kills p_1
    s_star = as_ratexpr(table, table.var("r_1")) / (2 * table.var("s_1"))
    s_star = -s_star
    step1 = {nm: e.substitute({"_s": s_star}) for nm, e in flowed.items()}
    r_star = -step1["p_1"] / (2 * table.var("s_1"))
    step2 = {nm: e.substitute({"_r": r_star}) for nm, e in step1.items()}

    check_p = step2["p_1"]
    check_r = step2["r_1"]
    print("on-section p_1:", serialize(check_p))
    print("on-section r_1:", serialize(check_r))

    inv_names = {"q_1": "Q", "s_1": "S", "t_1": "T", "u_1": "U",
                 "v_1": "V", "w_1": "W", "x_1": "X", "y_1": "Y"}
    import json
    out = {}
    for loop_nm, cap in inv_names.items():
        expr = step2[loop_nm]
        num = serialize(expr.num)
        den = None
        if expr.den:
            from painlax.poly import _mono_text
            den = _mono_text(table, expr.den)
        out[cap] = [num, den] if den else num
        print(f"{cap} = {serialize(expr)}")

    # verify with the engine's chart machinery
    gens = distribution(ctx, fam)
    from painlax.reduction import ReductionChart, verify_chart
    for cap in inv_names.values():
        table.register(cap)
    invariants = {}
    for loop_nm, cap in inv_names.items():
        invariants[cap] = step2[loop_nm]
    order = ["Q", "S", "T", "U", "V", "W", "X", "Y"]
    inverse = {"p_1": as_ratexpr(table, 0), "r_1": as_ratexpr(table, 0)}
    for loop_nm, cap in inv_names.items():
        inverse[loop_nm] = as_ratexpr(table, table.var(cap))
    chart = ReductionChart(order, invariants, {"p_1": Fraction(0), "r_1": Fraction(0)},
                           {}, inverse)
    verify_chart(ctx, chart, gens)
    print("chart verified by engine")
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
