"""Exact sparse multivariate polynomial and restricted rational-expression algebra.

All symbolic computation in this package runs on two value types defined here:

* ``Poly`` -- a multivariate polynomial over the rationals, stored sparsely as
  a dict mapping monomials to nonzero ``Fraction`` coefficients.  Variables
  live in an append-only ``VarTable`` shared by every value of one computation
  context, which fixes the canonical term order.

* ``RatExpr`` -- a polynomial divided by a monomial in *unit variables*
  (variables declared nonvanishing, such as section coordinates or the
  spectral parameter).  General rational functions are deliberately not
  supported; any operation that would need a non-unit denominator raises
  ``NonUnitDenominator``.

Monomials are tuples of ``(var_index, exponent)`` pairs sorted by index.
The canonical term order is graded lexicographic (total degree first, then
lexicographic in table order), and serialization is bit-stable so polynomial
values can be used in golden files.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

Mono = Tuple[Tuple[int, int], ...]
Coeff = Fraction
Scalar = Union[int, Fraction]

ONE: Mono = ()


class NonUnitDenominator(ValueError):
    """A denominator involves a variable not declared as a unit."""


class DegreeOverflow(ValueError):
    """A polynomial exceeded the declared degree bound in a collect."""


class UnweightedVariable(KeyError):
    """A weighted-degree query met a variable without an assigned weight."""


class ParseError(ValueError):
    """Canonical polynomial text could not be parsed."""


class VarTable:
    """Append-only registry of variable names defining the term order.

    Registration order is significant: it is the tie-break order of the
    graded-lexicographic comparison, hence part of the canonical form.
    """

    def __init__(self) -> None:
        self._names: List[str] = []
        self._index: Dict[str, int] = {}
        self._units: set = set()

    def register(self, name: str, unit: bool = False) -> int:
        """Register ``name`` (idempotent) and return its index."""
        if name in self._index:
            idx = self._index[name]
        else:
            idx = len(self._names)
            self._names.append(name)
            self._index[name] = idx
        if unit:
            self._units.add(idx)
        return idx

    def register_all(self, names: Iterable[str], unit: bool = False) -> List[int]:
        return [self.register(n, unit=unit) for n in names]

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unregistered variable {name!r}")

    def name(self, idx: int) -> str:
        return self._names[idx]

    def is_unit(self, idx: int) -> bool:
        return idx in self._units

    def mark_unit(self, name: str) -> None:
        self._units.add(self.index(name))

    def names(self) -> Tuple[str, ...]:
        return tuple(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    # -- convenience constructors -------------------------------------------------

    def var(self, name: str) -> "Poly":
        return Poly(self, {((self.index(name), 1),): Fraction(1)})

    def const(self, value: Scalar) -> "Poly":
        return Poly(self, {ONE: Fraction(value)} if value else {})

    def zero(self) -> "Poly":
        return Poly(self, {})

    def one(self) -> "Poly":
        return self.const(1)


def mono_mul(a: Mono, b: Mono) -> Mono:
    if not a:
        return b
    if not b:
        return a
    exps: Dict[int, int] = dict(a)
    for i, e in b:
        exps[i] = exps.get(i, 0) + e
    return tuple(sorted((i, e) for i, e in exps.items() if e))


def mono_degree(m: Mono) -> int:
    return sum(e for _, e in m)


def _mono_sort_key(m: Mono, nvars: int) -> Tuple:
    dense = [0] * nvars
    for i, e in m:
        dense[i] = e
    return (mono_degree(m), tuple(dense))


class Poly:
    """Multivariate polynomial with exact rational coefficients.

    Values are immutable once constructed; every operation returns a fresh
    ``Poly``.  ``terms`` never stores zero coefficients.
    """

    __slots__ = ("table", "terms")

    def __init__(self, table: VarTable, terms: Mapping[Mono, Fraction]):
        self.table = table
        self.terms: Dict[Mono, Fraction] = {m: c for m, c in terms.items() if c}

    # -- predicates ---------------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return all(m == ONE for m in self.terms)

    def constant_value(self) -> Fraction:
        if self.is_zero():
            return Fraction(0)
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return self.terms[ONE]

    def variables(self) -> set:
        """Indices of variables that actually occur."""
        out = set()
        for m in self.terms:
            for i, _ in m:
                out.add(i)
        return out

    def variable_names(self) -> set:
        return {self.table.name(i) for i in self.variables()}

    def total_degree(self) -> int:
        if not self.terms:
            return 0
        return max(mono_degree(m) for m in self.terms)

    def degree_in(self, name: str) -> int:
        idx = self.table.index(name)
        deg = 0
        for m in self.terms:
            for i, e in m:
                if i == idx and e > deg:
                    deg = e
        return deg

    def as_unit_term(self) -> Tuple[Fraction, Mono]:
        """Decompose a single-term polynomial over unit variables.

        Raises ``NonUnitDenominator`` when the polynomial is not a nonzero
        monomial in unit variables (this is the divisibility gate used by
        substitution and linear solving).
        """
        if len(self.terms) != 1:
            raise NonUnitDenominator(
                f"not a single-term polynomial: {serialize(self)}")
        [(m, c)] = self.terms.items()
        for i, _ in m:
            if not self.table.is_unit(i):
                raise NonUnitDenominator(
                    f"variable {self.table.name(i)!r} is not a declared unit")
        return c, m

    # -- arithmetic ---------------------------------------------------------------

    def _coerce(self, other) -> Optional["Poly"]:
        if isinstance(other, Poly):
            if other.table is not self.table:
                raise ValueError("operands use different variable tables")
            return other
        if isinstance(other, (int, Fraction)):
            return self.table.const(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Poly(self.table, out)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out = dict(self.terms)
        for m, c in o.terms.items():
            out[m] = out.get(m, Fraction(0)) - c
        return Poly(self.table, out)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Poly(self.table, {m: -c for m, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            f = Fraction(other)
            if not f:
                return self.table.zero()
            return Poly(self.table, {m: c * f for m, c in self.terms.items()})
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        out: Dict[Mono, Fraction] = {}
        for ma, ca in self.terms.items():
            for mb, cb in o.terms.items():
                m = mono_mul(ma, mb)
                out[m] = out.get(m, Fraction(0)) + ca * cb
        return Poly(self.table, out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative power of a Poly; use RatExpr division")
        result = self.table.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = self.table.const(other)
        if isinstance(other, RatExpr):
            return other == self
        if not isinstance(other, Poly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __repr__(self) -> str:
        return f"Poly({serialize(self)})"

    # -- calculus and structure ----------------------------------------------------

    def partial(self, name: str) -> "Poly":
        """Exact partial derivative with respect to one variable."""
        idx = self.table.index(name)
        out: Dict[Mono, Fraction] = {}
        for m, c in self.terms.items():
            for pos, (i, e) in enumerate(m):
                if i == idx:
                    rest = m[:pos] + (((i, e - 1),) if e > 1 else ()) + m[pos + 1:]
                    rest = tuple(sorted(rest))
                    out[rest] = out.get(rest, Fraction(0)) + c * e
                    break
        return Poly(self.table, out)

    def coefficients_in(self, name: str) -> Dict[int, "Poly"]:
        """Split into coefficients by the power of one variable."""
        idx = self.table.index(name)
        buckets: Dict[int, Dict[Mono, Fraction]] = {}
        for m, c in self.terms.items():
            power = 0
            rest = []
            for i, e in m:
                if i == idx:
                    power = e
                else:
                    rest.append((i, e))
            b = buckets.setdefault(power, {})
            b[tuple(rest)] = b.get(tuple(rest), Fraction(0)) + c
        return {p: Poly(self.table, t) for p, t in buckets.items()}

    def substitute(self, bindings: Mapping[str, "ExprLike"]) -> "RatExpr":
        """Simultaneous substitution of variables by Poly/RatExpr values."""
        if not bindings:
            return RatExpr.from_poly(self)
        idx_bindings: Dict[int, RatExpr] = {}
        for name, value in bindings.items():
            idx_bindings[self.table.index(name)] = as_ratexpr(self.table, value)
        result = RatExpr(self.table.zero(), ONE)
        pow_cache: Dict[Tuple[int, int], RatExpr] = {}
        for m, c in self.terms.items():
            term = RatExpr(self.table.const(c), ONE)
            plain: List[Tuple[int, int]] = []
            for i, e in m:
                if i in idx_bindings:
                    key = (i, e)
                    if key not in pow_cache:
                        pow_cache[key] = idx_bindings[i] ** e
                    term = term * pow_cache[key]
                else:
                    plain.append((i, e))
            if plain:
                term = term * Poly(self.table, {tuple(plain): Fraction(1)})
            result = result + term
        return result

    def evaluate(self, assignment: Mapping[str, complex]):
        """Numeric evaluation; every occurring variable must be assigned."""
        vals: Dict[int, complex] = {self.table.index(n): v for n, v in assignment.items()}
        total = 0
        for m, c in self.terms.items():
            prod = c.numerator / c.denominator if isinstance(c, Fraction) else c
            for i, e in m:
                prod *= vals[i] ** e
            total += prod
        return total

    def evaluate_exact(self, assignment: Mapping[str, Scalar]) -> Fraction:
        vals: Dict[int, Fraction] = {
            self.table.index(n): Fraction(v) for n, v in assignment.items()}
        total = Fraction(0)
        for m, c in self.terms.items():
            prod = c
            for i, e in m:
                prod *= vals[i] ** e
            total += prod
        return total


class WeightVector:
    """Integer weights per variable (negative values allowed)."""

    def __init__(self, table: VarTable, weights: Mapping[str, int]):
        self.table = table
        self.weights: Dict[int, int] = {table.index(n): w for n, w in weights.items()}

    def of_mono(self, m: Mono) -> int:
        total = 0
        for i, e in m:
            if i not in self.weights:
                raise UnweightedVariable(self.table.name(i))
            total += self.weights[i] * e
        return total


def weighted_degree(f: Poly, w: WeightVector) -> Tuple[bool, int]:
    """Quasihomogeneity test.

    Returns ``(True, h)`` when every term of ``f`` has weighted degree ``h``
    and ``(False, max_weight)`` otherwise.  The zero polynomial and constants
    report ``(True, 0)``.
    """
    if f.is_zero():
        return True, 0
    degrees = {w.of_mono(m) for m in f.terms}
    if len(degrees) == 1:
        return True, degrees.pop()
    return False, max(degrees)


ExprLike = Union[Poly, "RatExpr", int, Fraction]


def as_ratexpr(table: VarTable, value: ExprLike) -> "RatExpr":
    if isinstance(value, RatExpr):
        return value
    if isinstance(value, Poly):
        return RatExpr.from_poly(value)
    return RatExpr.from_poly(table.const(value))


class RatExpr:
    """Polynomial divided by a monomial in declared unit variables.

    The representation is reduced: the denominator shares no variable power
    that divides every numerator term, and a zero numerator forces a trivial
    denominator.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Mono = ONE):
        for i, _ in den:
            if not num.table.is_unit(i):
                raise NonUnitDenominator(
                    f"variable {num.table.name(i)!r} in denominator is not a unit")
        if num.is_zero():
            den = ONE
        elif den:
            num, den = _cancel(num, den)
        self.num = num
        self.den = den

    @staticmethod
    def from_poly(p: Poly) -> "RatExpr":
        return RatExpr(p, ONE)

    @property
    def table(self) -> VarTable:
        return self.num.table

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_poly(self) -> bool:
        return not self.den

    def as_poly(self) -> Poly:
        if self.den:
            raise NonUnitDenominator(
                f"expression has residual denominator {_mono_text(self.table, self.den)}")
        return self.num

    # -- arithmetic ---------------------------------------------------------------

    def _coerce(self, other) -> Optional["RatExpr"]:
        if isinstance(other, RatExpr):
            if other.table is not self.table:
                raise ValueError("operands use different variable tables")
            return other
        if isinstance(other, Poly):
            return RatExpr.from_poly(other)
        if isinstance(other, (int, Fraction)):
            return RatExpr.from_poly(self.table.const(other))
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        lcm = _mono_lcm(self.den, o.den)
        a = self.num * Poly(self.table, {_mono_div(lcm, self.den): Fraction(1)})
        b = o.num * Poly(self.table, {_mono_div(lcm, o.den): Fraction(1)})
        return RatExpr(a + b, lcm)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return RatExpr(-self.num, self.den)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return RatExpr(self.num * o.num, mono_mul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        coeff, mono = o.num.as_unit_term()
        inv = RatExpr(Poly(self.table, {o.den: Fraction(1, 1) / coeff}), mono)
        return self * inv

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("negative powers are not supported directly")
        result = RatExpr.from_poly(self.table.one())
        for _ in range(n):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return (self - o).is_zero()

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self) -> str:
        return f"RatExpr({serialize(self)})"

    # -- calculus -----------------------------------------------------------------

    def partial(self, name: str) -> "RatExpr":
        idx = self.table.index(name)
        dnum = self.num.partial(name)
        e = dict(self.den).get(idx, 0)
        if not e:
            return RatExpr(dnum, self.den)
        # d/dv (num / (v^e m)) = (v dnum - e num) / (v^{e+1} m)
        v = self.table.var(name)
        new_num = v * dnum - e * self.num
        return RatExpr(new_num, mono_mul(self.den, ((idx, 1),)))

    def substitute(self, bindings: Mapping[str, ExprLike]) -> "RatExpr":
        num = self.num.substitute(bindings)
        den = RatExpr.from_poly(self.table.one())
        for i, e in self.den:
            name = self.table.name(i)
            if name in bindings:
                bound = as_ratexpr(self.table, bindings[name])
                bound.num.as_unit_term()  # must stay invertible
                den = den * bound ** e
            else:
                den = den * RatExpr(Poly(self.table, {((i, e),): Fraction(1)}), ONE)
        inv_coeff, inv_mono = den.num.as_unit_term()
        inv = RatExpr(Poly(self.table, {den.den: Fraction(1, 1) / inv_coeff}), inv_mono)
        return num * inv

    def evaluate(self, assignment: Mapping[str, complex]):
        denom = 1
        for i, e in self.den:
            denom *= assignment[self.table.name(i)] ** e
        return self.num.evaluate(assignment) / denom

    def variable_names(self) -> set:
        names = self.num.variable_names()
        for i, _ in self.den:
            names.add(self.table.name(i))
        return names


def _cancel(num: Poly, den: Mono) -> Tuple[Poly, Mono]:
    """Remove denominator powers dividing every numerator term."""
    reduced = []
    shift: Dict[int, int] = {}
    for i, e in den:
        common = e
        for m in num.terms:
            have = dict(m).get(i, 0)
            common = min(common, have)
            if common == 0:
                break
        if common:
            shift[i] = common
        if e - common:
            reduced.append((i, e - common))
    if shift:
        new_terms: Dict[Mono, Fraction] = {}
        for m, c in num.terms.items():
            exps = dict(m)
            for i, s in shift.items():
                exps[i] -= s
            new_terms[tuple(sorted((i, e) for i, e in exps.items() if e))] = c
        num = Poly(num.table, new_terms)
    return num, tuple(reduced)


def _mono_lcm(a: Mono, b: Mono) -> Mono:
    exps = dict(a)
    for i, e in b:
        exps[i] = max(exps.get(i, 0), e)
    return tuple(sorted(exps.items()))


def _mono_div(a: Mono, b: Mono) -> Mono:
    exps = dict(a)
    for i, e in b:
        exps[i] = exps.get(i, 0) - e
        if exps[i] < 0:
            raise ValueError("monomial division underflow")
    return tuple(sorted((i, e) for i, e in exps.items() if e))


def collect_lambda(f: Poly, name: str, max_deg: int) -> List[Poly]:
    """Coefficient list of ``f`` in one variable, highest power first.

    The returned list has length ``max_deg + 1``; a degree above ``max_deg``
    raises ``DegreeOverflow``.
    """
    coeffs = f.coefficients_in(name)
    if coeffs and max(coeffs) > max_deg:
        raise DegreeOverflow(
            f"degree {max(coeffs)} in {name!r} exceeds bound {max_deg}")
    zero = f.table.zero()
    return [coeffs.get(p, zero) for p in range(max_deg, -1, -1)]


# -- canonical text ------------------------------------------------------------------


def _mono_text(table: VarTable, m: Mono) -> str:
    if not m:
        return "1"
    parts = []
    for i, e in m:
        parts.append(table.name(i) if e == 1 else f"{table.name(i)}^{e}")
    return "*".join(parts)


def serialize(f: ExprLike) -> str:
    """Canonical text: graded-lex descending terms, explicit rationals.

    Format per term: ``<num>/<den>*v1^e1*v2^e2`` with ``/1`` and ``^1``
    omitted, unit coefficients dropped, and `` + `` / `` - `` separators.
    """
    if isinstance(f, RatExpr):
        if not f.den:
            return serialize(f.num)
        return f"({serialize(f.num)})/{_mono_text(f.table, f.den)}"
    if not isinstance(f, Poly):
        raise TypeError(f"cannot serialize {type(f).__name__}")
    if f.is_zero():
        return "0"
    nvars = len(f.table)
    items = sorted(f.terms.items(), key=lambda kv: _mono_sort_key(kv[0], nvars),
                   reverse=True)
    chunks: List[str] = []
    for pos, (m, c) in enumerate(items):
        sign = "-" if c < 0 else "+"
        mag = -c if c < 0 else c
        num_txt = str(mag.numerator) if mag.denominator == 1 \
            else f"{mag.numerator}/{mag.denominator}"
        if m == ONE:
            body = num_txt
        elif mag == 1:
            body = _mono_text(f.table, m)
        else:
            body = f"{num_txt}*{_mono_text(f.table, m)}"
        if pos == 0:
            chunks.append(body if sign == "+" else f"-{body}")
        else:
            chunks.append(f" {sign} {body}")
    return "".join(chunks)


def parse(text: str, table: VarTable, auto_register: bool = False) -> Poly:
    """Parse canonical (or canonical-like) polynomial text back into a Poly."""
    s = text.strip()
    if not s:
        raise ParseError("empty polynomial text")
    if s == "0":
        return table.zero()
    # split into signed terms at top level (no parentheses in canonical polys)
    terms: List[Tuple[int, str]] = []
    sign, start = 1, 0
    if s[0] in "+-":
        sign = -1 if s[0] == "-" else 1
        start = 1
    depth = 0
    current = []
    i = start
    while i <= len(s):
        ch = s[i] if i < len(s) else None
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch is None or (depth == 0 and ch in "+-" and i > 0 and s[i - 1] not in "eE^*/"):
            terms.append((sign, "".join(current).strip()))
            if ch is None:
                break
            sign = -1 if ch == "-" else 1
            current = []
        else:
            current.append(ch)
        i += 1
    result = table.zero()
    for sgn, term in terms:
        if not term:
            raise ParseError(f"dangling sign in {text!r}")
        coeff = Fraction(sgn)
        mono: Dict[int, int] = {}
        for factor in term.split("*"):
            factor = factor.strip()
            if not factor:
                raise ParseError(f"empty factor in term {term!r}")
            if factor[0].isdigit():
                try:
                    coeff *= Fraction(factor)
                except ValueError as exc:
                    raise ParseError(f"bad coefficient {factor!r}") from exc
                continue
            if "^" in factor:
                name, _, exp_txt = factor.partition("^")
                try:
                    exp = int(exp_txt)
                except ValueError as exc:
                    raise ParseError(f"bad exponent in {factor!r}") from exc
            else:
                name, exp = factor, 1
            name = name.strip()
            if name not in table:
                if auto_register:
                    table.register(name)
                else:
                    raise ParseError(f"unregistered variable {name!r}")
            idx = table.index(name)
            mono[idx] = mono.get(idx, 0) + exp
        key = tuple(sorted(mono.items()))
        result = result + Poly(table, {key: coeff})
    return result
