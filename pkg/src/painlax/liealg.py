"""Matrix-represented simple Lie algebras: bracket, trace form, gradients.

An algebra is described declaratively (JSON spec file or literal dict) by an
explicit matrix basis.  Registration performs the structural checks once:
linear independence, bracket closure, nondegeneracy of the trace form.  All
derived data (dual basis for gradients, adjoint structure tensor, coordinate
extraction pivots) is precomputed with exact rational arithmetic.

Symbolic elements are coordinate vectors of ``RatExpr`` values over a shared
``VarTable``; the representation matrix of such an element has ``RatExpr``
entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Dict, List, Optional, Sequence, Tuple

from .exactmat import (Matrix, commutator, det, frac_inverse, frac_rank,
                       mat_eq, mat_map, mat_mul, trace)
from .poly import Poly, RatExpr, VarTable, as_ratexpr

FracMatrix = List[List[Fraction]]


class ClosureViolation(ValueError):
    """A commutator left the span of the declared basis."""


class DegenerateForm(ValueError):
    """The representation trace form is degenerate on the algebra."""


@dataclass
class LieAlgebraSpec:
    """A simple Lie algebra given by an explicit matrix basis.

    ``basis[i]`` is the matrix attached to coordinate ``coord_names[i]``; a
    generic element is ``sum_i x_i * basis[i]``.  ``exponents`` are the Lie
    algebra exponents (invariant degrees minus one) and
    ``invariant_normalizations[i]`` rescales the characteristic-polynomial
    coefficient that defines the i-th invariant.
    """

    name: str
    dim: int
    rank: int
    exponents: Tuple[int, ...]
    rep_dim: int
    basis: List[FracMatrix]
    coord_names: Tuple[str, ...]
    coord_format: str = "{base}{copy}"
    invariant_normalizations: Tuple[Fraction, ...] = ()

    # derived, filled by __post_init__
    gram: FracMatrix = field(default_factory=list, repr=False)
    gram_inv: FracMatrix = field(default_factory=list, repr=False)
    dual_basis: List[FracMatrix] = field(default_factory=list, repr=False)
    adjoint_tensor: List[FracMatrix] = field(default_factory=list, repr=False)
    _pivots: List[Tuple[int, int]] = field(default_factory=list, repr=False)
    _pivot_inv: FracMatrix = field(default_factory=list, repr=False)

    def __post_init__(self):
        d, N = self.dim, self.rep_dim
        if len(self.basis) != d or len(self.coord_names) != d:
            raise ValueError(f"{self.name}: basis/coordinate count mismatch")
        if not self.invariant_normalizations:
            self.invariant_normalizations = tuple(Fraction(1) for _ in range(self.rank))

        flat = [[self.basis[b][i][j] for i in range(N) for j in range(N)]
                for b in range(d)]
        if frac_rank(flat) != d:
            raise ValueError(f"{self.name}: basis is linearly dependent")

        self._pivots, self._pivot_inv = _coordinate_pivots(self.basis, N)

        self.gram = [[trace(mat_mul(self.basis[a], self.basis[b]))
                      for b in range(d)] for a in range(d)]
        if frac_rank(self.gram) != d:
            raise DegenerateForm(f"{self.name}: trace form is degenerate")
        self.gram_inv = frac_inverse(self.gram)
        # dual basis: Tr(dual[b] * basis[a]) = delta_ab
        self.dual_basis = []
        for b in range(d):
            m = [[Fraction(0)] * N for _ in range(N)]
            for g in range(d):
                c = self.gram_inv[g][b]
                if c:
                    for i in range(N):
                        for j in range(N):
                            m[i][j] += c * self.basis[g][i][j]
            self.dual_basis.append(m)

        # closure check and adjoint structure tensor A(B_g)[a][b] = [B_g, dual_b]_a
        self.adjoint_tensor = []
        for g in range(d):
            ad = [[Fraction(0)] * d for _ in range(d)]
            for b in range(d):
                col = self.rational_coords(commutator(self.basis[g], self.dual_basis[b]))
                for a in range(d):
                    ad[a][b] = col[a]
            self.adjoint_tensor.append(ad)
        for a in range(d):
            for b in range(a + 1, d):
                self.rational_coords(commutator(self.basis[a], self.basis[b]))

    # -- coordinates --------------------------------------------------------------

    def rational_coords(self, m: FracMatrix) -> List[Fraction]:
        """Coordinates of a rational matrix in the basis (checked)."""
        vec = [[m[i][j]] for (i, j) in self._pivots]
        coords = [row[0] for row in mat_mul(self._pivot_inv, vec)]
        recon = [[Fraction(0)] * self.rep_dim for _ in range(self.rep_dim)]
        for b, c in enumerate(coords):
            if c:
                for i in range(self.rep_dim):
                    for j in range(self.rep_dim):
                        recon[i][j] += c * self.basis[b][i][j]
        if recon != [[Fraction(x) for x in row] for row in m]:
            raise ClosureViolation(f"{self.name}: matrix not in the algebra span")
        return coords

    def matrix_coords(self, m: Matrix, table: VarTable) -> List[RatExpr]:
        """Coordinates of a symbolic matrix in the basis (membership-checked)."""
        coords = []
        for b in range(self.dim):
            acc = as_ratexpr(table, 0)
            for pos, (i, j) in enumerate(self._pivots):
                c = self._pivot_inv[b][pos]
                if c:
                    acc = acc + as_ratexpr(table, m[i][j]) * c
            coords.append(acc)
        recon = self.element_matrix(table, coords)
        if not mat_eq(mat_map(m, lambda x: as_ratexpr(table, x)), recon):
            raise ClosureViolation(f"{self.name}: matrix not in the algebra span")
        return coords

    def element_matrix(self, table: VarTable, coords: Sequence) -> Matrix:
        """Representation matrix sum_i coords[i] * basis[i]."""
        N = self.rep_dim
        out = [[as_ratexpr(table, 0) for _ in range(N)] for _ in range(N)]
        for b, c in enumerate(coords):
            ce = as_ratexpr(table, c)
            if ce.is_zero():
                continue
            for i in range(N):
                for j in range(N):
                    if self.basis[b][i][j]:
                        out[i][j] = out[i][j] + ce * self.basis[b][i][j]
        return out

    def coord_name(self, base_index: int, copy: int) -> str:
        return self.coord_format.format(base=self.coord_names[base_index], copy=copy)

    def copy_names(self, copy: int) -> List[str]:
        return [self.coord_name(b, copy) for b in range(self.dim)]

    # -- operations ---------------------------------------------------------------

    def bracket(self, table: VarTable, x: Sequence, y: Sequence) -> List[RatExpr]:
        """Coordinates of [X, Y], re-expressed in the basis."""
        mx = self.element_matrix(table, x)
        my = self.element_matrix(table, y)
        return self.matrix_coords(commutator(mx, my), table)

    def gradient(self, table: VarTable, covector: Sequence) -> Matrix:
        """Trace-form dual of a coordinate covector (dF/dx_i entries).

        Returns the unique matrix G with Tr(G * Y) = sum_i covector[i] * y_i
        for every algebra element Y.
        """
        N = self.rep_dim
        out = [[as_ratexpr(table, 0) for _ in range(N)] for _ in range(N)]
        for b, c in enumerate(covector):
            ce = as_ratexpr(table, c)
            if ce.is_zero():
                continue
            for i in range(N):
                for j in range(N):
                    if self.dual_basis[b][i][j]:
                        out[i][j] = out[i][j] + ce * self.dual_basis[b][i][j]
        return out

    def adjoint_matrix(self, table: VarTable, x: Sequence) -> Matrix:
        """d x d matrix A(X) with A(X) . dG = coords([X, grad G]); linear in X."""
        d = self.dim
        out = [[as_ratexpr(table, 0) for _ in range(d)] for _ in range(d)]
        for g, c in enumerate(x):
            ce = as_ratexpr(table, c)
            if ce.is_zero():
                continue
            tensor = self.adjoint_tensor[g]
            for a in range(d):
                for b in range(d):
                    if tensor[a][b]:
                        out[a][b] = out[a][b] + ce * tensor[a][b]
        return out

    def invariant_polynomials(self, table: VarTable, coord_vars: Sequence[str]
                              ) -> List[Poly]:
        """The rank independent invariants from det(mu I - X), normalized.

        ``coord_vars`` names the generic coordinates; the i-th invariant is
        the coefficient of mu^(N - exponents[i] - 1) times the spec's
        normalization constant.
        """
        mu = "_mu"
        table.register(mu)
        coords = [table.var(v) for v in coord_vars]
        x = self.element_matrix(table, coords)
        n = self.rep_dim
        char = [[(table.var(mu) if i == j else table.zero()) - x[i][j].as_poly()
                 for j in range(n)] for i in range(n)]
        charpoly = det(char)
        coeffs = charpoly.coefficients_in(mu)
        out = []
        for i, m in enumerate(self.exponents):
            deg = m + 1
            c = coeffs.get(n - deg, table.zero())
            out.append(c * self.invariant_normalizations[i])
        return out


def _coordinate_pivots(basis: List[FracMatrix], rep_dim: int):
    """Pick d entry positions where the basis matrices are jointly invertible."""
    d = len(basis)
    positions = [(i, j) for i in range(rep_dim) for j in range(rep_dim)]
    rows = [[basis[b][i][j] for (i, j) in positions] for b in range(d)]
    # column-reduce to find d independent positions
    work = [row[:] for row in rows]
    chosen: List[int] = []
    r = 0
    for col in range(len(positions)):
        pivot = next((rr for rr in range(r, d) if work[rr][col] != 0), None)
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        inv = Fraction(1) / work[r][col]
        work[r] = [x * inv for x in work[r]]
        for rr in range(d):
            if rr != r and work[rr][col]:
                f = work[rr][col]
                work[rr] = [x - f * y for x, y in zip(work[rr], work[r])]
        chosen.append(col)
        r += 1
        if r == d:
            break
    if r < d:
        raise ValueError("basis is linearly dependent")
    square = [[basis[b][positions[c][0]][positions[c][1]] for b in range(d)]
              for c in chosen]
    # square[c][b] = value of basis b at chosen position c; invert the map b -> entries
    inv = frac_inverse(square)
    return [positions[c] for c in chosen], inv


def _parse_frac_matrix(rows: List[List[str]]) -> FracMatrix:
    return [[Fraction(x) for x in row] for row in rows]


def load_spec(data: Dict) -> LieAlgebraSpec:
    return LieAlgebraSpec(
        name=data["name"],
        dim=data["dim"],
        rank=data["rank"],
        exponents=tuple(data["exponents"]),
        rep_dim=data["rep_dim"],
        basis=[_parse_frac_matrix(m) for m in data["basis"]],
        coord_names=tuple(data["coord_names"]),
        coord_format=data.get("coord_format", "{base}{copy}"),
        invariant_normalizations=tuple(
            Fraction(x) for x in data.get("invariant_normalizations", [])),
    )


_REGISTRY: Dict[str, LieAlgebraSpec] = {}


def get_algebra(name: str) -> LieAlgebraSpec:
    """Load a built-in algebra spec by name (cached)."""
    if name not in _REGISTRY:
        text = resources.files("painlax").joinpath(f"algebras/{name}.json").read_text()
        _REGISTRY[name] = load_spec(json.loads(text))
    return _REGISTRY[name]
