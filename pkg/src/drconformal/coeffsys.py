"""Finite truncation of the coefficient constraints on the harmonic expansion.

Unknowns are the monomial coefficients of the polynomials C1^[m], C2^[m]
(m = 1..M) and C4 in the reduced variables n0 = (x, y, v_3.., z_2..), plus
the integration constant C5(n0, z) (and its mirror C6 for the J_Z V
equations).  Each constraint is an identity in (z, n0); expanding it in
monomials gives one linear row per monomial.  Assembly is exact rational
arithmetic (sympy); only the nullspace extraction is floating point.

With D = D_x, Y = y and

    K(p; m, k) = D^p C1^[m] sin(pi k/2) + D^p C2^[m] cos(pi k/2)

the constraint families are, for every k >= 1,

    E_k = sum_{m>=k} z^{m-k} { C(m,k)/k K(2;m,k)
                               - Y C(m+1,k)(m-k+1)/k K(1;m+1,k)
                               + Y^2/4 C(m+2,k)(m-k+2)(m-k+1)/k K(0;m+2,k)
                               + C(m+1,k+1)(k+1/2) K(0;m+1,k+1) } = 0

    F1 = sum_m { z^m D^2 C2^[m] + m z^{m-1}(-Y D C2^[m] + (m+1)/4 Y^2 C2^[m+1]) }
         + D^2 C4 = 0
    F2 = sum_m z^m C2^[m] + C4 = 0
    F3 = 1/2 sum_m m z^{m-1} C1^[m] - D C5 + Y/2 dC5/dz = 0

The mirrored rows use D = D_y, Y = -x and C6 in place of C5.
"""

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import comb
from typing import Optional

import numpy as np
import sympy as sp

from .confsys import HarmonicExpansion, Polynomial, assemble_f3_f4, n0_of, potential_from_f4, S0FieldData
from .errors import TruncationTooSmall
from .space import DamekRicciSpace, check_aligned
from .tensor import DEFAULT_H

DEFAULT_M = 8
DEFAULT_DEGREE = 2
DEFAULT_TOL = 1e-10


def monomials(nvars: int, degree: int):
    """Exponent tuples of total degree <= degree, graded then lexicographic."""
    out = []
    for deg in range(degree + 1):
        level = set()
        for combo in combinations_with_replacement(range(nvars), deg):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            level.add(tuple(e))
        out.extend(sorted(level, reverse=True))
    return out


def _rational(x: float):
    return sp.Rational(x).limit_denominator(10**12)


@dataclass(frozen=True)
class Column:
    family: str  # "C1", "C2", "C4", "C5", "C6"
    m: int  # harmonic index for C1/C2, 0 otherwise
    exps: tuple

    @property
    def label(self):
        return f"{self.family}[{self.m}]" if self.family in ("C1", "C2") else self.family


@dataclass(frozen=True)
class Row:
    constraint: str
    exps: tuple  # exponents of (n0..., z)


@dataclass(frozen=True, eq=False)
class TruncatedCoefficientSystem:
    M: int
    degree: int
    symmetric: bool
    variables: tuple  # names of n0 variables then "z"
    columns: tuple
    rows: tuple
    exact: sp.Matrix
    matrix: np.ndarray

    @property
    def nvars(self) -> int:
        """Number of reduced variables n0 (z excluded)."""
        return len(self.variables) - 1

    def family_indices(self, family: str, m: Optional[int] = None):
        return [i for i, c in enumerate(self.columns)
                if c.family == family and (m is None or c.m == m)]

    def constraint_indices(self, prefix: str):
        return [i for i, r in enumerate(self.rows) if r.constraint == prefix]

    def constraints(self):
        seen = []
        for r in self.rows:
            if r.constraint not in seen:
                seen.append(r.constraint)
        return seen

    def polynomial(self, vec, family: str, m: int = 0) -> Polynomial:
        idx = self.family_indices(family, m if family in ("C1", "C2") else None)
        nv = self.nvars + (1 if family in ("C5", "C6") else 0)
        return Polynomial.from_terms(nv, [(self.columns[i].exps, vec[i]) for i in idx])

    def expansion(self, vec) -> HarmonicExpansion:
        """The solution vector as a harmonic expansion (C3 is not constrained; set to 0)."""
        vec = np.asarray(vec, dtype=float)
        nv = self.nvars
        return HarmonicExpansion(
            nv,
            tuple(self.polynomial(vec, "C1", m) for m in range(1, self.M + 1)),
            tuple(self.polynomial(vec, "C2", m) for m in range(1, self.M + 1)),
            Polynomial.zero(nv),
            self.polynomial(vec, "C4"),
            c5=self.polynomial(vec, "C5"),
        )

    def row_identity(self, vec, constraint: str, point) -> float:
        """sum over the constraint's rows of (A v)_row * monomial(point).

        ``point`` holds (n0..., z).  This is the constraint's left side as a
        function, reassembled from the monomial rows.
        """
        vec = np.asarray(vec, dtype=float)
        point = np.asarray(point, dtype=float)
        idx = self.constraint_indices(constraint)
        vals = self.matrix[idx] @ vec
        mono = np.array([np.prod(point ** np.asarray(self.rows[i].exps)) for i in idx])
        return float(vals @ mono)

    def residual(self, vec) -> float:
        return float(np.linalg.norm(self.matrix @ np.asarray(vec, dtype=float)))


def _derivation(space: DamekRicciSpace, n0_syms, row: int):
    """D_x (row 0) or D_y (row 1) acting on sympy expressions in n0 (and z)."""
    k, m = space.k, space.m
    v = list(n0_syms[:k])
    zr = list(n0_syms[k:])  # z_2..z_m
    target = v[row]
    corrections = []
    for r in range(1, m):
        coef = sum(_rational(space.alg.structure[r, row, j]) * v[j] for j in range(k))
        if coef != 0:
            corrections.append((-sp.Rational(1, 2) * coef, zr[r - 1]))

    def apply(expr):
        out = sp.diff(expr, target)
        for c, var in corrections:
            out += c * sp.diff(expr, var)
        return out

    return apply


def build_system(M: int = DEFAULT_M, d: int = DEFAULT_DEGREE, space: DamekRicciSpace = None,
                 symmetric: bool = True) -> TruncatedCoefficientSystem:
    """Assemble the truncated constraint matrix for the given space.

    Args:
      M: truncation order of the harmonic series (>= 3).
      d: total degree bound of the coefficient polynomials.
      space: Damek-Ricci space with basis aligned (V_{r+1} = J_{Z_r} V_1).
      symmetric: also add the mirrored rows coming from the J_Z V equations.

    Raises:
      TruncationTooSmall: ``M < 3``.
    """
    if M < 3:
        raise TruncationTooSmall(f"M = {M}; at least 3 terms are needed")
    if d < 1:
        raise ValueError("coefficient degree must be at least 1")
    if space is None:
        raise ValueError("a DamekRicciSpace is required")
    check_aligned(space)
    k, m = space.k, space.m
    names = ["x", "y"] + [f"v{j}" for j in range(3, k + 1)] + [f"z{r}" for r in range(2, m + 1)]
    n0 = sp.symbols(names, real=True)
    zs = sp.Symbol("z", real=True)
    x, y = n0[0], n0[1]

    mono_n0 = monomials(len(n0), d)
    # D lowers degree by one, so C5 needs one more degree to balance C1 in F3
    mono_n0z = monomials(len(n0) + 1, d + 1)
    allvars = list(n0) + [zs]

    columns = []
    unknowns = []

    def poly(family, mi, monos, vars_):
        expr = sp.Integer(0)
        for e in monos:
            u = sp.Symbol(f"u{len(unknowns)}")
            unknowns.append(u)
            columns.append(Column(family, mi, tuple(e)))
            expr += u * sp.Mul(*[v**p for v, p in zip(vars_, e)])
        return expr

    C1 = {mi: poly("C1", mi, mono_n0, n0) for mi in range(1, M + 1)}
    C2 = {mi: poly("C2", mi, mono_n0, n0) for mi in range(1, M + 1)}
    C4 = poly("C4", 0, mono_n0, n0)
    C5 = poly("C5", 0, mono_n0z, allvars)
    C6 = poly("C6", 0, mono_n0z, allvars) if symmetric else None

    def c(which, mi):
        table = C1 if which == 1 else C2
        return table.get(mi, sp.Integer(0))

    def family_rows(D, Y, Cint, suffix):
        def Dp(expr, p):
            for _ in range(p):
                expr = D(expr)
            return expr

        def K(p, mi, kk):
            s, co = sp.Integer([0, 1, 0, -1][kk % 4]), sp.Integer([1, 0, -1, 0][kk % 4])
            return Dp(c(1, mi), p) * s + Dp(c(2, mi), p) * co

        eqs = []
        for kk in range(1, M + 1):
            expr = sp.Integer(0)
            for mi in range(kk, M + 1):
                term = (sp.Rational(comb(mi, kk), kk) * K(2, mi, kk)
                        - Y * sp.Rational(comb(mi + 1, kk) * (mi - kk + 1), kk) * K(1, mi + 1, kk)
                        + Y**2 / 4 * sp.Rational(comb(mi + 2, kk) * (mi - kk + 2) * (mi - kk + 1), kk)
                        * K(0, mi + 2, kk)
                        + comb(mi + 1, kk + 1) * sp.Rational(2 * kk + 1, 2) * K(0, mi + 1, kk + 1))
                expr += zs ** (mi - kk) * term
            eqs.append((f"E{suffix}[k={kk}]", expr))

        f1 = Dp(C4, 2)
        for mi in range(1, M + 1):
            f1 += zs**mi * Dp(c(2, mi), 2) + mi * zs ** (mi - 1) * (
                -Y * D(c(2, mi)) + sp.Rational(mi + 1, 4) * Y**2 * c(2, mi + 1))
        eqs.append((f"F1{suffix}", f1))
        if not suffix:
            eqs.append(("F2", sum((zs**mi * c(2, mi) for mi in range(1, M + 1)), C4)))
        f3 = sum(sp.Rational(mi, 2) * zs ** (mi - 1) * c(1, mi) for mi in range(1, M + 1))
        f3 += -D(Cint) + Y / 2 * sp.diff(Cint, zs)
        eqs.append((f"F3{suffix}", f3))
        return eqs

    eqs = family_rows(_derivation(space, n0, 0), y, C5, "")
    if symmetric:
        eqs += family_rows(_derivation(space, n0, 1), -x, C6, "'")

    col_of = {u: i for i, u in enumerate(unknowns)}
    nv = len(allvars)
    rows = []
    entries = {}
    for label, expr in eqs:
        expr = sp.expand(expr)
        if expr == 0:
            continue
        per_row = {}
        for term in sp.Add.make_args(expr):
            coeff, factors = term.as_coeff_Mul()
            powers = factors.as_powers_dict()
            u = [s for s in powers if s in col_of]
            if len(u) != 1 or powers[u[0]] != 1:
                raise AssertionError(f"non-linear term {term} in {label}")
            e = tuple(int(powers.get(v, 0)) for v in allvars)
            rest = sp.Mul(*[b**p for b, p in powers.items() if b not in col_of and b not in allvars])
            per_row.setdefault(e, {})
            j = col_of[u[0]]
            per_row[e][j] = per_row[e].get(j, 0) + coeff * rest
        for e in sorted(per_row):
            vals = {j: v for j, v in per_row[e].items() if v != 0}
            if not vals:
                continue
            rows.append(Row(label, e))
            entries[len(rows) - 1] = vals
    exact = sp.zeros(len(rows), len(columns))
    for i, vals in entries.items():
        for j, v in vals.items():
            exact[i, j] = v
    mat = np.array(exact.tolist(), dtype=float) if rows else np.zeros((0, len(columns)))
    return TruncatedCoefficientSystem(
        M, d, symmetric, tuple(names) + ("z",), tuple(columns), tuple(rows), exact, mat)


@dataclass(frozen=True)
class SolutionSpace:
    basis: np.ndarray  # columns span the nullspace
    singular_values: np.ndarray
    rank: int

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def solve_system(sys: TruncatedCoefficientSystem, tol: float = DEFAULT_TOL,
                 rows=None) -> SolutionSpace:
    """Orthonormal nullspace basis by singular-value thresholding at tol * sigma_max.

    ``rows`` optionally restricts the system to a subset of row indices.
    """
    mat = sys.matrix if rows is None else sys.matrix[rows]
    ncol = mat.shape[1]
    if mat.shape[0] == 0:
        return SolutionSpace(np.eye(ncol), np.zeros(0), 0)
    _, s, vt = np.linalg.svd(mat, full_matrices=True)
    rank = int(np.sum(s > tol * s[0])) if s[0] > 0 else 0
    return SolutionSpace(vt[rank:].T.copy(), s, rank)


def same_span(a: np.ndarray, b: np.ndarray, tol: float = 1e-8) -> bool:
    """Whether two orthonormal column bases span the same subspace."""
    if a.shape != b.shape:
        return False
    if a.shape[1] == 0:
        return True
    s = np.linalg.svd(a.T @ b, compute_uv=False)
    return bool(np.all(np.abs(s - 1.0) < tol))


def embed(vec, src: TruncatedCoefficientSystem, dst: TruncatedCoefficientSystem) -> np.ndarray:
    """Map a coefficient vector between systems of different truncation order."""
    pos = {c: i for i, c in enumerate(dst.columns)}
    out = np.zeros(len(dst.columns))
    for i, c in enumerate(src.columns):
        if c in pos:
            out[pos[c]] = vec[i]
        elif abs(vec[i]) > 0:
            raise ValueError(f"column {c} has no counterpart in the target system")
    return out


def family_norms(sys: TruncatedCoefficientSystem, vec) -> dict:
    """Euclidean norm of the coefficients of each family label (C1[1], C2[3], C4, ...)."""
    vec = np.asarray(vec, dtype=float)
    out = {}
    for i, c in enumerate(sys.columns):
        out[c.label] = out.get(c.label, 0.0) + vec[i] ** 2
    return {k: float(np.sqrt(v)) for k, v in out.items()}


def surviving_families(sys: TruncatedCoefficientSystem, sol: SolutionSpace,
                       tol: float = 1e-9) -> list:
    """Family labels carrying a coefficient above tol in some basis vector."""
    found = set()
    for vec in sol.basis.T:
        for label, val in family_norms(sys, vec).items():
            if val > tol:
                found.add(label)
    order = [c.label for c in sys.columns]
    return sorted(found, key=order.index)


def f4_closed_form(sys: TruncatedCoefficientSystem, vec, space: DamekRicciSpace, p) -> float:
    """C1^[1](n0) + 2 z C1^[2](n0)."""
    n0 = n0_of(space, p)
    return sys.polynomial(vec, "C1", 1)(n0) + 2 * p[space.k] * sys.polynomial(vec, "C1", 2)(n0)


def f4_from_solution(sys: TruncatedCoefficientSystem, vec, space: DamekRicciSpace, p) -> float:
    """f4 assembled from the full truncated series of the solution."""
    return assemble_f3_f4(sys.expansion(vec), p, space)[1]


def rho_of_solution(sys: TruncatedCoefficientSystem, vec, space: DamekRicciSpace, p,
                    h: float = DEFAULT_H) -> float:
    """Potential d f4 / da of the solution at p."""
    exp = sys.expansion(vec)
    zero = lambda q: 0.0  # noqa: E731
    data = S0FieldData(zero, zero, zero, lambda q: assemble_f3_f4(exp, q, space)[1])
    return potential_from_f4(data, p, h)
