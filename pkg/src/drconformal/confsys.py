"""Conformal Killing system on the block s0 = span{V, J_Z V, Z, A}.

Write a field in frame components, xi = f1 V + f2 J_Z V + f3 Z + f4 A + ...,
with chart variables x = v1, y = v2, z = z1 and a.  This module evaluates
the operators

    D_x = d/dx - 1/2 sum_{r>=2} sum_j A^r_{1j} v_j d/dz_r
    D_y = d/dy - 1/2 sum_{r>=2} sum_j A^r_{2j} v_j d/dz_r

(so that V = e^{a/2}(D_x - (y/2) d/dz) and J_Z V = e^{a/2}(D_y + (x/2) d/dz)),
the three 2x2 block equations of L_xi g = 2 rho g restricted to s0, the seven
scalar equations derived from them, and the harmonic expansion of
(e^a f3, e^a f4) in powers of z + i w with w = e^a.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, NonFiniteEvaluation, NonPositiveW, Overflow
from .space import A_LIMIT, DamekRicciSpace, s0_subframe
from .tensor import DEFAULT_H, CoordinateVectorField, directional, lie_derivative_metric, partials

# exact values of cos(pi k / 2) and sin(pi k / 2) by k mod 4
_COS = (1, 0, -1, 0)
_SIN = (0, 1, 0, -1)


def cos_quarter(k: int) -> int:
    return _COS[k % 4]


def sin_quarter(k: int) -> int:
    return _SIN[k % 4]


@lru_cache(maxsize=128)
def _s0(space: DamekRicciSpace):
    return s0_subframe(space)


# --- polynomials in the reduced variables ----------------------------------

@dataclass(frozen=True)
class Polynomial:
    """Sparse real polynomial: ``sum_t coeffs[t] * prod_i x_i ** exps[t, i]``."""

    nvars: int
    exps: tuple = ()
    coeffs: tuple = ()

    @classmethod
    def zero(cls, nvars):
        return cls(nvars)

    @classmethod
    def constant(cls, nvars, c):
        return cls(nvars, ((0,) * nvars,), (float(c),))

    @classmethod
    def from_terms(cls, nvars, terms):
        """From ``[(exponents, coefficient), ...]``; repeated monomials are summed."""
        acc = {}
        for e, c in terms:
            e = tuple(int(x) for x in e)
            if len(e) != nvars:
                raise DimensionMismatch(f"monomial {e} has wrong arity (expected {nvars})")
            acc[e] = acc.get(e, 0.0) + float(c)
        items = sorted((e, c) for e, c in acc.items() if c != 0.0)
        return cls(nvars, tuple(e for e, _ in items), tuple(c for _, c in items))

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.exps), default=0)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.nvars,):
            raise DimensionMismatch(f"polynomial expects {self.nvars} variables")
        if not self.exps:
            return 0.0
        e = np.asarray(self.exps)
        return float(np.sum(np.asarray(self.coeffs) * np.prod(x ** e, axis=1)))

    def terms(self):
        return list(zip(self.exps, self.coeffs))

    def to_json(self):
        return [[list(e), c] for e, c in self.terms()]

    @classmethod
    def from_json(cls, nvars, data):
        return cls.from_terms(nvars, data or [])


def n0_indices(space: DamekRicciSpace):
    """Chart indices of the reduced variables (x, y, v_3..v_k, z_2..z_m)."""
    k, m = space.k, space.m
    return list(range(k)) + list(range(k + 1, k + m))


def n0_of(space: DamekRicciSpace, p) -> np.ndarray:
    return np.asarray(p, dtype=float)[n0_indices(space)]


# --- the operators D_x, D_y and the frame as derivations -------------------

def dx_coefficients(space: DamekRicciSpace, p) -> np.ndarray:
    """Coordinate coefficients of D_x at p (no d/dz_1 and no d/da part)."""
    return _d_coefficients(space, p, 0)


def dy_coefficients(space: DamekRicciSpace, p) -> np.ndarray:
    return _d_coefficients(space, p, 1)


def _d_coefficients(space, p, row):
    _s0(space)
    p = np.asarray(p, dtype=float)
    k, m = space.k, space.m
    c = np.zeros(space.dim)
    c[row] = 1.0
    if m > 1:
        c[k + 1:k + m] = -0.5 * space.alg.structure[1:, row, :] @ p[:k]
    return c


def dx_apply(space: DamekRicciSpace, f: Callable, p, h: float = DEFAULT_H) -> float:
    return float(directional(f, p, dx_coefficients(space, p), h))


def dy_apply(space: DamekRicciSpace, f: Callable, p, h: float = DEFAULT_H) -> float:
    return float(directional(f, p, dy_coefficients(space, p), h))


def _v_operator(space, p):
    # D_x - (y/2) d/dz
    c = dx_coefficients(space, p)
    c[space.k] = -0.5 * p[1]
    return c


def _jv_operator(space, p):
    # D_y + (x/2) d/dz
    c = dy_coefficients(space, p)
    c[space.k] = 0.5 * p[0]
    return c


def frame_derivative(space: DamekRicciSpace, f: Callable, p, index: int,
                     h: float = DEFAULT_H) -> float:
    """E_index f at p, the frame field applied as a derivation."""
    return float(directional(f, p, space.frame_at(p)[:, index], h))


# --- s0 block equations ------------------------------------------------------

@dataclass(frozen=True)
class S0FieldData:
    """Frame components f1, f2, f3, f4 along V, J_Z V, Z, A as functions of p."""

    f1: Callable
    f2: Callable
    f3: Callable
    f4: Callable
    rho: Optional[Callable] = None

    @property
    def fs(self):
        return (self.f1, self.f2, self.f3, self.f4)


def from_vector_field(space: DamekRicciSpace, xi: CoordinateVectorField,
                      rho: Optional[Callable] = None) -> S0FieldData:
    """Frame components of a coordinate field, restricted to the s0 directions."""
    sub = _s0(space)

    def comp(i):
        return lambda p: float(space.frame_inverse_at(p)[i] @ xi(p))

    return S0FieldData(*(comp(i) for i in sub.indices), rho=rho)


def zero_data() -> S0FieldData:
    z = lambda p: 0.0  # noqa: E731
    return S0FieldData(z, z, z, z)


def _as_fn(rho):
    if rho is None:
        return lambda p: 0.0
    if callable(rho):
        return rho
    return lambda p: float(rho)


def block_residuals(space: DamekRicciSpace, data: S0FieldData, rho, p,
                    h: float = DEFAULT_H):
    """Residuals (LHS - RHS) of the three 2x2 block equations at p.

    Returns ``(r11, r21, r22)``: the (V, J_Z V) x (V, J_Z V) block, the
    (Z, A) x (V, J_Z V) block and the (Z, A) x (Z, A) block of
    L_xi g - 2 rho g in the orthonormal frame.
    """
    sub = _s0(space)
    p = np.asarray(p, dtype=float)
    rho_v = float(_as_fn(rho)(p))
    f1, f2, f3, f4 = (float(f(p)) for f in data.fs)
    frame = space.frame_at(p)

    def d(f, idx):
        return float(directional(f, p, frame[:, idx], h))

    V, JV, Z, A = sub.indices
    vf1, vf2, vf3, vf4 = (d(f, V) for f in data.fs)
    jf1, jf2, jf3, jf4 = (d(f, JV) for f in data.fs)
    zf1, zf2, zf3, zf4 = (d(f, Z) for f in data.fs)
    af1, af2, af3, af4 = (d(f, A) for f in data.fs)

    r11 = np.array([
        [-f4 + 2 * vf1 - 2 * rho_v, vf2 + jf1],
        [vf2 + jf1, -f4 + 2 * jf2 - 2 * rho_v],
    ])
    r21 = np.array([
        [f2 + vf3 + zf1, -f1 + jf3 + zf2],
        [0.5 * f1 + vf4 + af1, 0.5 * f2 + jf4 + af2],
    ])
    r22 = np.array([
        [-2 * f4 + 2 * zf3 - 2 * rho_v, f3 + zf4 + af3],
        [f3 + zf4 + af3, 2 * af4 - 2 * rho_v],
    ])
    out = (r11, r21, r22)
    if not all(np.all(np.isfinite(r)) for r in out):
        raise NonFiniteEvaluation(f"non-finite block residual at {p}")
    return out


def potential_from_f4(data: S0FieldData, p, h: float = DEFAULT_H) -> float:
    """rho = d f4 / da, read off the (A, A) entry of the (Z, A) block."""
    p = np.asarray(p, dtype=float)
    e = np.zeros(p.size)
    e[-1] = 1.0
    return float(directional(data.f4, p, e, h))


def subsystem_residuals(space: DamekRicciSpace, data: S0FieldData, p,
                        h: float = DEFAULT_H) -> np.ndarray:
    """Residuals of the seven scalar equations at p.

    Order: the (1,1), (2,1), (2,2) entries of the (V, J_Z V) block with the
    potential eliminated via rho = d f4 / da, then the (1,1), (1,2), (2,1),
    (2,2) entries of the (Z, A) x (V, J_Z V) block.
    """
    _s0(space)
    p = np.asarray(p, dtype=float)
    f1, f2, f3, f4 = data.fs
    a = p[-1]
    ea, eh = np.exp(a), np.exp(a / 2)
    cv = _v_operator(space, p)
    cj = _jv_operator(space, p)
    ez = np.zeros(p.size)
    ez[space.k] = 1.0
    ea_dir = np.zeros(p.size)
    ea_dir[-1] = 1.0

    def dv(f):
        return float(directional(f, p, cv, h))

    def dj(f):
        return float(directional(f, p, cj, h))

    def dz(f):
        return float(directional(f, p, ez, h))

    def da_weighted(f):
        # d/da (e^{a/2} f)
        return float(directional(lambda q: np.exp(q[-1] / 2) * f(q), p, ea_dir, h))

    g4 = np.exp(-a) * da_weighted(f4)
    res = np.array([
        dv(f1) - g4,
        dj(f1) + dv(f2),
        dj(f2) - g4,
        ea * dz(f1) + eh * dv(f3) + f2(p),
        ea * dz(f2) + eh * dj(f3) - f1(p),
        ea * dv(f4) + da_weighted(f1),
        ea * dj(f4) + da_weighted(f2),
    ])
    if not np.all(np.isfinite(res)):
        raise NonFiniteEvaluation(f"non-finite subsystem residual at {p}")
    return res


def subsystem_from_blocks(blocks, a: float) -> np.ndarray:
    """The seven scalar residuals recovered from block residuals computed with
    rho = d f4 / da."""
    r11, r21, _ = blocks
    eh = np.exp(a / 2)
    return np.array([
        r11[0, 0] / (2 * eh),
        r11[1, 0] / eh,
        r11[1, 1] / (2 * eh),
        r21[0, 0],
        r21[0, 1],
        eh * r21[1, 0],
        eh * r21[1, 1],
    ])


# --- harmonic expansion ------------------------------------------------------

def harmonic_component(m: int, c1: float, c2: float, z, w):
    """(F3^[m], F4^[m]) = (Re, Im) of (c1 + i c2)(z + i w)^m, summed as

        F3 = sum_k C(m,k) z^{m-k} w^k (c1 cos(pi k/2) - c2 sin(pi k/2))
        F4 = sum_k C(m,k) z^{m-k} w^k (c1 sin(pi k/2) + c2 cos(pi k/2))
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    f3 = 0.0
    f4 = 0.0
    for k in range(m + 1):
        t = comb(m, k) * z ** (m - k) * w ** k
        c, s = _COS[k % 4], _SIN[k % 4]
        f3 = f3 + t * (c1 * c - c2 * s)
        f4 = f4 + t * (c1 * s + c2 * c)
    return f3, f4


def cauchy_riemann_residual(F3: Callable, F4: Callable, z: float, w: float, n0,
                            h: float = DEFAULT_H):
    """(dF3/dz - dF4/dw, dF3/dw + dF4/dz) at (z, w) for fixed reduced variables."""
    if w <= 0:
        raise NonPositiveW(f"w = {w} must be positive")
    pt = np.array([z, w], dtype=float)
    d3 = partials(lambda q: F3(q[0], q[1], n0), pt, h)
    d4 = partials(lambda q: F4(q[0], q[1], n0), pt, h)
    return float(d3[0] - d4[1]), float(d3[1] + d4[0])


@dataclass(frozen=True)
class HarmonicExpansion:
    """Truncated series F3 + i F4 = sum_{m=1}^M (C1^[m] + i C2^[m]) zeta^m + (C3 + i C4)
    with zeta = (z - alpha) + i (w - beta) and coefficients polynomial in the
    reduced variables.

    ``c1[m-1]`` holds C1^[m].  ``c5`` is the optional integration constant
    C5(n0, z), stored over ``nvars + 1`` variables with z last.
    """

    nvars: int
    c1: tuple
    c2: tuple
    c3: Polynomial
    c4: Polynomial
    offset: tuple = (0.0, 0.0)
    c5: Optional[Polynomial] = None

    @property
    def M(self) -> int:
        return len(self.c1)

    @classmethod
    def zeros(cls, nvars, M):
        zero = Polynomial.zero(nvars)
        return cls(nvars, (zero,) * M, (zero,) * M, zero, zero)

    def F(self, z, w, n0):
        """(F3, F4) at (z, w) with reduced variables n0."""
        zeta = (z - self.offset[0], w - self.offset[1])
        f3 = self.c3(n0)
        f4 = self.c4(n0)
        for m in range(1, self.M + 1):
            a3, a4 = harmonic_component(m, self.c1[m - 1](n0), self.c2[m - 1](n0), *zeta)
            f3 += a3
            f4 += a4
        return f3, f4

    def to_json(self) -> dict:
        out = {
            "M": self.M,
            "nvars": self.nvars,
            "offset": list(self.offset),
            "C1": [p.to_json() for p in self.c1],
            "C2": [p.to_json() for p in self.c2],
            "C3": self.c3.to_json(),
            "C4": self.c4.to_json(),
        }
        if self.c5 is not None:
            out["C5"] = self.c5.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict, nvars: Optional[int] = None):
        nv = int(data.get("nvars", nvars if nvars is not None else -1))
        if nv < 0:
            raise DimensionMismatch("expansion JSON needs 'nvars' or an explicit nvars")
        M = int(data["M"])
        c1 = data.get("C1", [[]] * M)
        c2 = data.get("C2", [[]] * M)
        if len(c1) != M or len(c2) != M:
            raise DimensionMismatch("C1 and C2 need exactly M entries")
        c5 = data.get("C5")
        return cls(
            nv,
            tuple(Polynomial.from_json(nv, c) for c in c1),
            tuple(Polynomial.from_json(nv, c) for c in c2),
            Polynomial.from_json(nv, data.get("C3")),
            Polynomial.from_json(nv, data.get("C4")),
            tuple(float(x) for x in data.get("offset", (0.0, 0.0))),
            None if c5 is None else Polynomial.from_json(nv + 1, c5),
        )


def assemble_f3_f4(exp: HarmonicExpansion, p, space: DamekRicciSpace):
    """f3 = e^{-a}(sum F3^[m] + C3), f4 = e^{-a}(sum F4^[m] + C4) at the chart point p."""
    p = np.asarray(p, dtype=float)
    a = p[-1]
    if abs(a) > A_LIMIT:
        raise Overflow(f"|a| = {abs(a):.3g} exceeds {A_LIMIT}")
    n0 = n0_of(space, p)
    if n0.size != exp.nvars:
        raise DimensionMismatch(f"expansion has {exp.nvars} reduced variables, space has {n0.size}")
    f3, f4 = exp.F(p[space.k], np.exp(a), n0)
    ema = np.exp(-a)
    return ema * f3, ema * f4


def expansion_data(exp: HarmonicExpansion, space: DamekRicciSpace,
                   f1: Optional[Callable] = None, f2: Optional[Callable] = None) -> S0FieldData:
    """S0FieldData whose f3, f4 come from a harmonic expansion."""
    zero = lambda p: 0.0  # noqa: E731
    return S0FieldData(
        f1 or zero,
        f2 or zero,
        lambda p: assemble_f3_f4(exp, p, space)[0],
        lambda p: assemble_f3_f4(exp, p, space)[1],
    )


# --- Lie derivatives of the frame fields on s0 -----------------------------

FRAME_FIELDS = ("V", "JV", "Z", "A")

# nonzero upper-triangle entries, indices in the order (V, J_Z V, Z, A)
_TABLE_ENTRIES = {
    "V": {(0, 3): 0.5, (1, 2): -1.0},
    "JV": {(0, 2): 1.0, (1, 3): 0.5},
    "Z": {(2, 3): 1.0},
    "A": {(0, 0): -1.0, (1, 1): -1.0, (2, 2): -2.0},
}


def expected_table(name: str) -> np.ndarray:
    """L_E g on s0 for the left-invariant frame field E (these do not depend on the algebra)."""
    out = np.zeros((4, 4))
    for (i, j), val in _TABLE_ENTRIES[name].items():
        out[i, j] = out[j, i] = val
    return out


def bracket_table_on_s0(space: DamekRicciSpace, name: str) -> np.ndarray:
    """L_E g(Y, W) = -g([E, Y], W) - g(Y, [E, W]) from structure constants alone."""
    sub = _s0(space)
    idx = sub.indices
    basis = np.eye(space.dim)
    e = basis[idx[FRAME_FIELDS.index(name)]]
    ad = np.array([space.bracket(e, basis[i]) for i in idx])  # rows: [E, Y_i]
    out = -(ad[:, idx] + ad[:, idx].T)
    return out


def measured_table(space: DamekRicciSpace, name: str, p, h: float = DEFAULT_H) -> np.ndarray:
    """L_E g on s0 at p by finite differences of the frame field in coordinates."""
    sub = _s0(space)
    col = sub.indices[FRAME_FIELDS.index(name)]
    xi = CoordinateVectorField(space.dim, lambda q: space.frame_at(q)[:, col])
    lie = lie_derivative_metric(space.metric_at, xi, p, h)
    full = space.to_frame(lie, p)
    return full[np.ix_(sub.indices, sub.indices)]
