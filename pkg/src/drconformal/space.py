"""Damek-Ricci spaces as a global coordinate chart.

Coordinates are ``(v_1..v_k, z_1..z_m, a)``.  The left-invariant orthonormal
frame is

    V_i = e^{a/2} d/dv_i - (e^{a/2}/2) sum_{r,j} A^r_{ij} v_j d/dz_r
    Z_r = e^a d/dz_r
    A   = d/da

and the metric is the one making this frame orthonormal.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import GeneralizedHeisenbergAlgebra, is_aligned
from .errors import BasisNotAligned, DimensionMismatch, NonFinitePoint

A_LIMIT = 40.0


@dataclass(frozen=True, eq=False)
class DamekRicciSpace:
    alg: GeneralizedHeisenbergAlgebra

    @property
    def k(self) -> int:
        return self.alg.k

    @property
    def m(self) -> int:
        return self.alg.m

    @property
    def dim(self) -> int:
        return self.alg.k + self.alg.m + 1

    @property
    def a_index(self) -> int:
        return self.dim - 1

    def labels(self):
        return ([f"v{i + 1}" for i in range(self.k)]
                + [f"z{r + 1}" for r in range(self.m)] + ["a"])

    def bracket_table(self) -> np.ndarray:
        """Structure constants ``c[i, j, :] = [E_i, E_j]`` on the basis (V, Z, A)."""
        n, k, m = self.dim, self.k, self.m
        c = np.zeros((n, n, n))
        c[:k, :k, k:k + m] = np.transpose(self.alg.structure, (1, 2, 0))
        ia = n - 1
        for i in range(k):
            c[ia, i, i] = 0.5
            c[i, ia, i] = -0.5
        for r in range(m):
            c[ia, k + r, k + r] = 1.0
            c[k + r, ia, k + r] = -1.0
        return c

    def bracket(self, x, y) -> np.ndarray:
        """Bracket on s of two vectors in the orthonormal basis (V, Z, A)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.dim,) or y.shape != (self.dim,):
            raise DimensionMismatch(f"s-vectors must have length {self.dim}")
        return np.einsum("i,j,ijk->k", x, y, self.bracket_table())

    def _check(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise DimensionMismatch(f"point must have length {self.dim}")
        if not np.all(np.isfinite(p)):
            raise NonFinitePoint("point has non-finite coordinates")
        if abs(p[-1]) > A_LIMIT:
            raise NonFinitePoint(f"|a| = {abs(p[-1]):.3g} exceeds {A_LIMIT}")
        return p

    def frame_at(self, p) -> np.ndarray:
        """Matrix whose column i holds the coordinates of the i-th frame field at p."""
        p = self._check(p)
        k, m = self.k, self.m
        v = p[:k]
        a = p[-1]
        f = np.zeros((self.dim, self.dim))
        eh = np.exp(a / 2)
        f[:k, :k] = eh * np.eye(k)
        f[k:k + m, :k] = -0.5 * eh * np.einsum("rij,j->ri", self.alg.structure, v)
        f[k:k + m, k:k + m] = np.exp(a) * np.eye(m)
        f[-1, -1] = 1.0
        return f

    def frame_inverse_at(self, p) -> np.ndarray:
        """Inverse of :meth:`frame_at`, using its block-triangular form."""
        p = self._check(p)
        k, m = self.k, self.m
        v = p[:k]
        a = p[-1]
        g = np.zeros((self.dim, self.dim))
        g[:k, :k] = np.exp(-a / 2) * np.eye(k)
        g[k:k + m, :k] = 0.5 * np.exp(-a) * np.einsum("rij,j->ri", self.alg.structure, v)
        g[k:k + m, k:k + m] = np.exp(-a) * np.eye(m)
        g[-1, -1] = 1.0
        return g

    def metric_at(self, p) -> np.ndarray:
        """g(p) = (F F^T)^{-1}, the metric making the frame orthonormal."""
        finv = self.frame_inverse_at(p)
        g = finv.T @ finv
        return 0.5 * (g + g.T)

    def metric(self):
        """The metric as a plain callable ``p -> g(p)``."""
        return self.metric_at

    def to_frame(self, mat, p) -> np.ndarray:
        """Components ``T(E_i, E_j)`` of a coordinate (0,2)-tensor in the frame."""
        f = self.frame_at(p)
        return f.T @ np.asarray(mat) @ f

    def right_invariant(self, index: int):
        """Right-invariant field (a Killing field) for basis element ``index``.

        Returns ``(components, jacobian)`` callables.  For V_i the field is
        d/dv_i + 1/2 sum_{r,j} A^r_{ij} v_j d/dz_r, for Z_r it is d/dz_r, and
        for A it is 1/2 v.d/dv + z.d/dz + d/da.
        """
        k, m, n = self.k, self.m, self.dim
        s = self.alg.structure
        if not 0 <= index < n:
            raise IndexError(index)

        if index < k:
            i = index

            def comp(p):
                p = np.asarray(p, dtype=float)
                out = np.zeros(n)
                out[i] = 1.0
                out[k:k + m] = 0.5 * s[:, i, :] @ p[:k]
                return out

            def jac(p):
                out = np.zeros((n, n))
                out[k:k + m, :k] = 0.5 * s[:, i, :]
                return out
        elif index < k + m:
            def comp(p):
                out = np.zeros(n)
                out[index] = 1.0
                return out

            def jac(p):
                return np.zeros((n, n))
        else:
            scale = np.concatenate([0.5 * np.ones(k), np.ones(m), [0.0]])

            def comp(p):
                p = np.asarray(p, dtype=float)
                out = scale * p
                out[-1] = 1.0
                return out

            def jac(p):
                return np.diag(scale)
        return comp, jac


def extend_solvable(alg: GeneralizedHeisenbergAlgebra) -> DamekRicciSpace:
    """Solvable extension s = v + z + RA with [A, V] = V/2 and [A, Z] = Z."""
    return DamekRicciSpace(alg)


@dataclass(frozen=True)
class S0Subframe:
    """Indices of V, J_Z V, Z, A in the frame and of x, y, z, a in the chart.

    Frame and coordinate orderings coincide, so the same indices serve both.
    """

    v: int
    jv: int
    z: int
    a: int

    @property
    def indices(self):
        return (self.v, self.jv, self.z, self.a)

    @property
    def x(self) -> int:
        return self.v

    @property
    def y(self) -> int:
        return self.jv


def s0_subframe(space: DamekRicciSpace, tol: float = 1e-12) -> S0Subframe:
    """Locate span{V, J_Z V, Z, A} and verify it is closed under the bracket.

    Raises:
      BasisNotAligned: when ``V_2 != J_{Z_1} V_1``.
    """
    alg = space.alg
    e = np.eye(alg.k)
    if alg.k < 2 or np.max(np.abs(alg.j_maps[0][:, 0] - e[1])) > tol:
        raise BasisNotAligned("basis must satisfy V_2 = J_{Z_1} V_1; use algebra.aligned()")
    sub = S0Subframe(0, 1, space.k, space.dim - 1)
    basis = np.eye(space.dim)[list(sub.indices)]
    proj = basis.T @ basis
    for x in basis:
        for y in basis:
            br = space.bracket(x, y)
            if np.max(np.abs(br - proj @ br)) > tol:
                raise BasisNotAligned("span{V, J_Z V, Z, A} is not closed under the bracket")
    return sub


def check_aligned(space: DamekRicciSpace) -> None:
    if not is_aligned(space.alg):
        raise BasisNotAligned("basis must satisfy V_{r+1} = J_{Z_r} V_1; use algebra.aligned()")
