"""Generalized Heisenberg algebras n = v + z built from J-map data.

An algebra is stored as the stack of its J-maps ``J[r]`` (one ``k x k``
matrix per orthonormal center vector ``Z_r``) written in a fixed orthonormal
basis ``V_1..V_k`` of ``v``.  The bracket on ``v`` is recovered from

    <J_Z V, W> = <Z, [V, W]>,

so the structure constants ``A[r, i, j] = <[V_i, V_j], Z_r>`` are the entries
``<J_r V_i, V_j> = J[r][j, i]``.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    CliffordViolation,
    DimensionMismatch,
    NotSkew,
    NotUnit,
    UnsupportedFamily,
)

CATALOG_TOL = 1e-10
FAMILIES = ("heisenberg", "clifford2", "quaternionic", "octonionic")


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GeneralizedHeisenbergAlgebra:
    """Validated J-map data of a generalized Heisenberg algebra.

    Attributes:
      j_maps: array of shape ``(m, k, k)``; ``j_maps[r]`` is ``J_{Z_r}``.
      structure: array of shape ``(m, k, k)`` with
        ``structure[r, i, j] = <[V_i, V_j], Z_r>``.
    """

    j_maps: np.ndarray
    structure: np.ndarray

    @property
    def m(self) -> int:
        return self.j_maps.shape[0]

    @property
    def k(self) -> int:
        return self.j_maps.shape[1]

    def j(self, zvec) -> np.ndarray:
        """J_Z for an arbitrary center vector ``Z`` given by its components."""
        zvec = np.asarray(zvec, dtype=float)
        if zvec.shape != (self.m,):
            raise DimensionMismatch(f"center vector must have length {self.m}")
        return np.tensordot(zvec, self.j_maps, axes=1)

    def bracket(self, x, y) -> np.ndarray:
        """Bracket of two n-vectors laid out as ``(v_1..v_k, z_1..z_m)``."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        n = self.k + self.m
        if x.shape != (n,) or y.shape != (n,):
            raise DimensionMismatch(f"n-vectors must have length {n}")
        out = np.zeros(n)
        out[self.k:] = bracket_v(self, x[: self.k], y[: self.k])
        return out

    def to_config(self) -> dict:
        return {"k": self.k, "m": self.m, "j_maps": self.j_maps.tolist()}


def build_algebra(j_maps: Sequence, tol: float = CATALOG_TOL) -> GeneralizedHeisenbergAlgebra:
    """Validate J-maps and return the algebra they define.

    Args:
      j_maps: sequence of ``m`` square matrices of equal size ``k``.
      tol: tolerance for the skewness and Clifford checks.

    Raises:
      DimensionMismatch: empty input or matrices of unequal/non-square shape.
      NotSkew: some ``max |J + J^T| > tol``.
      CliffordViolation: some ``max |J_r J_s + J_s J_r + 2 delta_rs I| > tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    try:
        mats = [np.asarray(j, dtype=float) for j in j_maps]
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(str(exc)) from exc
    if not mats:
        raise DimensionMismatch("at least one J-map is required")
    k = mats[0].shape[0] if mats[0].ndim == 2 else -1
    for j in mats:
        if j.ndim != 2 or j.shape != (k, k):
            raise DimensionMismatch("J-maps must be square matrices of equal size")
    if k < 1:
        raise DimensionMismatch("J-maps must be non-empty")
    js = np.stack(mats)

    for r, j in enumerate(js):
        dev = np.max(np.abs(j + j.T))
        if dev > tol:
            raise NotSkew(f"J_{r + 1} is not skew-symmetric (max |J+J^T| = {dev:.3g})")
    eye = np.eye(k)
    for r in range(len(js)):
        for s in range(r, len(js)):
            anti = js[r] @ js[s] + js[s] @ js[r] + (2.0 * eye if r == s else 0.0)
            dev = np.max(np.abs(anti))
            if dev > tol:
                raise CliffordViolation(
                    f"J_{r + 1} J_{s + 1} + J_{s + 1} J_{r + 1} deviates by {dev:.3g}"
                )
    return GeneralizedHeisenbergAlgebra(
        j_maps=_frozen(js), structure=_frozen(np.transpose(js, (0, 2, 1)))
    )


def bracket_v(alg: GeneralizedHeisenbergAlgebra, v, w) -> np.ndarray:
    """[V, W] in z; the r-th component is <J_{Z_r} V, W>."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != (alg.k,) or w.shape != (alg.k,):
        raise DimensionMismatch(f"v-vectors must have length {alg.k}")
    return np.einsum("rji,i,j->r", alg.j_maps, v, w)


def ad_matrix(alg: GeneralizedHeisenbergAlgebra, v) -> np.ndarray:
    """Matrix (m x k) of the linear map W -> [V, W]."""
    v = np.asarray(v, dtype=float)
    return (alg.j_maps @ v).reshape(alg.m, alg.k)


def kernel_ad(alg: GeneralizedHeisenbergAlgebra, v, tol: float = CATALOG_TOL):
    """Split v = J_z V (+) ker ad(V) for a unit vector V.

    Returns:
      ``(kernel, jzv)``: arrays whose columns are orthonormal bases of
      ``ker ad(V)`` and of ``J_z V`` respectively.

    Raises:
      NotUnit: ``| |V| - 1 | > tol``.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (alg.k,):
        raise DimensionMismatch(f"V must have length {alg.k}")
    if abs(np.linalg.norm(v) - 1.0) > tol:
        raise NotUnit(f"|V| = {np.linalg.norm(v):.12g}, expected 1")
    ad = ad_matrix(alg, v)
    _, s, vt = np.linalg.svd(ad)
    rank = int(np.sum(s > tol * s.max())) if s.size and s.max() > 0 else 0
    kernel = vt[rank:].T
    # rows of ad are (J_r V)^T, so its row space is J_z V
    jzv = vt[:rank].T
    return kernel, jzv


def aligned(alg: GeneralizedHeisenbergAlgebra, v=None, tol: float = CATALOG_TOL):
    """Re-express ``alg`` in a basis adapted to a unit vector V.

    The new basis is ``V_1 = V``, ``V_{r+1} = J_{Z_r} V`` (r = 1..m), and the
    remaining vectors an orthonormal basis of ``ker ad(V)`` obtained by
    Gram-Schmidt.  Frame formulas written for the 4-dimensional block
    ``span{V, J_Z V, Z, A}`` assume this ordering.

    Returns:
      ``(new_alg, q)`` where the columns of ``q`` are the new basis vectors
      written in the old basis.
    """
    if v is None:
        v = np.eye(alg.k)[0]
    v = np.asarray(v, dtype=float)
    kernel, _ = kernel_ad(alg, v, tol)
    cols = [v] + [j @ v for j in alg.j_maps]
    # ker ad(V) contains V itself; keep only its orthogonal complement there
    rest = kernel - np.outer(v, v @ kernel)
    if alg.k - alg.m - 1 > 0:
        u, s, _ = np.linalg.svd(rest, full_matrices=False)
        cols.extend(u[:, :alg.k - alg.m - 1].T)
    q = np.column_stack(cols)
    new = [q.T @ j @ q for j in alg.j_maps]
    return build_algebra(new, tol=max(tol, 1e-9)), q


def is_aligned(alg: GeneralizedHeisenbergAlgebra, tol: float = 1e-12) -> bool:
    """True when ``V_{r+1} = J_{Z_r} V_1`` for every r (needs k > m)."""
    if alg.k <= alg.m:
        return False
    e = np.eye(alg.k)
    return all(np.max(np.abs(j[:, 0] - e[r + 1])) <= tol for r, j in enumerate(alg.j_maps))


@dataclass(frozen=True)
class J2Result:
    holds: bool
    residuals: dict
    witness: Optional[tuple] = None


def j2_condition(alg: GeneralizedHeisenbergAlgebra, tol: float = 1e-10) -> J2Result:
    """Test J_{Z_r} J_{Z_s} in span{J_{Z_t}} for all orthonormal pairs r < s.

    Each product is least-squares projected (Frobenius inner product) onto the
    span of the J-maps; the condition holds iff every residual is below tol.
    The witness is the first violating index pair (1-based).
    """
    if alg.m < 2:
        return J2Result(True, {})
    basis = alg.j_maps.reshape(alg.m, -1).T
    residuals = {}
    witness = None
    for r in range(alg.m):
        for s in range(r + 1, alg.m):
            target = (alg.j_maps[r] @ alg.j_maps[s]).ravel()
            coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
            res = float(np.linalg.norm(basis @ coef - target))
            residuals[(r + 1, s + 1)] = res
            if res >= tol and witness is None:
                witness = (r + 1, s + 1)
    return J2Result(witness is None, residuals, witness)


def _quat_mul(p, q):
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return np.array([
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    ])


def _quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def _oct_mul(x, y):
    # Cayley-Dickson doubling: (a, b)(c, d) = (ac - d*b, da + bc*)
    a, b = x[:4], x[4:]
    c, d = y[:4], y[4:]
    return np.concatenate([
        _quat_mul(a, c) - _quat_mul(_quat_conj(d), b),
        _quat_mul(d, a) + _quat_mul(b, _quat_conj(c)),
    ])


def _left_mult(mul, unit, dim):
    e = np.eye(dim)
    return np.column_stack([mul(e[unit], e[i]) for i in range(dim)])


def _blockdiag(mats, copies):
    return [np.kron(np.eye(copies), j) for j in mats]


def catalog(family: str, v_multiplicity: int = 1) -> GeneralizedHeisenbergAlgebra:
    """Standard generalized Heisenberg algebras.

    ``heisenberg`` (m=1, module R^2), ``clifford2`` (m=2, left multiplication
    by i, j on H = R^4), ``quaternionic`` (m=3, left multiplication by i, j, k)
    and ``octonionic`` (m=7, left multiplication by the imaginary octonion
    units on R^8).  ``v_multiplicity`` copies of the irreducible module are
    stacked block-diagonally, so ``k = module_dim * v_multiplicity``.
    """
    if int(v_multiplicity) != v_multiplicity or v_multiplicity < 1:
        raise ValueError("v_multiplicity must be a positive integer")
    v_multiplicity = int(v_multiplicity)
    if family == "heisenberg":
        mats = [np.array([[0.0, -1.0], [1.0, 0.0]])]
    elif family in ("clifford2", "quaternionic"):
        mats = [_left_mult(_quat_mul, u, 4) for u in (1, 2, 3)]
        if family == "clifford2":
            mats = mats[:2]
    elif family == "octonionic":
        mats = [_left_mult(_oct_mul, u, 8) for u in range(1, 8)]
    else:
        raise UnsupportedFamily(f"unknown family {family!r}; expected one of {FAMILIES}")
    return build_algebra(_blockdiag(mats, v_multiplicity), tol=CATALOG_TOL)


def from_config(cfg: dict, tol: float = CATALOG_TOL) -> GeneralizedHeisenbergAlgebra:
    """Build an algebra from its JSON form.

    Accepted shapes: ``{"catalog": name, "multiplicity": n}`` or
    ``{"k": k, "m": m, "j_maps": [[[...]]]}`` with row-major matrices.
    """
    if "catalog" in cfg:
        return catalog(cfg["catalog"], cfg.get("multiplicity", 1))
    if "j_maps" not in cfg:
        raise KeyError("algebra config needs 'catalog' or 'j_maps'")
    alg = build_algebra(cfg["j_maps"], tol=tol)
    for key, val in (("k", alg.k), ("m", alg.m)):
        if key in cfg and cfg[key] != val:
            raise DimensionMismatch(f"config says {key}={cfg[key]} but J-maps give {val}")
    return alg
