"""Least-squares search for conformal fields inside a finite ansatz.

Every basis field is ``phi(p) e_mu`` with ``phi`` a monomial in the
polynomial coordinates times ``exp(j a / 2)``.  At each sample point the
trace-free part of ``L_xi g``, written in a g-orthonormal frame, gives
``n(n+1)/2`` linear rows; conformal fields in the ansatz are the null vectors
of the stacked operator.  Potentials are then measured separately, so a
non-Killing conformal field would show up as a null vector with ``rho != 0``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .coeffsys import monomials
from .errors import IllConditionedBasis, InconclusiveSampling, InsufficientSampling
from .space import DamekRicciSpace
from .spaceforms import HyperbolicParams, hyperbolic_field
from .tensor import DEFAULT_H, CoordinateVectorField, defect_from_lie, lie_derivative_from_parts, partials

GRAM_LIMIT = 1e8
SVD_TOL = 1e-7
RHO_TOL = 1e-6
DEFECT_TOL = 1e-6


@dataclass(frozen=True)
class AnsatzSpec:
    """Polynomial x exponential ansatz.

    Attributes:
      dim: chart dimension.
      degree: total degree bound of the monomials.
      j_range: inclusive range of j in exp(j a / 2).
      exp_coordinate: index of the coordinate ``a``; ``None`` means no
        exponential factor and monomials in every coordinate.
      components: per-coordinate inclusion flags (default all).
      exp_window: the exponential factors are orthonormalized for the uniform
        measure on this a-interval.  The span is unchanged; the raw
        exponentials are nearly collinear and would fail the Gram guard.
    """

    dim: int
    degree: int
    j_range: tuple = (0, 0)
    exp_coordinate: Optional[int] = None
    components: Optional[tuple] = None
    exp_window: tuple = (-1.0, 1.0)

    @classmethod
    def for_space(cls, space: DamekRicciSpace, degree: int = 2, j_range=(-2, 2)):
        return cls(space.dim, degree, tuple(j_range), space.a_index)

    @property
    def poly_coordinates(self):
        return [i for i in range(self.dim) if i != self.exp_coordinate]

    @property
    def js(self):
        if self.exp_coordinate is None:
            return [0]
        return list(range(self.j_range[0], self.j_range[1] + 1))

    @cached_property
    def exp_transform(self) -> np.ndarray:
        """Rows give the orthonormalized factors as combinations of exp(j a / 2)."""
        js = np.array(self.js, dtype=float)
        lo, hi = self.exp_window
        s = (js[:, None] + js[None, :]) / 2
        safe = np.where(s == 0, 1.0, s)
        gram = np.where(s == 0, 1.0, (np.exp(s * hi) - np.exp(s * lo)) / (safe * (hi - lo)))
        return np.linalg.inv(np.linalg.cholesky(gram))

    @property
    def scalar_basis(self):
        """(exponents over poly coordinates, exponential factor index) pairs."""
        monos = monomials(len(self.poly_coordinates), self.degree)
        return [(e, q) for e in monos for q in range(len(self.js))]

    @property
    def fields(self):
        """(component, scalar index) pairs, one per basis field."""
        comps = self.components or (True,) * self.dim
        nb = len(self.scalar_basis)
        return [(mu, b) for mu in range(self.dim) if comps[mu] for b in range(nb)]

    @property
    def size(self) -> int:
        return len(self.fields)

    def scalars(self, p):
        """Values and gradients of every scalar basis function at p."""
        p = np.asarray(p, dtype=float)
        poly = self.poly_coordinates
        basis = self.scalar_basis
        e = np.array([b[0] for b in basis], dtype=float).reshape(len(basis), len(poly))
        q = np.array([b[1] for b in basis])
        x = p[poly]
        mono = np.prod(x ** e, axis=1)
        if self.exp_coordinate is None:
            ex = np.ones(len(basis))
            dex = np.zeros(len(basis))
        else:
            js = np.array(self.js, dtype=float)
            raw = np.exp(js * p[self.exp_coordinate] / 2)
            t = self.exp_transform
            ex = (t @ raw)[q]
            dex = (t @ (raw * js / 2))[q]
        vals = mono * ex
        grads = np.zeros((len(basis), self.dim))
        for t, i in enumerate(poly):
            lowered = e.copy()
            lowered[:, t] = np.maximum(lowered[:, t] - 1, 0)
            grads[:, i] = e[:, t] * np.prod(x ** lowered, axis=1) * ex
        if self.exp_coordinate is not None:
            grads[:, self.exp_coordinate] = mono * dex
        return vals, grads

    def field(self, coeffs) -> CoordinateVectorField:
        """The coordinate field sum_b coeffs[b] * basis_field_b (analytic Jacobian)."""
        coeffs = np.asarray(coeffs, dtype=float)
        fields = self.fields
        nb = len(self.scalar_basis)
        table = np.zeros((self.dim, nb))
        for c, (mu, b) in zip(coeffs, fields):
            table[mu, b] += c

        def comp(p):
            vals, _ = self.scalars(p)
            return table @ vals

        def jac(p):
            _, grads = self.scalars(p)
            return table @ grads

        return CoordinateVectorField(self.dim, comp, jac)


def cholesky_frame(g) -> np.ndarray:
    """Columns form a g-orthonormal frame: E^T g E = I."""
    low = np.linalg.cholesky(g)
    return np.linalg.inv(low).T


def gram_condition(ansatz: AnsatzSpec, points) -> float:
    """Condition number of the Gram matrix of the column-normalized scalar basis."""
    vals = np.array([ansatz.scalars(p)[0] for p in points])
    norms = np.linalg.norm(vals, axis=0)
    if not np.all(np.isfinite(vals)) or np.any(norms == 0):
        return np.inf
    s = np.linalg.svd(vals / norms, compute_uv=False)
    if s[-1] == 0:
        return np.inf
    return float((s[0] / s[-1]) ** 2)


def _rows_at(metric, ansatz, p, h, frame):
    p = np.asarray(p, dtype=float)
    n = ansatz.dim
    g = np.asarray(metric(p), dtype=float)
    dg = partials(metric, p, h)
    e = frame(p) if frame is not None else cholesky_frame(g)
    vals, grads = ansatz.scalars(p)
    iu = np.triu_indices(n)
    weight = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    out = np.empty((len(iu[0]), ansatz.size))
    for col, (mu, b) in enumerate(ansatz.fields):
        # L(phi e_mu) = phi d_mu g + g[:, mu] (x) dphi + dphi (x) g[mu, :]
        lie = vals[b] * dg[mu] + np.outer(g[:, mu], grads[b]) + np.outer(grads[b], g[mu, :])
        t = e.T @ lie @ e
        t = t - np.trace(t) / n * np.eye(n)
        out[:, col] = t[iu] * weight
    return out


def assemble_defect_operator(metric: Callable, ansatz: AnsatzSpec, sample_points,
                             h: float = DEFAULT_H, frame: Optional[Callable] = None,
                             workers: int = 1, check_gram: bool = True) -> np.ndarray:
    """Stack the trace-free Lie-derivative rows of every basis field.

    Rows are ordered by sample index regardless of ``workers``.

    Raises:
      ValueError: empty ansatz.
      InsufficientSampling: fewer than twice as many rows as columns.
      IllConditionedBasis: scalar-basis Gram condition above 1e8.
    """
    if ansatz.size == 0:
        raise ValueError("ansatz has no basis fields")
    pts = np.asarray(sample_points, dtype=float)
    n = ansatz.dim
    nrows = len(pts) * n * (n + 1) // 2
    if nrows < 2 * ansatz.size:
        raise InsufficientSampling(
            f"{nrows} rows for {ansatz.size} columns; need at least twice as many rows")
    if check_gram:
        cond = gram_condition(ansatz, pts)
        if cond > GRAM_LIMIT:
            raise IllConditionedBasis(f"Gram condition {cond:.3g} exceeds {GRAM_LIMIT:.0e}")

    def work(p):
        return _rows_at(metric, ansatz, p, h, frame)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(work, pts))
    else:
        blocks = [work(p) for p in pts]
    return np.vstack(blocks)


def nullspace(mat: np.ndarray, tol: float = SVD_TOL):
    """(basis columns, singular values) with threshold tol * sigma_max."""
    _, s, vt = np.linalg.svd(mat, full_matrices=False)
    rank = int(np.sum(s > tol * s[0]))
    return vt[rank:].T, s


@dataclass
class NullField:
    coeffs: np.ndarray
    scale: float
    max_rho: float
    max_defect: float
    classification: Optional[dict] = None

    def to_json(self):
        out = {"scale": self.scale, "max_rho": self.max_rho, "max_defect": self.max_defect}
        if self.classification is not None:
            out["classification"] = self.classification
        return out


@dataclass
class RigidityReport:
    samples: int
    basis_size: int
    gram_condition: float
    singular_values: list
    nullspace_dim: int
    fields: list = field(default_factory=list)
    verdict: str = "inconclusive"
    rho_tol: float = RHO_TOL
    defect_tol: float = DEFECT_TOL
    doubled_nullspace_dim: Optional[int] = None
    right_invariant_in_span: Optional[int] = None

    def to_json(self):
        return {
            "right_invariant_in_span": self.right_invariant_in_span,
            "samples": self.samples,
            "basis_size": self.basis_size,
            "gram_condition": self.gram_condition,
            "singular_values": list(self.singular_values),
            "nullspace_dim": self.nullspace_dim,
            "doubled_nullspace_dim": self.doubled_nullspace_dim,
            "rho_tol": self.rho_tol,
            "defect_tol": self.defect_tol,
            "fields": [f.to_json() for f in self.fields],
            "verdict": self.verdict,
        }


def measure_field(metric: Callable, xi: CoordinateVectorField, points, h: float = DEFAULT_H):
    """(scale, max |rho|, max trace-free norm) after scaling xi to unit RMS g-norm."""
    norms = []
    for p in points:
        v = xi(p)
        norms.append(v @ np.asarray(metric(p)) @ v)
    scale = 1.0 / np.sqrt(np.mean(norms))
    max_rho = 0.0
    max_def = 0.0
    for p in points:
        g = np.asarray(metric(p), dtype=float)
        lie = lie_derivative_from_parts(g, partials(metric, p, h), scale * xi(p),
                                        scale * xi.jacobian_at(p))
        d = defect_from_lie(g, lie)
        max_rho = max(max_rho, abs(d.rho))
        max_def = max(max_def, d.tracefree_norm)
    return float(scale), float(max_rho), float(max_def)


def probe_rigidity(metric: Callable, ansatz: AnsatzSpec, samples, validation_points,
                   rho_tol: float = RHO_TOL, defect_tol: float = DEFECT_TOL,
                   svd_tol: float = SVD_TOL, extra_samples=None, h: float = DEFAULT_H,
                   frame: Optional[Callable] = None, workers: int = 1,
                   space: Optional[DamekRicciSpace] = None) -> RigidityReport:
    """Find the conformal fields of the ansatz and measure their potentials.

    ``extra_samples`` (when given) are appended to ``samples`` for a second
    assembly; a change of nullspace dimension raises InconclusiveSampling.
    The verdict is ``rigid`` when null fields exist and all of them have
    max |rho| < rho_tol and trace-free defect < defect_tol on the validation
    points, ``non-rigid`` when some null field is conformal with
    max |rho| >= rho_tol, and ``inconclusive`` otherwise.
    """
    samples = np.asarray(samples, dtype=float)
    mat = assemble_defect_operator(metric, ansatz, samples, h, frame, workers)
    basis, s = nullspace(mat, svd_tol)
    report = RigidityReport(
        samples=len(samples), basis_size=ansatz.size,
        gram_condition=gram_condition(ansatz, samples),
        singular_values=[float(x) for x in s], nullspace_dim=basis.shape[1],
        rho_tol=rho_tol, defect_tol=defect_tol)
    if extra_samples is not None:
        both = np.vstack([samples, np.asarray(extra_samples, dtype=float)])
        basis2, _ = nullspace(assemble_defect_operator(metric, ansatz, both, h, frame, workers,
                                                       check_gram=False), svd_tol)
        report.doubled_nullspace_dim = basis2.shape[1]
        if basis2.shape[1] != basis.shape[1]:
            raise InconclusiveSampling(
                f"nullspace dimension {basis.shape[1]} changed to {basis2.shape[1]} "
                "when samples were added")
    for vec in basis.T:
        xi = ansatz.field(vec)
        scale, max_rho, max_def = measure_field(metric, xi, validation_points, h)
        nf = NullField(vec, scale, max_rho, max_def)
        if space is not None:
            nf.classification = match_killing(space, xi.scaled(scale), validation_points)
        report.fields.append(nf)
    if space is not None:
        report.right_invariant_in_span = right_invariant_in_span(
            space, [ansatz.field(v) for v in basis.T], validation_points)
    conformal = [f for f in report.fields if f.max_defect < defect_tol]
    if not report.fields or len(conformal) < len(report.fields):
        report.verdict = "inconclusive"
    elif all(f.max_rho < rho_tol for f in conformal):
        report.verdict = "rigid"
    else:
        report.verdict = "non-rigid"
    return report


def match_killing(space: DamekRicciSpace, xi: CoordinateVectorField, points) -> dict:
    """Describe a candidate field for reports.

    Gives its left-invariant frame components at the identity and the
    least-squares fit, over ``points``, onto the right-invariant fields (which
    are Killing).  ``residual`` is the relative misfit of that fit.
    """
    n = space.dim
    ident = np.zeros(n)
    norm0 = float(np.linalg.norm(xi(ident)))
    gens = [space.right_invariant(i)[0] for i in range(n)]
    pts = list(points)
    design = np.vstack([np.column_stack([g(p) for g in gens]) for p in pts])
    target = np.concatenate([xi(p) for p in pts])
    tnorm = float(np.linalg.norm(target))
    if tnorm == 0:
        return {"kind": "zero", "residual": 0.0, "frame_at_identity": [0.0] * n}
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = float(np.linalg.norm(design @ coef - target) / tnorm)
    kind = "right-invariant" if resid < 1e-8 else "other"
    labels = space.labels()
    return {
        "kind": kind,
        "residual": resid,
        "right_invariant_coefficients": {labels[i]: float(c) for i, c in enumerate(coef)},
        "frame_at_identity": [float(x) for x in space.frame_inverse_at(ident) @ xi(ident)],
        "norm_at_identity": norm0,
    }


def right_invariant_in_span(space: DamekRicciSpace, fields: Sequence[CoordinateVectorField],
                            points, tol: float = 1e-6) -> int:
    """How many right-invariant generators lie in the span of ``fields`` on ``points``."""
    if not fields:
        return 0
    pts = list(points)
    design = np.column_stack([np.concatenate([f(p) for p in pts]) for f in fields])
    count = 0
    for i in range(space.dim):
        gen = space.right_invariant(i)[0]
        target = np.concatenate([gen(p) for p in pts])
        coef, *_ = np.linalg.lstsq(design, target, rcond=None)
        if np.linalg.norm(design @ coef - target) < tol * np.linalg.norm(target):
            count += 1
    return count


def fit_hyperbolic_params(xi: CoordinateVectorField, points, n: int = 2):
    """Least-squares fit of a half-space field by the explicit conformal family.

    Returns ``(params, relative_residual)``.
    """
    size = len(HyperbolicParams.zeros(n).to_vector())
    pts = list(points)
    cols = []
    for i in range(size):
        unit = np.zeros(size)
        unit[i] = 1.0
        f, _ = hyperbolic_field(HyperbolicParams.from_vector(unit, n))
        cols.append(np.concatenate([f(p) for p in pts]))
    design = np.column_stack(cols)
    target = np.concatenate([xi(p) for p in pts])
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = float(np.linalg.norm(design @ coef - target) / max(np.linalg.norm(target), 1e-300))
    return HyperbolicParams.from_vector(coef, n), resid


def sample_space(rng, space: DamekRicciSpace, count: int, half_width: float = 1.0) -> np.ndarray:
    """Uniform points in the cube [-w, w]^dim (a included)."""
    return rng.uniform(-half_width, half_width, size=(count, space.dim))


def sample_halfplane(rng, n: int, count: int, y_range=(0.5, 2.0)) -> np.ndarray:
    pts = rng.uniform(-1, 1, size=(count, n))
    pts[:, -1] = rng.uniform(*y_range, size=count)
    return pts
