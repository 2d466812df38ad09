"""Finite-difference tensor calculus on a coordinate chart.

A metric is any callable ``p -> (n, n) array``.  Derivatives use the
fourth-order central stencil with one Richardson level, which gives an
O(h^6) truncation error for analytic data.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, NonFiniteEvaluation, SingularMetric

DEFAULT_H = 1e-3
# outer step for nested differences (curvature); the inner level uses h
CURVATURE_H = 1e-2


def _stencil(f, p, h, axis):
    e = np.zeros_like(p)
    e[axis] = h
    return (-f(p + 2 * e) + 8 * f(p + e) - 8 * f(p - e) + f(p - 2 * e)) / (12 * h)


def partials(f: Callable, p, h: float = DEFAULT_H) -> np.ndarray:
    """All first partial derivatives of ``f`` at ``p``.

    Returns an array with shape ``(n,) + f(p).shape`` whose leading index is
    the coordinate being differentiated.
    """
    p = np.asarray(p, dtype=float)
    out = []
    for axis in range(p.size):
        coarse = _stencil(f, p, h, axis)
        fine = _stencil(f, p, h / 2, axis)
        out.append((16 * fine - coarse) / 15)
    out = np.asarray(out)
    if not np.all(np.isfinite(out)):
        raise NonFiniteEvaluation(f"non-finite derivative at {p}")
    return out


def directional(f: Callable, p, direction, h: float = DEFAULT_H):
    """Derivative of ``f`` at ``p`` along ``direction`` (Richardson-extrapolated)."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(direction, dtype=float)

    def along(t):
        return f(p + t[0] * d)

    z = np.zeros(1)
    return partials(along, z, h)[0]


@dataclass(frozen=True)
class CoordinateVectorField:
    """Vector field given by its coordinate components.

    Attributes:
      dim: chart dimension.
      components: ``p -> (dim,)`` array of components xi^mu(p).
      jacobian: optional ``p -> (dim, dim)`` array ``J[mu, nu] = d_nu xi^mu``;
        central differences are used when absent.
    """

    dim: int
    components: Callable
    jacobian: Optional[Callable] = None

    def __call__(self, p):
        return np.asarray(self.components(p), dtype=float)

    def jacobian_at(self, p, h: float = DEFAULT_H) -> np.ndarray:
        if self.jacobian is not None:
            return np.asarray(self.jacobian(p), dtype=float)
        return partials(self, p, h).T

    def __add__(self, other):
        if other.dim != self.dim:
            raise DimensionMismatch("fields live on charts of different dimension")
        jac = None
        if self.jacobian is not None and other.jacobian is not None:
            def jac(p):
                return self.jacobian_at(p) + other.jacobian_at(p)
        return CoordinateVectorField(self.dim, lambda p: self(p) + other(p), jac)

    def scaled(self, c: float):
        jac = None
        if self.jacobian is not None:
            def jac(p):
                return c * self.jacobian_at(p)
        return CoordinateVectorField(self.dim, lambda p: c * self(p), jac)


def check_jacobian(field: CoordinateVectorField, p, h: float = DEFAULT_H) -> float:
    """Max deviation of the analytic Jacobian from central differences."""
    if field.jacobian is None:
        return 0.0
    return float(np.max(np.abs(field.jacobian_at(p) - partials(field, p, h).T)))


@dataclass(frozen=True)
class ConformalDefect:
    rho: float
    tracefree_norm: float


def lie_derivative_from_parts(g, dg, xi, jac) -> np.ndarray:
    """(L_xi g)_{mu nu} = xi^l d_l g_{mu nu} + g_{l nu} d_mu xi^l + g_{mu l} d_nu xi^l."""
    out = np.tensordot(xi, dg, axes=1) + jac.T @ g + g @ jac
    return 0.5 * (out + out.T)


def lie_derivative_metric(metric: Callable, field: CoordinateVectorField, p,
                          h: float = DEFAULT_H, dg=None) -> np.ndarray:
    """Lie derivative of the metric along ``field`` at ``p`` (coordinate basis).

    ``dg`` may carry precomputed metric partials ``dg[l, mu, nu]``.
    """
    p = np.asarray(p, dtype=float)
    g = np.asarray(metric(p), dtype=float)
    if g.shape != (p.size, p.size):
        raise DimensionMismatch("metric shape does not match point dimension")
    if dg is None:
        dg = partials(metric, p, h)
    xi = field(p)
    jac = field.jacobian_at(p, h)
    out = lie_derivative_from_parts(g, dg, xi, jac)
    if not np.all(np.isfinite(out)):
        raise NonFiniteEvaluation(f"non-finite Lie derivative at {p}")
    return out


def defect_from_lie(g, lie) -> ConformalDefect:
    n = g.shape[0]
    rho = float(np.trace(np.linalg.solve(g, lie)) / (2 * n))
    return ConformalDefect(rho, float(np.linalg.norm(lie - 2 * rho * g)))


def conformal_defect(metric: Callable, field: CoordinateVectorField, p,
                     h: float = DEFAULT_H, dg=None) -> ConformalDefect:
    """Potential rho = tr(g^-1 L_xi g)/(2n) and the norm of L_xi g - 2 rho g."""
    lie = lie_derivative_metric(metric, field, p, h, dg)
    return defect_from_lie(np.asarray(metric(p), dtype=float), lie)


def lie_derivative_identity_check(metric: Callable, f: Callable,
                                  field: CoordinateVectorField, p,
                                  h: float = DEFAULT_H) -> float:
    """Residual of L_{f xi} g = f L_xi g + 2 sym(df (x) xi_flat).

    Both sides are evaluated independently: the left side differentiates the
    product field f*xi numerically, the right side combines L_xi g with df.
    """
    p = np.asarray(p, dtype=float)
    prod = CoordinateVectorField(field.dim, lambda q: f(q) * field(q))
    lhs = lie_derivative_metric(metric, prod, p, h)
    g = np.asarray(metric(p), dtype=float)
    df = partials(f, p, h)
    flat = g @ field(p)
    rhs = f(p) * lie_derivative_metric(metric, field, p, h) + np.outer(df, flat) + np.outer(flat, df)
    return float(np.linalg.norm(lhs - rhs))


def christoffel(metric: Callable, p, h: float = DEFAULT_H) -> np.ndarray:
    """Gamma[l, mu, nu] = 1/2 g^{l s}(d_mu g_{s nu} + d_nu g_{s mu} - d_s g_{mu nu})."""
    p = np.asarray(p, dtype=float)
    g = np.asarray(metric(p), dtype=float)
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric(f"metric is singular at {p}") from exc
    if np.linalg.cond(g) > 1e12:
        raise SingularMetric(f"metric is numerically singular at {p}")
    dg = partials(metric, p, h)  # dg[s, mu, nu] = d_s g_{mu nu}
    # lower[s, mu, nu] = d_mu g_{s nu} + d_nu g_{s mu} - d_s g_{mu nu}
    lower = np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg
    return 0.5 * np.einsum("ls,smn->lmn", ginv, lower)


def _christoffel_and_derivative(metric, p, h, outer):
    gam = christoffel(metric, p, h)
    dgam = partials(lambda q: christoffel(metric, q, h), p, outer)  # dgam[s, l, mu, nu]
    return gam, dgam


def riemann_at(metric: Callable, p, h: float = DEFAULT_H, outer: float = CURVATURE_H) -> np.ndarray:
    """R^r_{s mu nu} = d_mu G^r_{nu s} - d_nu G^r_{mu s} + G^r_{mu l} G^l_{nu s} - G^r_{nu l} G^l_{mu s}."""
    gam, dgam = _christoffel_and_derivative(metric, p, h, outer)
    d = np.einsum("mrns->rsmn", dgam)
    r = d - np.transpose(d, (0, 1, 3, 2))
    quad = np.einsum("rml,lns->rsmn", gam, gam)
    return r + quad - np.transpose(quad, (0, 1, 3, 2))


def ricci_at(metric: Callable, p, h: float = DEFAULT_H, outer: float = CURVATURE_H) -> np.ndarray:
    """Ricci tensor from nested differences of the Christoffel symbols.

    R_{mu nu} = d_l G^l_{mu nu} - d_nu G^l_{mu l} + G^l_{l s} G^s_{mu nu}
                - G^l_{nu s} G^s_{mu l}
    """
    gam, dgam = _christoffel_and_derivative(metric, p, h, outer)
    term1 = np.einsum("llmn->mn", dgam)
    term2 = np.einsum("nlml->mn", dgam)
    term3 = np.einsum("lls,smn->mn", gam, gam)
    term4 = np.einsum("lns,sml->mn", gam, gam)
    return term1 - term2 + term3 - term4


@dataclass(frozen=True)
class EinsteinCheck:
    lambda_: float
    max_dev: float
    spread: float
    lambdas: tuple


def einstein_check(metric: Callable, points, h: float = DEFAULT_H,
                   outer: float = CURVATURE_H) -> EinsteinCheck:
    """Fit Ric = lambda g pointwise and report the worst deviation and the spread."""
    lams, devs = [], []
    for p in points:
        g = np.asarray(metric(p), dtype=float)
        ric = ricci_at(metric, p, h, outer)
        lam = float(np.trace(np.linalg.solve(g, ric)) / g.shape[0])
        lams.append(lam)
        devs.append(float(np.linalg.norm(ric - lam * g)))
    lams = np.asarray(lams)
    return EinsteinCheck(float(lams.mean()), float(max(devs)),
                         float(lams.max() - lams.min()), tuple(lams.tolist()))


def sectional_curvature(metric: Callable, p, x, y, h: float = DEFAULT_H,
                        outer: float = CURVATURE_H, riemann=None) -> float:
    """K(x, y) = R(x, y, y, x) / (|x|^2 |y|^2 - <x, y>^2) for coordinate vectors x, y."""
    g = np.asarray(metric(p), dtype=float)
    if riemann is None:
        riemann = riemann_at(metric, p, h, outer)
    low = np.einsum("ar,rsmn->asmn", g, riemann)  # R_{a s mu nu}
    # R(x,y)y = R^r_{s mu nu} y^s x^mu y^nu; paired with x via g
    num = np.einsum("asmn,a,s,m,n->", low, x, y, x, y)
    den = (x @ g @ x) * (y @ g @ y) - (x @ g @ y) ** 2
    return float(num / den)
