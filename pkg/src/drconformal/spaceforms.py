"""Explicit conformal fields on Euclidean space, the round sphere and the
half-space model of real hyperbolic space, together with their potentials.

These serve as ground truth for the tensor machinery and as the positive
control for the rigidity probe.
"""

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import ChartPole, NonPositiveY, ShapeMismatch
from .tensor import CoordinateVectorField

POLE_RADIUS = 1e3


def _vec(x, n, name):
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ShapeMismatch(f"{name} must have shape ({n},), got {x.shape}")
    return x


def _skew(x, n, name):
    x = np.asarray(x, dtype=float)
    if x.shape != (n, n):
        raise ShapeMismatch(f"{name} must have shape ({n}, {n}), got {x.shape}")
    if np.max(np.abs(x + x.T), initial=0.0) > 1e-14:
        raise ShapeMismatch(f"{name} must be skew-symmetric")
    return x


def random_skew(rng, n):
    b = rng.normal(size=(n, n))
    return b - b.T


# --- Euclidean space -------------------------------------------------------

@dataclass(frozen=True)
class EuclideanParams:
    """xi(x) = a + A x + b1 x + |x|^2 b2 / 2 - <b2, x> x."""

    a: np.ndarray
    A: np.ndarray
    b1: float
    b2: np.ndarray

    @property
    def n(self):
        return len(self.a)

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros((n, n)), 0.0, np.zeros(n))

    @classmethod
    def random(cls, rng, n):
        return cls(rng.normal(size=n), random_skew(rng, n), float(rng.normal()), rng.normal(size=n))


def euclidean_metric(n):
    eye = np.eye(n)
    return lambda p: eye


def euclidean_field(params: EuclideanParams):
    """Conformal field of E^n and its potential rho(x) = b1 - <b2, x>."""
    n = params.n
    a = _vec(params.a, n, "a")
    rot = _skew(params.A, n, "A")
    b1 = float(params.b1)
    b2 = _vec(params.b2, n, "b2")

    def comp(x):
        x = np.asarray(x, dtype=float)
        return a + rot @ x + b1 * x + 0.5 * (x @ x) * b2 - (b2 @ x) * x

    def jac(x):
        x = np.asarray(x, dtype=float)
        return rot + (b1 - b2 @ x) * np.eye(n) + np.outer(b2, x) - np.outer(x, b2)

    def rho(x):
        return b1 - b2 @ np.asarray(x, dtype=float)

    return CoordinateVectorField(n, comp, jac), rho


# --- Sphere (stereographic chart from the north pole) ----------------------

@dataclass(frozen=True)
class SphereParams:
    """Ambient field xi(x) = A x + b - <b, x> x on S^n in R^{n+1}."""

    A: np.ndarray
    b: np.ndarray

    @property
    def n(self):
        return len(self.b) - 1

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros((n + 1, n + 1)), np.zeros(n + 1))

    @classmethod
    def random(cls, rng, n):
        return cls(random_skew(rng, n + 1), rng.normal(size=n + 1))


def sphere_metric(n):
    eye = np.eye(n)
    return lambda u: 4.0 * eye / (1.0 + u @ u) ** 2


def inverse_stereographic(u) -> np.ndarray:
    """Chart point u in R^n to x on S^n; u = 0 maps to the south pole."""
    u = np.asarray(u, dtype=float)
    s = u @ u
    if np.sqrt(s) > POLE_RADIUS:
        raise ChartPole(f"|u| = {np.sqrt(s):.3g} is too close to the projection pole")
    return np.concatenate([2 * u, [s - 1]]) / (1 + s)


def stereographic(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[:-1] / (1 - x[-1])


def sphere_field(params: SphereParams):
    """Conformal field on S^n pushed to the stereographic chart.

    Returns ``(field, rho)`` with ``rho(u) = -<b, x(u)>``.  The gradient of
    the height function h = <b, x> has Hessian -h g on the unit sphere, so its
    potential is -h.
    """
    n = params.n
    if n < 2:
        raise ShapeMismatch("sphere fields need n >= 2")
    rot = _skew(params.A, n + 1, "A")
    b = _vec(params.b, n + 1, "b")

    def comp(u):
        x = inverse_stereographic(u)
        amb = rot @ x + b - (b @ x) * x
        d = 1 - x[-1]
        # differential of x -> x'/(1 - x_{n+1})
        return amb[:-1] / d + x[:-1] * amb[-1] / d**2

    def rho(u):
        return -(b @ inverse_stereographic(u))

    return CoordinateVectorField(n, comp), rho


# --- Real hyperbolic space (upper half-space) ------------------------------

@dataclass(frozen=True)
class HyperbolicParams:
    """Parameters of the general conformal field on the half-space RH^n(-1).

    With X = (x, y) and c = (a2, b2) the field is
    (a0, b0) + [[A, -b1], [b1^T, 0]] X + a1 X + |X|^2 c - 2 <c, X> X.
    """

    a0: np.ndarray
    b0: float
    A: np.ndarray
    b1: np.ndarray
    a1: float
    a2: np.ndarray
    b2: float

    @property
    def n(self):
        return len(self.a0) + 1

    @classmethod
    def zeros(cls, n):
        m = n - 1
        return cls(np.zeros(m), 0.0, np.zeros((m, m)), np.zeros(m), 0.0, np.zeros(m), 0.0)

    @classmethod
    def random(cls, rng, n):
        m = n - 1
        return cls(rng.normal(size=m), float(rng.normal()), random_skew(rng, m),
                   rng.normal(size=m), float(rng.normal()), rng.normal(size=m),
                   float(rng.normal()))

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.a0, [self.b0], self.A[np.triu_indices(self.n - 1, 1)],
                               self.b1, [self.a1], self.a2, [self.b2]])

    @classmethod
    def from_vector(cls, vec, n):
        m = n - 1
        vec = np.asarray(vec, dtype=float)
        i = 0

        def take(size):
            nonlocal i
            out = vec[i:i + size]
            i += size
            return out

        a0 = take(m)
        b0 = float(take(1)[0])
        A = np.zeros((m, m))
        iu = np.triu_indices(m, 1)
        A[iu] = take(len(iu[0]))
        A = A - A.T
        b1 = take(m)
        a1 = float(take(1)[0])
        a2 = take(m)
        b2 = float(take(1)[0])
        return cls(a0, b0, A, b1, a1, a2, b2)


def halfspace_metric(n):
    eye = np.eye(n)

    def g(p):
        y = p[-1]
        if y <= 0:
            raise NonPositiveY(f"y = {y} is outside the half-space")
        return eye / y**2

    return g


def hyperbolic_field(params: HyperbolicParams):
    """Conformal field on the half-space and its potential.

    rho(x, y) = -(b0 + <x, b1> + b2 (|x|^2 + y^2)) / y.
    """
    n = params.n
    m = n - 1
    a0 = _vec(params.a0, m, "a0")
    rot = _skew(params.A, m, "A")
    b1 = _vec(params.b1, m, "b1")
    a2 = _vec(params.a2, m, "a2")
    b0, a1, b2 = float(params.b0), float(params.a1), float(params.b2)
    shift = np.concatenate([a0, [b0]])
    c = np.concatenate([a2, [b2]])
    mid = np.zeros((n, n))
    mid[:m, :m] = rot
    mid[:m, m] = -b1
    mid[m, :m] = b1

    def check(p):
        p = np.asarray(p, dtype=float)
        if p.shape != (n,):
            raise ShapeMismatch(f"point must have shape ({n},)")
        if p[-1] <= 0:
            raise NonPositiveY(f"y = {p[-1]} is outside the half-space")
        return p

    def comp(p):
        p = check(p)
        return shift + mid @ p + a1 * p + (p @ p) * c - 2 * (c @ p) * p

    def jac(p):
        p = check(p)
        return mid + (a1 - 2 * (c @ p)) * np.eye(n) + 2 * np.outer(c, p) - 2 * np.outer(p, c)

    def rho(p):
        p = check(p)
        return -(b0 + p[:m] @ b1 + b2 * (p @ p)) / p[-1]

    return CoordinateVectorField(n, comp, jac), rho


MODELS = {
    "euclidean": (EuclideanParams, euclidean_field, euclidean_metric),
    "sphere": (SphereParams, sphere_field, sphere_metric),
    "hyperbolic": (HyperbolicParams, hyperbolic_field, halfspace_metric),
}


def params_from_config(model: str, n: int, cfg: dict):
    """Parameter block from JSON; missing entries default to zero."""
    if model not in MODELS:
        raise ShapeMismatch(f"unknown model {model!r}")
    base = MODELS[model][0].zeros(n)
    values = {}
    for name in base.__dataclass_fields__:
        default = getattr(base, name)
        raw = cfg.get(name)
        if raw is None:
            values[name] = default
        elif np.ndim(default) == 0:
            values[name] = float(raw)
        else:
            values[name] = np.asarray(raw, dtype=float)
    return type(base)(**values)


def sample_points(model: str, n: int, rng, count: int) -> np.ndarray:
    """Evaluation points away from chart boundaries."""
    if model == "hyperbolic":
        pts = rng.uniform(-1, 1, size=(count, n))
        pts[:, -1] = rng.uniform(0.5, 2.0, size=count)
        return pts
    if model == "sphere":
        return rng.uniform(-1.5, 1.5, size=(count, n))
    return rng.uniform(-2, 2, size=(count, n))
