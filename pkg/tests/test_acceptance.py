"""Acceptance suite: one PASS/FAIL line per criterion.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""

import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent))

from drconformal import coeffsys as K  # noqa: E402
from drconformal import confsys as C  # noqa: E402
from drconformal import probe as P  # noqa: E402
from drconformal import spaceforms as S  # noqa: E402
from drconformal.algebra import catalog  # noqa: E402
from drconformal.space import extend_solvable  # noqa: E402
from drconformal.tensor import (  # noqa: E402
    CoordinateVectorField, conformal_defect, einstein_check, lie_derivative_identity_check,
)
from oracles import complex_component  # noqa: E402

RESULTS = []


def rng_for(seed):
    return np.random.Generator(np.random.Philox(seed))


def report(number, title, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number} ({title}): {detail}"
    RESULTS.append(line)
    print(line)
    return passed


def space_of(family):
    return extend_solvable(catalog(family))


def test_criterion_1_frame_tables():
    start = time.perf_counter()
    worst = 0.0
    for family in ("heisenberg", "clifford2", "quaternionic"):
        space = space_of(family)
        pts = rng_for(1).uniform(-1, 1, size=(20, space.dim))
        for name in C.FRAME_FIELDS:
            want = C.expected_table(name)
            for p in pts:
                worst = max(worst, float(np.max(np.abs(C.measured_table(space, name, p) - want))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-7 and elapsed < 10
    assert report(1, "Lie-derivative tables", ok, f"max error {worst:.2e} (< 1e-7), {elapsed:.1f}s (< 10s)")


def test_criterion_2_space_forms():
    start = time.perf_counter()
    rng = rng_for(2)
    worst_defect = worst_rho = 0.0
    for model, n in (("euclidean", 3), ("sphere", 2), ("hyperbolic", 2), ("hyperbolic", 3)):
        params_cls, field_fn, metric_fn = S.MODELS[model]
        metric = metric_fn(n)
        for _ in range(50):
            xi, rho = field_fn(params_cls.random(rng, n))
            for p in S.sample_points(model, n, rng, 50):
                d = conformal_defect(metric, xi, p)
                worst_defect = max(worst_defect, d.tracefree_norm)
                worst_rho = max(worst_rho, abs(d.rho - rho(p)))
    elapsed = time.perf_counter() - start
    ok = worst_defect < 1e-7 and worst_rho < 1e-7 and elapsed < 30
    assert report(2, "space-form fields", ok,
                  f"tracefree {worst_defect:.2e}, rho error {worst_rho:.2e} (< 1e-7), {elapsed:.1f}s (< 30s)")


def test_criterion_3_einstein():
    start = time.perf_counter()
    parts = []
    ok = True
    for family in ("heisenberg", "clifford2"):
        space = space_of(family)
        res = einstein_check(space.metric_at, rng_for(3).uniform(-1, 1, size=(20, space.dim)))
        ok = ok and res.max_dev < 1e-3 and res.spread < 1e-3 and res.lambda_ < 0
        parts.append(f"{family}: lambda {res.lambda_:.6f}, |Ric - lambda g| {res.max_dev:.1e}, "
                     f"spread {res.spread:.1e}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 60
    assert report(3, "Einstein property", ok, "; ".join(parts) + f"; {elapsed:.1f}s (< 60s)")


def test_criterion_4_harmonic_machinery():
    rng = rng_for(4)
    worst = 0.0
    for _ in range(1000):
        c1, c2 = rng.normal(size=2)
        z, w = rng.uniform(-1, 1), rng.uniform(0, 1)
        for m in range(13):
            got = C.harmonic_component(m, c1, c2, z, w)
            want = complex_component(m, c1, c2, z, w)
            worst = max(worst, abs(got[0] - want[0]), abs(got[1] - want[1]))
    space = space_of("heisenberg")
    cr = 0.0
    for _ in range(20):
        M = int(rng.integers(1, 13))
        poly = lambda: C.Polynomial.from_terms(2, [((int(i), int(j)), rng.normal())  # noqa: E731
                                                   for i, j in rng.integers(0, 3, size=(3, 2))])
        exp = C.HarmonicExpansion(2, tuple(poly() for _ in range(M)), tuple(poly() for _ in range(M)),
                                  poly(), poly())
        n0 = rng.uniform(-1, 1, size=2)

        def scaled(i):
            def f(z, w, n0_):
                p = np.array([n0_[0], n0_[1], z, np.log(w)])
                return w * C.assemble_f3_f4(exp, p, space)[i]
            return f

        z, w = rng.uniform(-0.5, 0.5), rng.uniform(0.5, 1.0)
        cr = max(cr, *map(abs, C.cauchy_riemann_residual(scaled(0), scaled(1), z, w, n0)))
    ok = worst < 1e-12 and cr < 1e-7
    assert report(4, "harmonic machinery", ok,
                  f"max |F - complex| {worst:.2e} (< 1e-12), CR residual {cr:.2e} (< 1e-7)")


def test_criterion_5_coefficient_system():
    space = space_of("heisenberg")
    system = K.build_system(6, 2, space)
    sol = K.solve_system(system)
    forbidden = 0.0
    for vec in sol.basis.T:
        for label, val in K.family_norms(system, vec).items():
            if label == "C4" or label.startswith("C2[") or (
                    label.startswith("C1[") and int(label[3:-1]) >= 3):
                forbidden = max(forbidden, val)
    pts = rng_for(5).uniform(-1, 1, size=(10, 4))
    f4_err = max(abs(K.f4_from_solution(system, v, space, p) - K.f4_closed_form(system, v, space, p))
                 for v in sol.basis.T for p in pts)
    rho = max(abs(K.rho_of_solution(system, v, space, p)) for v in sol.basis.T for p in pts)
    dims = {M: K.solve_system(K.build_system(M, 2, space)).dim for M in (4, 8)}
    dims[6] = sol.dim
    survivors = K.surviving_families(system, sol)
    ok = (sol.dim > 0 and forbidden < 1e-9 and f4_err < 1e-9 and rho < 1e-6
          and len(set(dims.values())) == 1)
    assert report(5, "coefficient system", ok,
                  f"nullspace dim {sol.dim} (by M: {dict(sorted(dims.items()))}), survivors {survivors}, "
                  f"max forbidden {forbidden:.1e}, f4 closed-form error {f4_err:.1e}, "
                  f"max |df4/da| {rho:.1e}")


def test_criterion_6_rigidity_probe():
    parts = []
    ok = True
    for family, count in (("heisenberg", 400), ("clifford2", 300)):
        start = time.perf_counter()
        space = space_of(family)
        rng = rng_for(6)
        ansatz = P.AnsatzSpec.for_space(space, 2, (-2, 2))
        samples = P.sample_space(rng, space, count)
        rows = count * space.dim * (space.dim + 1) // 2
        rep = P.probe_rigidity(space.metric_at, ansatz, samples, P.sample_space(rng, space, 200),
                               extra_samples=P.sample_space(rng, space, count),
                               frame=space.frame_at, space=space)
        elapsed = time.perf_counter() - start
        max_rho = max((f.max_rho for f in rep.fields), default=np.inf)
        max_def = max((f.max_defect for f in rep.fields), default=np.inf)
        this = (rep.nullspace_dim > 0 and max_rho < 1e-6 and max_def < 1e-6
                and rows >= 2 * ansatz.size and elapsed < 300)
        ok = ok and this
        parts.append(f"{family}: {rep.nullspace_dim} null fields of {ansatz.size} "
                     f"({rows} rows), max|rho| {max_rho:.1e}, tracefree {max_def:.1e}, "
                     f"verdict {rep.verdict}, {elapsed:.0f}s")
    assert report(6, "rigidity probe", ok, "; ".join(parts))


def test_criterion_7_positive_control():
    rng = rng_for(7)
    metric = S.halfspace_metric(2)
    ansatz = P.AnsatzSpec(2, 2)
    val = P.sample_halfplane(rng, 2, 200)
    rep = P.probe_rigidity(metric, ansatz, P.sample_halfplane(rng, 2, 100), val,
                           extra_samples=P.sample_halfplane(rng, 2, 100))
    best = max(rep.fields, key=lambda f: f.max_rho)
    xi = ansatz.field(best.coeffs).scaled(best.scale)
    params, _ = P.fit_hyperbolic_params(xi, val)
    _, rho = S.hyperbolic_field(params)
    err = max(abs(conformal_defect(metric, xi, p).rho - rho(p)) for p in val)
    ok = best.max_rho > 0.1 and err < 1e-4
    assert report(7, "hyperbolic positive control", ok,
                  f"verdict {rep.verdict}, max|rho| {best.max_rho:.3f} (> 0.1), "
                  f"fitted-rho error {err:.1e} (< 1e-4)")


def test_criterion_8_product_rule():
    space = space_of("heisenberg")
    rng = rng_for(8)
    worst = 0.0
    for _ in range(100):
        w = rng.normal(size=(4, 4))
        f = lambda p, w=w: np.sin(w[0] @ p) + (w[1] @ p) ** 2  # noqa: E731
        xi = CoordinateVectorField(4, lambda p, w=w: np.cos(w[2] * p) + w[3] * p ** 2)
        p = rng.uniform(-1, 1, size=4)
        worst = max(worst, lie_derivative_identity_check(space.metric_at, f, xi, p))
    assert report(8, "Lie derivative of f xi", worst < 1e-6, f"max residual {worst:.2e} (< 1e-6)")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
