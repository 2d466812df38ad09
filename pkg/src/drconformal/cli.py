"""Command-line front end.

Every subcommand reads an optional JSON config, runs one verification suite
and writes a JSON report (sorted keys, no timestamps) that embeds the SHA-256
of the canonical config and the tool version.  Exit codes: 0 when every check
passes, 1 when a check fails, 2 on usage or config errors.

Random points come from numpy's Philox counter-based generator seeded with
``--seed``.
"""

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import algebra as alg_mod
from . import coeffsys, confsys, probe, spaceforms
from .errors import GeometryError
from .space import extend_solvable
from .tensor import CoordinateVectorField, conformal_defect, einstein_check

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

DEFAULT_ALGEBRA = {"catalog": "heisenberg", "multiplicity": 1}


class ConfigError(Exception):
    pass


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _space(cfg):
    return extend_solvable(alg_mod.from_config(cfg.get("algebra", DEFAULT_ALGEBRA)))


def _cube(rng, dim, count):
    return rng.uniform(-1.0, 1.0, size=(count, dim))


def _opt(args, name, default):
    val = getattr(args, name)
    return default if val is None else val


# --- subcommands -------------------------------------------------------------
# Each returns (passed, body) where body is merged into the report.

def cmd_verify_algebra(cfg, args):
    alg = alg_mod.from_config(cfg.get("algebra", cfg if cfg else DEFAULT_ALGEBRA))
    tol = _opt(args, "tol", 1e-12)
    rng = make_rng(args.seed)
    j = alg.j_maps
    k, m = alg.k, alg.m
    checks = []

    def add(name, residual, limit=tol):
        checks.append({"name": name, "residual": float(residual), "passed": bool(residual < limit)})

    add("skew", np.max(np.abs(j + np.transpose(j, (0, 2, 1)))))
    anti = np.einsum("rij,sjl->rsil", j, j)
    anti = anti + np.transpose(anti, (1, 0, 2, 3))
    anti += 2 * np.einsum("rs,il->rsil", np.eye(m), np.eye(k))
    add("clifford_relations", np.max(np.abs(anti)))
    worst = 0.0
    compat = 0.0
    for _ in range(_opt(args, "samples", 100)):
        z = rng.normal(size=m)
        z /= np.linalg.norm(z)
        x, w = rng.normal(size=k), rng.normal(size=k)
        jz = alg.j(z)
        worst = max(worst, np.linalg.norm(jz @ jz @ x + x) / np.linalg.norm(x))
        compat = max(compat, abs((jz @ x) @ w - z @ alg_mod.bracket_v(alg, x, w)))
    add("j_squared_unit", worst)
    add("bracket_compatibility", compat)
    new, _ = alg_mod.aligned(alg)
    checks.append({"name": "aligned_basis", "passed": alg_mod.is_aligned(new)})
    j2 = alg_mod.j2_condition(alg)
    body = {
        "k": k, "m": m, "checks": checks,
        "j2_condition": {"holds": j2.holds,
                         "residuals": {f"{r},{s}": v for (r, s), v in j2.residuals.items()},
                         "witness": None if j2.witness is None else list(j2.witness)},
    }
    return all(c["passed"] for c in checks), body


def cmd_verify_tables(cfg, args):
    space = _space(cfg)
    tol = _opt(args, "tol", 1e-7)
    pts = _cube(make_rng(args.seed), space.dim, _opt(args, "samples", 20))
    rows = {}
    for name in confsys.FRAME_FIELDS:
        want = confsys.expected_table(name)
        err = max(float(np.max(np.abs(confsys.measured_table(space, name, p) - want))) for p in pts)
        rows[name] = {"expected": want.tolist(), "max_error": err, "passed": err < tol}
    return all(r["passed"] for r in rows.values()), {"tables": rows, "tol": tol}


def cmd_check_einstein(cfg, args):
    space = _space(cfg)
    tol = _opt(args, "tol", 1e-3)
    pts = _cube(make_rng(args.seed), space.dim, _opt(args, "samples", 20))
    res = einstein_check(space.metric_at, pts)
    body = {
        "lambda": res.lambda_, "lambda_exact": -(space.k / 4 + space.m),
        "max_deviation": res.max_dev, "lambda_spread": res.spread, "tol": tol,
    }
    return res.max_dev < tol and res.spread < tol and res.lambda_ < 0, body


def cmd_spaceform(cfg, args):
    model = cfg.get("model", "euclidean")
    n = int(cfg.get("n", 3))
    if model not in spaceforms.MODELS:
        raise ConfigError(f"unknown model {model!r}")
    params_cls, field_fn, metric_fn = spaceforms.MODELS[model]
    tol = _opt(args, "tol", 1e-7)
    rng = make_rng(args.seed)
    metric = metric_fn(n)
    if "params" in cfg:
        draws = [spaceforms.params_from_config(model, n, cfg["params"])]
    else:
        draws = [params_cls.random(rng, n) for _ in range(int(cfg.get("draws", 50)))]
    count = _opt(args, "samples", 50)
    worst_defect = worst_rho = 0.0
    for params in draws:
        xi, rho = field_fn(params)
        for p in spaceforms.sample_points(model, n, rng, count):
            d = conformal_defect(metric, xi, p)
            worst_defect = max(worst_defect, d.tracefree_norm)
            worst_rho = max(worst_rho, abs(d.rho - rho(p)))
    body = {"model": model, "n": n, "draws": len(draws), "points_per_draw": count,
            "max_tracefree_norm": worst_defect, "max_rho_error": worst_rho, "tol": tol}
    return worst_defect < tol and worst_rho < tol, body


def cmd_confsys_residuals(cfg, args):
    space = _space(cfg)
    tol = _opt(args, "tol", 1e-6)
    pts = _cube(make_rng(args.seed), space.dim, _opt(args, "samples", 20))
    field_cfg = cfg.get("field", {"right_invariant": "all"})
    cases = []
    if "expansion" in field_cfg:
        exp = confsys.HarmonicExpansion.from_json(field_cfg["expansion"])
        cases.append(("expansion", confsys.expansion_data(exp, space)))
    else:
        which = field_cfg.get("right_invariant", "all")
        labels = space.labels()
        idx = range(space.dim) if which == "all" else [
            labels.index(which) if isinstance(which, str) else int(which)]
        for i in idx:
            comp, jac = space.right_invariant(i)
            xi = CoordinateVectorField(space.dim, comp, jac)
            cases.append((f"right_invariant[{labels[i]}]", confsys.from_vector_field(space, xi)))
    out = {}
    for name, data in cases:
        block = sub = 0.0
        for p in pts:
            rho = confsys.potential_from_f4(data, p)
            block = max(block, max(float(np.max(np.abs(b)))
                                   for b in confsys.block_residuals(space, data, rho, p)))
            sub = max(sub, float(np.max(np.abs(confsys.subsystem_residuals(space, data, p)))))
        out[name] = {"max_block_residual": block, "max_subsystem_residual": sub,
                     "passed": block < tol and sub < tol}
    return all(c["passed"] for c in out.values()), {"fields": out, "tol": tol}


def cmd_coeffsys(cfg, args):
    space = _space(cfg)
    M = int(cfg.get("M", 6))
    d = int(cfg.get("degree", coeffsys.DEFAULT_DEGREE))
    tol = _opt(args, "tol", coeffsys.DEFAULT_TOL)
    zero_tol = float(cfg.get("zero_tol", 1e-9))
    allowed = set(cfg.get("allowed_families", ["C1[1]", "C1[2]", "C5", "C6"]))
    system = coeffsys.build_system(M, d, space)
    sol = coeffsys.solve_system(system, tol)
    dims = {}
    for other in cfg.get("stability_M", [4, 6, 8]):
        dims[str(other)] = sol.dim if other == M else coeffsys.solve_system(
            coeffsys.build_system(int(other), d, space), tol).dim
    survivors = coeffsys.surviving_families(system, sol, zero_tol)
    forbidden = 0.0
    for vec in sol.basis.T:
        for label, val in coeffsys.family_norms(system, vec).items():
            if label not in allowed:
                forbidden = max(forbidden, val)
    pts = _cube(make_rng(args.seed), space.dim, _opt(args, "samples", 10))
    f4_err = rho_max = 0.0
    for vec in sol.basis.T:
        for p in pts:
            f4_err = max(f4_err, abs(coeffsys.f4_from_solution(system, vec, space, p)
                                     - coeffsys.f4_closed_form(system, vec, space, p)))
            rho_max = max(rho_max, abs(coeffsys.rho_of_solution(system, vec, space, p)))
    body = {
        "M": M, "degree": d, "rows": len(system.rows), "columns": len(system.columns),
        "rank": sol.rank, "nullspace_dim": sol.dim, "nullspace_dim_by_M": dims,
        "surviving_families": survivors, "max_forbidden_coefficient": forbidden,
        "max_f4_closed_form_error": f4_err, "max_abs_df4_da": rho_max,
        "basis": [[float(x) for x in v] for v in sol.basis.T],
        "columns_labels": [f"{c.label}{list(c.exps)}" for c in system.columns],
    }
    passed = (forbidden < zero_tol and len(set(dims.values())) == 1 and set(survivors) <= allowed
              and f4_err < 1e-8 and rho_max < 1e-6)
    return passed, body


def cmd_probe(cfg, args):
    target = cfg.get("target", "damek-ricci")
    rng = make_rng(args.seed)
    degree = int(cfg.get("degree", 2))
    nval = int(cfg.get("validation", 200))
    workers = _opt(args, "workers", 1)
    rho_tol = float(cfg.get("rho_tol", probe.RHO_TOL))
    defect_tol = float(cfg.get("defect_tol", probe.DEFECT_TOL))
    svd_tol = _opt(args, "tol", probe.SVD_TOL)
    body = {"target": target}
    if target == "damek-ricci":
        space = _space(cfg)
        ansatz = probe.AnsatzSpec.for_space(space, degree, tuple(cfg.get("j_range", (-2, 2))))
        count = _opt(args, "samples", int(cfg.get("samples", 400)))
        samples = probe.sample_space(rng, space, count)
        extra = probe.sample_space(rng, space, count)
        val = probe.sample_space(rng, space, nval)
        report = probe.probe_rigidity(space.metric_at, ansatz, samples, val, rho_tol, defect_tol,
                                      svd_tol, extra, frame=space.frame_at, workers=workers,
                                      space=space)
        expect = cfg.get("expect", "rigid")
        body["k"], body["m"] = space.k, space.m
    elif target == "hyperbolic":
        n = int(cfg.get("n", 2))
        ansatz = probe.AnsatzSpec(n, degree)
        count = _opt(args, "samples", int(cfg.get("samples", 100)))
        metric = spaceforms.halfspace_metric(n)
        samples = probe.sample_halfplane(rng, n, count)
        extra = probe.sample_halfplane(rng, n, count)
        val = probe.sample_halfplane(rng, n, nval)
        report = probe.probe_rigidity(metric, ansatz, samples, val, rho_tol, defect_tol,
                                      svd_tol, extra, workers=workers)
        expect = cfg.get("expect", "non-rigid")
        if report.fields:
            best = max(report.fields, key=lambda f: f.max_rho)
            xi = ansatz.field(best.coeffs).scaled(best.scale)
            params, resid = probe.fit_hyperbolic_params(xi, val, n)
            _, rho = spaceforms.hyperbolic_field(params)
            err = max(abs(conformal_defect(metric, xi, p).rho - rho(p)) for p in val)
            body["control"] = {"max_rho": best.max_rho, "fit_residual": resid,
                               "rho_fit_error": err,
                               "fitted_parameters": [float(x) for x in params.to_vector()]}
    else:
        raise ConfigError(f"unknown probe target {target!r}")
    body["report"] = report.to_json()
    body["expect"] = expect
    passed = report.verdict == expect
    if "control" in body:
        passed = passed and body["control"]["max_rho"] > 0.1 and body["control"]["rho_fit_error"] < 1e-4
    return passed, body


COMMANDS = {
    "verify-algebra": cmd_verify_algebra,
    "verify-tables": cmd_verify_tables,
    "check-einstein": cmd_check_einstein,
    "spaceform": cmd_spaceform,
    "confsys-residuals": cmd_confsys_residuals,
    "coeffsys": cmd_coeffsys,
    "probe": cmd_probe,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drconformal", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, help="override the pass tolerance")
        p.add_argument("--samples", type=int, help="number of sample points")
        p.add_argument("--workers", type=int, help="threads for row assembly (probe)")
        p.add_argument("--out", type=Path, help="write the report here instead of stdout")
    return parser


def load_config(path):
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def config_hash(cfg, args) -> str:
    effective = {"config": cfg, "seed": args.seed, "tol": args.tol, "samples": args.samples}
    return hashlib.sha256(json.dumps(effective, sort_keys=True).encode()).hexdigest()


def run(argv=None):
    """Run the CLI and return ``(exit_code, report_dict)``."""
    args = build_parser().parse_args(argv)
    report = {"tool": "drconformal", "version": __version__, "command": args.command,
              "seed": args.seed}
    try:
        if args.tol is not None and args.tol < 0:
            raise ConfigError("--tol must be non-negative")
        if args.samples is not None and args.samples <= 0:
            raise ConfigError("--samples must be positive")
        if args.workers is not None and args.workers <= 0:
            raise ConfigError("--workers must be positive")
        cfg = load_config(args.config)
        report["config_sha256"] = config_hash(cfg, args)
        passed, body = COMMANDS[args.command](cfg, args)
        report.update(body)
        report["passed"] = bool(passed)
        code = EXIT_PASS if passed else EXIT_FAIL
    except GeometryError as exc:
        report.update(passed=False, reason=type(exc).__name__, message=str(exc))
        code = EXIT_FAIL
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        reason = "ConfigError" if isinstance(exc, (ConfigError, KeyError)) else type(exc).__name__
        report.update(passed=False, reason=reason, message=str(exc))
        code = EXIT_USAGE
    return code, report


def main(argv=None) -> int:
    code, report = run(argv)
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    args = build_parser().parse_args(argv)
    if args.out is not None:
        args.out.write_text(text)
        print(f"{report['command']}: {'PASS' if report['passed'] else 'FAIL'} -> {args.out}")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
