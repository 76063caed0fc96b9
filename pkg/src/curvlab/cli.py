"""Command-line front end.

    curvlab analyze CONFIG [--points SPEC] [--tol T] [--seed N] [--lazy-nabla-r] [--pretty]
    curvlab model validate FILE
    curvlab model double FILE [-o OUT]
    curvlab model random --n N [--signature P,Q] [--seed N] [-o OUT]
    curvlab suite [--filter KEYS] [--tol T] [--seed N] [--points N] [--json]

Reports are JSON with sorted keys, so a fixed config and seed give
byte-identical output.
"""
from __future__ import annotations

import argparse
import itertools
import json
import sys
from pathlib import Path

import numpy as np

from . import curvature as C
from . import families as F
from . import linalg, models, videv
from .errors import (
    ConfigError, CurvlabError, DegenerateMetricError, DomainError, EvaluationError,
    ExprSyntaxError, IndeterminateVerdictError, ModelError, NotEinsteinError,
)
from .suite import SuiteConfig, run_suite

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_EVALUATION = 3
EXIT_INDETERMINATE = 4
EXIT_NOT_EINSTEIN = 5

DEFAULT_POINTS = 5


class _Usage(Exception):
    """Bad command-line input that should map to the config exit code."""


def _dump(doc, pretty=False):
    return json.dumps(doc, sort_keys=True, indent=2 if pretty else None, allow_nan=True)


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _write(text, out):
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


# --------------------------------------------------------------------------
# analyze
# --------------------------------------------------------------------------

def parse_points(spec, chart, seed):
    """Points from ``spec``: a JSON list of points, ``sample:N`` or ``grid:LO:HI:N``.

    ``grid`` builds the tensor grid with N values per axis and drops points
    outside the chart's domain.
    """
    spec = spec.strip()
    if spec.startswith("["):
        try:
            pts = [np.asarray(p, dtype=float) for p in json.loads(spec)]
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid point list: {exc}") from None
        return pts
    kind, _, rest = spec.partition(":")
    try:
        if kind == "sample":
            return C.sample_points(chart, int(rest), seed=seed)
        if kind == "grid":
            lo, hi, n = rest.split(":")
            axis = np.linspace(float(lo), float(hi), int(n))
            pts = [np.array(p) for p in itertools.product(axis, repeat=chart.dim)]
            return [p for p in pts if chart.admits(p)]
    except ValueError as exc:
        raise ConfigError(f"invalid point spec {spec!r}: {exc}") from None
    raise ConfigError(f"invalid point spec {spec!r}; use a JSON list, sample:N or grid:LO:HI:N")


def _property_entry(result):
    if isinstance(result, IndeterminateVerdictError):
        return {"verdict": None, "indeterminate": True, "residual": result.residual,
                "tol": result.tol, "fail_threshold": result.fail_threshold}
    return result.to_dict()


def _family_extras(doc, chart, info, cd, tol):
    family = doc["family"]
    extras = {}
    if family == "thm19":
        s = info["s"]
        rho = cd.ricci_op
        extras["rho_squared_plus_s2_residual"] = {
            "value": float(np.max(np.abs(rho @ rho + s * s * np.eye(4)))), "tol": 1e-9}
    elif family == "thm13":
        nb = videv.normalized_basis_thm13(info["phi_expr"], chart.bindings, cd.point)
        extras["normalized_basis"] = {
            "alpha": nb.alpha, "eps1": float(nb.eps1), "delta1": float(nb.delta1),
            "max_relation_error": nb.max_relation_error, "tol": 1e-9}
        extras["alpha_closed_form"] = videv.alpha_invariant(info["phi_expr"], chart.bindings, cd.point[1])
    elif family == "def11":
        harm = F.harmonicity_residual(info["k"], info["l"], info["C"], doc["psi"], cd.point, chart.bindings)
        extras["harmonicity"] = {"max_abs": float(np.max(np.abs(harm))), "matrix": harm.tolist()}
    elif family in ("thm14", "thm14case2"):
        cls = info["classification"]
        extras["classification"] = {"closed": cls.closed, "closed_residual": cls.closed_residual,
                                    "case2": cls.case2}
    return extras


def analyze(doc, points_spec=None, tol=videv.DEFAULT_TOL, seed=0, nabla_r=True,
            rank_tol=linalg.DEFAULT_RANK_TOL):
    """Report document for a family config; returns (report, any_indeterminate)."""
    chart, info = F.chart_from_config(doc)
    if points_spec is not None:
        points = parse_points(points_spec, chart, seed)
    elif doc.get("points"):
        points = [np.asarray(p, dtype=float) for p in doc["points"]]
    else:
        points = C.sample_points(chart, DEFAULT_POINTS, seed=seed)
    entries = []
    indeterminate = False
    for p in points:
        if p.shape != (chart.dim,):
            raise ConfigError(f"point {p.tolist()} does not have {chart.dim} coordinates")
        cd = C.curvature_at(chart, p, nabla_r=nabla_r)
        model = models.Model(cd.g, cd.R_lower)
        results, profile = videv.property_report(model, tol, rank_tol)
        indeterminate |= any(isinstance(r, IndeterminateVerdictError) for r in results.values())
        entry = {
            "point": p.tolist(),
            "scale": cd.scale,
            "signature": list(linalg.signature(cd.g)),
            "invariants": {k: {"residual": v, "tol": 1e-10} for k, v in C.invariant_residuals(cd).items()},
            "properties": {k: _property_entry(v) for k, v in results.items()},
            "ricci_operator": cd.ricci_op.tolist(),
            "ricci_spectrum": profile.to_dict(),
        }
        if cd.nabla_R is not None:
            entry["nabla_R_max"] = {"value": float(np.max(np.abs(cd.nabla_R))), "scale": cd.scale}
        entry.update(_family_extras(doc, chart, info, cd, tol))
        entries.append(entry)
    report = {"family": doc["family"], "chart": chart.name, "dim": chart.dim,
              "params": dict(chart.bindings), "tol": tol, "rank_tol": rank_tol,
              "fail_threshold": videv.FAIL_THRESHOLD, "points": entries}
    return report, indeterminate


def _pretty_analyze(report):
    lines = [f"{report['chart']} (dim {report['dim']}), tol {report['tol']:.1e}"]
    for e in report["points"]:
        lines.append(f"  point {np.round(e['point'], 6).tolist()}  scale {e['scale']:.4g}")
        for name, r in e["properties"].items():
            if r.get("indeterminate"):
                lines.append(f"    {name:16s} INDETERMINATE residual {r['residual']:.3e}")
            else:
                lines.append(f"    {name:16s} {str(r['verdict']):5s} residual {r['residual']:.3e}")
        lines.append(f"    ricci ranks      {e['ricci_spectrum']['ranks']}")
    return "\n".join(lines)


def cmd_analyze(args):
    doc = _read_json(args.config)
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    report, indeterminate = analyze(doc, args.points, args.tol, args.seed, not args.lazy_nabla_r,
                                    args.rank_tol)
    _write(_pretty_analyze(report) if args.pretty else _dump(report), args.output)
    return EXIT_INDETERMINATE if indeterminate else EXIT_OK


# --------------------------------------------------------------------------
# model
# --------------------------------------------------------------------------

def _load_model(path):
    try:
        return models.Model.from_dict(_read_json(path))
    except ModelError as exc:
        raise ConfigError(f"invalid model file {path}: {exc}") from None


def cmd_model(args):
    if args.action == "random":
        sig = None
        if args.signature:
            try:
                p, q = (int(v) for v in args.signature.split(","))
            except ValueError:
                raise _Usage("--signature must look like P,Q") from None
            sig = (p, q)
        try:
            model = models.random_model(args.seed, args.n, sig)
        except ValueError as exc:
            raise _Usage(str(exc)) from None
        _write(_dump(model.to_dict(), args.pretty), args.output)
        return EXIT_OK
    model = _load_model(args.file)
    if args.action == "validate":
        residuals = models.validate(model.A, args.tol)
        violations = [{"name": r.name, "residual": r.residual, "witness": list(r.witness), "tol": r.tol}
                      for r in residuals if not r.ok]
        report = {"valid": not violations, "violations": violations, "scale": model.scale,
                  "residuals": {r.name: r.residual for r in residuals}, "tol": args.tol}
        _write(_dump(report, args.pretty), None)
        return EXIT_OK if not violations else EXIT_FAILURE
    # double
    doubled = models.double_model(model)
    s = models.einstein_constant(model)
    rho = doubled.ricci_op()
    n2 = doubled.n
    residual = float(np.max(np.abs(rho @ rho + 4 * s * s * np.eye(n2))))
    report = {"einstein_constant": s, "n": n2, "signature": list(doubled.signature),
              "rho1_sq_plus_4s2_residual": residual, "tol": 1e-9 * (1 + 4 * s * s),
              "scale": doubled.scale}
    if args.output:
        _write(_dump(doubled.to_dict(), args.pretty), args.output)
    else:
        report["model"] = doubled.to_dict()
    sys.stdout.write(_dump(report, args.pretty) + "\n")
    return EXIT_OK


# --------------------------------------------------------------------------
# suite
# --------------------------------------------------------------------------

def _print_row(res):
    status = "PASS" if res.passed else "FAIL"
    print(f"{status}  {res.number}  {res.key:7s} {res.seconds:7.2f}s  {res.title}", flush=True)
    for c in res.checks:
        if not c.passed:
            print(f"        failed: {c.name} (value {c.value:.3e}, bound {c.bound:.1e}) {c.detail}", flush=True)


def cmd_suite(args):
    cfg = SuiteConfig(tol=args.tol, seed=args.seed, points=args.points or 10)
    results = run_suite(cfg, args.filter, None if args.json else _print_row)
    if not results:
        raise _Usage(f"--filter {args.filter!r} selects no criteria")
    if args.json:
        print(_dump([r.to_dict() for r in results], args.pretty))
    failed = [r for r in results if not r.passed]
    if failed:
        names = ", ".join(f"{r.number} ({r.key})" for r in failed)
        print(f"{len(failed)} of {len(results)} criteria failed: {names}", file=sys.stderr)
        return EXIT_FAILURE
    print(f"all {len(results)} criteria passed", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="curvlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common_parent(tol_default=videv.DEFAULT_TOL):
        # a fresh parent per subcommand: argparse shares parent actions, defaults included
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--tol", type=float, default=tol_default, help="pass tolerance for residuals")
        common.add_argument("--seed", type=int, default=0)
        common.add_argument("--pretty", action="store_true", help="indented or human-readable output")
        return common

    a = sub.add_parser("analyze", parents=[common_parent()], help="curvature and property report for a family config")
    a.add_argument("config")
    a.add_argument("--points", help="JSON list, sample:N or grid:LO:HI:N (default: config points or sample:5)")
    a.add_argument("--rank-tol", type=float, default=linalg.DEFAULT_RANK_TOL,
                   help="relative singular-value threshold for ranks of powers of rho")
    a.add_argument("--lazy-nabla-r", action="store_true", help="skip the covariant derivative of R")
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_analyze)

    m = sub.add_parser("model", help="algebraic curvature model utilities")
    msub = m.add_subparsers(dest="action", required=True)
    v = msub.add_parser("validate", parents=[common_parent(models.MODEL_TOL)])
    v.add_argument("file")
    d = msub.add_parser("double", parents=[common_parent()])
    d.add_argument("file")
    d.add_argument("-o", "--output")
    r = msub.add_parser("random", parents=[common_parent()])
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--signature", help="P,Q numbers of negative and positive directions")
    r.add_argument("-o", "--output")
    m.set_defaults(func=cmd_model)

    s = sub.add_parser("suite", parents=[common_parent()], help="run the acceptance criteria")
    s.add_argument("--filter", help="comma-separated criterion keys or numbers, e.g. thm14")
    s.add_argument("--points", type=int, help="sample points per chart (default 10)")
    s.add_argument("--json", action="store_true", help="emit results as JSON")
    s.set_defaults(func=cmd_suite)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ExprSyntaxError, _Usage) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotEinsteinError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_EINSTEIN
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IndeterminateVerdictError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INDETERMINATE
    except (EvaluationError, DomainError, DegenerateMetricError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION
    except CurvlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVALUATION


if __name__ == "__main__":
    sys.exit(main())
