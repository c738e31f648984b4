"""Command-line front end.

Usage:
    opmeans mean geometric:0.5 A.json B.json -o M.json
    opmeans distance sigma:# A.json B.json
    opmeans barycenter hellinger --measure dirac:0.5 ensemble.json -o X.json
    opmeans generate --dim 3 --count 4 --condition 100 --seed 1 -o ensemble.json
    opmeans verify ka-axioms --seed 1
    opmeans plotdata rtm-geodesic ensemble.json -o curve.csv

Exit codes: 0 ok, 1 verify failed, 2 parse error, 3 domain error,
4 solver did not converge (outputs are still written).
"""

import argparse
import csv
import io
import json
import logging
import sys
from typing import Optional

import numpy as np

from opmeans.barycenters import SolverConfig, WeightedEnsemble, perturbation_check, solve
from opmeans.config import (
    EXIT_DOMAIN_ERROR,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_PARSE_ERROR,
    EXIT_VERIFY_FAILED,
    INIT_KINDS,
    KIND_BW,
    KIND_HELLINGER,
    KIND_RTM,
    KIND_SIGMA,
    SOLVER_DEFAULTS_PATH,
    TOOL_VERSION,
)
from opmeans.divergences import (
    SigmaPotential,
    bw_interpolant,
    d_bw,
    d_rtm,
    phi_mu,
    phi_sigma,
    rtm_geodesic,
)
from opmeans.errors import OperatorMeansError, ParseError, VerificationFailure
from opmeans.formats import (
    dumps,
    ensemble_to_json,
    matrix_to_json,
    parse_mean_spec,
    parse_measure_spec,
    read_ensemble,
    read_matrix,
    write_json,
)
from opmeans.hermitian import SpdMatrix, as_spd, random_spd
from opmeans.kubo_ando import mean
from opmeans.manifest import (
    RunManifest,
    load_solver_defaults,
    resolve_solver_settings,
    write_manifest,
)
from opmeans.verify import SUITES, run_suite

log = logging.getLogger(__name__)

_KIND_ALIASES = {"karcher": KIND_RTM, "rtm": KIND_RTM, "bw": KIND_BW,
                 KIND_HELLINGER: KIND_HELLINGER, KIND_SIGMA: KIND_SIGMA}
_SOLVER_KEYS = ("tol", "max_iter", "damping", "damping_floor", "init", "cross_check")
_CURVE_KINDS = ("rtm-geodesic", "bw-interpolant")


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _format_value(value: float) -> str:
    if value == float("inf"):
        return "+inf"
    return f"{value:.12g}"


def _split_kind(text: str, measure: Optional[str] = None, mean_spec: Optional[str] = None):
    """"hellinger:dirac:0.5" -> ("hellinger", measure); "sigma:#" -> ("sigma", descriptor)."""
    name, _, param = text.partition(":")
    if name not in _KIND_ALIASES:
        raise ParseError(f"Unknown kind {text!r}; expected rtm, bw, hellinger[:measure] or sigma:<mean>")
    kind = _KIND_ALIASES[name]
    if kind == KIND_HELLINGER:
        spec = param or measure
        if not spec:
            raise ParseError("hellinger needs a measure: hellinger:<measure> or --measure")
        return kind, parse_measure_spec(spec)
    if kind == KIND_SIGMA:
        spec = param or mean_spec
        if not spec:
            raise ParseError("sigma needs a mean: sigma:<mean> or --mean")
        return kind, parse_mean_spec(spec)
    if param:
        raise ParseError(f"{name} takes no parameter, got {text!r}")
    return kind, None


def _solver_config(args: argparse.Namespace, kind: str) -> tuple[SolverConfig, dict]:
    if args.config:
        defaults = load_solver_defaults(args.config)
    else:
        try:
            defaults = load_solver_defaults(SOLVER_DEFAULTS_PATH)
        except FileNotFoundError:
            defaults = {}
    overrides = {key: getattr(args, key, None) for key in _SOLVER_KEYS}
    settings = resolve_solver_settings(defaults, kind, overrides)
    settings = {key: settings[key] for key in _SOLVER_KEYS if key in settings}
    init = str(settings.get("init", SolverConfig.init))
    if init not in INIT_KINDS:
        # anything else names a starting matrix
        init = as_spd(read_matrix(init))
    try:
        cfg = SolverConfig(
            tol=float(settings.get("tol", SolverConfig.tol)),
            max_iter=int(settings.get("max_iter", SolverConfig.max_iter)),
            damping=float(settings.get("damping", SolverConfig.damping)),
            damping_floor=float(settings.get("damping_floor", SolverConfig.damping_floor)),
            init=init,
            cross_check=bool(settings.get("cross_check", False)),
        )
    except (TypeError, ValueError) as err:
        raise ParseError(f"Invalid solver settings: {err}") from err
    return cfg, settings


def _emit(out: Optional[str], text: str, manifest: RunManifest) -> None:
    if out:
        with open(out, "w", newline="") as f:
            f.write(text)
        write_manifest(out, manifest)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_mean(args: argparse.Namespace) -> int:
    sigma = parse_mean_spec(args.sigma)
    A, B = as_spd(read_matrix(args.a)), as_spd(read_matrix(args.b))
    result = mean(sigma, A, B)
    manifest = RunManifest(command="mean", inputs=[args.a, args.b], config={"mean": args.sigma})
    _emit(args.out, dumps(matrix_to_json(result)), manifest)
    return EXIT_OK


def cmd_distance(args: argparse.Namespace) -> int:
    kind, params = _split_kind(args.kind, args.measure, args.mean)
    A, B = as_spd(read_matrix(args.a)), as_spd(read_matrix(args.b))
    if kind == KIND_RTM:
        value = d_rtm(A, B)
    elif kind == KIND_BW:
        value = d_bw(A, B)
    elif kind == KIND_HELLINGER:
        value = phi_mu(params, A, B)
    else:
        value = phi_sigma(SigmaPotential(params), A, B)
    print(_format_value(value))
    return EXIT_OK


def cmd_barycenter(args: argparse.Namespace) -> int:
    kind, params = _split_kind(args.kind, args.measure, args.mean)
    E = read_ensemble(args.ensemble)
    cfg, settings = _solver_config(args, kind)
    X, report = solve(kind, params, E, cfg)
    if args.certify:
        check = perturbation_check(kind, params, E, X, seed=args.seed)
        report.perturbation = {"passed": check.passed, "min_gap": check.min_gap}

    config = {"kind": args.kind, **settings}
    if args.measure:
        config["measure"] = args.measure
    if args.mean:
        config["mean"] = args.mean
    inputs = [args.ensemble]
    if isinstance(cfg.init, SpdMatrix):
        inputs.append(settings["init"])
    manifest = RunManifest(command="barycenter", inputs=inputs, config=config, seed=args.seed)
    _emit(args.out, dumps(matrix_to_json(X)), manifest)

    report_path = args.report or (args.out + ".report.json" if args.out else None)
    if report_path:
        write_json(report_path, report.to_json())

    if not report.converged:
        print(f"not-converged: residual {report.final_residual:.3e} after {report.iterations} iterations",
              file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    if args.dim < 1 or args.count < 1:
        raise ParseError("--dim and --count must be positive")
    children = np.random.SeedSequence(args.seed).spawn(args.count + 1)
    matrices = tuple(
        random_spd(args.dim, args.condition, child, complex_entries=not args.real)
        for child in children[:-1]
    )
    if args.random_weights:
        weights = np.random.default_rng(children[-1]).dirichlet(np.ones(args.count))
    else:
        weights = np.full(args.count, 1.0 / args.count)
    E = WeightedEnsemble(matrices, weights)
    manifest = RunManifest(
        command="generate",
        config={"dim": args.dim, "count": args.count, "condition": args.condition,
                "real": args.real, "random_weights": args.random_weights},
        seed=args.seed,
    )
    _emit(args.out, dumps(ensemble_to_json(E)), manifest)
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    for name in names:
        if name not in SUITES:
            raise ParseError(f"Unknown suite {name!r}; expected one of {', '.join(SUITES)} or all")
        summary = run_suite(name, seed=args.seed, trials=args.trials)
        print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _curve_rows(kind: str, E: WeightedEnsemble, points: int) -> list[tuple]:
    if E.size < 2:
        raise ParseError(f"{kind} needs an ensemble with at least two matrices")
    A, B = E.matrices[0], E.matrices[1]
    rows = []
    for t in np.linspace(0.0, 1.0, points):
        t = float(t)
        if kind == "rtm-geodesic":
            rows.append((t, d_rtm(rtm_geodesic(A, B, t).value, A)))
        else:
            rows.append((t, d_bw(bw_interpolant(A, B, t), A)))
    return rows


def cmd_plotdata(args: argparse.Namespace) -> int:
    E = read_ensemble(args.ensemble)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")

    if args.kind in _CURVE_KINDS:
        writer.writerow(["t", "distance"])
        for t, distance in _curve_rows(args.kind, E, args.points):
            writer.writerow([repr(t), repr(distance)])
        config = {"kind": args.kind, "points": args.points}
    elif args.kind.endswith("-residuals"):
        kind, params = _split_kind(args.kind[: -len("-residuals")], args.measure, args.mean)
        cfg, settings = _solver_config(args, kind)
        _, report = solve(kind, params, E, cfg)
        writer.writerow(["iteration", "residual"])
        for i, residual in enumerate(report.residual_history):
            writer.writerow([i, repr(residual)])
        config = {"kind": args.kind, **settings}
    else:
        raise ParseError(
            f"Unknown plot kind {args.kind!r}; expected rtm-geodesic, bw-interpolant or <kind>-residuals"
        )

    manifest = RunManifest(command="plotdata", inputs=[args.ensemble], config=config)
    _emit(args.out, buffer.getvalue(), manifest)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tol", type=float, help="Relative residual tolerance")
    parser.add_argument("--max-iter", type=int, dest="max_iter", help="Iteration cap")
    parser.add_argument("--damping", type=float, help="Initial damping in (0, 1]")
    parser.add_argument("--init", type=str,
                        help=f"Starting point: one of {', '.join(INIT_KINDS)} or a matrix JSON path")
    parser.add_argument("--cross-check", action="store_const", const=True, dest="cross_check",
                        help="Rerun from a second initialization and report disagreement")
    parser.add_argument("--config", type=str, help="Alternate solver defaults YAML")
    parser.add_argument("--measure", type=str, help="Measure for hellinger (dirac:l, power:p, file.json, ...)")
    parser.add_argument("--mean", type=str, help="Symmetric mean for sigma (e.g. #, heinz:0.25)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opmeans", description="Operator means and matrix barycenters")
    parser.add_argument("--version", action="version", version=f"%(prog)s {TOOL_VERSION}")
    parser.add_argument("--quiet", action="store_true", help="Only log errors")
    parser.add_argument("--verbose", action="store_true", help="Log solver iterations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mean", help="Kubo-Ando mean of two matrices")
    p.add_argument("sigma", help="Mean spec: geometric:0.5, ah-geo:0.25, #, measure:power:0.3, ...")
    p.add_argument("a", help="Matrix JSON")
    p.add_argument("b", help="Matrix JSON")
    p.add_argument("-o", "--out", help="Output matrix JSON (stdout if omitted)")
    p.set_defaults(handler=cmd_mean)

    p = sub.add_parser("distance", help="Distance or divergence between two matrices")
    p.add_argument("kind", help="rtm, bw, hellinger[:measure] or sigma:<mean>")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--measure", type=str)
    p.add_argument("--mean", type=str)
    p.set_defaults(handler=cmd_distance)

    p = sub.add_parser("barycenter", help="Weighted barycenter of an ensemble")
    p.add_argument("kind", help="rtm (karcher), bw, hellinger[:measure] or sigma:<mean>")
    p.add_argument("ensemble", help="Ensemble JSON")
    p.add_argument("-o", "--out", help="Output matrix JSON (stdout if omitted)")
    p.add_argument("--report", help="SolverReport JSON path (default <out>.report.json)")
    p.add_argument("--certify", action="store_true",
                   help="Add a random perturbation check of the result to the report")
    p.add_argument("--seed", type=int, default=0, help="Seed for --certify directions")
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_barycenter)

    p = sub.add_parser("generate", help="Random SPD ensemble")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--condition", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--real", action="store_true", help="Real symmetric matrices")
    p.add_argument("--random-weights", action="store_true", dest="random_weights")
    p.add_argument("-o", "--out")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("verify", help="Run an invariant suite")
    p.add_argument("suite", help=f"One of {', '.join(SUITES)} or all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int)
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("plotdata", help="CSV series for external plotting")
    p.add_argument("kind", help="rtm-geodesic, bw-interpolant or <kind>-residuals")
    p.add_argument("ensemble")
    p.add_argument("-o", "--out")
    p.add_argument("--points", type=int, default=101)
    _add_solver_flags(p)
    p.set_defaults(handler=cmd_plotdata)

    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.ERROR if args.quiet else logging.DEBUG if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_OK if err.code == 0 else EXIT_PARSE_ERROR
    _configure_logging(args)

    try:
        return args.handler(args)
    except VerificationFailure as err:
        print(f"{err.category}: {json.dumps(err.counterexample, sort_keys=True)}", file=sys.stderr)
        return EXIT_VERIFY_FAILED
    except (ParseError, FileNotFoundError, ValueError) as err:
        print(f"{ParseError.category}: {err}", file=sys.stderr)
        return EXIT_PARSE_ERROR
    except OperatorMeansError as err:
        print(f"{err.category}: {err}", file=sys.stderr)
        return EXIT_DOMAIN_ERROR
