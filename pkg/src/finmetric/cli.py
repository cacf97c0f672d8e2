"""Command-line entry point: ``finmetric VERB [options]``.

The report goes to stdout as JSON (sorted keys) or CSV; progress and errors
go to stderr.  Exit codes: 0 pass/success, 1 fail or counterexample,
2 indeterminate, 3 usage or I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .betweenness import betweenness_exponent, ext_to_json
from .core import (
    FiniteMetricSpace,
    InfeasibleError,
    MetricError,
    MetricValidationError,
    ToleranceConfig,
    is_ultrametric,
    validate_metric,
)
from .coverpack import (
    SolverLimits,
    covering_number,
    entropy_profile,
    min_maximal_packing,
    packing_number,
    profile_to_csv,
)
from .formats import (
    dumps,
    load_file,
    parse_points_file,
    product_to_json,
    read_matrix,
    space_to_json,
)
from .products import ProductSpace, product_custom, product_p
from .verify import (
    GeneratorConfig,
    check_chain_suite,
    check_product_multiplicativity,
    check_theorem_1_6,
    check_theorem_2_8,
    gen_random_metric,
    witness_non_ultrametric,
)

log = logging.getLogger("finmetric")

EXIT_OK, EXIT_FAIL, EXIT_INDETERMINATE, EXIT_USAGE = 0, 1, 2, 3

SUITES = ("thm1.6", "thm2.8", "thm3.1", "lemma3.2", "eq1.1", "prop3.4", "cor3.8", "remark3.10")
PRODUCT_MODES = {"thm3.1": "packing", "prop3.4": "prop34", "cor3.8": "cor38", "remark3.10": "remark310"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tol", type=float, default=1e-9, help="relative tolerance")
    p.add_argument("--root-tol", type=float, default=1e-12, help="root-finding tolerance")
    p.add_argument("--limit-nodes", type=int, default=10_000_000)
    p.add_argument("--time-budget", type=int, default=30, help="seconds per solver call")
    p.add_argument("--output", choices=("json", "csv"), default="json")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _input_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("file")
    p.add_argument("--format", choices=("json", "csv"), help="default: by file extension")
    p.add_argument("--points", action="store_true", help="FILE is a CSV point cloud")
    p.add_argument("--metric", choices=("euclidean", "manhattan", "chebyshev"), default="euclidean")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="finmetric", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)
    common = _common()

    p = sub.add_parser("validate", parents=[common], help="check the metric axioms")
    p.add_argument("file")
    p.add_argument("--format", choices=("json", "csv"))

    p = sub.add_parser("ultra", parents=[common], help="ultrametricity with witness")
    _input_args(p)
    p.add_argument("--subset")

    p = sub.add_parser("t0", parents=[common], help="betweenness exponent")
    _input_args(p)

    for verb in ("cover", "pack"):
        p = sub.add_parser(verb, parents=[common], help=f"exact {verb}ing number")
        _input_args(p)
        p.add_argument("--eps", type=float, required=True)
        p.add_argument("--subset", help="comma-separated indices of W (default: all)")
        if verb == "cover":
            p.add_argument("--ambient", help="comma-separated indices of the center set")
            p.add_argument("--ambient-file", help="file listing indices of the center set")
        else:
            p.add_argument("--maximal", action="store_true",
                           help="smallest maximal distinguishable set instead")

    p = sub.add_parser("profile", parents=[common], help="counts across the eps grid")
    _input_args(p)
    p.add_argument("--subset")
    p.add_argument("--ambient")
    p.add_argument("--ambient-file")

    p = sub.add_parser("product", parents=[common], help="build a product space")
    p.add_argument("--x", required=True, help="first factor file")
    p.add_argument("--y", required=True, help="second factor file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--p", help="l_p exponent in [1, inf]")
    group.add_argument("--matrix-file", help="explicit product matrix (space JSON or CSV)")

    p = sub.add_parser("check", parents=[common], help="run a theorem suite")
    p.add_argument("suite", choices=SUITES)
    p.add_argument("file")
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--budget", type=int, default=4096, help="subset budget")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("witness", parents=[common], help="non-ultrametricity witness")
    _input_args(p)

    p = sub.add_parser("gen", parents=[common], help="generate a random space")
    p.add_argument("--mode", choices=("euclidean", "range12", "dendrogram"), default="euclidean")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=2)
    return parser


def _indices(text: str | None) -> list[int] | None:
    if text is None:
        return None
    try:
        return [int(t) for t in text.replace("\n", ",").replace(" ", ",").split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad index list: {text!r}") from None


def _ambient(args) -> list[int] | None:
    if getattr(args, "ambient_file", None):
        return _indices(Path(args.ambient_file).read_text())
    return _indices(getattr(args, "ambient", None))


def _space(args, tol: ToleranceConfig) -> FiniteMetricSpace:
    if getattr(args, "points", False):
        return parse_points_file(args.file, args.metric)
    obj = load_file(args.file, args.format, tol)
    if isinstance(obj, ProductSpace):
        return obj.product
    return obj


def _emit(obj) -> None:
    sys.stdout.write(dumps(obj) + "\n")


def execute(args) -> int:
    tol = ToleranceConfig(args.tol, args.root_tol)
    limits = SolverLimits(args.limit_nodes, float(args.time_budget))
    verb = args.verb

    if verb == "validate":
        matrix, _ = read_matrix(args.file, args.format)
        report = validate_metric(matrix, tol)
        _emit(report.to_dict())
        return EXIT_OK if report.ok else EXIT_FAIL

    if verb == "gen":
        space = gen_random_metric(GeneratorConfig(args.n, args.seed, args.mode, args.dim))
        _emit(space_to_json(space))
        return EXIT_OK

    if verb == "product":
        x = _load_space(args.x, tol)
        y = _load_space(args.y, tol)
        if args.p is not None:
            P = product_p(x, y, float(args.p), tol)
        else:
            matrix, _ = read_matrix(args.matrix_file)
            P = product_custom(x, y, matrix, tol)
        _emit(product_to_json(P))
        return EXIT_OK

    if verb == "check":
        return _check(args, tol, limits)

    space = _space(args, tol)
    if verb == "ultra":
        report = is_ultrametric(space, _indices(args.subset))
        _emit(report.to_dict())
        return EXIT_OK if report.verdict else EXIT_FAIL
    if verb == "t0":
        _emit(ext_to_json(betweenness_exponent(space, tol)))
        return EXIT_OK
    if verb == "cover":
        w = _indices(args.subset)
        try:
            res = covering_number(space, w, _ambient(args) if _ambient(args) is not None else w,
                                  args.eps, limits)
        except InfeasibleError as exc:
            _emit({"error": "infeasible", "orphan": exc.orphan, "message": str(exc)})
            return EXIT_FAIL
        _emit(res.to_dict())
        return EXIT_OK if res.optimal else EXIT_INDETERMINATE
    if verb == "pack":
        solver = min_maximal_packing if args.maximal else packing_number
        res = solver(space, _indices(args.subset), args.eps, limits)
        _emit(res.to_dict())
        return EXIT_OK if res.optimal else EXIT_INDETERMINATE
    if verb == "profile":
        records = entropy_profile(space, _indices(args.subset), limits, _ambient(args), tol)
        if args.output == "csv":
            sys.stdout.write(profile_to_csv(records))
        else:
            _emit([r.to_dict() for r in records])
        return EXIT_OK if all(r.optimal for r in records) else EXIT_INDETERMINATE
    if verb == "witness":
        _emit(witness_non_ultrametric(space, limits).to_dict())
        return EXIT_OK
    raise UsageError(f"unknown verb {verb!r}")


def _load_space(path: str, tol: ToleranceConfig) -> FiniteMetricSpace:
    obj = load_file(path, None, tol)
    if isinstance(obj, ProductSpace):
        raise UsageError(f"{path} holds a product, expected a space")
    return obj


def _check(args, tol: ToleranceConfig, limits: SolverLimits) -> int:
    obj = load_file(args.file, args.format, tol)
    suite = args.suite
    if suite in ("thm1.6", "eq1.1") or (suite == "lemma3.2" and isinstance(obj, FiniteMetricSpace)):
        space = obj.product if isinstance(obj, ProductSpace) else obj
        log.info("running %s on %d points", suite, space.n)
        if suite == "thm1.6":
            report = check_theorem_1_6(space, args.budget, limits, args.seed, tol)
        else:
            which = "classical" if suite == "eq1.1" else "refined"
            report = check_chain_suite(space, which, args.budget, limits, args.seed, tol)
        _emit(report.to_dict())
        return report.exit_code

    if not isinstance(obj, ProductSpace):
        raise UsageError(f"suite {suite} needs a product file")
    if suite == "thm2.8":
        report = check_theorem_2_8(obj, tol)
        _emit(report.to_dict())
        return report.exit_code
    modes = ("packing", "covering", "equality") if suite == "lemma3.2" else (PRODUCT_MODES[suite],)
    reports = [check_product_multiplicativity(obj, m, args.budget, limits, args.seed, tol) for m in modes]
    if len(reports) == 1:
        _emit(reports[0].to_dict())
        return reports[0].exit_code
    _emit({"suite": suite, "reports": [r.to_dict() for r in reports]})
    return max(r.exit_code for r in reports)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        return execute(args)
    except MetricValidationError as exc:
        _emit({"error": "validation", "message": str(exc), "report": exc.report.to_dict()})
        return EXIT_USAGE
    except (MetricError, UsageError, OSError) as exc:
        print(f"finmetric: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
