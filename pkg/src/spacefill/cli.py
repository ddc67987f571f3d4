"""Command-line front end.

Exit status is 0 on success, 1 on domain errors (a one-line JSON object
``{"error": code, "message": text}`` goes to stderr) and 2 on usage errors.
"""

import argparse
import json
import os
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .criteria import CriterionSpec, Kind, evaluate
from .design import halton_sequence, random_latin_hypercube, realize
from .errors import InvalidArgumentError, PreconditionError, SpaceFillError
from .gp import GAUSSIAN, MATERN32, FitConfig, GPModel, fit, predict_mean
from .io import read_design_csv, read_matrix_csv, write_design_csv, write_levels_csv, write_matrix_csv
from .oa import oa_based_lhd, olh_factor_bound, parse_oa, verify_strength
from .optimize import SIMULATED_ANNEALING, THRESHOLD_ACCEPTING, AnnealSchedule, multi_restart
from .testbed import METHODS, SIMULATORS, BenchmarkConfig, MethodOptions, eval_simulator, run_benchmark


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        sys.exit(2)


def _int_list(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _add_criterion_flags(p, required=True):
    p.add_argument("--criterion", required=required, choices=[k.value for k in Kind])
    p.add_argument("--q", type=float, default=2.0, help="distance order (default 2)")
    p.add_argument("--p", type=float, default=None, help="phi_p exponent (default depends on n)")
    p.add_argument("--lam", type=float, default=1.0, help="ARD exponent lambda")
    p.add_argument("--J", type=_int_list, default=(1, 2), help="ARD projection orders, e.g. 1,2")
    p.add_argument("--s-levels", type=int, default=None, help="levels used to bin designs for CD/UP")
    p.add_argument("--method", default=None, help="estimator for fill/star discrepancy")
    p.add_argument("--budget", type=int, default=10000, help="Monte-Carlo budget")


def _criterion(args):
    return CriterionSpec(Kind(args.criterion), q=args.q, p=args.p, lam=args.lam, J=args.J,
                         s_levels=args.s_levels, method=args.method, budget=args.budget, seed=args.seed)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--out", default=None, help="output path (default stdout)")

    parser = _Parser(prog="spacefill", description="Space-filling designs and kriging benchmarks.")
    parser.add_argument("--version", action="version", version=f"spacefill {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="random Latin hypercube or Halton design")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--kind", choices=("lhd", "midpoint-lhd", "halton"), default="lhd")
    p.add_argument("--levels", action="store_true", help="write integer levels instead of coordinates")

    p = sub.add_parser("optimize", parents=[common], help="optimise a Latin hypercube")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    _add_criterion_flags(p)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--moves", type=int, default=5000, help="move budget per restart")
    p.add_argument("--mode", choices=(SIMULATED_ANNEALING, THRESHOLD_ACCEPTING), default=SIMULATED_ANNEALING)
    p.add_argument("--t0", type=float, default=None, help="initial temperature")
    p.add_argument("--cooling", type=float, default=0.95)
    p.add_argument("--moves-per-temperature", type=int, default=None)
    p.add_argument("--jitter", action="store_true", help="jittered instead of midpoint coordinates")
    p.add_argument("--trace", default=None, help="write the best restart's trace CSV here")

    p = sub.add_parser("evaluate", parents=[common], help="evaluate a criterion on a design CSV")
    p.add_argument("--in", dest="input", required=True)
    _add_criterion_flags(p)

    p = sub.add_parser("oa-lhd", parents=[common], help="OA-based Latin hypercube")
    p.add_argument("--oa", required=True, help="orthogonal array file")
    p.add_argument("--midpoint", action="store_true")

    p = sub.add_parser("verify-oa", parents=[common], help="check the strength of an orthogonal array")
    p.add_argument("--oa", required=True)
    p.add_argument("--t", type=int, default=None, help="strength to check (default: declared)")

    p = sub.add_parser("gp-fit", parents=[common], help="fit an ordinary kriging model")
    p.add_argument("--in", dest="input", required=True, help="design CSV")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--y", help="one-column response CSV")
    src.add_argument("--simulator", choices=sorted(SIMULATORS))
    p.add_argument("--kernel", choices=(MATERN32, GAUSSIAN), default=MATERN32)
    p.add_argument("--nugget", type=float, default=None, help="fix eta (0 interpolates)")
    p.add_argument("--multistart", type=int, default=5)

    p = sub.add_parser("predict", parents=[common], help="predict with a fitted model")
    p.add_argument("--model", required=True, help="model JSON from gp-fit")
    p.add_argument("--in", dest="input", required=True, help="points CSV")

    p = sub.add_parser("benchmark", parents=[common], help="replicate design/fit/RMSPE benchmark")
    p.add_argument("--simulator", required=True, choices=sorted(SIMULATORS))
    p.add_argument("--methods", type=_str_list, default=("random-lhd", "maximin-lhd", "maxpro-lhd", "up-lhd"),
                   help=f"comma-separated subset of {','.join(METHODS)}")
    p.add_argument("--n", type=_int_list, required=True, help="run sizes, e.g. 50,100")
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--test-size", type=int, default=2000)
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--moves", type=int, default=5000)
    p.add_argument("--kernel", choices=(MATERN32, GAUSSIAN), default=MATERN32)
    p.add_argument("--nugget", type=float, default=None)
    p.add_argument("--oa-files", type=_str_list, default=())
    p.add_argument("--times", default=None, help="write the per-method design time table CSV here")
    p.add_argument("--no-timings", action="store_true", help="omit wall times from the JSON report")

    p = sub.add_parser("bounds", parents=[common], help="lower bound on orthogonal LHD factors")
    p.add_argument("--n", type=int, required=True)
    return parser


def _metadata(args, argv):
    return {"tool_version": __version__, "command": "spacefill " + shlex.join(argv), "seed": args.seed}


def _emit_text(args, text):
    if args.out:
        Path(args.out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _emit_matrix(args, M, meta, levels=False):
    if args.format == "json":
        _emit_text(args, json.dumps({"metadata": meta, "data": np.asarray(M).tolist()}))
    elif args.out:
        (write_levels_csv if levels else write_design_csv)(args.out, M, meta)
    else:
        write_matrix_csv(sys.stdout, M, prefix="l" if levels else "x", integer=levels, metadata=meta)


def _emit_json(args, obj, meta):
    _emit_text(args, json.dumps({"metadata": meta, **obj}, indent=2))


def _cmd_generate(args, meta):
    if args.kind == "halton":
        if args.levels:
            raise InvalidArgumentError("a Halton design has no Latin hypercube levels")
        return _emit_matrix(args, halton_sequence(args.n, args.d), meta)
    lh = random_latin_hypercube(args.n, args.d, args.seed, midpoint=args.kind == "midpoint-lhd")
    _emit_matrix(args, lh.levels if args.levels else realize(lh), meta, levels=args.levels)


def _cmd_optimize(args, meta):
    spec = _criterion(args)
    schedule = AnnealSchedule(initial_temperature=args.t0, cooling_factor=args.cooling,
                              moves_per_temperature=args.moves_per_temperature,
                              max_total_moves=args.moves, mode=args.mode)
    result = multi_restart(args.n, args.d, spec, args.restarts, schedule, args.seed,
                           midpoint=not args.jitter, threads=args.threads)
    meta.update(criterion=spec.to_dict(), best_value=result.best_value,
                restart_values=list(result.restart_values), schedule=schedule.to_dict())
    if args.trace:
        result.write_trace_csv(args.trace)
    if args.format == "json":
        return _emit_json(args, result.to_dict(), meta)
    _emit_matrix(args, realize(result.best_design), meta)


def _cmd_evaluate(args, meta):
    spec = _criterion(args)
    value = evaluate(read_design_csv(args.input), spec)
    if args.format == "json":
        return _emit_json(args, {"criterion": spec.to_dict(), "value": value}, meta)
    _emit_text(args, repr(float(value)))


def _read_oa(path):
    return parse_oa(Path(path).read_text())


def _cmd_oa_lhd(args, meta):
    oa = _read_oa(args.oa)
    if not verify_strength(oa):
        raise PreconditionError(f"{args.oa} does not have its declared strength {oa.t}")
    meta["source_oa"] = {"path": str(args.oa), "n": oa.n, "d": oa.d, "s": oa.s, "t": oa.t}
    _emit_matrix(args, realize(oa_based_lhd(oa, args.seed, midpoint=args.midpoint)), meta)


def _cmd_verify_oa(args, meta):
    oa = _read_oa(args.oa)
    t = oa.t if args.t is None else args.t
    ok = bool(verify_strength(oa, t))
    _emit_json(args, {"n": oa.n, "d": oa.d, "s": oa.s, "t": t, "verified": ok}, meta)
    return 0 if ok else 1


def _cmd_gp_fit(args, meta):
    X = read_design_csv(args.input)
    if args.simulator:
        y = eval_simulator(args.simulator, X)
    else:
        y = read_matrix_csv(args.y)
        if y.ndim != 2 or y.shape[1] != 1:
            raise InvalidArgumentError("response CSV must have exactly one column")
        y = y[:, 0]
    config = FitConfig(fixed_eta=args.nugget, multistart_count=args.multistart, seed=args.seed)
    model = fit(X, y, args.kernel, config)
    _emit_json(args, {"model": model.to_dict(), "fit_config": config.to_dict()}, meta)


def _cmd_predict(args, meta):
    data = json.loads(Path(args.model).read_text())
    model = GPModel.from_dict(data.get("model", data))
    pred = np.atleast_1d(predict_mean(model, read_matrix_csv(args.input)))
    if args.format == "json":
        return _emit_json(args, {"predictions": pred.tolist()}, meta)
    _emit_text(args, "\n".join(["y", *(f"{v:.17g}" for v in pred)]))


def _cmd_benchmark(args, meta):
    config = BenchmarkConfig(
        simulator=args.simulator, methods=args.methods, run_sizes=args.n, replicates=args.replicates,
        test_set_size=args.test_size, seed=args.seed, kernel=args.kernel,
        gp=FitConfig(fixed_eta=args.nugget),
        design=MethodOptions(restarts=args.restarts, max_total_moves=args.moves, oa_files=args.oa_files),
        threads=args.threads)
    report = run_benchmark(config)
    report.metadata.update(meta)
    if args.times:
        report.write_time_table(args.times)
    _emit_text(args, report.to_json(timings=not args.no_timings))


def _cmd_bounds(args, meta):
    _emit_text(args, json.dumps({**olh_factor_bound(args.n).to_dict(), "metadata": meta}))


COMMANDS = {
    "generate": _cmd_generate,
    "optimize": _cmd_optimize,
    "evaluate": _cmd_evaluate,
    "oa-lhd": _cmd_oa_lhd,
    "verify-oa": _cmd_verify_oa,
    "gp-fit": _cmd_gp_fit,
    "predict": _cmd_predict,
    "benchmark": _cmd_benchmark,
    "bounds": _cmd_bounds,
}


def _fail(code, message):
    print(json.dumps({"error": code, "message": message}), file=sys.stderr)
    return 1


def run(argv=None):
    """Parse ``argv`` and run one command; returns the exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        status = COMMANDS[args.command](args, _metadata(args, argv))
    except SpaceFillError as exc:
        return _fail(getattr(exc, "code", "error"), str(exc))
    except OSError as exc:
        return _fail("io-error", f"{exc.strerror or exc}: {exc.filename}" if exc.filename else str(exc))
    except json.JSONDecodeError as exc:
        return _fail("parse-error", f"invalid JSON: {exc}")
    return status or 0


def main():
    sys.exit(run())
