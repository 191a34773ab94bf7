"""Command line interface

    onlinepdhg solve problem.mps [--mode pdlp] [--online-lr 1e-2] [--trace trace.csv]
    onlinepdhg bench --manifest runs.toml --out report/

Exit codes: 0 optimal or report complete, 2 iteration or time limit,
3 input error, 4 numerical error.
"""
import argparse
import logging
import sys
from typing import List, Optional

from onlinepdhg import __version__
from onlinepdhg.benchmark.suite import load_manifest, run_suite
from onlinepdhg.dataset.mps import MPSFormatError
from onlinepdhg.dataset.standard_form import read_lp, recover_solution
from onlinepdhg.preconditioning.online import DualLossAnchor, OnlineConfig, Scheduler
from onlinepdhg.preconditioning.static import StaticPreconditioning
from onlinepdhg.solver.config import (
    DEFAULT_ITERATION_LIMIT,
    DEFAULT_TIME_LIMIT,
    DEFAULT_TOLERANCE,
    Mode,
    SolveConfig,
    TerminationStatus,
)
from onlinepdhg.solver.solve import solve

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_LIMIT = 2
EXIT_INPUT_ERROR = 3
EXIT_NUMERICAL_ERROR = 4

STATUS_EXIT_CODES = {
    TerminationStatus.OPTIMAL: EXIT_OK,
    TerminationStatus.ITERATION_LIMIT: EXIT_LIMIT,
    TerminationStatus.TIME_LIMIT: EXIT_LIMIT,
    TerminationStatus.NUMERICAL_ERROR: EXIT_NUMERICAL_ERROR,
    TerminationStatus.LOAD_ERROR: EXIT_INPUT_ERROR,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onlinepdhg",
        description="PDHG linear programming solver with online preconditioning",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)

    p_solve = subparsers.add_parser(
        "solve", help="Solve an MPS file", formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    p_solve.add_argument("file", help="Path to an .mps or .mps.gz file")
    p_solve.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.VANILLA.value)
    p_solve.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE, help="Relative tolerance")
    p_solve.add_argument("--iter-limit", type=int, default=DEFAULT_ITERATION_LIMIT)
    p_solve.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT, help="Seconds")
    p_solve.add_argument(
        "--online-lr", type=float, default=0.0, help="Online learning rate, 0 disables it"
    )
    p_solve.add_argument("--online-phi", type=int, default=20, help="Online update frequency")
    p_solve.add_argument("--online-normalize", action="store_true", default=False)
    p_solve.add_argument(
        "--online-scheduler", choices=[s.value for s in Scheduler], default=Scheduler.ADAGRAD.value
    )
    p_solve.add_argument(
        "--dual-loss-anchor",
        choices=[a.value for a in DualLossAnchor],
        default=DualLossAnchor.XK.value,
    )
    p_solve.add_argument("--no-restarts", action="store_true", default=False)
    p_solve.add_argument(
        "--fixed-stepsize", type=float, default=None, help="Constant step size in pdlp mode"
    )
    p_solve.add_argument(
        "--precondition",
        choices=[s.value for s in StaticPreconditioning],
        default=None,
        help="Static preprocessing, the mode default when missing",
    )
    p_solve.add_argument("--fixed-mps", action="store_true", default=False, help="Fixed MPS format")
    p_solve.add_argument("--trace", default=None, help="Write the residual trace to this CSV")
    p_solve.add_argument("-v", "--verbose", action="store_true", default=False)

    p_bench = subparsers.add_parser(
        "bench", help="Run a benchmark manifest", formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    p_bench.add_argument("--manifest", required=True, help="TOML manifest")
    p_bench.add_argument("--out", required=True, help="Output folder")
    p_bench.add_argument("--progress", action="store_true", default=False)
    p_bench.add_argument("-v", "--verbose", action="store_true", default=False)
    return parser


def solve_config_from_args(args: argparse.Namespace) -> SolveConfig:
    online = None
    if args.online_lr > 0:
        online = OnlineConfig(
            alpha=args.online_lr,
            phi=args.online_phi,
            normalize=args.online_normalize,
            scheduler=args.online_scheduler,
            dual_loss_anchor=args.dual_loss_anchor,
        )
    return SolveConfig(
        tolerance=args.tol,
        iteration_limit=args.iter_limit,
        time_limit=args.time_limit,
        mode=args.mode,
        precondition=args.precondition,
        online=online,
        restarts=not args.no_restarts,
        fixed_stepsize=args.fixed_stepsize,
    )


def run_solve(args: argparse.Namespace) -> int:
    try:
        cfg = solve_config_from_args(args)
        problem, varmap = read_lp(args.file, fixed=args.fixed_mps)
    except (MPSFormatError, ValueError, OSError) as e:
        logger.error(f"Could not load {args.file}: {e}")
        return EXIT_INPUT_ERROR

    report = solve(problem, cfg)
    x = recover_solution(varmap, report.x)
    objective = varmap.original_objective(report.objective)
    print(f"status      {report.status.value}")
    print(f"iterations  {report.iterations}")
    print(f"objective   {objective:.10g}")
    print(f"time        {report.wall_time:.3f}s")
    if report.residuals is not None:
        r = report.residuals
        print(
            f"residuals   primal {r.rel_primal:.3e}  dual {r.rel_dual:.3e}  gap {r.rel_gap:.3e}"
        )
    logger.debug(f"Primal solution: {x}")
    if args.trace is not None:
        report.write_trace(args.trace)
    return STATUS_EXIT_CODES[report.status]


def run_bench(args: argparse.Namespace) -> int:
    try:
        manifest = load_manifest(args.manifest)
    except (ValueError, OSError, TypeError) as e:
        logger.error(f"Invalid manifest {args.manifest}: {e}")
        return EXIT_INPUT_ERROR

    suite = run_suite(manifest, args.out, show_progress=args.progress)
    for name, report in suite.aggregates.items():
        print(
            f"{name:16s} #Opt {report.n_optimal:4d}/{report.n_instances:<4d} "
            f"load errors {report.n_load_errors:3d}  SGM10 {report.iterations_sgm10:10.1f}  "
            f"Imp {report.improved:3d}  Wors {report.worsened:3d}"
        )
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    if args.command == "solve":
        return run_solve(args)
    return run_bench(args)


if __name__ == "__main__":
    sys.exit(main())
