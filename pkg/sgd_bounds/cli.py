"""
CLI Module
Command-line front-end: run, sweep, verify-recursion, check-oracle and bound

Exit codes: 0 all checks pass, 1 usage or configuration error,
2 bound violation, 3 numerical failure.
"""
import argparse
import logging
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

from . import __version__
from .campaigns import (
    CampaignRunner,
    CellRecord,
    engine_cells,
    oracle_check_cells,
    recursion_cells,
    recursion_grid,
)
from .engine import interpolation_decay_checks, theorem_bound
from .errors import (
    BoundViolation,
    ConfigurationError,
    NumericalFailure,
    ParameterError,
    SgdBoundsError,
    SolverDidNotConverge,
)
from .models.config import ExperimentConfig, load_config
from .recursion_lab import (
    RecursionParams,
    lemma_constant_bound,
    lemma_decreasing_bound,
    lemma_sublinear_bound,
    lemma_two_phase_bound,
    lemma_unroll_bound,
)
from .reporting import (
    ENGINE_COLUMNS,
    ORACLE_COLUMNS,
    RECURSION_COLUMNS,
    aggregate_row,
    oracle_rows,
    print_banner,
    print_bound_table,
    print_engine_summary,
    print_failures,
    print_oracle_summary,
    print_recursion_summary,
    recursion_rows,
    replicate_rows,
    replicates_path,
    write_csv,
)
from .settings import Settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2
EXIT_NUMERIC = 3

NUMERIC_ERRORS = ("NumericalFailure", "SolverDidNotConverge")
DEFAULT_OUTPUTS = {
    "run": "run.csv",
    "sweep": "sweep.csv",
    "verify-recursion": "recursion.csv",
    "check-oracle": "oracle_check.csv",
}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with status 1 on usage errors"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sgd-bounds", description="Verify SGD convergence bounds empirically")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def campaign_flags(p):
        p.add_argument("--config", required=True, type=Path, help="YAML campaign file")
        p.add_argument("--out", type=Path, help="CSV output path (overrides the config)")
        p.add_argument("--workers", type=int, help="parallel cells (overrides config and environment)")
        p.add_argument("--seed", type=int, help="master seed, unsigned 64-bit (overrides the config)")
        p.add_argument("--log-level", help="logging level (default from SGD_BOUNDS_LOG_LEVEL or WARNING)")

    campaign_flags(sub.add_parser("run", help="run SGD campaigns and check their bounds"))
    campaign_flags(sub.add_parser("sweep", help="like run, plus per-replicate rows and horizon decay checks"))
    campaign_flags(sub.add_parser("verify-recursion", help="verify the recursion lemmas on random feasible sequences"))
    campaign_flags(sub.add_parser("check-oracle", help="check oracle assumptions by Monte Carlo"))

    bound = sub.add_parser("bound", help="print every bound for the given constants")
    bound.add_argument("--config", type=Path, help="campaign file with a bound block supplying defaults")
    bound.add_argument("--mu", type=float)
    bound.add_argument("--L", type=float)
    bound.add_argument("--R", type=float)
    bound.add_argument("--sigma2", type=float)
    bound.add_argument("--T", type=int)
    bound.add_argument("--gamma", type=float, help="constant stepsize for the distance bound")
    bound.add_argument("--log-level")
    return parser


# ---------------------------------------------------------------------------
# helpers


def _configure_logging(level: Optional[str], settings: Settings) -> None:
    name = (level or settings.log_level).upper()
    numeric = getattr(logging, name, None)
    if not isinstance(numeric, int):
        raise ConfigurationError(f"unknown log level {name!r}")
    logging.basicConfig(level=numeric, format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger().setLevel(numeric)


def _load(args, settings: Settings) -> ExperimentConfig:
    config = load_config(args.config)
    updates = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigurationError(f"--seed must be an unsigned 64-bit integer, got {args.seed}")
        updates["master_seed"] = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigurationError(f"--workers must be >= 1, got {args.workers}")
        updates["workers"] = args.workers
    elif config.workers is None:
        updates["workers"] = settings.workers
    return config.model_copy(update=updates)


def _output_path(args, config: ExperimentConfig, settings: Settings) -> Path:
    if args.out is not None:
        return args.out
    if config.output is not None:
        return Path(config.output)
    base = settings.output_dir or Path(".")
    return base / DEFAULT_OUTPUTS[args.command]


def _error_exit(records: Sequence[CellRecord]) -> Optional[int]:
    failed = [r for r in records if not r.success]
    if not failed:
        return None
    if any(r.error_type in NUMERIC_ERRORS for r in failed):
        return EXIT_NUMERIC
    return EXIT_USAGE


def _run_cells(config: ExperimentConfig, cells) -> List[CellRecord]:
    print(f"🚀 Running {len(cells)} cell(s) on {config.workers} worker(s)...")
    start = time.time()
    records = CampaignRunner(config.workers).run_sync(cells)
    ok = sum(1 for r in records if r.success)
    print(f"✅ Completed {ok}/{len(records)} cell(s) in {time.time() - start:.1f}s")
    return records


# ---------------------------------------------------------------------------
# commands


def cmd_run(args, settings: Settings) -> int:
    """Run (and for sweep, also per-replicate export and decay checks) every engine cell"""
    config = _load(args, settings)
    if not config.problems or config.algorithm is None:
        raise ConfigurationError(f"{args.config}: {args.command} needs problems and an algorithm block")
    out = _output_path(args, config, settings)
    print_banner(f"🔀 {args.command.upper()}: {args.config}")
    cells = engine_cells(config)
    records = _run_cells(config, cells)
    aggregates = [r.result for r in records if r.success]

    write_csv(out, ENGINE_COLUMNS, (aggregate_row(a) for a in aggregates))
    decay = []
    if args.command == "sweep":
        write_csv(replicates_path(out), ENGINE_COLUMNS, (row for a in aggregates for row in replicate_rows(a)))
        for problem in dict.fromkeys(a.problem for a in aggregates):
            group = [a for a in aggregates if a.problem == problem and a.schedule == "two_phase" and a.sigma2 == 0.0]
            if group:
                decay.extend(interpolation_decay_checks(group, group[0].mu, group[0].L))

    print_engine_summary(aggregates, decay)
    print_failures(records)
    print(f"📄 CSV written to {out}")

    code = _error_exit(records)
    if code is not None:
        return code
    violations = [
        f"{a.problem}/{a.schedule}/T={a.T}: {c.name} {c.measured:.4e} > {c.bound:.4e} + 3 x {c.ci_halfwidth:.2e}"
        for a in aggregates
        for c in a.checks
        if c.gating and not c.passed
    ]
    violations += [f"decay T={d.T}: {d.composite_2T:.4e} > {d.allowed:.4e}" for d in decay if not d.passed]
    if violations:
        raise BoundViolation("bound check failed", violations)
    print("✅ All bound checks passed")
    return EXIT_OK


def cmd_verify_recursion(args, settings: Settings) -> int:
    """Run every lemma over the recursion grid"""
    config = _load(args, settings)
    out = _output_path(args, config, settings)
    print_banner(f"🔀 VERIFY RECURSION: {args.config}")
    grid = recursion_grid(config)
    records = _run_cells(config, recursion_cells(config, grid))
    outcomes = [o for r in records if r.success for o in r.result]

    write_csv(out, RECURSION_COLUMNS, recursion_rows(outcomes, per_draw=config.recursion.per_draw_rows))
    print_recursion_summary(outcomes, grid.skipped)
    print_failures(records)
    print(f"📄 CSV written to {out}")

    code = _error_exit(records)
    if code is not None:
        return code
    violations = [
        f"{o.lemma_tag} a={o.cell.params.a:g} b={o.cell.params.b:g} c={o.cell.params.c:g} "
        f"d={o.cell.params.d:g} T={o.cell.T} mode={o.mode}: margin {o.margin:.4e}, "
        f"{o.infeasible_steps} infeasible step(s)"
        for o in outcomes
        if o.gating and not o.passed
    ]
    if violations:
        raise BoundViolation("recursion bound violated", violations)
    print("✅ All gating lemmas hold on every draw")
    return EXIT_OK


def cmd_check_oracle(args, settings: Settings) -> int:
    """Monte-Carlo assumption checks on the standard instances and the config's problems"""
    config = _load(args, settings)
    out = _output_path(args, config, settings)
    print_banner(f"🔀 CHECK ORACLE: {args.config}")
    records = _run_cells(config, oracle_check_cells(config))
    checks = [c for r in records if r.success for c in r.result]

    write_csv(out, ORACLE_COLUMNS, oracle_rows(checks))
    print_oracle_summary(checks)
    print_failures(records)
    print(f"📄 CSV written to {out}")

    code = _error_exit(records)
    if code is not None:
        return code
    violations = [
        f"{c.label} point {c.point}: lhs {c.lhs_estimate:.4e}, rhs {c.rhs:.4e}, mu margin {c.mu_margin:.3e}"
        for c in checks
        if c.violated or c.mu_margin < -1e-10 or c.unbiased is False
    ]
    if violations:
        raise BoundViolation("oracle assumption violated", violations)
    print("✅ All oracle assumptions hold")
    return EXIT_OK


def cmd_bound(args, parser: argparse.ArgumentParser) -> int:
    """Print every bound formula for the given constants"""
    names = ("mu", "L", "R", "sigma2", "T")
    if args.config is not None:
        config = load_config(args.config)
        if config.bound is not None:
            for name in names + ("gamma",):
                if getattr(args, name) is None:
                    setattr(args, name, getattr(config.bound, name))
    missing = [f"--{n}" for n in names if getattr(args, n) is None]
    if missing:
        parser.error(f"the following arguments are required: {', '.join(missing)}")

    bounds = theorem_bound(args.mu, args.L, args.R, args.sigma2, args.T, gamma=args.gamma)
    params = RecursionParams(a=args.mu, b=1.0, c=args.sigma2, d=2.0 * args.L)
    r0 = args.R * args.R
    lemmas = {"sublinear-rate lemma": lemma_sublinear_bound(params, r0, args.T)}
    if args.mu > 0:
        lemmas = {
            "constant-stepsize lemma (tuned gamma)": lemma_constant_bound(params, r0, args.T),
            "two-phase lemma": lemma_two_phase_bound(params, r0, args.T),
            **lemmas,
            "unrolled recursion, r_T at gamma = 1/d": lemma_unroll_bound(params, r0, args.T),
            "decreasing-stepsize lemma": lemma_decreasing_bound(params, r0, args.T),
        }
    print_bound_table(bounds, args.mu, args.L, args.R, args.sigma2, args.T, lemmas)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_run,
    "verify-recursion": cmd_verify_recursion,
    "check-oracle": cmd_check_oracle,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings.from_env()
        _configure_logging(args.log_level, settings)
        if args.command == "bound":
            return cmd_bound(args, parser)
        return COMMANDS[args.command](args, settings)
    except BoundViolation as exc:
        print(f"❌ {exc}")
        for cell in exc.cells:
            print(f"   ❌ {cell}")
        return EXIT_VIOLATION
    except (NumericalFailure, SolverDidNotConverge) as exc:
        print(f"❌ numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigurationError, ParameterError) as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SgdBoundsError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KeyboardInterrupt:
        print("\n👋 Interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
