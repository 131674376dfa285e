"""
Reporting Module
Writes CSV artifacts and prints human-readable campaign summaries
"""
import csv
import logging
from pathlib import Path
from typing import Iterable, List, Sequence

from .campaigns import CellRecord, OracleCheckRow, SkippedCell
from .engine import DecayCheck
from .models.reports import BoundReport, CampaignAggregate
from .recursion_lab import LemmaOutcome
from .rng import STREAM_REPLICATE, derive_seed

logger = logging.getLogger(__name__)

ENGINE_COLUMNS = [
    "kind", "n", "mu", "L", "sigma2", "schedule", "T", "seed",
    "f_gap_avg", "dist_sq_last", "composite", "theorem_min", "ratio",
]
RECURSION_COLUMNS = ["lemma_tag", "a", "b", "c", "d", "T", "mode", "seed", "weighted_error", "bound", "margin"]
ORACLE_COLUMNS = ["kind", "n", "point", "lhs_estimate", "rhs", "slack", "ci_halfwidth", "violated", "mu_margin"]


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write rows under a fixed header with repr-formatted floats"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    logger.info("wrote %s", path)
    return path


def replicates_path(out: Path) -> Path:
    """<out>.replicates.csv next to the aggregate file"""
    out = Path(out)
    return out.with_name(out.stem + ".replicates.csv")


# ---------------------------------------------------------------------------
# rows


def aggregate_row(agg: CampaignAggregate) -> list:
    return [
        agg.kind, agg.n, agg.mu, agg.L, agg.sigma2, agg.schedule, agg.T, agg.seed,
        agg.mean_f_gap, agg.mean_dist_sq, agg.mean_composite, agg.bounds.theorem_min, agg.ratio,
    ]


def replicate_rows(agg: CampaignAggregate) -> List[list]:
    theorem_min = agg.bounds.theorem_min
    rows = []
    for rep in agg.replicates:
        ratio = rep.composite / theorem_min if theorem_min > 0 else float("inf")
        rows.append([
            agg.kind, agg.n, agg.mu, agg.L, agg.sigma2, agg.schedule, agg.T,
            derive_seed(agg.seed, STREAM_REPLICATE, rep.index),
            rep.f_gap_avg, rep.dist_sq_last, rep.composite, theorem_min, ratio,
        ])
    return rows


def recursion_rows(outcomes: Iterable[LemmaOutcome], per_draw: bool = False) -> List[list]:
    rows = []
    for o in outcomes:
        if o.skipped:
            continue
        p = o.cell.params
        head = [o.lemma_tag, p.a, p.b, p.c, p.d, o.cell.T, o.mode, o.seed]
        if per_draw and o.per_draw:
            rows.extend(head + [lhs, o.bound, margin] for lhs, margin in o.per_draw)
        else:
            rows.append(head + [o.weighted_error, o.bound, o.margin])
    return rows


def oracle_rows(checks: Iterable[OracleCheckRow]) -> List[list]:
    return [
        [c.kind, c.n, c.point, c.lhs_estimate, c.rhs, c.slack, c.ci_halfwidth, c.violated, c.mu_margin]
        for c in checks
    ]


# ---------------------------------------------------------------------------
# console


def print_banner(title: str) -> None:
    print()
    print("=" * 80)
    print(title)
    print("=" * 80)
    print()


def print_failures(records: Sequence[CellRecord]) -> None:
    failed = [r for r in records if not r.success]
    if not failed:
        return
    print(f"❌ {len(failed)} cell(s) raised errors:")
    for record in failed:
        print(f"   ❌ {record.label}: {record.error_type}: {record.error}")
    print()


def print_engine_summary(aggregates: Sequence[CampaignAggregate], decay: Sequence[DecayCheck] = ()) -> None:
    """Results table: one line per cell and check"""
    print_banner("📊 CAMPAIGN RESULTS")
    header = f"{'kind':<14}{'schedule':<17}{'T':>7}  {'composite':>11}  {'ci':>9}  {'theorem':>11}  {'ratio':>8}"
    print(header)
    print("-" * 80)
    for agg in aggregates:
        print(
            f"{agg.kind:<14}{agg.schedule:<17}{agg.T:>7}  {agg.mean_composite:>11.4e}  "
            f"{agg.ci_composite:>9.2e}  {agg.bounds.theorem_min:>11.4e}  {agg.ratio:>8.3f}"
        )
        for check in agg.checks:
            status = "✅" if check.passed else ("❌" if check.gating else "⚠️")
            print(f"   {status} {check.name}: {check.measured:.4e} vs {check.bound:.4e} (ratio {check.ratio:.3f})")
    if decay:
        print()
        print("Interpolation decay (T -> 2T):")
        print("-" * 80)
        for check in decay:
            status = "✅" if check.passed else "❌"
            print(f"   {status} T={check.T}: {check.composite_2T:.4e} <= {check.allowed:.4e}")
    print()


def print_recursion_summary(outcomes: Sequence[LemmaOutcome], skipped: Sequence[SkippedCell]) -> None:
    """Worst margin per lemma and mode, plus everything skipped"""
    print_banner("📊 RECURSION VERIFICATION")
    keys = sorted({(o.lemma_tag, o.mode) for o in outcomes if not o.skipped})
    print(f"{'lemma':<22}{'mode':<7}{'cells':>7}{'draws':>11}  {'min margin':>12}  status")
    print("-" * 80)
    for lemma, mode in keys:
        group = [o for o in outcomes if o.lemma_tag == lemma and o.mode == mode and not o.skipped]
        worst = min(group, key=lambda o: o.margin)
        gating = any(o.gating for o in group)
        ok = all(o.passed for o in group if o.gating)
        status = "✅ PASS" if ok else "❌ FAIL"
        if not gating:
            status = "✅ info" if all(o.passed for o in group) else "⚠️ info"
        draws = sum(o.draws for o in group)
        print(f"{lemma:<22}{mode:<7}{len(group):>7}{draws:>11}  {worst.margin:>12.4e}  {status}")
    skipped_outcomes = [o for o in outcomes if o.skipped]
    if skipped or skipped_outcomes:
        print()
        print(f"⚠️ Skipped: {len(skipped)} grid point(s), {len(skipped_outcomes)} lemma cell(s)")
        for cell in skipped:
            print(f"   - {cell.label}: {cell.reason}")
        reasons = sorted({o.skipped_reason for o in skipped_outcomes})
        for reason in reasons:
            count = sum(1 for o in skipped_outcomes if o.skipped_reason == reason)
            print(f"   - {count} x {reason}")
    print()


def print_oracle_summary(checks: Sequence[OracleCheckRow]) -> None:
    print_banner("📊 ORACLE ASSUMPTION CHECKS")
    print(f"{'instance':<30}{'points':>7}  {'max lhs/rhs':>12}  {'min mu margin':>14}  status")
    print("-" * 80)
    labels = list(dict.fromkeys(c.label for c in checks))
    for label in labels:
        group = [c for c in checks if c.label == label]
        ratios = [c.lhs_estimate / c.rhs for c in group if c.rhs > 0]
        worst_ratio = max(ratios) if ratios else 0.0
        worst_mu = min(c.mu_margin for c in group)
        ok = not any(c.violated for c in group) and worst_mu >= -1e-10 and all(
            c.unbiased is not False for c in group
        )
        print(f"{label:<30}{len(group):>7}  {worst_ratio:>12.4f}  {worst_mu:>14.3e}  {'✅' if ok else '❌'}")
    print()


def print_bound_table(bounds: BoundReport, mu: float, L: float, R: float, sigma2: float, T: int, lemma_values: dict) -> None:
    """Every bound formula for one set of constants"""
    print_banner(f"📊 BOUNDS  mu={mu:g}  L={L:g}  R={R:g}  sigma2={sigma2:g}  T={T}")

    def line(name: str, value) -> None:
        text = "n/a" if value is None else f"{value:.6g}"
        print(f"{name:<48}{text:>20}")

    line("theorem, exponential branch", bounds.theorem_branch_exp)
    line("theorem, sublinear branch", bounds.theorem_branch_sub)
    line("theorem, min", bounds.theorem_min)
    gamma = "" if bounds.distance_gamma is None else f" (gamma={bounds.distance_gamma:.6g})"
    line(f"last-iterate distance{gamma}", bounds.last_iterate_distance_bound)
    if bounds.last_iterate_distance_bound is not None:
        line("last-iterate distance, noise term", bounds.distance_gamma * sigma2 / mu)
    line("large-T refinement (informational)", bounds.improved_informational)
    print("-" * 80)
    for name, value in lemma_values.items():
        line(name, value)
    print()
