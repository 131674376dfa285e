#!/usr/bin/env python3
"""
Convergence Plot
Plots mean composite error against the theorem bound from a run/sweep CSV
Usage: uv run scripts/plot_convergence.py output/interpolation.csv --out output/interpolation.png
"""
import argparse
import csv
import sys
from collections import defaultdict
from pathlib import Path

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # pragma: no cover
    print("❌ matplotlib is not installed; run: uv sync --extra plot")
    sys.exit(1)


def load_series(path: Path) -> dict:
    """Group aggregate rows by (kind, n, sigma2, schedule), sorted by T"""
    series = defaultdict(list)
    with path.open(newline="") as handle:
        for row in csv.DictReader(handle):
            key = (row["kind"], row["n"], row["sigma2"], row["schedule"])
            series[key].append((int(row["T"]), float(row["composite"]), float(row["theorem_min"])))
    return {key: sorted(points) for key, points in series.items()}


def main() -> int:
    parser = argparse.ArgumentParser(description="Plot composite error vs horizon")
    parser.add_argument("csv", type=Path, help="aggregate CSV written by `sgd-bounds run` or `sweep`")
    parser.add_argument("--out", type=Path, default=None, help="image path (default: <csv>.png)")
    args = parser.parse_args()

    if not args.csv.exists():
        print(f"❌ No such file: {args.csv}")
        return 1
    series = load_series(args.csv)
    if not series:
        print(f"⚠️ No rows in {args.csv}")
        return 1

    fig, ax = plt.subplots(figsize=(8, 5))
    for (kind, n, sigma2, schedule), points in series.items():
        horizons = [p[0] for p in points]
        label = f"{kind} n={n} σ²={sigma2} {schedule}"
        line = ax.plot(horizons, [max(p[1], 1e-300) for p in points], marker="o", label=label)[0]
        ax.plot(horizons, [p[2] for p in points], linestyle="--", color=line.get_color())
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("T")
    ax.set_ylabel("composite error (solid) / theorem bound (dashed)")
    ax.legend(fontsize="small")
    fig.tight_layout()

    out = args.out or args.csv.with_suffix(".png")
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    print(f"📊 Plot saved to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
