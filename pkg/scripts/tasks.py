#!/usr/bin/env python3
"""
Task runner for SGD Bounds Lab
Usage: uv run scripts/tasks.py <task>
"""
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent

ACCEPTANCE = [
    ("verify-recursion", "recursion_acceptance.yaml"),
    ("verify-recursion", "recursion_sublinear.yaml"),
    ("run", "deterministic_gd.yaml"),
    ("run", "stochastic_theorem.yaml"),
    ("sweep", "interpolation.yaml"),
    ("run", "mu0_sublinear.yaml"),
    ("check-oracle", "oracle_check.yaml"),
]


def run_command(cmd: str, description: str = "") -> bool:
    """Run a command from the repository root"""
    if description:
        print(f"🔧 {description}")
    print(f"   Running: {cmd}")
    result = subprocess.run(cmd, shell=True, cwd=ROOT)
    return result.returncode == 0


def test():
    """Unit and functional tests"""
    return run_command('uv run pytest -m "not slow"', "Running fast tests")


def test_all():
    """Every test including the full campaigns"""
    return run_command("uv run pytest", "Running all tests")


def smoke():
    """The one-cell smoke campaign"""
    return run_command("uv run sgd-bounds run --config configs/smoke.yaml --out output/smoke.csv", "Smoke run")


def acceptance():
    """Every shipped acceptance campaign, CSVs under output/"""
    ok = True
    for command, config in ACCEPTANCE:
        out = f"output/{Path(config).stem}.csv"
        ok = run_command(
            f"uv run sgd-bounds {command} --config configs/{config} --out {out} --workers 4",
            f"{command} {config}",
        ) and ok
    print("✅ All campaigns passed" if ok else "❌ Some campaigns failed")
    return ok


def sync():
    """Sync dependencies"""
    return run_command("uv sync --extra dev", "Syncing dependencies")


def format_code():
    """Format code with black"""
    return run_command("uv run black sgd_bounds tests scripts", "Formatting code")


def lint():
    """Lint code with flake8"""
    return run_command("uv run flake8 sgd_bounds tests scripts --max-line-length 120", "Linting code")


def typecheck():
    """Type-check the package with mypy"""
    return run_command("uv run mypy sgd_bounds", "Type checking")


def check():
    """Formatting check, lint, types and fast tests"""
    ok = run_command("uv run black --check sgd_bounds tests scripts", "Checking format")
    ok = lint() and ok
    ok = typecheck() and ok
    return test() and ok


TASKS = {
    "test": (test, "Run unit and functional tests"),
    "test-all": (test_all, "Run every test including slow campaigns"),
    "smoke": (smoke, "Run the smoke campaign"),
    "acceptance": (acceptance, "Run every shipped acceptance campaign"),
    "sync": (sync, "Sync dependencies"),
    "format": (format_code, "Format code with black"),
    "lint": (lint, "Lint code with flake8"),
    "typecheck": (typecheck, "Type-check with mypy"),
    "check": (check, "Format check + lint + types + fast tests"),
}


def help_info():
    """Show available tasks"""
    print("📋 Available tasks:")
    for task, (_, desc) in TASKS.items():
        print(f"   uv run scripts/tasks.py {task:<12} - {desc}")


def main():
    if len(sys.argv) < 2:
        help_info()
        return 1

    task = sys.argv[1].lower()
    if task in ("help", "--help", "-h"):
        help_info()
        return 0
    if task not in TASKS:
        print(f"❌ Unknown task: {task}")
        help_info()
        return 1
    func, _ = TASKS[task]
    return 0 if func() else 1


if __name__ == "__main__":
    sys.exit(main())
