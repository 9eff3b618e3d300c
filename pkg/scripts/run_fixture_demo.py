"""Run the full offline workflow on a scratch copy of the fixture workspace.

Usage:  python scripts/run_fixture_demo.py [destination] [seed]

Copies tests/fixtures/titanic to the destination (default: ./demo_workspace),
drives all six phases with the deterministic backend, and prints the phase
ledger plus the selected model's validation score.
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from tabpilot.workflow import RunConfig, run_competition  # noqa: E402

FIXTURE = REPO / "tests" / "fixtures" / "titanic"


def main() -> int:
    destination = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("demo_workspace")
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 11
    if destination.exists():
        shutil.rmtree(destination)
    shutil.copytree(FIXTURE, destination)

    state = run_competition(destination, RunConfig(seed=seed))
    print(f"\nstatus: {state.status.state}")
    for record in state.history.records:
        print(f"  {record.phase.key}: passed={record.passed} "
              f"iterations={record.iterations_used} "
              f"loop_rounds={record.rounds_used}")
    report_path = destination / "model_report.json"
    if report_path.exists():
        report = json.loads(report_path.read_text())
        best = next(c for c in report["candidates"]
                    if c["family"] == report["selected"])
        print(f"\nselected model: {report['selected']} "
              f"(validation {report['metric']} {best['mean_cv_score']:.4f})")
    submission = destination / "submission.csv"
    if submission.exists():
        rows = sum(1 for _ in submission.open()) - 1
        print(f"submission.csv: {rows} data rows")
    print(f"workspace: {destination.resolve()}")
    return 0 if state.status.state == "succeeded" else 1


if __name__ == "__main__":
    sys.exit(main())
