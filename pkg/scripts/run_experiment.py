#!/usr/bin/env python3
"""Run the default 30-day experiment end to end: simulate, analyze, report.

Usage: python scripts/run_experiment.py [SEED] [OUTDIR]
"""

import sys
from pathlib import Path

from forumsim.cli import main


def run(seed: int, outdir: Path) -> int:
    run_dir = outdir / f"run-seed{seed}"
    analysis_dir = outdir / f"analysis-seed{seed}"
    code = main(["run", "--seed", str(seed), "--out", str(run_dir)])
    if code:
        return code
    code = main(
        ["analyze", "--events", str(run_dir / "events.jsonl"), "--out", str(analysis_dir)]
    )
    if code:
        return code
    return main(["report", "--analysis", str(analysis_dir), "--format", "json"])


if __name__ == "__main__":
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 42
    outdir = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("results")
    sys.exit(run(seed, outdir))
