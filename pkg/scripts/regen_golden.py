#!/usr/bin/env python3
"""Regenerate tests/data/golden_report.json (run after intentional output changes)."""

import shutil
import tempfile
from pathlib import Path

from forumsim.cli import main

ROOT = Path(__file__).resolve().parent.parent


def regen() -> None:
    tmp = Path(tempfile.mkdtemp())
    try:
        cfg = tmp / "sim.cfg"
        cfg.write_text("days = 3\nstarting_agents = 12\nseed = 7\n", encoding="utf-8")
        out = tmp / "run"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        analysis = tmp / "analysis"
        assert (
            main(["analyze", "--events", str(out / "events.jsonl"), "--out", str(analysis)])
            == 0
        )
        assert main(["report", "--analysis", str(analysis), "--format", "json"]) == 0
        target = ROOT / "tests" / "data" / "golden_report.json"
        target.write_bytes((analysis / "report.json").read_bytes())
        print(f"wrote {target}")
    finally:
        shutil.rmtree(tmp)


if __name__ == "__main__":
    regen()
