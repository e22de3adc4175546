#!/usr/bin/env python3
"""Regenerate the committed golden run under tests/golden/run/.

Run this only when an intentional behavior change invalidates the frozen
output; the acceptance suite diffs against these files byte for byte.
"""

from __future__ import annotations

import shutil
import sys
import tempfile
from pathlib import Path

from click.testing import CliRunner

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from ragbench.cli import main

import goldens


def regenerate() -> None:
    with tempfile.TemporaryDirectory() as tmp:
        work = Path(tmp)
        records_path, human_path = goldens.build_golden_inputs(work)
        out_dir = work / "out"
        result = CliRunner().invoke(main, goldens.run_cli_args(records_path, human_path, out_dir))
        if result.exit_code != 0:
            raise SystemExit(f"golden run failed:\n{result.output}")
        goldens.GOLDEN_DIR.mkdir(parents=True, exist_ok=True)
        for name in goldens.COMPARED_FILES:
            shutil.copyfile(out_dir / name, goldens.GOLDEN_DIR / name)
        print(f"wrote {len(goldens.COMPARED_FILES)} files to {goldens.GOLDEN_DIR}")


if __name__ == "__main__":
    regenerate()
