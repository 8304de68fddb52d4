#!/usr/bin/env python3
"""Rest-to-rest 1D benchmark runs (bang-bang reference 10.5 s)."""

import sys
from pathlib import Path

from viaplan.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "timeopt1d.json"

if __name__ == "__main__":
    args = sys.argv[1:] or ["--out-dir", "results/time_optimal_1d"]
    sys.exit(main(["plan", str(CONFIG), *args]))
