#!/usr/bin/env python3
"""Offline planning on the bundled cluttered 2D world (100 seeds)."""

import sys
from pathlib import Path

from viaplan.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "cluttered2d.json"

if __name__ == "__main__":
    args = sys.argv[1:] or ["--out-dir", "results/offline_2d"]
    sys.exit(main(["plan", str(CONFIG), *args]))
