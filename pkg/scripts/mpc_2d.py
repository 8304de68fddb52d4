#!/usr/bin/env python3
"""Closed-loop MPC episode on the cluttered world.

Pass --baseline greedy for the short-horizon contrast, or
--disturb step=40 "dq=(0.3,0)" to inject a state disturbance.
"""

import sys
from pathlib import Path

from viaplan.cli import main

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "mpc2d.json"

if __name__ == "__main__":
    args = sys.argv[1:] or ["--out-dir", "results/mpc_2d"]
    sys.exit(main(["mpc", str(CONFIG), *args]))
