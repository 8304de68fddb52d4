#!/usr/bin/env python3
"""Both ablations: via-point count sweep and covariance factorization."""

import sys
from pathlib import Path

from viaplan.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

if __name__ == "__main__":
    out = sys.argv[1] if len(sys.argv) > 1 else "results"
    code = main(["ablate-nvia", str(CONFIGS / "ablate_nvia.json"),
                 "--out-dir", f"{out}/ablate_nvia", "--quiet"])
    code |= main(["ablate-chol", str(CONFIGS / "ablate_chol.json"),
                  "--out-dir", f"{out}/ablate_chol", "--quiet"])
    sys.exit(code)
