"""CLI entry point for operator means and barycenters.

Usage:
    python scripts/opmeans.py mean geometric:0.5 A.json B.json -o M.json
    python scripts/opmeans.py barycenter rtm ensemble.json -o X.json
    python scripts/opmeans.py verify all --seed 1
"""

import sys
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from opmeans.cli import main


if __name__ == "__main__":
    sys.exit(main())
