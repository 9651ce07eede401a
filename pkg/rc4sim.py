#!/usr/bin/env python3
"""
Launcher script for RC4Sim.

Run from anywhere; the repository root is put on sys.path so the src
package resolves without installation. See `rc4sim.py --help`.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from src.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
