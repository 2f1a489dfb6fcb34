#!/usr/bin/env python3
"""
Torus Lab execution script
"""
import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.lab.cli import main


if __name__ == "__main__":
    sys.exit(main())
