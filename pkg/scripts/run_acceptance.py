#!/usr/bin/env python3
"""Run the acceptance checks and print one PASS/FAIL line per criterion."""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    args = [str(ROOT / "tests" / "test_acceptance.py"), "-q", "-s", "-p", "no:cacheprovider"]
    sys.exit(pytest.main(args + sys.argv[1:]))
