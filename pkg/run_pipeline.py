#!/usr/bin/env python3
"""
Command-line interface for the chiplet placement-order ranking pipeline

Examples:
  python run_pipeline.py sweep --system data/systems/suite_a.json --out out/sweeps/suite_a.csv --parallel 4
  python run_pipeline.py label --sweep out/sweeps/suite_a.csv --out out/labeled/suite_a.csv
  python run_pipeline.py rank --system data/systems/suite_e.json --model out/model.json --top 5
"""
import sys
from pathlib import Path

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / 'src'))

from chipletrank.cli import run_pipeline  # noqa: E402


if __name__ == "__main__":
    sys.exit(run_pipeline())
