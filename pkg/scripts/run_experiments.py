#!/usr/bin/env python3
"""Run every CLI experiment on the shipped configs, one output directory each."""

import argparse
import sys
from pathlib import Path

from wklab.harness.cli import run_cli

ROOT = Path(__file__).resolve().parents[1]
EXPERIMENTS = [
    ("rates", "rates_integrable_2d.ini"),
    ("sharpness", "sharpness.ini"),
    ("solve", "drift.ini"),
    ("verify", "drift.ini"),
    ("barrier", "pendulum.ini"),
    ("aubry", "pendulum.ini"),
    ("ergodize", "ergodize.ini"),
    ("ergodize", "ergodize_rational.ini"),
]


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", type=Path, default=Path("out"))
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    worst = 0
    for cmd, cfg in EXPERIMENTS:
        out = args.out / f"{cmd}_{Path(cfg).stem}"
        code = run_cli([cmd, "--config", str(ROOT / "configs" / cfg), "--out", str(out),
                        "--seed", str(args.seed)])
        print(f"{cmd:<10} {cfg:<26} exit {code}  -> {out}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
