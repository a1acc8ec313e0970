"""Run every figure scenario through the sweep command and write one CSV per scenario.

Usage: python3 scripts/run_figure_sweeps.py [--out results] [--seed 0] [--workers 4]
"""

import argparse
import sys
from pathlib import Path

from stinqos import cli

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default=str(ROOT / "results"), help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for scen in sorted((ROOT / "scenarios").glob("*.json")):
        target = out / f"{scen.stem}.csv"
        code = cli.main(["sweep", "--scenario", str(scen), "--seed", str(args.seed), "--workers", str(args.workers), "--out", str(target)])
        print(f"{scen.stem}: exit {code} -> {target}")
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
