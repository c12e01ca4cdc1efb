#!/usr/bin/env python3
"""Run the headline benchmark: GP regression vs CART over 10 replications.

Thin wrapper over ``qosgp benchmark`` pinned to configs/benchmark.cfg; pass
--config to run a different setup (configs/smoke.cfg for a quick check).
Writes report.json, metrics.csv, and per-replication prediction files
under the config's output directory.
"""

import argparse
import sys
from pathlib import Path

from qosgp.cli import main as qosgp_main

REPO_ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--config",
        default=str(REPO_ROOT / "configs" / "benchmark.cfg"),
        help="experiment config (default: configs/benchmark.cfg)",
    )
    parser.add_argument("--out", help="output directory (default: config output_dir)")
    parser.add_argument("--seed", type=int, help="override the config master_seed")
    parser.add_argument("--jobs", type=int, default=1, help="parallel replications")
    args = parser.parse_args()

    argv = ["benchmark", "--config", args.config, "--jobs", str(args.jobs)]
    if args.out is not None:
        argv += ["--out", args.out]
    if args.seed is not None:
        argv += ["--seed", str(args.seed)]
    return qosgp_main(argv)


if __name__ == "__main__":
    sys.exit(main())
