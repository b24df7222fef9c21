#!/usr/bin/env python3
"""Reproduce the evaluation: three existing/new request mixes, each solved
online and with reuse of deployed VNFs forbidden, written as one CSV.

The default profile is the reduced scale (4 servers, 4 user groups, 4
requests) that finishes in well under a minute. ``--full`` switches to the
full scale (6 servers, 6 user groups, 6 requests); expect runtimes
from seconds up to hours depending on the scenario, so a generous
``--time-limit`` is applied per case.

    python scripts/run_comparison.py -o comparison.csv
    python scripts/run_comparison.py --full --seed 11 --time-limit 3600
"""

import argparse
import sys
import time

from chainplace.scenario import (
    DEFAULT_SEED,
    ScenarioSpec,
    reports_to_csv,
    run_comparison,
)
from chainplace.solver import SolveOptions


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--full", action="store_true", help="full scale instead of reduced")
    parser.add_argument("--time-limit", type=float, default=600.0, help="seconds per solver case")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--timing", action="store_true", help="include wall-clock column values")
    parser.add_argument("-o", "--output", default=None)
    args = parser.parse_args()

    options = SolveOptions(time_limit=args.time_limit, parallel_workers=args.workers)
    reports = []
    for scenario_id in (1, 2, 3):
        spec = ScenarioSpec.table_row(scenario_id, seed=args.seed, reduced=not args.full)
        started = time.monotonic()
        report = run_comparison(spec, options)
        print(
            f"scenario {scenario_id}: online {report.online.breakdown.as_money()['total']} "
            f"vs no-reuse {report.no_reuse.breakdown.as_money()['total']} money "
            f"({time.monotonic() - started:.1f}s)",
            file=sys.stderr,
        )
        reports.append(report)

    text = reports_to_csv(reports, include_timing=args.timing)
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
