#!/usr/bin/env python3
"""Record independent optima for the shipped default seed.

For each reduced-scale scenario this script generates the instance, compiles
the clamped placement program with and without the reuse ban, solves the
exported MPS with the HiGHS engine inside scipy (an engine that shares no
code with the built-in search), imports the solution and records the exact
totals and migration counts into tests/data/acceptance_oracle.json.

Exhaustive enumeration is far out of reach at this scale (the raw decision
space is ~1e9 combinations), so the independent integer-programming engine
stands in as the oracle. Run from the repository root:

    python scripts/freeze_acceptance_oracle.py
"""

import json
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))  # reuse the test-side MPS bridge

from helpers import solve_mps_with_highs

from chainplace.costs import total_objective
from chainplace.ilp import BuildOptions, build_ilp, export_mps, import_solution
from chainplace.model import check_feasibility, snapshot_diff
from chainplace.scenario import DEFAULT_SEED, ScenarioSpec, generate


def oracle_case(instance, no_reuse: bool) -> dict:
    model = build_ilp(
        instance, BuildOptions(no_reuse=no_reuse, clamp_instantiation=True)
    )
    _objective, values = solve_mps_with_highs(export_mps(model))
    plan = import_solution(model, values)
    report = check_feasibility(instance, plan)
    assert report.feasible, report.violations
    breakdown = total_objective(instance, plan, clamp_instantiation=True)
    delta = snapshot_diff(instance.snapshot, plan)
    return {
        "total_micro": breakdown.total,
        "migration_micro": breakdown.migration,
        "migration_count": len(delta.migrated),
    }


def main() -> None:
    out = {"seed": DEFAULT_SEED, "scale": "reduced", "scenarios": {}}
    for scenario_id in (1, 2, 3):
        spec = ScenarioSpec.table_row(scenario_id, seed=DEFAULT_SEED, reduced=True)
        instance = generate(spec)
        out["scenarios"][str(scenario_id)] = {
            "online": oracle_case(instance, no_reuse=False),
            "no_reuse": oracle_case(instance, no_reuse=True),
        }
        print(f"scenario {scenario_id}: {out['scenarios'][str(scenario_id)]}")
    target = ROOT / "tests" / "data" / "acceptance_oracle.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
