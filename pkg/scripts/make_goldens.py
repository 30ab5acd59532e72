#!/usr/bin/env python3
"""Regenerate the scenario golden files (canonical provenance + DOT).

Run after intentional changes to scenario programs, plans, or the collector;
review the diff before committing. The acceptance suite recomputes sessions
and compares against these files byte for byte.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from provdbg.collector.export import canonical_form, graph_to_dot, graph_to_json
from provdbg.scenarios.catalog import get_scenario, scenario_dir
from provdbg.scenarios.driver import run_debug_session


def main() -> None:
    for name in ("hdfs4022", "hdfs5465"):
        scenario = get_scenario(name)
        report = run_debug_session(scenario)
        out = scenario_dir(name)
        golden = {
            "rounds": report.rounds_executed,
            "occurrences": report.occurrences,
            "canonical": canonical_form(report.final_graph),
        }
        (out / "golden.json").write_text(json.dumps(golden, indent=1,
                                                    sort_keys=True) + "\n")
        (out / "golden.dot").write_text(graph_to_dot(report.final_graph))
        (out / "golden.graph.json").write_text(
            json.dumps(graph_to_json(report.final_graph), indent=1,
                       sort_keys=True) + "\n")
        print(f"{name}: rounds={report.rounds_executed} "
              f"occurrences={report.occurrences} "
              f"vertices={len(report.final_graph.vertices)} "
              f"edges={len(report.final_graph.edges)}")


if __name__ == "__main__":
    main()
