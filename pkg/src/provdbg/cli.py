"""Command-line entry points over the whole pipeline."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .analysis.facts import analyze_program, export_relations
from .collector.export import canonical_form, graph_to_dot, graph_to_json
from .collector.provenance import build_provenance
from .collector.store import TraceStore, content_hash
from .lang import load_program
from .lang.printer import program_to_json
from .runtime.instrument import InstrumentedProgram
from .runtime.interp import Engine, RuntimeConfig, Workload
from .sdg.graph import build_sdg
from .sdg.io import (canonical_json, find_node, plan_from_json, plan_summary,
                     plan_to_json, sdg_to_dot, sdg_to_json, slice_to_json)
from .sdg.plan import derive_plan, expected_sampling_latency, merge_plans
from .sdg.slicing import Query, backward_slice


def _load_from_args(args):
    if getattr(args, "scenario", None):
        from .scenarios.catalog import get_scenario
        scenario = get_scenario(args.scenario)
        program, info, facts, sdg = scenario.build()
        return program, info, facts, sdg, scenario
    text = Path(args.program).read_text()
    program, info = load_program(text)
    facts = analyze_program(program, info)
    return program, info, facts, build_sdg(facts), None


def _parse_depth(text):
    if text in (None, "inf", "none", "unbounded"):
        return None
    return int(text)


def _write(path, text, label):
    if path:
        Path(path).write_text(text)
        print(f"wrote {label} to {path}")
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def cmd_analyze(args) -> int:
    program, info, facts, sdg, _ = _load_from_args(args)
    doc = sdg_to_json(sdg)
    doc["warnings"] = facts.warnings
    _write(args.out, canonical_json(doc), "SDG")
    if args.dot:
        Path(args.dot).write_text(sdg_to_dot(sdg))
    if args.relations:
        Path(args.relations).write_text(export_relations(facts))
    print(f"nodes={len(sdg.nodes)} edges={len(sdg.edges)}", file=sys.stderr)
    return 0


def _query_from_args(sdg, args) -> Query:
    nodes = tuple(find_node(sdg, t) for t in args.query)
    return Query(nodes, _parse_depth(args.depth))


def cmd_slice(args) -> int:
    _, _, _, sdg, _ = _load_from_args(args)
    slc = backward_slice(sdg, _query_from_args(sdg, args))
    _write(args.out, canonical_json(slice_to_json(slc)), "slice")
    return 0


def cmd_plan(args) -> int:
    program, _, _, sdg, _ = _load_from_args(args)
    slc = backward_slice(sdg, _query_from_args(sdg, args))
    plan = derive_plan(sdg, slc, program)
    if args.retained:
        retained = plan_from_json(json.loads(Path(args.retained).read_text()))
        plan = merge_plans(plan, frozenset(retained.ops))
    _write(args.out, canonical_json(plan_to_json(plan)), "plan")
    print(json.dumps(plan_summary(plan)), file=sys.stderr)
    return 0


def cmd_run(args) -> int:
    program, info, facts, sdg, scenario = _load_from_args(args)
    plan = plan_from_json(json.loads(Path(args.plan).read_text()))
    if scenario is not None and not args.workload:
        workload = scenario.workload()
    else:
        doc = json.loads(Path(args.workload).read_text())
        hints = json.loads(Path(args.hints).read_text()) if args.hints else None
        workload = Workload.from_dict(doc, hints)
    ip = InstrumentedProgram(program, plan)
    cfg = RuntimeConfig(seed=args.seed, mode=args.mode)
    result = Engine(ip, workload, cfg, info).run()
    store = TraceStore(result.traces)
    store.ingest(result.events)
    manifest = {
        "seed": args.seed,
        "planHash": content_hash(plan_to_json(plan)),
        "programHash": content_hash(program_to_json(program)),
        "checkFailures": [
            {"stmt": str(f.stmt), "trace": f.trace_id, "values": f.values}
            for f in result.check_failures
        ],
        "stats": result.stats,
        "errors": result.errors,
    }
    store.save(args.out, manifest)
    print(f"events={store.count} manifested={result.manifested} -> {args.out}")
    return 0


def cmd_provenance(args) -> int:
    program, info, facts, sdg, _ = _load_from_args(args)
    store = TraceStore.load(args.store)
    plan = plan_from_json(json.loads(Path(args.plan).read_text()))
    graph = build_provenance(store, _query_from_args(sdg, args), plan, sdg)
    _write(args.out, canonical_json(graph_to_json(graph)), "provenance graph")
    if args.dot:
        Path(args.dot).write_text(graph_to_dot(graph))
    return 0


def cmd_session(args) -> int:
    from .scenarios.catalog import get_scenario
    from .scenarios.driver import run_debug_session
    scenario = get_scenario(args.scenario)
    depths = None
    if args.depths:
        depths = [_parse_depth(d) for d in args.depths.split(",")]
    report = run_debug_session(scenario, depths=depths)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "provenance.json").write_text(
            canonical_json(graph_to_json(report.final_graph)))
        (out / "provenance.dot").write_text(graph_to_dot(report.final_graph))
        (out / "canonical.json").write_text(
            canonical_json(canonical_form(report.final_graph)))
        (out / "plan.json").write_text(canonical_json(plan_to_json(report.final_plan)))
        (out / "session.json").write_text(canonical_json(report.summary()))
        report.final_store.save(str(out / "store"), report.summary())
    print(f"rounds={report.rounds_executed} occurrences={report.occurrences}")
    return 0


def cmd_bench(args) -> int:
    from .scenarios.bench import overhead_bench
    report = overhead_bench(repetitions=args.repetitions, seed=args.seed)
    if args.out:
        Path(args.out).write_text(canonical_json(report.to_json()))
    print(report.table())
    return 0


def cmd_latency(args) -> int:
    print(expected_sampling_latency(args.rate, args.traces))
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def _add_target(sub, scenario_ok=True):
    g = sub.add_mutually_exclusive_group(required=True)
    g.add_argument("--program", help="MiniDist source file")
    if scenario_ok:
        g.add_argument("--scenario", help="bundled scenario name")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="provdbg",
                                 description="provenance-guided debugger for MiniDist systems")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="build and export the SDG")
    _add_target(p)
    p.add_argument("--out", help="write SDG JSON here (default stdout)")
    p.add_argument("--dot", help="also write DOT")
    p.add_argument("--relations", help="also write CSV relations")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("slice", help="depth-limited backward slice")
    _add_target(p)
    p.add_argument("--query", nargs="+", required=True,
                   help="node coordinates comp/fn/ord/R|W/aml")
    p.add_argument("--depth", default=None, help="edge hops, or 'inf'")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_slice)

    p = sub.add_parser("plan", help="derive an instrumentation plan")
    _add_target(p)
    p.add_argument("--query", nargs="+", required=True)
    p.add_argument("--depth", default=None)
    p.add_argument("--retained", help="previous plan JSON to merge")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("run", help="run a workload under a plan")
    _add_target(p)
    p.add_argument("--plan", required=True)
    p.add_argument("--workload")
    p.add_argument("--hints")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=["deterministic", "freeThreaded"],
                   default="deterministic")
    p.add_argument("--out", required=True, help="store directory")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("provenance", help="reconstruct a provenance graph")
    _add_target(p)
    p.add_argument("--store", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--query", nargs="+", required=True)
    p.add_argument("--depth", default=None)
    p.add_argument("--out")
    p.add_argument("--dot")
    p.set_defaults(fn=cmd_provenance)

    p = sub.add_parser("session", help="scripted multi-round debugging session")
    p.add_argument("--scenario", required=True)
    p.add_argument("--depths", help="comma-separated per-round depth override")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_session)

    p = sub.add_parser("bench", help="overhead benchmark")
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("latency", help="expected sampling diagnosis latency (1/p)^n")
    p.add_argument("rate", type=float)
    p.add_argument("traces", type=int)
    p.set_defaults(fn=cmd_latency)

    p = sub.add_parser("serve", help="HTTP API for the console")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("PROVDBG_PORT", "8787")))
    p.set_defaults(fn=cmd_serve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, KeyError, FileNotFoundError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
