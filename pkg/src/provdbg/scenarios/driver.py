"""Multi-round debugging session driver and the full-record oracle runner."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..collector.export import canonical_form, graph_to_json
from ..collector.provenance import ProvenanceGraph, build_provenance
from ..collector.store import TraceStore, content_hash
from ..lang.ir import READ, WRITE
from ..runtime.instrument import InstrumentedProgram
from ..runtime.interp import Engine, RunResult, RuntimeConfig
from ..sdg.graph import Sdg
from ..sdg.io import find_node, plan_to_json
from ..sdg.plan import InstrumentationPlan, RecordingOp, derive_plan, merge_plans
from ..sdg.slicing import Query, backward_slice
from .catalog import Scenario


@dataclass
class RoundReport:
    index: int
    query: list[str]
    depth: Optional[int]
    plan_ops: int
    manifested: bool
    attempts: int
    events: int
    needs_next: list[str]
    query_in_previous_marks: Optional[bool]


@dataclass
class SessionReport:
    scenario: str
    rounds: list[RoundReport]
    occurrences: int
    final_graph: ProvenanceGraph
    final_store: TraceStore
    final_plan: InstrumentationPlan
    stopped_early: bool

    @property
    def rounds_executed(self) -> int:
        return len(self.rounds)

    def canonical(self) -> dict:
        return canonical_form(self.final_graph)

    def summary(self) -> dict:
        return {
            "scenario": self.scenario,
            "rounds": self.rounds_executed,
            "occurrences": self.occurrences,
            "frontierMatched": [r.query_in_previous_marks for r in self.rounds],
            "vertices": len(self.final_graph.vertices),
            "edges": len(self.final_graph.edges),
        }


def _parse_query(sdg: Sdg, texts: list[str], depth) -> Query:
    nodes = tuple(find_node(sdg, t) for t in texts)
    return Query(nodes, depth)


def run_debug_session(scenario: Scenario,
                      depths: Optional[list[Optional[int]]] = None,
                      rounds_override: Optional[list[dict]] = None
                      ) -> SessionReport:
    program, info, facts, sdg = scenario.build()
    workload = scenario.workload()
    rounds = rounds_override if rounds_override is not None else scenario.rounds
    root_query: Optional[Query] = None
    retained: frozenset[RecordingOp] = frozenset()
    reports: list[RoundReport] = []
    prev_marks: Optional[set[str]] = None
    store: Optional[TraceStore] = None
    plan: Optional[InstrumentationPlan] = None
    graph: Optional[ProvenanceGraph] = None
    occurrences = 1  # the manifestation that started the investigation
    stopped_early = False

    for i, spec in enumerate(rounds):
        depth = spec.get("depth")
        if depths is not None and i < len(depths):
            depth = depths[i]
        query = _parse_query(sdg, spec["query"], depth)
        if root_query is None:
            root_query = Query(query.nodes, depth)
        in_prev = None
        if prev_marks is not None:
            in_prev = all(str(n) in prev_marks for n in query.nodes)
        slc = backward_slice(sdg, query)
        plan = merge_plans(derive_plan(sdg, slc, program), retained)
        retained = frozenset(plan.ops)
        ip = InstrumentedProgram(program, plan)

        manifested = False
        attempts = 0
        result: Optional[RunResult] = None
        for attempt in range(scenario.occurrence_budget):
            attempts += 1
            cfg = RuntimeConfig(seed=scenario.seed + attempt)
            result = Engine(ip, workload, cfg, info).run()
            if result.manifested:
                manifested = True
                break
        if not manifested:
            raise RuntimeError(
                f"{scenario.name}: bug did not manifest within "
                f"{scenario.occurrence_budget} runs of round {i + 1}")
        occurrences += 1
        store = TraceStore(result.traces)
        store.ingest(result.events)
        graph = build_provenance(store, root_query, plan, sdg)
        marks = sorted({m for v in graph.vertices.values() for m in v.needs_next})
        reports.append(RoundReport(
            index=i + 1, query=[str(n) for n in query.nodes], depth=depth,
            plan_ops=len(plan.ops), manifested=manifested, attempts=attempts,
            events=len(result.events), needs_next=marks,
            query_in_previous_marks=in_prev))
        prev_marks = set(marks)
        if not marks:
            stopped_early = i + 1 < len(rounds)
            break

    assert store is not None and plan is not None and graph is not None
    return SessionReport(scenario=scenario.name, rounds=reports,
                         occurrences=occurrences, final_graph=graph,
                         final_store=store, final_plan=plan,
                         stopped_early=stopped_early)


def run_manifest(scenario: Scenario, plan: InstrumentationPlan,
                 result: RunResult, seed: int) -> dict:
    program, _, _, _ = scenario.build()
    from ..lang.printer import program_to_json
    return {
        "scenario": scenario.name,
        "seed": seed,
        "planHash": content_hash(plan_to_json(plan)),
        "programHash": content_hash(program_to_json(program)),
        "checkFailures": len(result.check_failures),
        "stats": result.stats,
    }


# ----------------------------------------------------------------- oracle

def full_plan(sdg: Sdg) -> InstrumentationPlan:
    """Record everything: the oracle superset any real plan is compared to."""
    program = sdg.facts.program
    ops: set[RecordingOp] = set()
    for n in sdg.nodes:
        ops.add(RecordingOp("RecordValue", node=n))
        if n in sdg.shared_nodes:
            for k in ("RecordBase", "RecordWitness", "RecordInterval"):
                ops.add(RecordingOp(k, node=n))
    from ..lang.ir import LoopHead, RpcCall
    for fn in program.functions():
        for s in fn.stmts.values():
            if isinstance(s, LoopHead):
                ops.add(RecordingOp("RecordIteration", stmt=s.sid))
            elif isinstance(s, RpcCall):
                from ..lang.ir import StmtId
                ops.add(RecordingOp("SetCaller", stmt=s.sid))
                ops.add(RecordingOp("GetCaller",
                                    stmt=StmtId(s.component, s.func, 0)))
        if fn.entry or fn.synthetic:
            key = (fn.component, fn.name)
            ops.add(RecordingOp("StartTrace", function=key))
            ops.add(RecordingOp("EndTrace", function=key))
    return InstrumentationPlan(ops=sorted(ops, key=RecordingOp.sort_key))


def oracle_run(scenario: Scenario, seed: int,
               plan: Optional[InstrumentationPlan] = None) -> RunResult:
    """Deterministic run with full shadow recording (true writer per read,
    access instants, value mirror). Uses the full plan unless given one."""
    program, info, facts, sdg = scenario.build()
    if plan is None:
        plan = full_plan(sdg)
    ip = InstrumentedProgram(program, plan)
    cfg = RuntimeConfig(seed=seed, mode="deterministic")
    return Engine(ip, scenario.workload(), cfg, info, oracle=True).run()
