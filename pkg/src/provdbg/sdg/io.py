"""Canonical JSON and DOT exports for SDGs, slices and plans."""

from __future__ import annotations

import json
from typing import Optional

from ..lang.ir import (AccessNode, StmtId, parse_node_text, resolve_aml_text)
from .graph import Edge, Sdg
from .plan import InstrumentationPlan, RecordingOp
from .slicing import Slice


def node_text(n: AccessNode) -> str:
    return str(n)


def find_node(sdg: Sdg, text: str) -> AccessNode:
    sid, typ, amltext = parse_node_text(text)
    node = AccessNode(sid, typ, resolve_aml_text(sid, amltext))
    if not sdg.has_node(node):
        raise KeyError(f"no such node in SDG: {text}")
    return node


def sdg_to_json(sdg: Sdg) -> dict:
    return {
        "nodes": [str(n) for n in sdg.nodes],
        "edges": [
            {
                "from": str(e.src),
                "to": str(e.dst),
                "kind": e.export_kind,
                **({"via": e.kind} if e.shared else {}),
                **({"rpc": True} if e.rpc else {}),
            }
            for e in sdg.edges
        ],
        "nondet": sorted(str(n) for n in sdg.nondet_nodes),
        "controlReads": sorted(str(n) for n in sdg.control_reads),
        "sharedNodes": sorted(str(n) for n in sdg.shared_nodes),
    }


def sdg_to_dot(sdg: Sdg, focus: Optional[set[AccessNode]] = None) -> str:
    color = {"Control": "gray", "IntraStmt": "black", "LocalData": "blue",
             "InterProc": "purple", "HeapApp": "darkgreen", "HeapLib": "olive",
             "SharedState": "red"}
    lines = ["digraph sdg {", '  node [shape=box, fontsize=9];']
    nodes = sdg.nodes if focus is None else [n for n in sdg.nodes if n in focus]
    shown = set(nodes)
    for n in nodes:
        lines.append(f'  "{n}";')
    for e in sdg.edges:
        if e.src in shown and e.dst in shown:
            lines.append(f'  "{e.src}" -> "{e.dst}" '
                         f'[color={color[e.export_kind]}, label="{e.export_kind}", fontsize=7];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def neighborhood(sdg: Sdg, focus: AccessNode, radius: int) -> dict:
    """Undirected breadth-first neighborhood for the console's SDG browser."""
    seen = {focus}
    frontier = [focus]
    for _ in range(radius):
        nxt = []
        for e in sdg.edges:
            if e.src in seen and e.dst not in seen:
                nxt.append(e.dst)
            elif e.dst in seen and e.src not in seen:
                nxt.append(e.src)
        for n in nxt:
            seen.add(n)
        frontier = nxt
    sub = [n for n in sdg.nodes if n in seen]
    return {
        "focus": str(focus),
        "radius": radius,
        "nodes": [str(n) for n in sub],
        "edges": [{"from": str(e.src), "to": str(e.dst), "kind": e.export_kind}
                  for e in sdg.edges if e.src in seen and e.dst in seen],
    }


def slice_to_json(slc: Slice) -> dict:
    return {
        "query": [str(n) for n in slc.query.nodes],
        "depth": slc.query.depth,
        "selected": [str(n) for n in slc.selected],
        "depths": {str(n): d for n, d in sorted(slc.depths.items(),
                                                key=lambda kv: kv[0].sort_key())},
        "frontier": [str(n) for n in slc.frontier],
    }


def op_to_json(op: RecordingOp) -> dict:
    d: dict = {"op": op.op}
    if op.node is not None:
        d["node"] = str(op.node)
    if op.stmt is not None:
        d["stmt"] = str(op.stmt)
    if op.function is not None:
        d["component"], d["function"] = op.function
    return d


def op_from_json(d: dict) -> RecordingOp:
    node = stmt = fn = None
    if "node" in d:
        sid, typ, amltext = parse_node_text(d["node"])
        node = AccessNode(sid, typ, resolve_aml_text(sid, amltext))
    if "stmt" in d:
        parts = d["stmt"].split("/")
        stmt = StmtId(parts[0], parts[1], int(parts[2]))
    if "component" in d:
        fn = (d["component"], d["function"])
    return RecordingOp(d["op"], node=node, stmt=stmt, function=fn)


def plan_to_json(plan: InstrumentationPlan) -> dict:
    return {
        "ops": [op_to_json(op) for op in plan.ops],
        "retained": [op_to_json(op) for op in
                     sorted(plan.retained, key=RecordingOp.sort_key)],
    }


def plan_from_json(doc: dict) -> InstrumentationPlan:
    ops = [op_from_json(d) for d in doc["ops"]]
    retained = frozenset(op_from_json(d) for d in doc.get("retained", []))
    return InstrumentationPlan(ops=ops, retained=retained)


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def plan_summary(plan: InstrumentationPlan) -> dict:
    counts: dict[str, int] = {}
    for op in plan.ops:
        counts[op.op] = counts.get(op.op, 0) + 1
    return {
        "opCounts": dict(sorted(counts.items())),
        "totalOps": len(plan.ops),
        "statementsTouched": sorted(str(s) for s in plan.stmts_touched()),
    }
