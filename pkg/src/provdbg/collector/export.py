"""Provenance graph exports: JSON, DOT, import, canonical form."""

from __future__ import annotations

import json

from .provenance import PEdge, ProvenanceGraph, Vertex


def graph_to_json(g: ProvenanceGraph) -> dict:
    return {
        "vertices": [
            {
                "id": v.vid,
                "node": v.node,
                "trace": v.trace_id,
                "thread": v.thread_id,
                "seq": v.seq,
                "occurrence": v.occurrence,
                "role": list(v.role),
                **({"value": v.value} if v.has_value else {}),
                **({"witness": v.witness} if v.witness is not None else {}),
                **({"base": v.base} if v.base is not None else {}),
                **({"interval": list(v.interval)} if v.interval else {}),
                **({"iteration": v.iteration} if v.iteration is not None else {}),
                **({"needsNextRound": sorted(v.needs_next)} if v.needs_next else {}),
            }
            for v in sorted(g.vertices.values(), key=lambda v: v.vid)
        ],
        "edges": [
            {
                "from": e.src,
                "to": e.dst,
                "kind": e.kind,
                **({"status": e.status} if e.status else {}),
                **({"candidates": sorted(e.candidates)} if e.candidates else {}),
                **({"note": e.note} if e.note else {}),
            }
            for e in g.sorted_edges()
        ],
        "diagnostics": sorted(g.diagnostics),
    }


def graph_from_json(doc: dict) -> ProvenanceGraph:
    g = ProvenanceGraph()
    for vd in doc["vertices"]:
        v = Vertex(vid=vd["id"], node=vd["node"], trace_id=vd["trace"],
                   thread_id=vd["thread"], seq=vd["seq"],
                   occurrence=vd["occurrence"], role=tuple(vd["role"]),
                   value=vd.get("value"), has_value="value" in vd,
                   witness=vd.get("witness"), base=vd.get("base"),
                   interval=tuple(vd["interval"]) if "interval" in vd else None,
                   iteration=vd.get("iteration"),
                   needs_next=list(vd.get("needsNextRound", [])))
        g.vertices[v.vid] = v
    for ed in doc["edges"]:
        g.edges.append(PEdge(src=ed["from"], dst=ed["to"], kind=ed["kind"],
                             status=ed.get("status"),
                             candidates=list(ed.get("candidates", [])),
                             note=dict(ed.get("note", {}))))
    g.diagnostics = list(doc.get("diagnostics", []))
    return g


def canonical_form(g: ProvenanceGraph) -> dict:
    """Isomorphism-stable form: vertex labels (node, trace role) and the edge
    multiset over labels; occurrence indices and raw ids are dropped."""
    label = {v.vid: [v.node, list(v.role)] for v in g.vertices.values()}
    verts = sorted(json.dumps(l) for l in label.values())
    edges = sorted(
        json.dumps([label[e.src], label[e.dst], e.kind, e.status or ""])
        for e in g.edges)
    marks = sorted(json.dumps([label[v.vid], sorted(v.needs_next)])
                   for v in g.vertices.values() if v.needs_next)
    return {"vertices": verts, "edges": edges, "needsNext": marks}


def graph_to_dot(g: ProvenanceGraph) -> str:
    palette = ["lightblue", "lightyellow", "lightpink", "lightgreen",
               "lavender", "mistyrose", "honeydew", "aliceblue"]
    roles = sorted({v.role for v in g.vertices.values()})
    color = {role: palette[i % len(palette)] for i, role in enumerate(roles)}
    lines = ["digraph provenance {", "  rankdir=BT;",
             '  node [shape=box, fontsize=9, style=filled];']
    by_role: dict = {}
    for v in g.vertices.values():
        by_role.setdefault(v.role, []).append(v)
    for i, role in enumerate(roles):
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f'    label="{role[0]} ({role[1]})";')
        for v in sorted(by_role[role], key=lambda v: v.vid):
            extra = ""
            if v.has_value:
                text = json.dumps(v.value)
                extra = "\\n= " + text[:40].replace('"', "'")
            mark = " [next?]" if v.needs_next else ""
            lines.append(
                f'    "{v.vid}" [label="{v.node}{extra}{mark}", '
                f'fillcolor={color[role]}];')
        lines.append("  }")
    style = {"ControlFlow": "color=gray, style=dashed",
             "IntraTrace": "color=black",
             "InterComponent": "color=purple, penwidth=2",
             "SharedState": "color=red"}
    for e in g.sorted_edges():
        attrs = style[e.kind]
        if e.status == "ambiguous":
            attrs += ", style=dotted, penwidth=2"
        label = e.status or ""
        lines.append(f'  "{e.src}" -> "{e.dst}" [{attrs}, label="{label}", fontsize=7];')
    lines.append("}")
    return "\n".join(lines) + "\n"
