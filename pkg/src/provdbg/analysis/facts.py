"""Analysis driver: one call computes every dependency fact the SDG needs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional

from ..lang.ir import AccessNode, Program, StmtId
from ..lang.nodes import enumerate_access_nodes
from ..lang.validate import ProgramInfo, require_valid
from .callgraph import CallGraph, build_call_graph
from .cfg import Cfg, build_cfg, control_dependent_stmts, post_dominators
from .escape import thread_escape
from .libeffects import boundary_star_nodes, library_effect_nodes, library_overlap
from .pointsto import AllocSite, PointsToFacts, points_to


@dataclass
class AnalysisFacts:
    program: Program
    info: ProgramInfo
    callgraph: CallGraph
    cfgs: dict[tuple[str, str], Cfg]
    pdoms: dict[tuple[str, str], dict[int, set[int]]]
    cdep_stmts: dict[tuple[str, str], set[tuple[int, int]]]
    pts: PointsToFacts
    escaped: set[AllocSite]
    plain_nodes: list[AccessNode]
    lib_nodes: list[AccessNode]
    boundary_nodes: list[AccessNode]
    overlap: set[frozenset]
    warnings: list[str] = field(default_factory=list)

    @property
    def nodes(self) -> list[AccessNode]:
        return self.plain_nodes + self.lib_nodes + self.boundary_nodes


def analyze_program(program: Program, info: Optional[ProgramInfo] = None) -> AnalysisFacts:
    if info is None:
        info = require_valid(program)
    callgraph = build_call_graph(program)
    cfgs, pdoms, cdeps = {}, {}, {}
    for fn in program.functions():
        key = (fn.component, fn.name)
        cfg = build_cfg(fn)
        cfgs[key] = cfg
        pdoms[key] = post_dominators(cfg)
        cdeps[key] = control_dependent_stmts(cfg, pdoms[key])
    pts = points_to(program, info)
    escaped = thread_escape(program, info, pts)
    pts.shared = escaped
    plain = enumerate_access_nodes(program, info)
    lib = library_effect_nodes(program, info)
    boundary = boundary_star_nodes(program, info, pts)
    overlap, warnings = library_overlap(program, info, pts, lib + boundary)
    return AnalysisFacts(program=program, info=info, callgraph=callgraph,
                         cfgs=cfgs, pdoms=pdoms, cdep_stmts=cdeps, pts=pts,
                         escaped=escaped, plain_nodes=plain, lib_nodes=lib,
                         boundary_nodes=boundary, overlap=overlap,
                         warnings=warnings)


def export_relations(facts: AnalysisFacts) -> str:
    """Newline-delimited CSV relations for debugging the analysis."""
    buf = io.StringIO()
    w = csv.writer(buf)
    for sid, (comp, fn) in sorted(facts.callgraph.edges, key=lambda e: (str(e[0]), e[1])):
        w.writerow(["call_edge", str(sid), f"{comp}.{fn}"])
    for call, entry in sorted(facts.callgraph.rpc_pairs, key=lambda e: str(e[0])):
        w.writerow(["rpc_pair", str(call), str(entry)])
    for key in sorted(facts.cdep_stmts):
        for s, b in sorted(facts.cdep_stmts[key]):
            w.writerow(["cdep", f"{key[0]}/{key[1]}/{s}", f"{key[0]}/{key[1]}/{b}"])
    for slot in sorted(facts.pts.pts, key=str):
        for site in sorted(facts.pts.pts[slot], key=str):
            w.writerow(["pts", str(slot), str(site)])
    for site in sorted(facts.escaped, key=str):
        w.writerow(["escaped", str(site)])
    for pair in sorted(facts.overlap, key=lambda p: sorted(map(str, p))):
        items = sorted(map(str, pair))
        w.writerow(["overlap", items[0], items[-1]])
    for n in facts.nodes:
        w.writerow(["node", str(n)])
    return buf.getvalue()
