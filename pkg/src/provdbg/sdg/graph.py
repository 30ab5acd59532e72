"""System dependency graph assembly from analysis facts.

Every edge points from a node to a node it depends on, so backward slicing
follows edge direction. Data edges pair one W node with one R node; edges
whose accesses may touch thread-escaping state are marked shared and export
as SharedState (base kind kept in `via`).
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from ..analysis.facts import AnalysisFacts
from ..lang.ir import (AccessNode, Branch, Check, Global, LibCall, Local,
                       LoopHead, READ, Ref, Return, RpcCall, RpcEntry, STAR,
                       StmtId, Var, WRITE, aml_base)

CONTROL = "Control"
INTRA = "IntraStmt"
LOCAL = "LocalData"
INTERPROC = "InterProc"
HEAP_APP = "HeapApp"
HEAP_LIB = "HeapLib"
SHARED = "SharedState"


@dataclass(frozen=True)
class Edge:
    src: AccessNode
    dst: AccessNode
    kind: str
    shared: bool = False
    rpc: bool = False

    @property
    def export_kind(self) -> str:
        return SHARED if self.shared else self.kind

    def sort_key(self) -> tuple:
        return (self.src.sort_key(), self.dst.sort_key(), self.kind)


@dataclass
class Sdg:
    facts: AnalysisFacts
    nodes: list[AccessNode]
    edges: list[Edge]
    out: dict[AccessNode, list[Edge]] = field(default_factory=dict)
    nondet_nodes: set[AccessNode] = field(default_factory=set)
    control_reads: set[AccessNode] = field(default_factory=set)
    shared_nodes: set[AccessNode] = field(default_factory=set)

    def has_node(self, n: AccessNode) -> bool:
        return n in self._node_set

    def __post_init__(self) -> None:
        self._node_set = set(self.nodes)
        by_src: dict[AccessNode, list[Edge]] = defaultdict(list)
        for e in self.edges:
            by_src[e.src].append(e)
        for k in by_src:
            by_src[k].sort(key=Edge.sort_key)
        self.out = dict(by_src)

    def deps_of(self, n: AccessNode) -> list[Edge]:
        return self.out.get(n, [])


def _reaching_defs(fn, cfg, nodes_at) -> dict[int, dict[str, set[int]]]:
    """Per statement: local name -> ordinals of writes reaching its entry."""
    defs_at: dict[int, set[str]] = {}
    for o in fn.order:
        defs_at[o] = {n.aml.name for n in nodes_at.get(o, [])
                      if n.type == WRITE and isinstance(n.aml, Local)}
    in_sets: dict[int, dict[str, set[int]]] = {o: {} for o in fn.order}
    changed = True
    while changed:
        changed = False
        for o in fn.order:
            merged: dict[str, set[int]] = {}
            for p in cfg.pred.get(o, []):
                if p < 0:
                    continue
                out_p: dict[str, set[int]] = {}
                for var, ds in in_sets[p].items():
                    out_p[var] = {p} if var in defs_at[p] else set(ds)
                for var in defs_at[p]:
                    out_p[var] = {p}
                for var, ds in out_p.items():
                    merged.setdefault(var, set()).update(ds)
            if merged != in_sets[o]:
                in_sets[o] = merged
                changed = True
    return in_sets


def build_sdg(facts: AnalysisFacts) -> Sdg:
    program = facts.program
    pts = facts.pts
    nodes = facts.nodes
    nodes_at: dict[StmtId, list[AccessNode]] = defaultdict(list)
    for n in nodes:
        nodes_at[n.sid].append(n)

    def node_shared(n: AccessNode) -> bool:
        if isinstance(n.aml, Global):
            return True
        if isinstance(n.aml, Ref):
            return bool(pts.of(n.aml.base) & facts.escaped)
        return False

    edges: set[Edge] = set()

    def add(src: AccessNode, dst: AccessNode, kind: str,
            shared: Optional[bool] = None, rpc: bool = False) -> None:
        if shared is None:
            shared = False
        edges.add(Edge(src, dst, kind, shared, rpc))

    # intra-statement: each W depends on each R of the same statement
    for sid, ns in nodes_at.items():
        ws = [n for n in ns if n.type == WRITE]
        rs = [n for n in ns if n.type == READ]
        for w in ws:
            for r in rs:
                add(w, r, INTRA)

    # control: nodes in controlled regions depend on the branch's cond reads
    cond_reads: dict[StmtId, list[AccessNode]] = {}
    for fn in program.functions():
        for o in fn.order:
            s = fn.stmts[o]
            if isinstance(s, (Branch, LoopHead)):
                cond_reads[s.sid] = [n for n in nodes_at.get(s.sid, [])
                                     if n.type == READ]
    for fn in program.functions():
        key = (fn.component, fn.name)
        for s_ord, b_ord in facts.cdep_stmts[key]:
            b_sid = StmtId(fn.component, fn.name, b_ord)
            for n in nodes_at.get(StmtId(fn.component, fn.name, s_ord), []):
                for c in cond_reads.get(b_sid, []):
                    add(n, c, CONTROL)
    # inter-procedural control: callee nodes depend on callsite's governors
    for cs_sid, (tcomp, tfn) in facts.callgraph.edges:
        caller_key = (cs_sid.component, cs_sid.function)
        governors = [b for s, b in facts.cdep_stmts[caller_key]
                     if s == cs_sid.ordinal]
        if not governors:
            continue
        callee = program.components[tcomp].functions[tfn]
        for o in callee.order:
            for n in nodes_at.get(StmtId(tcomp, tfn, o), []):
                for b_ord in governors:
                    b_sid = StmtId(cs_sid.component, cs_sid.function, b_ord)
                    for c in cond_reads.get(b_sid, []):
                        add(n, c, CONTROL)

    # local data: reads depend on reaching writes of the same Local
    for fn in program.functions():
        cfg = facts.cfgs[(fn.component, fn.name)]
        per_stmt = {o: nodes_at.get(StmtId(fn.component, fn.name, o), [])
                    for o in fn.order}
        reach = _reaching_defs(fn, cfg, per_stmt)
        for o in fn.order:
            for r in per_stmt[o]:
                if r.type == READ and isinstance(r.aml, Local):
                    for d in reach[o].get(r.aml.name, ()):
                        if d == o:
                            continue  # cross-iteration self pair; own nodes cover it
                        w = AccessNode(StmtId(fn.component, fn.name, d),
                                       WRITE, r.aml)
                        add(r, w, LOCAL)

    # component-global scalars/pointers: flow-insensitive all pairs, shared
    by_global: dict[Global, dict[str, list[AccessNode]]] = defaultdict(
        lambda: {READ: [], WRITE: []})
    for n in nodes:
        if isinstance(n.aml, Global):
            by_global[n.aml][n.type].append(n)
    for g, d in by_global.items():
        for r in d[READ]:
            for w in d[WRITE]:
                if r.sid != w.sid:
                    add(r, w, LOCAL, shared=True)

    # inter-procedural: formals/actuals and returns/receivers
    sig = {}
    for fn in program.functions():
        sig[(fn.component, fn.name)] = fn
    for cs_sid, (tcomp, tfn) in facts.callgraph.edges:
        callee = sig[(tcomp, tfn)]
        cs_nodes = nodes_at.get(cs_sid, [])
        cs_stmt = program.stmt(cs_sid)
        is_rpc = isinstance(cs_stmt, RpcCall)
        entry_sid = StmtId(tcomp, tfn, 0)
        # formals: (W, p_i)@entry depends on (R, actual_i)@callsite
        for (pname, _), a in zip(callee.params, cs_stmt.args):
            if not isinstance(a, Var):
                continue
            for w in nodes_at.get(entry_sid, []):
                if w.type == WRITE and _aml_name(w.aml) == pname:
                    for r in cs_nodes:
                        if r.type == READ and _matches_arg(r.aml, w.aml, a.name):
                            add(w, r, INTERPROC, rpc=is_rpc)
        # returns: (W, target)@callsite depends on (R, retvar)@return
        if getattr(cs_stmt, "target", None):
            for o in callee.order:
                rstmt = callee.stmts[o]
                if not isinstance(rstmt, Return):
                    continue
                for r in nodes_at.get(StmtId(tcomp, tfn, o), []):
                    if r.type != READ:
                        continue
                    for w in cs_nodes:
                        if w.type == WRITE and _star_match(w.aml, r.aml,
                                                          cs_stmt.target):
                            add(w, r, INTERPROC, rpc=is_rpc)

    # heap (application): same field, may-aliasing bases
    field_nodes: dict[str, dict[str, list[AccessNode]]] = defaultdict(
        lambda: {READ: [], WRITE: []})
    for n in nodes:
        if isinstance(n.aml, Ref) and n.aml.field != STAR:
            field_nodes[n.aml.field][n.type].append(n)
    for fieldname, d in field_nodes.items():
        for r in d[READ]:
            for w in d[WRITE]:
                if r.sid == w.sid:
                    continue
                common = pts.of(r.aml.base) & pts.of(w.aml.base)
                if common:
                    add(r, w, HEAP_APP, shared=bool(common & facts.escaped))

    # heap (library): overlapping (s, *) pairs. Library calls touch only the
    # structure's own slots, so library/library pairs use may-alias plus the
    # per-function indirect rules; (de)serialization stars cover the whole
    # reachable object graph, so boundary pairs use reach intersection.
    star_nodes = [n for n in nodes if isinstance(n.aml, Ref) and n.aml.field == STAR]
    boundary = set(facts.boundary_nodes)
    overlap = facts.overlap

    def star_overlap(r: AccessNode, w: AccessNode) -> bool:
        # Marshal reads are shallow (immediate cells of the shipped value);
        # unmarshal writes are deep (they materialize the whole graph).
        a, b = r.aml.base, w.aml.base
        if a == b:
            return bool(pts.of(a))
        r_bound, w_bound = r in boundary, w in boundary
        if not r_bound and not w_bound:
            return frozenset((a, b)) in overlap
        if w_bound:
            return bool(pts.of(a) & pts.reach(b))
        return bool(pts.of(a) & pts.of(b)) or frozenset((a, b)) in overlap

    for r in star_nodes:
        if r.type != READ:
            continue
        for w in star_nodes:
            if w.type != WRITE or r.sid == w.sid:
                continue
            if star_overlap(r, w):
                common = pts.of(r.aml.base) & pts.of(w.aml.base)
                add(r, w, HEAP_LIB, shared=bool(common & facts.escaped))

    # boundary (de)serialization stars against concrete field accesses:
    # an unmarshal write covers every cell it materializes, a marshal read
    # touches every cell it ships
    field_ns = [n for n in nodes if isinstance(n.aml, Ref) and n.aml.field != STAR]
    for s in star_nodes:
        if s not in boundary:
            continue
        if s.type == WRITE:
            s_reach = pts.reach(s.aml.base)
            for r in field_ns:
                if r.type == READ and r.sid != s.sid and (pts.of(r.aml.base) & s_reach):
                    add(r, s, HEAP_LIB)
        else:
            s_pts = pts.of(s.aml.base)
            for w in field_ns:
                if w.type == WRITE and w.sid != s.sid and (pts.of(w.aml.base) & s_pts):
                    add(s, w, HEAP_LIB)

    # classify nodes for plan derivation
    nondet: set[AccessNode] = set()
    control_rs: set[AccessNode] = set()
    shared_ns: set[AccessNode] = set()
    for n in nodes:
        stmt = program.stmt(n.sid)
        fn = program.function(n.sid.component, n.sid.function)
        if node_shared(n):
            shared_ns.add(n)
        if n.type == WRITE:
            if isinstance(stmt, RpcEntry) and fn.entry:
                nondet.add(n)  # external/RPC input boundary
            elif isinstance(stmt, RpcCall):
                nondet.add(n)  # response receiver / deserialized structure
            elif isinstance(stmt, LibCall):
                spec = program.libspecs.get(stmt.spec_key or stmt.method)
                if spec is not None and spec.nondet and isinstance(n.aml, Local):
                    nondet.add(n)
        elif isinstance(stmt, (Branch, LoopHead, Check)):
            control_rs.add(n)

    sdg = Sdg(facts=facts,
              nodes=sorted(nodes, key=AccessNode.sort_key),
              edges=sorted(edges, key=Edge.sort_key))
    sdg.nondet_nodes = nondet
    sdg.control_reads = control_rs
    sdg.shared_nodes = shared_ns
    return sdg


def _aml_name(aml) -> str:
    base = aml_base(aml)
    return base.name


def _matches_arg(r_aml, w_aml, arg_name: str) -> bool:
    """Pair (R, arg)/(R, (arg,*)) at the callsite with (W, p)/(W, (p,*))."""
    r_star = isinstance(r_aml, Ref) and r_aml.field == STAR
    w_star = isinstance(w_aml, Ref) and w_aml.field == STAR
    if r_star != w_star:
        return False
    return _aml_name(r_aml) == arg_name


def _star_match(w_aml, r_aml, target_name: str) -> bool:
    w_star = isinstance(w_aml, Ref) and w_aml.field == STAR
    r_star = isinstance(r_aml, Ref) and r_aml.field == STAR
    if w_star != r_star:
        return False
    return _aml_name(w_aml) == target_name
