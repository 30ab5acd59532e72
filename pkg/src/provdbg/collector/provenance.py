"""Provenance graph construction from recorded events.

Vertices are access records (node occurrence within a trace). From each
vertex the walk goes backward: shared reads resolve their writer through
interval/witness matching (CIH); everything else follows SDG data edges,
passing through un-instrumented nodes until a recorded node is reached.
Crossing an RPC InterProc edge switches trace context through the stitched
caller ids and marks the resulting edge InterComponent. Where coverage ends
at a node worth querying, the vertex is flagged needs-next-round.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..lang.ir import LoopHead, StmtId
from ..sdg.graph import CONTROL, Sdg
from ..sdg.plan import InstrumentationPlan
from ..sdg.slicing import Query
from .dataflow import WriterCandidates, writer_candidates
from .stitch import Stitched, stitch, trace_role
from .store import AccessRecord, TraceStore


@dataclass
class Vertex:
    vid: str
    node: str
    trace_id: int
    thread_id: int
    seq: int
    occurrence: int
    role: tuple
    value: object = None
    has_value: bool = False
    witness: object = None
    base: Optional[int] = None
    interval: Optional[tuple] = None
    iteration: Optional[int] = None
    needs_next: list[str] = field(default_factory=list)

    def label(self) -> tuple:
        return (self.node, self.role)


@dataclass
class PEdge:
    src: str
    dst: str
    kind: str                       # ControlFlow | IntraTrace | InterComponent | SharedState
    status: Optional[str] = None    # resolved | ambiguous | preexisting
    candidates: list[str] = field(default_factory=list)
    note: dict = field(default_factory=dict)


@dataclass
class ProvenanceGraph:
    vertices: dict[str, Vertex] = field(default_factory=dict)
    edges: list[PEdge] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def sorted_edges(self) -> list[PEdge]:
        return sorted(self.edges, key=lambda e: (e.src, e.dst, e.kind,
                                                 e.status or ""))


@dataclass
class _Ctx:
    trace_id: int
    thread_id: int
    before: float  # records must start before this seq


class _Builder:
    def __init__(self, store: TraceStore, query: Query,
                 plan: InstrumentationPlan, sdg: Sdg):
        self.store = store
        self.query = query
        self.plan = plan
        self.sdg = sdg
        self.program = sdg.facts.program
        self.stitched: Stitched = stitch(store)
        self.graph = ProvenanceGraph()
        self.planned = {str(op.node) for op in plan.ops if op.node is not None}
        self.covered = {n for n in self.planned if store.records_at(n)}
        self.seen: set[tuple] = set()
        self.queue: deque[AccessRecord] = deque()
        self._edge_keys: set = set()

    # ------------------------------------------------------------- vertices
    def vertex(self, r: AccessRecord) -> Vertex:
        vid = f"{r.node}@{r.trace_id}/{r.thread_id}/{r.seq_first}"
        if vid in self.graph.vertices:
            return self.graph.vertices[vid]
        same = [x for x in self.store.records_at(r.node)
                if x.trace_id == r.trace_id]
        same.sort(key=lambda x: (x.thread_id, x.seq_first))
        occ = same.index(r)
        v = Vertex(vid=vid, node=r.node, trace_id=r.trace_id,
                   thread_id=r.thread_id, seq=r.seq_first, occurrence=occ,
                   role=trace_role(self.store, self.stitched, r.trace_id),
                   value=r.value, has_value=r.has_value, witness=r.witness,
                   base=r.base,
                   interval=(r.ts_start, r.ts_end) if r.ts_start is not None else None,
                   iteration=self._iteration_of(r))
        self.graph.vertices[vid] = v
        return v

    def _pre_vertex(self, read: AccessRecord) -> Vertex:
        import json
        wit = json.dumps(read.witness, sort_keys=True) if read.has_witness else "-"
        vid = f"pre:{read.base}/{wit}"
        if vid not in self.graph.vertices:
            self.graph.vertices[vid] = Vertex(
                vid=vid, node="PreexistingState", trace_id=0, thread_id=0,
                seq=0, occurrence=0, role=("PreexistingState", "synthetic", None))
        return self.graph.vertices[vid]

    def _iteration_of(self, r: AccessRecord) -> Optional[int]:
        sid, _, _ = _split_node(r.node)
        fn = self.program.function(sid.component, sid.function)
        from ..analysis.cfg import lexical_parents
        parents = lexical_parents(fn)
        o = sid.ordinal
        while o in parents:
            o = parents[o]
            if isinstance(fn.stmts[o], LoopHead):
                loop = str(StmtId(sid.component, sid.function, o))
                it = self.store.iteration_at(r.trace_id, r.thread_id,
                                             r.seq_first, loop)
                if it is not None:
                    return it
        return None

    def _edge(self, e: PEdge) -> None:
        k = (e.src, e.dst, e.kind, e.status)
        if k not in self._edge_keys:
            self._edge_keys.add(k)
            self.graph.edges.append(e)

    # ----------------------------------------------------------------- walk
    def build(self) -> ProvenanceGraph:
        roots = []
        unrecorded = []
        for qn in self.query.nodes:
            recs = self.store.records_at(str(qn))
            if not recs:
                unrecorded.append(qn)
                self.graph.diagnostics.append(
                    f"query node has no recorded events: {qn}")
            roots.extend(recs)
        for r in sorted(roots, key=AccessRecord.key.fget):
            self.enqueue(r)
        for qn in unrecorded:
            self._query_anchor(qn)
        while self.queue:
            r = self.queue.popleft()
            self.visit(r)
        return self.graph

    def _query_anchor(self, qn) -> None:
        """Root the walk at the nearest recorded dependencies of an
        un-instrumented query node (e.g. a serialization read)."""
        node = _node_of(self.sdg, str(qn))
        if node is None:
            return
        vid = f"query:{qn}"
        v = Vertex(vid=vid, node=str(qn), trace_id=0, thread_id=0, seq=0,
                   occurrence=0, role=("query", "anchor", None))
        self.graph.vertices[vid] = v
        work = deque()
        visited = set()
        for e in self.sdg.deps_of(node):
            if not e.shared:
                work.append((e.dst, e.kind == CONTROL))
        while work:
            m, via_control = work.popleft()
            if (str(m), via_control) in visited:
                continue
            visited.add((str(m), via_control))
            recs = self.store.records_at(str(m))
            if recs:
                kind = "ControlFlow" if via_control else "IntraTrace"
                for w in recs:
                    self.enqueue(w)
                    self._edge(PEdge(src=vid, dst=self.vertex(w).vid, kind=kind))
                continue
            if str(m) not in self.planned and self._evidence_worthy(m):
                if str(m) not in v.needs_next:
                    v.needs_next.append(str(m))
            for e in self.sdg.deps_of(m):
                if not e.shared:
                    work.append((e.dst, via_control or e.kind == CONTROL))

    def enqueue(self, r: AccessRecord) -> None:
        if r.key not in self.seen:
            self.seen.add(r.key)
            self.vertex(r)
            self.queue.append(r)

    def visit(self, r: AccessRecord) -> None:
        v = self.vertex(r)
        self._control_edges(r, v)
        is_shared_read = (r.type == "R" and r.base is not None
                          and r.ts_start is not None)
        if is_shared_read:
            self._shared_edges(r, v)
        else:
            self._static_walk(r, v)

    def _control_edges(self, r: AccessRecord, v: Vertex) -> None:
        node = _node_of(self.sdg, r.node)
        if node is None:
            return
        for e in self.sdg.deps_of(node):
            if e.kind != CONTROL:
                continue
            target = str(e.dst)
            cands = [x for x in self.store.records_at(target)
                     if x.trace_id == r.trace_id and x.thread_id == r.thread_id
                     and x.seq_first < r.seq_first]
            if cands:
                w = max(cands, key=lambda x: x.seq_first)
                self.enqueue(w)
                self._edge(PEdge(src=v.vid, dst=self.vertex(w).vid,
                                 kind="ControlFlow"))

    def _shared_edges(self, r: AccessRecord, v: Vertex) -> None:
        wc = writer_candidates(self.store, r)
        if wc.status == "preexisting":
            pre = self._pre_vertex(r)
            self._edge(PEdge(src=v.vid, dst=pre.vid, kind="SharedState",
                             status="preexisting"))
            node = _node_of(self.sdg, r.node)
            if node is not None and any(str(e.dst) not in self.covered
                                        for e in self.sdg.deps_of(node)):
                if r.node not in v.needs_next:
                    v.needs_next.append(r.node)
            return
        status = wc.status
        cand_vids = []
        for w in wc.rw:
            self.enqueue(w)
            cand_vids.append(self.vertex(w).vid)
        for vid in cand_vids:
            self._edge(PEdge(src=v.vid, dst=vid, kind="SharedState",
                             status=status, candidates=cand_vids,
                             note={"overlapping": _overlaps(wc, r)}))

    def _static_walk(self, r: AccessRecord, v: Vertex) -> None:
        node = _node_of(self.sdg, r.node)
        if node is None:
            return
        start_ctx = _Ctx(r.trace_id, r.thread_id, r.seq_first)
        work = deque()
        visited = set()
        for e in self.sdg.deps_of(node):
            if e.kind == CONTROL or e.shared:
                continue
            nctx, ncrossed = self._cross(e, start_ctx, False)
            if nctx is not None:
                work.append((e.dst, nctx, ncrossed, False))
        while work:
            m, ctx, crossed, via_control = work.popleft()
            key = (str(m), ctx.trace_id, crossed, via_control)
            if key in visited:
                continue
            visited.add(key)
            recs = [x for x in self.store.records_at(str(m))
                    if x.trace_id == ctx.trace_id
                    and x.seq_first < ctx.before]
            if recs:
                w = max(recs, key=lambda x: (x.thread_id, x.seq_first))
                self.enqueue(w)
                wv = self.vertex(w)
                if via_control:
                    kind = "ControlFlow"
                else:
                    kind = "InterComponent" if crossed else "IntraTrace"
                note = {}
                if crossed and not via_control:
                    note = {"fromIteration": v.iteration,
                            "toIteration": wv.iteration}
                self._edge(PEdge(src=v.vid, dst=wv.vid, kind=kind, note=note))
                continue
            # un-instrumented: a coverage gap when the node itself would
            # carry evidence, otherwise a node to pass through; a node with
            # no events may also never have executed, in which case its
            # control parents explain the absence
            if str(m) not in self.planned and self._evidence_worthy(m):
                if str(m) not in v.needs_next:
                    v.needs_next.append(str(m))
            for e in self.sdg.deps_of(m):
                if e.shared:
                    continue
                nctx, ncrossed = self._cross(e, ctx, crossed)
                if nctx is not None:
                    work.append((e.dst, nctx, ncrossed,
                                 via_control or e.kind == CONTROL))

    def _evidence_worthy(self, m) -> bool:
        return (m in self.sdg.nondet_nodes or m in self.sdg.shared_nodes
                or m in self.sdg.control_reads)

    def _cross(self, e, ctx: _Ctx, crossed: bool):
        if not e.rpc:
            if e.src.sid.component != e.dst.sid.component:
                return None, crossed  # non-rpc cross-component edges are not walkable
            return ctx, crossed
        from ..lang.ir import RpcCall
        dst_fn = (e.dst.sid.component, e.dst.sid.function)
        dst_is_caller_side = isinstance(self.program.stmt(e.dst.sid), RpcCall)
        if not dst_is_caller_side:
            # caller -> callee: find the stitched child invocation
            target_root = f"{dst_fn[0]}.{dst_fn[1]}"
            best = None
            for k, child in self.stitched.children_of(ctx.trace_id):
                meta = self.store.traces_meta.get(child, {})
                if meta.get("root") != target_root:
                    continue
                set_e = self.stitched.set_events.get((ctx.trace_id, k))
                if set_e is None or set_e.seq >= ctx.before:
                    continue
                if best is None or set_e.seq > best[0]:
                    best = (set_e.seq, child)
            if best is None:
                return None, crossed
            child = best[1]
            thread = self.store.traces_meta.get(child, {}).get("thread", -1)
            return _Ctx(child, thread, float("inf")), True
        # callee -> caller
        parent = self.stitched.parent.get(ctx.trace_id)
        if parent is None:
            return None, crossed
        set_e = self.stitched.set_events.get(parent)
        if set_e is None:
            return None, crossed
        return _Ctx(parent[0], set_e.thread_id, set_e.seq), True


def _overlaps(wc: WriterCandidates, r: AccessRecord) -> bool:
    return any(not w.precedes(r) and not r.precedes(w) for w in wc.rw)


def _split_node(text: str):
    parts = text.split("/")
    return StmtId(parts[0], parts[1], int(parts[2])), parts[3], parts[4]


def _node_of(sdg: Sdg, text: str):
    from ..sdg.io import find_node
    try:
        return find_node(sdg, text)
    except (KeyError, ValueError):
        return None


def build_provenance(store: TraceStore, query: Query,
                     plan: InstrumentationPlan, sdg: Sdg) -> ProvenanceGraph:
    return _Builder(store, query, plan, sdg).build()
