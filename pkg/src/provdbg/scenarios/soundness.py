"""Soundness checks: every oracle-observed dynamic dependency has static cover.

Used by the acceptance sweeps over the scenario corpus and random programs:
data dependencies need an SDG data edge between the two access nodes, dynamic
control pairs need a Control edge to the branch's condition reads, and
call/rpc linkage needs InterProc edges. Cross-iteration dependencies of one
statement on itself are covered by the statement's own node pair.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

from ..runtime.interp import RunResult
from ..runtime.shadow import Shadow
from ..sdg.graph import CONTROL, INTERPROC, Sdg


@dataclass
class SoundnessReport:
    data_checked: int = 0
    control_checked: int = 0
    link_checked: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _stmt_of(node_text: str) -> str:
    return node_text.rsplit("/", 2)[0]


def check_static_soundness(sdg: Sdg, shadow: Shadow) -> SoundnessReport:
    rep = SoundnessReport()
    data_edges = set()
    control_edges = defaultdict(set)   # stmt -> set of branch stmts
    interproc_stmts = set()            # (stmt a, stmt b) unordered
    for e in sdg.edges:
        if e.kind == CONTROL:
            control_edges[_stmt_of(str(e.src))].add(_stmt_of(str(e.dst)))
        else:
            data_edges.add((str(e.src), str(e.dst)))
            if e.kind == INTERPROC:
                a, b = _stmt_of(str(e.src)), _stmt_of(str(e.dst))
                interproc_stmts.add((a, b))
                interproc_stmts.add((b, a))

    nodes_at = defaultdict(set)
    for n in sdg.nodes:
        nodes_at[str(n.sid)].add(str(n))

    for read in shadow.reads:
        if read.writer_node is None or read.reader_node is None:
            continue
        rep.data_checked += 1
        r, w = read.reader_node, read.writer_node
        if _stmt_of(r) == _stmt_of(w):
            continue  # same-statement pair (cross-iteration or co-access)
        if (r, w) not in data_edges:
            rep.violations.append(f"data: {r} <- {w} (cell {read.cell})")

    for s_sid, b_sid in shadow.control_pairs:
        rep.control_checked += 1
        s, b = str(s_sid), str(b_sid)
        if not nodes_at[s] or not any(n.split("/")[3] == "R" for n in nodes_at[b]):
            continue  # nothing to anchor (nodeless statement / literal cond)
        if b not in control_edges.get(s, ()):
            rep.violations.append(f"control: {s} governed by {b}")

    for kind, a_sid, b_sid in shadow.links:
        a, b = str(a_sid), str(b_sid)
        if not nodes_at[a] or not nodes_at[b]:
            continue
        rep.link_checked += 1
        if (a, b) not in interproc_stmts:
            rep.violations.append(f"link[{kind}]: {a} <-> {b}")
    return rep


def check_interval_containment(result: RunResult) -> list[str]:
    """Every IntervalLog brackets the true access instant (oracle mode)."""
    shadow = result.shadow
    assert shadow is not None
    out = []
    by_key = {}
    for e in result.events:
        if e.kind == "IntervalLog":
            by_key[(e.trace_id, e.thread_id, e.seq)] = e
    for key, instant in shadow.instants.items():
        e = by_key.get(key)
        if e is None:
            continue
        if not (e.ts_start <= instant <= e.ts_end):
            out.append(f"interval {key} [{e.ts_start},{e.ts_end}] "
                       f"misses instant {instant}")
    return out


def check_cih_soundness(result: RunResult) -> tuple[int, list[str]]:
    """True writer membership in RW(r) for every interval-logged read whose
    true writer was itself interval-logged."""
    from ..collector.dataflow import writer_candidates
    from ..collector.store import TraceStore

    shadow = result.shadow
    assert shadow is not None
    store = TraceStore(result.traces)
    store.ingest(result.events)
    by_interval = {}
    for r in store.records():
        if r.ts_start is not None:
            by_interval[r.interval_key] = r
    checked = 0
    misses = []
    for read in shadow.reads:
        if read.reader_interval_key is None or read.writer_interval_key is None:
            continue
        rrec = by_interval.get(read.reader_interval_key)
        wrec = by_interval.get(read.writer_interval_key)
        if rrec is None or wrec is None or rrec.type != "R":
            continue
        checked += 1
        wc = writer_candidates(store, rrec)
        if wrec.key not in {w.key for w in wc.rw}:
            misses.append(f"read {rrec.node}@{rrec.key} true writer "
                          f"{wrec.node}@{wrec.key} not in RW "
                          f"({[w.key for w in wc.rw]})")
    return checked, misses
