"""Full-record shadow used in oracle mode.

Passive bookkeeping only: no scheduler steps, no events. Tracks the true
writer of every cell, dynamic control/link pairs for the static soundness
sweep, access instants for interval containment, and a value mirror for the
oracle-supremacy check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..lang.ir import StmtId
from .values import ListVal, MapVal, ObjVal, QueueVal, is_heap, map_key


@dataclass
class CellRead:
    reader_node: str
    reader_thread: int
    cell: tuple
    value: object
    writer_node: Optional[str]
    writer_interval_key: Optional[tuple]
    reader_interval_key: Optional[tuple]


@dataclass
class Shadow:
    # cell -> (writer node string, writer's IntervalLog key if logged)
    cell_writer: dict = field(default_factory=dict)
    reads: list[CellRead] = field(default_factory=list)
    control_pairs: set = field(default_factory=set)       # (stmt sid, branch sid)
    links: set = field(default_factory=set)               # (kind, from sid, to sid)
    accesses: list = field(default_factory=list)          # value mirror
    instants: dict = field(default_factory=dict)          # interval key -> instant
    iterations: list = field(default_factory=list)
    _last_meta: dict = field(default_factory=dict)        # (thread, node) -> (instant, ikey)

    # ------------------------------------------------------------- recording
    def access(self, thread_id: int, node: Optional[str], typ: str, cell,
               value, base, witness, instant: int,
               interval_key: Optional[tuple]) -> None:
        if node is not None:
            self.accesses.append({"thread": thread_id, "node": node, "type": typ,
                                  "value": value, "base": base,
                                  "witness": witness, "instant": instant})
            self._last_meta[(thread_id, node)] = (instant, interval_key)
        if interval_key is not None:
            self.instants[interval_key] = instant
        if cell is None or cell[0] == "op":
            return
        if typ == "W":
            self.cell_writer[cell] = (node, interval_key)
        else:
            writer = self.cell_writer.get(cell)
            self.reads.append(CellRead(
                reader_node=node, reader_thread=thread_id, cell=cell,
                value=value, writer_node=writer[0] if writer else None,
                writer_interval_key=writer[1] if writer else None,
                reader_interval_key=interval_key))

    def cell_op(self, thread_id: int, node: str, typ: str, cell, value) -> None:
        """Cell-precise effect of a structure builtin (after its accesses)."""
        meta = self._last_meta.get((thread_id, node), (0, None))
        instant, ikey = meta
        if typ == "W":
            self.cell_writer[cell] = (node, ikey)
        else:
            writer = self.cell_writer.get(cell)
            self.reads.append(CellRead(
                reader_node=node, reader_thread=thread_id, cell=cell,
                value=value, writer_node=writer[0] if writer else None,
                writer_interval_key=writer[1] if writer else None,
                reader_interval_key=ikey))

    def control(self, stmt: StmtId, branch: StmtId) -> None:
        self.control_pairs.add((stmt, branch))

    def link(self, kind: str, a: StmtId, b: StmtId) -> None:
        self.links.add((kind, a, b))

    def iteration(self, thread_id: int, loop: StmtId, counter: int) -> None:
        self.iterations.append((thread_id, loop, counter))

    # -- boundary walks: attribute every cell of a copied/materialized graph
    def materialize(self, value, node: str) -> None:
        for cell in _graph_cells(value):
            self.cell_writer[cell] = (node, None)

    def serialize(self, value, node: str) -> None:
        # shallow: the shipped value's immediate cells only; deeper cells'
        # dataflow travels through the structural chain, not the marshal
        for cell in _top_cells(value):
            writer = self.cell_writer.get(cell)
            self.reads.append(CellRead(
                reader_node=node, reader_thread=-1, cell=cell, value=None,
                writer_node=writer[0] if writer else None,
                writer_interval_key=writer[1] if writer else None,
                reader_interval_key=None))


def _top_cells(value):
    if isinstance(value, ObjVal):
        for f in value.fields:
            yield ("field", value.addr, f)
    elif isinstance(value, ListVal):
        yield ("size", value.addr)
        for i in range(len(value.items)):
            yield ("slot", value.addr, ("idx", i))
    elif isinstance(value, MapVal):
        yield ("size", value.addr)
        for k in value.entries:
            yield ("mkey", value.addr, repr(k))
    elif isinstance(value, QueueVal):
        yield ("size", value.addr)
        for _, slot in value.items:
            yield ("slot", value.addr, slot)


def _graph_cells(value, seen=None):
    if seen is None:
        seen = set()
    if not is_heap(value) or value.addr in seen:
        return
    seen.add(value.addr)
    if isinstance(value, ObjVal):
        for f, v in value.fields.items():
            yield ("field", value.addr, f)
            yield from _graph_cells(v, seen)
    elif isinstance(value, ListVal):
        yield ("size", value.addr)
        for i, v in enumerate(value.items):
            yield ("slot", value.addr, ("idx", i))
            yield from _graph_cells(v, seen)
    elif isinstance(value, MapVal):
        yield ("size", value.addr)
        for k, (korig, v) in value.entries.items():
            yield ("mkey", value.addr, repr(k))
            yield from _graph_cells(v, seen)
    elif isinstance(value, QueueVal):
        yield ("size", value.addr)
        for v, slot in value.items:
            yield ("slot", value.addr, slot)
            yield from _graph_cells(v, seen)
