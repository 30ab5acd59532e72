"""Instrumentation plan derivation from a backward slice.

Only non-determinism and shared-state dataflow evidence is recorded: nondet
sources get value logs, shared accesses get base/witness/interval logs (reads
also log the value read, the lazy-snapshot substitute), control condition
reads get value logs, loops enclosing instrumented statements get iteration
counters, and RPC pairs crossed by the slice get caller-id propagation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..lang.ir import (AccessNode, LoopHead, Program, READ, RpcCall, StmtId,
                       WRITE)
from .graph import Sdg
from .slicing import Slice

NODE_OPS = ("RecordValue", "RecordBase", "RecordWitness", "RecordInterval")
STMT_OPS = ("RecordIteration", "SetCaller", "GetCaller")
FN_OPS = ("StartTrace", "EndTrace")


@dataclass(frozen=True)
class RecordingOp:
    op: str
    node: Optional[AccessNode] = None
    stmt: Optional[StmtId] = None
    function: Optional[tuple[str, str]] = None

    def sort_key(self) -> tuple:
        return (self.op,
                self.node.sort_key() if self.node else (),
                str(self.stmt) if self.stmt else "",
                self.function or ())

    def anchor_stmt(self) -> Optional[StmtId]:
        if self.node is not None:
            return self.node.sid
        return self.stmt


@dataclass
class InstrumentationPlan:
    ops: list[RecordingOp]
    retained: frozenset[RecordingOp] = frozenset()

    def __post_init__(self) -> None:
        self.ops = sorted(set(self.ops), key=RecordingOp.sort_key)

    @property
    def op_set(self) -> frozenset[RecordingOp]:
        return frozenset(self.ops)

    def stmts_touched(self) -> set[StmtId]:
        return {op.anchor_stmt() for op in self.ops if op.anchor_stmt() is not None}


def derive_plan(sdg: Sdg, slc: Slice, program: Program) -> InstrumentationPlan:
    ops: set[RecordingOp] = set()
    selected = set(slc.selected)

    for n in slc.selected:
        if n in sdg.nondet_nodes and n.type == WRITE:
            ops.add(RecordingOp("RecordValue", node=n))
        if n in sdg.shared_nodes:
            if n.type == READ:
                ops.add(RecordingOp("RecordValue", node=n))
            for kind in ("RecordBase", "RecordWitness", "RecordInterval"):
                ops.add(RecordingOp(kind, node=n))
        if n in sdg.control_reads:
            ops.add(RecordingOp("RecordValue", node=n))

    # loops lexically enclosing any instrumented statement (or being one)
    instrumented = {op.anchor_stmt() for op in ops}
    for sid in list(instrumented):
        fn = program.function(sid.component, sid.function)
        for loop_ord in _enclosing_loops(fn, sid.ordinal):
            ops.add(RecordingOp("RecordIteration",
                                stmt=StmtId(sid.component, sid.function, loop_ord)))

    # RPC pairs crossed by a slice edge
    for e in sdg.edges:
        if not e.rpc or e.src not in selected or e.dst not in selected:
            continue
        call_sid = e.src.sid if _is_rpc_call(program, e.src.sid) else e.dst.sid
        call_stmt = program.stmt(call_sid)
        assert isinstance(call_stmt, RpcCall)
        entry_sid = StmtId(call_stmt.component, call_stmt.func, 0)
        ops.add(RecordingOp("SetCaller", stmt=call_sid))
        ops.add(RecordingOp("GetCaller", stmt=entry_sid))

    # trace lifecycle for every entry function containing instrumentation
    instrumented = {op.anchor_stmt() for op in ops if op.anchor_stmt()}
    for sid in sorted(instrumented, key=str):
        fn = program.function(sid.component, sid.function)
        if fn.entry or fn.synthetic:
            key = (sid.component, sid.function)
            ops.add(RecordingOp("StartTrace", function=key))
            ops.add(RecordingOp("EndTrace", function=key))

    return InstrumentationPlan(ops=sorted(ops, key=RecordingOp.sort_key))


def _is_rpc_call(program: Program, sid: StmtId) -> bool:
    return isinstance(program.stmt(sid), RpcCall)


def _enclosing_loops(fn, ordinal: int) -> list[int]:
    """LoopHead ordinals lexically containing (or being) the statement."""
    out = []
    stmt = fn.stmts[ordinal]
    if isinstance(stmt, LoopHead):
        out.append(ordinal)
    path = _path_to(fn.body, ordinal)
    for s in path or []:
        if isinstance(s, LoopHead) and s.sid.ordinal != ordinal:
            out.append(s.sid.ordinal)
    return out


def _path_to(stmts, ordinal: int, acc=None):
    from ..lang.ir import Branch

    acc = acc or []
    for s in stmts:
        if s.sid.ordinal == ordinal:
            return acc
        if isinstance(s, Branch):
            found = _path_to(s.then_body, ordinal, acc + [s])
            if found is None:
                found = _path_to(s.else_body, ordinal, acc + [s])
            if found is not None:
                return found
        elif isinstance(s, LoopHead):
            found = _path_to(s.body, ordinal, acc + [s])
            if found is not None:
                return found
    return None


def merge_plans(current: InstrumentationPlan,
                retained: frozenset[RecordingOp]) -> InstrumentationPlan:
    """Union with de-duplication; retained ops keep their flag."""
    merged = sorted(set(current.ops) | set(retained), key=RecordingOp.sort_key)
    return InstrumentationPlan(ops=merged, retained=frozenset(retained))


def expected_sampling_latency(p: float, n: int) -> float:
    """Expected bug occurrences before sampling captures all n traces."""
    if not (0 < p <= 1):
        raise ValueError("sampling rate must be in (0, 1]")
    if n < 1:
        raise ValueError("trace count must be >= 1")
    return (1.0 / p) ** n
