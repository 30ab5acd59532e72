"""Call graph over direct calls, spawns and RPC pairs."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..lang.ir import Call, Program, RpcCall, Spawn, StmtId


@dataclass
class CallGraph:
    # callsite -> (component, function); includes Call and Spawn sites
    edges: set[tuple[StmtId, tuple[str, str]]] = field(default_factory=set)
    # (rpc callsite, callee RpcEntry statement)
    rpc_pairs: set[tuple[StmtId, StmtId]] = field(default_factory=set)

    def callsites_of(self, comp: str, fn: str) -> list[StmtId]:
        return sorted(s for s, tgt in self.edges if tgt == (comp, fn))


def build_call_graph(program: Program) -> CallGraph:
    cg = CallGraph()
    for fn in program.functions():
        for s in fn.stmts.values():
            if isinstance(s, (Call, Spawn)):
                cg.edges.add((s.sid, (fn.component, s.func)))
            elif isinstance(s, RpcCall):
                cg.edges.add((s.sid, (s.component, s.func)))
                entry_sid = StmtId(s.component, s.func, 0)
                cg.rpc_pairs.add((s.sid, entry_sid))
    return cg
