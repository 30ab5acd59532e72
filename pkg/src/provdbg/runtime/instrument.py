"""Dynamic instrumentation: per-statement recording-op tables.

The interpreter consults one dict lookup per executed statement; with
recording disabled for a component the lookup short-circuits on None. Plan
swaps replace whole tables atomically and take effect at the next statement
boundary of each thread.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..lang.ir import Program, StmtId
from ..sdg.plan import InstrumentationPlan


@dataclass
class StmtOps:
    # (R|W, aml text) -> set of {"value", "base", "witness", "interval"}
    access: dict[tuple[str, str], frozenset] = field(default_factory=dict)
    iteration: bool = False
    set_caller: bool = False
    get_caller: bool = False

    def for_access(self, typ: str, aml: str) -> Optional[frozenset]:
        return self.access.get((typ, aml))

    def needs_interval(self, typ: str, aml: str) -> bool:
        ops = self.access.get((typ, aml))
        return bool(ops) and "interval" in ops


_KIND_FLAG = {"RecordValue": "value", "RecordBase": "base",
              "RecordWitness": "witness", "RecordInterval": "interval"}


class InstrumentedProgram:
    def __init__(self, program: Program, plan: Optional[InstrumentationPlan] = None):
        self.program = program
        self.tables: dict[str, dict[tuple[str, int], StmtOps]] = {}
        self.trace_fns: set[tuple[str, str]] = set()
        self.plan = None
        if plan is not None:
            self.swap(plan)

    def swap(self, plan: Optional[InstrumentationPlan]) -> None:
        """Install a new plan (or None); effective at statement boundaries."""
        if plan is None:
            self.plan = None
            self.tables = {}
            self.trace_fns = set()
            return
        tables: dict[str, dict[tuple[str, int], StmtOps]] = {}
        trace_fns: set[tuple[str, str]] = set()

        def entry(sid: StmtId) -> StmtOps:
            comp = tables.setdefault(sid.component, {})
            key = (sid.function, sid.ordinal)
            if key not in comp:
                comp[key] = StmtOps()
            return comp[key]

        acc: dict[tuple[StmtId, str, str], set] = {}
        for op in plan.ops:
            if op.op in _KIND_FLAG:
                node = op.node
                self._require_stmt(node.sid)
                k = (node.sid, node.type, str(node.aml))
                acc.setdefault(k, set()).add(_KIND_FLAG[op.op])
            elif op.op == "RecordIteration":
                self._require_stmt(op.stmt)
                entry(op.stmt).iteration = True
            elif op.op == "SetCaller":
                self._require_stmt(op.stmt)
                entry(op.stmt).set_caller = True
            elif op.op == "GetCaller":
                self._require_stmt(op.stmt)
                entry(op.stmt).get_caller = True
            elif op.op in ("StartTrace", "EndTrace"):
                comp, fn = op.function
                if fn not in self.program.components[comp].functions:
                    raise KeyError(f"plan references unknown function {comp}.{fn}")
                trace_fns.add((comp, fn))
        for (sid, typ, aml), flags in acc.items():
            entry(sid).access[(typ, aml)] = frozenset(flags)
        self.plan = plan
        self.tables = tables
        self.trace_fns = trace_fns

    def _require_stmt(self, sid: StmtId) -> None:
        try:
            self.program.stmt(sid)
        except KeyError:
            raise KeyError(f"plan references unknown statement {sid}") from None

    def ops_at(self, component: str, function: str, ordinal: int,
               recording: bool) -> Optional[StmtOps]:
        if not recording:
            return None
        table = self.tables.get(component)
        if table is None:
            return None
        return table.get((function, ordinal))

    def traces_fn(self, component: str, function: str) -> bool:
        return (component, function) in self.trace_fns
