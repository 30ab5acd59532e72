"""Tree-walking interpreter with a deterministic cooperative scheduler.

Each thread is a generator; every statement boundary (and every timestamp
micro-op of an instrumented shared access) is a scheduler preemption point,
so interval timestamps can genuinely interleave across threads. The same
generators run under real OS threads in freeThreaded mode.

Value semantics are total: null poisons arithmetic, comparisons with null are
false, conditions only fire on `true`, field stores on null are counted no-ops.
Genuine impossibilities (calling a list method on an int) abort the thread and
are reported in RunResult.errors.
"""

from __future__ import annotations

import random
import threading
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from ..analysis.cfg import lexical_parents
from ..lang.ir import (Assign, Branch, Call, Check, FieldLoad, FieldStore,
                       Function, INIT_FUNCTION, LibCall, Lit, LoopHead, New,
                       Program, Return, RpcCall, RpcEntry, Spawn, Stmt,
                       StmtId, Unary, Var, expr_vars)
from ..lang.validate import ProgramInfo
from . import events as ev
from .instrument import InstrumentedProgram, StmtOps
from .shadow import Shadow
from .values import (Allocator, ListVal, MapVal, ObjVal, QueueVal, binop,
                     is_heap, map_key, marshal, snapshot, structure_kind,
                     unop, witness_value)

BUFFER_EVENT_SIZE = 64  # nominal bytes per buffered event for accounting


@dataclass
class RuntimeConfig:
    seed: int = 0
    mode: str = "deterministic"      # deterministic | freeThreaded
    clock: str = "logical"           # logical | wall
    recording: object = True         # bool or {component: bool}
    buffer_capacity: int = 64 * 1024
    max_steps: int = 5_000_000

    def __post_init__(self) -> None:
        if self.mode == "deterministic":
            self.clock = "logical"

    def recording_for(self, component: str) -> bool:
        if isinstance(self.recording, dict):
            return bool(self.recording.get(component, True))
        return bool(self.recording)


@dataclass
class Workload:
    calls: list[dict]
    env: dict
    hints: list[dict] = field(default_factory=list)

    @classmethod
    def from_dict(cls, doc: dict, hints: Optional[dict] = None) -> "Workload":
        calls = []
        for c in doc.get("calls", []):
            for _ in range(int(c.get("count", 1))):
                calls.append(c)
        order = (hints or {}).get("order", [])
        return cls(calls=calls, env=doc.get("env", {}), hints=order)


@dataclass
class CheckFailure:
    stmt: StmtId
    trace_id: int
    thread_id: int
    seq: int
    ts: int
    values: dict


class RunError(Exception):
    pass


@dataclass
class TraceCtx:
    id: int
    root: tuple[str, str]
    kind: str                      # external | rpc | background | init
    caller: Optional[tuple[int, int]] = None
    call_counter: int = 0

    def next_call(self) -> int:
        self.call_counter += 1
        return self.call_counter


class _Frame:
    __slots__ = ("fn", "env", "loop_counters", "id")

    def __init__(self, fn: Function, frame_id: int):
        self.fn = fn
        self.env: dict = {}
        self.loop_counters: dict[int, int] = {}
        self.id = frame_id


class _Thread:
    def __init__(self, tid: int, component: str):
        self.id = tid
        self.component = component
        self.gen = None
        self.state = "ready"             # ready | blocked | done
        self.block_pred: Optional[Callable[[], bool]] = None
        self.block_reason = ""
        self.trace: Optional[TraceCtx] = None
        self.seq = 0
        self.buffer: list[ev.TraceEvent] = []
        self.buffered_bytes = 0
        self.env: dict = {}

    def next_seq(self) -> int:
        self.seq += 1
        return self.seq


@dataclass
class RunResult:
    events: list[ev.TraceEvent]
    check_failures: list[CheckFailure]
    stats: dict
    traces: dict[int, dict]
    errors: list[str]
    shadow: Optional[Shadow] = None

    @property
    def manifested(self) -> bool:
        return bool(self.check_failures)


class Engine:
    def __init__(self, ip: InstrumentedProgram, workload: Workload,
                 cfg: RuntimeConfig, info: ProgramInfo,
                 oracle: bool = False):
        self.ip = ip
        self.program: Program = ip.program
        self.workload = workload
        self.cfg = cfg
        self.info = info
        self.alloc = Allocator()
        self.rng = random.Random(cfg.seed)
        self.prog_rng = random.Random(cfg.seed ^ 0x5DEECE66D)
        self.tick = 0
        self.threads: list[_Thread] = []
        self.sink: list[ev.TraceEvent] = []
        self.sink_lock = threading.Lock()
        self.check_failures: list[CheckFailure] = []
        self.errors: list[str] = []
        self.traces: dict[int, dict] = {}
        self.trace_counter = 0
        self.frame_counter = 0
        self.stats = {"statements": {}, "events": {}, "flushes": 0,
                      "forced_flushes": 0, "null_stores": 0, "steps": 0}
        self.shadow = Shadow() if oracle else None
        self.globals: dict[str, dict] = {}
        self.global_slots: dict[tuple[str, str], int] = {}
        self.lex_parents: dict[tuple[str, str], dict[int, int]] = {}
        for fn in self.program.functions():
            self.lex_parents[(fn.component, fn.name)] = lexical_parents(fn)
        self._init_threads: list[_Thread] = []

    # ------------------------------------------------------------- plumbing
    def clock(self) -> int:
        if self.cfg.clock == "wall":
            return time.monotonic_ns()
        # strictly monotonic: consecutive accesses never tie at the boundary
        self.tick += 1
        return self.tick

    def new_trace(self, root: tuple[str, str], kind: str,
                  caller=None) -> TraceCtx:
        self.trace_counter += 1
        ctx = TraceCtx(id=self.trace_counter, root=root, kind=kind, caller=caller)
        self.traces[ctx.id] = {"root": f"{root[0]}.{root[1]}", "kind": kind,
                               "caller": list(caller) if caller else None}
        return ctx

    def emit(self, t: _Thread, tag: int, **kw) -> ev.TraceEvent:
        e = ev.TraceEvent(trace_id=t.trace.id if t.trace else 0,
                          thread_id=t.id, component=t.component,
                          seq=t.next_seq(), ts=self.clock(), tag=tag, **kw)
        t.buffer.append(e)
        t.buffered_bytes += BUFFER_EVENT_SIZE
        self.stats["events"][t.component] = self.stats["events"].get(t.component, 0) + 1
        if t.buffered_bytes >= self.cfg.buffer_capacity:
            self._flush(t, forced=True)
        elif t.buffered_bytes >= self.cfg.buffer_capacity // 2:
            self._flush(t)
        return e

    def _flush(self, t: _Thread, forced: bool = False) -> None:
        if not t.buffer:
            return
        with self.sink_lock:
            self.sink.extend(t.buffer)
        t.buffer = []
        t.buffered_bytes = 0
        self.stats["flushes"] += 1
        if forced:
            self.stats["forced_flushes"] += 1

    def _new_thread(self, component: str) -> _Thread:
        t = _Thread(len(self.threads) + 1, component)
        self.threads.append(t)
        return t

    def _fresh_frame(self, fn: Function) -> _Frame:
        self.frame_counter += 1
        return _Frame(fn, self.frame_counter)

    # ------------------------------------------------------------ lifecycle
    def run(self) -> RunResult:
        for comp in self.program.components.values():
            self.globals[comp.name] = {}
            for sname, _ in comp.shareds:
                self.global_slots[(comp.name, sname)] = self.alloc.fresh()
            t = self._new_thread(comp.name)
            init_fn = comp.functions[INIT_FUNCTION]
            trace = self.new_trace((comp.name, INIT_FUNCTION), "init")
            t.gen = self._root(t, init_fn, [], trace)
            self._init_threads.append(t)

        init_set = list(self._init_threads)

        def init_done() -> bool:
            return all(x.state == "done" for x in init_set)

        gates = {h["call"]: h for h in self.workload.hints}
        call_threads: dict[int, _Thread] = {}
        for i, call in enumerate(self.workload.calls):
            comp = call["component"]
            fname = call["function"]
            fn = self.program.function(comp, fname)
            if not fn.entry:
                raise RunError(f"workload call {i} targets non-entry {comp}.{fname}")
            t = self._new_thread(comp)
            t.env = {**self.workload.env, **call.get("env", {})}
            trace = self.new_trace((comp, fname), "external")
            args = [self._materialize(a) for a in call.get("args", [])]
            gate = gates.get(i)
            pred = self._gate_pred(gate, call_threads, init_done)
            t.gen = self._root(t, fn, args, trace, gate_pred=pred, copied_in=True)
            call_threads[i] = t

        if self.cfg.mode == "freeThreaded":
            self._drive_threads_os()
        else:
            self._drive_deterministic()

        for t in self.threads:
            self._flush(t)
        self.stats["ticks"] = self.tick
        self.stats["threads"] = len(self.threads)
        return RunResult(events=list(self.sink),
                         check_failures=self.check_failures,
                         stats=self.stats, traces=self.traces,
                         errors=self.errors, shadow=self.shadow)

    def _gate_pred(self, gate, call_threads, init_done):
        if gate is None:
            return init_done

        def pred() -> bool:
            if not init_done():
                return False
            for j in gate.get("after", []):
                tj = call_threads.get(j)
                if tj is None or tj.state != "done":
                    return False
            for j in gate.get("after_blocked", []):
                tj = call_threads.get(j)
                if tj is None:
                    return False
                if tj.state == "done":
                    continue
                if not (tj.state == "blocked" and tj.block_reason != "gate"):
                    return False
            return True

        return pred

    def _materialize(self, a):
        if isinstance(a, dict):
            o = ObjVal(self.alloc.fresh())
            for k, v in a.items():
                o.fields[k] = self._materialize(v)
            return o
        if isinstance(a, list):
            lst = ListVal(self.alloc.fresh())
            lst.items.extend(self._materialize(x) for x in a)
            return lst
        return a

    # -------------------------------------------------------------- drivers
    def _runnable(self, t: _Thread) -> bool:
        if t.state == "ready":
            return True
        if t.state == "blocked":
            return bool(t.block_pred and t.block_pred())
        return False

    def _drive_deterministic(self) -> None:
        steps = 0
        while True:
            runnable = [t for t in self.threads if self._runnable(t)]
            if not runnable:
                if all(t.state == "done" for t in self.threads):
                    self.stats["steps"] = steps
                    return
                blocked = [(t.id, t.block_reason) for t in self.threads
                           if t.state == "blocked"]
                raise RunError(f"deadlock: no runnable threads; blocked={blocked}")
            t = runnable[self.rng.randrange(len(runnable))]
            t.state = "ready"
            self.tick += 1
            steps += 1
            if steps > self.cfg.max_steps:
                raise RunError("step budget exceeded (livelock?)")
            try:
                tok = next(t.gen)
            except StopIteration:
                t.state = "done"
                self._flush(t)
                continue
            if tok[0] == "blocked":
                t.state = "blocked"
                t.block_pred = tok[1]
                t.block_reason = tok[2]

    def _drive_threads_os(self) -> None:
        def drive(t: _Thread) -> None:
            try:
                while True:
                    try:
                        tok = next(t.gen)
                    except StopIteration:
                        break
                    if tok[0] == "blocked":
                        while not tok[1]():
                            time.sleep(0.0001)
            finally:
                t.state = "done"
                self._flush(t)

        started: set[int] = set()
        os_threads = []
        while True:
            for t in list(self.threads):
                if t.id not in started and t.gen is not None:
                    started.add(t.id)
                    th = threading.Thread(target=drive, args=(t,), daemon=True)
                    os_threads.append(th)
                    th.start()
            if all(t.state == "done" for t in self.threads) and \
                    len(started) == len(self.threads):
                break
            time.sleep(0.0002)
        for th in os_threads:
            th.join(timeout=10)

    # --------------------------------------------------------- entry points
    def _root(self, t: _Thread, fn: Function, args, trace: TraceCtx,
              gate_pred=None, reply=None, copied_in: bool = False):
        def gen():
            if gate_pred is not None:
                while not gate_pred():
                    yield ("blocked", gate_pred, "gate")
            t.trace = trace
            self.traces[trace.id]["thread"] = t.id
            recording = self.cfg.recording_for(t.component)
            traced = self.ip.traces_fn(t.component, fn.name) and recording
            if traced:
                self.emit(t, ev.TRACE_START, function=f"{t.component}.{fn.name}")
            entry_ops = self.ip.ops_at(t.component, fn.name, 0, recording)
            if entry_ops and entry_ops.get_caller and trace.caller is not None:
                self.emit(t, ev.CALLER_GET, stmt=str(StmtId(t.component, fn.name, 0)),
                          caller_trace=trace.caller[0], caller_seq=trace.caller[1])
            elif entry_ops and entry_ops.get_caller and trace.kind == "rpc":
                raise RunError(
                    f"GetCaller instrumented at {t.component}.{fn.name} "
                    f"but no caller metadata arrived")
            frame = self._fresh_frame(fn)
            yield ("step", )
            entry_sid = StmtId(t.component, fn.name, 0)
            self._count_stmt(t.component)
            for (pname, _), value in zip(fn.params, args):
                yield from self._write_var(t, frame, entry_sid, entry_ops, pname, value)
                if is_heap(value) and copied_in:
                    star = f"{pname}.*"
                    yield from self._access(
                        t, frame, entry_sid, entry_ops, "W", star,
                        value=value, base=value.addr, witness=None)
                    if self.shadow:
                        self.shadow.materialize(value, f"{entry_sid}/W/{star}")
            ret = yield from self._exec_block(t, frame, fn.body[1:])
            value = ret[1] if ret else None
            if reply is not None:
                if is_heap(value) and ret and ret[3]:
                    r_sid, star = ret[2], ret[3]
                    r_ops = self.ip.ops_at(t.component, fn.name, r_sid.ordinal,
                                           recording)
                    yield from self._access(t, frame, r_sid, r_ops, "R", star,
                                            value=value, base=value.addr,
                                            witness=None)
                    if self.shadow:
                        self.shadow.serialize(value, f"{r_sid}/R/{star}")
                reply["value"] = marshal(value, self.alloc) if is_heap(value) else value
                reply["done"] = True
            if traced:
                self.emit(t, ev.TRACE_END, function=f"{t.component}.{fn.name}")
            self._flush(t)
        return gen()

    # ------------------------------------------------------------ execution
    def _count_stmt(self, comp: str) -> None:
        self.stats["statements"][comp] = self.stats["statements"].get(comp, 0) + 1

    def _exec_block(self, t: _Thread, frame: _Frame, stmts: list[Stmt]):
        for s in stmts:
            result = yield from self._exec_stmt(t, frame, s)
            if result is not None:
                return result
        return None

    def _exec_stmt(self, t: _Thread, frame: _Frame, s: Stmt):
        yield ("step", )
        self._count_stmt(t.component)
        recording = self.cfg.recording_for(t.component)
        ops = self.ip.ops_at(t.component, frame.fn.name, s.sid.ordinal, recording)
        if self.shadow is not None:
            parent = self.lex_parents[(t.component, frame.fn.name)].get(s.sid.ordinal)
            if parent is not None:
                self.shadow.control(s.sid, StmtId(t.component, frame.fn.name, parent))

        if isinstance(s, Assign):
            vals = {}
            for name in expr_vars(s.expr):
                vals[name] = yield from self._read_var(t, frame, s.sid, ops, name)
            value = _eval(s.expr, vals)
            yield from self._write_var(t, frame, s.sid, ops, s.target, value)
        elif isinstance(s, New):
            value = {"obj": ObjVal, "list": ListVal, "map": MapVal,
                     "queue": QueueVal}[s.alloc_kind](self.alloc.fresh())
            yield from self._write_var(t, frame, s.sid, ops, s.target, value)
        elif isinstance(s, FieldLoad):
            base = yield from self._read_var(t, frame, s.sid, ops, s.base)
            aml = f"{self._aml_text(frame, s.base)}.{s.field_name}"
            if isinstance(base, ObjVal):
                value = yield from self._access(
                    t, frame, s.sid, ops, "R", aml,
                    value_fn=lambda: base.fields.get(s.field_name),
                    base=base.addr, witness=None,
                    cell=("field", base.addr, s.field_name))
            else:
                value = None  # null-safe load
            yield from self._write_var(t, frame, s.sid, ops, s.target, value)
        elif isinstance(s, FieldStore):
            base = yield from self._read_var(t, frame, s.sid, ops, s.base)
            vals = {}
            for name in expr_vars(s.value):
                vals[name] = yield from self._read_var(t, frame, s.sid, ops, name)
            value = _eval(s.value, vals)
            aml = f"{self._aml_text(frame, s.base)}.{s.field_name}"
            if isinstance(base, ObjVal):
                def do_store():
                    base.fields[s.field_name] = value
                    return value
                yield from self._access(
                    t, frame, s.sid, ops, "W", aml, value_fn=do_store,
                    base=base.addr, witness=None,
                    cell=("field", base.addr, s.field_name))
            else:
                self.stats["null_stores"] += 1
        elif isinstance(s, Branch):
            cond = yield from self._eval_cond(t, frame, s.sid, ops, s.cond)
            body = s.then_body if cond is True else s.else_body
            result = yield from self._exec_block(t, frame, body)
            if result is not None:
                return result
        elif isinstance(s, LoopHead):
            while True:
                ctr = frame.loop_counters.get(s.sid.ordinal, 0)
                if ops and ops.iteration:
                    self.emit(t, ev.ITERATION_LOG, stmt=str(s.sid), counter=ctr)
                if self.shadow is not None:
                    self.shadow.iteration(t.id, s.sid, ctr)
                frame.loop_counters[s.sid.ordinal] = ctr + 1
                cond = yield from self._eval_cond(t, frame, s.sid, ops, s.cond)
                if cond is not True:
                    frame.loop_counters[s.sid.ordinal] = 0
                    break
                result = yield from self._exec_block(t, frame, s.body)
                if result is not None:
                    return result
                yield ("step", )
                self._count_stmt(t.component)
                recording = self.cfg.recording_for(t.component)
                ops = self.ip.ops_at(t.component, frame.fn.name, s.sid.ordinal, recording)
        elif isinstance(s, Check):
            vals = {}
            for name in expr_vars(s.cond):
                vals[name] = yield from self._read_var(t, frame, s.sid, ops, name)
            cond = _eval(s.cond, vals)
            if cond is True:
                self.check_failures.append(CheckFailure(
                    stmt=s.sid, trace_id=t.trace.id if t.trace else 0,
                    thread_id=t.id, seq=t.seq, ts=self.clock(),
                    values={k: snapshot(v) for k, v in vals.items()}))
        elif isinstance(s, Return):
            if s.value is None:
                return ("return", None, s.sid, None)
            vals = {}
            for name in expr_vars(s.value):
                vals[name] = yield from self._read_var(t, frame, s.sid, ops, name)
            value = _eval(s.value, vals)
            star = (f"{self._aml_text(frame, s.value.name)}.*"
                    if isinstance(s.value, Var) else None)
            return ("return", value, s.sid, star)
        elif isinstance(s, Call):
            args = []
            for a in s.args:
                if isinstance(a, Var):
                    args.append((yield from self._read_var(t, frame, s.sid, ops, a.name)))
                else:
                    args.append(a.value)
            callee = self.program.function(t.component, s.func)
            sub = self._fresh_frame(callee)
            recording = self.cfg.recording_for(t.component)
            entry_ops = self.ip.ops_at(t.component, callee.name, 0, recording)
            yield ("step", )
            self._count_stmt(t.component)
            entry_sid = StmtId(t.component, callee.name, 0)
            for (pname, _), value in zip(callee.params, args):
                yield from self._write_var(t, sub, entry_sid, entry_ops, pname, value)
            if self.shadow is not None:
                self.shadow.link("param", s.sid, entry_sid)
            ret = yield from self._exec_block(t, sub, callee.body[1:])
            value = ret[1] if ret else None
            if s.target:
                if self.shadow is not None:
                    for o in callee.order:
                        if isinstance(callee.stmts[o], Return):
                            self.shadow.link("return", StmtId(t.component, callee.name, o), s.sid)
                yield from self._write_var(t, frame, s.sid, ops, s.target, value)
        elif isinstance(s, Spawn):
            args = []
            for a in s.args:
                if isinstance(a, Var):
                    args.append((yield from self._read_var(t, frame, s.sid, ops, a.name)))
                else:
                    args.append(a.value)
            callee = self.program.function(t.component, s.func)
            nt = self._new_thread(t.component)
            nt.env = dict(t.env)
            trace = self.new_trace((t.component, s.func), "background")
            nt.gen = self._root(nt, callee, args, trace)
            if self.shadow is not None:
                self.shadow.link("param", s.sid, StmtId(t.component, s.func, 0))
        elif isinstance(s, RpcCall):
            result = yield from self._rpc(t, frame, s, ops)
            if s.target:
                yield from self._write_var(t, frame, s.sid, ops, s.target, result)
        elif isinstance(s, LibCall):
            yield from self._libcall(t, frame, s, ops)
        elif isinstance(s, RpcEntry):
            pass  # handled by _root
        else:
            raise AssertionError(f"unhandled statement kind {s.kind}")
        return None

    def _eval_cond(self, t, frame, sid, ops, cond):
        vals = {}
        for name in expr_vars(cond):
            vals[name] = yield from self._read_var(t, frame, sid, ops, name)
        return _eval(cond, vals)

    # --------------------------------------------------------------- access
    def _aml_text(self, frame: _Frame, name: str) -> str:
        if self.info.is_local(frame.fn.component, frame.fn.name, name):
            return name
        return f"@{name}"

    def _read_var(self, t: _Thread, frame: _Frame, sid: StmtId,
                  ops: Optional[StmtOps], name: str):
        text = self._aml_text(frame, name)
        if text.startswith("@"):
            comp_globals = self.globals[t.component]
            slot = self.global_slots[(t.component, name)]
            value = yield from self._access(
                t, frame, sid, ops, "R", text,
                value_fn=lambda: comp_globals.get(name),
                base=slot, witness=None, cell=("global", t.component, name))
            return value
        value = yield from self._access(
            t, frame, sid, ops, "R", text, value_fn=lambda: frame.env.get(name),
            base=None, witness=None, cell=("local", frame.id, name))
        return value

    def _write_var(self, t: _Thread, frame: _Frame, sid: StmtId,
                   ops: Optional[StmtOps], name: str, value):
        text = self._aml_text(frame, name)
        if text.startswith("@"):
            comp_globals = self.globals[t.component]
            slot = self.global_slots[(t.component, name)]

            def do():
                comp_globals[name] = value
                return value
            yield from self._access(t, frame, sid, ops, "W", text, value_fn=do,
                                    base=slot, witness=None,
                                    cell=("global", t.component, name))
            return

        def do_local():
            frame.env[name] = value
            return value
        yield from self._access(t, frame, sid, ops, "W", text, value_fn=do_local,
                                base=None, witness=None,
                                cell=("local", frame.id, name))

    def _access(self, t: _Thread, frame: _Frame, sid: StmtId,
                ops: Optional[StmtOps], typ: str, aml: str, value=None,
                value_fn=None, base=None, witness=None, cell=None,
                witness_fn=None):
        """One logical access: optional interval micro-ops around the action."""
        flags = ops.for_access(typ, aml) if ops else None
        node = f"{sid}/{typ}/{aml}" if (flags or self.shadow is not None) else None
        ts_start = None
        if flags and "interval" in flags:
            ts_start = self.clock()
            yield ("step", )
        if value_fn is not None:
            value = value_fn()
        if witness_fn is not None:
            witness = witness_fn()
        instant = self.clock()
        interval_key = None
        if flags:
            if "value" in flags:
                self.emit(t, ev.VALUE_LOG, node=node, value=snapshot(value))
            if "base" in flags and base is not None:
                self.emit(t, ev.BASE_LOG, node=node, address=base)
            if "witness" in flags:
                self.emit(t, ev.WITNESS_LOG, node=node, value=witness)
        if flags and "interval" in flags:
            yield ("step", )
            ts_end = self.clock()
            e = self.emit(t, ev.INTERVAL_LOG, node=node,
                          ts_start=ts_start, ts_end=ts_end)
            interval_key = e.key()
        if self.shadow is not None:
            self.shadow.access(t.id, node, typ, cell, value, base, witness,
                               instant, interval_key)
        return value

    # ------------------------------------------------------------------ rpc
    def _rpc(self, t: _Thread, frame: _Frame, s: RpcCall, ops: Optional[StmtOps]):
        args = []
        for a in s.args:
            if isinstance(a, Var):
                v = yield from self._read_var(t, frame, s.sid, ops, a.name)
                if is_heap(v):
                    star = f"{self._aml_text(frame, a.name)}.*"
                    yield from self._access(t, frame, s.sid, ops, "R", star,
                                            value=v, base=v.addr, witness=None)
                    if self.shadow:
                        self.shadow.serialize(v, f"{s.sid}/R/{star}")
                args.append(v)
            else:
                args.append(a.value)
        caller_meta = None
        if ops and ops.set_caller:
            k = t.trace.next_call()
            caller_meta = (t.trace.id, k)
            self.emit(t, ev.CALLER_SET, stmt=str(s.sid),
                      caller_trace=t.trace.id, caller_seq=k)
        marshaled = [marshal(v, self.alloc) if is_heap(v) else v for v in args]
        callee = self.program.function(s.component, s.func)
        nt = self._new_thread(s.component)
        nt.env = dict(t.env)
        trace = self.new_trace((s.component, s.func), "rpc", caller=caller_meta)
        reply: dict = {"done": False, "value": None}
        nt.gen = self._root(nt, callee, marshaled, trace, reply=reply, copied_in=True)
        if self.shadow is not None:
            self.shadow.link("param", s.sid, StmtId(s.component, s.func, 0))
            for o in callee.order:
                if isinstance(callee.stmts[o], Return):
                    self.shadow.link("return", StmtId(s.component, s.func, o), s.sid)
        yield ("blocked", lambda: reply["done"], "rpc")
        result = reply["value"]
        if is_heap(result):
            if s.target:
                star = f"{self._aml_text(frame, s.target)}.*"
                yield from self._access(t, frame, s.sid, ops, "W", star,
                                        value=result, base=result.addr,
                                        witness=None)
                if self.shadow:
                    self.shadow.materialize(result, f"{s.sid}/W/{star}")
            elif self.shadow:
                self.shadow.materialize(result, f"{s.sid}/W/~drop.*")
        return result

    # -------------------------------------------------------------- builtin
    def _libcall(self, t: _Thread, frame: _Frame, s: LibCall,
                 ops: Optional[StmtOps]):
        spec = self.program.libspecs[s.spec_key or s.method]
        args = []
        for a in s.args:
            if isinstance(a, Var):
                args.append((yield from self._read_var(t, frame, s.sid, ops, a.name)))
            else:
                args.append(a.value)

        if s.base is None:
            if s.method == "now":
                value = self.clock()
            elif s.method == "rand":
                n = args[0] if args and isinstance(args[0], int) and args[0] > 0 else 2
                value = self.prog_rng.randrange(n)
            elif s.method == "input":
                value = t.env.get(args[0])
            else:
                raise RunError(f"unknown free builtin {s.method}")
            if s.target:
                yield from self._write_var(t, frame, s.sid, ops, s.target, value)
            return

        # structure identity resolution is part of the call, not a modeled
        # access: the (base, *) pseudo node subsumes it
        if self.info.is_local(frame.fn.component, frame.fn.name, s.base):
            base = frame.env.get(s.base)
        else:
            base = self.globals[t.component].get(s.base)
        if base is None:
            self.stats["null_stores"] += 1
            if s.target:
                yield from self._write_var(t, frame, s.sid, ops, s.target, None)
            return
        kind = structure_kind(base)
        want = (s.spec_key or "x.y").split(".")[0]
        if kind != want:
            self.errors.append(f"{s.sid}: {s.method}() on a {kind or type(base).__name__}")
            if s.target:
                yield from self._write_var(t, frame, s.sid, ops, s.target, None)
            return

        star = f"{self._aml_text(frame, s.base)}.*"
        if spec.blocking:
            yield ("blocked", lambda: len(base.items) > 0, "take")

        result = yield from self._structure_op(t, frame, s, ops, spec, base,
                                               args, star)
        if spec.ret_write and s.target:
            yield from self._write_var(t, frame, s.sid, ops, s.target, result)

    def _structure_op(self, t, frame, s, ops, spec, base, args, star):
        """Perform one builtin structure operation with witness/cell semantics."""
        name = spec.name
        sid = s.sid

        def run():
            if name == "list.add":
                idx = len(base.items)
                base.items.append(args[0])
                return None, idx, [("W", ("slot", base.addr, ("idx", idx)), args[0]),
                                   ("W", ("size", base.addr), len(base.items))]
            if name == "list.get":
                i = args[0] if isinstance(args[0], int) else -1
                ok = 0 <= i < len(base.items)
                v = base.items[i] if ok else None
                return v, i, [("R", ("slot", base.addr, ("idx", i)), v)]
            if name == "list.remove":
                i = args[0] if isinstance(args[0], int) else -1
                ok = 0 <= i < len(base.items)
                v = base.items.pop(i) if ok else None
                cells = [("W", ("slot", base.addr, ("idx", j)), None)
                         for j in range(max(i, 0), len(base.items) + 1)] if ok else []
                cells.append(("W", ("size", base.addr), len(base.items)))
                return v, i, cells
            if name == "list.size":
                return len(base.items), None, [("R", ("size", base.addr), len(base.items))]
            if name == "map.put":
                k = map_key(args[0])
                base.entries[k] = (args[0], args[1])
                return None, witness_value(args[0]), \
                    [("W", ("mkey", base.addr, repr(k)), args[1]),
                     ("W", ("size", base.addr), len(base.entries))]
            if name == "map.get":
                k = map_key(args[0])
                hit = base.entries.get(k)
                v = hit[1] if hit else None
                return v, witness_value(args[0]), [("R", ("mkey", base.addr, repr(k)), v)]
            if name == "map.remove":
                k = map_key(args[0])
                hit = base.entries.pop(k, None)
                v = hit[1] if hit else None
                return v, witness_value(args[0]), \
                    [("W", ("mkey", base.addr, repr(k)), None),
                     ("W", ("size", base.addr), len(base.entries))]
            if name == "map.contains":
                k = map_key(args[0])
                v = k in base.entries
                return v, witness_value(args[0]), [("R", ("mkey", base.addr, repr(k)), v)]
            if name == "map.size":
                return len(base.entries), None, [("R", ("size", base.addr), len(base.entries))]
            if name == "queue.offer":
                slot = self.alloc.fresh()
                base.items.append((args[0], slot))
                return None, witness_value(args[0]), \
                    [("W", ("slot", base.addr, slot), args[0]),
                     ("W", ("size", base.addr), len(base.items))]
            if name in ("queue.poll", "queue.take"):
                if base.items:
                    v, slot = base.items.popleft()
                    return v, witness_value(v), \
                        [("R", ("slot", base.addr, slot), v),
                         ("W", ("slot", base.addr, slot), None),
                         ("W", ("size", base.addr), len(base.items))]
                return None, None, [("R", ("size", base.addr), 0)]
            if name == "queue.peek":
                if base.items:
                    v, slot = base.items[0]
                    return v, witness_value(v), [("R", ("slot", base.addr, slot), v)]
                return None, None, [("R", ("size", base.addr), 0)]
            if name == "queue.size":
                return len(base.items), None, [("R", ("size", base.addr), len(base.items))]
            if name == "queue.isEmpty":
                return len(base.items) == 0, None, \
                    [("R", ("size", base.addr), len(base.items))]
            raise RunError(f"unhandled builtin {name}")

        # the structure op is one physical action; every spec'd star node
        # shares one interval bracketing it
        effects = list(spec.base_effects)
        flagged = [(eff, ops.for_access(eff, star) if ops else None)
                   for eff in effects]
        any_interval = any(f and "interval" in f for _, f in flagged)
        ts_start = None
        if any_interval:
            ts_start = self.clock()
            yield ("step", )
        value, witness, cells = run()
        instant = self.clock()
        ts_end = None
        if any_interval:
            yield ("step", )
            ts_end = self.clock()
        ikeys: dict[str, tuple] = {}
        for eff, flags in flagged:
            if not flags:
                continue
            node = f"{sid}/{eff}/{star}"
            if "value" in flags:
                self.emit(t, ev.VALUE_LOG, node=node, value=snapshot(value))
            if "base" in flags:
                self.emit(t, ev.BASE_LOG, node=node, address=base.addr)
            if "witness" in flags:
                self.emit(t, ev.WITNESS_LOG, node=node, value=witness)
            if "interval" in flags:
                e = self.emit(t, ev.INTERVAL_LOG, node=node,
                              ts_start=ts_start, ts_end=ts_end)
                ikeys[node] = e.key()
        if self.shadow is not None:
            for eff in effects:
                node = f"{sid}/{eff}/{star}"
                self.shadow.access(t.id, node, eff, None, value, base.addr,
                                   witness, instant, ikeys.get(node))
            for eff_typ, cell, cvalue in cells:
                node = f"{sid}/{eff_typ}/{star}"
                self.shadow.cell_op(t.id, node, eff_typ, cell, cvalue)
        return value


def _eval(expr, vals: dict):
    if isinstance(expr, Var):
        return vals[expr.name]
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, Unary):
        return unop(expr.op, _eval(expr.operand, vals))
    return binop(expr.op, _eval(expr.left, vals), _eval(expr.right, vals))


def run_program(ip: InstrumentedProgram, workload: Workload,
                cfg: RuntimeConfig, info: ProgramInfo,
                oracle: bool = False) -> RunResult:
    return Engine(ip, workload, cfg, info, oracle=oracle).run()
