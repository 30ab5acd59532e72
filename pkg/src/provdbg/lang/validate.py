"""Name resolution, structure-kind inference and program validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .ir import (Assign, Branch, Call, Check, Expr, FieldLoad, FieldStore,
                 Function, INIT_FUNCTION, LibCall, Lit, LoopHead, New,
                 Program, Return, RpcCall, RpcEntry, Spawn, Stmt, Var,
                 expr_vars)

SCALAR_RETURNS = {"list.size", "map.contains", "map.size", "queue.size",
                  "queue.isEmpty", "now", "rand", "input"}
STRUCTURAL = ("obj", "list", "map", "queue")


@dataclass(frozen=True)
class Diagnostic:
    component: str
    function: str
    line: int
    message: str

    def __str__(self) -> str:
        return f"{self.component}.{self.function}:{self.line}: {self.message}"


@dataclass
class ProgramInfo:
    """Resolution facts other passes consume."""

    locals: dict[tuple[str, str], set[str]] = field(default_factory=dict)
    kinds: dict[tuple[str, str, str], Optional[str]] = field(default_factory=dict)
    global_kinds: dict[tuple[str, str], str] = field(default_factory=dict)
    return_kinds: dict[tuple[str, str], Optional[str]] = field(default_factory=dict)

    def is_local(self, comp: str, fn: str, name: str) -> bool:
        return name in self.locals.get((comp, fn), ())

    def kind_of(self, comp: str, fn: str, name: str) -> Optional[str]:
        if self.is_local(comp, fn, name):
            return self.kinds.get((comp, fn, name))
        gk = self.global_kinds.get((comp, name))
        return {"int": "val"}.get(gk, gk) if gk else None


def _targets(stmt: Stmt) -> list[str]:
    if isinstance(stmt, (Assign, New, FieldLoad)):
        return [stmt.target]
    if isinstance(stmt, (Call, LibCall, RpcCall)) and stmt.target:
        return [stmt.target]
    if isinstance(stmt, RpcEntry):
        return list(stmt.params)
    return []


def collect_locals(fn: Function) -> set[str]:
    out: set[str] = set()
    for s in fn.stmts.values():
        out.update(_targets(s))
    return out


def _join(a: Optional[str], b: Optional[str]) -> tuple[Optional[str], bool]:
    """Kind lattice join; second value is True on conflict."""
    if a is None:
        return b, False
    if b is None or a == b:
        return a, False
    return a, True


def analyze(program: Program) -> tuple[list[Diagnostic], ProgramInfo]:
    diags: list[Diagnostic] = []
    info = ProgramInfo()

    for comp in program.components.values():
        shared = set()
        for sname, skind in comp.shareds:
            info.global_kinds[(comp.name, sname)] = skind
            shared.add(sname)
        for fn in comp.functions.values():
            # a name declared shared always denotes the global in this component
            info.locals[(comp.name, fn.name)] = collect_locals(fn) - shared

    def diag(fn: Function, stmt: Stmt, msg: str) -> None:
        diags.append(Diagnostic(fn.component, fn.name, stmt.line, msg))

    # -- name resolution
    for comp in program.components.values():
        shared_names = {s[0] for s in comp.shareds}
        for fn in comp.functions.values():
            local_names = info.locals[(comp.name, fn.name)]
            for pname, _ in fn.params:
                if pname in shared_names:
                    diag(fn, fn.stmts[0], f"parameter {pname!r} shadows shared global")
            # seed kinds from parameter annotations
            for pname, ptype in fn.params:
                info.kinds[(comp.name, fn.name, pname)] = (
                    "val" if ptype in ("int", "bool", "str") else ptype)

            def check_name(stmt: Stmt, name: str) -> None:
                if name in local_names or name in shared_names:
                    return
                diag(fn, stmt, f"undefined name {name!r}")

            for s in fn.stmts.values():
                for name in _reads(s):
                    check_name(s, name)
                if isinstance(s, Call):
                    target = comp.functions.get(s.func)
                    if target is None or target.synthetic:
                        diag(fn, s, f"undefined function {s.func!r}")
                    elif target.entry:
                        diag(fn, s, f"direct call to entry function {s.func!r}")
                    elif len(s.args) != len(target.params):
                        diag(fn, s, f"{s.func} expects {len(target.params)} args")
                elif isinstance(s, Spawn):
                    target = comp.functions.get(s.func)
                    if target is None or target.synthetic:
                        diag(fn, s, f"spawn target {s.func!r} is not a local function")
                    elif len(s.args) != len(target.params):
                        diag(fn, s, f"{s.func} expects {len(target.params)} args")
                elif isinstance(s, RpcCall):
                    tcomp = program.components.get(s.component)
                    if tcomp is None:
                        diag(fn, s, f"rpc to unknown component {s.component!r}")
                        continue
                    if s.component == comp.name:
                        diag(fn, s, "rpc target must be in another component")
                    tfn = tcomp.functions.get(s.func)
                    if tfn is None or tfn.synthetic:
                        diag(fn, s, f"rpc to unknown function {s.component}.{s.func}")
                    elif not tfn.entry:
                        diag(fn, s, f"rpc target {s.component}.{s.func} is not an entry function")
                    elif len(s.args) != len(tfn.params):
                        diag(fn, s, f"{s.component}.{s.func} expects {len(tfn.params)} args")
                elif isinstance(s, LibCall) and s.base is None:
                    spec = program.libspecs.get(s.method)
                    if spec is None:
                        diag(fn, s, f"unknown builtin {s.method!r}")
                    elif s.method == "input" and not (
                            len(s.args) == 1 and isinstance(s.args[0], Lit)
                            and isinstance(s.args[0].value, str)):
                        diag(fn, s, "input() takes one string literal")
                    elif s.method == "rand" and len(s.args) != 1:
                        diag(fn, s, "rand() takes one argument")
                    elif s.method == "now" and s.args:
                        diag(fn, s, "now() takes no arguments")

    # -- kind inference fixpoint (flow-insensitive per local)
    conflicts: set[tuple[str, str, str]] = set()

    def kind_of_expr(comp: str, fname: str, e: Expr) -> Optional[str]:
        if isinstance(e, Var):
            if info.is_local(comp, fname, e.name):
                return info.kinds.get((comp, fname, e.name))
            gk = info.global_kinds.get((comp, e.name))
            return {"int": "val"}.get(gk, gk) if gk else None
        return "val"

    changed = True
    while changed:
        changed = False
        for fn in program.functions():
            comp = fn.component
            ret_kind = info.return_kinds.get((comp, fn.name))
            for s in fn.stmts.values():
                new_kind: Optional[str] = None
                tgt = None
                if isinstance(s, New):
                    tgt, new_kind = s.target, s.alloc_kind
                elif isinstance(s, Assign):
                    tgt, new_kind = s.target, kind_of_expr(comp, fn.name, s.expr)
                elif isinstance(s, FieldLoad):
                    tgt, new_kind = s.target, None
                elif isinstance(s, Call) and s.target:
                    tgt = s.target
                    new_kind = info.return_kinds.get((comp, s.func))
                elif isinstance(s, RpcCall) and s.target:
                    tgt = s.target
                    new_kind = info.return_kinds.get((s.component, s.func))
                elif isinstance(s, LibCall) and s.target:
                    tgt = s.target
                    key = s.spec_key or s.method
                    new_kind = "val" if key in SCALAR_RETURNS else None
                if tgt is not None and not (isinstance(s, RpcEntry)):
                    key3 = (comp, fn.name, tgt)
                    if info.is_local(comp, fn.name, tgt):
                        joined, conflict = _join(info.kinds.get(key3), new_kind)
                        if conflict:
                            conflicts.add(key3)
                        elif joined != info.kinds.get(key3):
                            info.kinds[key3] = joined
                            changed = True
                if isinstance(s, Return) and s.value is not None:
                    k = kind_of_expr(comp, fn.name, s.value)
                    joined, conflict = _join(ret_kind, k)
                    if not conflict and joined != ret_kind:
                        ret_kind = joined
                        info.return_kinds[(comp, fn.name)] = joined
                        changed = True
                # libcall base requires a structural kind; resolve spec key
                if isinstance(s, LibCall) and s.base is not None:
                    bk = info.kind_of(comp, fn.name, s.base)
                    if bk in ("list", "map", "queue"):
                        key = f"{bk}.{s.method}"
                        if key != s.spec_key:
                            s.spec_key = key
                            changed = True
            if fn.name not in info.return_kinds:
                info.return_kinds.setdefault((comp, fn.name), ret_kind)

    for comp_name, fn_name, local in sorted(conflicts):
        fn = program.components[comp_name].functions[fn_name]
        diags.append(Diagnostic(comp_name, fn_name, fn.line,
                                f"conflicting structure kinds for {local!r}"))

    # -- libcall spec keys must resolve
    for fn in program.functions():
        for s in fn.stmts.values():
            if isinstance(s, LibCall):
                key = s.spec_key or s.method
                if s.base is not None:
                    bk = info.kind_of(fn.component, fn.name, s.base)
                    if bk not in ("list", "map", "queue"):
                        diags.append(Diagnostic(
                            fn.component, fn.name, s.line,
                            f"cannot infer structure kind of {s.base!r} "
                            f"for .{s.method}() (annotate or restructure)"))
                        continue
                if key not in program.libspecs:
                    diags.append(Diagnostic(fn.component, fn.name, s.line,
                                            f"no builtin spec for {key!r}"))
                else:
                    s.spec_key = key

    return diags, info


def _reads(stmt: Stmt) -> list[str]:
    """Variable names a statement reads (for name resolution)."""
    out: list[str] = []
    if isinstance(stmt, Assign):
        out += expr_vars(stmt.expr)
    elif isinstance(stmt, FieldLoad):
        out.append(stmt.base)
    elif isinstance(stmt, FieldStore):
        out.append(stmt.base)
        out += expr_vars(stmt.value)
    elif isinstance(stmt, (Branch, LoopHead, Check)):
        out += expr_vars(stmt.cond)
    elif isinstance(stmt, Return):
        if stmt.value is not None:
            out += expr_vars(stmt.value)
    elif isinstance(stmt, (Call, Spawn, RpcCall)):
        out += [a.name for a in stmt.args if isinstance(a, Var)]
    elif isinstance(stmt, LibCall):
        if stmt.base is not None:
            out.append(stmt.base)
        out += [a.name for a in stmt.args if isinstance(a, Var)]
    return out


def validate_program(program: Program) -> list[Diagnostic]:
    """Diagnostics for every invariant violation; empty means well-formed."""
    return analyze(program)[0]


def require_valid(program: Program) -> ProgramInfo:
    diags, info = analyze(program)
    if diags:
        raise ValueError("invalid program:\n" + "\n".join(map(str, diags)))
    return info
