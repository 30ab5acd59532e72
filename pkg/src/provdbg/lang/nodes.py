"""Access-node enumeration: (Stmt, R/W, AML) triples per statement kind.

Library callsites are handled separately (analysis.libeffects) because their
effects come from the spec table; boundary serialization nodes are added there
too since they depend on points-to facts.
"""

from __future__ import annotations

from typing import Callable, Optional, Union

from .ir import (AccessNode, Assign, Branch, Call, Check, FieldLoad,
                 FieldStore, Global, LibCall, Local, LoopHead, New, Program,
                 READ, Ref, Return, RpcCall, RpcEntry, Spawn, Stmt, Var,
                 WRITE, expr_vars)
from .validate import ProgramInfo, analyze

Resolver = Callable[[str], Union[Local, Global]]


def make_resolver(info: ProgramInfo, comp: str, fn: str) -> Resolver:
    def resolve(name: str) -> Union[Local, Global]:
        if info.is_local(comp, fn, name):
            return Local(comp, fn, name)
        return Global(comp, name)
    return resolve


def stmt_nodes(stmt: Stmt, resolve: Resolver) -> list[AccessNode]:
    """Plain (non-library) access nodes of one statement, emission order."""
    sid = stmt.sid
    out: list[AccessNode] = []

    def read(name: str) -> None:
        _add(out, AccessNode(sid, READ, resolve(name)))

    def write(name: str) -> None:
        _add(out, AccessNode(sid, WRITE, resolve(name)))

    if isinstance(stmt, RpcEntry):
        for p in stmt.params:
            write(p)
    elif isinstance(stmt, Assign):
        for v in expr_vars(stmt.expr):
            read(v)
        write(stmt.target)
    elif isinstance(stmt, New):
        write(stmt.target)
    elif isinstance(stmt, FieldLoad):
        read(stmt.base)
        _add(out, AccessNode(sid, READ, Ref(resolve(stmt.base), stmt.field_name)))
        write(stmt.target)
    elif isinstance(stmt, FieldStore):
        read(stmt.base)
        _add(out, AccessNode(sid, WRITE, Ref(resolve(stmt.base), stmt.field_name)))
        for v in expr_vars(stmt.value):
            read(v)
    elif isinstance(stmt, (Branch, LoopHead, Check)):
        for v in expr_vars(stmt.cond):
            read(v)
    elif isinstance(stmt, Return):
        if stmt.value is not None:
            for v in expr_vars(stmt.value):
                read(v)
    elif isinstance(stmt, (Call, RpcCall)):
        for a in stmt.args:
            if isinstance(a, Var):
                read(a.name)
        if stmt.target:
            write(stmt.target)
    elif isinstance(stmt, Spawn):
        for a in stmt.args:
            if isinstance(a, Var):
                read(a.name)
    elif isinstance(stmt, LibCall):
        pass  # deferred to analysis.libeffects
    return out


def _add(out: list[AccessNode], node: AccessNode) -> None:
    if node not in out:
        out.append(node)


def enumerate_access_nodes(program: Program,
                           info: Optional[ProgramInfo] = None) -> list[AccessNode]:
    """All plain access nodes of a validated program, deterministic order."""
    if info is None:
        diags, info = analyze(program)
        if diags:
            raise ValueError("cannot enumerate nodes of invalid program")
    out: list[AccessNode] = []
    seen: set[AccessNode] = set()
    for fn in program.functions():
        resolve = make_resolver(info, fn.component, fn.name)
        for o in fn.order:
            for node in stmt_nodes(fn.stmts[o], resolve):
                if node not in seen:
                    seen.add(node)
                    out.append(node)
    return out
