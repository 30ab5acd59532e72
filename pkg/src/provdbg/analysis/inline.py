"""Inlining of short heap-only functions (getters/setters).

Copies candidate bodies into each callsite with fresh local names, removing
the calling-context imprecision those helpers would otherwise introduce.
Statement ids are renumbered afterwards, so this pass runs before any
analysis that keys on ordinals.
"""

from __future__ import annotations

import copy

from ..lang.ir import (Assign, Atom, Branch, Call, FieldLoad, FieldStore,
                       Function, Lit, LoopHead, Program, Return, RpcEntry,
                       Stmt, Var, number_statements)

DEFAULT_MAX_STMTS = 3


def _is_candidate(fn: Function, max_stmts: int) -> bool:
    if fn.entry or fn.synthetic:
        return False
    body = fn.body[1:]  # skip RpcEntry
    if not body or len(body) > max_stmts:
        return False
    for s in body:
        if isinstance(s, (FieldLoad, FieldStore)):
            continue
        if isinstance(s, Return) and (s.value is None or isinstance(s.value, (Var, Lit))):
            continue
        return False
    return True


def inline_short_heap_functions(program: Program,
                                max_stmts: int = DEFAULT_MAX_STMTS) -> Program:
    """Return a new Program with candidate calls expanded at each callsite."""
    prog = copy.deepcopy(program)
    counter = [0]

    for comp in prog.components.values():
        candidates = {name: fn for name, fn in comp.functions.items()
                      if _is_candidate(fn, max_stmts)}
        if not candidates:
            continue
        for fn in comp.functions.values():
            if fn.name in candidates:
                continue
            fn.body = _expand(fn.body, candidates, counter)
        for name in candidates:
            # keep definitions for spawn targets; calls to them are gone
            pass

    for fn in prog.functions():
        number_statements(fn)
    return prog


def _expand(stmts: list[Stmt], candidates: dict[str, Function],
            counter: list[int]) -> list[Stmt]:
    out: list[Stmt] = []
    for s in stmts:
        if isinstance(s, Branch):
            s.then_body = _expand(s.then_body, candidates, counter)
            s.else_body = _expand(s.else_body, candidates, counter)
            out.append(s)
        elif isinstance(s, LoopHead):
            s.body = _expand(s.body, candidates, counter)
            out.append(s)
        elif isinstance(s, Call) and s.func in candidates:
            out.extend(_inline_one(s, candidates[s.func], counter))
        else:
            out.append(s)
    return out


def _inline_one(call: Call, callee: Function, counter: list[int]) -> list[Stmt]:
    counter[0] += 1
    prefix = f"__inl{counter[0]}_"
    rename = {pname: prefix + pname for pname, _ in callee.params}

    def sub_atom(a: Atom) -> Atom:
        if isinstance(a, Var) and a.name in rename:
            return Var(rename[a.name])
        return a

    out: list[Stmt] = []
    for (pname, _), arg in zip(callee.params, call.args):
        bind = Assign(target=rename[pname], expr=arg)
        bind.line = call.line
        out.append(bind)
    for s in callee.body[1:]:
        if isinstance(s, FieldLoad):
            rename.setdefault(s.target, prefix + s.target)
            ns: Stmt = FieldLoad(target=rename[s.target],
                                 base=rename.get(s.base, s.base),
                                 field_name=s.field_name)
        elif isinstance(s, FieldStore):
            ns = FieldStore(base=rename.get(s.base, s.base),
                            field_name=s.field_name,
                            value=sub_atom(s.value) if isinstance(s.value, (Var, Lit)) else s.value)
        elif isinstance(s, Return):
            if call.target is not None and s.value is not None:
                ns = Assign(target=call.target, expr=sub_atom(s.value))
                ns.line = call.line
                out.append(ns)
            break  # nothing after a return executes
        else:  # pragma: no cover - guarded by _is_candidate
            raise AssertionError(f"non-inlinable stmt {s.kind}")
        ns.line = call.line
        out.append(ns)
    return out
