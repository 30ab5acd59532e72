"""Library effect nodes, serialization-boundary nodes and star overlap.

A library callsite contributes access nodes on the pseudo location (base, *)
per its spec template, plus plain nodes for arguments and the return local.
RPC boundaries contribute (x, *) nodes modeling (de)serialization of
structural values. Overlap between (s1, *) and (s2, *) decides HeapLib edges.
"""

from __future__ import annotations

from collections import defaultdict
from typing import Union

from ..lang.ir import (AccessNode, Function, Global, LibCall, Local, Program,
                       READ, Ref, Return, RpcCall, RpcEntry, STAR, Var, WRITE)
from ..lang.validate import ProgramInfo
from .pointsto import PointsToFacts

Base = Union[Local, Global]


def _resolver(info: ProgramInfo, comp: str, fname: str):
    def resolve(name: str) -> Base:
        if info.is_local(comp, fname, name):
            return Local(comp, fname, name)
        return Global(comp, name)
    return resolve


def library_effect_nodes(program: Program, info: ProgramInfo) -> list[AccessNode]:
    """Per-callsite nodes from the spec table, deterministic order."""
    out: list[AccessNode] = []
    for fn in program.functions():
        resolve = _resolver(info, fn.component, fn.name)
        for o in fn.order:
            s = fn.stmts[o]
            if not isinstance(s, LibCall):
                continue
            key = s.spec_key or s.method
            spec = program.libspecs.get(key)
            if spec is None:
                raise ValueError(f"missing library spec for builtin {key!r}")
            sid = s.sid
            if s.base is not None:
                star = Ref(resolve(s.base), STAR)
                for eff in spec.base_effects:
                    out.append(AccessNode(sid, eff, star))
            for i, a in enumerate(s.args):
                if isinstance(a, Var):
                    out.append(AccessNode(sid, READ, resolve(a.name)))
                    if i < len(spec.arg_star) and spec.arg_star[i]:
                        out.append(AccessNode(sid, spec.arg_star[i],
                                              Ref(resolve(a.name), STAR)))
            if spec.ret_write and s.target:
                out.append(AccessNode(sid, WRITE, resolve(s.target)))
                if spec.ret_star:
                    out.append(AccessNode(sid, spec.ret_star,
                                          Ref(resolve(s.target), STAR)))
    return _dedup(out)


def boundary_star_nodes(program: Program, info: ProgramInfo,
                        pts: PointsToFacts) -> list[AccessNode]:
    """Serialization pseudo-nodes at RPC/external boundaries.

    RpcCall: (R, (arg,*)) per structural argument, (W, (x,*)) for the
    receiver; entry RpcEntry: (W, (p,*)) per structural formal; Return in an
    entry function: (R, (v,*)). Structural = points somewhere.
    """
    out: list[AccessNode] = []
    for fn in program.functions():
        resolve = _resolver(info, fn.component, fn.name)
        for o in fn.order:
            s = fn.stmts[o]
            if isinstance(s, RpcCall):
                for a in s.args:
                    if isinstance(a, Var) and pts.of(resolve(a.name)):
                        out.append(AccessNode(s.sid, READ, Ref(resolve(a.name), STAR)))
                if s.target and pts.of(resolve(s.target)):
                    out.append(AccessNode(s.sid, WRITE, Ref(resolve(s.target), STAR)))
            elif isinstance(s, RpcEntry) and fn.entry:
                for p in s.params:
                    if pts.of(resolve(p)):
                        out.append(AccessNode(s.sid, WRITE, Ref(resolve(p), STAR)))
            elif isinstance(s, Return) and fn.entry:
                if isinstance(s.value, Var) and pts.of(resolve(s.value.name)):
                    out.append(AccessNode(s.sid, READ, Ref(resolve(s.value.name), STAR)))
    return _dedup(out)


def _dedup(nodes: list[AccessNode]) -> list[AccessNode]:
    seen: set[AccessNode] = set()
    out = []
    for n in nodes:
        if n not in seen:
            seen.add(n)
            out.append(n)
    return out


def library_overlap(program: Program, info: ProgramInfo, pts: PointsToFacts,
                    star_nodes: list[AccessNode]
                    ) -> tuple[set[frozenset], list[str]]:
    """May-overlap relation over star bases, plus cross-function warnings.

    Direct: bases may-alias. Indirect (within one function only): bases used
    at a common library callsite with at least one written star, closed
    transitively per function.
    """
    bases = {n.aml.base for n in star_nodes if isinstance(n.aml, Ref) and n.aml.field == STAR}
    overlap: set[frozenset] = set()
    base_list = sorted(bases, key=str)
    for i, a in enumerate(base_list):
        for b in base_list[i:]:
            if pts.may_alias(a, b):
                overlap.add(frozenset((a, b)))

    # indirect rule: library callsites with several star locals
    per_fn_pairs: dict[tuple[str, str], set[frozenset]] = defaultdict(set)
    for fn in program.functions():
        resolve = _resolver(info, fn.component, fn.name)
        for s in fn.stmts.values():
            if not isinstance(s, LibCall):
                continue
            spec = program.libspecs.get(s.spec_key or s.method)
            if spec is None:
                continue
            used: list[tuple[Base, bool]] = []  # (base, written)
            if s.base is not None:
                used.append((resolve(s.base), "W" in spec.base_effects))
            for i, a in enumerate(s.args):
                star = spec.arg_star[i] if i < len(spec.arg_star) else None
                if isinstance(a, Var) and star:
                    used.append((resolve(a.name), star == "W"))
            if spec.ret_star and s.target:
                used.append((resolve(s.target), spec.ret_star == "W"))
            for i, (a, wa) in enumerate(used):
                for b, wb in used[i + 1:]:
                    if a != b and (wa or wb):
                        per_fn_pairs[(fn.component, fn.name)].add(frozenset((a, b)))

    for pairs in per_fn_pairs.values():
        # transitive closure within the function
        adj: dict[Base, set[Base]] = defaultdict(set)
        for pair in pairs | {p for p in overlap if _same_fn(p, pairs)}:
            items = tuple(pair)
            if len(items) == 2:
                adj[items[0]].add(items[1])
                adj[items[1]].add(items[0])
        for start in list(adj):
            seen = {start}
            stack = [start]
            while stack:
                cur = stack.pop()
                for nxt in adj[cur]:
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
            for other in seen - {start}:
                overlap.add(frozenset((start, other)))

    warnings = _cross_function_warnings(program, info, star_nodes)
    return overlap, warnings


def _same_fn(pair: frozenset, pairs: set[frozenset]) -> bool:
    flat = {b for p in pairs for b in p}
    return all(b in flat for b in pair)


def _cross_function_warnings(program: Program, info: ProgramInfo,
                             star_nodes: list[AccessNode]) -> list[str]:
    """Syntactically visible cases the per-function indirect rule ignores."""
    star_locals = {(n.aml.base.component, n.aml.base.function, n.aml.base.name)
                   for n in star_nodes
                   if isinstance(n.aml, Ref) and isinstance(n.aml.base, Local)}
    out = []
    from ..lang.ir import Call
    for fn in program.functions():
        for s in fn.stmts.values():
            if isinstance(s, Call):
                callee = program.components[fn.component].functions.get(s.func)
                if callee is None:
                    continue
                for (pname, _), a in zip(callee.params, s.args):
                    if (isinstance(a, Var)
                            and (fn.component, fn.name, a.name) in star_locals
                            and (fn.component, s.func, pname) in star_locals):
                        out.append(
                            f"library object {a.name!r} crosses {fn.name} -> "
                            f"{s.func}; indirect overlap is not tracked "
                            f"inter-procedurally")
    return out
