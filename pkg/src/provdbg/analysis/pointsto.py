"""Field-sensitive, context-insensitive Andersen points-to analysis.

Allocation sites abstract by statement id; collection contents live under the
pseudo field 'elem'. Direct calls and spawns flow parameters and returns like
assignments. RPC boundaries do NOT flow: receivers and entry formals get
opaque materialization sites, each with a companion "deep blob" site standing
for everything reachable under the unmarshaled value (any field access on an
opaque site redirects to its blob). Cross-component dependence is carried by
the SDG's InterProc edges at the boundary, not by aliasing.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from ..lang.ir import (Assign, Call, FieldLoad, FieldStore, Function, Global,
                       LibCall, Local, New, Program, Return, RpcCall,
                       RpcEntry, Spawn, StmtId, Var)
from ..lang.validate import ProgramInfo

ELEM = "elem"
DEEP = "*deep"


@dataclass(frozen=True, order=True)
class AllocSite:
    sid: StmtId
    tag: str = ""

    def __str__(self) -> str:
        return f"{self.sid}{'#' + self.tag if self.tag else ''}"


Slot = Union[Local, Global, tuple]  # tuple = ("fld", AllocSite, field)


def _fld(site: AllocSite, fieldname: str) -> tuple:
    return ("fld", site, fieldname)


@dataclass
class PointsToFacts:
    pts: dict[Slot, set[AllocSite]] = field(default_factory=dict)
    shared: set[AllocSite] = field(default_factory=set)
    opaque: set[AllocSite] = field(default_factory=set)
    field_edges: dict[AllocSite, dict[str, set[AllocSite]]] = field(default_factory=dict)
    _reach_cache: dict[AllocSite, frozenset] = field(default_factory=dict)

    def of(self, slot: Slot) -> set[AllocSite]:
        return self.pts.get(slot, set())

    def may_alias(self, a: Slot, b: Slot) -> bool:
        if a == b:
            return bool(self.of(a))
        return bool(self.of(a) & self.of(b))

    def base_shared(self, slot: Slot) -> bool:
        return bool(self.of(slot) & self.shared)

    def reach_site(self, site: AllocSite) -> frozenset:
        """site plus everything reachable over field edges."""
        cached = self._reach_cache.get(site)
        if cached is not None:
            return cached
        seen: set[AllocSite] = set()
        work = deque([site])
        while work:
            s = work.popleft()
            if s in seen:
                continue
            seen.add(s)
            for targets in self.field_edges.get(s, {}).values():
                work.extend(targets - seen)
        result = frozenset(seen)
        self._reach_cache[site] = result
        return result

    def reach(self, slot: Slot) -> frozenset:
        out: set[AllocSite] = set()
        for site in self.of(slot):
            out |= self.reach_site(site)
        return frozenset(out)


@dataclass
class _Constraints:
    copies: list[tuple[Slot, Slot]] = field(default_factory=list)        # src -> dst
    allocs: list[tuple[AllocSite, Slot]] = field(default_factory=list)   # site -> slot
    loads: list[tuple[Slot, str, Slot]] = field(default_factory=list)    # dst = base.f
    stores: list[tuple[Slot, str, Slot]] = field(default_factory=list)   # base.f = src
    opaque: set[AllocSite] = field(default_factory=set)
    deep: dict[AllocSite, AllocSite] = field(default_factory=dict)


def _gather(program: Program, info: ProgramInfo) -> _Constraints:
    cons = _Constraints()

    def slot(comp: str, fname: str, name: str) -> Slot:
        if info.is_local(comp, fname, name):
            return Local(comp, fname, name)
        return Global(comp, name)

    def add_opaque(sid: StmtId, tag: str, target: Slot) -> None:
        root = AllocSite(sid, tag)
        blob = AllocSite(sid, tag + ".deep")
        cons.allocs.append((root, target))
        cons.allocs.append((blob, _fld(root, DEEP)))
        cons.allocs.append((blob, _fld(blob, DEEP)))
        cons.opaque.update((root, blob))
        cons.deep[root] = blob
        cons.deep[blob] = blob

    def returns_of(comp: str, fname: str) -> list[Slot]:
        out = []
        callee = program.components[comp].functions[fname]
        for s in callee.stmts.values():
            if isinstance(s, Return) and isinstance(s.value, Var):
                out.append(slot(comp, fname, s.value.name))
        return out

    def bind_params(comp: str, fname: str, args, caller_fn: Function) -> None:
        callee = program.components[comp].functions[fname]
        for (pname, _), a in zip(callee.params, args):
            if isinstance(a, Var):
                cons.copies.append(
                    (slot(caller_fn.component, caller_fn.name, a.name),
                     Local(comp, fname, pname)))

    for fn in program.functions():
        comp = fn.component
        for s in fn.stmts.values():
            if isinstance(s, New):
                cons.allocs.append((AllocSite(s.sid), slot(comp, fn.name, s.target)))
            elif isinstance(s, Assign) and isinstance(s.expr, Var):
                cons.copies.append((slot(comp, fn.name, s.expr.name),
                                    slot(comp, fn.name, s.target)))
            elif isinstance(s, FieldLoad):
                cons.loads.append((slot(comp, fn.name, s.base), s.field_name,
                                   slot(comp, fn.name, s.target)))
            elif isinstance(s, FieldStore) and isinstance(s.value, Var):
                cons.stores.append((slot(comp, fn.name, s.base), s.field_name,
                                    slot(comp, fn.name, s.value.name)))
            elif isinstance(s, (Call, Spawn)):
                bind_params(comp, s.func, s.args, fn)
                if isinstance(s, Call) and s.target:
                    for r in returns_of(comp, s.func):
                        cons.copies.append((r, slot(comp, fn.name, s.target)))
            elif isinstance(s, RpcCall):
                # marshaling boundary: no aliasing across; receiver materializes
                if s.target:
                    rk = info.return_kinds.get((s.component, s.func))
                    if rk != "val":
                        add_opaque(s.sid, "ret", slot(comp, fn.name, s.target))
            elif isinstance(s, RpcEntry) and fn.entry:
                for pname, ptype in fn.params:
                    if ptype in ("obj", "list", "map", "queue"):
                        add_opaque(s.sid, pname, Local(comp, fn.name, pname))
            elif isinstance(s, LibCall):
                spec = program.libspecs[s.spec_key or s.method]
                base = slot(comp, fn.name, s.base) if s.base else None
                tgt = slot(comp, fn.name, s.target) if s.target else None
                if base is not None:
                    adds = {"list.add": 0, "queue.offer": 0, "map.put": 1}
                    if spec.name in adds:
                        a = s.args[adds[spec.name]]
                        if isinstance(a, Var):
                            cons.stores.append((base, ELEM, slot(comp, fn.name, a.name)))
                    elif spec.ret_write and tgt is not None and spec.witness != "none":
                        # element retrieval: get/poll/peek/take/remove
                        cons.loads.append((base, ELEM, tgt))
                if spec.ret_star == "W" and tgt is not None:
                    cons.allocs.append((AllocSite(s.sid, "ret"), tgt))
    return cons


def solve(cons: _Constraints) -> PointsToFacts:
    pts: dict[Slot, set[AllocSite]] = defaultdict(set)
    succs: dict[Slot, set[Slot]] = defaultdict(set)
    loads_by_base: dict[Slot, list[tuple[str, Slot]]] = defaultdict(list)
    stores_by_base: dict[Slot, list[tuple[str, Slot]]] = defaultdict(list)
    work: deque[Slot] = deque()

    def cell(site: AllocSite, f: str) -> tuple:
        # opaque sites collapse every field into the deep blob
        if site in cons.opaque:
            return _fld(site, DEEP)
        return _fld(site, f)

    def add_pts(slot_: Slot, sites: Iterable[AllocSite]) -> None:
        new = set(sites) - pts[slot_]
        if new:
            pts[slot_] |= new
            work.append(slot_)

    for base, f, dst in cons.loads:
        loads_by_base[base].append((f, dst))
    for base, f, src in cons.stores:
        stores_by_base[base].append((f, src))
    for src, dst in cons.copies:
        succs[src].add(dst)
    for site, slot_ in cons.allocs:
        add_pts(slot_, [site])

    while work:
        slot_ = work.popleft()
        sites = pts[slot_]
        for f, dst in loads_by_base.get(slot_, ()):
            for site in list(sites):
                succs.setdefault(cell(site, f), set()).add(dst)
                add_pts(dst, pts[cell(site, f)])
        for f, src in stores_by_base.get(slot_, ()):
            for site in list(sites):
                succs.setdefault(src, set()).add(cell(site, f))
                add_pts(cell(site, f), pts[src])
        for dst in list(succs.get(slot_, ())):
            add_pts(dst, sites)

    facts = PointsToFacts(pts={k: set(v) for k, v in pts.items() if v},
                          opaque=set(cons.opaque))
    for slot_, sites in facts.pts.items():
        if isinstance(slot_, tuple) and slot_[0] == "fld":
            _, site, f = slot_
            facts.field_edges.setdefault(site, {}).setdefault(f, set()).update(sites)
    return facts


def points_to(program: Program, info: ProgramInfo) -> PointsToFacts:
    return solve(_gather(program, info))


def naive_points_to(program: Program, info: ProgramInfo) -> dict:
    """Brute-force oracle: re-apply every rule until nothing changes."""
    cons = _gather(program, info)
    pts: dict[Slot, set[AllocSite]] = defaultdict(set)

    def cell(site: AllocSite, f: str) -> tuple:
        return _fld(site, DEEP) if site in cons.opaque else _fld(site, f)

    for site, slot_ in cons.allocs:
        pts[slot_].add(site)
    changed = True
    while changed:
        changed = False

        def extend(dst: Slot, sites: set[AllocSite]) -> None:
            nonlocal changed
            if not sites <= pts[dst]:
                pts[dst] |= sites
                changed = True

        for src, dst in cons.copies:
            extend(dst, pts[src])
        for base, f, dst in cons.loads:
            for site in list(pts[base]):
                extend(dst, pts[cell(site, f)])
        for base, f, src in cons.stores:
            for site in list(pts[base]):
                extend(cell(site, f), pts[src])
    return {k: set(v) for k, v in pts.items() if v}
