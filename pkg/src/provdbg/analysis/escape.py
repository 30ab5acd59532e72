"""Thread escape analysis: sites reachable from component globals or spawn args."""

from __future__ import annotations

from collections import deque

from ..lang.ir import Global, Local, Program, Spawn, Var
from ..lang.validate import ProgramInfo
from .pointsto import AllocSite, PointsToFacts


def thread_escape(program: Program, info: ProgramInfo,
                  pts: PointsToFacts) -> set[AllocSite]:
    roots: set[AllocSite] = set()
    for comp in program.components.values():
        for sname, _ in comp.shareds:
            roots |= pts.of(Global(comp.name, sname))
        for fn in comp.functions.values():
            for s in fn.stmts.values():
                if isinstance(s, Spawn):
                    for a in s.args:
                        if isinstance(a, Var):
                            slot = (Local(comp.name, fn.name, a.name)
                                    if info.is_local(comp.name, fn.name, a.name)
                                    else Global(comp.name, a.name))
                            roots |= pts.of(slot)

    escaped: set[AllocSite] = set()
    work = deque(roots)
    while work:
        site = work.popleft()
        if site in escaped:
            continue
        escaped.add(site)
        for targets in pts.field_edges.get(site, {}).values():
            work.extend(targets - escaped)
    return escaped
