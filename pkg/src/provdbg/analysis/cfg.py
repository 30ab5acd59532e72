"""Per-function control-flow graphs and post-dominance.

CFG nodes are statement ordinals plus a synthetic single EXIT node; the
structured body wires Branch arms to the join point and LoopHead bodies back
to the header. Post-dominator sets are the classic iterative intersection
fixpoint over the reversed graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..lang.ir import Branch, Function, LoopHead, Return, Stmt

EXIT = -1


@dataclass
class Cfg:
    function: Function
    succ: dict[int, list[int]] = field(default_factory=dict)
    pred: dict[int, list[int]] = field(default_factory=dict)

    @property
    def nodes(self) -> list[int]:
        return [*self.function.order, EXIT]


def build_cfg(fn: Function) -> Cfg:
    cfg = Cfg(function=fn)
    succ: dict[int, list[int]] = {o: [] for o in fn.order}
    succ[EXIT] = []

    def wire(stmts: list[Stmt], follow: int) -> None:
        for i, s in enumerate(stmts):
            nxt = stmts[i + 1].sid.ordinal if i + 1 < len(stmts) else follow
            o = s.sid.ordinal
            if isinstance(s, Return):
                succ[o].append(EXIT)
            elif isinstance(s, Branch):
                then_head = s.then_body[0].sid.ordinal if s.then_body else nxt
                else_head = s.else_body[0].sid.ordinal if s.else_body else nxt
                succ[o] = [then_head, else_head]
                wire(s.then_body, nxt)
                wire(s.else_body, nxt)
            elif isinstance(s, LoopHead):
                body_head = s.body[0].sid.ordinal if s.body else o
                succ[o] = [body_head, nxt]
                wire(s.body, o)
            else:
                succ[o].append(nxt)

    wire(fn.body, EXIT)
    cfg.succ = succ
    cfg.pred = {n: [] for n in succ}
    for n, ss in succ.items():
        for s in ss:
            cfg.pred[s].append(n)
    return cfg


def post_dominators(cfg: Cfg) -> dict[int, set[int]]:
    """pdoms[n] = nodes on every path n -> EXIT (n post-dominates itself)."""
    nodes = cfg.nodes
    universe = set(nodes)
    pdom = {n: set(universe) for n in nodes}
    pdom[EXIT] = {EXIT}
    changed = True
    while changed:
        changed = False
        for n in reversed(nodes):
            if n == EXIT:
                continue
            succs = cfg.succ[n]
            new = set(universe)
            for s in succs:
                new &= pdom[s]
            new.add(n)
            if new != pdom[n]:
                pdom[n] = new
                changed = True
    return pdom


def control_dependent_stmts(cfg: Cfg, pdom: dict[int, set[int]]) -> set[tuple[int, int]]:
    """(s, b) pairs: statement s is control dependent on branching stmt b.

    s cdeps on b iff s post-dominates some successor of b but does not
    post-dominate b itself (s != b; header self-dependence dropped).
    """
    out: set[tuple[int, int]] = set()
    for b in cfg.function.order:
        stmt = cfg.function.stmts[b]
        if not isinstance(stmt, (Branch, LoopHead)):
            continue
        strict = pdom[b] - {b}
        for x in cfg.succ[b]:
            for s in pdom[x]:
                if s != b and s != EXIT and s not in strict:
                    out.add((s, b))
    return out


def lexical_parents(fn: Function) -> dict[int, int]:
    """Innermost enclosing Branch/LoopHead ordinal per statement (AST nesting).

    Used by the runtime's dynamic control-dependence oracle; independent of
    the post-dominance computation above.
    """
    out: dict[int, int] = {}

    def walk(stmts: list[Stmt], parent: int) -> None:
        for s in stmts:
            if parent >= 0:
                out[s.sid.ordinal] = parent
            if isinstance(s, Branch):
                walk(s.then_body, s.sid.ordinal)
                walk(s.else_body, s.sid.ordinal)
            elif isinstance(s, LoopHead):
                walk(s.body, s.sid.ordinal)

    walk(fn.body, -1)
    return out
