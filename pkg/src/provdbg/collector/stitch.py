"""Cross-component trace stitching via caller-id matching."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..runtime import events as ev
from .store import TraceStore


@dataclass
class Stitched:
    # child trace -> (parent trace, call counter)
    parent: dict[int, tuple[int, int]] = field(default_factory=dict)
    orphans: list[int] = field(default_factory=list)
    # (caller trace, k) -> CallerSet event
    set_events: dict[tuple[int, int], ev.TraceEvent] = field(default_factory=dict)

    def root_of(self, trace_id: int) -> int:
        seen = set()
        while trace_id in self.parent and trace_id not in seen:
            seen.add(trace_id)
            trace_id = self.parent[trace_id][0]
        return trace_id

    def children_of(self, trace_id: int) -> list[tuple[int, int]]:
        """(call counter, child trace), ordered by counter."""
        out = [(k, child) for child, (parent, k) in self.parent.items()
               if parent == trace_id]
        return sorted(out)

    def tree_of(self, trace_id: int) -> set[int]:
        root = self.root_of(trace_id)
        out = {root}
        changed = True
        while changed:
            changed = False
            for child, (parent, _) in self.parent.items():
                if parent in out and child not in out:
                    out.add(child)
                    changed = True
        return out


def stitch(store: TraceStore) -> Stitched:
    st = Stitched()
    for e in store.caller_events(ev.CALLER_SET):
        st.set_events[(e.caller_trace, e.caller_seq)] = e
    for e in store.caller_events(ev.CALLER_GET):
        key = (e.caller_trace, e.caller_seq)
        if key in st.set_events:
            st.parent[e.trace_id] = key
        else:
            st.orphans.append(e.trace_id)
    return st


def trace_role(store: TraceStore, st: Stitched, trace_id: int) -> tuple:
    """Canonical identity of a trace: (own root fn, kind, parent fn or None)."""
    meta = store.traces_meta.get(trace_id, {})
    parent = st.parent.get(trace_id)
    parent_fn: Optional[str] = None
    if parent is not None:
        parent_fn = store.traces_meta.get(parent[0], {}).get("root")
    return (meta.get("root", f"trace{trace_id}"), meta.get("kind", "?"), parent_fn)
