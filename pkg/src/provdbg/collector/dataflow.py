"""Shared-state read/write resolution from interval timestamps (the CIH).

For a read r at location (base address, witness): the potential writers PW
are all writes to a compatible location that r does not strictly precede;
the resolved set RW removes writers dominated by a later writer that itself
strictly precedes the read. Strict precedence is interval order
(end < start), so overlapping intervals stay ambiguous but the true writer
is never pruned.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .store import AccessRecord, TraceStore


@dataclass
class WriterCandidates:
    read: AccessRecord
    pw: list[AccessRecord]
    rw: list[AccessRecord]

    @property
    def status(self) -> str:
        if not self.pw:
            return "preexisting"
        return "resolved" if len(self.rw) == 1 else "ambiguous"

    @property
    def resolved_writer(self) -> Optional[AccessRecord]:
        return self.rw[0] if len(self.rw) == 1 else None


def _same_execution(a: AccessRecord, b: AccessRecord) -> bool:
    """Both records come from one execution of one statement (e.g. the W and
    R sides of a single poll); such co-accesses share one interval."""
    return (a.trace_id == b.trace_id and a.thread_id == b.thread_id
            and a.node.rsplit("/", 2)[0] == b.node.rsplit("/", 2)[0]
            and a.ts_start == b.ts_start and a.ts_end == b.ts_end)


def _witness_compatible(a: AccessRecord, b: AccessRecord) -> bool:
    wa = a.witness if a.has_witness else None
    wb = b.witness if b.has_witness else None
    if wa is None or wb is None:
        return True  # aggregate/scalar accesses match any cell of the base
    return json.dumps(wa, sort_keys=True) == json.dumps(wb, sort_keys=True)


def writer_candidates(store: TraceStore, read: AccessRecord) -> WriterCandidates:
    if read.base is None or read.ts_start is None:
        raise ValueError(f"read at {read.node} lacks base/interval logs "
                         "(instrumentation plan bug)")
    writes = [w for w in store.records_at_base(read.base)
              if w.type == "W" and w.ts_start is not None
              and _witness_compatible(read, w)
              and not _same_execution(read, w)]
    pw = [w for w in writes if not read.precedes(w)]
    rw = [w for w in pw
          if not any(w.precedes(w2) and w2.precedes(read) for w2 in pw)]
    pw.sort(key=AccessRecord.key.fget)
    rw.sort(key=AccessRecord.key.fget)
    return WriterCandidates(read=read, pw=pw, rw=rw)


def resolve_shared_dataflow(store: TraceStore) -> list[WriterCandidates]:
    """Candidates for every read record that carries base+interval logs."""
    out = []
    for r in store.records():
        if r.type == "R" and r.base is not None and r.ts_start is not None:
            out.append(writer_candidates(store, r))
    return out
