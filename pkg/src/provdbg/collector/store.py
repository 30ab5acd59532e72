"""Trace store: ingestion, access-record grouping, persistence.

Ingestion is idempotent on (traceId, threadId, seq) and tolerates reordered
arrival; malformed records are quarantined. The logs of one access (value,
base, witness, interval) are emitted consecutively on one thread for one
node, so records group by scanning each thread's events in seq order.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from ..runtime import events as ev


@dataclass
class AccessRecord:
    node: str
    trace_id: int
    thread_id: int
    seq_first: int
    seq_last: int
    ts: int
    value: object = None
    has_value: bool = False
    base: Optional[int] = None
    witness: object = None
    has_witness: bool = False
    ts_start: Optional[int] = None
    ts_end: Optional[int] = None

    @property
    def type(self) -> str:
        return self.node.split("/")[3]

    @property
    def key(self) -> tuple:
        return (self.trace_id, self.thread_id, self.seq_first)

    @property
    def interval_key(self) -> tuple:
        return (self.trace_id, self.thread_id, self.seq_last)

    def precedes(self, other: "AccessRecord") -> bool:
        """Strict interval order: this access surely finished before that one."""
        return (self.ts_end is not None and other.ts_start is not None
                and self.ts_end < other.ts_start)


class TraceStore:
    def __init__(self, traces_meta: Optional[dict] = None):
        self.events: dict[tuple, ev.TraceEvent] = {}
        self.quarantined: list[tuple[str, object]] = []
        self.traces_meta = traces_meta or {}
        self._dirty = True
        self._records: list[AccessRecord] = []
        self._by_node: dict[str, list[AccessRecord]] = {}
        self._by_base: dict[int, list[AccessRecord]] = {}
        self._iterations: dict[tuple[int, int], list[ev.TraceEvent]] = {}

    # -------------------------------------------------------------- ingest
    def ingest(self, stream: Iterable[ev.TraceEvent]) -> int:
        added = 0
        for e in stream:
            problem = _malformed(e)
            if problem:
                self.quarantined.append((problem, e))
                continue
            k = e.key()
            if k in self.events:
                continue
            self.events[k] = e
            added += 1
        if added:
            self._dirty = True
        return added

    @property
    def count(self) -> int:
        return len(self.events)

    # ------------------------------------------------------------- indexes
    def _build(self) -> None:
        if not self._dirty:
            return
        self._records = []
        self._by_node = {}
        self._by_base = {}
        self._iterations = {}
        per_thread: dict[tuple[int, int], list[ev.TraceEvent]] = {}
        for e in self.events.values():
            per_thread.setdefault((e.trace_id, e.thread_id), []).append(e)
        for (tid, th), evs in sorted(per_thread.items()):
            evs.sort(key=lambda e: e.seq)
            current: Optional[AccessRecord] = None
            for e in evs:
                if e.tag == ev.ITERATION_LOG:
                    self._iterations.setdefault((tid, th), []).append(e)
                if e.tag not in (ev.VALUE_LOG, ev.BASE_LOG, ev.WITNESS_LOG,
                                 ev.INTERVAL_LOG):
                    current = None
                    continue
                if current is None or current.node != e.node or \
                        e.seq != current.seq_last + 1:
                    current = AccessRecord(node=e.node, trace_id=tid,
                                           thread_id=th, seq_first=e.seq,
                                           seq_last=e.seq, ts=e.ts)
                    self._records.append(current)
                else:
                    current.seq_last = e.seq
                if e.tag == ev.VALUE_LOG:
                    current.value = e.value
                    current.has_value = True
                elif e.tag == ev.BASE_LOG:
                    current.base = e.address
                elif e.tag == ev.WITNESS_LOG:
                    current.witness = e.value
                    current.has_witness = True
                elif e.tag == ev.INTERVAL_LOG:
                    current.ts_start, current.ts_end = e.ts_start, e.ts_end
                    current = None  # interval closes the access bundle
        for r in self._records:
            self._by_node.setdefault(r.node, []).append(r)
            if r.base is not None:
                self._by_base.setdefault(r.base, []).append(r)
        self._dirty = False

    def records(self) -> list[AccessRecord]:
        self._build()
        return self._records

    def records_at(self, node: str) -> list[AccessRecord]:
        self._build()
        return self._by_node.get(node, [])

    def records_at_base(self, base: int) -> list[AccessRecord]:
        self._build()
        return self._by_base.get(base, [])

    def caller_events(self, tag: int) -> list[ev.TraceEvent]:
        return sorted((e for e in self.events.values() if e.tag == tag),
                      key=lambda e: e.key())

    def trace_events(self, trace_id: int) -> list[ev.TraceEvent]:
        return sorted((e for e in self.events.values() if e.trace_id == trace_id),
                      key=lambda e: (e.thread_id, e.seq))

    def iteration_at(self, trace_id: int, thread_id: int, seq: int,
                     loop_stmt: str) -> Optional[int]:
        """Latest iteration counter of the loop logged before seq."""
        self._build()
        best = None
        for e in self._iterations.get((trace_id, thread_id), []):
            if e.stmt == loop_stmt and e.seq < seq:
                if best is None or e.seq > best.seq:
                    best = e
        return best.counter if best else None

    # --------------------------------------------------------- persistence
    def save(self, directory: str, manifest: dict) -> None:
        path = Path(directory)
        path.mkdir(parents=True, exist_ok=True)
        components = sorted({e.component for e in self.events.values()})
        comp_index = {c: i for i, c in enumerate(components)}
        with open(path / "events.bin", "wb") as f:
            for k in sorted(self.events):
                f.write(ev.encode_event(self.events[k], comp_index))
        with open(path / "events.jsonl", "w") as f:
            for k in sorted(self.events):
                f.write(ev.to_json_line(self.events[k]) + "\n")
        manifest = dict(manifest)
        manifest["components"] = components
        manifest["eventCount"] = self.count
        manifest["traces"] = {str(k): v for k, v in sorted(self.traces_meta.items())}
        with open(path / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=1, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, directory: str) -> "TraceStore":
        path = Path(directory)
        manifest = json.loads((path / "manifest.json").read_text())
        store = cls(traces_meta={int(k): v for k, v in manifest["traces"].items()})
        data = (path / "events.bin").read_bytes()
        store.ingest(ev.decode_events(data, manifest["components"]))
        return store


def _malformed(e: ev.TraceEvent) -> Optional[str]:
    if e.tag not in ev.TAG_NAMES:
        return "unknown tag"
    if e.seq <= 0 or e.trace_id < 0:
        return "bad sequence or trace id"
    if e.tag in (ev.VALUE_LOG, ev.BASE_LOG, ev.WITNESS_LOG, ev.INTERVAL_LOG) \
            and not e.node:
        return "missing node"
    if e.tag == ev.INTERVAL_LOG and (e.ts_start is None or e.ts_end is None
                                     or e.ts_start > e.ts_end):
        return "bad interval"
    return None


def content_hash(doc: object) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]
