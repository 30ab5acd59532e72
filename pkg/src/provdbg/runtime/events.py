"""Trace events and their wire formats.

Binary format (little-endian), one length-prefixed record per event:

    u32  payload length (bytes after this field)
    u64  traceId
    u32  threadId
    u16  componentId (index into the manifest's component table)
    u32  seq (per-thread, strictly increasing)
    u64  ts
    u8   payload tag
    ...  tag-specific payload (see codecs below)

Strings are u16 length + UTF-8. Values are tagged: 0 null, 1 int (i64),
2 bool, 3 str, 4 object ref (u64 addr + u8 field count + (name, scalar)
pairs), 5 structure snapshot (u64 addr + u8 kindtag + u16 count + values),
6 bare address (u64). The JSON-lines alternative carries the same fields.
See docs/event-format.md.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass
from typing import Iterable, Optional

from ..lang.ir import StmtId

VALUE_LOG = 1
BASE_LOG = 2
WITNESS_LOG = 3
INTERVAL_LOG = 4
ITERATION_LOG = 5
CALLER_SET = 6
CALLER_GET = 7
TRACE_START = 8
TRACE_END = 9

TAG_NAMES = {
    VALUE_LOG: "ValueLog", BASE_LOG: "BaseLog", WITNESS_LOG: "WitnessLog",
    INTERVAL_LOG: "IntervalLog", ITERATION_LOG: "IterationLog",
    CALLER_SET: "CallerSet", CALLER_GET: "CallerGet",
    TRACE_START: "TraceStart", TRACE_END: "TraceEnd",
}


@dataclass(frozen=True)
class TraceEvent:
    trace_id: int
    thread_id: int
    component: str
    seq: int
    ts: int
    tag: int
    # payload fields (tag-dependent; unused ones stay None)
    node: Optional[str] = None          # "comp/fn/ord/R|W/aml"
    stmt: Optional[str] = None          # "comp/fn/ord"
    value: object = None
    address: Optional[int] = None
    ts_start: Optional[int] = None
    ts_end: Optional[int] = None
    counter: Optional[int] = None
    caller_trace: Optional[int] = None
    caller_seq: Optional[int] = None
    function: Optional[str] = None

    @property
    def kind(self) -> str:
        return TAG_NAMES[self.tag]

    def key(self) -> tuple[int, int, int]:
        return (self.trace_id, self.thread_id, self.seq)


# ------------------------------------------------------------------ value enc

def _w_str(buf: io.BytesIO, s: str) -> None:
    b = s.encode()
    buf.write(struct.pack("<H", len(b)))
    buf.write(b)


def _r_str(buf: io.BytesIO) -> str:
    (n,) = struct.unpack("<H", buf.read(2))
    return buf.read(n).decode()


_KIND_TAGS = {"$list": 0, "$map": 1, "$queue": 2}
_KIND_NAMES = {v: k for k, v in _KIND_TAGS.items()}


def _w_value(buf: io.BytesIO, v) -> None:
    if v is None:
        buf.write(b"\x00")
    elif isinstance(v, bool):
        buf.write(b"\x02" + (b"\x01" if v else b"\x00"))
    elif isinstance(v, int):
        buf.write(b"\x01" + struct.pack("<q", v))
    elif isinstance(v, str):
        buf.write(b"\x03")
        _w_str(buf, v)
    elif isinstance(v, dict) and "$ref" in v:
        fields = v.get("fields", {})
        buf.write(b"\x04" + struct.pack("<QB", v["$ref"], len(fields)))
        for name, fv in sorted(fields.items()):
            _w_str(buf, name)
            _w_value(buf, fv)
    elif isinstance(v, dict) and any(k in v for k in _KIND_TAGS):
        kind = next(k for k in _KIND_TAGS if k in v)
        items = v.get("items", v.get("entries", []))
        buf.write(b"\x05" + struct.pack("<QBH", v[kind], _KIND_TAGS[kind], len(items)))
        for item in items:
            if kind == "$map":
                _w_value(buf, item[0])
                _w_value(buf, item[1])
            else:
                _w_value(buf, item)
    else:
        raise ValueError(f"unencodable value {v!r}")


def _r_value(buf: io.BytesIO):
    tag = buf.read(1)[0]
    if tag == 0:
        return None
    if tag == 1:
        return struct.unpack("<q", buf.read(8))[0]
    if tag == 2:
        return buf.read(1) == b"\x01"
    if tag == 3:
        return _r_str(buf)
    if tag == 4:
        addr, n = struct.unpack("<QB", buf.read(9))
        fields = {}
        for _ in range(n):
            name = _r_str(buf)
            fields[name] = _r_value(buf)
        out = {"$ref": addr}
        if fields:
            out["fields"] = fields
        return out
    if tag == 5:
        addr, kindtag, n = struct.unpack("<QBH", buf.read(11))
        kind = _KIND_NAMES[kindtag]
        if kind == "$map":
            items = [[_r_value(buf), _r_value(buf)] for _ in range(n)]
            return {kind: addr, "entries": items}
        return {kind: addr, "items": [_r_value(buf) for _ in range(n)]}
    if tag == 6:
        return {"$ref": struct.unpack("<Q", buf.read(8))[0]}
    raise ValueError(f"bad value tag {tag}")


# ------------------------------------------------------------------- encoding

def encode_event(e: TraceEvent, comp_index: dict[str, int]) -> bytes:
    body = io.BytesIO()
    body.write(struct.pack("<QIHIQB", e.trace_id, e.thread_id,
                           comp_index[e.component], e.seq, e.ts, e.tag))
    if e.tag in (VALUE_LOG, BASE_LOG, WITNESS_LOG, INTERVAL_LOG):
        _w_str(body, e.node or "")
    if e.tag == VALUE_LOG or e.tag == WITNESS_LOG:
        _w_value(body, e.value)
    elif e.tag == BASE_LOG:
        body.write(struct.pack("<Q", e.address or 0))
    elif e.tag == INTERVAL_LOG:
        body.write(struct.pack("<QQ", e.ts_start or 0, e.ts_end or 0))
    elif e.tag == ITERATION_LOG:
        _w_str(body, e.stmt or "")
        body.write(struct.pack("<Q", e.counter or 0))
    elif e.tag in (CALLER_SET, CALLER_GET):
        _w_str(body, e.stmt or "")
        body.write(struct.pack("<QI", e.caller_trace or 0, e.caller_seq or 0))
    elif e.tag in (TRACE_START, TRACE_END):
        _w_str(body, e.function or "")
    raw = body.getvalue()
    return struct.pack("<I", len(raw)) + raw


def decode_events(data: bytes, components: list[str]) -> Iterable[TraceEvent]:
    off = 0
    while off < len(data):
        (n,) = struct.unpack_from("<I", data, off)
        off += 4
        buf = io.BytesIO(data[off:off + n])
        off += n
        trace_id, thread_id, ci, seq, ts, tag = struct.unpack("<QIHIQB", buf.read(27))
        kw: dict = {}
        if tag in (VALUE_LOG, BASE_LOG, WITNESS_LOG, INTERVAL_LOG):
            kw["node"] = _r_str(buf)
        if tag in (VALUE_LOG, WITNESS_LOG):
            kw["value"] = _r_value(buf)
        elif tag == BASE_LOG:
            kw["address"] = struct.unpack("<Q", buf.read(8))[0]
        elif tag == INTERVAL_LOG:
            kw["ts_start"], kw["ts_end"] = struct.unpack("<QQ", buf.read(16))
        elif tag == ITERATION_LOG:
            kw["stmt"] = _r_str(buf)
            kw["counter"] = struct.unpack("<Q", buf.read(8))[0]
        elif tag in (CALLER_SET, CALLER_GET):
            kw["stmt"] = _r_str(buf)
            kw["caller_trace"], kw["caller_seq"] = struct.unpack("<QI", buf.read(12))
        elif tag in (TRACE_START, TRACE_END):
            kw["function"] = _r_str(buf)
        yield TraceEvent(trace_id=trace_id, thread_id=thread_id,
                         component=components[ci], seq=seq, ts=ts, tag=tag, **kw)


def to_json_line(e: TraceEvent) -> str:
    d = {"trace": e.trace_id, "thread": e.thread_id, "component": e.component,
         "seq": e.seq, "ts": e.ts, "kind": e.kind}
    for name in ("node", "stmt", "value", "address", "ts_start", "ts_end",
                 "counter", "caller_trace", "caller_seq", "function"):
        v = getattr(e, name)
        if v is not None:
            d[name] = v
    return json.dumps(d, sort_keys=True)


def from_json_line(line: str) -> TraceEvent:
    d = json.loads(line)
    tag = {v: k for k, v in TAG_NAMES.items()}[d["kind"]]
    return TraceEvent(
        trace_id=d["trace"], thread_id=d["thread"], component=d["component"],
        seq=d["seq"], ts=d["ts"], tag=tag, node=d.get("node"),
        stmt=d.get("stmt"), value=d.get("value"), address=d.get("address"),
        ts_start=d.get("ts_start"), ts_end=d.get("ts_end"),
        counter=d.get("counter"), caller_trace=d.get("caller_trace"),
        caller_seq=d.get("caller_seq"), function=d.get("function"))
