"""Runtime values: scalars, heap objects, builtin structures, marshaling.

Heap values carry a stable ObjectAddress (allocation counter). Marshaling
deep-copies a value graph with fresh addresses; structure elements keep their
relative order so index witnesses stay aligned across an RPC boundary.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Optional


class Allocator:
    def __init__(self) -> None:
        self._next = 1
        self._lock = threading.Lock()

    def fresh(self) -> int:
        with self._lock:
            addr = self._next
            self._next += 1
            return addr


@dataclass
class ObjVal:
    addr: int
    fields: dict = field(default_factory=dict)


@dataclass
class ListVal:
    addr: int
    items: list = field(default_factory=list)


@dataclass
class MapVal:
    addr: int
    entries: dict = field(default_factory=dict)


@dataclass
class QueueVal:
    addr: int
    items: deque = field(default_factory=deque)


HEAP_TYPES = (ObjVal, ListVal, MapVal, QueueVal)
SCALARS = (int, bool, str, type(None))


def is_heap(v) -> bool:
    return isinstance(v, HEAP_TYPES)


def addr_of(v) -> Optional[int]:
    return v.addr if is_heap(v) else None


def structure_kind(v) -> Optional[str]:
    return {ObjVal: "obj", ListVal: "list", MapVal: "map",
            QueueVal: "queue"}.get(type(v))


def map_key(v):
    """Hashable identity for map keys: scalars by value, heap by address."""
    return ("ref", v.addr) if is_heap(v) else v


def marshal(value, alloc: Allocator, _memo=None):
    """Deep copy with fresh addresses (the RPC serialization boundary)."""
    if _memo is None:
        _memo = {}
    if not is_heap(value):
        return value
    if value.addr in _memo:
        return _memo[value.addr]
    if isinstance(value, ObjVal):
        out = ObjVal(alloc.fresh())
        _memo[value.addr] = out
        for k, v in value.fields.items():
            out.fields[k] = marshal(v, alloc, _memo)
        return out
    if isinstance(value, ListVal):
        out = ListVal(alloc.fresh())
        _memo[value.addr] = out
        out.items.extend(marshal(v, alloc, _memo) for v in value.items)
        return out
    if isinstance(value, MapVal):
        out = MapVal(alloc.fresh())
        _memo[value.addr] = out
        for k_orig, v in value.entries.values():
            nk = marshal(k_orig, alloc, _memo)
            out.entries[map_key(nk)] = (nk, marshal(v, alloc, _memo))
        return out
    out = QueueVal(alloc.fresh())
    _memo[value.addr] = out
    out.items.extend(marshal(v, alloc, _memo) for v in value.items)
    return out


def snapshot(value, depth: int = 2):
    """JSON-able shallow snapshot for value logs (primitive fields inline)."""
    if not is_heap(value):
        return value
    if depth <= 0:
        return {"$ref": value.addr}
    if isinstance(value, ObjVal):
        return {"$ref": value.addr,
                "fields": {k: snapshot(v, 0) if is_heap(v) else v
                           for k, v in value.fields.items()}}
    if isinstance(value, ListVal):
        return {"$list": value.addr,
                "items": [snapshot(v, depth - 1) for v in value.items]}
    if isinstance(value, MapVal):
        return {"$map": value.addr,
                "entries": [[snapshot(k, 0), snapshot(v, depth - 1)]
                            for k, v in value.entries.values()]}
    return {"$queue": value.addr,
            "items": [snapshot(v, depth - 1) for v in value.items]}


def witness_value(v):
    """Witness encoding: scalars by value, heap elements by address."""
    return {"$ref": v.addr} if is_heap(v) else v


# -- total binary/unary operator semantics (null poisons, no runtime traps)

def binop(op: str, a, b):
    if op == "==":
        return _eq(a, b)
    if op == "!=":
        return not _eq(a, b)
    if op == "&&":
        return a is True and b is True
    if op == "||":
        return a is True or b is True
    if op in ("<", "<=", ">", ">="):
        if not isinstance(a, (int, bool)) or not isinstance(b, (int, bool)):
            return False
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
    # arithmetic
    if not isinstance(a, (int, bool)) or not isinstance(b, (int, bool)):
        return None
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a // b if b else None
    if op == "%":
        return a % b if b else None
    raise AssertionError(f"unknown operator {op}")


def _eq(a, b) -> bool:
    if is_heap(a) and is_heap(b):
        return a.addr == b.addr
    if is_heap(a) or is_heap(b):
        return False
    return a == b


def unop(op: str, a):
    if op == "!":
        return not (a is True)
    if op == "-":
        return -a if isinstance(a, (int, bool)) else None
    raise AssertionError(f"unknown operator {op}")
