"""Depth-limited backward slicing over the SDG."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from ..lang.ir import AccessNode
from .graph import Sdg


@dataclass(frozen=True)
class Query:
    nodes: tuple[AccessNode, ...]
    depth: Optional[int]  # None = unbounded

    def __post_init__(self) -> None:
        if not self.nodes:
            raise ValueError("query needs at least one node")
        if self.depth is not None and self.depth < 0:
            raise ValueError("depth must be non-negative")


@dataclass
class Slice:
    query: Query
    selected: list[AccessNode]
    depths: dict[AccessNode, int] = field(default_factory=dict)

    @property
    def frontier(self) -> list[AccessNode]:
        """Nodes at exactly the depth limit (deterministic order)."""
        if self.query.depth is None:
            return []
        return [n for n in self.selected if self.depths[n] == self.query.depth]

    def unexplored_frontier(self, sdg: Sdg) -> list[AccessNode]:
        """Frontier nodes with dependencies beyond the depth budget."""
        return [n for n in self.frontier if sdg.deps_of(n)]


def backward_slice(sdg: Sdg, query: Query) -> Slice:
    for n in query.nodes:
        if not sdg.has_node(n):
            raise KeyError(f"query node not in SDG: {n}")
    depths: dict[AccessNode, int] = {}
    order: list[AccessNode] = []
    work: deque[AccessNode] = deque()
    for n in sorted(set(query.nodes), key=AccessNode.sort_key):
        depths[n] = 0
        order.append(n)
        work.append(n)
    while work:
        n = work.popleft()
        d = depths[n]
        if query.depth is not None and d >= query.depth:
            continue
        for e in sdg.deps_of(n):
            if e.dst not in depths:
                depths[e.dst] = d + 1
                order.append(e.dst)
                work.append(e.dst)
    selected = sorted(order, key=AccessNode.sort_key)
    return Slice(query=query, selected=selected, depths=depths)
