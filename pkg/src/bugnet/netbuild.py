"""Time-windowed CC/ASSIGN collaboration networks."""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np
from scipy import sparse

from .events import ChangeEvent, format_timestamp

DAY = 86400
INTERACTION_KINDS = {"CC_ADD": "CC", "ASSIGN": "ASSIGN"}


class UnsortedInput(ValueError):
    pass


@dataclass(frozen=True)
class TimeInterval:
    """Interval in unix seconds.

    ``closed_right`` selects (start, end] instead of the default [start, end).
    """

    start: int
    end: int
    closed_right: bool = False

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("interval start must precede end")

    def __contains__(self, t: int) -> bool:
        if self.closed_right:
            return self.start < t <= self.end
        return self.start <= t < self.end

    def __str__(self):
        lb, rb = ("(", "]") if self.closed_right else ("[", ")")
        return f"{lb}{format_timestamp(self.start)}, {format_timestamp(self.end)}{rb}"


def preceding_window(t: int, length_days: int = 30) -> TimeInterval:
    if length_days < 1:
        raise ValueError("length_days must be >= 1")
    return TimeInterval(t - length_days * DAY, t)


def following_window(t: int, length_days: int = 30) -> TimeInterval:
    if length_days < 1:
        raise ValueError("length_days must be >= 1")
    return TimeInterval(t, t + length_days * DAY, closed_right=True)


def _check_sorted(events: Sequence[ChangeEvent]) -> None:
    for a, b in zip(events, events[1:]):
        if b.timestamp < a.timestamp:
            raise UnsortedInput("events must be sorted by timestamp")


class WindowIndex:
    """Binary-search index over the interaction events of a sorted stream."""

    def __init__(self, events: Sequence[ChangeEvent]):
        _check_sorted(events)
        self.events = [ev for ev in events if ev.kind in INTERACTION_KINDS]
        self.times = [ev.timestamp for ev in self.events]

    def bounds(self, window: TimeInterval) -> tuple[int, int]:
        if window.closed_right:
            return bisect_right(self.times, window.start), bisect_right(self.times, window.end)
        return bisect_left(self.times, window.start), bisect_left(self.times, window.end)

    def query(self, window: TimeInterval) -> list:
        lo, hi = self.bounds(window)
        return self.events[lo:hi]

    def __len__(self):
        return len(self.events)


def window_index(events: Sequence[ChangeEvent]) -> WindowIndex:
    return WindowIndex(events)


@dataclass
class CollaborationNetwork:
    window: TimeInterval | None
    nodes: list = field(default_factory=list)
    # (source, target) -> Counter({"CC": n, "ASSIGN": m})
    edges: dict = field(default_factory=dict)
    component_id: dict = field(default_factory=dict)
    lcc_id: int = -1
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def multiplicity(self, source, target) -> int:
        return sum(self.edges.get((source, target), {}).values())

    @property
    def index(self) -> dict:
        return {u: i for i, u in enumerate(self.nodes)}

    def undirected_adjacency(self, nodes: Sequence | None = None) -> sparse.csr_matrix:
        """Simple undirected 0/1 adjacency over ``nodes`` (default: all)."""
        nodes = self.nodes if nodes is None else list(nodes)
        idx = {u: i for i, u in enumerate(nodes)}
        rows, cols = [], []
        for (a, b) in self.edges:
            if a in idx and b in idx:
                rows += [idx[a], idx[b]]
                cols += [idx[b], idx[a]]
        n = len(nodes)
        mat = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n)).tocsr()
        mat.data[:] = 1.0  # collapse reciprocal pairs
        return mat

    def component_sizes(self) -> Counter:
        return Counter(self.component_id.values())


def _components(nodes: list, pairs: Iterable[tuple]) -> tuple[dict, int]:
    parent = list(range(len(nodes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    idx = {u: i for i, u in enumerate(nodes)}
    for a, b in pairs:
        ra, rb = find(idx[a]), find(idx[b])
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    # components numbered by first appearance in node order
    label, comp = {}, {}
    for u in nodes:
        comp[u] = label.setdefault(find(idx[u]), len(label))
    sizes = Counter(comp.values())
    lcc = min(sizes, key=lambda c: (-sizes[c], c)) if sizes else -1
    return comp, lcc


def build_network(events: Iterable[ChangeEvent], window: TimeInterval | None = None) -> CollaborationNetwork:
    """Aggregate CC_ADD/ASSIGN events (optionally filtered by ``window``)."""
    edges: dict = {}
    nodes: dict = {}
    for ev in events:
        kind = INTERACTION_KINDS.get(ev.kind)
        if kind is None or ev.actor_id == ev.value:
            continue
        if window is not None and ev.timestamp not in window:
            continue
        nodes.setdefault(ev.actor_id, None)
        nodes.setdefault(ev.value, None)
        edges.setdefault((ev.actor_id, ev.value), Counter())[kind] += 1
    node_list = list(nodes)
    comp, lcc = _components(node_list, edges)
    return CollaborationNetwork(window, node_list, edges, comp, lcc)


def build_window_network(events: Sequence[ChangeEvent], window: TimeInterval) -> CollaborationNetwork:
    _check_sorted(events)
    ts = [ev.timestamp for ev in events]
    if window.closed_right:
        lo, hi = bisect_right(ts, window.start), bisect_right(ts, window.end)
    else:
        lo, hi = bisect_left(ts, window.start), bisect_left(ts, window.end)
    return build_network(events[lo:hi], window)


def largest_connected_component(net: CollaborationNetwork) -> set:
    return {u for u, c in net.component_id.items() if c == net.lcc_id}


def write_edge_list(net: CollaborationNetwork, fh: IO[str]) -> None:
    if net.window is not None:
        fh.write(f"# window {format_timestamp(net.window.start)} {format_timestamp(net.window.end)}\n")
    for (a, b), kinds in net.edges.items():
        fh.write(f"{a}\t{b}\t{kinds.get('CC', 0)}\t{kinds.get('ASSIGN', 0)}\n")
