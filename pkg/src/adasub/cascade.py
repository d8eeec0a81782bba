"""Independent cascade influence with full-adoption feedback.

The hidden world is the live/blocked status of every edge. Seeding a node
reveals the status of every out-edge of every node it reaches through live
edges. That revealed outcome is the node's state, encoded canonically as a
base-3 integer over the edge list (digit 0 unrevealed, 1 blocked, 2 live).
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .errors import InconsistentObservation, SupportTooLarge, UnknownItem
from .model import Item, Prior, as_partial, check_items, support_cap
from .objectives import Objective

UNREVEALED, BLOCKED, LIVE = 0, 1, 2
_DIGIT_CHARS = "-01"


class CascadeGraph:
    def __init__(self, n_nodes: int, edges: Sequence[tuple[int, int, float]]):
        self.n_nodes = n_nodes
        self.edges = tuple((int(u), int(v), float(p)) for u, v, p in edges)
        self.out_edges: list[list[int]] = [[] for _ in range(n_nodes)]
        for j, (u, v, p) in enumerate(self.edges):
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise ValueError(f"edge {j} references an unknown node")
            if not 0 <= p <= 1:
                raise ValueError(f"edge {j}: activation probability {p} outside [0, 1]")
            self.out_edges[u].append(j)
        self._outcomes: dict[tuple[int, int], tuple[frozenset, dict]] = {}

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def node_state(self, node: int, live: Sequence[bool]) -> int:
        """Outcome code observed when seeding ``node`` in the world ``live``."""
        reached = {node}
        stack = [node]
        code = 0
        while stack:
            u = stack.pop()
            for j in self.out_edges[u]:
                if live[j]:
                    code += LIVE * 3**j
                    w = self.edges[j][1]
                    if w not in reached:
                        reached.add(w)
                        stack.append(w)
                else:
                    code += BLOCKED * 3**j
        return code

    def decode(self, code: int) -> dict[int, bool]:
        revealed = {}
        for j in range(self.n_edges):
            code, digit = divmod(code, 3)
            if digit:
                revealed[j] = digit == LIVE
        if code:
            raise InconsistentObservation("cascade state code references edges beyond the graph")
        return revealed

    def outcome(self, node: int, code: int) -> tuple[frozenset, dict[int, bool]]:
        """Reached node set and revealed edge statuses for a node's state code."""
        key = (node, code)
        if key not in self._outcomes:
            revealed = self.decode(code)
            live = [revealed.get(j, False) for j in range(self.n_edges)]
            reached = {node}
            stack = [node]
            frontier_edges = set()
            while stack:
                u = stack.pop()
                for j in self.out_edges[u]:
                    frontier_edges.add(j)
                    w = self.edges[j][1]
                    if live[j] and w not in reached:
                        reached.add(w)
                        stack.append(w)
            if frontier_edges != set(revealed):
                raise InconsistentObservation(f"code {code} is not a feasible outcome of node {node}")
            self._outcomes[key] = (frozenset(reached), revealed)
        return self._outcomes[key]

    def state_name(self, code: int) -> str:
        digits = []
        for _ in range(self.n_edges):
            code, d = divmod(code, 3)
            digits.append(_DIGIT_CHARS[d])
        return "".join(digits)

    def parse_state(self, name: str) -> int:
        if len(name) != self.n_edges or any(c not in _DIGIT_CHARS for c in name):
            raise ValueError(f"cascade state {name!r} must have one of '-01' per edge")
        return sum(_DIGIT_CHARS.index(c) * 3**j for j, c in enumerate(name))


class CascadePrior(Prior):
    """Independent edge activations pushed forward to node outcome codes."""

    kind = "cascade"

    def __init__(self, items: Sequence[Item], graph: CascadeGraph,
                 fixed: Sequence[bool | None] | None = None):
        self.items = check_items(items)
        if len(self.items) != graph.n_nodes:
            raise ValueError("cascade prior needs one item per node")
        self.graph = graph
        self.fixed = tuple(fixed) if fixed is not None else (None,) * graph.n_edges

    def live_probability(self, j: int) -> float:
        f = self.fixed[j]
        if f is not None:
            return 1.0 if f else 0.0
        return self.graph.edges[j][2]

    def free_edges(self) -> list[int]:
        return [j for j in range(self.graph.n_edges) if 0 < self.live_probability(j) < 1]

    def condition(self, psi) -> Prior:
        psi = as_partial(psi)
        fixed = list(self.fixed)
        for node, code in psi:
            if not 0 <= node < self.n_items:
                raise UnknownItem(f"node {node} is not part of this instance")
            _, revealed = self.graph.outcome(node, code)
            for j, status in revealed.items():
                p = self.live_probability(j) if fixed[j] is None else (1.0 if fixed[j] else 0.0)
                if (status and p == 0) or (not status and p == 1):
                    raise InconsistentObservation(f"edge {j} cannot be {'live' if status else 'blocked'}")
                fixed[j] = status
        if tuple(fixed) == self.fixed:
            return self
        return CascadePrior(self.items, self.graph, fixed)

    def support_size(self) -> int:
        return 2 ** len(self.free_edges())

    def support(self, cap=None):
        free = self.free_edges()
        if 2 ** len(free) > support_cap(cap):
            raise SupportTooLarge(f"cascade has {len(free)} uncertain edges (cap {support_cap(cap)})")
        base = [self.live_probability(j) == 1 for j in range(self.graph.n_edges)]
        merged: dict[tuple, float] = {}
        for bits in itertools.product((True, False), repeat=len(free)):
            live = list(base)
            p = 1.0
            for j, b in zip(free, bits):
                live[j] = b
                q = self.graph.edges[j][2]
                p *= q if b else 1.0 - q
            phi = tuple(self.graph.node_state(v, live) for v in range(self.n_items))
            merged[phi] = merged.get(phi, 0.0) + p
        return list(merged.items())

    def sample_many(self, rng, n):
        probs = np.array([self.live_probability(j) for j in range(self.graph.n_edges)])
        live = rng.random((n, self.graph.n_edges)) < probs
        return [tuple(self.graph.node_state(v, row) for v in range(self.n_items)) for row in live]

    def __eq__(self, other):
        return isinstance(other, CascadePrior) and other.graph is self.graph and \
            other.fixed == self.fixed and other.items == self.items

    def __repr__(self):
        return f"CascadePrior({self.graph.n_nodes} nodes, {len(self.free_edges())} uncertain edges)"


class CascadeObjective(Objective):
    """Number of nodes activated from the seeded set."""

    kind = "cascade"
    local_gain = True

    def __init__(self, graph: CascadeGraph):
        self.graph = graph
        self.n_items = graph.n_nodes

    def activated(self, pairs) -> set[int]:
        out: set[int] = set()
        for node, code in pairs:
            out |= self.graph.outcome(node, code)[0]
        return out

    def value(self, selected, phi):
        return float(len(self.activated((v, phi[v]) for v in selected)))

    def observed_value(self, psi):
        return float(len(self.activated(psi)))

    def gain(self, psi, item, state):
        return float(len(self.graph.outcome(item, state)[0] - self.activated(psi)))

    def prior(self, items: Sequence[Item] | None = None) -> CascadePrior:
        if items is None:
            items = tuple(Item(v, 1.0, ()) for v in range(self.n_items))
        return CascadePrior(items, self.graph)


def cascade_items(n_nodes: int, costs: Sequence[float] | None = None,
                  labels: Sequence[str] | None = None) -> tuple[Item, ...]:
    costs = costs if costs is not None else [1.0] * n_nodes
    labels = labels if labels is not None else [None] * n_nodes
    return tuple(Item(v, float(c), (), lab) for v, (c, lab) in enumerate(zip(costs, labels)))

