"""Finite simple graphs and their discrete Laplacians."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..vertex_count-1``.

    Edges are stored as a sorted tuple of ``(i, j)`` pairs with ``i < j``.
    """

    vertex_count: int
    edges: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        n = int(self.vertex_count)
        if n < 1:
            raise GraphError(f"vertex_count must be positive, got {self.vertex_count}")
        canon = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge {e} has an endpoint outside [0, {n})")
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            pair = (min(i, j), max(i, j))
            if pair in canon:
                raise GraphError(f"duplicate edge {pair}")
            canon.add(pair)
        object.__setattr__(self, "vertex_count", n)
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.vertex_count, self.vertex_count), dtype=bool)
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = True
        return adj

    def neighbours(self, x: int) -> list[int]:
        self._check_vertex(x)
        return [j if i == x else i for i, j in self.edges if x in (i, j)]

    def to_json(self) -> dict:
        return {"vertices": self.vertex_count, "edges": [list(e) for e in self.edges]}

    def _check_vertex(self, x):
        if not (0 <= x < self.vertex_count):
            raise GraphError(f"vertex {x} out of range [0, {self.vertex_count})")


def path(n: int) -> Graph:
    return Graph(n, tuple((i, i + 1) for i in range(n - 1)))


def cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError("a simple cycle needs at least 3 vertices")
    return Graph(n, tuple((i, (i + 1) % n) for i in range(n)))


def complete(n: int) -> Graph:
    return Graph(n, tuple((i, j) for i in range(n) for j in range(i + 1, n)))


_GENERATORS = {"path": path, "cycle": cycle, "complete": complete}


def from_json(data: dict) -> Graph:
    unknown = set(data) - {"vertices", "edges"}
    if unknown:
        raise GraphError(f"unknown keys in graph description: {sorted(unknown)}")
    return Graph(int(data["vertices"]), tuple(tuple(e) for e in data.get("edges", [])))


def parse_graph(spec: str) -> Graph:
    """Build a graph from ``"path:3"``-style generator strings or a JSON file path."""
    name, sep, arg = spec.partition(":")
    if sep and name in _GENERATORS:
        try:
            n = int(arg)
        except ValueError:
            raise GraphError(f"bad vertex count in graph spec {spec!r}") from None
        return _GENERATORS[name](n)
    p = Path(spec)
    if p.is_file():
        return from_json(json.loads(p.read_text()))
    raise GraphError(f"cannot interpret graph spec {spec!r}")


def degree(g: Graph, x: int) -> int:
    g._check_vertex(x)
    return sum(1 for e in g.edges if x in e)


def laplacian(g: Graph) -> np.ndarray:
    """Discrete Laplacian: ``-deg(x)`` on the diagonal, 1 for each neighbour pair."""
    adj = g.adjacency().astype(float)
    return adj - np.diag(adj.sum(axis=1))


def one_body_operator(g: Graph, kappa: float) -> np.ndarray:
    """Return ``-Laplacian - kappa * 1``, positive definite for ``kappa < 0``."""
    if not kappa < 0:
        raise GraphError(f"chemical potential kappa must be negative, got {kappa}")
    return -laplacian(g) - kappa * np.eye(g.vertex_count)
