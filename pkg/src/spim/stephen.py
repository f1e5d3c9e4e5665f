"""Sew-and-fold approximants of Schützenberger graphs.

Each round attaches a loop labelled by every relator at every vertex where
that relator is not already readable as a loop, then folds.  A word ``v``
readable from start to end in an approximant of ``u`` satisfies ``u <= v``
in the natural order of the inverse monoid; reading both ways gives
equality.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import Letter, Presentation, Word, invert
from .freegroup import FoldedGraph


def _inv(x: Letter) -> Letter:
    return Letter(x.symbol, -x.sign)


class DetGraph:
    """Deterministic inverse-closed graph maintained under union-find folding."""

    def __init__(self):
        self.parent: list[int] = []
        self.out: list[dict] = []

    def new_vertex(self) -> int:
        self.parent.append(len(self.parent))
        self.out.append({})
        return len(self.parent) - 1

    def find(self, v: int) -> int:
        root = v
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[v] != root:
            self.parent[v], v = root, self.parent[v]
        return root

    def add_edge(self, u: int, x: Letter, v: int) -> None:
        pending = [(u, x, v)]
        while pending:
            u, x, v = pending.pop()
            u, v = self.find(u), self.find(v)
            t = self.out[u].get(x)
            if t is not None:
                t = self.find(t)
                if t != v:
                    pending.extend(self._union(t, v))
                continue
            self.out[u][x] = v
            xi = _inv(x)
            s = self.out[v].get(xi)
            if s is not None and self.find(s) != u:
                pending.extend(self._union(self.find(s), u))
            else:
                self.out[v][xi] = u

    def _union(self, a: int, b: int) -> list:
        a, b = self.find(a), self.find(b)
        if a == b:
            return []
        if len(self.out[a]) < len(self.out[b]):
            a, b = b, a
        self.parent[b] = a
        moved = self.out[b]
        self.out[b] = {}
        return [(a, x, t) for x, t in moved.items()]

    def step(self, v: int, x: Letter) -> int | None:
        t = self.out[self.find(v)].get(x)
        return None if t is None else self.find(t)

    def read(self, v: int, w: Sequence[Letter]) -> int | None:
        v = self.find(v)
        for x in w:
            t = self.out[v].get(x)
            if t is None:
                return None
            v = self.find(t)
        return v

    def add_path(self, u: int, w: Sequence[Letter], v: int | None = None) -> int:
        """Attach a fresh path labelled ``w`` from ``u``; end at ``v`` if given."""
        if not w:
            if v is not None:
                for e in self._union(u, v):
                    self.add_edge(*e)
                return self.find(u)
            return u
        cur = u
        for k, x in enumerate(w):
            last = k == len(w) - 1
            nxt = v if (last and v is not None) else self.new_vertex()
            self.add_edge(cur, x, nxt)
            cur = nxt
        return self.find(cur)

    def roots(self) -> list[int]:
        return [v for v in range(len(self.parent)) if self.parent[v] == v]

    def size(self) -> int:
        return sum(1 for v in range(len(self.parent)) if self.parent[v] == v)


@dataclass
class Approximant:
    graph: DetGraph
    start: int
    end: int
    rounds: int
    status: str  # "closed" when a round changed nothing, "budget", or "capped"

    def reads(self, w: Sequence[Letter]) -> bool:
        """Does ``w`` label a start-to-end path?"""
        t = self.graph.read(self.start, w)
        return t is not None and t == self.graph.find(self.end)

    def readable_from_start(self, w: Sequence[Letter]) -> bool:
        return self.graph.read(self.start, w) is not None

    @property
    def num_vertices(self) -> int:
        return self.graph.size()

    def to_folded_graph(self) -> FoldedGraph:
        g = self.graph
        roots = sorted(g.roots())
        ids = {r: i for i, r in enumerate(roots)}
        fg = FoldedGraph(mode="approximant", base=ids[g.find(self.start)])
        fg.end = ids[g.find(self.end)]
        fg.vertices = set(ids.values())
        for r in roots:
            for x, t in g.out[r].items():
                fg.out[ids[r]][x].append(ids[g.find(t)])
        return fg

    def to_dot(self, name: str = "S") -> str:
        return self.to_folded_graph().to_dot(name)


def sew_round(graph: DetGraph, relators: Sequence[Word], max_vertices: int | None = None) -> bool:
    """One expansion round; returns True if the graph changed."""
    changed = False
    for v in graph.roots():
        for r in relators:
            if not r:
                continue
            v = graph.find(v)
            t = graph.read(v, r)
            if t == v:
                continue
            graph.add_path(v, r, v)
            changed = True
            if max_vertices is not None and len(graph.parent) > max_vertices:
                return changed
    return changed


def approximant(p: Presentation, w: Sequence[Letter], budget: int = 4,
                max_vertices: int | None = 200000) -> Approximant:
    g = DetGraph()
    start = g.new_vertex()
    end = g.add_path(start, tuple(w))
    status = "budget"
    rounds = 0
    relators = [tuple(r) for r in p.relators]
    for _ in range(budget):
        rounds += 1
        changed = sew_round(g, relators, max_vertices)
        if max_vertices is not None and len(g.parent) > max_vertices:
            status = "capped"
            break
        if not changed:
            status = "closed"
            break
    return Approximant(g, g.find(start), g.find(end), rounds, status)


EQUAL = "equal"
UNKNOWN = "unknown"


def equal_semidecide(p: Presentation, u: Sequence[Letter], v: Sequence[Letter], budget: int = 4,
                     max_vertices: int | None = 200000) -> str:
    au = approximant(p, u, budget, max_vertices)
    if not au.reads(v):
        return UNKNOWN
    av = approximant(p, v, budget, max_vertices)
    return EQUAL if av.reads(u) else UNKNOWN


def leq_semidecide(p: Presentation, u: Sequence[Letter], v: Sequence[Letter], budget: int = 4) -> bool:
    """Sound check of ``u <= v`` in the natural order: ``v`` reads start-to-end in an approximant of ``u``."""
    return approximant(p, u, budget).reads(v)


def right_unit_certified(a: Approximant, w: Sequence[Letter]) -> bool:
    """With ``a`` an approximant of the empty word: ``w w^-1 = 1`` is certified."""
    return a.readable_from_start(w)


def unit_certified(a: Approximant, w: Sequence[Letter]) -> bool:
    return a.readable_from_start(w) and a.readable_from_start(invert(w))
