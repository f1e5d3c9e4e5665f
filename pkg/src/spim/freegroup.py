"""Membership engines in free groups.

Subgroups use Stallings foldings.  Every edge carries an annotation: a
reduced word in the free group on generator indices.  For a fixed
potential ``h`` on vertices (``h(base) = 1``) an edge ``u -x-> v`` with
annotation ``a`` satisfies ``eval(a) = h(u) x h(v)^-1``, so the product
of annotations along a base loop spells the loop as a product of
generators.

Finitely generated submonoids use Benois saturation of the flower
automaton.  Epsilon edges remember how they were derived, so an accepting
run can be unfolded into a run on the flower automaton, which in turn
lists the petals (generators) used.
"""

from __future__ import annotations

import sys
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import Letter, Word, invert, reduce


def _inv_letter(x: Letter) -> Letter:
    return Letter(x.symbol, -x.sign)


@dataclass
class FoldedGraph:
    """Labelled graph with a base vertex.

    ``mode`` is ``"subgroup"`` (inverse-closed, folded), ``"benois"``
    (forward edges plus epsilon edges) or ``"approximant"``.
    """

    mode: str
    base: int = 0
    vertices: set = field(default_factory=set)
    out: dict = field(default_factory=lambda: defaultdict(lambda: defaultdict(list)))
    eps: dict = field(default_factory=dict)  # (p, q) -> derivation
    ann: dict = field(default_factory=dict)  # (u, x, v) -> annotation word
    end: int | None = None
    petal: dict = field(default_factory=dict)  # benois: (u, x, v) -> generator index on petal starts
    generators: tuple = ()

    def edges(self) -> list[tuple[int, Letter, int]]:
        out = []
        for u in sorted(self.out):
            for x, targets in self.out[u].items():
                for v in targets:
                    out.append((u, x, v))
        return sorted(out, key=lambda e: (e[0], str(e[1].symbol), e[1].sign, e[2]))

    def step(self, u: int, x: Letter) -> int | None:
        t = self.out.get(u, {}).get(x)
        return t[0] if t else None

    def read(self, w: Sequence[Letter], start: int | None = None) -> int | None:
        """Follow ``w`` deterministically; ``None`` if some edge is missing."""
        v = self.base if start is None else start
        for x in w:
            t = self.out.get(v, {}).get(x)
            if not t:
                return None
            v = t[0]
        return v

    def num_edges(self) -> int:
        return sum(len(t) for d in self.out.values() for t in d.values())

    def to_dot(self, name: str = "G") -> str:
        lines = [f"digraph {name} {{", "  rankdir=LR;"]
        for v in sorted(self.vertices):
            attrs = []
            if v == self.base:
                attrs.append("shape=doublecircle")
            if self.end is not None and v == self.end and v != self.base:
                attrs.append("shape=box")
            lines.append(f"  {v} [{', '.join(attrs)}];" if attrs else f"  {v};")
        seen = set()
        for u, x, v in self.edges():
            if self.mode != "benois":
                # draw each inverse pair once, using the positive letter
                if x.sign < 0:
                    continue
                if (u, x, v) in seen:
                    continue
                seen.add((u, x, v))
            lines.append(f'  {u} -> {v} [label="{x}"];')
        for p, q in sorted(self.eps):
            lines.append(f"  {p} -> {q} [style=dashed];")
        lines.append("}")
        return "\n".join(lines) + "\n"


# --------------------------------------------------------------------- Stallings


class _Folder:
    """Mutable inverse-closed multigraph with annotated edges."""

    def __init__(self, base: int = 0):
        self.base = base
        self.next = base + 1
        self.adj: dict[int, dict[Letter, list[tuple[int, Word]]]] = defaultdict(lambda: defaultdict(list))
        self.adj[base]

    def fresh(self) -> int:
        v = self.next
        self.next += 1
        self.adj[v]
        return v

    def add(self, u: int, x: Letter, v: int, a: Word = ()) -> None:
        self.adj[u][x].append((v, a))
        self.adj[v][_inv_letter(x)].append((u, invert(a)))

    def _remove_half(self, u: int, x: Letter, v: int, a: Word) -> None:
        lst = self.adj[u][x]
        lst.remove((v, a))
        if not lst:
            del self.adj[u][x]

    def remove(self, u: int, x: Letter, v: int, a: Word) -> None:
        self._remove_half(u, x, v, a)
        self._remove_half(v, _inv_letter(x), u, invert(a))

    def fold(self) -> None:
        work = deque(self.adj.keys())
        while work:
            u = work.popleft()
            if u not in self.adj:
                continue
            changed = True
            while changed and u in self.adj:
                changed = False
                for x, lst in list(self.adj[u].items()):
                    if len(lst) < 2:
                        continue
                    (v1, a1), (v2, a2) = lst[0], lst[1]
                    if v1 == v2:
                        self.remove(u, x, v2, a2)
                    else:
                        if v2 == self.base:
                            (v1, a1), (v2, a2) = (v2, a2), (v1, a1)
                        work.extend(self._merge(u, x, v1, a1, v2, a2))
                        work.append(u)
                    changed = True
                    break

    def _merge(self, u: int, x: Letter, keep: int, ak: Word, gone: int, ag: Word) -> list[int]:
        c = reduce(invert(ak) + ag)
        ci = invert(c)
        self.remove(u, x, gone, ag)
        halves = [(y, w, a) for y, lst in self.adj[gone].items() for (w, a) in lst]
        for y, w, a in halves:
            if w == gone and y.sign < 0:
                continue  # loop already handled through its positive half
            if w == gone:
                self.remove(gone, y, gone, a)
            else:
                self.remove(gone, y, w, a)
        for y, w, a in halves:
            if w == gone:
                if y.sign < 0:
                    continue
                self.add(keep, y, keep, reduce(c + a + ci))
            else:
                self.add(keep, y, w, reduce(c + a))
        del self.adj[gone]
        return [keep] + [w for _, w, _ in halves if w != gone]

    def freeze(self, mode: str = "subgroup") -> FoldedGraph:
        g = FoldedGraph(mode=mode, base=self.base)
        g.vertices = set(self.adj)
        for u, d in self.adj.items():
            for x, lst in d.items():
                for v, a in lst:
                    g.out[u][x].append(v)
                    g.ann[(u, x, v)] = a
        return g


def stallings_graph(generators: Iterable[Sequence[Letter]], rng=None) -> FoldedGraph:
    """Folded subgroup graph of ``<generators>``.

    Passing a ``random.Random`` as ``rng`` shuffles the edge insertion
    order; the folded result is the same up to base-pointed isomorphism.
    """
    gens = [reduce(g) for g in generators]
    f = _Folder()
    pending: list[tuple[int, Letter, int, Word]] = []
    for i, g in enumerate(gens):
        if not g:
            continue
        prev = f.base
        for k, x in enumerate(g):
            last = k == len(g) - 1
            nxt = f.base if last else f.fresh()
            pending.append((prev, x, nxt, (Letter(i, 1),) if last else ()))
            prev = nxt
    if rng is not None:
        rng.shuffle(pending)
    for e in pending:
        f.add(*e)
    f.fold()
    g = f.freeze()
    g.generators = tuple(gens)
    return g


@dataclass(frozen=True)
class MembershipWitness:
    expression: tuple  # of (generator index, sign)

    def evaluate(self, generators: Sequence[Sequence[Letter]]) -> Word:
        out: list[Letter] = []
        for i, s in self.expression:
            out.extend(generators[i] if s > 0 else invert(generators[i]))
        return reduce(out)


def subgroup_contains(graph: FoldedGraph, w: Sequence[Letter]) -> tuple[bool, MembershipWitness | None]:
    v = graph.base
    acc: list = []
    for x in reduce(w):
        t = graph.out.get(v, {}).get(x)
        if not t:
            return False, None
        nv = t[0]
        acc.extend(graph.ann[(v, x, nv)])
        v = nv
    if v != graph.base:
        return False, None
    expr = tuple((a.symbol, a.sign) for a in reduce(acc))
    return True, MembershipWitness(expr)


def canonical_form(graph: FoldedGraph) -> tuple:
    """Base-pointed isomorphism invariant of a folded graph (BFS relabelling)."""
    label = {graph.base: 0}
    queue = deque([graph.base])
    edges = []
    while queue:
        u = queue.popleft()
        for x in sorted(graph.out.get(u, {}), key=lambda y: (str(y.symbol), y.sign)):
            for v in graph.out[u][x]:
                if v not in label:
                    label[v] = len(label)
                    queue.append(v)
                edges.append((label[u], str(x.symbol), x.sign, label[v]))
    return (len(label), tuple(sorted(edges)))


# ------------------------------------------------------------------------ Benois


def benois_automaton(generators: Iterable[Sequence[Letter]]) -> FoldedGraph:
    gens = [reduce(g) for g in generators]
    g = FoldedGraph(mode="benois", base=0)
    g.vertices = {0}
    nxt = 1
    for i, word in enumerate(gens):
        if not word:
            continue
        prev = 0
        for k, x in enumerate(word):
            if k == len(word) - 1:
                v = 0
            else:
                v = nxt
                nxt += 1
                g.vertices.add(v)
            if v not in g.out[prev][x]:
                g.out[prev][x].append(v)
            if k == 0:
                g.petal.setdefault((prev, x, v), i)
            prev = v
    g.generators = tuple(gens)
    _saturate(g)
    return g


def _eps_reach(g: FoldedGraph, r: int, adj) -> dict[int, tuple[int, int] | None]:
    """Vertices reachable from r by epsilon edges, with parent pointers."""
    par: dict[int, tuple[int, int] | None] = {r: None}
    queue = deque([r])
    while queue:
        s = queue.popleft()
        for t in adj.get(s, ()):
            if t not in par:
                par[t] = (s, t)
                queue.append(t)
    return par


def _eps_path(par, s: int) -> list[tuple[int, int]]:
    path = []
    while par[s] is not None:
        e = par[s]
        path.append(e)
        s = e[0]
    return path[::-1]


def _saturate(g: FoldedGraph) -> None:
    eps_adj: dict[int, set[int]] = defaultdict(set)
    letter_edges = [(u, x, v) for u in list(g.out) for x in g.out[u] for v in g.out[u][x]]
    by_src_letter: dict[tuple[int, Letter], list[int]] = defaultdict(list)
    for u, x, v in letter_edges:
        by_src_letter[(u, x)].append(v)
    changed = True
    while changed:
        changed = False
        for p, x, r in letter_edges:
            par = _eps_reach(g, r, eps_adj)
            xi = _inv_letter(x)
            for s in par:
                for q in by_src_letter.get((s, xi), ()):
                    if p == q or (p, q) in g.eps:
                        continue
                    g.eps[(p, q)] = ((p, x, r), _eps_path(par, s), (s, xi, q))
                    eps_adj[p].add(q)
                    changed = True
    g._eps_adj = eps_adj  # type: ignore[attr-defined]


def _closure(g: FoldedGraph, states: Iterable[int]) -> set[int]:
    adj = getattr(g, "_eps_adj", {})
    seen = set(states)
    stack = list(seen)
    while stack:
        s = stack.pop()
        for t in adj.get(s, ()):
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


def submonoid_contains(automaton: FoldedGraph, w: Sequence[Letter]) -> bool:
    cur = _closure(automaton, [automaton.base])
    for x in reduce(w):
        nxt = set()
        for s in cur:
            nxt.update(automaton.out.get(s, {}).get(x, ()))
        if not nxt:
            return False
        cur = _closure(automaton, nxt)
    return automaton.base in cur


def submonoid_witness(automaton: FoldedGraph, w: Sequence[Letter]) -> MembershipWitness | None:
    """Generator sequence whose product freely reduces to ``w``, or None."""
    w = reduce(w)
    adj = getattr(automaton, "_eps_adj", {})
    start = (automaton.base, 0)
    parent: dict[tuple[int, int], tuple] = {start: None}
    queue = deque([start])
    goal = (automaton.base, len(w))
    while queue:
        st = queue.popleft()
        if st == goal:
            break
        v, i = st
        for t in adj.get(v, ()):
            nst = (t, i)
            if nst not in parent:
                parent[nst] = (st, ("eps", v, t))
                queue.append(nst)
        if i < len(w):
            x = w[i]
            for t in automaton.out.get(v, {}).get(x, ()):
                nst = (t, i + 1)
                if nst not in parent:
                    parent[nst] = (st, ("let", v, x, t))
                    queue.append(nst)
    if goal not in parent:
        return None
    steps = []
    st = goal
    while parent[st] is not None:
        st, step = parent[st]
        steps.append(step)
    steps.reverse()
    flat: list[tuple[int, Letter, int]] = []
    for step in steps:
        if step[0] == "let":
            flat.append((step[1], step[2], step[3]))
        else:
            flat.extend(_expand_eps(automaton, (step[1], step[2])))
    expr = []
    for u, x, v in flat:
        if u == automaton.base and (u, x, v) in automaton.petal:
            expr.append((automaton.petal[(u, x, v)], 1))
    return MembershipWitness(tuple(expr))


def _expand_eps(g: FoldedGraph, e: tuple[int, int]) -> list[tuple[int, Letter, int]]:
    out: list[tuple[int, Letter, int]] = []
    stack: list = [("eps", e)]
    while stack:
        kind, item = stack.pop()
        if kind == "let":
            out.append(item)
            continue
        first, mid, last = g.eps[item]
        stack.append(("let", last))
        for m in reversed(mid):
            stack.append(("eps", m))
        stack.append(("let", first))
    return out


def submonoid_units(automaton: FoldedGraph, generators: Sequence[Sequence[Letter]] | None = None) -> FoldedGraph:
    """Subgroup graph of the units ``M ∩ M^-1`` of the submonoid ``M``."""
    if generators is not None and tuple(reduce(g) for g in generators) != automaton.generators:
        automaton = benois_automaton(generators)
    a = automaton
    # epsilon-free transitions: p -x-> closure(delta(closure(p), x))
    states = sorted(a.vertices)
    delta: dict[int, dict[Letter, set[int]]] = {}
    final = {p for p in states if a.base in _closure(a, [p])}
    for p in states:
        d: dict[Letter, set[int]] = defaultdict(set)
        for s in _closure(a, [p]):
            for x, ts in a.out.get(s, {}).items():
                for t in ts:
                    d[x].update(_closure(a, [t]))
        delta[p] = d
    # reversed inverse automaton B: q -x^-1-> p for p -x-> q, start = final set, accept = base
    rdelta: dict[int, dict[Letter, set[int]]] = defaultdict(lambda: defaultdict(set))
    for p in states:
        for x, ts in delta[p].items():
            for q in ts:
                rdelta[q][_inv_letter(x)].add(p)
    b_start = final
    b_final = {a.base}
    start_pairs = [(a.base, s) for s in b_start]
    seen = set(start_pairs)
    queue = deque(start_pairs)
    prod_edges = []
    while queue:
        p, q = queue.popleft()
        for x, ts in delta[p].items():
            for q2 in rdelta[q].get(x, ()):
                for p2 in ts:
                    prod_edges.append(((p, q), x, (p2, q2)))
                    if (p2, q2) not in seen:
                        seen.add((p2, q2))
                        queue.append((p2, q2))
    fin = {s for s in seen if s[0] in final and s[1] in b_final}
    # co-reachability
    back = defaultdict(set)
    for s, _, t in prod_edges:
        back[t].add(s)
    live = set(fin)
    stack = list(fin)
    while stack:
        t = stack.pop()
        for s in back[t]:
            if s not in live:
                live.add(s)
                stack.append(s)
    f = _Folder()
    ids: dict = {}
    starts = set(start_pairs)

    def vid(s):
        if s in fin or s in starts:
            return f.base
        if s not in ids:
            ids[s] = f.fresh()
        return ids[s]

    for s, x, t in prod_edges:
        if s in live and t in live:
            f.add(vid(s), x, vid(t))
    f.fold()
    g = f.freeze()
    for k in list(g.ann):
        g.ann[k] = ()
    return g


def subgroup_generators(graph: FoldedGraph) -> list[Word]:
    """A free basis read off a spanning tree of a subgroup graph."""
    tree: dict[int, Word] = {graph.base: ()}
    queue = deque([graph.base])
    used = set()
    while queue:
        u = queue.popleft()
        for x in sorted(graph.out.get(u, {}), key=lambda y: (str(y.symbol), y.sign)):
            for v in graph.out[u][x]:
                if v not in tree:
                    tree[v] = tree[u] + (x,)
                    used.add((u, x, v))
                    used.add((v, _inv_letter(x), u))
                    queue.append(v)
    basis = []
    done = set()
    for u, x, v in graph.edges():
        if (u, x, v) in used or (u, x, v) in done or x.sign < 0:
            continue
        done.add((u, x, v))
        done.add((v, _inv_letter(x), u))
        basis.append(reduce(tree[u] + (x,) + invert(tree[v])))
    return basis


def subgroups_equal(gens_u: Sequence[Sequence[Letter]], gens_v: Sequence[Sequence[Letter]]):
    """Return ``(True, None)`` or ``(False, offending generator)``."""
    gu, gv = stallings_graph(gens_u), stallings_graph(gens_v)
    for w in gens_u:
        if not subgroup_contains(gv, w)[0]:
            return False, tuple(w)
    for w in gens_v:
        if not subgroup_contains(gu, w)[0]:
            return False, tuple(w)
    return True, None


sys.setrecursionlimit(max(sys.getrecursionlimit(), 10000))
