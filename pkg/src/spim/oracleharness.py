"""Brute-force reference for submonoid membership and engine comparison.

When the group oracle has canonical forms, the search enumerates distinct
group elements: a ball of all products of at most ``a`` generators is grown
once per generator set and shared across queries, then a query ``w`` is
matched as ``x t`` with ``x`` in the ball and ``t`` of length at most ``b``.
This is exhaustive up to ``a + b`` generators.  Without canonical forms it
falls back to iterative deepening over words.

The abelian image (a homomorphism to ``Z^r``) helps in two exact ways.  A
meet-in-the-middle candidate needs the right image.  A target whose image
lies outside the rational cone of the generator images is not a product of
any length (checked by LP).

A ``member`` answer always comes with a product verified by the oracle.
``not-found`` records the depth to which the search was exhaustive.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linprog

from .core import Letter, Presentation, Word, format_word, invert, reduce
from .products import AbelianImage, GroupOracle


@dataclass(frozen=True)
class EnumerationBudget:
    max_product_length: int = 10
    max_word_length: int = 8
    samples: int = 50
    seed: int = 0
    node_budget: int = 250000  # oracle evaluations spent on enumeration

    def __post_init__(self):
        if min(self.max_product_length, self.max_word_length, self.samples, self.node_budget) <= 0:
            raise ValueError("budget bounds must be positive")


MEMBER = "member"
NOT_FOUND = "not-found"


@dataclass
class BruteResult:
    answer: str  # MEMBER or NOT_FOUND
    depth: int  # exhaustive search depth reached (or product length found)
    nodes: int
    product: tuple | None = None  # generator indices of a found product
    excluded_by_cone: bool = False  # negative holds at every length

    @property
    def member(self) -> bool:
        return self.answer == MEMBER


def _in_cone(target: Sequence[int], images: Sequence[Sequence[int]]) -> bool:
    if not any(target):
        return True
    if not images:
        return False
    A = np.array(images, dtype=float).T
    b = np.array(target, dtype=float)
    res = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=b, bounds=[(0, None)] * A.shape[1], method="highs")
    return res.status == 0


def _add(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def _join(a: Word, b: Word) -> Word:
    """Reduced product of two reduced words."""
    k = 0
    n = min(len(a), len(b))
    while k < n and a[len(a) - 1 - k] == b[k].inverse():
        k += 1
    return a[: len(a) - k] + b[k:]


class _Searcher:
    """Shared state for repeated queries against one generator set."""

    def __init__(self, generators: Sequence[Word], oracle: GroupOracle, abelian: AbelianImage | None,
                 node_budget: int = 400000):
        self.generators = [reduce(g) for g in generators]
        self.oracle = oracle
        self.abelian = abelian
        rank = abelian.rank if abelian else 0
        self.images = [abelian.image(g) if abelian else () for g in self.generators]
        self.zero = (0,) * rank
        self.reach = [{self.zero}]  # reach[d]: sums of at most d generator images
        self.canonical = oracle.has_canonical
        self.node_budget = node_budget
        if self.canonical:
            key0 = oracle.canonical(())
            self.ball = {key0: ((), ())}  # key -> (representative word, generator path)
            self.frontier = [key0]
            self.radius = 0
            self.work = 0
            self.ball_images: dict[int, set] = {0: {self.zero}}
            self.by_image: dict[tuple, list] = {self.zero: [key0]}

    def reachable(self, d: int) -> set:
        while len(self.reach) <= d:
            last = self.reach[-1]
            nxt = set(last)
            for v in last:
                for im in set(self.images):
                    nxt.add(_add(v, im))
            self.reach.append(nxt)
        return self.reach[d]

    def grow(self, radius: int) -> int:
        """Extend the ball of distinct elements towards ``radius``.

        A layer is only started when its worst-case cost (frontier size times
        the number of generators) fits in the remaining node budget, so the
        ball is always exhaustive up to ``self.radius``.
        """
        while self.radius < radius and self.frontier:
            cost = len(self.frontier) * len(self.generators)
            if self.work + cost > self.node_budget:
                break
            self.work += cost
            nxt = []
            for key in self.frontier:
                rep, path = self.ball[key]
                for i, g in enumerate(self.generators):
                    w = _join(rep, g)
                    k = self.oracle.canonical(w)
                    if k not in self.ball:
                        self.ball[k] = (w, path + (i,))
                        nxt.append(k)
            self.frontier = nxt
            self.radius += 1
            imgs = set(self.ball_images[self.radius - 1])
            for k in nxt:
                im = self.abelian.image(self.ball[k][0]) if self.abelian else self.zero
                imgs.add(im)
                self.by_image.setdefault(im, []).append(k)
            self.ball_images[self.radius] = imgs
        if not self.frontier:
            # closed under the generators: the ball is the whole submonoid
            self.radius = max(self.radius, radius)
            for d in range(len(self.ball_images), self.radius + 1):
                self.ball_images[d] = self.ball_images[d - 1]
        return self.radius


def brute_submonoid_membership(generators: Sequence[Word], oracle: GroupOracle, w: Sequence[Letter],
                               budget: EnumerationBudget = EnumerationBudget(),
                               abelian: AbelianImage | None = None,
                               searcher: _Searcher | None = None) -> BruteResult:
    """Search products of at most ``budget.max_product_length`` generators equal to ``w``."""
    s = searcher or _Searcher(generators, oracle, abelian, budget.node_budget)
    w = reduce(w)
    if not w or oracle.is_identity(w):
        return BruteResult(MEMBER, 0, 0, ())
    target = abelian.image(w) if abelian else ()
    if abelian and not _in_cone(target, s.images):
        return BruteResult(NOT_FOUND, budget.max_product_length, 0, None, True)
    if s.canonical:
        return _ball_search(s, w, target, budget)
    return _dfs_search(s, w, target, budget)


def _ball_search(s: _Searcher, w: Word, target, budget: EnumerationBudget) -> BruteResult:
    L = budget.max_product_length
    a = s.grow((L + 1) // 2)
    key = s.oracle.canonical(w)
    if key in s.ball:
        return BruteResult(MEMBER, len(s.ball[key][1]), len(s.ball), s.ball[key][1])
    # meet in the middle: w = x t with x, t in the ball
    b = min(a, L - a)
    inner = s.ball_images.get(a, ())
    nodes = 0
    for im, keys in s.by_image.items():
        if s.abelian and _sub(target, im) not in inner:
            continue
        for key in keys:
            rep, path = s.ball[key]
            if len(path) == 0 or len(path) > b:
                continue
            nodes += 1
            k = s.oracle.canonical(_join(w, invert(rep)))
            if k in s.ball:
                return BruteResult(MEMBER, len(s.ball[k][1]) + len(path), len(s.ball) + nodes,
                                   s.ball[k][1] + path)
    # sound but incomplete extra try: cover w by literal pieces lying in the ball
    best: dict[int, tuple] = {0: ()}
    for j in range(1, len(w) + 1):
        for i in range(j):
            if i not in best:
                continue
            k = s.oracle.canonical(w[i:j])
            nodes += 1
            if k in s.ball and k != s.oracle.canonical(()):
                cand = best[i] + s.ball[k][1]
                if j not in best or len(cand) < len(best[j]):
                    best[j] = cand
    if len(w) in best:
        # a verified product proves membership even past the length bound; depth records its length
        path = best[len(w)]
        return BruteResult(MEMBER, len(path), len(s.ball) + nodes, path)
    return BruteResult(NOT_FOUND, a + b, len(s.ball) + nodes)


def _dfs_search(s: _Searcher, w: Word, target, budget: EnumerationBudget) -> BruteResult:
    nodes = 0
    complete = 0
    abelian = s.abelian
    for L in range(1, budget.max_product_length + 1):
        seen: dict = {}
        stack = [((), (), s.zero)]
        exhausted = False
        while stack:
            path, word, img = stack.pop()
            k = len(path)
            if k:
                nodes += 1
                if nodes > budget.node_budget:
                    exhausted = True
                    break
                if img == target and s.oracle.equal(word, w):
                    return BruteResult(MEMBER, k, nodes, path)
            if k == L:
                continue
            if abelian and _sub(target, img) not in s.reachable(L - k):
                continue
            for i in range(len(s.generators) - 1, -1, -1):
                nw = _join(word, s.generators[i])
                if seen.get(nw, L + 1) <= k + 1:
                    continue
                seen[nw] = k + 1
                stack.append((path + (i,), nw, _add(img, s.images[i])))
        if exhausted:
            break
        complete = L
    return BruteResult(NOT_FOUND, complete, nodes)


def distinct_generators(generators: Sequence[Word], oracle: GroupOracle) -> list[Word]:
    """Drop generators trivial in the group and duplicates up to group equality."""
    out: list[Word] = []
    for g in generators:
        g = reduce(g)
        if oracle.is_identity(g):
            continue
        if any(oracle.equal(g, h) for h in out):
            continue
        out.append(g)
    return out


# ------------------------------------------------------------------ comparison


def sample_queries(p: Presentation, generators: Sequence[Word], budget: EnumerationBudget,
                   products_share: float = 0.5) -> list[Word]:
    """Seeded query words of length at most ``max_word_length``.

    A share is drawn as short random products of generators (likely
    members); the rest are uniform random reduced words.
    """
    rng = random.Random(budget.seed)
    letters = [Letter(g, s) for g in p.generators for s in (1, -1)]
    out: list[Word] = []
    n_products = int(budget.samples * products_share) if generators else 0
    tries = 0
    while len(out) < n_products and tries < 100 * budget.samples:
        tries += 1
        k = rng.randint(1, 3)
        w = reduce(sum((tuple(rng.choice(generators)) for _ in range(k)), ()))
        if 0 < len(w) <= budget.max_word_length and w not in out:
            out.append(w)
    tries = 0
    while len(out) < budget.samples and tries < 1000 * budget.samples:
        tries += 1
        n = rng.randint(1, budget.max_word_length)
        w: list[Letter] = []
        while len(w) < n:
            x = rng.choice(letters)
            if w and w[-1] == x.inverse():
                continue
            w.append(x)
        w = tuple(w)
        if w not in out:
            out.append(w)
    return out


@dataclass
class ComparisonRow:
    word: str
    engine: object
    brute: str
    depth: int
    cone: bool
    status: str  # "agree", "disagree", "unconfirmed", "inconclusive"


@dataclass
class ComparisonReport:
    instance: str
    seed: int
    budget: dict
    rows: list = field(default_factory=list)

    @property
    def disagreements(self) -> list:
        return [r for r in self.rows if r.status == "disagree"]

    @property
    def unconfirmed(self) -> list:
        return [r for r in self.rows if r.status in ("unconfirmed", "inconclusive")]

    @property
    def min_negative_depth(self) -> int | None:
        depths = [r.depth for r in self.rows if r.brute == NOT_FOUND and not r.cone]
        return min(depths) if depths else None

    def to_json(self) -> dict:
        return {"instance": self.instance, "seed": self.seed, "budget": self.budget,
                "rows": [asdict(r) for r in self.rows],
                "disagreements": len(self.disagreements), "unconfirmed": len(self.unconfirmed)}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, default=str)


def compare_engines(instance: str, engine: Callable[[Word], object], generators: Sequence[Word],
                    oracle: GroupOracle, queries: Sequence[Word], budget: EnumerationBudget,
                    abelian: AbelianImage | None = None) -> ComparisonReport:
    """Run ``engine`` and the brute-force reference on every query.

    Engine ``False`` against a found product is a disagreement.  Engine
    ``True`` against a bounded ``not-found`` is reported as unconfirmed.
    """
    searcher = _Searcher(generators, oracle, abelian, budget.node_budget)
    report = ComparisonReport(instance, budget.seed, asdict(budget))
    for w in queries:
        e = engine(w)
        b = brute_submonoid_membership(generators, oracle, w, budget, abelian, searcher)
        if e is None:
            status = "inconclusive"
        elif e and b.member:
            status = "agree"
        elif not e and not b.member:
            status = "agree"
        elif not e and b.member:
            status = "disagree"
        elif b.excluded_by_cone:
            status = "disagree"
        else:
            status = "unconfirmed"
        report.rows.append(ComparisonRow(format_word(w), e, b.answer, b.depth, b.excluded_by_cone, status))
    return report


def compare_presentation(p: Presentation, budget: EnumerationBudget = EnumerationBudget(),
                         engine=None, oracle: GroupOracle | None = None) -> ComparisonReport:
    """Prefix-membership pipeline of ``p`` against products of relator prefixes."""
    from .assemble import build_oracle
    from .pmp import PrefixMembership, prefix_generators

    G = oracle or build_oracle(p)
    if engine is None:
        engine = PrefixMembership.for_presentation(p, G)
    gens = distinct_generators(prefix_generators(p).words, G)
    queries = sample_queries(p, gens, budget)
    ab = AbelianImage(p.generators, p.relators)
    return compare_engines(p.source or "presentation", engine, gens, G, queries, budget, ab)
