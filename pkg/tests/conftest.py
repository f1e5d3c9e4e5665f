import itertools
from pathlib import Path

import pytest
from hypothesis import settings

from spim.core import Letter, load_presentation, reduce

PRES = Path(__file__).resolve().parent.parent / "presentations"

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def pres():
    cache = {}

    def get(name):
        if name not in cache:
            cache[name] = load_presentation(PRES / f"{name}.pres")
        return cache[name]
    return get


def all_reduced_words(symbols, max_len):
    """Every reduced word over ``symbols`` of length at most ``max_len``."""
    letters = [Letter(s, e) for s in symbols for e in (1, -1)]
    out = [()]
    layer = [()]
    for _ in range(max_len):
        nxt = []
        for w in layer:
            for x in letters:
                if w and w[-1].symbol == x.symbol and w[-1].sign == -x.sign:
                    continue
                nxt.append(w + (x,))
        out.extend(nxt)
        layer = nxt
    return out


def free_products_upto(gens, n, inverses=False):
    """Reduced forms of all products of at most ``n`` generators (brute force, no automata)."""
    pool = [reduce(g) for g in gens]
    if inverses:
        pool += [reduce(tuple(Letter(x.symbol, -x.sign) for x in reversed(g))) for g in pool]
    seen = {()}
    frontier = {()}
    for _ in range(n):
        nxt = set()
        for w in frontier:
            for g in pool:
                v = reduce(w + g)
                if v not in seen:
                    seen.add(v)
                    nxt.add(v)
        frontier = nxt
    return seen


def reduced_words_strategy(symbols, max_len):
    from hypothesis import strategies as st
    letters = st.builds(Letter, st.sampled_from(list(symbols)), st.sampled_from([1, -1]))
    return st.lists(letters, max_size=max_len).map(tuple)


def random_word(rng, symbols, max_len):
    letters = [Letter(s, e) for s in symbols for e in (1, -1)]
    return tuple(rng.choice(letters) for _ in range(rng.randint(0, max_len)))


def sample_pairs(p, rng, n, max_len=5):
    """Pairs (u, v) over the alphabet of ``p``, biased towards equal ones.

    v is u with a relator or an idempotent spliced in, u itself padded as
    u u' u, or an unrelated random word.
    """
    from spim.core import invert
    out = []
    for _ in range(n):
        u = random_word(rng, p.generators, max_len)
        kind = rng.randrange(4)
        i = rng.randint(0, len(u))
        if kind == 0 and p.relators:
            r = rng.choice(p.relators)
            v = u[:i] + tuple(r) + u[i:]
        elif kind == 1:
            e = random_word(rng, p.generators, 3)
            v = u[:i] + e + invert(e) + u[i:]
        elif kind == 2:
            v = u + invert(u) + u
        else:
            v = random_word(rng, p.generators, max_len)
        out.append((u, v) if rng.random() < 0.5 else (v, u))
    return out


def encode_word(w):
    """Plain-string form of a word over single-character symbols; inverses are upper case."""
    return "".join(x.symbol if x.sign > 0 else x.symbol.upper() for x in w)


def capped_closure(gens, cap):
    """Reduced words reachable from 1 by right multiplication by ``gens`` without exceeding length ``cap``.

    Every word found is a product of generators (sound).  Raising ``cap``
    only adds words.  Strings keep this fast enough for the free-group sweep.
    """
    gens = [encode_word(g) for g in gens]
    seen = {""}
    frontier = [""]
    while frontier:
        nxt = []
        for w in frontier:
            for g in gens:
                i, n = 0, min(len(w), len(g))
                while i < n and w[-1 - i] == g[i].swapcase():
                    i += 1
                v = w[:len(w) - i] + g[i:]
                if len(v) <= cap and v not in seen:
                    seen.add(v)
                    nxt.append(v)
        frontier = nxt
    return seen
