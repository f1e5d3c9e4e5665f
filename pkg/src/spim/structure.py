"""Structural rewrites of factorised presentations."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .core import (
    FRESH_PREFIX,
    Factorisation,
    Letter,
    Presentation,
    Word,
    format_word,
    invert,
    is_reduced,
    make_presentation,
    parse_word,
    power,
    reduce,
    substitute,
    support,
)
from .factorise import detect_alphabetically_disjoint, detect_uniquely_marked, validate_factorisation
from .freegroup import stallings_graph, subgroup_contains
from .products import AbelianImage


_WITNESS = re.compile(r"\(([^()]*)\)('?)")


class StructureError(ValueError):
    pass


def fresh_symbols(k: int, avoid: Sequence[str] = ()) -> list[str]:
    avoid = set(avoid)
    out = []
    n = 1
    while len(out) < k:
        s = f"{FRESH_PREFIX}{n}"
        if s not in avoid:
            out.append(s)
        n += 1
    return out


def _letters(symbols: Sequence[str]) -> dict[str, Word]:
    return {s: (Letter(s, 1),) for s in symbols}


# ------------------------------------------------------------------ uniquely marked


@dataclass(frozen=True)
class UmlDecomposition:
    H: Presentation
    z: tuple  # fresh symbol per factor
    free_part: tuple  # X'
    p: tuple  # per factor
    q: tuple
    markers: tuple  # marker symbol per factor
    marker_signs: tuple
    forward: dict  # symbol -> Word over z and X'
    backward: dict  # symbol -> Word over X

    def to_h_side(self, w: Sequence[Letter]) -> Word:
        return substitute(w, self.forward)

    def from_h_side(self, w: Sequence[Letter]) -> Word:
        return substitute(w, self.backward)


def uml_decompose(p: Presentation, f: Factorisation, markers: Mapping[int, str]) -> UmlDecomposition:
    if not validate_factorisation(p, f):
        raise StructureError("invalid factorisation")
    k = len(f.factors)
    zs = fresh_symbols(k, p.generators)
    ps, qs, signs = [], [], []
    marker_syms = [markers[j] for j in range(k)]
    if len(set(marker_syms)) != k:
        raise StructureError("markers are not distinct")
    for j, u in enumerate(f.factors):
        y = marker_syms[j]
        pos = [i for i, x in enumerate(u) if x.symbol == y]
        if len(pos) != 1:
            raise StructureError(f"marker {y} occurs {len(pos)} times in factor {format_word(u)}")
        i = pos[0]
        pj, qj = u[:i], u[i + 1:]
        if y in support(pj) | support(qj):
            raise StructureError(f"marker {y} inside its own p/q")
        for other in range(k):
            if other != j and y in support(f.factors[other]):
                raise StructureError(f"marker {y} occurs in factor {format_word(f.factors[other])}")
        ps.append(pj)
        qs.append(qj)
        signs.append(u[i].sign)
    free_part = tuple(g for g in p.generators if g not in set(marker_syms))
    forward: dict[str, Word] = _letters(free_part)
    for j, y in enumerate(marker_syms):
        img = invert(ps[j]) + (Letter(zs[j], 1),) + invert(qs[j])
        forward[y] = img if signs[j] > 0 else invert(img)
    backward: dict[str, Word] = _letters(p.generators)
    for j in range(k):
        backward[zs[j]] = tuple(f.factors[j])
    rels = [f.pattern(i, zs) for i in range(len(p.relators))]
    H = make_presentation("group", zs, rels, None)
    return UmlDecomposition(H, tuple(zs), free_part, tuple(ps), tuple(qs), tuple(marker_syms),
                            tuple(signs), forward, backward)


# ------------------------------------------------------------- disjoint alphabets


@dataclass(frozen=True)
class DaLevel:
    """``G_{j-1} = G_j *_{z_j = u_j} B_j``."""

    j: int
    G: Presentation  # G_j
    B: Presentation  # B_j
    u: Word
    z: str
    order: int  # 0 means infinite


@dataclass(frozen=True)
class DaChain:
    G0: Presentation
    levels: tuple  # DaLevel for j = 1..k
    H: Presentation  # relators of G_k (over z symbols only)
    X0: tuple
    z: tuple
    factors: tuple
    orders: tuple

    @property
    def Gk(self) -> Presentation:
        return self.levels[-1].G if self.levels else self.G0

    def presentation(self, j: int) -> Presentation:
        return self.G0 if j == 0 else self.levels[j - 1].G

    def backward(self, j: int) -> dict:
        """Substitution taking words over G_j's alphabet to words over G_0's."""
        m: dict[str, Word] = _letters(self.G0.generators)
        for i in range(j):
            m[self.z[i]] = tuple(self.factors[i])
        return m


def auto_orders(p: Presentation, f: Factorisation) -> list[int | None]:
    """Infinite order (0) where the abelian image of the factor is nonzero; None otherwise."""
    ab = AbelianImage(p.generators, p.relators)
    return [0 if any(ab.image(u)) else None for u in f.factors]


def da_chain(p: Presentation, f: Factorisation, orders: Mapping[int, int] | Sequence[int | None] | None = None) -> DaChain:
    if not validate_factorisation(p, f):
        raise StructureError("invalid factorisation")
    if not detect_alphabetically_disjoint(f):
        raise StructureError("factorisation is not alphabetically disjoint")
    k = len(f.factors)
    supplied: list[int | None] = [None] * k
    if orders is not None:
        items = orders.items() if isinstance(orders, Mapping) else enumerate(orders)
        for j, m in items:
            supplied[j] = m
    auto = auto_orders(p, f)
    tags = []
    for j in range(k):
        m = supplied[j] if supplied[j] is not None else auto[j]
        if m is None:
            raise StructureError(f"order of factor {format_word(f.factors[j])} is not certified; supply a tag")
        if m < 0:
            raise StructureError("order tags are nonnegative")
        tags.append(m)
    zs = fresh_symbols(k, p.generators)
    supports = [support(u) for u in f.factors]
    X0 = tuple(g for g in p.generators if not any(g in s for s in supports))
    levels = []
    for j in range(1, k + 1):
        gens = []
        for g in p.generators:
            owner = next((i for i, s in enumerate(supports) if g in s), None)
            if owner is None or owner >= j:
                gens.append(g)
        gens = list(zs[:j]) + gens
        assign: dict[str, Word] = {}
        for i in range(k):
            assign[zs[i]] = (Letter(zs[i], 1),) if i < j else tuple(f.factors[i])
        rels = [substitute(f.pattern(i, zs), assign) for i in range(len(p.relators))]
        G = make_presentation("group", gens, rels)
        u = tuple(f.factors[j - 1])
        Xj = [g for g in p.generators if g in supports[j - 1]]
        m = tags[j - 1]
        B = make_presentation("group", Xj, [power(u, m)] if m else [])
        levels.append(DaLevel(j, G, B, u, zs[j - 1], m))
    H = make_presentation("group", zs, [f.pattern(i, zs) for i in range(len(p.relators))])
    return DaChain(p, tuple(levels), H, X0, tuple(zs), tuple(tuple(u) for u in f.factors), tuple(tags))


# ------------------------------------------------------------------ change of units


def change_units(p: Presentation, f: Factorisation, V: Sequence[Word]) -> tuple[Presentation, Factorisation]:
    U = [tuple(u) for u in f.factors]
    for u in U:
        if not is_reduced(u):
            raise StructureError(f"factor {format_word(u)} is not reduced")
    V = [reduce(v) for v in V]
    gV = stallings_graph(V)
    gU = stallings_graph(U)
    for v in V:
        if not subgroup_contains(gU, v)[0]:
            raise StructureError(f"<U> != <V>: {format_word(v)} not in <U>")
    expressions = []
    for u in U:
        ok, wit = subgroup_contains(gV, u)
        if not ok:
            raise StructureError(f"<U> != <V>: {format_word(u)} not in <V>")
        expressions.append(wit.expression)
    used: list[int] = []
    occurrences = []
    relators = []
    for i in range(len(p.relators)):
        occ = []
        for j, s in f.occurrences[i]:
            expr = expressions[j] if s > 0 else tuple((a, -b) for a, b in reversed(expressions[j]))
            occ.extend(expr)
        occurrences.append(occ)
        for a, _ in occ:
            if a not in used:
                used.append(a)
    order = sorted(used)
    remap = {a: n for n, a in enumerate(order)}
    factors = tuple(V[a] for a in order)
    occs = tuple(tuple((remap[a], b) for a, b in occ) for occ in occurrences)
    fact = Factorisation(factors, occs)
    relators = [fact.spell(i) for i in range(len(p.relators))]
    for i, r in enumerate(relators):
        if reduce(r) != reduce(p.relators[i]):
            raise StructureError(f"rewritten relator {i} does not reduce to the original")
    directives = tuple((k, v) for k, v in p.directives if k not in ("hidden", "witness"))
    q = Presentation(p.kind, p.generators, tuple(relators), fact, directives, p.source)
    return q, fact


# ------------------------------------------------------------------ hidden UML


@dataclass
class HiddenBlock:
    x: str
    z: str
    Y: tuple
    W: tuple  # words over Y; must contain the empty word
    witnesses: dict = field(default_factory=dict)  # y -> tuple of (W index, sign)

    @property
    def X(self) -> set:
        return {self.x, self.z} | set(self.Y)


class HiddenUmlError(StructureError):
    def __init__(self, condition: int, message: str):
        super().__init__(f"condition {condition}: {message}")
        self.condition = condition


def parse_hidden_data(p: Presentation) -> list[HiddenBlock]:
    """Blocks from ``hidden: x | z | Y... | w1 ; w2 ; ...`` and ``witness: y = (w) (w)' ...`` lines."""
    blocks = []
    for text in p.directive_all("hidden"):
        parts = [s.strip() for s in text.split("|")]
        if len(parts) != 4:
            raise StructureError(f"hidden block needs 4 fields: {text!r}")
        x, z = parts[0], parts[1]
        Y = tuple(parts[2].split())
        W = tuple(parse_word(w) for w in parts[3].split(";"))
        blocks.append(HiddenBlock(x, z, Y, W))
    for text in p.directive_all("witness"):
        y, _, rhs = text.partition("=")
        y = y.strip()
        block = next((b for b in blocks if y in b.Y), None)
        if block is None:
            raise StructureError(f"witness for {y!r} matches no block")
        expr = [(parse_word(body), -1 if mark else 1) for body, mark in _WITNESS.findall(rhs)]
        if not expr and rhs.strip() not in ("", "1"):
            raise StructureError(f"bad witness syntax {text!r}")
        resolved = []
        for w, s in expr:
            if w not in block.W:
                raise HiddenUmlError(4, f"witness for {y} uses {format_word(w)} outside W")
            resolved.append((block.W.index(w), s))
        block.witnesses[y] = tuple(resolved)
    return blocks


def check_hidden_conditions(f: Factorisation, blocks: Sequence[HiddenBlock]) -> None:
    seen: set[str] = set()
    for b in blocks:
        if b.X & seen:
            raise HiddenUmlError(1, f"alphabets overlap on {sorted(b.X & seen)}")
        if len({b.x, b.z}) != 2 or {b.x, b.z} & set(b.Y):
            raise HiddenUmlError(1, "x, z and Y must be distinct")
        seen |= b.X
    expected = set()
    for b in blocks:
        for w in b.W:
            if not support(w) <= set(b.Y) or any(x.sign < 0 for x in w):
                raise HiddenUmlError(2, f"{format_word(w)} is not a positive word over Y")
            expected.add((Letter(b.x, 1),) + tuple(w) + (Letter(b.z, 1),))
    actual = {tuple(u) for u in f.factors}
    if actual != expected:
        missing = sorted(format_word(w) for w in expected - actual)
        extra = sorted(format_word(w) for w in actual - expected)
        raise HiddenUmlError(2, f"factor set mismatch (missing {missing}, extra {extra})")
    for b in blocks:
        if () not in b.W:
            raise HiddenUmlError(3, f"empty word missing from W for block {b.x}")
    for b in blocks:
        for y in b.Y:
            expr = b.witnesses.get(y)
            if expr is None:
                raise HiddenUmlError(4, f"no witness for {y}")
            word: list[Letter] = []
            for i, s in expr:
                word.extend(b.W[i] if s > 0 else invert(b.W[i]))
            if reduce(word) != (Letter(y, 1),):
                raise HiddenUmlError(4, f"witness for {y} reduces to {format_word(reduce(word))}")


def hidden_uml_rewrite(p: Presentation, f: Factorisation, blocks: Sequence[HiddenBlock]):
    check_hidden_conditions(f, blocks)
    V: list[Word] = []
    for b in blocks:
        x = Letter(b.x, 1)
        for y in b.Y:
            V.append((x, Letter(y, 1), x.inverse()))
        V.append((x, Letter(b.z, 1)))
    q, fact = change_units(p, f, V)
    markers = detect_uniquely_marked(fact)
    if markers is None:
        raise StructureError("rewritten factorisation is not uniquely marked")
    return q, fact, markers


# ------------------------------------------------------------------ units group


def units_group_presentation(p: Presentation, f: Factorisation) -> Presentation:
    """``<z_1..z_k | occurrence patterns>``; the caller asserts the factors are minimal invertible pieces."""
    if detect_uniquely_marked(f) is None and not detect_alphabetically_disjoint(f):
        raise StructureError("factorisation is neither uniquely marked nor alphabetically disjoint")
    zs = fresh_symbols(len(f.factors), p.generators)
    return make_presentation("group", zs, [f.pattern(i, zs) for i in range(len(p.relators))])
