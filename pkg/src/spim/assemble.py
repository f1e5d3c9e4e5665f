"""Build group oracles from the ``oracle:`` descriptor lines of presentation files.

Descriptors::

    oracle: free
    oracle: cyclic <m>
    oracle: kb [budget]
    oracle: free-image            (with ``map: <gen> = <word>`` lines)
    oracle: affine                (with ``affine: <gen> = <a> <b>`` lines, x -> a x + b)
    oracle: plugin <module>:<function>
    oracle: amalgam-of <file> <file>
    oracle: uml <leaf descriptor for the units group>
    oracle: da <leaf descriptor for the units group>

For ``uml`` and ``da`` the leaf descriptor is applied to the units-group
presentation over the fresh symbols ``_z1, _z2, ...``; its data lines are
read from the same file.
"""

from __future__ import annotations

import importlib
from fractions import Fraction

from .core import Letter, Presentation, Word, invert, load_presentation, parse_word, reduce, substitute, support
from .factorise import detect_uniquely_marked
from .freegroup import stallings_graph, subgroup_contains
from .products import (
    AbelianImage,
    AffineOracle,
    AmalgamOracle,
    CachedOracle,
    CallableOracle,
    ConstructiveSubgroupOracle,
    CyclicOracle,
    CyclicSubgroupOracle,
    FreeImageOracle,
    FreeOracle,
    FreeProductOracle,
    FreeSubgroupOracle,
    GroupOracle,
    KBOracle,
    TranslatedOracle,
)
from .structure import da_chain, uml_decompose


class AssemblyError(ValueError):
    pass


def _strip_cache(o: GroupOracle) -> GroupOracle:
    return o.inner if isinstance(o, CachedOracle) else o


class FreeImageSubgroupOracle(ConstructiveSubgroupOracle):
    """Subgroup membership pulled back along an injective map into a free group."""

    def __init__(self, ambient: FreeImageOracle, generators):
        super().__init__(ambient, generators)
        self.image_graph = stallings_graph([ambient._image(g) for g in self.generators])

    def contains(self, w):
        ok, wit = subgroup_contains(self.image_graph, _strip_cache(self.ambient)._image(w))
        return ok, (wit.expression if ok else None)


def subgroup_oracle_for(p: Presentation, oracle: GroupOracle, gens: list[Word], order: int = 0) -> ConstructiveSubgroupOracle:
    inner = _strip_cache(oracle)
    if isinstance(inner, FreeOracle):
        return FreeSubgroupOracle(oracle, gens)
    if isinstance(inner, FreeImageOracle):
        return FreeImageSubgroupOracle(inner, gens)
    if len(gens) != 1:
        raise AssemblyError("amalgamation over several generators needs a free factor")
    return CyclicSubgroupOracle(oracle, gens[0], order=order, abelian=AbelianImage(p.generators, p.relators))


def _free_ok(p: Presentation) -> bool:
    return all(not reduce(r) for r in p.relators)


def build_oracle(p: Presentation, descriptor: str | None = None, cache: bool = True) -> GroupOracle:
    desc = descriptor if descriptor is not None else p.directive("oracle")
    if desc is None:
        desc = "free" if _free_ok(p) else "kb 1000"
    oracle = _build(p, desc.split())
    return CachedOracle(oracle) if cache and not isinstance(oracle, CachedOracle) else oracle


def _build(p: Presentation, words: list[str]) -> GroupOracle:
    if not words:
        raise AssemblyError("empty oracle descriptor")
    kind, args = words[0], words[1:]
    if kind == "free":
        if not _free_ok(p):
            raise AssemblyError("'free' declared but some relator is not freely trivial")
        return FreeOracle(p.generators)
    if kind == "cyclic":
        if len(p.generators) != 1 or len(args) != 1:
            raise AssemblyError("'cyclic m' needs one generator and an order")
        return CyclicOracle(p.generators[0], int(args[0]))
    if kind == "kb":
        return KBOracle(p, int(args[0]) if args else 1000)
    if kind == "free-image":
        images = {}
        for line in p.directive_all("map"):
            g, _, rhs = line.partition("=")
            images[g.strip()] = parse_word(rhs)
        return FreeImageOracle(p, images)
    if kind == "affine":
        maps = {}
        for line in p.directive_all("affine"):
            g, _, rhs = line.partition("=")
            a, b = rhs.split()
            maps[g.strip()] = (Fraction(a), Fraction(b))
        return AffineOracle(p, maps)
    if kind == "plugin":
        mod, _, fn = args[0].partition(":")
        factory = getattr(importlib.import_module(mod), fn)
        made = factory(p)
        if isinstance(made, GroupOracle):
            return made
        return CallableOracle(p.generators, made, name=args[0])
    if kind == "amalgam-of":
        return _amalgam_of(p, args)
    if kind == "uml":
        return uml_oracle(p, args or ["kb", "1000"])
    if kind == "da":
        return da_oracle(p, args or ["kb", "1000"])
    raise AssemblyError(f"unknown oracle descriptor {kind!r}")


def amalgam_parts(p: Presentation) -> tuple[Presentation, Presentation, list[tuple[Word, Word]]]:
    """Component files of an ``amalgam-of`` presentation and its identified pairs ``(u, v)``."""
    refs = (p.directive("oracle") or "").split()
    if refs[:1] != ["amalgam-of"] or len(refs) != 3:
        raise AssemblyError("amalgam-of needs two component files")
    left_p, right_p = (load_presentation(p.resolve(r)) for r in refs[1:])
    la, ra = set(left_p.generators), set(right_p.generators)
    if la & ra:
        raise AssemblyError("component alphabets overlap")
    if set(p.generators) != la | ra:
        raise AssemblyError("generators differ from the union of the components")
    known = {tuple(r) for r in left_p.relators} | {tuple(r) for r in right_p.relators}
    pairs = []
    for r in p.relators:
        if tuple(r) in known:
            continue
        u = tuple(x for x in r if x.symbol in la)
        k = len(u)
        if r[:k] == u and support(r[k:]) <= ra:
            pairs.append((u, invert(tuple(r[k:]))))
        elif support(r[: len(r) - len(u)]) <= ra and tuple(r[len(r) - len(u):]) == u:
            pairs.append((u, invert(tuple(r[: len(r) - len(u)]))))
        else:
            raise AssemblyError("extra relator is not of the form u v^-1")
    return left_p, right_p, pairs


def _amalgam_of(p: Presentation, refs: list[str]) -> GroupOracle:
    left_p, right_p, pairs = amalgam_parts(p)
    left, right = build_oracle(left_p), build_oracle(right_p)
    left_sub = subgroup_oracle_for(left_p, left, [u for u, _ in pairs])
    right_sub = subgroup_oracle_for(right_p, right, [v for _, v in pairs])
    homs = (AbelianImage(left_p.generators, left_p.relators), AbelianImage(right_p.generators, right_p.relators))
    return AmalgamOracle(left, right, pairs, left_sub, right_sub, homs=homs)


def _units_presentation(p: Presentation, H: Presentation) -> Presentation:
    directives = tuple((k, v) for k, v in p.directives if k != "oracle")
    return Presentation("group", H.generators, H.relators, None, directives, p.source)


def uml_oracle(p: Presentation, leaf: list[str]) -> GroupOracle:
    f = p.factorisation
    if f is None:
        raise AssemblyError("uml oracle needs a factorisation")
    markers = detect_uniquely_marked(f)
    if markers is None:
        raise AssemblyError("factorisation is not uniquely marked")
    dec = uml_decompose(p, f, markers)
    h_oracle = build_oracle(_units_presentation(p, dec.H), " ".join(leaf))
    inner = FreeProductOracle(h_oracle, FreeOracle(dec.free_part)) if dec.free_part else h_oracle
    return TranslatedOracle(p.generators, dec.to_h_side, inner, name="uml")


def da_oracle(p: Presentation, leaf: list[str], orders=None) -> GroupOracle:
    f = p.factorisation
    if f is None:
        raise AssemblyError("da oracle needs a factorisation")
    chain = da_chain(p, f, orders if orders is not None else declared_orders(p))
    h_oracle = build_oracle(_units_presentation(p, chain.H), " ".join(leaf))
    current: GroupOracle = h_oracle
    if chain.X0:
        current = CachedOracle(FreeProductOracle(h_oracle, FreeOracle(chain.X0)))
    for level in reversed(chain.levels):
        B = level.B
        if level.order == 0:
            b_oracle = FreeOracle(B.generators)
            b_sub = FreeSubgroupOracle(b_oracle, [level.u])
        elif len(B.generators) == 1:
            n = abs(sum(x.sign for x in level.u)) * level.order
            b_oracle = CyclicOracle(B.generators[0], n)
            b_sub = CyclicSubgroupOracle(b_oracle, level.u, order=level.order)
        else:
            b_oracle = CachedOracle(KBOracle(B))
            b_sub = CyclicSubgroupOracle(b_oracle, level.u, order=level.order)
        zword = (Letter(level.z, 1),)
        g_hom = AbelianImage(level.G.generators, level.G.relators)
        g_sub = CyclicSubgroupOracle(current, zword, order=level.order, abelian=g_hom)
        homs = (g_hom, AbelianImage(B.generators, B.relators))
        current = CachedOracle(AmalgamOracle(current, b_oracle, [(zword, level.u)], g_sub, b_sub,
                                             homs=homs, order=level.order))
    return TranslatedOracle(p.generators, lambda w: tuple(w), current, name="da")


def declared_orders(p: Presentation) -> dict[int, int]:
    """``order: <factor word> = m`` lines, keyed by factor index."""
    out: dict[int, int] = {}
    f = p.factorisation
    for line in p.directive_all("order"):
        lhs, _, m = line.partition("=")
        w = parse_word(lhs)
        if f is None or w not in f.factors:
            raise AssemblyError(f"order tag for unknown factor {lhs.strip()!r}")
        out[f.factors.index(w)] = int(m)
    return out


def group_oracle_for(p: Presentation) -> GroupOracle:
    """Oracle for the maximal group image (same relators)."""
    return build_oracle(p)
