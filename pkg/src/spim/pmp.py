"""Prefix membership pipelines.

``PrefixMembership.for_presentation`` picks a pipeline from the detected
factorisation class:

* ``free``: every relator is freely trivial, so the group is free and the
  prefix monoid is a rational subset decided by a Benois automaton;
* ``uml``: uniquely marked factorisation, decided inside ``H * FG(X')``;
* ``hidden-uml``: the file carries hidden-UML data; the relators are
  rewritten over the new units and handed to ``uml``;
* ``da``: alphabetically disjoint factorisation, decided by descending the
  amalgam chain.

Without parentheses in the file the trivial factorisation (each relator is
its own factor) is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .assemble import build_oracle, declared_orders
from .core import (
    Factorisation,
    Letter,
    Presentation,
    Word,
    format_word,
    invert,
    load_presentation,
    prefixes,
    reduce,
)
from .factorise import adjan_unit_closure, detect_alphabetically_disjoint, detect_uniquely_marked, UnitCertificate
from .freegroup import benois_automaton, submonoid_contains
from .products import (
    AbelianImage,
    AmalgamOracle,
    CachedOracle,
    CyclicOracle,
    CyclicSubgroupOracle,
    FreeOracle,
    FreeProductOracle,
    FreeSubgroupOracle,
    GroupOracle,
    Inconclusive,
    KBOracle,
    TranslatedOracle,
)
from .structure import da_chain, hidden_uml_rewrite, parse_hidden_data, uml_decompose


class PipelineError(ValueError):
    """No pipeline applies, or a hypothesis of the chosen pipeline is unmet."""


@dataclass(frozen=True)
class PrefixGeneratorSet:
    words: tuple
    provenance: str  # "relator-prefixes" or "factor-prefixes"


def prefix_generators(p: Presentation, f: Factorisation | None = None) -> PrefixGeneratorSet:
    """Relator prefixes, or prefixes of every factor and its inverse when ``f`` is given."""
    seen: dict[Word, None] = {}
    if f is None:
        for r in p.relators:
            for w in prefixes(r)[1:]:
                seen.setdefault(w)
        words = tuple(seen) if seen else ((),)
        return PrefixGeneratorSet(words, "relator-prefixes")
    for u in f.factors:
        for w in prefixes(u)[1:] + prefixes(invert(u))[1:]:
            seen.setdefault(w)
    return PrefixGeneratorSet(tuple(seen) if seen else ((),), "factor-prefixes")


def trivial_factorisation(p: Presentation) -> Factorisation:
    factors: list[Word] = []
    occ = []
    for r in p.relators:
        r = tuple(r)
        if r not in factors:
            factors.append(r)
        occ.append(((factors.index(r), 1),))
    return Factorisation(tuple(factors), tuple(occ))


@dataclass
class PmpVerdict:
    word: Word
    member: bool | None
    pipeline: str
    trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        m = "inconclusive" if self.member is None else self.member
        return {"word": format_word(self.word), "member": m, "pipeline": self.pipeline, "trace": self.trace}


# ----------------------------------------------------------- syllable deciders


def submonoid_in_free_product_decide(product: FreeProductOracle, q_automaton, w: Sequence[Letter],
                                     translate: Callable[[Word], Word] | None = None):
    """``w`` in ``<H u Q>`` inside ``H * FG(X')``: every free syllable must lie in ``<Q>``.

    Returns ``(answer, trace)``.
    """
    t = translate(tuple(w)) if translate else tuple(w)
    try:
        nf = product.normal_form(t)
    except Inconclusive:
        return None, ["inconclusive normal form"]
    trace = []
    ok = True
    for side, syl in nf.syllables:
        if side == "L":
            trace.append(f"H:{format_word(syl)} free")
            continue
        inside = submonoid_contains(q_automaton, syl)
        trace.append(f"F:{format_word(syl)} {'in' if inside else 'not in'} <Q>")
        ok = ok and inside
    return ok, trace


def submonoid_in_amalgam_decide(amalgam: AmalgamOracle, left_member: Callable, right_member: Callable,
                                w: Sequence[Letter]):
    """Syllable-wise membership in a submonoid of ``left *_A right`` that contains ``A``.

    ``left_member``/``right_member`` return ``(answer, trace)`` for their side.
    """
    try:
        nf = amalgam.normal_form(w)
    except Inconclusive:
        return None, ["inconclusive normal form"]
    trace = []
    undecided = False
    for side, syl in nf.syllables:
        ans, sub = (left_member if side == "L" else right_member)(syl)
        trace.append({"side": side, "syllable": format_word(syl), "member": ans, "detail": sub})
        if ans is False:
            return False, trace
        if ans is None:
            undecided = True
    return (None if undecided else True), trace


# ------------------------------------------------------------------- pipelines


class FreePipeline:
    name = "free"

    def __init__(self, p: Presentation):
        self.p = p
        self.generators = prefix_generators(p)
        self.automaton = benois_automaton(self.generators.words)

    def decide(self, w) -> PmpVerdict:
        ans = submonoid_contains(self.automaton, w)
        return PmpVerdict(tuple(w), ans, self.name, [f"{format_word(reduce(w))} via Benois"])


class UmlPipeline:
    name = "uml"

    def __init__(self, p: Presentation, f: Factorisation, markers, G: GroupOracle):
        self.p, self.f, self.G = p, f, G
        self.dec = dec = uml_decompose(p, f, markers)
        self.H = CachedOracle(TranslatedOracle(dec.H.generators, dec.from_h_side, G, name="H"))
        right = FreeOracle(dec.free_part)
        self.product = FreeProductOracle(self.H, right)
        Q: dict[Word, None] = {}
        for pj, qj in zip(dec.p, dec.q):
            for w in prefixes(pj)[1:] + prefixes(invert(qj))[1:]:
                Q.setdefault(w)
        self.Q = tuple(Q)
        self.q_automaton = benois_automaton(self.Q)

    def decide(self, w) -> PmpVerdict:
        ans, trace = submonoid_in_free_product_decide(self.product, self.q_automaton, w, self.dec.to_h_side)
        return PmpVerdict(tuple(w), ans, self.name, trace)


class DaPipeline:
    name = "da"

    def __init__(self, p: Presentation, f: Factorisation, G: GroupOracle, orders=None,
                 b_prefix_oracles: dict | None = None):
        self.p, self.f, self.G = p, f, G
        self.chain = chain = da_chain(p, f, orders if orders is not None else declared_orders(p))
        k = len(chain.levels)
        self.G_oracles = [G] + [
            CachedOracle(TranslatedOracle(chain.presentation(j).generators, _subst(chain.backward(j)), G,
                                          name=f"G_{j}"))
            for j in range(1, k + 1)
        ]
        Gk = self.G_oracles[k]
        if chain.X0:
            hs = TranslatedOracle(chain.H.generators, lambda w: w, Gk, name="H")
            self.top = FreeProductOracle(hs, FreeOracle(chain.X0))
        else:
            self.top = None
        self.amalgams = []
        self.b_members = []
        b_prefix_oracles = b_prefix_oracles or {}
        for level in chain.levels:
            j = level.j
            B = level.B
            zword = (Letter(level.z, 1),)
            pref = prefixes(level.u)[1:] + prefixes(invert(level.u))[1:]
            if level.order == 0:
                b_oracle = FreeOracle(B.generators)
                b_sub = FreeSubgroupOracle(b_oracle, [level.u])
                aut = benois_automaton(pref)
                member = _benois_member(aut)
            else:
                if len(B.generators) == 1:
                    n = abs(sum(x.sign for x in level.u)) * level.order
                    b_oracle = CyclicOracle(B.generators[0], n)
                    member = _whole_group
                else:
                    b_oracle = CachedOracle(KBOracle(B))
                    if j not in b_prefix_oracles:
                        raise PipelineError(f"factor {format_word(level.u)} has finite order {level.order}; "
                                            "a prefix-membership plug-in for its factor group is required")
                    member = b_prefix_oracles[j]
                b_sub = CyclicSubgroupOracle(b_oracle, level.u, order=level.order)
            g_hom = AbelianImage(level.G.generators, level.G.relators)
            g_sub = CyclicSubgroupOracle(self.G_oracles[j], zword, order=level.order, abelian=g_hom)
            self.amalgams.append(AmalgamOracle(self.G_oracles[j], b_oracle, [(zword, level.u)], g_sub, b_sub,
                                               homs=(g_hom, AbelianImage(B.generators, B.relators)),
                                               order=level.order))
            self.b_members.append(member)

    def member_at(self, j: int, w: Word):
        """Membership in ``M_j`` inside ``G_j``."""
        k = len(self.chain.levels)
        if j == k:
            if self.top is None:
                return True, "G_k = H"
            try:
                nf = self.top.normal_form(w)
            except Inconclusive:
                return None, "inconclusive"
            return all(s == "L" for s, _ in nf.syllables), str(nf)
        return submonoid_in_amalgam_decide(self.amalgams[j], lambda s: self.member_at(j + 1, s),
                                           self.b_members[j], w)

    def decide(self, w) -> PmpVerdict:
        ans, trace = self.member_at(0, tuple(w))
        return PmpVerdict(tuple(w), ans, self.name, trace if isinstance(trace, list) else [trace])


def _subst(m):
    from .core import substitute
    return lambda w: substitute(w, m)


def _benois_member(aut):
    def member(w):
        ans = submonoid_contains(aut, w)
        return ans, "Benois"
    return member


def _whole_group(w):
    return True, "finite cyclic factor group: prefixes generate"


# ------------------------------------------------------------------- dispatch


def component_files(p: Presentation) -> list[Presentation]:
    desc = (p.directive("oracle") or "").split()
    if desc[:1] == ["amalgam-of"]:
        return [load_presentation(p.resolve(r)) for r in desc[1:]]
    return []


def certified_units(p: Presentation, targets: Sequence[Word], budget: int = 10000,
                    stephen_rounds: int = 4) -> dict:
    """Unit certificates for ``targets`` (and whatever else the closure finds).

    For ``amalgam-of`` files the closures of the components are merged in
    as well: a unit of a factor monoid stays a unit of the amalgam.
    """
    targets = [tuple(t) for t in targets]
    closure = adjan_unit_closure(p, budget, 0)
    certs = dict(closure.certificates)
    if all(t in certs for t in targets):
        return certs
    for comp in component_files(p):
        local = [t for t in targets if t not in certs and {x.symbol for x in t} <= set(comp.generators)]
        if not local:
            continue
        sub = adjan_unit_closure(comp, budget, stephen_rounds, targets=local)
        for w, c in sub.certificates.items():
            certs.setdefault(w, UnitCertificate(w, "component", (), f"{c.rule} in {comp.source}"))
    if not all(t in certs for t in targets) and not component_files(p):
        closure = adjan_unit_closure(p, budget, stephen_rounds, targets=targets)
        certs.update(closure.certificates)
    return certs


@dataclass
class PrefixMembership:
    pipeline: object
    conservative: str  # "trivial", "unital", "free" or "unverified"
    presentation: Presentation
    factorisation: Factorisation | None

    @property
    def name(self) -> str:
        return self.pipeline.name

    def decide(self, w) -> PmpVerdict:
        v = self.pipeline.decide(tuple(w))
        if self.conservative == "unverified":
            v.trace.append("conservativity not certified: answer is for the factor-prefix monoid")
        return v

    def __call__(self, w):
        return self.decide(w).member

    @classmethod
    def for_presentation(cls, p: Presentation, G: GroupOracle | None = None, orders=None,
                         stephen_rounds: int = 4) -> "PrefixMembership":
        if G is None:
            G = build_oracle(p)
        if all(not reduce(r) for r in p.relators):
            return cls(FreePipeline(p), "free", p, None)
        f = p.factorisation
        trivial = f is None
        if trivial:
            f = trivial_factorisation(p)
        if p.directive("hidden") is not None:
            certs = certified_units(p, f.factors, stephen_rounds=stephen_rounds)
            status = "unital" if all(tuple(u) in certs for u in f.factors) else "unverified"
            q, fact, markers = hidden_uml_rewrite(p, f, parse_hidden_data(p))
            pipe = UmlPipeline(q, fact, markers, G)
            pipe.name = "hidden-uml"
            return cls(pipe, status, q, fact)
        if trivial:
            status = "trivial"
        else:
            certs = certified_units(p, f.factors, stephen_rounds=stephen_rounds)
            status = "unital" if all(tuple(u) in certs for u in f.factors) else "unverified"
        markers = detect_uniquely_marked(f)
        if markers is not None:
            return cls(UmlPipeline(p, f, markers, G), status, p, f)
        if detect_alphabetically_disjoint(f):
            return cls(DaPipeline(p, f, G, orders), status, p, f)
        raise PipelineError("factorisation is neither uniquely marked nor alphabetically disjoint")


def pmp_uml_decide(p: Presentation, f: Factorisation, markers, G: GroupOracle, w) -> PmpVerdict:
    return UmlPipeline(p, f, markers, G).decide(w)


def pmp_da_decide(p: Presentation, f: Factorisation, chain_orders, G: GroupOracle, w,
                  b_prefix_oracles: dict | None = None) -> PmpVerdict:
    return DaPipeline(p, f, G, chain_orders, b_prefix_oracles).decide(w)
