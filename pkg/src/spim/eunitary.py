"""E-unitarity certificates: one cyclically reduced relator, and amalgams over units."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .core import (
    Factorisation,
    Letter,
    Presentation,
    Word,
    cyclically_reduce,
    format_word,
    invert,
    is_reduced,
    parse_presentation,
    parse_word,
    prefixes,
    print_presentation,
    reduce,
)
from .factorise import UnitCertificate, adjan_unit_closure, replay_certificate
from .products import AbelianImage
from . import stephen


class CertificationError(ValueError):
    pass


@dataclass
class EUnitaryCertificate:
    route: str  # "single-cyclically-reduced" or "amalgam-over-units"
    presentation: str  # printed presentation the certificate speaks about
    parts: list = field(default_factory=list)  # sub-certificates of amalgam factors
    pairs: list = field(default_factory=list)  # (u, v) words
    units: list = field(default_factory=list)  # per pair: (left derivation, right derivation)

    def to_json(self) -> dict:
        return {
            "route": self.route,
            "presentation": self.presentation,
            "parts": [c.to_json() for c in self.parts],
            "pairs": [[format_word(u), format_word(v)] for u, v in self.pairs],
            "units": [[[c.to_json() for c in left], [c.to_json() for c in right]] for left, right in self.units],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, data: dict) -> "EUnitaryCertificate":
        return cls(
            data["route"],
            data["presentation"],
            [cls.from_json(c) for c in data.get("parts", [])],
            [(parse_word(u), parse_word(v)) for u, v in data.get("pairs", [])],
            [([_cert_from_json(c) for c in left], [_cert_from_json(c) for c in right])
             for left, right in data.get("units", [])],
        )


def _cert_from_json(d: dict) -> UnitCertificate:
    return UnitCertificate(parse_word(d["word"]), d["rule"], tuple(parse_word(w) for w in d["premises"]),
                           d.get("detail", ""))


# ------------------------------------------------------------------ single relator


def certify_single_relator(p: Presentation) -> EUnitaryCertificate:
    if len(p.relators) != 1:
        raise CertificationError(f"single-relator route needs exactly one relator, found {len(p.relators)}")
    r = tuple(p.relators[0])
    if not r:
        raise CertificationError("relator is empty")
    if not is_reduced(r):
        raise CertificationError("relator is not freely reduced")
    conj, core = cyclically_reduce(r)
    if conj or core != r:
        raise CertificationError("relator is not cyclically reduced")
    return EUnitaryCertificate("single-cyclically-reduced", print_presentation(p))


# ------------------------------------------------------------- upward directed


class UncertifiedGenerator(CertificationError):
    def __init__(self, word: Word, why: str):
        super().__init__(f"{format_word(word)}: {why}")
        self.word = word


def _literal_product_of(pieces: Sequence[Word], w: Word) -> bool:
    reach = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        if i == len(w):
            return True
        for u in pieces:
            if u and w[i:i + len(u)] == u and i + len(u) not in reach:
                reach.add(i + len(u))
                stack.append(i + len(u))
    return len(w) in reach


def check_upward_directed(kind: str, generators: Sequence[Word], p: Presentation | None = None,
                          unit_certificates: dict | None = None) -> bool:
    """Syntactic check that ``N = Inv<generators>`` satisfies one of the four sufficient cases.

    ``units``: every generator has a unit certificate; ``idempotents``: every
    generator freely reduces to 1; ``right-unit-cyclic`` / ``left-unit-cyclic``:
    a single generator that is literally a product of relator prefixes
    (suffixes).  Raises ``UncertifiedGenerator`` naming the first failure.
    """
    gens = [tuple(g) for g in generators]
    if kind == "units":
        certs = unit_certificates
        if certs is None:
            if p is None:
                raise ValueError("units case needs certificates or a presentation")
            certs = adjan_unit_closure(p, targets=gens).certificates
        for g in gens:
            if g not in certs and invert(g) not in certs:
                raise UncertifiedGenerator(g, "no unit certificate")
        return True
    if kind == "idempotents":
        for g in gens:
            if reduce(g):
                raise UncertifiedGenerator(g, "not idempotent in the free inverse monoid")
        return True
    if kind in ("right-unit-cyclic", "left-unit-cyclic"):
        if len(gens) != 1:
            raise CertificationError(f"{kind} needs exactly one generator")
        if p is None:
            raise ValueError(f"{kind} needs the presentation")
        if kind == "right-unit-cyclic":
            pieces = [w for r in p.relators for w in prefixes(tuple(r))[1:]]
        else:
            pieces = [tuple(r)[k:] for r in p.relators for k in range(len(r))]
        if not _literal_product_of(pieces, gens[0]):
            raise UncertifiedGenerator(gens[0], f"not a product of relator {'prefixes' if kind[0] == 'r' else 'suffixes'}")
        return True
    raise ValueError(f"unknown upward-directed case {kind!r}")


# ------------------------------------------------------------------ amalgams


def _derivation(certs: dict, w: Word) -> list[UnitCertificate]:
    """The certificates needed to re-derive ``w``, in derivation order."""
    order = list(certs)
    need: set = set()
    stack = [w]
    while stack:
        x = stack.pop()
        if x in need:
            continue
        need.add(x)
        stack.extend(certs[x].premises)
    return [certs[x] for x in order if x in need]


def _unit_derivation(p: Presentation, w: Word, stephen_rounds: int) -> list[UnitCertificate]:
    closure = adjan_unit_closure(p, stephen_rounds=stephen_rounds, targets=[w])
    if w not in closure.certificates:
        raise CertificationError(f"{format_word(w)} is not certified as a unit")
    return _derivation(closure.certificates, w)


def _merged_factorisation(parts: Sequence[Presentation], pairs) -> Factorisation:
    factors: list[Word] = []
    occ = []

    def idx(w):
        w = tuple(w)
        if w not in factors:
            factors.append(w)
        return factors.index(w)

    for q in parts:
        f = q.factorisation
        for i, r in enumerate(q.relators):
            if f is None:
                occ.append(((idx(r), 1),))
            else:
                occ.append(tuple((idx(f.factors[j]), s) for j, s in f.occurrences[i]))
    for u, v in pairs:
        occ.append(((idx(u), 1), (idx(v), -1)))
    return Factorisation(tuple(factors), tuple(occ))


def certify_amalgam(p1: Presentation, c1: EUnitaryCertificate | None, p2: Presentation,
                    c2: EUnitaryCertificate | None, pairs: Sequence[tuple[Word, Word]],
                    unit_derivations: Sequence | None = None, stephen_rounds: int = 4,
                    directives=()) -> tuple[EUnitaryCertificate, Presentation]:
    """E-unitarity of ``M1 *_N M2`` for ``N`` generated by units, plus its special presentation."""
    clash = set(p1.generators) & set(p2.generators)
    if clash:
        raise CertificationError(f"alphabets clash on {sorted(clash)}")
    if not pairs:
        raise CertificationError("no amalgamating pairs")
    c1 = c1 or certify_any(p1)
    c2 = c2 or certify_any(p2)
    pairs = [(tuple(u), tuple(v)) for u, v in pairs]
    for u, v in pairs:
        if not u or not v:
            raise CertificationError("amalgamating words must be nonempty")
        if {x.symbol for x in u} - set(p1.generators) or {x.symbol for x in v} - set(p2.generators):
            raise CertificationError(f"pair {format_word(u)} = {format_word(v)} mixes the alphabets")
    units = []
    for n, (u, v) in enumerate(pairs):
        if unit_derivations is not None:
            left, right = unit_derivations[n]
        else:
            left = _unit_derivation(p1, u, stephen_rounds)
            right = _unit_derivation(p2, v, stephen_rounds)
        units.append((list(left), list(right)))
    _check_group_side(p1, p2, pairs)
    gens = tuple(p1.generators) + tuple(p2.generators)
    rels = tuple(p1.relators) + tuple(p2.relators) + tuple(u + invert(v) for u, v in pairs)
    fact = _merged_factorisation([p1, p2], pairs)
    q = Presentation("inverse_monoid", gens, rels, fact, tuple(directives))
    cert = EUnitaryCertificate("amalgam-over-units", print_presentation(q), [c1, c2], pairs, units)
    return cert, q


def _check_group_side(p1: Presentation, p2: Presentation, pairs) -> None:
    """Unit-generated submonoids are the group-side subgroups; single infinite-order pairs match automatically."""
    if len(pairs) != 1:
        raise CertificationError("only single-pair amalgams are certified")
    u, v = pairs[0]
    a1 = AbelianImage(p1.generators, p1.relators)
    a2 = AbelianImage(p2.generators, p2.relators)
    if not any(a1.image(u)) or not any(a2.image(v)):
        raise CertificationError("infinite order of the amalgamating units is not certified")


def certify_any(p: Presentation) -> EUnitaryCertificate:
    return certify_single_relator(p)


# ------------------------------------------------------------------ replay


def replay(cert: EUnitaryCertificate) -> bool:
    p = parse_presentation(cert.presentation)
    if cert.route == "single-cyclically-reduced":
        try:
            certify_single_relator(p)
        except CertificationError:
            return False
        return True
    if cert.route != "amalgam-over-units" or len(cert.parts) != 2:
        return False
    if not all(replay(c) for c in cert.parts):
        return False
    p1 = parse_presentation(cert.parts[0].presentation)
    p2 = parse_presentation(cert.parts[1].presentation)
    rels = tuple(p1.relators) + tuple(p2.relators) + tuple(u + invert(v) for u, v in cert.pairs)
    if tuple(p.relators) != rels or tuple(p.generators) != tuple(p1.generators) + tuple(p2.generators):
        return False
    for (u, v), (left, right) in zip(cert.pairs, cert.units):
        if not _replay_units(p1, left, u) or not _replay_units(p2, right, v):
            return False
    try:
        _check_group_side(p1, p2, cert.pairs)
    except CertificationError:
        return False
    return True


def _replay_units(p: Presentation, derivation: Sequence[UnitCertificate], target: Word) -> bool:
    known: dict = {}
    for c in derivation:
        if c.rule == "stephen":
            rounds = int(c.detail.split("after ")[1].split()[0])
            ok = stephen.unit_certified(stephen.approximant(p, (), rounds), c.word)
        else:
            ok = replay_certificate(p, c, known)
        if not ok:
            return False
        known[c.word] = c
    return target in known
