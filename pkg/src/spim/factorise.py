"""Factorisation classes: uniquely marked, alphabetically disjoint, unital, conservative."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .core import Factorisation, Letter, Presentation, Word, format_word, invert, prefixes, support
from . import stephen


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    message: str = ""
    relator: int | None = None
    position: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_factorisation(p: Presentation, f: Factorisation) -> ValidationResult:
    if len(f.occurrences) != len(p.relators):
        return ValidationResult(False, f"{len(f.occurrences)} occurrence lists for {len(p.relators)} relators")
    used = set()
    for i, r in enumerate(p.relators):
        for j, _ in f.occurrences[i]:
            if not 0 <= j < len(f.factors):
                return ValidationResult(False, f"relator {i}: unknown factor index {j}", i)
            used.add(j)
        spelled = f.spell(i)
        if spelled != tuple(r):
            pos = next((k for k, (a, b) in enumerate(zip(spelled, r)) if a != b), min(len(spelled), len(r)))
            return ValidationResult(False, f"relator {i}: mismatch at position {pos}", i, pos)
    for j in range(len(f.factors)):
        if j not in used:
            return ValidationResult(False, f"factor {j} ({format_word(f.factors[j])}) is never used")
    return ValidationResult(True)


def _symbol_counts(w: Sequence[Letter]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for x in w:
        counts[x.symbol] = counts.get(x.symbol, 0) + 1
    return counts


def detect_uniquely_marked(f: Factorisation) -> dict[int, str] | None:
    """Marker symbol per factor index, or None when some factor has no marker."""
    counts = [_symbol_counts(u) for u in f.factors]
    markers: dict[int, str] = {}
    for i, u in enumerate(f.factors):
        found = None
        for x in u:  # first candidate in reading order, for determinism
            s = x.symbol
            if counts[i][s] == 1 and all(s not in counts[j] for j in range(len(f.factors)) if j != i):
                found = s
                break
        if found is None:
            return None
        markers[i] = found
    return markers


def detect_alphabetically_disjoint(f: Factorisation) -> bool:
    if len(f.factors) < 2:
        return False
    seen: set[str] = set()
    for u in f.factors:
        s = support(u)
        if s & seen:
            return False
        seen |= s
    return True


# ------------------------------------------------------------------- unit closure


@dataclass(frozen=True)
class UnitCertificate:
    """``rule`` names how ``word`` was derived; ``premises`` are earlier unit words."""

    word: Word
    rule: str
    premises: tuple = ()
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "word": format_word(self.word),
            "rule": self.rule,
            "premises": [format_word(w) for w in self.premises],
            "detail": self.detail,
        }


@dataclass
class UnitClosure:
    certificates: dict = field(default_factory=dict)  # Word -> UnitCertificate
    status: str = "fixpoint"  # or "budget"
    steps: int = 0
    stephen_rounds: int = 0

    def __contains__(self, w) -> bool:
        return tuple(w) in self.certificates

    @property
    def words(self) -> list[Word]:
        """Certified words, leaving out those only known as formal inverses."""
        ws = [w for w, c in self.certificates.items() if c.rule != "inverse"]
        return sorted(ws, key=lambda w: (len(w), format_word(w)))

    def certificate(self, w) -> UnitCertificate | None:
        return self.certificates.get(tuple(w))


def _literal_closure(units: dict, budget: int, steps: int) -> tuple[str, int]:
    """Close under: inverses; prefix-and-suffix splitting; cancellation of a known unit factor."""
    changed = True
    while changed:
        changed = False
        current = list(units)
        for U in current:
            steps += 1
            if steps > budget:
                return "budget", steps
            Ui = invert(U)
            if Ui not in units:
                units[Ui] = UnitCertificate(Ui, "inverse", (U,))
                changed = True
            for k in range(1, len(U)):
                head, tail = U[:k], U[k:]
                # a known unit at either end frees the other part
                if head in units and tail not in units:
                    units[tail] = UnitCertificate(tail, "cancel-prefix", (U, head))
                    changed = True
                if tail in units and head not in units:
                    units[head] = UnitCertificate(head, "cancel-suffix", (U, tail))
                    changed = True
        suffixes: dict[Word, Word] = {}
        for V in list(units):
            for k in range(1, len(V) + 1):
                suffixes.setdefault(V[len(V) - k:], V)
        for U in list(units):
            for k in range(1, len(U) + 1):
                w = U[:k]
                if w in units or w not in suffixes:
                    continue
                steps += 1
                if steps > budget:
                    return "budget", steps
                units[w] = UnitCertificate(w, "prefix-suffix", (U, suffixes[w]))
                changed = True
    return "fixpoint", steps


def adjan_unit_closure(p: Presentation, budget: int = 10000, stephen_rounds: int = 4,
                       targets: Sequence[Word] | None = None,
                       max_vertices: int = 200000) -> UnitClosure:
    """Literal unit closure seeded by the relators.

    If some ``targets`` (by default the factors of the presentation's
    factorisation) remain uncertified, subwords of relators are tested
    against growing approximants of the empty word: ``w`` is a unit once
    both ``w`` and ``w^-1`` are readable from the root.
    """
    units: dict[Word, UnitCertificate] = {}
    for r in p.relators:
        r = tuple(r)
        if r and r not in units:
            units[r] = UnitCertificate(r, "relator")
    status, steps = _literal_closure(units, budget, 0)
    result = UnitClosure(units, status, steps)
    if targets is None and p.factorisation is not None:
        targets = p.factorisation.factors
    targets = [tuple(t) for t in (targets or ()) if t]
    if status != "fixpoint" or all(t in units for t in targets) or stephen_rounds <= 0:
        return result
    candidates = sorted({tuple(r[i:j]) for r in p.relators for i in range(len(r))
                         for j in range(i + 1, len(r) + 1)}, key=lambda w: (len(w), format_word(w)))
    g = stephen.DetGraph()
    root = g.new_vertex()
    relators = [tuple(r) for r in p.relators]
    for rnd in range(1, stephen_rounds + 1):
        stephen.sew_round(g, relators, max_vertices)
        result.stephen_rounds = rnd
        fresh = False
        for w in candidates:
            if w in units:
                continue
            if g.read(root, w) is not None and g.read(root, invert(w)) is not None:
                units[w] = UnitCertificate(w, "stephen", (), f"readable both ways after {rnd} rounds")
                fresh = True
        if fresh:
            status, steps = _literal_closure(units, budget, steps)
            result.status, result.steps = status, steps
        if all(t in units for t in targets) or len(g.parent) > max_vertices:
            break
    return result


def replay_certificate(p: Presentation, cert: UnitCertificate, known: dict) -> bool:
    """Re-check one derivation step against previously accepted unit words."""
    w = cert.word
    if cert.rule == "relator":
        return w in {tuple(r) for r in p.relators}
    if cert.rule == "inverse":
        return cert.premises[0] in known and invert(cert.premises[0]) == w
    if cert.rule == "cancel-prefix":
        U, head = cert.premises
        return U in known and head in known and U == head + w
    if cert.rule == "cancel-suffix":
        U, tail = cert.premises
        return U in known and tail in known and U == w + tail
    if cert.rule == "prefix-suffix":
        U, V = cert.premises
        return U in known and V in known and U[: len(w)] == w and V[len(V) - len(w):] == w
    if cert.rule == "stephen":
        rounds = int(cert.detail.split("after ")[1].split()[0])
        a = stephen.approximant(p, (), rounds)
        return stephen.unit_certified(a, w)
    return False


def replay_closure(p: Presentation, closure: UnitClosure) -> bool:
    known: dict = {}
    # certificates were inserted in derivation order
    for w, cert in closure.certificates.items():
        if cert.rule != "stephen" and not replay_certificate(p, cert, known):
            return False
        known[w] = cert
    stephen_certs = [c for c in closure.certificates.values() if c.rule == "stephen"]
    if stephen_certs:
        rounds = max(int(c.detail.split("after ")[1].split()[0]) for c in stephen_certs)
        a = stephen.approximant(p, (), rounds)
        if not all(stephen.unit_certified(a, c.word) for c in stephen_certs):
            return False
    return True


# ----------------------------------------------------------------- conservativity


def factor_prefix_generators(f: Factorisation) -> list[Word]:
    out: list[Word] = []
    seen = set()
    for u in f.factors:
        for w in prefixes(u)[1:] + prefixes(invert(u))[1:]:
            if w not in seen:
                seen.add(w)
                out.append(w)
    return out


def relator_prefix_generators(p: Presentation) -> list[Word]:
    out: list[Word] = []
    seen = set()
    for r in p.relators:
        for w in prefixes(r)[1:]:
            if w not in seen:
                seen.add(w)
                out.append(w)
    return out


def check_conservative(p: Presentation, f: Factorisation,
                       member_of_relator_monoid: Callable[[Word], object],
                       member_of_factor_monoid: Callable[[Word], object] | None = None):
    """Mutual generation of the relator-prefix and factor-prefix submonoids.

    Relator prefixes always lie in the factor-prefix monoid (each relator
    prefix is a product of whole factors and one factor prefix), which is
    checked literally unless a membership callable is supplied.  Returns
    ``True``, ``False`` or ``None`` when an oracle was inconclusive.
    """
    factor_gens = factor_prefix_generators(f)
    undecided = False
    for w in factor_gens:
        ans = member_of_relator_monoid(w)
        if ans is None:
            undecided = True
        elif not ans:
            return False
    for w in relator_prefix_generators(p):
        if member_of_factor_monoid is not None:
            ans = member_of_factor_monoid(w)
        else:
            ans = _literal_factor_product(f, w)
        if ans is None:
            undecided = True
        elif not ans:
            return False
    return None if undecided else True


def _literal_factor_product(f: Factorisation, w: Word) -> bool:
    """Is ``w`` literally a concatenation of factors^{±1} followed by a factor-prefix?"""
    pieces = [u for u in f.factors] + [invert(u) for u in f.factors]
    reach = {0}
    frontier = [0]
    while frontier:
        i = frontier.pop()
        for u in pieces:
            for k in range(1, len(u) + 1):
                if w[i:i + k] != u[:k]:
                    break
                if i + k == len(w):
                    return True
                if k == len(u) and i + k not in reach:
                    reach.add(i + k)
                    frontier.append(i + k)
    return len(w) == 0
