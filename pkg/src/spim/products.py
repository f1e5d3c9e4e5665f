"""Group word-problem oracles and their compositions.

Answers are three-valued: ``True``, ``False`` or ``None`` (inconclusive).
A composite oracle returns ``None`` as soon as a sub-oracle it needed was
inconclusive, so failures degrade instead of raising.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Mapping, Sequence

from .core import Letter, Presentation, Word, format_word, invert, power, reduce
from .freegroup import stallings_graph, subgroup_contains

INCONCLUSIVE = None


class GroupOracle:
    """Base class.  Subclasses implement ``_is_identity`` on reduced words."""

    alphabet: frozenset = frozenset()
    name = "oracle"

    def is_identity(self, w: Sequence[Letter]):
        return self._is_identity(reduce(w))

    def _is_identity(self, w: Word):
        raise NotImplementedError

    def equal(self, u: Sequence[Letter], v: Sequence[Letter]):
        return self.is_identity(tuple(u) + invert(v))

    def canonical(self, w: Sequence[Letter]):
        """A hashable key equal for two words iff they are equal in the group."""
        raise NoCanonicalForm(self.name)

    @property
    def has_canonical(self) -> bool:
        try:
            self.canonical(())
        except NoCanonicalForm:
            return False
        return True

    def describe(self) -> str:
        return self.name


class NoCanonicalForm(Exception):
    """The oracle cannot produce canonical keys."""


def _check_alphabet(oracle: GroupOracle, w: Word) -> None:
    for x in w:
        if x.symbol not in oracle.alphabet:
            raise ValueError(f"{oracle.name}: symbol {x.symbol!r} outside alphabet")


class FreeOracle(GroupOracle):
    name = "free"

    def __init__(self, alphabet: Iterable[str]):
        self.alphabet = frozenset(alphabet)

    def _is_identity(self, w: Word):
        _check_alphabet(self, w)
        return len(w) == 0

    def canonical(self, w):
        return reduce(w)


class CyclicOracle(GroupOracle):
    """``<a | a^m>``."""

    name = "cyclic"

    def __init__(self, letter: str, m: int):
        if m < 1:
            raise ValueError("cyclic order must be positive")
        self.letter = letter
        self.m = m
        self.alphabet = frozenset([letter])

    def _is_identity(self, w: Word):
        if any(x.symbol != self.letter for x in w):
            raise ValueError(f"cyclic oracle on {self.letter!r} got {format_word(w)!r}")
        return sum(x.sign for x in w) % self.m == 0

    def canonical(self, w):
        return sum(x.sign for x in w) % self.m

    def describe(self) -> str:
        return f"cyclic {self.m}"


# ------------------------------------------------------------------ abelian image


class AbelianImage:
    """A homomorphism to Z^r whose kernel is the torsion of the abelianisation.

    Built from a rational basis of the null space of the relation matrix.
    """

    def __init__(self, generators: Sequence[str], relators: Sequence[Sequence[Letter]]):
        import sympy

        self.generators = tuple(generators)
        idx = {g: i for i, g in enumerate(self.generators)}
        n = len(self.generators)
        rows = []
        for r in relators:
            row = [0] * n
            for x in r:
                row[idx[x.symbol]] += x.sign
            rows.append(row)
        if rows:
            basis = sympy.Matrix(rows).nullspace()
        else:
            basis = [sympy.eye(n)[:, i] for i in range(n)]
        vecs = []
        for b in basis:
            den = math.lcm(*[int(sympy.fraction(c)[1]) for c in b]) if len(b) else 1
            vecs.append(tuple(int(c * den) for c in b))
        self.basis = tuple(vecs)
        self._gen_image = {g: tuple(v[i] for v in self.basis) for g, i in idx.items()}
        self._cached = lru_cache(maxsize=200000)(self._image)

    @property
    def rank(self) -> int:
        return len(self.basis)

    def image(self, w: Sequence[Letter]) -> tuple:
        return self._cached(tuple(w))

    def _image(self, w: Sequence[Letter]) -> tuple:
        exps: dict[str, int] = {}
        for s, e in w:
            exps[s] = exps.get(s, 0) + e
        acc = [0] * len(self.basis)
        for s, e in exps.items():
            if e:
                for k, c in enumerate(self._gen_image[s]):
                    acc[k] += e * c
        return tuple(acc)

    def generator_image(self, symbol: str) -> tuple:
        return self._gen_image[symbol]


# ------------------------------------------------------------------- Knuth-Bendix


class RewritingSystem:
    """Shortlex Knuth–Bendix completion on strings.

    Letters are encoded as private-use characters, ``x_i`` and ``x_i^-1``
    taking consecutive codes in generator declaration order, so that the
    shortlex order is ``(len, str)``.
    """

    def __init__(self, generators: Sequence[str], relators: Sequence[Sequence[Letter]],
                 max_rules: int = 1000, max_steps: int = 20000):
        self.generators = tuple(generators)
        self.code: dict[Letter, str] = {}
        for i, g in enumerate(self.generators):
            self.code[Letter(g, 1)] = chr(0xE000 + 2 * i)
            self.code[Letter(g, -1)] = chr(0xE000 + 2 * i + 1)
        self.decode = {c: x for x, c in self.code.items()}
        self.rules: dict[str, str] = {}
        self._pattern = None
        self.complete = self._complete(relators, max_rules, max_steps)

    def encode(self, w: Sequence[Letter]) -> str:
        return "".join(self.code[x] for x in w)

    @staticmethod
    def _key(s: str):
        return (len(s), s)

    def _compile(self) -> None:
        if self.rules:
            alts = sorted(self.rules, key=len, reverse=True)
            self._pattern = re.compile("|".join(map(re.escape, alts)))
        else:
            self._pattern = None

    def rewrite(self, s: str) -> str:
        p = self._pattern
        if p is None:
            return s
        rules = self.rules
        while True:
            m = p.search(s)
            if not m:
                return s
            s = s[: m.start()] + rules[m.group()] + s[m.end():]

    def _complete(self, relators, max_rules: int, max_steps: int) -> bool:
        pending: list[tuple[str, str]] = []
        for x, c in self.code.items():
            pending.append((c + self.code[Letter(x.symbol, -x.sign)], ""))
        for r in relators:
            pending.append((self.encode(r), ""))
            pending.append((self.encode(invert(r)), ""))
        steps = 0
        while pending:
            steps += 1
            if steps > max_steps or len(self.rules) > max_rules:
                return False
            pending.sort(key=lambda p: -max(len(p[0]), len(p[1])))
            a, b = pending.pop()
            a, b = self.rewrite(a), self.rewrite(b)
            if a == b:
                continue
            if self._key(a) < self._key(b):
                a, b = b, a
            for lhs in list(self.rules):
                if a in lhs:
                    pending.append((lhs, self.rules.pop(lhs)))
            self.rules[a] = b
            self._compile()
            for lhs in list(self.rules):
                self.rules[lhs] = self.rewrite(self.rules[lhs])
            for lhs, rhs in list(self.rules.items()):
                for l1, r1, l2, r2 in ((a, b, lhs, rhs), (lhs, rhs, a, b)):
                    for k in range(1, min(len(l1), len(l2))):
                        if l1[-k:] == l2[:k]:
                            pending.append((r1 + l2[k:], l1[:-k] + r2))
        return True

    def normal_form(self, w: Sequence[Letter]) -> Word:
        return tuple(self.decode[c] for c in self.rewrite(self.encode(w)))


class KBOracle(GroupOracle):
    name = "kb"

    def __init__(self, p: Presentation, budget: int = 1000):
        self.alphabet = frozenset(p.generators)
        self.presentation = p
        self.system = RewritingSystem(p.generators, p.relators, max_rules=budget, max_steps=20 * budget)
        self.abelian = AbelianImage(p.generators, p.relators)

    @property
    def complete(self) -> bool:
        return self.system.complete

    def normal_form(self, w: Sequence[Letter]) -> Word:
        return self.system.normal_form(w)

    def _is_identity(self, w: Word):
        _check_alphabet(self, w)
        if not self.system.rewrite(self.system.encode(w)):
            return True
        if self.system.complete:
            return False
        if any(self.abelian.image(w)):
            return False
        return INCONCLUSIVE

    def canonical(self, w):
        if not self.system.complete:
            raise NoCanonicalForm("incomplete rewriting system")
        return self.system.rewrite(self.system.encode(w))

    def describe(self) -> str:
        state = "complete" if self.complete else "incomplete"
        return f"kb ({state}, {len(self.system.rules)} rules)"


# ----------------------------------------------------------- representation leaves


class FreeImageOracle(GroupOracle):
    """Plug-in: an injective homomorphism into a free group, supplied as images."""

    name = "free-image"

    def __init__(self, p: Presentation, images: Mapping[str, Word]):
        self.alphabet = frozenset(p.generators)
        missing = set(p.generators) - set(images)
        if missing:
            raise ValueError(f"free-image: no image for {sorted(missing)}")
        self.images = {g: reduce(images[g]) for g in p.generators}
        for r in p.relators:
            if self._image(r):
                raise ValueError(f"free-image: relator {format_word(r)} does not map to 1")

    def _image(self, w: Sequence[Letter]) -> Word:
        out: list[Letter] = []
        for x in w:
            img = self.images[x.symbol]
            out.extend(img if x.sign > 0 else invert(img))
        return reduce(out)

    def _is_identity(self, w: Word):
        _check_alphabet(self, w)
        return not self._image(w)

    def canonical(self, w):
        return self._image(w)


class AffineOracle(GroupOracle):
    """Plug-in: an injective homomorphism into Aff(Q), ``x -> a x + b``.

    Words act as matrix products ``[[a, b], [0, 1]]`` taken left to right.
    """

    name = "affine"

    def __init__(self, p: Presentation, maps: Mapping[str, tuple[Fraction, Fraction]]):
        self.alphabet = frozenset(p.generators)
        missing = set(p.generators) - set(maps)
        if missing:
            raise ValueError(f"affine: no map for {sorted(missing)}")
        self.maps = {}
        for g in p.generators:
            a, b = (Fraction(t) for t in maps[g])
            if a == 0:
                raise ValueError(f"affine: map for {g} is not invertible")
            self.maps[Letter(g, 1)] = (a, b)
            self.maps[Letter(g, -1)] = (1 / a, -b / a)
        for r in p.relators:
            if self.evaluate(r) != (1, 0):
                raise ValueError(f"affine: relator {format_word(r)} does not act trivially")

    def evaluate(self, w: Sequence[Letter]) -> tuple[Fraction, Fraction]:
        a, b = Fraction(1), Fraction(0)
        for x in w:
            c, d = self.maps[x]
            # (a x + b) composed after (c x + d): a (c x + d) + b
            a, b = a * c, a * d + b
        return a, b

    def _is_identity(self, w: Word):
        _check_alphabet(self, w)
        return self.evaluate(w) == (1, 0)

    def canonical(self, w):
        return self.evaluate(w)


class CallableOracle(GroupOracle):
    """Plug-in wrapper around a Python callable ``Word -> bool | None``."""

    name = "plugin"

    def __init__(self, alphabet: Iterable[str], fn: Callable[[Word], object], name: str = "plugin"):
        self.alphabet = frozenset(alphabet)
        self.fn = fn
        self.name = name

    def _is_identity(self, w: Word):
        return self.fn(w)


class TranslatedOracle(GroupOracle):
    """Word problem through an isomorphism given as a word translation."""

    def __init__(self, alphabet: Iterable[str], translate: Callable[[Word], Word], inner: GroupOracle,
                 name: str = "translated"):
        self.alphabet = frozenset(alphabet)
        self.translate = translate
        self.inner = inner
        self.name = name

    def _is_identity(self, w: Word):
        _check_alphabet(self, w)
        return self.inner.is_identity(self.translate(w))

    def canonical(self, w):
        return self.inner.canonical(self.translate(tuple(w)))

    def describe(self) -> str:
        return f"{self.name} -> {self.inner.describe()}"


class CachedOracle(GroupOracle):
    """Memoises answers on reduced words."""

    def __init__(self, inner: GroupOracle, size: int = 200000):
        self.inner = inner
        self.alphabet = inner.alphabet
        self.name = inner.name
        self._cached = lru_cache(maxsize=size)(inner._is_identity)
        self._canon = lru_cache(maxsize=size)(inner.canonical)

    def _is_identity(self, w: Word):
        return self._cached(w)

    def canonical(self, w):
        return self._canon(reduce(w))

    def describe(self) -> str:
        return self.inner.describe()

    def __getattr__(self, item):
        return getattr(self.inner, item)


# ------------------------------------------------------------------ syllable forms


@dataclass(frozen=True)
class SyllableForm:
    syllables: tuple  # of (side, Word); side is "L" or "R"

    @property
    def is_identity_form(self) -> bool:
        return not self.syllables

    def __len__(self) -> int:
        return len(self.syllables)

    def __str__(self) -> str:
        if not self.syllables:
            return "[]"
        return " | ".join(f"{s}:{format_word(w)}" for s, w in self.syllables)


class Inconclusive(Exception):
    """Raised internally when a sub-oracle could not decide."""


def _decide(ans):
    if ans is None:
        raise Inconclusive()
    return ans


def split_syllables(w: Sequence[Letter], left_alphabet: frozenset) -> list[list]:
    out: list[list] = []
    for x in w:
        side = "L" if x.symbol in left_alphabet else "R"
        if out and out[-1][0] == side:
            out[-1][1].append(x)
        else:
            out.append([side, [x]])
    return out


def _merge_at(syl: list[list], i: int) -> None:
    """Merge syllable i with equal-side neighbours."""
    if i + 1 < len(syl) and syl[i + 1][0] == syl[i][0]:
        syl[i][1] = syl[i][1] + syl[i + 1][1]
        del syl[i + 1]
    if i > 0 and syl[i - 1][0] == syl[i][0]:
        syl[i - 1][1] = syl[i - 1][1] + syl[i][1]
        del syl[i]


class FreeProductOracle(GroupOracle):
    name = "free-product"

    def __init__(self, left: GroupOracle, right: GroupOracle):
        if left.alphabet & right.alphabet:
            raise ValueError("free product factors must have disjoint alphabets")
        self.left, self.right = left, right
        self.alphabet = left.alphabet | right.alphabet

    def normal_form(self, w: Sequence[Letter]) -> SyllableForm:
        syl = split_syllables(reduce(w), self.left.alphabet)
        changed = True
        while changed:
            changed = False
            for i, (side, word) in enumerate(syl):
                oracle = self.left if side == "L" else self.right
                if _decide(oracle.is_identity(word)):
                    del syl[i]
                    if 0 < i < len(syl) and syl[i - 1][0] == syl[i][0]:
                        syl[i - 1][1] = syl[i - 1][1] + syl[i][1]
                        del syl[i]
                    changed = True
                    break
        return SyllableForm(tuple((s, reduce(w)) for s, w in syl))

    def _is_identity(self, w: Word):
        _check_alphabet(self, w)
        try:
            return self.normal_form(w).is_identity_form
        except Inconclusive:
            return INCONCLUSIVE

    def canonical(self, w):
        nf = self.normal_form(w)
        return tuple((side, (self.left if side == "L" else self.right).canonical(x)) for side, x in nf.syllables)

    def describe(self) -> str:
        return f"({self.left.describe()}) * ({self.right.describe()})"


# ------------------------------------------------------- constructive subgroups


class ConstructiveSubgroupOracle:
    """Membership in a subgroup ``<gens>`` of an ambient group, with witnesses.

    ``contains`` returns ``(answer, expression)`` where expression is a tuple
    of ``(generator index, sign)``.
    """

    def __init__(self, ambient: GroupOracle, generators: Sequence[Word]):
        self.ambient = ambient
        self.generators = tuple(tuple(g) for g in generators)

    def contains(self, w: Sequence[Letter]):
        raise NotImplementedError

    def evaluate(self, expression) -> Word:
        out: list[Letter] = []
        for i, s in expression:
            out.extend(self.generators[i] if s > 0 else invert(self.generators[i]))
        return tuple(out)


class FreeSubgroupOracle(ConstructiveSubgroupOracle):
    """Stallings-graph membership when the ambient group is free."""

    def __init__(self, ambient: GroupOracle, generators: Sequence[Word]):
        super().__init__(ambient, generators)
        self.graph = stallings_graph(self.generators)

    def contains(self, w):
        ok, wit = subgroup_contains(self.graph, w)
        return ok, (wit.expression if ok else None)


class CyclicSubgroupOracle(ConstructiveSubgroupOracle):
    """Membership in ``<u>``.

    With a known finite order ``m`` the exponents ``0..m-1`` are scanned.
    Otherwise an abelian image with nonzero image of ``u`` pins the only
    possible exponent, which is then checked by one ambient query.  Without
    either, exponents up to ``|w| + scan`` are scanned and a miss is
    reported as inconclusive.
    """

    def __init__(self, ambient: GroupOracle, u: Word, order: int = 0,
                 abelian: AbelianImage | None = None, scan: int = 4):
        super().__init__(ambient, [u])
        self.u = tuple(u)
        self.order = order
        self.abelian = abelian
        self.scan = scan
        self.u_image = abelian.image(u) if abelian is not None else None

    @property
    def infinite_order_certified(self) -> bool:
        return self.u_image is not None and any(self.u_image)

    def _check(self, w, k):
        return self.ambient.is_identity(tuple(w) + power(self.u, -k))

    def contains(self, w):
        w = reduce(w)
        if self.order:
            undecided = False
            for k in range(self.order):
                ans = self._check(w, k)
                if ans:
                    return True, ((0, 1),) * k
                if ans is None:
                    undecided = True
            return (None if undecided else False), None
        if self.infinite_order_certified:
            img = self.abelian.image(w)
            k = None
            for a, b in zip(img, self.u_image):
                if b == 0:
                    if a != 0:
                        return False, None
                    continue
                if a % b:
                    return False, None
                q = a // b
                if k is None:
                    k = q
                elif k != q:
                    return False, None
            ans = self._check(w, k)
            if ans:
                return True, _expr(k)
            return ans, None
        bound = len(w) + self.scan
        for k in sorted(range(-bound, bound + 1), key=abs):
            ans = self._check(w, k)
            if ans:
                return True, _expr(k)
        return INCONCLUSIVE, None


def _expr(k: int):
    return ((0, 1),) * k if k >= 0 else ((0, -1),) * (-k)


class AmalgamOracle(GroupOracle):
    """``left *_{u_i = v_i} right`` via syllable rewriting across the amalgamated subgroup."""

    name = "amalgam"

    def __init__(self, left: GroupOracle, right: GroupOracle, pairs: Sequence[tuple[Word, Word]],
                 left_sub: ConstructiveSubgroupOracle, right_sub: ConstructiveSubgroupOracle,
                 homs: tuple | None = None, order: int = 0):
        if left.alphabet & right.alphabet:
            raise ValueError("amalgam factors must have disjoint alphabets")
        self.left, self.right = left, right
        self.pairs = tuple((tuple(u), tuple(v)) for u, v in pairs)
        self.left_sub, self.right_sub = left_sub, right_sub
        self.alphabet = left.alphabet | right.alphabet
        self.rewrites = 0
        # abelian images of the two sides; used to pick coset representatives
        self.homs = homs
        self.order = order

    def _side(self, side):
        if side == "L":
            return self.left, self.left_sub, self.right_sub
        return self.right, self.right_sub, self.left_sub

    def normal_form(self, w: Sequence[Letter]) -> SyllableForm:
        syl = split_syllables(reduce(w), self.left.alphabet)
        changed = True
        while changed:
            changed = False
            for i, (side, word) in enumerate(syl):
                oracle, here, there = self._side(side)
                if _decide(oracle.is_identity(word)):
                    del syl[i]
                    if 0 < i < len(syl) and syl[i - 1][0] == syl[i][0]:
                        syl[i - 1][1] = syl[i - 1][1] + syl[i][1]
                        del syl[i]
                    changed = True
                    break
                if len(syl) == 1:
                    continue
                ans, expr = here.contains(word)
                _decide(ans)
                if ans:
                    self.rewrites += 1
                    syl[i] = ["R" if side == "L" else "L", list(there.evaluate(expr))]
                    _merge_at(syl, i)
                    changed = True
                    break
        return SyllableForm(tuple((s, reduce(x)) for s, x in syl))

    def _is_identity(self, w: Word):
        _check_alphabet(self, w)
        try:
            return self.normal_form(w).is_identity_form
        except Inconclusive:
            return INCONCLUSIVE

    def _coset_split(self, side: str, x: Word):
        """Write ``x = g^k c`` with ``c`` a fixed representative of the right coset ``A x``."""
        oracle = self.left if side == "L" else self.right
        g = self.pairs[0][0] if side == "L" else self.pairs[0][1]
        if self.order:
            best = None
            for k in range(self.order):
                c = reduce(power(g, -k) + x)
                key = oracle.canonical(c)
                if best is None or repr(key) < repr(best[2]):
                    best = (k, c, key)
            return best
        if self.homs is None:
            raise NoCanonicalForm("amalgam without abelian images")
        hom = self.homs[0 if side == "L" else 1]
        gi = hom.image(g)
        j = next((i for i, m in enumerate(gi) if m), None)
        if j is None:
            raise NoCanonicalForm("amalgamated generator has zero abelian image")
        m = gi[j]
        k = (hom.image(x)[j] // abs(m)) * (1 if m > 0 else -1)
        c = reduce(power(g, -k) + x)
        return k, c, oracle.canonical(c)

    def canonical(self, w):
        if len(self.pairs) != 1:
            raise NoCanonicalForm("canonical forms need a single amalgamating pair")
        syl = list(self.normal_form(w).syllables)
        if not syl:
            return (0, ())
        gen = {"L": self.pairs[0][0], "R": self.pairs[0][1]}
        keys = []
        carry = 0
        for n in range(len(syl) - 1, -1, -1):
            side, x = syl[n]
            x = reduce(tuple(x) + power(gen[side], carry))
            k, c, key = self._coset_split(side, x)
            carry = k
            side_oracle = self.left if side == "L" else self.right
            if n or key != side_oracle.canonical(()):
                keys.append((side, key))
            else:
                keys = []  # single syllable inside the amalgamated subgroup
        if self.order:
            carry %= self.order
        return (carry, tuple(reversed(keys)))

    def describe(self) -> str:
        pairs = ", ".join(f"{format_word(u)}={format_word(v)}" for u, v in self.pairs)
        return f"({self.left.describe()}) *[{pairs}] ({self.right.describe()})"


# ------------------------------------------------------------------ constructors


def free_oracle(alphabet: Iterable[str]) -> FreeOracle:
    return FreeOracle(alphabet)


def cyclic_oracle(letter: str, m: int) -> CyclicOracle:
    return CyclicOracle(letter, m)


def kb_oracle(p: Presentation, budget: int = 1000) -> KBOracle:
    return KBOracle(p, budget)


def free_product_oracle(left: GroupOracle, right: GroupOracle) -> FreeProductOracle:
    return FreeProductOracle(left, right)


def amalgam_oracle(left: GroupOracle, right: GroupOracle, pairs, left_sub, right_sub) -> AmalgamOracle:
    return AmalgamOracle(left, right, pairs, left_sub, right_sub)


def normal_form(oracle: GroupOracle, w: Sequence[Letter]):
    """Syllable form in a free or amalgamated product oracle; None if inconclusive."""
    inner = oracle.inner if isinstance(oracle, CachedOracle) else oracle
    try:
        return inner.normal_form(w)
    except Inconclusive:
        return INCONCLUSIVE


def subgroup_oracle(ambient: GroupOracle, generators: Sequence[Word], *, free: bool = False,
                    order: int = 0, abelian: AbelianImage | None = None) -> ConstructiveSubgroupOracle:
    """Pick a membership engine: Stallings in a free group, else the cyclic routes."""
    if free:
        return FreeSubgroupOracle(ambient, generators)
    if len(generators) != 1:
        raise ValueError("non-free ambient groups support cyclic subgroups only")
    return CyclicSubgroupOracle(ambient, generators[0], order=order, abelian=abelian)
