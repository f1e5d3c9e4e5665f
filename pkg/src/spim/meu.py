"""Word problem of the maximal E-unitary image from the group word problem and prefix membership.

An element ``w`` is modelled by the pair ``(union of s(p) P over prefixes p of w, s(w))``
where ``s`` is the map to the maximal group image and ``P`` its prefix
monoid.  Since ``P P = P`` the first components of ``u`` and ``v`` agree iff
every prefix of either word is dominated by a prefix of the other:
``q^-1 p`` in ``P``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

from .core import Presentation, Word, format_word, invert, prefixes, reduce
from .products import GroupOracle


class ConsistencyFault(RuntimeError):
    """Two independent routes to the same answer disagreed."""


@dataclass
class MeuVerdict:
    answer: bool | None
    group_equal: bool | None
    pairing: list = field(default_factory=list)  # (prefix, dominating prefix) audit trail

    def __bool__(self) -> bool:
        return bool(self.answer)

    def to_json(self) -> dict:
        ans = "inconclusive" if self.answer is None else self.answer
        return {"answer": ans, "group_equal": self.group_equal,
                "pairing": [[format_word(p), format_word(q) if q is not None else None]
                            for p, q in self.pairing]}


class MeuContext:
    def __init__(self, p: Presentation, G: GroupOracle, P: Callable[[Word], object]):
        self.p = p
        self.G = G
        self._P = P
        self._member = lru_cache(maxsize=100000)(self._member_raw)

    def _member_raw(self, w: Word):
        return self._P(w)

    def in_P(self, w) -> bool | None:
        return self._member(reduce(w))

    def _dominate(self, u: Word, v: Word, pairing: list):
        """Is every prefix of ``u`` dominated by some prefix of ``v``?"""
        undecided = False
        pv = prefixes(v)
        for p in prefixes(u):
            found = None
            unsure = False
            for q in pv:
                ans = self.in_P(invert(q) + p)
                if ans:
                    found = q
                    break
                if ans is None:
                    unsure = True
            pairing.append((p, found))
            if found is None:
                if not unsure:
                    return False
                undecided = True
        return None if undecided else True

    def equal(self, u, v) -> MeuVerdict:
        u, v = tuple(u), tuple(v)
        if u == v:
            return MeuVerdict(True, True, [(p, p) for p in prefixes(u)])
        g = self.G.is_identity(u + invert(v))
        if g is False:
            return MeuVerdict(False, False)
        pairing: list = []
        a = self._dominate(u, v, pairing)
        if a is False:
            return MeuVerdict(False, g, pairing)
        b = self._dominate(v, u, pairing)
        if b is False:
            return MeuVerdict(False, g, pairing)
        if g is None or a is None or b is None:
            return MeuVerdict(None, g, pairing)
        return MeuVerdict(True, True, pairing)


def meu_equal(ctx: MeuContext, u, v) -> bool | None:
    return ctx.equal(u, v).answer


def is_idempotent(ctx: MeuContext, w) -> bool | None:
    return ctx.G.is_identity(tuple(w))


def is_right_unit(ctx: MeuContext, w) -> bool | None:
    """Checked twice: ``w w^-1 = 1`` in the pair model, and every prefix of ``w`` mapping into ``P``."""
    w = tuple(w)
    first = meu_equal(ctx, w + invert(w), ())
    undecided = False
    second: bool | None = True
    for p in prefixes(w):
        ans = ctx.in_P(p)
        if ans is False:
            second = False
            break
        if ans is None:
            undecided = True
    if second and undecided:
        second = None
    if first is not None and second is not None and first != second:
        raise ConsistencyFault(f"right-unit routes disagree on {format_word(w)}")
    return first if first is not None else second


def in_right_units_times_idempotents(ctx: MeuContext, w) -> bool | None:
    """Is the image of ``w`` in ``R_M E_M``?  Read off as ``s(w)`` in ``P``, valid when ``M`` is E-unitary."""
    return ctx.in_P(tuple(w))


def is_unit(ctx: MeuContext, w) -> bool | None:
    w = tuple(w)
    a = meu_equal(ctx, w + invert(w), ())
    if a is False:
        return False
    b = meu_equal(ctx, invert(w) + w, ())
    if b is False:
        return False
    return None if a is None or b is None else True


def nat_leq(ctx: MeuContext, x, y) -> bool | None:
    x, y = tuple(x), tuple(y)
    return meu_equal(ctx, x, x + invert(x) + y)


def compatible(ctx: MeuContext, x, y) -> bool | None:
    x, y = tuple(x), tuple(y)
    a = is_idempotent(ctx, x + invert(y))
    if a is False:
        return False
    b = is_idempotent(ctx, invert(x) + y)
    if b is False:
        return False
    return None if a is None or b is None else True


def meet(ctx: MeuContext, x, y):
    """``x x^-1 y`` when ``x`` and ``y`` are compatible, ``None`` when not; raises if undecided."""
    c = compatible(ctx, x, y)
    if c is None:
        raise ValueError("compatibility is inconclusive")
    if not c:
        return None
    x, y = tuple(x), tuple(y)
    return x + invert(x) + y


def context_for(p: Presentation, G: GroupOracle | None = None, stephen_rounds: int = 4) -> MeuContext:
    """Assemble the group oracle and the prefix-membership pipeline for ``p``."""
    from .assemble import build_oracle
    from .pmp import PrefixMembership

    if G is None:
        G = build_oracle(p)
    pm = PrefixMembership.for_presentation(p, G, stephen_rounds=stephen_rounds)
    ctx = MeuContext(p, G, pm)
    ctx.pipeline = pm
    return ctx
