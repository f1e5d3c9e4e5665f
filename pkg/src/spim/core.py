"""Signed words, free reduction and the presentation file format.

A word is a plain tuple of :class:`Letter` values.  Keeping words as tuples
makes them hashable and cheap to slice, which the automata code relies on.

>>> w = parse_word("a a' b")
>>> format_word(reduce(w))
'b'
>>> format_word(invert(parse_word("a b")))
"b' a'"
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence


class Letter(NamedTuple):
    symbol: str
    sign: int = 1

    def inverse(self) -> "Letter":
        return Letter(self.symbol, -self.sign)

    def __str__(self) -> str:
        return self.symbol if self.sign > 0 else self.symbol + "'"


Word = tuple  # tuple[Letter, ...]; the empty tuple is the word 1

EMPTY: Word = ()

FRESH_PREFIX = "_z"

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_TOKEN = re.compile(rf"({_IDENT})('?)(?:\^(-?\d+))?")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


def letter(symbol: str, sign: int = 1) -> Letter:
    if sign not in (1, -1):
        raise ValueError(f"bad sign {sign!r}")
    return Letter(symbol, sign)


def word_of(*symbols: str) -> Word:
    """Build a word from symbol strings; a trailing quote inverts."""
    out = []
    for s in symbols:
        out.append(Letter(s[:-1], -1) if s.endswith("'") else Letter(s, 1))
    return tuple(out)


def parse_word(text: str, alphabet: Iterable[str] | None = None) -> Word:
    """Parse ``"a b' c^2 d^-1"``.  ``1`` or an empty string is the empty word.

    When an alphabet is given, a token that is not a symbol but splits into
    single-character symbols is split, so ``"aab'"`` works for ``{a, b}``.
    """
    text = text.strip()
    if text in ("", "1"):
        return EMPTY
    alpha = set(alphabet) if alphabet is not None else None
    out: list[Letter] = []
    for chunk in text.split():
        pos = 0
        while pos < len(chunk):
            m = _TOKEN.match(chunk, pos)
            if not m:
                raise ParseError(f"cannot parse word near {chunk[pos:]!r}")
            ident, quote, exp = m.groups()
            sign = -1 if quote else 1
            n = int(exp) if exp is not None else 1
            if n < 0:
                sign, n = -sign, -n
            if alpha is not None and ident not in alpha:
                if all(c in alpha for c in ident):
                    # only the last character carries the quote and exponent
                    for c in ident[:-1]:
                        out.append(Letter(c, 1))
                    ident = ident[-1]
                else:
                    raise ParseError(f"unknown symbol {ident!r}")
            out.extend([Letter(ident, sign)] * n)
            pos = m.end()
    return tuple(out)


def format_word(w: Sequence[Letter], empty: str = "1") -> str:
    if not w:
        return empty
    return " ".join(str(x) for x in w)


def format_compact(w: Sequence[Letter], empty: str = "1", sep: str = " ") -> str:
    """Exponent notation for runs: ``x x y'`` becomes ``x^2 y^-1``."""
    if not w:
        return empty
    parts = []
    i = 0
    while i < len(w):
        j = i
        while j < len(w) and w[j] == w[i]:
            j += 1
        n = (j - i) * w[i].sign
        parts.append(w[i].symbol if n == 1 else f"{w[i].symbol}^{n}")
        i = j
    return sep.join(parts)


def reduce(w: Sequence[Letter]) -> Word:
    stack: list[Letter] = []
    push, pop = stack.append, stack.pop
    for x in w:
        # index access: noticeably cheaper than attribute access in this hot loop
        if stack and stack[-1][0] == x[0] and stack[-1][1] == -x[1]:
            pop()
        else:
            push(x)
    return tuple(stack)


def is_reduced(w: Sequence[Letter]) -> bool:
    return all(not (a.symbol == b.symbol and a.sign == -b.sign) for a, b in zip(w, w[1:]))


def invert(w: Sequence[Letter]) -> Word:
    return tuple(Letter(x.symbol, -x.sign) for x in reversed(w))


def cyclically_reduce(w: Sequence[Letter]) -> tuple[Word, Word]:
    """Return ``(c, core)`` with ``reduce(w) == reduce(c core c^-1)`` and core cyclically reduced."""
    r = reduce(w)
    i, j = 0, len(r)
    while j - i >= 2 and r[i].symbol == r[j - 1].symbol and r[i].sign == -r[j - 1].sign:
        i += 1
        j -= 1
    return r[:i], r[i:j]


def is_cyclically_reduced(w: Sequence[Letter]) -> bool:
    if not is_reduced(w):
        return False
    return len(w) < 2 or not (w[0].symbol == w[-1].symbol and w[0].sign == -w[-1].sign)


def prefixes(w: Sequence[Letter]) -> list[Word]:
    w = tuple(w)
    return [w[:i] for i in range(len(w) + 1)]


def substitute(pattern: Sequence[Letter], assignment: Mapping[str, Sequence[Letter]]) -> Word:
    """Homomorphic replacement of symbols; no free reduction is applied."""
    out: list[Letter] = []
    for x in pattern:
        try:
            image = assignment[x.symbol]
        except KeyError:
            raise KeyError(f"unassigned placeholder {x.symbol!r}") from None
        out.extend(image if x.sign > 0 else invert(image))
    return tuple(out)


def support(w: Iterable[Letter]) -> set[str]:
    return {x.symbol for x in w}


def power(w: Sequence[Letter], n: int) -> Word:
    w = tuple(w)
    return w * n if n >= 0 else invert(w) * (-n)


# ---------------------------------------------------------------- presentations


@dataclass(frozen=True)
class Factorisation:
    """Factor words plus, per relator, the signed factor occurrences that spell it."""

    factors: tuple
    occurrences: tuple  # per relator: tuple of (factor index, sign)

    def spell(self, i: int) -> Word:
        out: list[Letter] = []
        for j, s in self.occurrences[i]:
            out.extend(self.factors[j] if s > 0 else invert(self.factors[j]))
        return tuple(out)

    def pattern(self, i: int, symbols: Sequence[str]) -> Word:
        """Relator ``i`` written over one symbol per factor."""
        return tuple(Letter(symbols[j], s) for j, s in self.occurrences[i])


@dataclass(frozen=True)
class Presentation:
    kind: str
    generators: tuple
    relators: tuple
    factorisation: Factorisation | None = None
    directives: tuple = ()  # (key, value) pairs for oracle and data lines
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("group", "inverse_monoid"):
            raise ValueError(f"unknown presentation kind {self.kind!r}")
        gens = set(self.generators)
        for r in self.relators:
            bad = support(r) - gens
            if bad:
                raise ValueError(f"relator uses undeclared symbols {sorted(bad)}")

    @property
    def is_group(self) -> bool:
        return self.kind == "group"

    def directive(self, key: str) -> str | None:
        for k, v in self.directives:
            if k == key:
                return v
        return None

    def directive_all(self, key: str) -> list[str]:
        return [v for k, v in self.directives if k == key]

    def with_kind(self, kind: str) -> "Presentation":
        return Presentation(kind, self.generators, self.relators, self.factorisation,
                            self.directives, self.source)

    def resolve(self, ref: str) -> Path:
        base = Path(self.source).parent if self.source else Path.cwd()
        return (base / ref).resolve()


def _parse_atoms(text: str, lineno: int, col0: int):
    """Tokenise a relator body into a nested list of atoms.

    Returns a list of items: ``Letter`` or ``("group", items, sign, col)``.
    """
    tokens = re.finditer(rf"\(|\)'?|{_IDENT}'?|\S", text)
    stack: list[list] = [[]]
    opens: list[int] = []
    for m in tokens:
        tok = m.group()
        col = col0 + m.start() + 1
        if tok == "(":
            stack.append([])
            opens.append(col)
        elif tok.startswith(")"):
            if len(stack) == 1:
                raise ParseError("unbalanced ')'", lineno, col)
            items = stack.pop()
            c = opens.pop()
            if not items:
                raise ParseError("empty factor '()'", lineno, c)
            stack[-1].append(("group", items, -1 if tok.endswith("'") else 1, c))
        elif re.fullmatch(rf"{_IDENT}'?", tok):
            stack[-1].append(Letter(tok.rstrip("'"), -1 if tok.endswith("'") else 1))
        else:
            raise ParseError(f"unexpected character {tok!r}", lineno, col)
    if len(stack) != 1:
        raise ParseError("unbalanced '('", lineno, opens[-1])
    return stack[0]


def _flatten(items) -> Word:
    out: list[Letter] = []
    for it in items:
        if isinstance(it, Letter):
            out.append(it)
        else:
            inner = _flatten(it[1])
            out.extend(inner if it[2] > 0 else invert(inner))
    return tuple(out)


def parse_presentation(text: str, source: str | None = None) -> Presentation:
    kind = None
    generators: list[str] | None = None
    bodies: list[tuple[list, int]] = []
    directives: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped in ("group", "inverse_monoid"):
            if kind is not None:
                raise ParseError("duplicate header", lineno, 1)
            kind = stripped
            continue
        if ":" not in stripped:
            raise ParseError(f"expected 'key: value', got {stripped!r}", lineno, 1)
        key, value = stripped.split(":", 1)
        key = key.strip()
        col0 = line.index(":") + 1
        if key == "generators":
            if generators is not None:
                raise ParseError("duplicate generators line", lineno, 1)
            generators = value.split()
            for g in generators:
                if not re.fullmatch(_IDENT, g):
                    raise ParseError(f"bad generator name {g!r}", lineno, line.index(g) + 1)
            if len(set(generators)) != len(generators):
                raise ParseError("repeated generator", lineno, col0)
        elif key == "relator":
            bodies.append((_parse_atoms(value, lineno, col0), lineno))
        else:
            directives.append((key, value.strip()))
    if kind is None:
        raise ParseError("missing header line 'group' or 'inverse_monoid'")
    if generators is None:
        raise ParseError("missing 'generators:' line")
    gens = set(generators)
    relators: list[Word] = []
    for items, lineno in bodies:
        w = _flatten(items)
        for x in w:
            if x.symbol not in gens:
                raise ParseError(f"undeclared symbol {x.symbol!r}", lineno)
        relators.append(w)
    fact = _factorisation_from_atoms([b for b, _ in bodies])
    return Presentation(kind, tuple(generators), tuple(relators), fact, tuple(directives), source)


def _factorisation_from_atoms(bodies) -> Factorisation | None:
    if all(isinstance(it, Letter) for items in bodies for it in items):
        return None
    factors: list[Word] = []
    index: dict[Word, int] = {}

    def idx(w: Word) -> int:
        if w not in index:
            index[w] = len(factors)
            factors.append(w)
        return index[w]

    occurrences = []
    for items in bodies:
        occ = []
        run: list[Letter] = []
        for it in items:
            if isinstance(it, Letter):
                run.append(it)
                continue
            if run:
                occ.append((idx(tuple(run)), 1))
                run = []
            occ.append((idx(_flatten(it[1])), it[2]))
        if run:
            occ.append((idx(tuple(run)), 1))
        occurrences.append(tuple(occ))
    return Factorisation(tuple(factors), tuple(occurrences))


def format_relator(p: Presentation, i: int) -> str:
    f = p.factorisation
    if f is None:
        return format_word(p.relators[i], empty="")
    parts = []
    for j, s in f.occurrences[i]:
        body = " ".join(str(x) for x in f.factors[j])
        parts.append(f"({body})" + ("'" if s < 0 else ""))
    return " ".join(parts)


def print_presentation(p: Presentation) -> str:
    lines = [p.kind, "generators: " + " ".join(p.generators)]
    for i in range(len(p.relators)):
        lines.append(("relator: " + format_relator(p, i)).rstrip())
    for k, v in p.directives:
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def load_presentation(path: str | Path) -> Presentation:
    path = Path(path)
    return parse_presentation(path.read_text(), source=str(path.resolve()))


def make_presentation(kind: str, generators: Iterable[str], relators: Iterable[Word],
                      factorisation: Factorisation | None = None, directives=()) -> Presentation:
    return Presentation(kind, tuple(generators), tuple(tuple(r) for r in relators),
                        factorisation, tuple(directives))


def paper_style(p: Presentation, i: int) -> str:
    """Exponent-compressed display form of relator ``i``, e.g. ``(z_1)(x_1^2 y_1)^2(z_1)=1``."""
    f = p.factorisation
    if f is None:
        return format_compact(p.relators[i]) + "=1"
    occ = list(f.occurrences[i])
    out = []
    k = 0
    while k < len(occ):
        n = 1
        while k + n < len(occ) and occ[k + n] == occ[k]:
            n += 1
        j, s = occ[k]
        e = n * s
        body = "(" + format_compact(f.factors[j]) + ")"
        if e != 1:
            body += f"^{e}" if 0 < e < 10 else "^{%d}" % e
        out.append(body)
        k += n
    return "".join(out) + "=1"
