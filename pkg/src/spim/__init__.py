"""Decision procedures for special inverse monoids and their group images."""

from .core import (
    Letter,
    Word,
    Presentation,
    Factorisation,
    parse_word,
    format_word,
    reduce,
    cyclically_reduce,
    invert,
    prefixes,
    substitute,
    parse_presentation,
    print_presentation,
    load_presentation,
)

__all__ = [
    "Letter",
    "Word",
    "Presentation",
    "Factorisation",
    "parse_word",
    "format_word",
    "reduce",
    "cyclically_reduce",
    "invert",
    "prefixes",
    "substitute",
    "parse_presentation",
    "print_presentation",
    "load_presentation",
]

__version__ = "0.1.0"
