"""Sign-correct algebra of odd (anticommuting) words.

An odd word is a strictly increasing tuple of integer jet codes; its order
is the canonical order of the odd generators. Words carry no sign: the sign
produced by sorting a product is returned separately and absorbed into the
coefficient of the owning term. Coefficients are exact ``Fraction`` values.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence, Tuple

from ._kernels import odd_merge

Rational = Fraction
OddWord = Tuple[int, ...]


def as_rational(value) -> Fraction:
    """Coerce ints, fraction strings and Fractions to a canonical Fraction.

    Floats are rejected: symbolic coefficients must stay exact.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coefficients")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"inexact coefficient {value!r}")


def odd_concat(w1: OddWord, w2: OddWord) -> Optional[Tuple[int, OddWord]]:
    """Canonical product of two odd words.

    Returns ``(sign, word)`` with ``sign`` in ``{+1, -1}`` the parity of the
    sorting permutation, or ``None`` when a factor repeats (the product
    vanishes).
    """
    sign, word = odd_merge(tuple(w1), tuple(w2))
    if sign == 0:
        return None
    return sign, word


def sort_sign(factors: Sequence[int]) -> Optional[Tuple[int, OddWord]]:
    """Sort an arbitrary sequence of odd factors into canonical order.

    ``None`` if any factor occurs twice.
    """
    items = list(factors)
    if len(set(items)) != len(items):
        return None
    # insertion sort counting transpositions; words are short
    sign = 1
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j - 1] > items[j]:
            items[j - 1], items[j] = items[j], items[j - 1]
            sign = -sign
            j -= 1
    return sign, tuple(items)


def is_canonical(word: Sequence[int]) -> bool:
    return all(a < b for a, b in zip(word, word[1:]))
