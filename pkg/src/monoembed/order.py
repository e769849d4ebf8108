"""Signed componentwise partial orders on R^k and on paired states.

A monotonicity pattern is a vector of signs, one per coordinate.  It induces
a partial order in which coordinates with sign +1 compare the usual way and
coordinates with sign -1 compare reversed.  Pairs of states are compared in
the product order built from a pattern and its sign-flipped dual: first
components forward, second components reversed.  That product order is the
one preserved by the coupled extension map in :mod:`monoembed.embedding`.
"""

from __future__ import annotations

import enum
from typing import Iterable, Sequence

Pattern = tuple[int, ...]


class OrderRelation(enum.Enum):
    EQUAL = "equal"
    LESS_EQ = "less_eq"
    GREATER_EQ = "greater_eq"
    INCOMPARABLE = "incomparable"


def make_pattern(signs: Iterable[int]) -> Pattern:
    """Validate and normalize a sign sequence into a pattern tuple."""
    pat = tuple(int(s) for s in signs)
    if not pat:
        raise ValueError("pattern must have at least one coordinate")
    for s in pat:
        if s not in (-1, 1):
            raise ValueError(f"pattern entries must be +1 or -1, got {s}")
    return pat


def pattern_from_text(text: str) -> Pattern:
    """Parse patterns like '+,+,-' or '++-' (also accepts 'up'/'down' words)."""
    text = text.strip()
    if "," in text:
        parts = [p.strip() for p in text.split(",")]
    else:
        parts = list(text)
    signs = []
    for p in parts:
        if p in ("+", "+1", "1", "up", "inc"):
            signs.append(1)
        elif p in ("-", "-1", "down", "dec"):
            signs.append(-1)
        else:
            raise ValueError(f"cannot parse pattern entry {p!r}")
    return make_pattern(signs)


def pattern_to_text(pattern: Sequence[int]) -> str:
    return ",".join("+" if s == 1 else "-" for s in pattern)


def dual_pattern(pattern: Sequence[int]) -> Pattern:
    """The sign-flipped pattern; reverses the induced order."""
    return tuple(-int(s) for s in pattern)


def leq(x: Sequence[float], y: Sequence[float], pattern: Sequence[int]) -> bool:
    """True when x precedes-or-equals y in the pattern order."""
    if not (len(x) == len(y) == len(pattern)):
        raise ValueError("points and pattern must share one length")
    return all(s * (b - a) >= 0.0 for a, b, s in zip(x, y, pattern))


def compare(x: Sequence[float], y: Sequence[float],
            pattern: Sequence[int]) -> OrderRelation:
    """Classify the relation between x and y under the pattern order.

    EQUAL only on exact componentwise equality; LESS_EQ / GREATER_EQ report a
    one-sided (not necessarily strict in every coordinate) relation.
    """
    if not (len(x) == len(y) == len(pattern)):
        raise ValueError("points and pattern must share one length")
    le = ge = True
    eq = True
    for a, b, s in zip(x, y, pattern):
        d = s * (b - a)
        if d != 0.0:
            eq = False
            if d < 0.0:
                le = False
            else:
                ge = False
        if not (le or ge):
            return OrderRelation.INCOMPARABLE
    if eq:
        return OrderRelation.EQUAL
    return OrderRelation.LESS_EQ if le else OrderRelation.GREATER_EQ


def pair_pattern(pattern: Sequence[int]) -> Pattern:
    """Pattern of the product order on paired states (pattern x its dual)."""
    pat = make_pattern(pattern)
    return pat + dual_pattern(pat)


def compare_pairs(xi: Sequence[float], eta: Sequence[float],
                  pattern: Sequence[int]) -> OrderRelation:
    """Compare two 2k-states in the product order of ``pattern`` and its dual.

    Inputs are concatenations (first half, second half).
    """
    lam = pair_pattern(pattern)
    if len(xi) != len(lam) or len(eta) != len(lam):
        raise ValueError("paired states must have twice the pattern length")
    return compare(xi, eta, lam)


def leq_pairs(xi: Sequence[float], eta: Sequence[float],
              pattern: Sequence[int]) -> bool:
    lam = pair_pattern(pattern)
    if len(xi) != len(lam) or len(eta) != len(lam):
        raise ValueError("paired states must have twice the pattern length")
    return leq(xi, eta, lam)
