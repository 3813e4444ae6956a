"""Exact algebra of rotation-invariant polynomials in unit vectors.

A polynomial is a ``dict`` mapping a monomial to a :class:`fractions.Fraction`.
A monomial is a sorted tuple of sorted symbol pairs ``(a, b)``; each pair
stands for the dot product of the vectors labelled ``a`` and ``b``.  Symbols
are plain integers.  Symbols below ``n_sigma`` denote Pauli vectors
(``sigma . sigma = 3``); all others denote unit vectors on the sphere
(``Omega . Omega = 1``) that can be integrated out with the uniform measure.

Integration over a unit vector uses the isotropic moment identity

    <(x1.W)(x2.W)...(x2p.W)> = sum over pairings of prod(xi.xj) / (2p+1)!!

which for ``p = 1`` is ``<(x.W)(W.y)> = x.y / 3``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterator, List, Sequence, Tuple

Monomial = Tuple[Tuple[int, int], ...]
Poly = Dict[Monomial, Fraction]

ONE: Monomial = ()

# <(x.W)(W.y)> = q x.y on the unit sphere; higher moments scale from it
SECOND_MOMENT = Fraction(1, 3)


def _pair(a: int, b: int) -> Tuple[int, int]:
    return (a, b) if a <= b else (b, a)


def constant(c) -> Poly:
    return {ONE: Fraction(c)}


def linear_factor(a: int, b: int, sign: int = 1) -> Poly:
    """``1 + sign * (a . b)``."""
    return {ONE: Fraction(1), (_pair(a, b),): Fraction(sign)}


def add_into(acc: Poly, mono: Monomial, c: Fraction) -> None:
    v = acc.get(mono, 0) + c
    if v:
        acc[mono] = v
    else:
        acc.pop(mono, None)


def multiply(p: Poly, r: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in r.items():
            add_into(out, tuple(sorted(m1 + m2)), c1 * c2)
    return out


def pairings(items: Sequence[int]) -> Iterator[List[Tuple[int, int]]]:
    """All perfect matchings of ``items`` (positions, not values)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k in range(len(rest)):
        remaining = rest[:k] + rest[k + 1 :]
        for tail in pairings(remaining):
            yield [(first, rest[k])] + tail


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


def _moment_norm(degree: int) -> Fraction:
    """Weight of each pairing in the degree-``degree`` isotropic moment."""
    if degree == 0:
        return Fraction(1)
    return Fraction(SECOND_MOMENT) * 3 / _double_factorial(degree + 1)


def integrate(p: Poly, s: int, n_sigma: int) -> Poly:
    """Integrate the unit vector ``s`` out of ``p`` with measure dW/4pi."""
    out: Poly = {}
    for mono, c in p.items():
        partners: List[int] = []
        rest: List[Tuple[int, int]] = []
        for a, b in mono:
            if a == s and b == s:
                continue  # W.W = 1
            if a == s:
                partners.append(b)
            elif b == s:
                partners.append(a)
            else:
                rest.append((a, b))
        if len(partners) % 2:
            continue
        norm = _moment_norm(len(partners))
        for matching in pairings(partners):
            coeff = c * norm
            pairs = list(rest)
            for x, y in matching:
                if x == y:
                    coeff *= 3 if x < n_sigma else 1
                else:
                    pairs.append(_pair(x, y))
            add_into(out, tuple(sorted(pairs)), coeff)
    return out


def substitute(p: Poly, mapping: Dict[int, int]) -> Poly:
    """Relabel symbols; unmapped symbols are kept."""
    out: Poly = {}
    for mono, c in p.items():
        pairs = tuple(sorted(_pair(mapping.get(a, a), mapping.get(b, b)) for a, b in mono))
        add_into(out, pairs, c)
    return out


def symbols(p: Poly) -> set:
    return {x for mono in p for pair in mono for x in pair}
