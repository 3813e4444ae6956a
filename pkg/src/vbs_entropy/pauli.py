"""Dense matrices of products of Pauli dot products on ``m`` auxiliary spins.

Basis convention: site 0 is the most significant bit, bit value 0 is spin up,
i.e. the ordering of ``np.kron(site0, site1, ...)``.

Every Kronecker product of single-site matrices from {1, X, iY, Z} is a signed
permutation matrix, so a product of dot products ``(s_i.s_j)(s_k.s_l)...``
expands into ``3**pairs`` signed permutations and is assembled exactly
without any matrix multiplication.  ``Y x Y = -(iY) x (iY)`` keeps all
arithmetic real.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Mapping, Sequence, Tuple

import numpy as np

Pair = Tuple[int, int]

# per-site component: (flips bit, picks up (-1)**bit)
_COMPONENTS = {"x": (True, False), "y": (True, True), "z": (False, True)}


def _bit(site: int, m: int) -> int:
    return 1 << (m - 1 - site)


def accumulate_matching(
    out: np.ndarray, matching: Sequence[Pair], coeff, m: int
) -> None:
    """Add ``coeff * prod_{(i,j)} s_i.s_j`` into the ``2**m`` square ``out``."""
    dim = 1 << m
    rows = np.arange(dim)
    for comps in itertools.product("xyz", repeat=len(matching)):
        flip = 0
        zmask = 0
        sign = 1
        for (i, j), a in zip(matching, comps):
            flips, phase = _COMPONENTS[a]
            for site in (i, j):
                if flips:
                    flip ^= _bit(site, m)
                if phase:
                    zmask ^= _bit(site, m)
            if a == "y":
                sign = -sign
        cols = rows ^ flip
        parity = np.zeros(dim, dtype=np.int64)
        bits = rows & zmask
        while np.any(bits):
            parity ^= bits & 1
            bits >>= 1
        signs = np.where(parity == 1, -sign, sign)
        if out.dtype == object:
            for r in range(dim):
                out[r, cols[r]] += coeff * int(signs[r])
        else:
            out[rows, cols] += float(coeff) * signs


def matching_operator(
    terms: Mapping[Tuple[Pair, ...], object] | Iterable[Tuple[Tuple[Pair, ...], object]],
    m: int,
    exact: bool = False,
) -> np.ndarray:
    """Materialize ``sum_mu c_mu prod_{(i,j) in mu} s_i.s_j`` as a dense matrix.

    With ``exact=True`` the result is an object array of ``Fraction``.
    """
    dim = 1 << m
    if exact:
        out = np.empty((dim, dim), dtype=object)
        out.fill(Fraction(0))
    else:
        out = np.zeros((dim, dim))
    items = terms.items() if hasattr(terms, "items") else terms
    for matching, c in items:
        if c:
            accumulate_matching(out, tuple(matching), c, m)
    return out


def dot_operator(i: int, j: int, m: int) -> np.ndarray:
    """``s_i . s_j`` on ``m`` sites as a float matrix."""
    return matching_operator({((i, j),): 1}, m)


def global_flip(m: int) -> np.ndarray:
    """Permutation matrix of ``X x X x ... x X``."""
    dim = 1 << m
    out = np.zeros((dim, dim))
    rows = np.arange(dim)
    out[rows, rows ^ (dim - 1)] = 1.0
    return out


def magnetization_sectors(m: int) -> dict:
    """Map ``number of down spins -> basis indices`` (ascending)."""
    idx = np.arange(1 << m)
    downs = np.array([bin(int(k)).count("1") for k in idx])
    return {k: idx[downs == k] for k in range(m + 1)}
