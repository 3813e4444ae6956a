"""Exact Z matrices of horizontal and vertical ladders.

Horizontal ladders are propagated column by column.  The Z function of an
``n``-column block is a rotation-invariant, multilinear polynomial in the
boundary Pauli vectors, hence a combination of products of dot products over
partial matchings of the legs.  One column step is a linear map on those
coefficients; it is derived here by symbolic integration of the new column
(see :mod:`vbs_entropy.invariants`) and kept in exact rationals.

Coefficients are stored as magnitudes.  The physical sign of a matching is
``(-1)**(sum of leg distances)`` on the square ladder (the ``a - b s1.s2``
convention) and ``+1`` on the hexagonal ladder, whose legs sit two chain
sites apart.

Vertical ladders (one column of height ``N_y``, every site or every other
site on the cut) use the Kronecker recursion that splits ``Z`` by the Pauli
component acting on the last leg.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import invariants as inv
from .pauli import matching_operator
from .spectrum import EntropySpectrum, eig_symmetric, entropy_from_spectrum

Q = Fraction(1, 3)
MAX_LEGS = 6
MAX_VERTICAL = {"square": 12, "hex": 12}

Matching = Tuple[Tuple[int, int], ...]


class Family(str, enum.Enum):
    SQUARE = "square"
    HEX = "hex"


def _family(family) -> Family:
    return family if isinstance(family, Family) else Family(str(family))


def partial_matchings(m: int) -> List[Matching]:
    """All partial matchings of legs ``0..m-1``, ordered by size then lexicographically."""
    out: List[Matching] = []

    def rec(free: Tuple[int, ...], acc: Tuple[Tuple[int, int], ...]):
        if not free:
            out.append(tuple(sorted(acc)))
            return
        first, rest = free[0], free[1:]
        rec(rest, acc)
        for k, other in enumerate(rest):
            rec(rest[:k] + rest[k + 1 :], acc + ((first, other),))

    rec(tuple(range(m)), ())
    return sorted(set(out), key=lambda mu: (len(mu), mu))


def matching_sign(family, mu: Matching) -> int:
    if _family(family) is Family.HEX:
        return 1
    return -1 if sum(j - i for i, j in mu) % 2 else 1


def format_matching(mu: Matching) -> str:
    """JSON key of a matching, 1-based legs: ``"()"``, ``"(1,2)"``, ``"(1,2)(3,4)"``."""
    if not mu:
        return "()"
    return "".join(f"({i + 1},{j + 1})" for i, j in mu)


def parse_matching(key: str) -> Matching:
    key = key.strip()
    if key == "()":
        return ()
    pairs = []
    for chunk in key.strip("()").split(")("):
        i, j = (int(t) for t in chunk.split(","))
        pairs.append((min(i, j) - 1, max(i, j) - 1))
    return tuple(sorted(pairs))


# ---------------------------------------------------------------------------
# column geometry and symbolic step


def column_geometry(family, m: int, n: int) -> Tuple[int, List[int], List[int]]:
    """``(sites, boundary_sites, link_sites)`` of the cut-side column of block ``n``.

    Sites of a column are ``0..sites-1`` joined as a chain.  ``boundary_sites``
    carry the cut bonds (leg ``j`` is the ``j``-th entry); ``link_sites`` are
    bonded to the previous block's legs.  Hexagonal blocks alternate the
    parity of their cut sites with ``n``; block 1 has its cut bonds on the even
    (0-based) sites.
    """
    family = _family(family)
    if family is Family.SQUARE:
        sites = list(range(m))
        return m, sites, sites
    even = list(range(0, 2 * m, 2))
    odd = list(range(1, 2 * m, 2))
    if n % 2 == 1:
        return 2 * m, even, odd
    return 2 * m, odd, even


def integrate_column(
    poly: inv.Poly, family, m: int, n: int
) -> inv.Poly:
    """Attach column ``n`` to a block polynomial in its legs and integrate it out.

    ``poly`` uses symbols ``0..m-1`` for the previous block's legs; the result
    uses the same symbols for the new legs.
    """
    sites, boundary, links = column_geometry(family, m, n)
    omega = lambda y: m + y  # noqa: E731
    current = inv.substitute(poly, {j: omega(links[j]) for j in range(m)})
    leg_of = {y: j for j, y in enumerate(boundary)}
    for y in range(sites):
        if y in leg_of:
            current = inv.multiply(current, inv.linear_factor(omega(y), leg_of[y]))
        if y + 1 < sites:
            current = inv.multiply(current, inv.linear_factor(omega(y), omega(y + 1), -1))
        current = inv.integrate(current, omega(y), n_sigma=m)
    return current


def _poly_to_coeffs(poly: inv.Poly, m: int) -> Dict[Matching, Fraction]:
    out: Dict[Matching, Fraction] = {}
    for mono, c in poly.items():
        if any(a >= m or b >= m for a, b in mono):
            raise RuntimeError("column integration left an unintegrated vector")
        out[mono] = out.get(mono, Fraction(0)) + c
    return {k: v for k, v in out.items() if v}


@dataclass(frozen=True)
class RecursionMatrix:
    """Linear map on coefficient magnitudes for one column step."""

    family: Family
    m: int
    parity: int
    basis: Tuple[Matching, ...]
    entries: Tuple[Tuple[Fraction, ...], ...]

    def as_float(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.entries])

    def apply(self, vec: Sequence[Fraction]) -> List[Fraction]:
        return [sum((r * v for r, v in zip(row, vec)), Fraction(0)) for row in self.entries]


@functools.lru_cache(maxsize=None)
def _step_images(family: Family, m: int, parity: int) -> Dict[Matching, Dict[Matching, Fraction]]:
    images = {}
    for mu in partial_matchings(m):
        poly = {mu: Fraction(1)}
        images[mu] = _poly_to_coeffs(integrate_column(poly, family, m, parity), m)
    return images


@functools.lru_cache(maxsize=None)
def reachable_basis(family: Family, m: int) -> Tuple[Matching, ...]:
    """Matchings reachable from the empty block under the column steps."""
    seen = {()}
    frontier = [()]
    parities = (1,) if family is Family.SQUARE else (0, 1)
    while frontier:
        nxt = []
        for mu in frontier:
            for p in parities:
                for nu in _step_images(family, m, p)[mu]:
                    if nu not in seen:
                        seen.add(nu)
                        nxt.append(nu)
        frontier = nxt
    return tuple(sorted(seen, key=lambda mu: (len(mu), mu)))


def clear_caches() -> None:
    """Forget memoized column steps (needed after changing the sphere moments)."""
    _step_images.cache_clear()
    reachable_basis.cache_clear()


def recursion_matrix(family, m: int, parity: int = 1) -> RecursionMatrix:
    """Column-step matrix producing block of parity ``parity`` (``n % 2``)."""
    family = _family(family)
    _check_legs(m)
    if family is Family.SQUARE:
        parity = 1
    basis = reachable_basis(family, m)
    images = _step_images(family, m, parity % 2)
    rows = []
    for nu in basis:
        row = []
        for mu in basis:
            c = images[mu].get(nu, Fraction(0))
            row.append(c * matching_sign(family, nu) * matching_sign(family, mu))
        rows.append(tuple(row))
    return RecursionMatrix(family, m, parity % 2, basis, tuple(rows))


def _check_legs(m: int) -> None:
    if not 1 <= m <= MAX_LEGS:
        raise ValueError(f"ladder leg count must be in 1..{MAX_LEGS}, got {m}")


# ---------------------------------------------------------------------------
# ladder coefficients


@dataclass(frozen=True)
class LadderCoefficients:
    family: Family
    m: int
    n: int
    coeff: Dict[Matching, Fraction] = field(hash=False)

    @classmethod
    def initial(cls, family, m: int) -> "LadderCoefficients":
        _check_legs(m)
        return cls(_family(family), m, 0, {(): Fraction(1)})

    def signed(self) -> Dict[Matching, Fraction]:
        return {mu: c * matching_sign(self.family, mu) for mu, c in self.coeff.items()}

    def get(self, *pairs: Tuple[int, int]) -> Fraction:
        """Coefficient magnitude for 1-based leg pairs, e.g. ``get((1, 2))``."""
        mu = tuple(sorted((min(i, j) - 1, max(i, j) - 1) for i, j in pairs))
        return self.coeff.get(mu, Fraction(0))

    def to_json(self) -> dict:
        return {
            "family": self.family.value,
            "m": self.m,
            "n": self.n,
            "coeff": {format_matching(mu): str(c) for mu, c in sorted(self.coeff.items(), key=lambda kv: (len(kv[0]), kv[0]))},
        }

    @classmethod
    def from_json(cls, data: dict) -> "LadderCoefficients":
        coeff = {parse_matching(k): Fraction(v) for k, v in data["coeff"].items()}
        return cls(Family(data["family"]), int(data["m"]), int(data["n"]), coeff)


def ladder_step(family, m: int, state: LadderCoefficients) -> LadderCoefficients:
    """Add one column on the cut side of the block."""
    family = _family(family)
    _check_legs(m)
    if state.family is not family or state.m != m:
        raise ValueError("state does not belong to this ladder family")
    parity = (state.n + 1) % 2
    images = _step_images(family, m, parity)
    new: Dict[Matching, Fraction] = {}
    for mu, c in state.signed().items():
        for nu, r in images[mu].items():
            new[nu] = new.get(nu, Fraction(0)) + c * r
    mags = {nu: v * matching_sign(family, nu) for nu, v in new.items() if v}
    if any(v < 0 for v in mags.values()):
        raise RuntimeError("negative coefficient magnitude; sign convention violated")
    return LadderCoefficients(family, m, state.n + 1, mags)


def ladder_coefficients(family, m: int, n: int) -> LadderCoefficients:
    state = LadderCoefficients.initial(family, m)
    for _ in range(n):
        state = ladder_step(family, m, state)
    return state


def reflect_legs(coeff: Dict[Matching, Fraction], m: int) -> Dict[Matching, Fraction]:
    """Relabel legs ``j -> m-1-j`` (the ladder seen upside down).

    Hexagonal blocks of even length have their cut legs on the other row
    parity than odd blocks, so they equal the lattice half-graph, whose cut
    always starts on the first row, only after this reflection.
    """
    out = {}
    for mu, c in coeff.items():
        nu = tuple(sorted((m - 1 - j, m - 1 - i) for i, j in mu))
        out[nu] = c
    return out


def ladder_z_matrix(state: LadderCoefficients, exact: bool = False) -> np.ndarray:
    """Dense ``2**m`` matrix ``sum_mu sign(mu) c_mu prod s_i.s_j``."""
    _check_legs(state.m)
    return matching_operator(state.signed(), state.m, exact=exact)


def ladder_entropy(family, m: int, n: int) -> EntropySpectrum:
    if n < 1:
        raise ValueError("ladder length n must be >= 1")
    z = ladder_z_matrix(ladder_coefficients(family, m, n))
    return entropy_from_spectrum(eig_symmetric(z).eigenvalues, m)


# ---------------------------------------------------------------------------
# 2-leg closed forms


def closed_form_2leg(family, n: int) -> Tuple[float, float]:
    """``(a_n, b_n)`` of the 2-leg ladder from the eigen-solution of its recursion."""
    family = _family(family)
    if n < 0:
        raise ValueError("n must be >= 0")
    if family is Family.SQUARE:
        r = math.sqrt(19.0)
        zp, zm = (5 + r) / 9, (5 - r) / 9
        a = (4 * (zp**n - zm**n) + r * (zp**n + zm**n)) / (2 * r)
        b = (zp**n - zm**n) / (2 * r)
    else:
        r = math.sqrt(1627.0)
        zp, zm = (41 + r) / 81, (41 - r) / 81
        a = (40 * (zp**n - zm**n) + r * (zp**n + zm**n)) / (2 * r)
        b = 3 * (zp**n - zm**n) / (2 * r)
    return a, b


# ---------------------------------------------------------------------------
# infinite-length limit


def power_iteration(
    matrix: np.ndarray, tol: float = 1e-14, max_iter: int = 100_000
) -> Tuple[float, np.ndarray, int]:
    """Dominant eigenpair of a nonnegative irreducible matrix.

    Returns ``(eigenvalue, vector normalized to first entry 1, iterations)``.
    Convergence is declared when the Rayleigh-quotient residual
    ``|A v - lambda v| / |v|`` drops below ``tol``.
    """
    a = np.asarray(matrix, dtype=float)
    v = np.ones(a.shape[0])
    v /= np.linalg.norm(v)
    for it in range(1, max_iter + 1):
        w = a @ v
        lam = float(v @ w)
        resid = np.linalg.norm(w - lam * v)
        if resid <= tol * max(1.0, abs(lam)):
            return lam, v / v[0], it
        v = w / np.linalg.norm(w)
    raise RuntimeError(f"power iteration did not converge in {max_iter} iterations (residual {resid:.3e})")


@dataclass(frozen=True)
class InfiniteLimit:
    spectrum: EntropySpectrum
    eigenvalue: float
    vector: Dict[Matching, float]
    iterations: int


def infinite_limit(family, m: int) -> InfiniteLimit:
    """Entropy of the semi-infinite ladder from the Perron-Frobenius vector."""
    family = _family(family)
    if family is Family.SQUARE:
        rec = recursion_matrix(family, m)
        mat = rec.as_float()
    else:
        # two consecutive steps ending on an odd block
        t_odd = recursion_matrix(family, m, parity=1)
        t_even = recursion_matrix(family, m, parity=0)
        rec = t_odd
        mat = t_odd.as_float() @ t_even.as_float()
    lam, vec, its = power_iteration(mat)
    coeff = {mu: float(v) for mu, v in zip(rec.basis, vec)}
    signed = {mu: c * matching_sign(family, mu) for mu, c in coeff.items()}
    z = matching_operator(signed, m)
    spec = entropy_from_spectrum(eig_symmetric(z).eigenvalues, m)
    return InfiniteLimit(spec, lam, coeff, its)


# ---------------------------------------------------------------------------
# vertical ladders

_PX = np.array([[0, 1], [1, 0]])
_PT = np.array([[0, 1], [-1, 0]])  # i * sigma_y
_PZ = np.array([[1, 0], [0, -1]])
# (real single-site matrix, sign of sigma^a x sigma^a in terms of it)
_COMPONENTS = ((_PX, 1), (_PT, -1), (_PZ, 1))


def _vertical_coefficients(family: Family):
    if family is Family.SQUARE:
        return -Q * Q, -Q
    return Q**3, Q * Q


def _cast(mat: np.ndarray, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(mat.shape, dtype=object)
        for idx, v in np.ndenumerate(mat):
            out[idx] = Fraction(int(v))
        return out
    return mat.astype(float)


def _times_last(z: np.ndarray, p: np.ndarray) -> np.ndarray:
    """``z . (id x ... x id x p)``."""
    dim = z.shape[0]
    return (z.reshape(dim, dim // 2, 2) @ p).reshape(dim, dim)


def vertical_ladder_z(family, size: int, exact: bool = False) -> np.ndarray:
    """Z matrix of a one-column ladder with ``size`` cut legs.

    Square: a chain of ``size`` sites, each on the cut.  Hexagonal: a chain
    of ``2 size - 1`` sites with every other site on the cut.  Built with
    the recursion on the split ``Z = Z0 + sum_a Za`` by the Pauli component
    on the last leg.  ``exact=True`` returns an object array of ``Fraction``.
    """
    family = _family(family)
    limit = MAX_VERTICAL[family.value]
    if not 1 <= size <= limit:
        raise ValueError(f"vertical {family.value} ladder size must be in 1..{limit}, got {size}")
    c_pair, c_carry = _vertical_coefficients(family)
    if exact:
        c_pair, c_carry = Fraction(c_pair), Fraction(c_carry)
    else:
        c_pair, c_carry = float(c_pair), float(c_carry)
    comps = [(_cast(p, exact), s) for p, s in _COMPONENTS]
    eye2 = _cast(np.eye(2, dtype=int), exact)
    z_prev = _cast(np.ones((1, 1), dtype=int), exact)  # Z(0)
    z_cur = eye2.copy()  # Z(1)
    parts = [None, None, None]  # Z^a(1) = 0
    for n in range(1, size):
        last = n + 1 == size
        z_next = np.kron(z_cur, eye2)
        new_parts = []
        for k, (p, s) in enumerate(comps):
            term = np.kron(np.kron(z_prev, p), p) * (s * c_pair)
            if parts[k] is not None:
                term = term + np.kron(_times_last(parts[k], p), p) * (s * c_carry)
            z_next = z_next + term
            new_parts.append(None if last else term)
        z_prev, z_cur, parts = z_cur, z_next, new_parts
    return z_cur


def symmetry_sectors(m: int) -> List[Tuple[np.ndarray, np.ndarray, int]]:
    """Invariant blocks of an SU(2)-invariant ``2**m`` matrix.

    Returns ``(rows, partner_rows, multiplicity)`` triples.  Magnetization
    sectors with fewer than ``m/2`` down spins stand in for their spin-flipped
    mirrors (multiplicity 2).  The zero-magnetization sector of even ``m`` is
    split into flip-even and flip-odd halves, encoded with ``partner_rows``
    and a sign carried by the multiplicity slot (``+1`` / ``-1``).
    """
    from .pauli import magnetization_sectors

    sectors = magnetization_sectors(m)
    out = []
    full = (1 << m) - 1
    for k in range(m + 1):
        if 2 * k < m:
            out.append((sectors[k], None, 2))
        elif 2 * k == m:
            idx = sectors[k]
            reps = idx[idx < (idx ^ full)]
            out.append((reps, reps ^ full, +1))
            out.append((reps, reps ^ full, -1))
    return out


def sector_eigenvalues(z: np.ndarray, m: int) -> np.ndarray:
    """All ``2**m`` eigenvalues of a spin-rotation and spin-flip invariant Z."""
    vals = []
    for rows, partners, mult in symmetry_sectors(m):
        if partners is None:
            block = z[np.ix_(rows, rows)]
            ev = eig_symmetric(block).eigenvalues
            vals.extend([ev] * mult)
        else:
            block = z[np.ix_(rows, rows)] + mult * z[np.ix_(rows, partners)]
            vals.append(eig_symmetric(block).eigenvalues)
    out = np.concatenate(vals)
    return out[np.argsort(-out, kind="stable")]


def vertical_entropy(family, size: int) -> EntropySpectrum:
    z = vertical_ladder_z(family, size)
    if size <= 3:
        ev = eig_symmetric(z).eigenvalues
    else:
        ev = sector_eigenvalues(z, size)
    return entropy_from_spectrum(ev, size)
