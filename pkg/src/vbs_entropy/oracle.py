"""Independent exact engines used to cross-check the transfer matrices.

``loop_enumerate_z`` expands the Z integrand over bond subsets and integrates
vertex by vertex.  On graphs where every vertex has at most three factors
(bonds plus its cut leg) only vertices of degree 0 and 2 survive, so each
admissible subset is a disjoint union of closed loops and open strands that
end on boundary legs:

* a loop of ``l`` bonds weighs ``(-1)**l q**(l-1)``;
* a strand of ``l`` bonds from leg ``i`` to leg ``j`` weighs
  ``(-1)**l q**(l+1) s_i.s_j``.

``exact_vbs_rdm`` builds the VBS wavefunction itself from Schwinger bosons
on the doubled graph and traces out one half.  It shares no code with the
overlap-matrix route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .model import SymmetricGraph, validate
from .pauli import matching_operator
from .spectrum import EntropySpectrum, eig_symmetric, entropy_from_spectrum
from .transfer import MAX_VERTICAL, Family, Matching, Q, _family

MAX_LOOP_BONDS = 24
MAX_ED_EDGES = 16
MAX_ED_DIM = 10**6


class OracleScopeError(ValueError):
    """Input outside the domain an oracle can handle exactly."""


# ---------------------------------------------------------------------------
# loops and strands


@dataclass(frozen=True)
class LoopExpansion:
    """Signed Z coefficients over matchings of boundary legs (0-based, boundary order)."""

    m: int
    coeff: Dict[Matching, Fraction]
    configurations: int

    def z_matrix(self, exact: bool = False) -> np.ndarray:
        return matching_operator(self.coeff, self.m, exact=exact)

    def entropy(self) -> EntropySpectrum:
        return entropy_from_spectrum(eig_symmetric(self.z_matrix()).eigenvalues, self.m)


def loop_enumerate_z(graph: SymmetricGraph, max_bonds: int = MAX_LOOP_BONDS) -> LoopExpansion:
    """Exact Z of a graph whose vertices carry at most three factors."""
    n = graph.n_vertices
    bonds = list(graph.bonds)
    if len(bonds) > max_bonds:
        raise OracleScopeError(f"{len(bonds)} bonds exceed the enumeration budget {max_bonds}")
    leg = {v: k for k, v in enumerate(graph.boundary)}
    degree = [0] * n
    last = [-1] * n
    for idx, (i, j) in enumerate(bonds):
        degree[i] += 1
        degree[j] += 1
        last[i] = idx
        last[j] = idx
    for v in range(n):
        if degree[v] + (v in leg) > 3:
            raise OracleScopeError(
                f"vertex {v} carries {degree[v] + (v in leg)} factors; oracle out of scope (needs <= 3)"
            )
    closing: List[List[int]] = [[] for _ in bonds]
    for v in range(n):
        if last[v] >= 0:
            closing[last[v]].append(v)

    deg = [0] * n
    chosen: List[int] = []
    total: Dict[Matching, Fraction] = {}
    count = 0

    def admissible(v: int) -> bool:
        d = deg[v]
        return d == 0 or d == 2 or (d == 1 and v in leg)

    def weigh() -> None:
        nonlocal count
        count += 1
        adj: Dict[int, List[int]] = {}
        for idx in chosen:
            i, j = bonds[idx]
            adj.setdefault(i, []).append(j)
            adj.setdefault(j, []).append(i)
        seen = set()
        weight = Fraction(1)
        pairs = []
        # open strands start at degree-1 vertices
        for start in sorted(adj):
            if start in seen or len(adj[start]) != 1:
                continue
            prev, cur, length = None, start, 0
            seen.add(cur)
            while True:
                nxt = [w for w in adj[cur] if w != prev]
                if not nxt:
                    break
                prev, cur = cur, nxt[0]
                seen.add(cur)
                length += 1
            weight *= (-1) ** length * Q ** (length + 1)
            a, b = leg[start], leg[cur]
            pairs.append((min(a, b), max(a, b)))
        for start in sorted(adj):
            if start in seen:
                continue
            prev, cur, length = None, start, 0
            seen.add(cur)
            while True:
                nxt = [w for w in adj[cur] if w != prev]
                if prev is None:
                    nxt = nxt[:1]
                prev, cur = cur, nxt[0]
                length += 1
                if cur == start:
                    break
                seen.add(cur)
            weight *= (-1) ** length * Q ** (length - 1)
        key = tuple(sorted(pairs))
        total[key] = total.get(key, Fraction(0)) + weight

    def rec(idx: int) -> None:
        if idx == len(bonds):
            weigh()
            return
        i, j = bonds[idx]
        # leave bond out
        if all(admissible(v) for v in closing[idx]):
            rec(idx + 1)
        # take bond
        if deg[i] < 2 and deg[j] < 2:
            deg[i] += 1
            deg[j] += 1
            chosen.append(idx)
            if all(admissible(v) for v in closing[idx]):
                rec(idx + 1)
            chosen.pop()
            deg[i] -= 1
            deg[j] -= 1

    if bonds:
        rec(0)
    else:
        weigh()
    return LoopExpansion(graph.boundary_size, {k: v for k, v in total.items() if v}, count)


def vertical_strand_expansion(size: int, family="square") -> Dict[Matching, Fraction]:
    """Z of a vertical ladder summed over ordered, non-nested leg pairs.

    Square legs are adjacent chain sites, so a pair ``(i, j)`` is a strand of
    ``j - i`` bonds with weight ``q (-q)**(j-i)``; hexagonal legs sit two
    sites apart, giving ``q (q**2)**(j-i)``.
    """
    family = _family(family)
    limit = MAX_VERTICAL[family.value]
    if not 1 <= size <= limit:
        raise ValueError(f"vertical {family.value} ladder size must be in 1..{limit}, got {size}")
    step = -Q if family is Family.SQUARE else Q * Q
    out: Dict[Matching, Fraction] = {}

    def rec(start: int, acc: Tuple[Tuple[int, int], ...], w: Fraction) -> None:
        out[acc] = w
        for i in range(start, size):
            for j in range(i + 1, size):
                rec(j + 1, acc + ((i, j),), w * Q * step ** (j - i))

    rec(0, (), Fraction(1))
    return out


# ---------------------------------------------------------------------------
# Schwinger-boson wavefunction


@dataclass(frozen=True)
class FullGraph:
    """Doubled graph: vertices ``0..n-1`` form A, ``n..2n-1`` their mirrors."""

    n_half: int
    edges: Tuple[Tuple[int, int], ...]
    spin2: Tuple[int, ...]

    @property
    def n_vertices(self) -> int:
        return 2 * self.n_half


def doubled_graph(half: SymmetricGraph) -> FullGraph:
    problems = validate(half)
    if problems:
        raise ValueError("invalid graph: " + "; ".join(p.detail for p in problems))
    n = half.n_vertices
    edges = list(half.bonds) + [(i + n, j + n) for i, j in half.bonds] + [(k, k + n) for k in half.boundary]
    spin2 = tuple(half.spin2[k] for k in range(n)) * 2
    return FullGraph(n, tuple(edges), spin2)


@dataclass(frozen=True)
class Wavefunction:
    """VBS amplitudes on ``A x B`` configurations.

    The amplitude of ``(a, b)`` is ``counts[a, b] * sqrt(norm_a[a] * norm_b[b])``
    where ``counts`` are exact signed integers and ``norm_*`` are products of
    ``n_up! n_down!`` over sites.
    """

    counts: np.ndarray  # object array of int
    norm_a: Tuple[int, ...]
    norm_b: Tuple[int, ...]
    configs_a: Tuple[Tuple[int, ...], ...]  # spin-up occupations per A site
    configs_b: Tuple[Tuple[int, ...], ...]


def vbs_wavefunction(full: FullGraph) -> Wavefunction:
    """Expand ``prod_edges (a_i^dag b_j^dag - b_i^dag a_j^dag)|0>`` over orientations."""
    n_e = len(full.edges)
    if n_e > MAX_ED_EDGES:
        raise OracleScopeError(f"{n_e} edges exceed the orientation budget {MAX_ED_EDGES}")
    local = math.prod(s + 1 for s in full.spin2)
    if local > MAX_ED_DIM**2:
        raise OracleScopeError(f"Hilbert space dimension {local} exceeds the budget")
    n_v = full.n_vertices
    choice = (np.arange(1 << n_e)[:, None] >> np.arange(n_e)[None, :]) & 1
    up = np.zeros((1 << n_e, n_v), dtype=np.int64)
    for e, (i, j) in enumerate(full.edges):
        # orientation 0: a_i b_j (+); orientation 1: b_i a_j (-)
        up[:, i] += 1 - choice[:, e]
        up[:, j] += choice[:, e]
    sign = 1 - 2 * (choice.sum(axis=1) % 2)
    half = full.n_half
    keys_a = [tuple(r) for r in up[:, :half]]
    keys_b = [tuple(r) for r in up[:, half:]]
    ca = sorted(set(keys_a))
    cb = sorted(set(keys_b))
    ia = {c: k for k, c in enumerate(ca)}
    ib = {c: k for k, c in enumerate(cb)}
    counts = np.zeros((len(ca), len(cb)), dtype=np.int64)
    for s, ka, kb in zip(sign, keys_a, keys_b):
        counts[ia[ka], ib[kb]] += int(s)
    spin_a = full.spin2[:half]
    spin_b = full.spin2[half:]

    def norm(cfg, spins):
        return math.prod(math.factorial(u) * math.factorial(s - u) for u, s in zip(cfg, spins))

    return Wavefunction(
        counts.astype(object),
        tuple(norm(c, spin_a) for c in ca),
        tuple(norm(c, spin_b) for c in cb),
        tuple(ca),
        tuple(cb),
    )


def reduced_density(wf: Wavefunction, side: str = "A") -> np.ndarray:
    """Normalized reduced density matrix of one half (float, symmetric).

    The Gram part ``sum_b c_ab c_a'b N_b`` is formed in exact integers.
    """
    if side == "A":
        c, keep, trace_out = wf.counts, wf.norm_a, wf.norm_b
    elif side == "B":
        c, keep, trace_out = wf.counts.T, wf.norm_b, wf.norm_a
    else:
        raise ValueError("side must be 'A' or 'B'")
    gram = (c * np.array(trace_out, dtype=object)[None, :]).dot(c.T)
    d = np.sqrt(np.array([float(x) for x in keep]))
    scale = max(abs(int(x)) for x in gram.flat) or 1
    rho = np.array([[int(x) / scale for x in row] for row in gram]) * d[:, None] * d[None, :]
    rho = 0.5 * (rho + rho.T)
    return rho / np.trace(rho)


def spin_flip_permutation(configs: Sequence[Tuple[int, ...]], spins: Sequence[int]) -> np.ndarray:
    """Indices of the flipped configuration ``m -> -m`` on every site."""
    index = {c: k for k, c in enumerate(configs)}
    return np.array([index[tuple(s - u for u, s in zip(c, spins))] for c in configs])


def schmidt_spectrum(half: SymmetricGraph, side: str = "A") -> np.ndarray:
    """Schmidt probabilities of the VBS state across the cut, descending."""
    wf = vbs_wavefunction(doubled_graph(half))
    rho = reduced_density(wf, side)
    # the reduced matrices of the two halves share their nonzero spectrum;
    # diagonalize the smaller one
    other = "B" if side == "A" else "A"
    rho_o = reduced_density(wf, other)
    small = rho if rho.shape[0] <= rho_o.shape[0] else rho_o
    ev = eig_symmetric(small).eigenvalues
    return np.clip(ev, 0.0, None)


def exact_vbs_rdm(half: SymmetricGraph, side: str = "A") -> EntropySpectrum:
    """Entanglement entropy across the cut from the explicit VBS wavefunction.

    The returned ``eigenvalues`` are Schmidt coefficients (square roots of
    the reduced-density eigenvalues), so ``probabilities`` are the latter.
    """
    p = schmidt_spectrum(half, side)
    return entropy_from_spectrum(np.sqrt(p), half.boundary_size)
