"""Reflection-symmetric half-graphs and AKLT projector polynomials.

A :class:`SymmetricGraph` describes subsystem ``A`` only: its vertices,
internal bonds, and the boundary vertices that carry one valence bond across
the cut to their mirror images.  Spins are stored doubled (``spin2 = 2S``)
and must equal the full-graph coordination number.

Vertex numbering is row-major with ``y`` fastest: ``id = (x-1)*N_y + (y-1)``,
with column ``x = 1`` next to the cut.
"""

from __future__ import annotations

import json
import re
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

Bond = Tuple[int, int]


@dataclass(frozen=True)
class SymmetricGraph:
    vertices: Tuple[int, ...]
    bonds: Tuple[Bond, ...]
    boundary: Tuple[int, ...]
    spin2: Dict[int, int]
    family: str = "custom"
    nx: Optional[int] = None
    ny: Optional[int] = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def boundary_size(self) -> int:
        return len(self.boundary)

    def spin(self, k: int) -> Fraction:
        return Fraction(self.spin2[k], 2)

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n_vertices, dtype=int)
        for i, j in self.bonds:
            deg[i] += 1
            deg[j] += 1
        return deg

    def adjacency(self) -> Tuple[np.ndarray, np.ndarray]:
        """CSR adjacency ``(offsets, neighbors)`` as int32 arrays."""
        nbrs: List[List[int]] = [[] for _ in self.vertices]
        for i, j in self.bonds:
            nbrs[i].append(j)
            nbrs[j].append(i)
        offsets = np.zeros(self.n_vertices + 1, dtype=np.int32)
        offsets[1:] = np.cumsum([len(n) for n in nbrs])
        flat = np.array([j for n in nbrs for j in n], dtype=np.int32)
        return offsets, flat

    def descriptor(self) -> str:
        if self.family == "custom":
            return "custom"
        return f"{self.family}({self.nx},{self.ny})"

    def to_json(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "bonds": [list(b) for b in self.bonds],
            "boundary": list(self.boundary),
            "spin2": {str(k): v for k, v in sorted(self.spin2.items())},
            "family": self.descriptor(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SymmetricGraph":
        family, nx, ny = "custom", None, None
        m = re.fullmatch(r"\s*(square|hex)\((\d+),(\d+)\)\s*", str(data.get("family", "custom")))
        if m:
            family, nx, ny = m.group(1), int(m.group(2)), int(m.group(3))
        return cls(
            vertices=tuple(int(v) for v in data["vertices"]),
            bonds=tuple((int(a), int(b)) for a, b in data["bonds"]),
            boundary=tuple(int(v) for v in data["boundary"]),
            spin2={int(k): int(v) for k, v in data["spin2"].items()},
            family=family,
            nx=nx,
            ny=ny,
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "SymmetricGraph":
        return cls.from_json(json.loads(text))


def _finish(n: int, bonds: List[Bond], boundary: List[int], family, nx, ny) -> SymmetricGraph:
    bonds = sorted((min(b), max(b)) for b in bonds)
    deg = [0] * n
    for i, j in bonds:
        deg[i] += 1
        deg[j] += 1
    bset = set(boundary)
    spin2 = {k: deg[k] + (1 if k in bset else 0) for k in range(n)}
    return SymmetricGraph(tuple(range(n)), tuple(bonds), tuple(sorted(boundary)), spin2, family, nx, ny)


def build_square_half(nx: int, ny: int) -> SymmetricGraph:
    """Half of the open ``2 N_x x N_y`` square lattice cut between its middle columns."""
    if nx < 1 or ny < 1:
        raise ValueError(f"square lattice needs N_x, N_y >= 1, got ({nx}, {ny})")
    vid = lambda x, y: (x - 1) * ny + (y - 1)  # noqa: E731
    bonds = []
    for x in range(1, nx + 1):
        for y in range(1, ny + 1):
            if y < ny:
                bonds.append((vid(x, y), vid(x, y + 1)))
            if x < nx:
                bonds.append((vid(x, y), vid(x + 1, y)))
    boundary = [vid(1, y) for y in range(1, ny + 1)]
    return _finish(nx * ny, bonds, boundary, "square", nx, ny)


def hex_has_rung(x: int, y: int) -> bool:
    """Whether a horizontal bond joins columns ``x`` and ``x + 1`` at row ``y``.

    Column 0 is the mirror column across the cut; rows are 1-based.
    """
    return (x + y) % 2 == 1


def build_hexagonal_half(nx: int, ny: int) -> SymmetricGraph:
    """Brick-wall half of the open hexagonal lattice.

    Each column is a vertical chain of ``N_y`` sites.  Horizontal bonds
    alternate between odd and even rows from one column gap to the next,
    so the cut crosses the odd rows and ``|Lambda_A| = N_y / 2``.
    """
    if nx < 1 or ny < 2 or ny % 2:
        raise ValueError(f"hexagonal lattice needs N_x >= 1 and even N_y >= 2, got ({nx}, {ny})")
    vid = lambda x, y: (x - 1) * ny + (y - 1)  # noqa: E731
    bonds = []
    for x in range(1, nx + 1):
        for y in range(1, ny + 1):
            if y < ny:
                bonds.append((vid(x, y), vid(x, y + 1)))
            if x < nx and hex_has_rung(x, y):
                bonds.append((vid(x, y), vid(x + 1, y)))
    boundary = [vid(1, y) for y in range(1, ny + 1) if hex_has_rung(0, y)]
    return _finish(nx * ny, bonds, boundary, "hex", nx, ny)


def custom_graph(n: int, bonds: Sequence[Bond], boundary: Sequence[int]) -> SymmetricGraph:
    """Custom half-graph with spins set from the coordination rule."""
    return _finish(n, list(bonds), list(boundary), "custom", None, None)


def build_half(family: str, nx: int, ny: int) -> SymmetricGraph:
    if family == "square":
        return build_square_half(nx, ny)
    if family == "hex":
        return build_hexagonal_half(nx, ny)
    raise ValueError(f"unknown lattice family {family!r}")


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str
    vertex: Optional[int] = None


def validate(graph: SymmetricGraph) -> List[Violation]:
    """All violated invariants of ``graph``; an empty list means valid."""
    out: List[Violation] = []
    n = len(graph.vertices)
    if list(graph.vertices) != list(range(n)):
        out.append(Violation("vertex ids", "vertices must be 0..n-1 in order"))
    ids = set(range(n))
    seen = set()
    deg = [0] * n
    adj: List[List[int]] = [[] for _ in range(n)]
    for a, b in graph.bonds:
        if a not in ids or b not in ids:
            out.append(Violation("unknown vertex", f"bond ({a}, {b}) references a missing vertex"))
            continue
        if a == b:
            out.append(Violation("self-loop", f"bond ({a}, {b})", a))
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            out.append(Violation("duplicate bond", f"bond {key} listed twice"))
            continue
        seen.add(key)
        deg[a] += 1
        deg[b] += 1
        adj[a].append(b)
        adj[b].append(a)
    bnd = list(graph.boundary)
    if len(set(bnd)) != len(bnd):
        out.append(Violation("boundary", "boundary ids are not distinct"))
    if bnd != sorted(bnd):
        out.append(Violation("boundary", "boundary ids are not sorted"))
    for k in bnd:
        if k not in ids:
            out.append(Violation("unknown vertex", f"boundary id {k} is not a vertex", k))
    if not bnd:
        out.append(Violation("boundary", "boundary is empty"))
    bset = set(bnd)
    for k in range(n):
        z = deg[k] + (1 if k in bset else 0)
        s2 = graph.spin2.get(k)
        if s2 is None:
            out.append(Violation("spin", f"vertex {k} has no spin", k))
        elif s2 != z:
            out.append(Violation("spin", f"vertex {k}: 2S = {s2} but coordination is {z}", k))
        if z == 0:
            out.append(Violation("isolated", f"vertex {k} has no bond and is not on the boundary", k))
    if n > 1:
        reached = {0}
        todo = deque([0])
        while todo:
            v = todo.popleft()
            for w in adj[v]:
                if w not in reached:
                    reached.add(w)
                    todo.append(w)
        if len(reached) != n:
            missing = sorted(ids - reached)
            out.append(Violation("connectivity", f"vertices {missing} not connected to vertex 0"))
    return out


# ---------------------------------------------------------------------------
# projectors


def _as_fraction(s) -> Fraction:
    f = Fraction(s).limit_denominator(2)
    if f.denominator not in (1, 2) or f <= 0:
        raise ValueError(f"spin must be a positive half-integer, got {s}")
    return f


def _sector_value(j: Fraction, sk: Fraction, sl: Fraction) -> Fraction:
    """Eigenvalue of ``S_k . S_l`` in the total-spin-``j`` sector."""
    return (j * (j + 1) - sk * (sk + 1) - sl * (sl + 1)) / 2


@dataclass(frozen=True)
class ProjectorPolynomial:
    """Highest-spin projector as ``sum_p c_p (S_k . S_l)**p``."""

    s_k: Fraction
    s_l: Fraction
    total_spin_J: Fraction
    coefficients: Tuple[Fraction, ...]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        return sum((c * x**p for p, c in enumerate(self.coefficients)), Fraction(0))

    def sector_values(self) -> Dict[Fraction, Fraction]:
        """Map total spin ``J' -> S_k . S_l`` for every allowed ``J'``."""
        lo = abs(self.s_k - self.s_l)
        out = {}
        j = lo
        while j <= self.total_spin_J:
            out[j] = _sector_value(j, self.s_k, self.s_l)
            j += 1
        return out


def projector(s_k, s_l) -> ProjectorPolynomial:
    """Exact projector onto total spin ``S_k + S_l`` as a polynomial in ``S_k . S_l``."""
    sk, sl = _as_fraction(s_k), _as_fraction(s_l)
    top = sk + sl
    x_top = _sector_value(top, sk, sl)
    poly = [Fraction(1)]
    j = abs(sk - sl)
    while j < top:
        xj = _sector_value(j, sk, sl)
        # multiply by (x - xj) / (x_top - xj)
        scale = 1 / (x_top - xj)
        new = [Fraction(0)] * (len(poly) + 1)
        for p, c in enumerate(poly):
            new[p + 1] += c * scale
            new[p] -= c * xj * scale
        poly = new
        j += 1
    return ProjectorPolynomial(sk, sl, top, tuple(poly))
