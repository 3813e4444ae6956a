"""Cross-engine consistency checks behind the ``verify`` command."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional

import numpy as np

from . import reference as ref
from .model import build_half, build_hexagonal_half, build_square_half, custom_graph
from .oracle import exact_vbs_rdm, loop_enumerate_z, vertical_strand_expansion
from .overlap_mc import MCConfig, entropy as mc_entropy, estimate_z
from .pauli import global_flip, matching_operator
from .spectrum import eig_symmetric, entropy_from_spectrum
from .transfer import (
    Q,
    closed_form_2leg,
    infinite_limit,
    ladder_coefficients,
    ladder_entropy,
    recursion_matrix,
    vertical_entropy,
    vertical_ladder_z,
)


@dataclass
class Check:
    name: str
    engines: str
    graph: str
    expected: object
    got: object
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}  [{self.engines}; {self.graph}]  expected {self.expected}  got {self.got}"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "engines": self.engines,
            "graph": self.graph,
            "expected": str(self.expected),
            "got": str(self.got),
            "passed": bool(self.passed),
        }


def _close(name, engines, graph, expected, got, tol) -> Check:
    return Check(name, engines, graph, f"{expected:.10g}", f"{got:.10g}", abs(got - expected) <= tol)


def _same(name, engines, graph, expected, got) -> Check:
    return Check(name, engines, graph, expected, got, expected == got)


def _guard(fn: Callable[[], List[Check]], name: str) -> List[Check]:
    try:
        return fn()
    except Exception as exc:  # a crashing check is a failing check
        return [Check(name, "-", "-", "no exception", f"{type(exc).__name__}: {exc}", False)]


def rational_checks() -> List[Check]:
    q = Q
    out = []
    sq2 = [list(r) for r in recursion_matrix("square", 2).entries]
    out.append(_same("square 2-leg step matrix", "transfer", "ladder m=2", [[1, q], [q**2, q**2]], sq2))
    hx2 = [list(r) for r in recursion_matrix("hex", 2).entries]
    out.append(_same("hex 2-leg step matrix", "transfer", "ladder m=2", [[1, q**2], [q**3, q**4]], hx2))
    ok = all(
        ladder_coefficients("square", 3, n).get((1, 2)) == ladder_coefficients("square", 3, n).get((2, 3))
        for n in range(11)
    )
    out.append(_same("square 3-leg b_n = c_n (n <= 10)", "transfer", "ladder m=3", True, ok))
    for n in (1, 2, 3):
        le = loop_enumerate_z(build_square_half(n, 2))
        a = sum(Fraction(c) * q**p for p, c in ref.SQUARE_2LEG_A[n - 1].items())
        b = sum(Fraction(c) * q**p for p, c in ref.SQUARE_2LEG_B[n - 1].items())
        got = (le.coeff.get((), 0), -le.coeff.get(((0, 1),), 0))
        out.append(_same(f"loop expansion a_{n}, b_{n}", "loop", f"square({n},2)", (a, b), got))
    for n in range(1, 7):
        le = loop_enumerate_z(build_square_half(n, 2))
        tr = ladder_coefficients("square", 2, n).signed()
        out.append(_same(f"loop = transfer coefficients n={n}", "loop/transfer", f"square({n},2)", tr, le.coeff))
    worst = 0.0
    for fam in ("square", "hex"):
        for n in range(41):
            st = ladder_coefficients(fam, 2, n)
            a_ex = float(st.get())
            b_ex = float(st.get((1, 2)))
            a_cf, b_cf = closed_form_2leg(fam, n)
            worst = max(worst, abs(a_cf - a_ex) / abs(a_ex), abs(b_cf - b_ex) / max(abs(b_ex), 1e-300) if b_ex else 0.0)
    out.append(Check("closed form vs recursion (n <= 40)", "transfer", "2-leg", "<= 1e-12", f"{worst:.2e}", worst <= 1e-12))
    for size in range(1, 7):
        for fam in ("square", "hex"):
            z1 = vertical_ladder_z(fam, size, exact=True)
            z2 = matching_operator(vertical_strand_expansion(size, fam), size, exact=True)
            out.append(_same(f"strand sum = recursion N={size}", "vertical/strands", f"{fam} vertical", True, bool(np.all(z1 == z2))))
    return out


def table_checks() -> List[Check]:
    out = []
    for m, row in ref.SQUARE_LADDER.items():
        for nx, val in enumerate(row, 1):
            out.append(_close("ladder entropy", "transfer", f"square({nx},{m})", val, ladder_entropy("square", m, nx).per_bond, 5e-8))
    for ny, row in ref.HEX_LADDER.items():
        for nx, val in enumerate(row, 1):
            out.append(_close("ladder entropy", "transfer", f"hex({nx},{ny})", val, ladder_entropy("hex", ny // 2, nx).per_bond, 5e-8))
    for (fam, m), (val, tol) in ref.INFINITE.items():
        out.append(_close("infinite limit", "transfer", f"{fam} {m}-leg", val, infinite_limit(fam, m).spectrum.per_bond, tol))
    return out


def cross_engine_checks() -> List[Check]:
    out = []
    for m in (2, 3):
        out.append(_close("vertical = horizontal", "vertical/transfer", f"square(1,{m})",
                          ladder_entropy("square", m, 1).per_bond, vertical_entropy("square", m).per_bond, 1e-12))
    for m in (2, 3, 4):
        out.append(_close("vertical = horizontal", "vertical/transfer", f"hex(1,{2 * m})",
                          ladder_entropy("hex", m, 1).per_bond, vertical_entropy("hex", m).per_bond, 1e-12))
    out.append(_close("singlet", "ed", "one cut bond", math.log(2), exact_vbs_rdm(custom_graph(1, [], [0])).entropy, 1e-12))
    for g, (fam, m, n) in [
        (build_square_half(1, 2), ("square", 2, 1)),
        (build_square_half(2, 2), ("square", 2, 2)),
        (build_square_half(1, 3), ("square", 3, 1)),
        (build_hexagonal_half(1, 4), ("hex", 2, 1)),
        (build_hexagonal_half(1, 6), ("hex", 3, 1)),
    ]:
        out.append(_close("ed = transfer", "ed/transfer", g.descriptor(),
                          ladder_entropy(fam, m, n).per_bond, exact_vbs_rdm(g).per_bond, 1e-9))
    return out


def invariant_checks(seed: int = 7) -> List[Check]:
    rng = np.random.default_rng(seed)
    out = []
    d = rng.random(16) - 0.3
    s0 = entropy_from_spectrum(d, 4).entropy
    s1 = entropy_from_spectrum(-3.7 * d, 4).entropy
    s2 = entropy_from_spectrum(rng.permutation(d), 4).entropy
    out.append(_close("entropy scale invariance", "spectrum", "random", s0, s1, 1e-12))
    out.append(_close("entropy permutation invariance", "spectrum", "random", s0, s2, 1e-12))
    worst = 0.0
    for n in (2, 5, 17, 40):
        b = rng.standard_normal((n, n))
        a = b + b.T
        es = eig_symmetric(a)
        rec = es.eigenvectors @ np.diag(es.eigenvalues) @ es.eigenvectors.T
        worst = max(worst, float(np.linalg.norm(a - rec) / np.linalg.norm(a)))
    out.append(Check("Jacobi reconstruction", "spectrum", "random", "<= 1e-10", f"{worst:.2e}", worst <= 1e-10))
    g = build_square_half(2, 2)
    cfg = MCConfig(samples=40_000, batches=8, seed=11)
    e1 = estimate_z(g, cfg)
    e2 = estimate_z(g, cfg)
    out.append(_same("MC determinism", "mc", g.descriptor(), True, bool(np.array_equal(e1.mean, e2.mean) and np.array_equal(e1.stderr, e2.stderr))))
    f = global_flip(g.boundary_size)
    comm = np.abs(e1.mean @ f - f @ e1.mean)
    bound = 5.0 * np.sqrt(e1.stderr**2 @ (f * f) + (f * f) @ e1.stderr**2)
    ok = bool(np.all(comm <= bound + 1e-15))
    out.append(Check("MC spin-flip commutation", "mc", g.descriptor(), "<= 5 stderr", f"{float(np.max(comm / np.maximum(bound / 5, 1e-300))):.2f} stderr", ok))
    return out


MC_GEOMETRIES = [("square", 1, 2), ("square", 2, 2), ("square", 1, 3), ("square", 2, 3), ("hex", 1, 4), ("hex", 2, 4), ("hex", 1, 6), ("hex", 2, 6)]


def exact_per_bond(family: str, nx: int, ny: int) -> float:
    if family == "square":
        return ladder_entropy("square", ny, nx).per_bond
    return ladder_entropy("hex", ny // 2, nx).per_bond


def mc_checks(samples: int = 10_000_000, repeats: int = 3) -> List[Check]:
    out = []
    for fam, nx, ny in MC_GEOMETRIES:
        exact = exact_per_bond(fam, nx, ny)
        for r in range(repeats):
            est = estimate_z(build_half(fam, nx, ny), MCConfig(samples=samples, batches=20, seed=1000 + r))
            res = mc_entropy(est)
            val = res.spectrum.per_bond
            err = res.per_bond_stderr
            out.append(Check(f"MC vs exact (seed {1000 + r})", "mc/transfer", f"{fam}({nx},{ny})",
                             f"{exact:.7f}", f"{val:.7f} +- {err:.7f}", abs(val - exact) <= 3 * err))
    return out


@dataclass
class Report:
    level: str
    checks: List[Check]
    seconds: float
    mc_fraction: Optional[float] = None

    @property
    def passed(self) -> bool:
        hard = [c for c in self.checks if not c.name.startswith("MC vs exact")]
        ok = all(c.passed for c in hard)
        if self.mc_fraction is not None:
            ok = ok and self.mc_fraction >= 0.95
        return ok

    def to_json(self) -> dict:
        return {
            "level": self.level,
            "passed": self.passed,
            "seconds": self.seconds,
            "mc_fraction": self.mc_fraction,
            "checks": [c.to_json() for c in self.checks],
        }


def run(level: str = "quick", mc_samples: int = 10_000_000, mc_repeats: int = 3) -> Report:
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    t0 = time.perf_counter()
    checks: List[Check] = []
    for fn, name in [
        (rational_checks, "rational identities"),
        (table_checks, "ladder tables"),
        (cross_engine_checks, "cross-engine"),
        (invariant_checks, "invariants"),
    ]:
        checks += _guard(fn, name)
    frac = None
    if level == "full":
        mc = _guard(lambda: mc_checks(mc_samples, mc_repeats), "MC vs exact")
        checks += mc
        frac = sum(c.passed for c in mc) / len(mc)
    return Report(level, checks, time.perf_counter() - t0, frac)
