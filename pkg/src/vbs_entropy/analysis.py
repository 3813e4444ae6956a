"""Area-law fits of per-bond entropy against boundary size.

Model: ``S / L = C / L**Delta + alpha`` with ``L = |Lambda_A|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

LN2 = math.log(2.0)
MAX_ITER = 500
REL_TOL = 1e-10
DAMPING_AFTER = 10


class FitError(RuntimeError):
    def __init__(self, message: str, diagnostics: Optional[dict] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class ScalingDataset:
    points: Tuple[Tuple[int, float, float], ...]  # (|Lambda_A|, S/|Lambda_A|, stderr)
    family: str = ""
    nx: Optional[int] = None

    def __post_init__(self):
        pts = tuple((int(L), float(s), float(e)) for L, s, e in self.points)
        object.__setattr__(self, "points", pts)
        sizes = [p[0] for p in pts]
        if len(set(sizes)) != len(sizes):
            raise ValueError("boundary sizes must be distinct")
        for L, s, e in pts:
            if L < 1:
                raise ValueError("boundary sizes must be >= 1")
            if not 0 < s <= LN2 + 1e-9:
                raise ValueError(f"per-bond entropy {s} at |Lambda_A| = {L} outside (0, ln 2]")
            if e < 0:
                raise ValueError("stderr must be non-negative")

    @property
    def sizes(self) -> np.ndarray:
        return np.array([p[0] for p in self.points], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    @property
    def errors(self) -> np.ndarray:
        return np.array([p[2] for p in self.points])

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "nx": self.nx,
            "points": [{"boundary": L, "per_bond": s, "stderr": e} for L, s, e in self.points],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ScalingDataset":
        pts = tuple((p["boundary"], p["per_bond"], p.get("stderr", 0.0)) for p in data["points"])
        return cls(pts, data.get("family", ""), data.get("nx"))


@dataclass(frozen=True)
class AreaLawFit:
    C: float
    delta: float
    alpha: float
    C_err: float = 0.0
    delta_err: float = 0.0
    alpha_err: float = 0.0
    covariance: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)), repr=False)
    residual_norm: float = 0.0
    iterations: int = 0
    n_points: int = 0
    weighted: bool = False

    @property
    def params(self) -> np.ndarray:
        return np.array([self.C, self.delta, self.alpha])

    def __call__(self, sizes) -> np.ndarray:
        return model(self.params, np.asarray(sizes, dtype=float))

    def to_json(self) -> dict:
        return {
            "C": self.C,
            "Delta": self.delta,
            "alpha": self.alpha,
            "C_err": self.C_err,
            "Delta_err": self.delta_err,
            "alpha_err": self.alpha_err,
            "covariance": self.covariance.tolist(),
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "n_points": self.n_points,
            "weighted": self.weighted,
        }

    @classmethod
    def from_json(cls, d: dict) -> "AreaLawFit":
        return cls(
            d["C"], d["Delta"], d["alpha"], d["C_err"], d["Delta_err"], d["alpha_err"],
            np.asarray(d["covariance"], dtype=float), d["residual_norm"], d["iterations"],
            d["n_points"], d["weighted"],
        )


def model(p: np.ndarray, L: np.ndarray) -> np.ndarray:
    c, delta, alpha = p
    return c * L ** (-delta) + alpha


def jacobian(p: np.ndarray, L: np.ndarray) -> np.ndarray:
    c, delta, _ = p
    t = L ** (-delta)
    return np.stack([t, -c * np.log(L) * t, np.ones_like(L)], axis=1)


def _weights(data: ScalingDataset) -> Tuple[np.ndarray, bool]:
    err = data.errors
    if np.all(err > 0):
        return 1.0 / err**2, True
    if np.all(err == 0):
        return np.ones_like(err), False
    raise ValueError("mixed exact and noisy points; give every point a stderr or none")


def fit_area_law(data: ScalingDataset) -> AreaLawFit:
    """Weighted least squares by Gauss-Newton with backtracking."""
    if len(data.points) < 4:
        raise ValueError("need at least 4 points for a 3-parameter fit")
    order = np.argsort(data.sizes)
    L = data.sizes[order]
    y = data.values[order]
    w, weighted = _weights(data)
    sw = np.sqrt(w[order])

    def objective(p):
        r = (y - model(p, L)) * sw
        return float(r @ r)

    p = np.array([(y[0] - y[-1]) * L[0], 1.0, y[-1]])
    obj = objective(p)
    failures = 0
    mu = 0.0
    it = 0
    converged = False
    while it < MAX_ITER:
        it += 1
        J = jacobian(p, L) * sw[:, None]
        r = (y - model(p, L)) * sw
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] <= 1e-14 * sv[0]:
            raise FitError("rank-deficient Jacobian", {"singular_values": sv.tolist(), "params": p.tolist()})
        if mu > 0:
            a = J.T @ J
            step = np.linalg.solve(a + mu * np.diag(np.diag(a)), J.T @ r)
        else:
            step = np.linalg.lstsq(J, r, rcond=None)[0]
        rel = float(np.max(np.abs(step) / (np.abs(p) + 1e-300)))
        if rel < REL_TOL:
            p = p + step
            obj = objective(p)
            converged = True
            break
        lam = 1.0
        improved = False
        for _ in range(40):
            trial = p + lam * step
            t_obj = objective(trial)
            if t_obj < obj:
                improved = True
                break
            lam *= 0.5
        if improved:
            done = float(np.max(np.abs(lam * step) / (np.abs(p) + 1e-300))) < REL_TOL
            p, obj = trial, t_obj
            failures = 0
            mu = mu * 0.1 if mu > 1e-12 else 0.0
            if done:
                converged = True
                break
        else:
            failures += 1
            if failures >= DAMPING_AFTER:
                mu = max(mu * 10.0, 1e-3)
            if rel < 1e-7 and failures >= DAMPING_AFTER:
                # the objective is flat to rounding at this point
                converged = True
                break
    if not converged:
        raise FitError(f"no convergence after {MAX_ITER} iterations", {"params": p.tolist(), "objective": obj})
    J = jacobian(p, L) * sw[:, None]
    dof = len(L) - 3
    s2 = obj / dof if dof > 0 else 1.0
    cov = s2 * np.linalg.inv(J.T @ J)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return AreaLawFit(
        float(p[0]), float(p[1]), float(p[2]),
        float(err[0]), float(err[1]), float(err[2]),
        cov, math.sqrt(obj), it, len(L), weighted,
    )


def format_uncertainty(value: float, err: float) -> str:
    """``0.112(1)`` style: error to one significant digit, value to match."""
    if not err > 0 or not math.isfinite(err):
        return f"{value:.7f}"
    exp = math.floor(math.log10(err))
    digit = round(err / 10**exp)
    if digit >= 10:
        exp += 1
        digit = round(err / 10**exp)
    decimals = max(0, -exp)
    if exp > 0:
        return f"{round(value, -exp):.0f}({digit * 10**exp})"
    return f"{value:.{decimals}f}({digit})"


def extrapolation_report(fit: AreaLawFit) -> dict:
    """Summary of the fitted bulk entropy per bond against ``ln 2``."""
    gap = LN2 - fit.alpha
    sigma = fit.alpha_err
    return {
        "alpha": fit.alpha,
        "alpha_err": sigma,
        "ln2": LN2,
        "gap": gap,
        "gap_sigmas": gap / sigma if sigma > 0 else float("inf"),
        "below_ln2": bool(fit.alpha < LN2 - 3.0 * sigma),
        "area_law": f"S = {fit.alpha:.7f} |L| + {fit.C:.7f} |L|^{1.0 - fit.delta:.7f}",
        "row": (
            f"C = {format_uncertainty(fit.C, fit.C_err)}, "
            f"Delta = {format_uncertainty(fit.delta, fit.delta_err)}, "
            f"alpha = {format_uncertainty(fit.alpha, fit.alpha_err)}"
        ),
    }


def curve_points(fit: AreaLawFit, sizes: Iterable[float]) -> np.ndarray:
    xs = np.asarray(list(sizes), dtype=float)
    return np.stack([xs, fit(xs)], axis=1)


def write_two_column(path, rows: Sequence[Sequence[float]], header: str = "") -> None:
    """gnuplot-style whitespace-separated columns."""
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for row in rows:
            fh.write(" ".join(f"{float(v):.10g}" for v in row) + "\n")
