"""Symmetric eigensolver and entanglement entropy from overlap spectra."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import kernels

MAX_SWEEPS = 64
OFF_TOL = 1e-13
SYM_TOL = 1e-12


class NotSymmetricError(ValueError):
    pass


class JacobiConvergenceError(RuntimeError):
    def __init__(self, sweeps: int, off: float):
        super().__init__(f"Jacobi did not converge in {sweeps} sweeps (off-diagonal norm {off:.3e})")
        self.sweeps = sweeps
        self.off = off


@dataclass(frozen=True)
class Eigensystem:
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns
    sweeps: int
    off_norm: float


def _check_symmetric(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetricError(f"expected a square matrix, got shape {a.shape}")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if asym > SYM_TOL * scale:
        raise NotSymmetricError(f"matrix is not symmetric: max |A - A^T| = {asym:.3e}")


def eig_symmetric(matrix, max_sweeps: int = MAX_SWEEPS) -> Eigensystem:
    """Eigen-decomposition of a dense real symmetric matrix by cyclic Jacobi.

    Iterates until the off-diagonal Frobenius norm is at most
    ``1e-13 * ||A||_F``; eigenvalues are returned in descending order with
    matching orthonormal eigenvector columns.
    """
    a = np.asarray(matrix, dtype=np.float64)
    _check_symmetric(a)
    n = a.shape[0]
    if n == 0:
        return Eigensystem(np.zeros(0), np.zeros((0, 0)), 0, 0.0)
    a = 0.5 * (a + a.T)
    tol = OFF_TOL * float(np.linalg.norm(a))
    diag, vecs, sweeps, off = kernels.jacobi_eigh(a, tol, max_sweeps)
    if sweeps > max_sweeps:
        raise JacobiConvergenceError(max_sweeps, off)
    order = np.argsort(-diag, kind="stable")
    return Eigensystem(diag[order], vecs[:, order], sweeps, off)


def eigvals_by_sectors(matrix: np.ndarray, sectors: Iterable[np.ndarray]) -> np.ndarray:
    """Eigenvalues of a block-diagonal matrix given its invariant index sets.

    Each block is handed to :func:`eig_symmetric`; the union is sorted
    descending.  The caller guarantees that the matrix has no entries
    between different sectors.
    """
    vals: List[np.ndarray] = []
    for idx in sectors:
        idx = np.asarray(idx)
        if idx.size == 0:
            continue
        vals.append(eig_symmetric(matrix[np.ix_(idx, idx)]).eigenvalues)
    out = np.concatenate(vals)
    return out[np.argsort(-out, kind="stable")]


@dataclass(frozen=True)
class EntropySpectrum:
    eigenvalues: np.ndarray
    probabilities: np.ndarray
    entropy: float
    per_bond: float
    boundary_size: int
    warnings: tuple = field(default=())

    def to_json(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "probabilities": [float(x) for x in self.probabilities],
            "entropy": self.entropy,
            "per_bond": self.per_bond,
            "boundary_size": self.boundary_size,
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, data: dict) -> "EntropySpectrum":
        return cls(
            np.asarray(data["eigenvalues"], dtype=float),
            np.asarray(data["probabilities"], dtype=float),
            float(data["entropy"]),
            float(data["per_bond"]),
            int(data["boundary_size"]),
            tuple(data.get("warnings", ())),
        )


def entropy_from_spectrum(
    d: Sequence[float], boundary_size: int, stderr: Optional[float] = None
) -> EntropySpectrum:
    """Von Neumann entropy (nats) of ``p = d**2 / sum(d**2)``.

    ``stderr``, when given, is the propagated statistical error of the
    overlap eigenvalues; a warning is attached if the most negative
    eigenvalue exceeds three of them.
    """
    d = np.sort(np.asarray(d, dtype=float))[::-1]
    sq = d * d
    total = float(np.sum(sq))
    if total == 0.0 or not math.isfinite(total):
        raise ValueError("overlap spectrum is identically zero")
    p = sq / total
    nz = p[p > 0]
    s = float(-np.sum(nz * np.log(nz)))
    notes = []
    if stderr is not None and d.size and d[-1] < 0 and abs(d[-1]) > 3 * stderr:
        notes.append(f"negative overlap eigenvalue {d[-1]:.3e} beyond 3 stderr ({stderr:.3e})")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    per_bond = s / boundary_size if boundary_size else float("nan")
    return EntropySpectrum(d, p, s, per_bond, int(boundary_size), tuple(notes))


def entropy_of_matrix(z: np.ndarray, boundary_size: int) -> EntropySpectrum:
    return entropy_from_spectrum(eig_symmetric(z).eigenvalues, boundary_size)
