"""Monte Carlo estimation of the boundary Z matrix.

Z = E[ w * kron_k (1 + Omega_k . sigma_k) ] over unit vectors Omega_i, with
either uniform sampling and ``w = prod_bonds (1 - Omega_i . Omega_j)`` or
Metropolis sampling of that weight and ``w = 1``.

Each sample is accumulated in its parity-symmetrized form

    [kron(1 + Omega.sigma) + kron(1 - Omega.sigma)] / 2
        = 2**(L-1) (psi_+ psi_+^dag + psi_- psi_-^dag),

where ``psi_+`` (``psi_-``) is the product of spin-up spinors along
``+Omega_k`` (``-Omega_k``).  Both the weight and the measure are invariant
under ``Omega -> -Omega``, so this is the same expectation with the odd part
removed sample by sample.  The rank-2 form turns the reduction into two
matrix products per chunk.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .model import SymmetricGraph, validate
from .spectrum import EntropySpectrum, entropy_from_spectrum, eig_symmetric

MAX_BOUNDARY = 14
MIN_BATCHES = 8
ACCEPT_RANGE = (0.05, 0.95)
IMAG_FACTOR = 5.0


class EstimatorError(RuntimeError):
    pass


@dataclass(frozen=True)
class UnitVector:
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = self.x * self.x + self.y * self.y + self.z * self.z
        if abs(n - 1.0) > 1e-12:
            raise ValueError(f"not a unit vector: |v|^2 = {n!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def sample_sphere(rng: np.random.Generator) -> UnitVector:
    """One uniform point on the sphere: ``z`` uniform in [-1, 1], azimuth in [0, 2 pi)."""
    z = 2.0 * rng.random() - 1.0
    phi = 2.0 * math.pi * rng.random()
    r = math.sqrt(max(0.0, 1.0 - z * z))
    x, y = r * math.cos(phi), r * math.sin(phi)
    # renormalize away the last-bit rounding
    n = math.sqrt(x * x + y * y + z * z)
    return UnitVector(x / n, y / n, z / n)


class Method(str, enum.Enum):
    WEIGHTED_UNIFORM = "uniform"
    METROPOLIS = "metropolis"


@dataclass(frozen=True)
class MCConfig:
    samples: int = 1_000_000
    batches: int = 16
    seed: int = 0
    method: Method = Method.WEIGHTED_UNIFORM
    step_angle: float = 1.2
    burn_in: int = 200
    thinning: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.samples <= 0:
            raise ValueError("samples must be positive")
        if self.batches < MIN_BATCHES:
            raise ValueError(f"batches must be at least {MIN_BATCHES}")
        if self.samples % self.batches:
            raise ValueError("samples must be divisible by batches")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.method is Method.METROPOLIS:
            if not 0 < self.step_angle <= math.pi:
                raise ValueError("step_angle must be in (0, pi]")
            if self.burn_in < 0 or self.thinning < 1:
                raise ValueError("burn_in must be >= 0 and thinning >= 1")

    def to_json(self) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        return d

    @classmethod
    def from_json(cls, data: dict) -> "MCConfig":
        return cls(**data)


@dataclass(frozen=True)
class OverlapEstimate:
    dim: int
    mean: np.ndarray
    stderr: np.ndarray
    max_imag: float
    config: MCConfig
    batch_means: Optional[np.ndarray] = field(default=None, repr=False, compare=False)
    acceptance: Optional[float] = None

    def to_json(self) -> dict:
        out = {
            "dim": self.dim,
            "mean": self.mean.tolist(),
            "stderr": self.stderr.tolist(),
            "max_imag": self.max_imag,
            "config": self.config.to_json(),
        }
        if self.batch_means is not None:
            out["batch_means"] = self.batch_means.tolist()
        return out

    @classmethod
    def from_json(cls, data: dict) -> "OverlapEstimate":
        bm = data.get("batch_means")
        return cls(
            int(data["dim"]),
            np.asarray(data["mean"], dtype=float),
            np.asarray(data["stderr"], dtype=float),
            float(data["max_imag"]),
            MCConfig.from_json(data["config"]),
            None if bm is None else np.asarray(bm, dtype=float),
        )


# ---------------------------------------------------------------------------
# sampling helpers


def _chunk_size(dim: int) -> int:
    return max(64, min(65536, 2**22 // dim))


def spin_rotation(axis: Sequence[float], angle: float) -> Tuple[np.ndarray, np.ndarray]:
    """``(R, U)`` for a rotation by ``angle`` about ``axis``: ``U (n.sigma) U^dag = (R n).sigma``."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    k = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    r = np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)
    sig = (
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]]),
        np.array([[1, 0], [0, -1]], dtype=complex),
    )
    ns = sum(c * s for c, s in zip(n, sig))
    u = math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * ns
    return r, u


def _rotate_product_states(psi: np.ndarray, u: np.ndarray, n_sites: int) -> np.ndarray:
    """Apply ``U`` to every site of stacked (re, im) product states."""
    z = psi[0] + 1j * psi[1]
    ns = z.shape[0]
    z = z.reshape((ns,) + (2,) * n_sites)
    for k in range(n_sites):
        z = np.moveaxis(np.tensordot(z, u, axes=([k + 1], [1])), -1, k + 1)
    z = z.reshape(ns, -1)
    return np.stack([z.real, z.imag])


def boundary_spinors(xyz: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Stacked (re, im) product spinors along ``+Omega`` and ``-Omega``.

    ``xyz`` has shape ``(samples, L, 3)``.
    """
    ns, L, _ = xyz.shape
    z = np.clip(xyz[..., 2], -1.0, 1.0)
    cu = np.sqrt(0.5 * (1.0 + z))
    su = np.sqrt(0.5 * (1.0 - z))
    rho = np.hypot(xyz[..., 0], xyz[..., 1])
    safe = np.where(rho > 0, rho, 1.0)
    e = np.where(rho > 0, (xyz[..., 0] + 1j * xyz[..., 1]) / safe, 1.0)
    psi_p = np.ones((ns, 1), dtype=complex)
    psi_m = np.ones((ns, 1), dtype=complex)
    for k in range(L):
        chi_p = np.stack([cu[:, k] + 0j, e[:, k] * su[:, k]], axis=1)
        chi_m = np.stack([su[:, k] + 0j, -e[:, k] * cu[:, k]], axis=1)
        psi_p = (psi_p[:, :, None] * chi_p[:, None, :]).reshape(ns, -1)
        psi_m = (psi_m[:, :, None] * chi_m[:, None, :]).reshape(ns, -1)
    return np.stack([psi_p.real, psi_p.imag]), np.stack([psi_m.real, psi_m.imag])


def _accumulate(re, im, psi, sqrt_w):
    a = psi[0] * sqrt_w[:, None]
    b = psi[1] * sqrt_w[:, None]
    re += a.T @ a + b.T @ b
    im += b.T @ a - a.T @ b


# ---------------------------------------------------------------------------
# batches


def _uniform_batch(graph, bonds, boundary, n, seed_seq, rot_u):
    L = graph.boundary_size
    dim = 1 << L
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    re = np.zeros((dim, dim))
    im = np.zeros((dim, dim))
    chunk = _chunk_size(dim)
    done = 0
    while done < n:
        ns = min(chunk, n - done)
        u = rng.random((ns, 2 * graph.n_vertices))
        w, pp, pm = kernels.weighted_uniform_chunk(u, bonds, boundary)
        if rot_u is not None:
            pp = _rotate_product_states(pp, rot_u, L)
            pm = _rotate_product_states(pm, rot_u, L)
        sw = np.sqrt(w)
        _accumulate(re, im, pp, sw)
        _accumulate(re, im, pm, sw)
        done += ns
    scale = 2.0 ** (L - 1) / n
    return re * scale, im * scale, 0, 0


def _metropolis_batch(graph, offsets, neighbors, boundary, n, seed_seq, cfg, rot_u):
    L = graph.boundary_size
    dim = 1 << L
    nv = graph.n_vertices
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    u0 = rng.random((nv, 2))
    z = 2.0 * u0[:, 0] - 1.0
    phi = 2.0 * math.pi * u0[:, 1]
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    state = np.ascontiguousarray(np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1))
    cos_step = math.cos(cfg.step_angle)
    if cfg.burn_in:
        kernels.metropolis_chunk(
            state, offsets, neighbors, boundary, rng.random((nv * cfg.burn_in, 3)), cos_step, cfg.burn_in
        )
    re = np.zeros((dim, dim))
    im = np.zeros((dim, dim))
    chunk = _chunk_size(dim)
    done = 0
    accepted = 0
    proposed = 0
    while done < n:
        ns = min(chunk, n - done)
        rows = ns * nv * cfg.thinning
        pts, acc = kernels.metropolis_chunk(
            state, offsets, neighbors, boundary, rng.random((rows, 3)), cos_step, cfg.thinning
        )
        accepted += acc
        proposed += rows
        pp, pm = boundary_spinors(pts)
        if rot_u is not None:
            pp = _rotate_product_states(pp, rot_u, L)
            pm = _rotate_product_states(pm, rot_u, L)
        ones = np.ones(ns)
        _accumulate(re, im, pp, ones)
        _accumulate(re, im, pm, ones)
        done += ns
    scale = 2.0 ** (L - 1) / n
    return re * scale, im * scale, accepted, proposed


def estimate_z(
    graph: SymmetricGraph,
    cfg: MCConfig,
    workers: int = 1,
    rotation: Optional[Tuple[Sequence[float], float]] = None,
) -> OverlapEstimate:
    """Monte Carlo estimate of the boundary Z matrix (up to a positive constant).

    Batches use independent streams spawned from ``cfg.seed`` and are reduced
    in batch order, so the result does not depend on ``workers``.
    ``rotation = (axis, angle)`` rotates every sampled direction by one
    global rotation.
    """
    problems = validate(graph)
    if problems:
        raise ValueError("invalid graph: " + "; ".join(p.detail for p in problems))
    L = graph.boundary_size
    if L > MAX_BOUNDARY:
        raise ValueError(f"|Lambda_A| = {L} exceeds the limit {MAX_BOUNDARY}")
    dim = 1 << L
    if not graph.bonds:
        # independent boundary sites: each factor averages to the identity
        return OverlapEstimate(dim, np.eye(dim), np.zeros((dim, dim)), 0.0, cfg, np.broadcast_to(np.eye(dim), (cfg.batches, dim, dim)).copy())
    rot_u = None if rotation is None else spin_rotation(*rotation)[1]
    n = cfg.samples // cfg.batches
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.batches)
    boundary = np.asarray(graph.boundary, dtype=np.int32)
    if cfg.method is Method.WEIGHTED_UNIFORM:
        bonds = np.asarray(graph.bonds, dtype=np.int32).reshape(-1, 2)
        job = lambda s: _uniform_batch(graph, bonds, boundary, n, s, rot_u)  # noqa: E731
    else:
        offsets, neighbors = graph.adjacency()
        job = lambda s: _metropolis_batch(graph, offsets, neighbors, boundary, n, s, cfg, rot_u)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, seeds))
    else:
        results = [job(s) for s in seeds]
    re_b = np.stack([r[0] for r in results])
    im_b = np.stack([r[1] for r in results])
    re_b = 0.5 * (re_b + np.transpose(re_b, (0, 2, 1)))
    mean = np.mean(re_b, axis=0)
    mean = 0.5 * (mean + mean.T)
    stderr = np.std(re_b, axis=0, ddof=1) / math.sqrt(cfg.batches)
    max_imag = float(np.max(np.abs(np.mean(im_b, axis=0))))
    acceptance = None
    if cfg.method is Method.METROPOLIS:
        acceptance = sum(r[2] for r in results) / max(1, sum(r[3] for r in results))
        lo, hi = ACCEPT_RANGE
        if not lo <= acceptance <= hi:
            raise EstimatorError(
                f"Metropolis acceptance rate {acceptance:.3f} outside [{lo}, {hi}]; adjust step_angle"
            )
    if max_imag > IMAG_FACTOR * float(np.max(stderr)):
        raise EstimatorError(
            f"imaginary residual {max_imag:.3e} exceeds {IMAG_FACTOR} x max stderr {np.max(stderr):.3e}"
        )
    return OverlapEstimate(dim, mean, stderr, max_imag, cfg, re_b, acceptance)


# ---------------------------------------------------------------------------
# entropy with errors


@dataclass(frozen=True)
class MCEntropy:
    spectrum: EntropySpectrum
    entropy_stderr: float

    @property
    def per_bond_stderr(self) -> float:
        return self.entropy_stderr / self.spectrum.boundary_size


def _spectrum_stderr(est: OverlapEstimate) -> float:
    # spectral-norm bound of the error matrix via its Frobenius norm
    return float(np.linalg.norm(est.stderr))


def entropy(est: OverlapEstimate, boundary_size: Optional[int] = None) -> MCEntropy:
    """Entropy of an estimate with a jackknife error over batches."""
    L = boundary_size if boundary_size is not None else int(round(math.log2(est.dim)))
    spec = entropy_from_spectrum(eig_symmetric(est.mean).eigenvalues, L, stderr=_spectrum_stderr(est))
    bm = est.batch_means
    if bm is None or len(bm) < 2:
        return MCEntropy(spec, float("nan"))
    b = len(bm)
    total = bm.sum(axis=0)
    vals = []
    for i in range(b):
        loo = (total - bm[i]) / (b - 1)
        loo = 0.5 * (loo + loo.T)
        vals.append(entropy_from_spectrum(eig_symmetric(loo).eigenvalues, L).entropy)
    vals = np.asarray(vals)
    err = math.sqrt((b - 1) / b * float(np.sum((vals - vals.mean()) ** 2)))
    return MCEntropy(spec, err)
