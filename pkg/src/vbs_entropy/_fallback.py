"""Pure NumPy versions of the hot kernels.

Semantics match :mod:`vbs_entropy._kernels` exactly (same rotation order,
same random stream consumption); only speed differs.
"""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigh(a, tol, max_sweeps):
    """Cyclic Jacobi on a copy of the symmetric matrix ``a``.

    Returns ``(diag, vectors, sweeps, off)`` where ``off`` is the final
    off-diagonal Frobenius norm.  ``sweeps == max_sweeps + 1`` flags
    non-convergence.
    """
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    off = _off_norm(a)
    sweeps = 0
    while off > tol:
        if sweeps == max_sweeps:
            return np.diag(a).copy(), v, max_sweeps + 1, off
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                g = 100.0 * abs(apq)
                if sweeps > 4 and abs(a[p, p]) + g == abs(a[p, p]) and abs(a[q, q]) + g == abs(a[q, q]):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                akp = a[:, p].copy()
                akq = a[:, q].copy()
                newp = c * akp - s * akq
                newq = s * akp + c * akq
                newp[p] = a[p, p] - t * apq
                newq[q] = a[q, q] + t * apq
                newp[q] = 0.0
                newq[p] = 0.0
                a[:, p] = newp
                a[:, q] = newq
                a[p, :] = newp
                a[q, :] = newq
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
        off = _off_norm(a)
    return np.diag(a).copy(), v, sweeps, off


def _off_norm(a):
    o = a.copy()
    np.fill_diagonal(o, 0.0)
    return float(np.linalg.norm(o))


def weighted_uniform_chunk(u, bonds, boundary):
    """Vectorized counterpart of the compiled sample evaluator."""
    u = np.asarray(u, dtype=np.float64)
    ns = u.shape[0]
    z = 2.0 * u[:, 0::2] - 1.0
    phi = 2.0 * math.pi * u[:, 1::2]
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    cp, sp = np.cos(phi), np.sin(phi)
    xyz = np.stack([r * cp, r * sp, z], axis=-1)
    bonds = np.asarray(bonds, dtype=np.intp).reshape(-1, 2)
    if len(bonds):
        dots = np.einsum("sbk,sbk->sb", xyz[:, bonds[:, 0]], xyz[:, bonds[:, 1]])
        w = np.prod(1.0 - dots, axis=1)
    else:
        w = np.ones(ns)
    psi_p = np.ones((ns, 1), dtype=complex)
    psi_m = np.ones((ns, 1), dtype=complex)
    for v in np.asarray(boundary, dtype=np.intp):
        zz = z[:, v]
        cu = np.sqrt(np.clip(0.5 * (1.0 + zz), 0.0, None))
        su = np.sqrt(np.clip(0.5 * (1.0 - zz), 0.0, None))
        e = cp[:, v] + 1j * sp[:, v]
        chi_p = np.stack([cu + 0j, e * su], axis=1)
        chi_m = np.stack([su + 0j, -e * cu], axis=1)
        psi_p = (psi_p[:, :, None] * chi_p[:, None, :]).reshape(ns, -1)
        psi_m = (psi_m[:, :, None] * chi_m[:, None, :]).reshape(ns, -1)
    return (
        w,
        np.stack([psi_p.real, psi_p.imag]),
        np.stack([psi_m.real, psi_m.imag]),
    )


def metropolis_chunk(state, offsets, neighbors, boundary, u, cos_step, sweeps_per_sample):
    """Pure-Python Metropolis chain; same proposal and acceptance as compiled."""
    nv = state.shape[0]
    per_sample = nv * sweeps_per_sample
    ns = u.shape[0] // per_sample
    out = np.empty((ns, len(boundary), 3))
    accepted = 0
    row = 0
    for i in range(ns):
        for _ in range(sweeps_per_sample):
            for v in range(nv):
                ct = cos_step + (1.0 - cos_step) * u[row, 0]
                st = math.sqrt(1.0 - ct * ct) if ct * ct < 1.0 else 0.0
                phi = 2.0 * math.pi * u[row, 1]
                nx, ny, nz = state[v]
                if abs(nx) < 0.9:
                    e1 = np.array([0.0, nz, -ny])
                else:
                    e1 = np.array([-nz, 0.0, nx])
                e1 /= math.sqrt(e1 @ e1)
                n = np.array([nx, ny, nz])
                e2 = np.cross(n, e1)
                prop = st * math.cos(phi) * e1 + st * math.sin(phi) * e2 + ct * n
                prop /= math.sqrt(prop @ prop)
                w_old = 1.0
                w_new = 1.0
                for k in range(offsets[v], offsets[v + 1]):
                    other = state[neighbors[k]]
                    w_old *= 1.0 - n @ other
                    w_new *= 1.0 - prop @ other
                if w_old <= 0.0 or u[row, 2] * w_old < w_new:
                    state[v] = prop
                    accepted += 1
                row += 1
        out[i] = state[np.asarray(boundary, dtype=np.intp)]
    return out, accepted
