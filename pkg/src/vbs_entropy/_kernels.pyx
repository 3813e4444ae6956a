# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: cyclic Jacobi and Monte Carlo sample evaluation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, cos, sin, M_PI

cnp.import_array()


cdef double _off_norm(double[:, ::1] a, Py_ssize_t n):
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            s += a[i, j] * a[i, j]
    return sqrt(2.0 * s)


def jacobi_eigh(a_in, double tol, int max_sweeps):
    """Cyclic Jacobi; see ``_fallback.jacobi_eigh`` for the contract."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] a_arr = np.array(a_in, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = a_arr.shape[0]
    cdef cnp.ndarray[double, ndim=2, mode="c"] vt_arr = np.eye(n)
    cdef double[:, ::1] a = a_arr
    cdef double[:, ::1] vt = vt_arr
    cdef Py_ssize_t p, q, k
    cdef double apq, tau, t, c, s, akp, akq, g
    cdef int sweeps = 0
    cdef double off = _off_norm(a, n)
    while off > tol:
        if sweeps == max_sweeps:
            return np.diag(a_arr).copy(), vt_arr.T.copy(), max_sweeps + 1, off
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                g = 100.0 * fabs(apq)
                if sweeps > 4 and fabs(a[p, p]) + g == fabs(a[p, p]) and fabs(a[q, q]) + g == fabs(a[q, q]):
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0:
                    t = 1.0 / (tau + sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + sqrt(1.0 + tau * tau))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                    a[p, k] = a[k, p]
                    a[q, k] = a[k, q]
                a[p, p] = a[p, p] - t * apq
                a[q, q] = a[q, q] + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    akp = vt[p, k]
                    akq = vt[q, k]
                    vt[p, k] = c * akp - s * akq
                    vt[q, k] = s * akp + c * akq
        off = _off_norm(a, n)
    return np.diag(a_arr).copy(), vt_arr.T.copy(), sweeps, off


def weighted_uniform_chunk(
    const double[:, ::1] u,
    const int[:, ::1] bonds,
    const int[::1] boundary,
):
    """Evaluate one chunk of weighted-uniform samples.

    ``u`` has shape ``(samples, 2 * vertices)`` of uniforms in [0, 1).  Returns
    ``(weights, psi_plus, psi_minus)`` where ``psi_*`` are the real and
    imaginary parts stacked as ``(2, samples, 2**L)`` Kronecker products of
    the boundary spinors of ``+Omega`` and ``-Omega``.
    """
    cdef Py_ssize_t ns = u.shape[0]
    cdef Py_ssize_t nv = u.shape[1] // 2
    cdef Py_ssize_t nb = bonds.shape[0]
    cdef Py_ssize_t L = boundary.shape[0]
    cdef Py_ssize_t dim = 1 << L
    cdef cnp.ndarray[double, ndim=1] w_arr = np.empty(ns)
    cdef cnp.ndarray[double, ndim=3] pp_arr = np.empty((2, ns, dim))
    cdef cnp.ndarray[double, ndim=3] pm_arr = np.empty((2, ns, dim))
    cdef double[::1] w = w_arr
    cdef double[:, :, ::1] pp = pp_arr
    cdef double[:, :, ::1] pm = pm_arr
    cdef cnp.ndarray[double, ndim=2] xyz_arr = np.empty((nv, 3))
    cdef cnp.ndarray[double, ndim=2] phase_arr = np.empty((nv, 2))
    cdef double[:, ::1] xyz = xyz_arr
    cdef double[:, ::1] ph = phase_arr
    cdef Py_ssize_t i, v, b, k, j, size
    cdef double z, r, phi, wt, cu, su, cp, sp
    cdef double ar, ai, br, bi
    for i in range(ns):
        for v in range(nv):
            z = 2.0 * u[i, 2 * v] - 1.0
            phi = 2.0 * M_PI * u[i, 2 * v + 1]
            r = sqrt(1.0 - z * z) if z * z < 1.0 else 0.0
            cp = cos(phi)
            sp = sin(phi)
            xyz[v, 0] = r * cp
            xyz[v, 1] = r * sp
            xyz[v, 2] = z
            ph[v, 0] = cp
            ph[v, 1] = sp
        wt = 1.0
        for b in range(nb):
            wt *= 1.0 - (xyz[bonds[b, 0], 0] * xyz[bonds[b, 1], 0]
                         + xyz[bonds[b, 0], 1] * xyz[bonds[b, 1], 1]
                         + xyz[bonds[b, 0], 2] * xyz[bonds[b, 1], 2])
        w[i] = wt
        pp[0, i, 0] = 1.0
        pp[1, i, 0] = 0.0
        pm[0, i, 0] = 1.0
        pm[1, i, 0] = 0.0
        size = 1
        for k in range(L):
            v = boundary[k]
            z = xyz[v, 2]
            cu = sqrt(0.5 * (1.0 + z)) if z > -1.0 else 0.0
            su = sqrt(0.5 * (1.0 - z)) if z < 1.0 else 0.0
            cp = ph[v, 0]
            sp = ph[v, 1]
            # expand in place from the back: entry j -> (2j, 2j+1)
            for j in range(size - 1, -1, -1):
                ar = pp[0, i, j]
                ai = pp[1, i, j]
                # chi_plus = (cu, e^{i phi} su)
                pp[0, i, 2 * j] = ar * cu
                pp[1, i, 2 * j] = ai * cu
                pp[0, i, 2 * j + 1] = su * (ar * cp - ai * sp)
                pp[1, i, 2 * j + 1] = su * (ar * sp + ai * cp)
                br = pm[0, i, j]
                bi = pm[1, i, j]
                # chi_minus = (su, -e^{i phi} cu)
                pm[0, i, 2 * j] = br * su
                pm[1, i, 2 * j] = bi * su
                pm[0, i, 2 * j + 1] = -cu * (br * cp - bi * sp)
                pm[1, i, 2 * j + 1] = -cu * (br * sp + bi * cp)
            size *= 2
    return w_arr, pp_arr, pm_arr


def metropolis_chunk(
    double[:, ::1] state,
    const int[::1] offsets,
    const int[::1] neighbors,
    const int[::1] boundary,
    const double[:, ::1] u,
    double cos_step,
    int sweeps_per_sample,
):
    """Advance a single-site Metropolis chain and record boundary directions.

    ``state`` (vertices x 3) is updated in place.  ``u`` holds three uniforms
    per proposed update, consumed in vertex order; its length fixes the number
    of recorded samples as ``len(u) // (vertices * sweeps_per_sample)``.
    Returns ``(boundary_points, accepted)``.
    """
    cdef Py_ssize_t nv = state.shape[0]
    cdef Py_ssize_t L = boundary.shape[0]
    cdef Py_ssize_t per_sample = nv * sweeps_per_sample
    cdef Py_ssize_t ns = u.shape[0] // per_sample
    cdef cnp.ndarray[double, ndim=3] out_arr = np.empty((ns, L, 3))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, sw, v, k, j, row = 0
    cdef long accepted = 0
    cdef double ct, st, phi, nx, ny, nz, e1x, e1y, e1z, e2x, e2y, e2z, norm
    cdef double px, py, pz, w_old, w_new, d_old, d_new
    for i in range(ns):
        for sw in range(sweeps_per_sample):
            for v in range(nv):
                ct = cos_step + (1.0 - cos_step) * u[row, 0]
                st = sqrt(1.0 - ct * ct) if ct * ct < 1.0 else 0.0
                phi = 2.0 * M_PI * u[row, 1]
                nx = state[v, 0]
                ny = state[v, 1]
                nz = state[v, 2]
                if fabs(nx) < 0.9:
                    # e1 = n x (1,0,0)
                    e1x = 0.0
                    e1y = nz
                    e1z = -ny
                else:
                    # e1 = n x (0,1,0)
                    e1x = -nz
                    e1y = 0.0
                    e1z = nx
                norm = sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
                e1x /= norm
                e1y /= norm
                e1z /= norm
                e2x = ny * e1z - nz * e1y
                e2y = nz * e1x - nx * e1z
                e2z = nx * e1y - ny * e1x
                px = st * cos(phi) * e1x + st * sin(phi) * e2x + ct * nx
                py = st * cos(phi) * e1y + st * sin(phi) * e2y + ct * ny
                pz = st * cos(phi) * e1z + st * sin(phi) * e2z + ct * nz
                norm = sqrt(px * px + py * py + pz * pz)
                px /= norm
                py /= norm
                pz /= norm
                w_old = 1.0
                w_new = 1.0
                for k in range(offsets[v], offsets[v + 1]):
                    j = neighbors[k]
                    d_old = nx * state[j, 0] + ny * state[j, 1] + nz * state[j, 2]
                    d_new = px * state[j, 0] + py * state[j, 1] + pz * state[j, 2]
                    w_old *= 1.0 - d_old
                    w_new *= 1.0 - d_new
                if w_old <= 0.0 or u[row, 2] * w_old < w_new:
                    state[v, 0] = px
                    state[v, 1] = py
                    state[v, 2] = pz
                    accepted += 1
                row += 1
        for k in range(L):
            v = boundary[k]
            out[i, k, 0] = state[v, 0]
            out[i, k, 1] = state[v, 1]
            out[i, k, 2] = state[v, 2]
    return out_arr, accepted
