# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled PDHG iteration for the stripe remover.

Same arithmetic, in the same order, as ``_fallback.gsr_iterate``, on flat
pointers with one pass per operator block.
"""

import numpy as np

from libc.math cimport sqrt, fabs

cdef inline double _clip(double v, double lo, double hi) noexcept nogil:
    return hi if v > hi else (lo if v < lo else v)

def gsr_iterate(double[:, :, ::1] u_, const double[:, :, ::1] u0_,
                double[:, :, :, ::1] p_, double[:, :, :, ::1] pbar_,
                double[:, :, :, ::1] q_, double[:, :, :, ::1] qbar_,
                const double[:, :, :, ::1] b_,
                const Py_ssize_t[:, :, ::1] taps, const double[:, ::1] weights,
                const Py_ssize_t[::1] ntaps,
                double mu1, double mu2, double rho_z, bint use_z,
                double tau, double sigma, double theta, Py_ssize_t n_iter):
    """Run ``n_iter`` PDHG steps with dual extrapolation, in place.

    Returns ``(||u_new - u_old||^2, ||u_old||^2)`` of the final step.
    """
    cdef Py_ssize_t nz = u_.shape[0], ny = u_.shape[1], nx = u_.shape[2]
    cdef Py_ssize_t n = nz * ny * nx, plane = ny * nx
    cdef Py_ssize_t ndir = ntaps.shape[0]
    cdef Py_ssize_t it, z, y, x, d, k, i, j
    cdef double g, t, v, un, uo, a, acc, gx, gy, gz, px, py, pz, nrm, scale, val, qo, qn
    cdef double thr = tau * mu2
    cdef double change = 0.0, norm_old = 0.0
    cdef double* u = &u_[0, 0, 0]
    cdef const double* u0 = &u0_[0, 0, 0]
    cdef double* p0 = &p_[0, 0, 0, 0]
    cdef double* p1 = p0 + n
    cdef double* p2 = p0 + 2 * n
    cdef double* b0 = &pbar_[0, 0, 0, 0]
    cdef double* b1 = b0 + n
    cdef double* b2 = b0 + 2 * n
    cdef double* q = &q_[0, 0, 0, 0]
    cdef double* qb = &qbar_[0, 0, 0, 0]
    cdef const double* bb = &b_[0, 0, 0, 0]
    # stencil of direction d fits inside the image iff lo[d] <= (y, x) < hi[d]
    lo_arr = np.zeros((max(ndir, 1), 2), dtype=np.intp)
    hi_arr = np.zeros((max(ndir, 1), 2), dtype=np.intp)
    off_arr = np.zeros((max(ndir, 1), 4), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] lo = lo_arr
    cdef Py_ssize_t[:, ::1] hi = hi_arr
    cdef Py_ssize_t[:, ::1] off = off_arr
    for d in range(ndir):
        lo[d, 0] = 0
        lo[d, 1] = 0
        hi[d, 0] = ny
        hi[d, 1] = nx
        for k in range(ntaps[d]):
            lo[d, 0] = max(lo[d, 0], -taps[d, k, 0])
            lo[d, 1] = max(lo[d, 1], -taps[d, k, 1])
            hi[d, 0] = min(hi[d, 0], ny - taps[d, k, 0])
            hi[d, 1] = min(hi[d, 1], nx - taps[d, k, 1])
            off[d, k] = taps[d, k, 0] * nx + taps[d, k, 1]
    cdef double* gbuf
    gbuf_arr = np.zeros(n)
    cdef double[::1] gmv = gbuf_arr
    gbuf = &gmv[0]
    cdef double* qd
    cdef double* qbd
    cdef const double* bd
    cdef Py_ssize_t ylo, yhi, xlo, xhi, nt
    with nogil:
        for it in range(n_iter):
            change = 0.0
            norm_old = 0.0
            # gbuf <- K^T pbar
            for z in range(nz):
                for y in range(ny):
                    i = z * plane + y * nx
                    for x in range(nx):
                        g = 0.0
                        if x < nx - 1:
                            g = g - b0[i + x]
                        if x > 0:
                            g = g + b0[i + x - 1]
                        if y < ny - 1:
                            g = g - b1[i + x]
                        if y > 0:
                            g = g + b1[i + x - nx]
                        if use_z:
                            if z < nz - 1:
                                g = g - rho_z * b2[i + x]
                            if z > 0:
                                g = g + rho_z * b2[i + x - plane]
                        gbuf[i + x] = g
            for d in range(ndir):
                qbd = qb + d * n
                ylo, yhi, xlo, xhi, nt = lo[d, 0], hi[d, 0], lo[d, 1], hi[d, 1], ntaps[d]
                for z in range(nz):
                    for y in range(ny):
                        i = z * plane + y * nx
                        for x in range(nx):
                            if ylo <= y < yhi and xlo <= x < xhi:
                                t = -qbd[i + x]
                            else:
                                t = 0.0
                            for k in range(nt):
                                j = y - taps[d, k, 0]
                                if j < ylo or j >= yhi:
                                    continue
                                j = x - taps[d, k, 1]
                                if j < xlo or j >= xhi:
                                    continue
                                t = t + weights[d, k] * qbd[i + x - off[d, k]]
                            gbuf[i + x] = gbuf[i + x] + t
            # u <- prox_G(u - tau gbuf)
            for i in range(n):
                uo = u[i]
                v = uo - tau * gbuf[i] - u0[i]
                a = fabs(v) - thr
                if a > 0.0:
                    un = u0[i] + (a if v > 0.0 else -a)
                else:
                    un = u0[i] + 0.0
                un = _clip(un, 0.0, 1.0)
                change += (un - uo) * (un - uo)
                norm_old += uo * uo
                u[i] = un
            # p <- proj(p + sigma grad u), pbar <- extrapolation
            for z in range(nz):
                for y in range(ny):
                    i = z * plane + y * nx
                    for x in range(nx):
                        gx = u[i + x + 1] - u[i + x] if x < nx - 1 else 0.0
                        gy = u[i + x + nx] - u[i + x] if y < ny - 1 else 0.0
                        if use_z and z < nz - 1:
                            gz = rho_z * (u[i + x + plane] - u[i + x])
                        else:
                            gz = 0.0
                        px = p0[i + x] + sigma * gx
                        py = p1[i + x] + sigma * gy
                        pz = p2[i + x] + sigma * gz
                        nrm = sqrt(px * px + py * py + pz * pz)
                        scale = mu1 / (nrm if nrm > mu1 else mu1)
                        px = px * scale
                        py = py * scale
                        pz = pz * scale
                        b0[i + x] = px + theta * (px - p0[i + x])
                        b1[i + x] = py + theta * (py - p1[i + x])
                        b2[i + x] = pz + theta * (pz - p2[i + x])
                        p0[i + x] = px
                        p1[i + x] = py
                        p2[i + x] = pz
            # q <- clip(q + sigma (D u - b))
            for d in range(ndir):
                qd = q + d * n
                qbd = qb + d * n
                bd = bb + d * n
                ylo, yhi, xlo, xhi, nt = lo[d, 0], hi[d, 0], lo[d, 1], hi[d, 1], ntaps[d]
                for z in range(nz):
                    for y in range(ny):
                        i = z * plane + y * nx
                        for x in range(nx):
                            if ylo <= y < yhi and xlo <= x < xhi:
                                acc = 0.0
                                for k in range(nt):
                                    acc = acc + weights[d, k] * u[i + x + off[d, k]]
                                val = acc - u[i + x]
                            else:
                                val = 0.0
                            qo = qd[i + x]
                            qn = _clip(qo + sigma * val - sigma * bd[i + x], -1.0, 1.0)
                            qbd[i + x] = qn + theta * (qn - qo)
                            qd[i + x] = qn
    return change, norm_old
