# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled swarm kernel; operation-for-operation twin of ``_kernel_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, sqrt, fabs

cnp.import_array()

NAME = "cython"
cdef double TWO_PI = 6.283185307179586


cdef inline double _cost(const double[:] x, const double[:, :] ref,
                         const double[:] dists, const double[:] weights) noexcept nogil:
    cdef Py_ssize_t k
    cdef double s = 0.0, dx, dy, r
    cdef double x0 = x[0], x1 = x[1]
    for k in range(dists.shape[0]):
        dx = x0 - ref[k, 0]
        dy = x1 - ref[k, 1]
        r = dists[k] - sqrt(dx * dx + dy * dy)
        s += weights[k] * r * r
    return s


def ranging_cost(x, ref, dists, weights):
    cdef double[:] xv = np.ascontiguousarray(x, dtype=np.float64)
    return _cost(xv, np.ascontiguousarray(ref, dtype=np.float64),
                 np.ascontiguousarray(dists, dtype=np.float64),
                 np.ascontiguousarray(weights, dtype=np.float64))


def run_swarm_ranging(ref, dists, weights, double[:, ::1] pos, double[:, ::1] vel,
                      draws, sca_prob, omega, amp, double c1, double c2, double vmax,
                      lo, hi):
    """Hybrid SCA/PSO loop on the weighted ranging cost; see ``_kernel_py``."""
    cdef const double[:, :] R = np.ascontiguousarray(ref, dtype=np.float64).reshape(-1, 2)
    cdef const double[:] Dk = np.ascontiguousarray(dists, dtype=np.float64)
    cdef const double[:] Wk = np.ascontiguousarray(weights, dtype=np.float64)
    cdef const double[:, :, :] U = np.ascontiguousarray(draws, dtype=np.float64)
    cdef const double[:] P = np.ascontiguousarray(sca_prob, dtype=np.float64)
    cdef const double[:] Om = np.ascontiguousarray(omega, dtype=np.float64)
    cdef const double[:] Am = np.ascontiguousarray(amp, dtype=np.float64)
    cdef const double[:] Lo = np.ascontiguousarray(lo, dtype=np.float64)
    cdef const double[:] Hi = np.ascontiguousarray(hi, dtype=np.float64)

    cdef Py_ssize_t n = pos.shape[0], ndim = pos.shape[1], n_iter = P.shape[0]
    if ndim != 2:
        raise ValueError("the compiled ranging kernel is two-dimensional")
    if U.shape[0] != n_iter or U.shape[1] != n or U.shape[2] != 4:
        raise ValueError("draws must have shape (T, n, 4)")

    pbest_arr = np.array(pos, dtype=np.float64)
    pf_arr = np.empty(n, dtype=np.float64)
    trace_arr = np.empty(n_iter, dtype=np.float64)
    g_arr = np.empty(ndim, dtype=np.float64)
    cdef double[:, ::1] PB = pbest_arr
    cdef double[::1] PF = pf_arr
    cdef double[::1] trace = trace_arr
    cdef double[::1] g = g_arr

    cdef Py_ssize_t i, d, t, best
    cdef long n_sca = 0
    cdef double gf, bf, f, s, u1, u2, u3, vd, xd, r1, r3, trig, w

    with nogil:
        for i in range(n):
            PF[i] = _cost(pos[i], R, Dk, Wk)
        best = 0
        for i in range(1, n):
            if PF[i] < PF[best]:
                best = i
        for d in range(ndim):
            g[d] = PB[best, d]
        gf = PF[best]

        for t in range(n_iter):
            w = Om[t]
            r1 = Am[t]
            for i in range(n):
                s = U[t, i, 0]
                u1 = U[t, i, 1]
                u2 = U[t, i, 2]
                u3 = U[t, i, 3]
                if s < P[t]:
                    r3 = 2.0 * u2 - 1.0
                    if u3 < 0.5:
                        trig = sin(TWO_PI * u1)
                    else:
                        trig = cos(TWO_PI * u1)
                    for d in range(ndim):
                        xd = pos[i, d] + r1 * trig * fabs(r3 * g[d] - pos[i, d])
                        if xd < Lo[d]:
                            xd = Lo[d]
                        elif xd > Hi[d]:
                            xd = Hi[d]
                        pos[i, d] = xd
                    n_sca += 1
                else:
                    for d in range(ndim):
                        vd = w * vel[i, d] + c1 * u1 * (PB[i, d] - pos[i, d]) + c2 * u2 * (g[d] - pos[i, d])
                        if vd > vmax:
                            vd = vmax
                        elif vd < -vmax:
                            vd = -vmax
                        xd = pos[i, d] + vd
                        if xd < Lo[d]:
                            xd = Lo[d]
                        elif xd > Hi[d]:
                            xd = Hi[d]
                        pos[i, d] = xd
                        vel[i, d] = vd
                f = _cost(pos[i], R, Dk, Wk)
                if f < PF[i]:
                    PF[i] = f
                    for d in range(ndim):
                        PB[i, d] = pos[i, d]
            best = -1
            bf = gf
            for i in range(n):
                if PF[i] < bf:
                    bf = PF[i]
                    best = i
            if best >= 0:
                for d in range(ndim):
                    g[d] = PB[best, d]
                gf = bf
            trace[t] = gf

    return g_arr, gf, trace_arr, pbest_arr, pf_arr, n_sca
