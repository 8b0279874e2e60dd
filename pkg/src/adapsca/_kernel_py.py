"""Pure-Python swarm kernel.

Reference implementation of the hybrid SCA/PSO loop and the fallback used
when the compiled extension is unavailable. ``_kernel.pyx`` mirrors every
floating-point operation here in the same order, so both backends return
bit-identical results for the same draws.

Random draws are supplied up front as an array of shape ``(T, n, 4)``; each
particle-iteration consumes the row ``(s, u1, u2, u3)``:

* ``s`` picks the module (SCA iff ``s < sca_prob[t]``),
* PSO uses ``u1, u2`` as the two attraction factors,
* SCA maps ``u1 -> r2 = 2*pi*u1``, ``u2 -> r3 = 2*u2 - 1``, ``u3 -> r4``.
"""
from __future__ import annotations

import math

import numpy as np

TWO_PI = 6.283185307179586
NAME = "python"


def pso_update(x, v, pb, g, omega, c1, c2, ua, ub, vmax, lo, hi):
    """One PSO move. Returns new ``(x, v)`` lists."""
    nx = []
    nv = []
    for d in range(len(x)):
        vd = omega * v[d] + c1 * ua * (pb[d] - x[d]) + c2 * ub * (g[d] - x[d])
        if vd > vmax:
            vd = vmax
        elif vd < -vmax:
            vd = -vmax
        xd = x[d] + vd
        if xd < lo[d]:
            xd = lo[d]
        elif xd > hi[d]:
            xd = hi[d]
        nx.append(xd)
        nv.append(vd)
    return nx, nv


def sca_update(x, g, r1, u1, u2, u3, lo, hi):
    """One SCA move with amplitude ``r1``. Returns the new position list."""
    r2 = TWO_PI * u1
    r3 = 2.0 * u2 - 1.0
    if u3 < 0.5:
        trig = math.sin(r2)
    else:
        trig = math.cos(r2)
    nx = []
    for d in range(len(x)):
        xd = x[d] + r1 * trig * abs(r3 * g[d] - x[d])
        if xd < lo[d]:
            xd = lo[d]
        elif xd > hi[d]:
            xd = hi[d]
        nx.append(xd)
    return nx


def ranging_cost(x, ref, dists, weights):
    """Weighted squared range residual of a 2-D point."""
    s = 0.0
    x0 = x[0]
    x1 = x[1]
    for k in range(len(dists)):
        dx = x0 - ref[k][0]
        dy = x1 - ref[k][1]
        r = dists[k] - math.sqrt(dx * dx + dy * dy)
        s += weights[k] * r * r
    return s


def run_swarm(fitness, pos, vel, draws, sca_prob, omega, amp, c1, c2, vmax, lo, hi):
    """Run ``len(sca_prob)`` sweeps of the hybrid loop.

    ``pos`` and ``vel`` (``(n, D)`` float arrays) are updated in place.
    Returns ``(gbest, gbest_f, trace, pbest, pbest_f, n_sca)``.
    """
    X = pos.tolist()
    V = vel.tolist()
    R = draws.tolist()
    P = np.asarray(sca_prob, dtype=float).tolist()
    W = np.asarray(omega, dtype=float).tolist()
    A = np.asarray(amp, dtype=float).tolist()
    lo = np.asarray(lo, dtype=float).tolist()
    hi = np.asarray(hi, dtype=float).tolist()
    c1 = float(c1)
    c2 = float(c2)
    vmax = float(vmax)
    n = len(X)
    n_iter = len(P)

    PB = [list(x) for x in X]
    PF = [float(fitness(x)) for x in X]
    best = 0
    for i in range(1, n):
        if PF[i] < PF[best]:
            best = i
    g = list(PB[best])
    gf = PF[best]

    trace = []
    n_sca = 0
    for t in range(n_iter):
        rows = R[t]
        for i in range(n):
            s, u1, u2, u3 = rows[i]
            if s < P[t]:
                X[i] = sca_update(X[i], g, A[t], u1, u2, u3, lo, hi)
                n_sca += 1
            else:
                X[i], V[i] = pso_update(X[i], V[i], PB[i], g, W[t], c1, c2, u1, u2, vmax, lo, hi)
            f = float(fitness(X[i]))
            if f < PF[i]:
                PF[i] = f
                PB[i] = list(X[i])
        best = -1
        bf = gf
        for i in range(n):
            if PF[i] < bf:
                bf = PF[i]
                best = i
        if best >= 0:
            g = list(PB[best])
            gf = bf
        trace.append(gf)

    pos[...] = X
    vel[...] = V
    return (np.array(g), gf, np.array(trace, dtype=float),
            np.array(PB, dtype=float).reshape(pos.shape), np.array(PF), n_sca)


def run_swarm_ranging(ref, dists, weights, pos, vel, draws, sca_prob, omega, amp,
                      c1, c2, vmax, lo, hi):
    R = np.asarray(ref, dtype=float).tolist()
    D = np.asarray(dists, dtype=float).tolist()
    Wt = np.asarray(weights, dtype=float).tolist()
    return run_swarm(lambda x: ranging_cost(x, R, D, Wt), pos, vel, draws,
                     sca_prob, omega, amp, c1, c2, vmax, lo, hi)
