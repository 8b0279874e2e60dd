"""Hybrid SCA/PSO optimizer.

Schedules, single-particle steps, the module selector, and ``optimize``, the
generic minimization loop. Any objective works with ``optimize``; a
:class:`RangingFitness` objective runs on the compiled kernel when it is
available.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _backend, _kernel_py
from .errors import ConfigError, EmptyNeighborhood

DRAWS_PER_STEP = 4


@dataclass(frozen=True)
class SwarmParams:
    """Optimizer constants. Defaults are the tuned AdapSCA-PSO settings."""

    omega_max: float = 0.9
    omega_min: float = 0.4
    c1: float = 2.2
    c2: float = 1.8
    a: float = 2.5
    beta: float = 3.0
    max_iters: int = 60
    n_particles: int = 30
    delta: float = 0.5
    comm_range: float = 30.0

    def __post_init__(self):
        if not self.omega_max >= self.omega_min > 0:
            raise ConfigError("need omega_max >= omega_min > 0")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ConfigError("max_iters must be an integer >= 1")
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ConfigError("n_particles must be an integer >= 1")
        if not self.a > 0:
            raise ConfigError("a must be positive")
        if not self.beta >= 0:
            raise ConfigError("beta must be non-negative")
        if not self.comm_range > 0:
            raise ConfigError("comm_range must be positive")
        if not self.delta >= 0:
            raise ConfigError("delta must be non-negative")


class Module(str, enum.Enum):
    SCA = "sca"
    PSO = "pso"


@dataclass(frozen=True)
class ExponentialSelector:
    """SCA with probability ``exp(-beta * t / T)``, otherwise PSO."""

    def sca_probability(self, t: float, p: SwarmParams) -> float:
        return math.exp(-p.beta * t / p.max_iters)


@dataclass(frozen=True)
class FixedSelector:
    """SCA with a constant probability at every iteration."""

    prob: float

    def sca_probability(self, t: float, p: SwarmParams) -> float:
        return self.prob


ADAPTIVE = ExponentialSelector()
PSO_ONLY = FixedSelector(0.0)
HALF_AND_HALF = FixedSelector(0.5)


@dataclass
class Particle:
    pos: np.ndarray
    vel: np.ndarray
    pbest: np.ndarray
    pbest_fitness: float = math.inf

    @classmethod
    def at(cls, pos, vel=None) -> "Particle":
        pos = np.asarray(pos, dtype=float)
        vel = np.zeros_like(pos) if vel is None else np.asarray(vel, dtype=float)
        return cls(pos.copy(), vel.copy(), pos.copy())


@dataclass(frozen=True)
class Bounds:
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "Bounds":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ConfigError("bounds need matching shapes and lo <= hi")
        return cls(lo, hi)

    @classmethod
    def unbounded(cls, dim: int = 2) -> "Bounds":
        return cls(np.full(dim, -math.inf), np.full(dim, math.inf))

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))


@dataclass
class Trace:
    best_fitness_per_iter: np.ndarray

    def __len__(self):
        return len(self.best_fitness_per_iter)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "best_fitness"])
        for t, f in enumerate(self.best_fitness_per_iter):
            w.writerow([t, repr(float(f))])
        return buf.getvalue()


@dataclass
class OptimizeResult:
    best: np.ndarray
    best_fitness: float
    trace: Trace
    particles: list[Particle] = field(repr=False, default_factory=list)
    n_sca_steps: int = 0

    def __iter__(self):
        # unpacks as (best, best_fitness, trace)
        return iter((self.best, self.best_fitness, self.trace))


@dataclass(frozen=True)
class RangingFitness:
    """``sum_k w_k * (d_k - |x - ref_k|)^2`` over reference points."""

    ref: np.ndarray
    dists: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if len(self.dists) == 0:
            raise EmptyNeighborhood("ranging fitness needs at least one reference")

    @classmethod
    def of(cls, ref, dists, weights) -> "RangingFitness":
        return cls(np.ascontiguousarray(ref, dtype=float).reshape(-1, 2),
                   np.ascontiguousarray(dists, dtype=float),
                   np.ascontiguousarray(weights, dtype=float))

    def __call__(self, x) -> float:
        return _kernel_py.ranging_cost(
            [float(x[0]), float(x[1])], self.ref.tolist(),
            self.dists.tolist(), self.weights.tolist())


def inertia_weight(t: float, p: SwarmParams) -> float:
    return p.omega_max - (p.omega_max - p.omega_min) / p.max_iters * t


def sca_amplitude(t: float, p: SwarmParams) -> float:
    return p.a * (1 - t / p.max_iters)


def select_module(t: float, p: SwarmParams, rng: np.random.Generator,
                  policy=ADAPTIVE) -> Module:
    s = rng.random()
    return Module.SCA if s < policy.sca_probability(t, p) else Module.PSO


def _clip_bounds(bounds: Bounds | None, dim: int) -> tuple[list, list]:
    b = bounds if bounds is not None else Bounds.unbounded(dim)
    return b.lo.tolist(), b.hi.tolist()


def pso_step(pt: Particle, g, omega: float, p: SwarmParams,
             rng: np.random.Generator, bounds: Bounds | None = None) -> Particle:
    """Velocity/position update toward the personal and global bests.

    Two uniforms are drawn, one per attraction term, shared across dimensions.
    Velocity is clamped to ``[-L, L]`` per component before it is applied.
    """
    ua, ub = rng.random(2)
    lo, hi = _clip_bounds(bounds, len(pt.pos))
    x, v = _kernel_py.pso_update(pt.pos.tolist(), pt.vel.tolist(), pt.pbest.tolist(),
                                 np.asarray(g, dtype=float).tolist(), omega, p.c1, p.c2,
                                 float(ua), float(ub), p.comm_range, lo, hi)
    return Particle(np.array(x), np.array(v), pt.pbest.copy(), pt.pbest_fitness)


def sca_step(pt: Particle, g, t: float, p: SwarmParams,
             rng: np.random.Generator, bounds: Bounds | None = None) -> Particle:
    """Sine/cosine move around the global best; velocity is left untouched."""
    u1, u2, u3 = rng.random(3)
    lo, hi = _clip_bounds(bounds, len(pt.pos))
    x = _kernel_py.sca_update(pt.pos.tolist(), np.asarray(g, dtype=float).tolist(),
                              sca_amplitude(t, p), float(u1), float(u2), float(u3), lo, hi)
    return Particle(np.array(x), pt.vel.copy(), pt.pbest.copy(), pt.pbest_fitness)


def schedules(p: SwarmParams, policy=ADAPTIVE) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-iteration SCA probability, inertia weight and SCA amplitude."""
    ts = range(p.max_iters)
    return (np.array([policy.sca_probability(t, p) for t in ts]),
            np.array([inertia_weight(t, p) for t in ts]),
            np.array([sca_amplitude(t, p) for t in ts]))


def optimize_arrays(fitness: Callable, pos: np.ndarray, vel: np.ndarray, bounds: Bounds,
                    p: SwarmParams, policy, rng: np.random.Generator,
                    backend=None) -> OptimizeResult:
    """Array form of :func:`optimize`; ``pos``/``vel`` are ``(n, D)`` arrays."""
    pos = np.array(pos, dtype=float)
    vel = np.array(vel, dtype=float)
    if pos.ndim != 2 or len(pos) == 0:
        raise ValueError("need a non-empty (n, D) array of initial positions")
    n = len(pos)
    draws = rng.random((p.max_iters, n, DRAWS_PER_STEP))
    prob, omega, amp = schedules(p, policy)
    kernel = backend if backend is not None else _backend.kernel
    common = (pos, vel, draws, prob, omega, amp, p.c1, p.c2, p.comm_range, bounds.lo, bounds.hi)
    if isinstance(fitness, RangingFitness) and pos.shape[1] == 2:
        out = kernel.run_swarm_ranging(fitness.ref, fitness.dists, fitness.weights, *common)
    else:
        out = _kernel_py.run_swarm(fitness, *common)
    g, gf, trace, pbest, pbest_f, n_sca = out
    particles = [Particle(pos[i].copy(), vel[i].copy(), pbest[i].copy(), float(pbest_f[i]))
                 for i in range(n)]
    return OptimizeResult(np.asarray(g, dtype=float), float(gf), Trace(np.asarray(trace)),
                          particles, int(n_sca))


def optimize(fitness: Callable, init: Sequence[Particle], bounds: Bounds,
             p: SwarmParams, policy=ADAPTIVE,
             rng: np.random.Generator | None = None) -> OptimizeResult:
    """Minimize ``fitness`` for ``p.max_iters`` sweeps.

    Each sweep moves every particle with the module chosen by ``policy``
    (independently per particle), updates personal bests, then updates the
    global best once the sweep is done. The trace holds the global-best
    fitness after each sweep.
    """
    if not init:
        raise ValueError("optimize needs at least one particle")
    if rng is None:
        rng = np.random.default_rng()
    pos = np.array([pt.pos for pt in init], dtype=float)
    vel = np.array([pt.vel for pt in init], dtype=float)
    return optimize_arrays(fitness, pos, vel, bounds, p, policy, rng)
