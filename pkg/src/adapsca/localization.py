"""AdapSCA-PSO node localizer.

Unknown nodes are solved one at a time with the hybrid swarm. Particles start
inside the one-hop disk of the node's nearest anchor, and the objective is the
weighted range residual to the node's one-hop neighbors.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import groupby

import numpy as np

from .errors import EmptyNeighborhood
from .network import CommGraph, Deployment, measure_distance, nearest_anchor
from .rng import child_key, stream
from .swarm import (ADAPTIVE, Bounds, Particle, RangingFitness, SwarmParams, Trace,
                    optimize_arrays)

ANCHOR_WEIGHT = 0.8
UNKNOWN_WEIGHT = 0.2

# LocalizationResult.status values
OK = "ok"
UNREACHABLE = "unreachable"
EMPTY_CONTEXT = "empty_context"
AMBIGUOUS = "ambiguous_geometry"
DEGENERATE = "degenerate_geometry"


@dataclass(frozen=True)
class NeighborContext:
    ids: tuple[int, ...]
    dists: np.ndarray
    positions: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.ids)

    def fitness(self) -> RangingFitness:
        return RangingFitness.of(self.positions, self.dists, self.weights)


@dataclass
class LocalizationResult:
    estimates: dict[int, np.ndarray] = field(default_factory=dict)
    skipped: list[int] = field(default_factory=list)
    per_node_fitness: dict[int, float] = field(default_factory=dict)
    # total objective weight per node; fitness / weight is a mean squared residual
    fitness_weight: dict[int, float] = field(default_factory=dict)
    status: dict[int, str] = field(default_factory=dict)

    def to_csv(self, d: Deployment, method: str | None = None, header: bool = True) -> str:
        """One row per unknown node: truth, estimate, error and status."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = ["node_id", "true_x", "true_y", "est_x", "est_y", "error_m", "status"]
        if header:
            w.writerow((["method"] if method else []) + cols)
        for u in d.unknowns:
            tx, ty = d.nodes[u].true_pos
            if u in self.estimates:
                ex, ey = (float(c) for c in self.estimates[u])
                row = [u, repr(tx), repr(ty), repr(ex), repr(ey),
                       repr(math.hypot(ex - tx, ey - ty)), self.status.get(u, OK)]
            else:
                row = [u, repr(tx), repr(ty), "", "", "", self.status.get(u, UNREACHABLE)]
            w.writerow(([method] if method else []) + row)
        return buf.getvalue()


def fitness_eq9(candidate, ctx: NeighborContext) -> float:
    """Weighted squared mismatch between measured and candidate neighbor ranges."""
    if len(ctx) == 0:
        raise EmptyNeighborhood("node has no usable one-hop neighbor")
    return ctx.fitness()(candidate)


def _disk_samples(center: np.ndarray, radius: float, n: int,
                  rng: np.random.Generator) -> np.ndarray:
    # rejection from the circumscribing square: exactly uniform over the disk
    out = np.empty((0, 2))
    while len(out) < n:
        cand = rng.uniform(-radius, radius, size=(2 * n, 2))
        keep = cand[(cand ** 2).sum(axis=1) <= radius * radius]
        out = np.vstack([out, keep])
    return center + out[:n]


def init_arrays(node: int, g: CommGraph, d: Deployment, p: SwarmParams,
                rng: np.random.Generator, clamp: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Hop-aware starting positions and velocities as ``(n, 2)`` arrays."""
    anchor, hops = nearest_anchor(g, node)
    center = np.array(d.nodes[anchor].true_pos)
    pos = _disk_samples(center, d.comm_range, p.n_particles, rng)
    vel = p.delta * hops * (2.0 * rng.random((p.n_particles, 2)) - 1.0)
    if clamp:
        lo, hi = d.bounds
        pos = np.clip(pos, lo, hi)
    return pos, vel


def init_swarm(node: int, g: CommGraph, d: Deployment, p: SwarmParams,
               rng: np.random.Generator) -> list[Particle]:
    """Particles inside the nearest anchor's one-hop disk.

    Velocity components are ``delta * h * (2r - 1)`` with ``h`` the hop count
    to that anchor. ``pbest_fitness`` stays ``inf`` until the optimizer
    evaluates the particles.
    """
    pos, vel = init_arrays(node, g, d, p, rng)
    return [Particle.at(x, v) for x, v in zip(pos, vel)]


def measure_all(d: Deployment, g: CommGraph, noise_sigma: float,
                rng: np.random.Generator) -> dict[tuple[int, int], float]:
    """One range reading per edge, stored for both directions."""
    out = {}
    for j in range(d.n_nodes):
        for k, _ in g.adjacency[j]:
            if k > j:
                out[(j, k)] = out[(k, j)] = measure_distance(g, j, k, noise_sigma, rng)
    return out


def neighbor_context(node: int, g: CommGraph, d: Deployment,
                     estimates: dict[int, np.ndarray],
                     ranges: dict[tuple[int, int], float]) -> NeighborContext:
    """Anchor neighbors at their true positions, unknown neighbors at their
    current estimates; unknown neighbors without an estimate are left out."""
    ids, dists, pts, wts = [], [], [], []
    for k, _ in g.adjacency[node]:
        if k in g.anchor_ids:
            pos, w = d.nodes[k].true_pos, ANCHOR_WEIGHT
        elif k in estimates:
            pos, w = estimates[k], UNKNOWN_WEIGHT
        else:
            continue
        ids.append(k)
        dists.append(ranges[(node, k)])
        pts.append(pos)
        wts.append(w)
    return NeighborContext(tuple(ids), np.array(dists, dtype=float),
                           np.array(pts, dtype=float).reshape(-1, 2),
                           np.array(wts, dtype=float))


def hop_tiers(d: Deployment, g: CommGraph) -> list[list[int]]:
    """Unknown nodes with a reachable anchor, grouped by hop count to their
    nearest anchor (ascending), ids ascending within a tier."""
    keyed = sorted((nearest_anchor(g, u)[1], u) for u in d.unknowns if g.hop_table[u])
    return [[u for _, u in grp] for _, grp in groupby(keyed, key=lambda k: k[0])]


def _most_referenced(candidates: list[int], g: CommGraph, informed) -> int:
    # references = one-hop anchors + informed unknown neighbors; then anchors; then low id
    def key(u):
        n_anchor = n_ref = 0
        for k, _ in g.adjacency[u]:
            if k in g.anchor_ids:
                n_anchor += 1
            elif k in informed:
                n_ref += 1
        return (n_anchor + n_ref, n_anchor, -u)
    return max(candidates, key=key)


def localize_all(
    d: Deployment,
    g: CommGraph,
    p: SwarmParams,
    policy=ADAPTIVE,
    refine_passes: int = 2,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
    workers: int = 1,
) -> tuple[LocalizationResult, dict[int, Trace]]:
    """Localize every unknown node, one swarm per node.

    Tiers from :func:`hop_tiers` are processed in ascending order. Within a
    tier the next node solved is the one with the most references: one-hop
    anchors plus unknown neighbors already solved (in this pass, for passes
    after the first). Every node sees all estimates made before it, and each
    pass re-solves every node. Traces and fitness values come from the last
    pass.

    With ``workers > 1`` the nodes of a tier are instead solved concurrently
    against the estimates that existed when the tier started. That is
    deterministic as well, but not identical to the sequential result.
    """
    if refine_passes < 1:
        raise ValueError("refine_passes must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    p = replace(p, comm_range=d.comm_range)
    base = child_key(rng)
    ranges = measure_all(d, g, noise_sigma, stream(base, 0))
    lo, hi = d.bounds
    bounds = Bounds.box(lo, hi)
    tiers = hop_tiers(d, g)

    result = LocalizationResult()
    traces: dict[int, Trace] = {}
    estimates: dict[int, np.ndarray] = {}

    def solve(u, known, pass_no):
        ctx = neighbor_context(u, g, d, known, ranges)
        if len(ctx) == 0:
            return None
        node_rng = stream(base, pass_no + 1, u)
        pos, vel = init_arrays(u, g, d, p, node_rng)
        res = optimize_arrays(ctx.fitness(), pos, vel, bounds, p, policy, node_rng)
        return res, float(ctx.weights.sum())

    def keep(u, solved):
        if solved is not None:
            res, weight = solved
            estimates[u] = res.best
            result.per_node_fitness[u] = res.best_fitness
            result.fitness_weight[u] = weight
            traces[u] = res.trace

    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    try:
        for pass_no in range(refine_passes):
            fresh: set[int] = set()
            informed = estimates if pass_no == 0 else fresh
            for tier in tiers:
                if pool is not None:
                    snapshot = dict(estimates)
                    solved = pool.map(lambda u: solve(u, snapshot, pass_no), tier)
                    for u, res in zip(tier, solved):
                        keep(u, res)
                    continue
                remaining = list(tier)
                while remaining:
                    u = _most_referenced(remaining, g, informed)
                    remaining.remove(u)
                    keep(u, solve(u, estimates, pass_no))
                    fresh.add(u)
    finally:
        if pool is not None:
            pool.shutdown()

    for u in d.unknowns:
        if u in estimates:
            result.estimates[u] = estimates[u]
            result.status[u] = OK
        else:
            result.skipped.append(u)
            result.status[u] = EMPTY_CONTEXT if g.hop_table[u] else UNREACHABLE
    return result, traces
