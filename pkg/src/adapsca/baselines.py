"""Comparison localizers: DV-Hop, plain PSO and unadapted SCAPSO.

DV-Hop is the usual range-free scheme: hop flooding, per-anchor average hop
size, hop size times hop count as a distance estimate, then linear least
squares. PSO and SCAPSO minimize the squared mismatch to those DV-Hop
distance estimates, start from particles spread over the whole area, and use
``c1 = c2 = 2``. SCAPSO picks SCA or PSO with a fixed probability of 0.5.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import InsufficientAnchors
from .localization import AMBIGUOUS, DEGENERATE, OK, UNREACHABLE, LocalizationResult
from .network import CommGraph, Deployment, nearest_anchor
from .rng import child_key, stream
from .swarm import HALF_AND_HALF, PSO_ONLY, Bounds, RangingFitness, SwarmParams, Trace, optimize_arrays

BASELINE_C1 = 2.0
BASELINE_C2 = 2.0


class Method(str, enum.Enum):
    PSO = "pso"
    SCAPSO = "scapso"


POLICIES = {Method.PSO: PSO_ONLY, Method.SCAPSO: HALF_AND_HALF}


@dataclass(frozen=True)
class DvHopTables:
    hop_size: dict[int, float]
    est_dist: dict[tuple[int, int], float]

    @cached_property
    def _by_node(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for u, a in self.est_dist:
            out.setdefault(u, []).append(a)
        return {u: sorted(a) for u, a in out.items()}

    def anchors_of(self, node: int) -> list[int]:
        return self._by_node.get(node, [])


def dvhop_tables(d: Deployment, g: CommGraph) -> DvHopTables:
    anchors = d.anchors
    pos = d.positions
    hop_size = {}
    for a in anchors:
        dist_sum = 0.0
        hop_sum = 0
        for b in anchors:
            if b != a and b in g.hop_table[a]:
                dist_sum += float(np.linalg.norm(pos[a] - pos[b]))
                hop_sum += g.hop_table[a][b]
        if hop_sum > 0:
            hop_size[a] = dist_sum / hop_sum
    if not hop_size:
        raise InsufficientAnchors("DV-Hop needs two mutually reachable anchors")

    est_dist = {}
    for u in d.unknowns:
        if not g.hop_table[u]:
            continue
        a_z, _ = nearest_anchor(g, u)
        if a_z not in hop_size:
            # lone anchor in this component: no hop size to scale by
            continue
        for a, h in g.hop_table[u].items():
            est_dist[(u, a)] = hop_size[a_z] * h
    return DvHopTables(hop_size, est_dist)


def multilaterate(anchor_pos, dists, rcond: float = 1e-9) -> np.ndarray | None:
    """Linear least-squares position from ranges to three or more anchors.

    Each circle equation is differenced against the last one. Returns ``None``
    when the anchors are (nearly) collinear.
    """
    a = np.asarray(anchor_pos, dtype=float)
    r = np.asarray(dists, dtype=float)
    if len(a) < 3:
        return None
    ref, r_ref = a[-1], r[-1]
    A = 2.0 * (a[:-1] - ref)
    b = (a[:-1] ** 2).sum(axis=1) - (ref ** 2).sum() - r[:-1] ** 2 + r_ref ** 2
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= rcond * sv[0]:
        return None
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    return x


def dvhop_localize(d: Deployment, g: CommGraph,
                   tables: DvHopTables | None = None) -> LocalizationResult:
    tables = tables if tables is not None else dvhop_tables(d, g)
    lo, hi = d.bounds
    pos = d.positions
    out = LocalizationResult()
    for u in d.unknowns:
        anchors = tables.anchors_of(u)
        if len(anchors) < 3:
            out.skipped.append(u)
            out.status[u] = UNREACHABLE if not anchors else AMBIGUOUS
            continue
        x = multilaterate(pos[anchors], [tables.est_dist[(u, a)] for a in anchors])
        if x is None:
            out.skipped.append(u)
            out.status[u] = DEGENERATE
            continue
        out.estimates[u] = np.clip(x, lo, hi)
        out.status[u] = OK
    return out


def baseline_params(p: SwarmParams) -> SwarmParams:
    return replace(p, c1=BASELINE_C1, c2=BASELINE_C2)


def dvhop_fitness(node: int, d: Deployment, tables: DvHopTables) -> RangingFitness | None:
    """Mean squared mismatch to the node's DV-Hop distance estimates."""
    anchors = tables.anchors_of(node)
    if not anchors:
        return None
    m = len(anchors)
    return RangingFitness.of(d.positions[anchors],
                             [tables.est_dist[(node, a)] for a in anchors],
                             np.full(m, 1.0 / m))


def baseline_localize(
    method: Method | str,
    d: Deployment,
    g: CommGraph,
    tables: DvHopTables,
    p: SwarmParams,
    rng: np.random.Generator,
) -> tuple[LocalizationResult, dict[int, Trace]]:
    """Per-node PSO or SCAPSO on the DV-Hop fitness.

    Nodes reaching fewer than three anchors are still estimated but marked
    ambiguous.
    """
    method = Method(method)
    policy = POLICIES[method]
    p = replace(baseline_params(p), comm_range=d.comm_range)
    lo, hi = d.bounds
    bounds = Bounds.box(lo, hi)
    base = child_key(rng)
    out = LocalizationResult()
    traces = {}
    L = d.comm_range
    for u in d.unknowns:
        fit = dvhop_fitness(u, d, tables)
        if fit is None:
            out.skipped.append(u)
            out.status[u] = UNREACHABLE
            continue
        node_rng = stream(base, u)
        pos0 = node_rng.uniform(bounds.lo, bounds.hi, size=(p.n_particles, 2))
        vel0 = node_rng.uniform(-L, L, size=(p.n_particles, 2))
        res = optimize_arrays(fit, pos0, vel0, bounds, p, policy, node_rng)
        out.estimates[u] = res.best
        out.per_node_fitness[u] = res.best_fitness
        out.fitness_weight[u] = float(fit.weights.sum())
        out.status[u] = OK if len(fit.dists) >= 3 else AMBIGUOUS
        traces[u] = res.trace
    return out, traces
