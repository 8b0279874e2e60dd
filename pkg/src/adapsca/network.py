"""Node deployments, the one-hop communication graph and range measurements."""
from __future__ import annotations

import enum
import hashlib
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, NotNeighbors, Unlocalizable


class NodeKind(str, enum.Enum):
    ANCHOR = "anchor"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Node:
    id: int
    true_pos: tuple[float, float]
    kind: NodeKind

    @property
    def is_anchor(self) -> bool:
        return self.kind is NodeKind.ANCHOR


@dataclass(frozen=True)
class Deployment:
    area_width: float
    area_height: float
    comm_range: float
    nodes: tuple[Node, ...]

    def __post_init__(self):
        if not self.nodes:
            raise ConfigError("deployment has no nodes")
        if self.comm_range <= 0:
            raise ConfigError("comm_range must be positive")
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise ConfigError(f"node ids must be dense 0..n-1, got {node.id} at index {i}")
            x, y = node.true_pos
            if not (0.0 <= x <= self.area_width and 0.0 <= y <= self.area_height):
                raise ConfigError(f"node {i} lies outside the deployment area")
        if not any(n.is_anchor for n in self.nodes):
            raise ConfigError("deployment needs at least one anchor")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def anchors(self) -> list[int]:
        return [n.id for n in self.nodes if n.is_anchor]

    @property
    def unknowns(self) -> list[int]:
        return [n.id for n in self.nodes if not n.is_anchor]

    @property
    def positions(self) -> np.ndarray:
        return np.array([n.true_pos for n in self.nodes], dtype=float)

    @property
    def bounds(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return (0.0, 0.0), (self.area_width, self.area_height)

    def to_dict(self) -> dict:
        return {
            "area_width": self.area_width,
            "area_height": self.area_height,
            "comm_range": self.comm_range,
            "nodes": [
                {"id": n.id, "x": n.true_pos[0], "y": n.true_pos[1], "kind": n.kind.value}
                for n in self.nodes
            ],
        }

    def to_json(self) -> str:
        # repr-exact floats keep the round trip bit-identical
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, doc: dict) -> "Deployment":
        if not isinstance(doc, dict):
            raise ConfigError("deployment document must be a JSON object")
        for key in ("area_width", "area_height", "comm_range", "nodes"):
            if key not in doc:
                raise ConfigError(f"deployment is missing field '{key}'")
        nodes = []
        for i, raw in enumerate(doc["nodes"]):
            for key in ("id", "x", "y", "kind"):
                if key not in raw:
                    raise ConfigError(f"nodes[{i}] is missing field '{key}'")
            try:
                kind = NodeKind(raw["kind"])
            except ValueError:
                raise ConfigError(f"nodes[{i}].kind must be 'anchor' or 'unknown'") from None
            try:
                pos = (float(raw["x"]), float(raw["y"]))
            except (TypeError, ValueError):
                raise ConfigError(f"nodes[{i}] has non-numeric coordinates") from None
            if not isinstance(raw["id"], int):
                raise ConfigError(f"nodes[{i}].id must be an integer")
            nodes.append(Node(raw["id"], pos, kind))
        try:
            return cls(float(doc["area_width"]), float(doc["area_height"]),
                       float(doc["comm_range"]), tuple(nodes))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed deployment header: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Deployment":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"deployment file is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path: str | Path) -> "Deployment":
        return cls.from_json(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def deploy(
    n_nodes: int,
    anchor_ratio: float,
    area: tuple[float, float],
    comm_range: float,
    rng: np.random.Generator,
) -> Deployment:
    """Scatter ``n_nodes`` uniformly over ``area`` and pick anchors at random.

    Exactly ``round(n_nodes * anchor_ratio)`` nodes become anchors.
    """
    if n_nodes < 3:
        raise ConfigError("need at least 3 nodes")
    if not 0.0 < anchor_ratio < 1.0:
        raise ConfigError("anchor_ratio must lie strictly between 0 and 1")
    if comm_range <= 0:
        raise ConfigError("comm_range must be positive")
    n_anchors = round(n_nodes * anchor_ratio)
    if n_anchors < 1:
        raise ConfigError(f"anchor_ratio {anchor_ratio} yields no anchors for {n_nodes} nodes")
    if n_anchors >= n_nodes:
        raise ConfigError(f"anchor_ratio {anchor_ratio} leaves no unknown nodes")
    width, height = area
    xy = rng.uniform(0.0, 1.0, size=(n_nodes, 2)) * np.array([width, height])
    anchor_ids = set(rng.choice(n_nodes, size=n_anchors, replace=False).tolist())
    nodes = tuple(
        Node(i, (float(xy[i, 0]), float(xy[i, 1])),
             NodeKind.ANCHOR if i in anchor_ids else NodeKind.UNKNOWN)
        for i in range(n_nodes)
    )
    return Deployment(float(width), float(height), float(comm_range), nodes)


@dataclass(frozen=True)
class CommGraph:
    """One-hop adjacency plus BFS hop counts from every anchor.

    ``hop_table[v]`` maps anchor id to hop count; anchors that cannot be
    reached from ``v`` are absent.
    """

    adjacency: tuple[tuple[tuple[int, float], ...], ...]
    hop_table: tuple[dict[int, int], ...]
    anchor_ids: frozenset[int]
    _edges: dict = field(repr=False, compare=False, default_factory=dict)

    def neighbors(self, node: int) -> list[int]:
        return [k for k, _ in self.adjacency[node]]

    def distance(self, j: int, k: int) -> float:
        try:
            return self._edges[(j, k)]
        except KeyError:
            raise NotNeighbors(f"nodes {j} and {k} are not one-hop neighbors") from None

    def has_edge(self, j: int, k: int) -> bool:
        return (j, k) in self._edges


def build_graph(d: Deployment) -> CommGraph:
    pos = d.positions
    n = len(pos)
    diff = pos[:, None, :] - pos[None, :, :]
    dist = np.sqrt((diff ** 2).sum(axis=-1))
    adjacency = []
    edges = {}
    for j in range(n):
        row = []
        for k in np.flatnonzero(dist[j] <= d.comm_range):
            k = int(k)
            if k == j:
                continue
            row.append((k, float(dist[j, k])))
            edges[(j, k)] = float(dist[j, k])
        adjacency.append(tuple(row))

    hop_table: list[dict[int, int]] = [{} for _ in range(n)]
    for a in d.anchors:
        hop_table[a][a] = 0
        queue = deque([a])
        while queue:
            u = queue.popleft()
            h = hop_table[u][a] + 1
            for v, _ in adjacency[u]:
                if a not in hop_table[v]:
                    hop_table[v][a] = h
                    queue.append(v)
    return CommGraph(tuple(adjacency), tuple(hop_table), frozenset(d.anchors), edges)


def nearest_anchor(g: CommGraph, node: int) -> tuple[int, int]:
    """Anchor with the fewest hops from ``node``; ties go to the smaller id."""
    row = g.hop_table[node]
    if not row:
        raise Unlocalizable(f"node {node} reaches no anchor")
    return min(row.items(), key=lambda item: (item[1], item[0]))


def measure_distance(
    g: CommGraph,
    j: int,
    k: int,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> float:
    """Range between one-hop neighbors, optionally with Gaussian noise.

    With ``noise_sigma == 0`` no random draw is consumed.
    """
    true = g.distance(j, k)
    if noise_sigma == 0:
        return true
    if rng is None:
        raise ValueError("a random stream is required when noise_sigma > 0")
    return max(0.0, true + noise_sigma * float(rng.standard_normal()))
