"""Bond configurations and connectivity queries.

Two routes answer connectivity: a disjoint-set forest over the open bonds
(:func:`connected`) and a breadth-first search (:func:`connected_bfs`).
The Monte Carlo engine uses a third, lazy route (:func:`origin_cluster_counts`)
which explores only the cluster of the source vertex and generates bond marks
on demand from the counter-based stream; because marks are random-access it
sees exactly the configuration :func:`sample_config` would have returned.

The truncated event uses a finite-volume stand-in for "the cluster of u is
finite": the cluster of ``u`` must not contain a boundary vertex of the box.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numba
import numpy as np

from . import rng
from .lattice import LatticeGraph

TWO_POINT = "two_point"
TRUNCATED = "truncated"
EVENT_KINDS = (TWO_POINT, TRUNCATED)

PROXY_NOTE = ("finite-cluster proxy: the event 'origin not connected to infinity' is "
              "replaced by 'the open cluster of the origin contains no vertex on the "
              "boundary of the finite box' (free boundary conditions)")


def check_event_kind(kind: str) -> str:
    if kind not in EVENT_KINDS:
        raise ValueError(f"event kind must be one of {EVENT_KINDS}, got {kind!r}")
    return kind


def check_probability(p, name="p") -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


@dataclass(frozen=True, eq=False)
class BondConfig:
    """Open/closed mark per bond, stored bit-packed."""

    bits: np.ndarray
    M: int

    @classmethod
    def from_mask(cls, mask) -> "BondConfig":
        mask = np.asarray(mask, dtype=bool)
        bits = np.packbits(mask)
        bits.setflags(write=False)
        return cls(bits=bits, M=mask.size)

    @classmethod
    def from_open_bonds(cls, M: int, open_bonds) -> "BondConfig":
        mask = np.zeros(M, dtype=bool)
        mask[list(open_bonds)] = True
        return cls.from_mask(mask)

    @property
    def mask(self) -> np.ndarray:
        return np.unpackbits(self.bits, count=self.M).astype(bool)

    def is_open(self, bond: int) -> bool:
        return bool(self.bits[bond >> 3] >> (7 - (bond & 7)) & 1)

    @property
    def open_count(self) -> int:
        return int(self.mask.sum())

    def __eq__(self, other):
        return isinstance(other, BondConfig) and self.M == other.M and np.array_equal(self.bits, other.bits)

    def __hash__(self):
        return hash((self.M, self.bits.tobytes()))


def sample_config(graph: LatticeGraph, p: float, stream: rng.RngStream) -> BondConfig:
    """Each bond ``b`` is open iff draw ``b`` of ``stream`` is below ``p``."""
    p = check_probability(p)
    return BondConfig.from_mask(stream.uniforms(graph.bond_count) < p)


def _check_config(graph, config):
    if config.M != graph.bond_count:
        raise ValueError(f"configuration has {config.M} bonds, graph has {graph.bond_count}")


# ---------------------------------------------------------------------------
# disjoint-set forest

@numba.njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@numba.njit(cache=True)
def _union(parent, size, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra == rb:
        return ra
    if size[ra] < size[rb]:
        ra, rb = rb, ra
    parent[rb] = ra
    size[ra] += size[rb]
    return ra


@numba.njit(cache=True)
def _dsu_labels(n_vertices, bonds, open_mask):
    parent = np.arange(n_vertices)
    size = np.ones(n_vertices, dtype=np.int64)
    for b in range(bonds.shape[0]):
        if open_mask[b]:
            _union(parent, size, bonds[b, 0], bonds[b, 1])
    for v in range(n_vertices):
        parent[v] = _find(parent, v)
    return parent


def cluster_labels(graph: LatticeGraph, config: BondConfig) -> np.ndarray:
    """Root label of every vertex under the open bonds of ``config``."""
    _check_config(graph, config)
    return _dsu_labels(graph.vertex_count, graph.bonds, config.mask)


def connected(graph: LatticeGraph, config: BondConfig, u: int, v: int) -> bool:
    graph._check_vertex(u)
    graph._check_vertex(v)
    labels = cluster_labels(graph, config)
    return bool(labels[u] == labels[v])


def cluster(graph: LatticeGraph, config: BondConfig, u: int) -> np.ndarray:
    """Sorted vertex indices reachable from ``u`` through open bonds."""
    graph._check_vertex(u)
    labels = cluster_labels(graph, config)
    return np.flatnonzero(labels == labels[u])


def truncated_event(graph: LatticeGraph, config: BondConfig, u: int, v: int) -> bool:
    graph._check_vertex(v)
    members = cluster(graph, config, u)
    return bool(np.isin(v, members) and not graph.boundary[members].any())


def connected_bfs(graph: LatticeGraph, config: BondConfig, u: int, v: int) -> bool:
    """Breadth-first search route for :func:`connected`."""
    _check_config(graph, config)
    graph._check_vertex(u)
    graph._check_vertex(v)
    mask = config.mask
    seen = {u}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        if x == v:
            return True
        for y, b in zip(graph.neighbors[x], graph.neighbor_bonds[x]):
            if y >= 0 and mask[b] and y not in seen:
                seen.add(y)
                queue.append(y)
    return False


# ---------------------------------------------------------------------------
# lazy Monte Carlo kernel

@numba.njit(nogil=True, cache=True)
def origin_cluster_counts(neighbors, neighbor_bonds, boundary, source, targets,
                          p, seed, first, last, truncated):
    """Accumulate event statistics over samples ``first..last-1``.

    Sample ``s`` is the configuration of stream ``(seed, s)``.  Only the
    cluster of ``source`` is explored.  Returns ``hits[t]`` (event count for
    target ``t``), ``dsum[t]`` = sum of ``I_t - I_{t+1}`` and ``dsq[t]`` =
    number of samples with ``I_t != I_{t+1}``.
    """
    n_vertices = neighbors.shape[0]
    n_slots = neighbors.shape[1]
    n_targets = targets.shape[0]
    stamp = np.full(n_vertices, -1, dtype=np.int64)
    stack = np.empty(n_vertices, dtype=np.int64)
    hits = np.zeros(n_targets, dtype=np.int64)
    dsum = np.zeros(max(n_targets - 1, 0), dtype=np.int64)
    dsq = np.zeros(max(n_targets - 1, 0), dtype=np.int64)
    ind = np.zeros(n_targets, dtype=np.int64)
    for s in range(first, last):
        key = rng.stream_key(seed, numba.uint64(s))
        stamp[source] = s
        stack[0] = source
        top = 1
        escaped = truncated and boundary[source]
        while top > 0 and not escaped:
            top -= 1
            x = stack[top]
            for k in range(n_slots):
                y = neighbors[x, k]
                if y < 0 or stamp[y] == s:
                    continue
                if rng.uniform(key, neighbor_bonds[x, k]) < p:
                    stamp[y] = s
                    if truncated and boundary[y]:
                        escaped = True
                        break
                    stack[top] = y
                    top += 1
        for t in range(n_targets):
            ind[t] = 1 if (stamp[targets[t]] == s and not escaped) else 0
            hits[t] += ind[t]
        for t in range(n_targets - 1):
            diff = ind[t] - ind[t + 1]
            dsum[t] += diff
            dsq[t] += diff * diff
    return hits, dsum, dsq
