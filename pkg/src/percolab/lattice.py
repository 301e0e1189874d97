"""Finite axis-aligned boxes of the hypercubic lattice Z^d.

A box is described either by a :class:`BoxSpec` (the standard window around
the segment from the origin to ``(n_max, 0, ..., 0)``) or by explicit
per-axis bounds through :func:`box_graph`, which is how small fixture graphs
such as the unit square are built.

Indexing is deterministic: vertices are numbered in lexicographic order of
their coordinates and bonds in lexicographic order of ``(lower endpoint,
axis)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

_INDEX_LIMIT = np.iinfo(np.int32).max


@dataclass(frozen=True)
class BoxSpec:
    """Box ``[-margin, n_max + margin] x [-margin, margin]^(d-1)``.

    ``d = 1`` is accepted for analytic test fixtures only; graphs built from
    it carry ``fixture=True``.
    """

    d: int
    n_max: int
    margin: int = 0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be an integer >= 1, got {self.d!r}")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise ValueError(f"n_max must be an integer >= 0, got {self.n_max!r}")
        if int(self.margin) != self.margin or self.margin < 0:
            raise ValueError(f"margin must be an integer >= 0, got {self.margin!r}")

    @property
    def bounds(self) -> tuple[tuple[int, int], ...]:
        m = self.margin
        return ((-m, self.n_max + m),) + ((-m, m),) * (self.d - 1)

    def to_dict(self) -> dict:
        return {"d": self.d, "n_max": self.n_max, "margin": self.margin}

    @classmethod
    def from_dict(cls, data: dict) -> "BoxSpec":
        return cls(d=int(data["d"]), n_max=int(data["n_max"]), margin=int(data.get("margin", 0)))


@dataclass(frozen=True, eq=False)
class LatticeGraph:
    """Immutable nearest-neighbour graph of a finite box.

    Attributes
    ----------
    bounds : tuple of (lo, hi) per axis, inclusive.
    coords : (V, d) int64 array, row ``i`` holds the coordinates of vertex ``i``.
    bonds : (M, 2) int64 array of endpoint pairs, lower endpoint first.
    bond_axis : (M,) axis along which each bond runs.
    neighbors, neighbor_bonds : (V, 2d) tables; slot ``2a`` is the ``-e_a``
        neighbour and slot ``2a + 1`` the ``+e_a`` neighbour, ``-1`` if absent.
    boundary : (V,) bool mask of vertices with a Z^d-neighbour outside the box.
    """

    bounds: tuple
    coords: np.ndarray
    bonds: np.ndarray
    bond_axis: np.ndarray
    neighbors: np.ndarray
    neighbor_bonds: np.ndarray
    boundary: np.ndarray
    spec: BoxSpec | None = None
    fixture: bool = False
    _index: dict = field(default_factory=dict, repr=False)

    @property
    def d(self) -> int:
        return len(self.bounds)

    @property
    def vertex_count(self) -> int:
        return self.coords.shape[0]

    @property
    def bond_count(self) -> int:
        return self.bonds.shape[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(hi - lo + 1 for lo, hi in self.bounds)

    def vertex(self, coord: Sequence[int]) -> int:
        """Index of the vertex at ``coord``; ``KeyError`` if outside the box."""
        coord = tuple(int(c) for c in coord)
        if len(coord) != self.d:
            raise KeyError(f"expected {self.d} coordinates, got {coord}")
        idx = 0
        for c, (lo, hi), stride in zip(coord, self.bounds, self._strides()):
            if not lo <= c <= hi:
                raise KeyError(f"{coord} lies outside the box {self.bounds}")
            idx += (c - lo) * stride
        return idx

    def coord(self, v: int) -> tuple[int, ...]:
        self._check_vertex(v)
        return tuple(int(c) for c in self.coords[v])

    def bond_between(self, u: int, v: int) -> int:
        self._check_vertex(u)
        self._check_vertex(v)
        hits = np.nonzero(self.neighbors[u] == v)[0]
        if hits.size == 0:
            raise KeyError(f"vertices {u} and {v} are not adjacent")
        return int(self.neighbor_bonds[u, hits[0]])

    def contains(self, coord: Sequence[int]) -> bool:
        return len(coord) == self.d and all(lo <= c <= hi for c, (lo, hi) in zip(coord, self.bounds))

    def _strides(self):
        strides = self._index.get("strides")
        if strides is None:
            shape = self.shape
            strides = [1] * self.d
            for a in range(self.d - 2, -1, -1):
                strides[a] = strides[a + 1] * shape[a + 1]
            self._index["strides"] = strides
        return strides

    def _check_vertex(self, v):
        if not 0 <= int(v) < self.vertex_count:
            raise IndexError(f"vertex {v} out of range 0..{self.vertex_count - 1}")


def expected_bond_count(shape: Sequence[int]) -> int:
    """Sum over axes of (L_a - 1) * prod_{b != a} L_b."""
    total = 0
    for a, la in enumerate(shape):
        other = 1
        for b, lb in enumerate(shape):
            if b != a:
                other *= lb
        total += (la - 1) * other
    return total


def box_graph(bounds: Sequence[tuple[int, int]], spec: BoxSpec | None = None,
              fixture: bool | None = None) -> LatticeGraph:
    """Build the graph of the box ``prod_a [lo_a, hi_a]`` with free boundary."""
    bounds = tuple((int(lo), int(hi)) for lo, hi in bounds)
    d = len(bounds)
    if d < 1:
        raise ValueError("a box needs at least one axis")
    if any(hi < lo for lo, hi in bounds):
        raise ValueError(f"empty box {bounds}")
    shape = tuple(hi - lo + 1 for lo, hi in bounds)
    n_vertices = int(np.prod(shape, dtype=object))
    n_bonds = expected_bond_count(shape)
    if n_vertices > _INDEX_LIMIT or n_bonds > _INDEX_LIMIT:
        raise OverflowError(f"box {bounds} has {n_bonds} bonds, beyond the index limit")

    grids = np.meshgrid(*[np.arange(lo, hi + 1) for lo, hi in bounds], indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)
    ids = np.arange(n_vertices, dtype=np.int64).reshape(shape)

    # bonds ordered by (lower endpoint, axis)
    lower, upper, axis_of = [], [], []
    for a in range(d):
        lo_sl = [slice(None)] * d
        hi_sl = [slice(None)] * d
        lo_sl[a] = slice(0, shape[a] - 1)
        hi_sl[a] = slice(1, shape[a])
        lower.append(ids[tuple(lo_sl)].ravel())
        upper.append(ids[tuple(hi_sl)].ravel())
        axis_of.append(np.full(lower[-1].size, a, dtype=np.int64))
    lower = np.concatenate(lower) if lower else np.zeros(0, np.int64)
    upper = np.concatenate(upper) if upper else np.zeros(0, np.int64)
    axis_of = np.concatenate(axis_of) if axis_of else np.zeros(0, np.int64)
    order = np.lexsort((axis_of, lower))
    bonds = np.stack([lower[order], upper[order]], axis=1)
    bond_axis = axis_of[order]

    neighbors = np.full((n_vertices, 2 * d), -1, dtype=np.int64)
    neighbor_bonds = np.full((n_vertices, 2 * d), -1, dtype=np.int64)
    bond_ids = np.arange(bonds.shape[0], dtype=np.int64)
    neighbors[bonds[:, 0], 2 * bond_axis + 1] = bonds[:, 1]
    neighbor_bonds[bonds[:, 0], 2 * bond_axis + 1] = bond_ids
    neighbors[bonds[:, 1], 2 * bond_axis] = bonds[:, 0]
    neighbor_bonds[bonds[:, 1], 2 * bond_axis] = bond_ids

    lo_arr = np.array([lo for lo, _ in bounds])
    hi_arr = np.array([hi for _, hi in bounds])
    boundary = np.any((coords == lo_arr) | (coords == hi_arr), axis=1)

    for arr in (coords, bonds, bond_axis, neighbors, neighbor_bonds, boundary):
        arr.setflags(write=False)
    if fixture is None:
        fixture = d == 1
    return LatticeGraph(bounds=bounds, coords=coords, bonds=bonds, bond_axis=bond_axis,
                        neighbors=neighbors, neighbor_bonds=neighbor_bonds,
                        boundary=boundary, spec=spec, fixture=bool(fixture))


def build_box(spec: BoxSpec) -> LatticeGraph:
    """Realize ``spec`` as a :class:`LatticeGraph`."""
    return box_graph(spec.bounds, spec=spec, fixture=spec.d == 1)


def axis_pair(graph: LatticeGraph, n: int) -> tuple[int, int]:
    """Vertex indices of the origin and of ``(n, 0, ..., 0)``."""
    zeros = (0,) * (graph.d - 1)
    try:
        return graph.vertex((0,) + zeros), graph.vertex((int(n),) + zeros)
    except KeyError as exc:
        raise ValueError(f"distance n={n} does not fit in the box {graph.bounds}") from exc


def boundary_vertices(graph: LatticeGraph) -> np.ndarray:
    return np.flatnonzero(graph.boundary)
