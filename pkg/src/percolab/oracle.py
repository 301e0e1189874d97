"""Exact event probabilities on small graphs by exhaustive enumeration.

For an event ``A`` on a graph with ``M`` bonds the enumeration produces the
integer counts ``a_k`` of configurations with exactly ``k`` open bonds in
``A``, so that ``P_p(A) = sum_k a_k p^k (1-p)^(M-k)``.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numba
import numpy as np
from scipy.special import gammaln

from .core import TRUNCATED, TWO_POINT, _find, _union, check_event_kind, check_probability
from .lattice import BoxSpec, LatticeGraph, axis_pair, build_box

DEFAULT_CAP = 24


@dataclass(frozen=True)
class Event:
    kind: str
    u: int
    v: int

    def __post_init__(self):
        check_event_kind(self.kind)

    @classmethod
    def two_point(cls, u, v):
        return cls(TWO_POINT, int(u), int(v))

    @classmethod
    def truncated(cls, u, v):
        return cls(TRUNCATED, int(u), int(v))

    def __str__(self):
        return f"{self.kind}({self.u},{self.v})"


@dataclass(frozen=True)
class ConnectivityPolynomial:
    M: int
    counts: tuple
    event: str = ""
    graph: dict | None = None

    def __post_init__(self):
        if len(self.counts) != self.M + 1:
            raise ValueError(f"expected {self.M + 1} counts, got {len(self.counts)}")
        for k, a in enumerate(self.counts):
            if not 0 <= a <= comb(self.M, k):
                raise ValueError(f"count a_{k}={a} outside [0, C({self.M},{k})]")

    def __call__(self, p):
        return eval_polynomial(self, p)

    def fractions(self) -> list[Fraction]:
        """a_k / C(M, k): probability of the event given k open bonds."""
        return [Fraction(a, comb(self.M, k)) for k, a in enumerate(self.counts)]

    def to_dict(self) -> dict:
        return {"M": self.M, "counts": [int(a) for a in self.counts],
                "event": self.event, "graph": self.graph}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ConnectivityPolynomial":
        return cls(M=int(data["M"]), counts=tuple(int(a) for a in data["counts"]),
                   event=data.get("event", ""), graph=data.get("graph"))


@numba.njit(nogil=True, cache=True)
def _enumerate(n_vertices, bonds, boundary_list, source, targets, truncated, lo, hi):
    M = bonds.shape[0]
    counts = np.zeros((targets.shape[0], M + 1), dtype=np.int64)
    parent = np.empty(n_vertices, dtype=np.int64)
    size = np.empty(n_vertices, dtype=np.int64)
    for mask in range(lo, hi):
        for v in range(n_vertices):
            parent[v] = v
            size[v] = 1
        k = 0
        for b in range(M):
            if (mask >> b) & 1:
                k += 1
                _union(parent, size, bonds[b, 0], bonds[b, 1])
        root = _find(parent, source)
        if truncated:
            escaped = False
            for i in range(boundary_list.shape[0]):
                if _find(parent, boundary_list[i]) == root:
                    escaped = True
                    break
            if escaped:
                continue
        for t in range(targets.shape[0]):
            if _find(parent, targets[t]) == root:
                counts[t, k] += 1
    return counts


def _graph_info(graph: LatticeGraph) -> dict:
    if graph.spec is not None:
        return graph.spec.to_dict()
    return {"bounds": [list(b) for b in graph.bounds]}


def _counts_for_targets(graph, kind, source, targets, cap, workers):
    M = graph.bond_count
    if M > cap:
        raise ValueError(f"graph has {M} bonds; exhaustive enumeration is capped at {cap} "
                         f"(2^{cap} configurations)")
    for v in (source, *targets):
        graph._check_vertex(v)
    targets = np.asarray(targets, dtype=np.int64)
    boundary_list = np.flatnonzero(graph.boundary).astype(np.int64)
    total = 1 << M
    workers = max(1, min(int(workers), total))
    edges = [total * i // workers for i in range(workers + 1)]
    args = (graph.vertex_count, graph.bonds, boundary_list, int(source), targets, kind == TRUNCATED)
    if workers == 1:
        parts = [_enumerate(*args, 0, total)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda i: _enumerate(*args, edges[i], edges[i + 1]), range(workers)))
    return sum(parts[1:], parts[0])


def connectivity_counts(graph: LatticeGraph, event: Event, cap: int = DEFAULT_CAP,
                        workers: int = 1) -> ConnectivityPolynomial:
    """Exact counts for ``event`` by iterating all ``2^M`` configurations."""
    counts = _counts_for_targets(graph, event.kind, event.u, [event.v], cap, workers)[0]
    return ConnectivityPolynomial(M=graph.bond_count, counts=tuple(int(a) for a in counts),
                                  event=str(event), graph=_graph_info(graph))


def eval_polynomial(poly: ConnectivityPolynomial, p):
    """Evaluate ``sum_k a_k p^k (1-p)^(M-k)``.

    A :class:`fractions.Fraction` argument gives an exact rational result;
    otherwise the sum is formed from log-space terms.
    """
    if isinstance(p, Fraction):
        if not 0 <= p <= 1:
            raise ValueError(f"p must lie in [0, 1], got {p}")
        q = 1 - p
        return sum((a * p ** k * q ** (poly.M - k) for k, a in enumerate(poly.counts) if a),
                   Fraction(0))
    p = check_probability(p)
    if p == 0.0:
        return float(poly.counts[0])
    if p == 1.0:
        return float(poly.counts[-1])
    a = np.array(poly.counts, dtype=np.float64)
    value = _binomial_sum(a, poly.M, p)
    if value > 0.5:
        # near 1 the complement is the accurate quantity
        full = np.array([comb(poly.M, k) for k in range(poly.M + 1)], dtype=np.float64)
        value = 1.0 - _binomial_sum(full - a, poly.M, p)
    return float(min(1.0, max(0.0, value)))


def _binomial_sum(a, M, p):
    k = np.arange(M + 1)
    nz = a > 0
    if not nz.any():
        return 0.0
    logs = np.log(a[nz]) + k[nz] * np.log(p) + (M - k[nz]) * np.log1p(-p)
    return float(np.exp(logs).sum())


def log_binomial_weights(M: int, p: float) -> np.ndarray:
    """``C(M,k) p^k (1-p)^(M-k)`` for ``k = 0..M`` via log-gamma."""
    p = check_probability(p)
    k = np.arange(M + 1)
    if p == 0.0 or p == 1.0:
        w = np.zeros(M + 1)
        w[0 if p == 0.0 else M] = 1.0
        return w
    logc = gammaln(M + 1) - gammaln(k + 1) - gammaln(M - k + 1)
    return np.exp(logc + k * np.log(p) + (M - k) * np.log1p(-p))


def exact_polynomials(graph: LatticeGraph, n_list, event_kind: str, cap: int = DEFAULT_CAP,
                      workers: int = 1) -> list[ConnectivityPolynomial]:
    """One polynomial per ``n`` from a single enumeration pass."""
    check_event_kind(event_kind)
    pairs = [axis_pair(graph, n) for n in n_list]
    source = pairs[0][0] if pairs else 0
    counts = _counts_for_targets(graph, event_kind, source, [v for _, v in pairs], cap, workers)
    info = _graph_info(graph)
    return [ConnectivityPolynomial(M=graph.bond_count, counts=tuple(int(a) for a in row),
                                   event=f"{event_kind}(n={n})", graph=info)
            for n, row in zip(n_list, counts)]


def exact_curve(spec: BoxSpec | LatticeGraph, p, n_list, event_kind: str = TWO_POINT,
                cap: int = DEFAULT_CAP, workers: int = 1) -> list[tuple[int, float]]:
    """Exact finite-volume values of the event probability at each ``n``."""
    graph = spec if isinstance(spec, LatticeGraph) else build_box(spec)
    polys = exact_polynomials(graph, list(n_list), event_kind, cap, workers)
    return [(int(n), eval_polynomial(poly, p)) for n, poly in zip(n_list, polys)]
