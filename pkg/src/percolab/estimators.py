"""Monte Carlo estimators of the two-point and truncated connectivity curves.

``estimate_curve`` evaluates the event at every requested distance on the same
sampled configuration, so successive differences come with paired (common
random number) standard errors.  ``sweep_estimate`` records, for each random
bond ordering, the occupation number at which each increasing event first
holds and turns that into curves over a whole grid of ``p`` by binomial
convolution.  ``estimate_xi`` regresses log values on distance to obtain the
correlation length.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numba
import numpy as np
from scipy import stats

from . import rng
from .core import (PROXY_NOTE, TRUNCATED, TWO_POINT, _find, _union, check_event_kind,
                   check_probability, origin_cluster_counts)
from .lattice import BoxSpec, LatticeGraph, axis_pair, build_box
from .oracle import log_binomial_weights

CSV_COLUMNS = ("n", "mean", "stderr", "ci_low", "ci_high", "samples")
PURE_EXPONENTIAL = "pure_exponential"
OZ_CORRECTED = "oz_corrected"


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    samples: int
    ci_low: float
    ci_high: float
    level: float = 0.95

    @classmethod
    def from_counts(cls, hits: int, samples: int, level: float = 0.95) -> "Estimate":
        if samples < 1:
            raise ValueError("samples must be >= 1")
        phat = hits / samples
        lo, hi = wilson_interval(hits, samples, level)
        return cls(mean=phat, stderr=float(np.sqrt(phat * (1 - phat) / samples)),
                   samples=int(samples), ci_low=min(lo, phat), ci_high=max(hi, phat), level=level)

    @classmethod
    def exact(cls, value: float) -> "Estimate":
        return cls(mean=float(value), stderr=0.0, samples=0, ci_low=float(value),
                   ci_high=float(value), level=1.0)


def wilson_interval(hits: int, samples: int, level: float = 0.95) -> tuple[float, float]:
    z = stats.norm.ppf(0.5 + level / 2)
    phat = hits / samples
    denom = 1 + z * z / samples
    centre = (phat + z * z / (2 * samples)) / denom
    half = z / denom * np.sqrt(phat * (1 - phat) / samples + z * z / (4 * samples * samples))
    return max(0.0, float(centre - half)), min(1.0, float(centre + half))


@dataclass(frozen=True)
class PairedDiff:
    """``mean(n) - mean(n_next)`` over shared configurations."""

    n: int
    n_next: int
    mean: float
    stderr: float
    independent_stderr: float


@dataclass
class PairedCurve:
    p: float
    entries: list  # [(n, Estimate)]
    diffs: list    # [PairedDiff]
    event_kind: str = TWO_POINT
    seed: int | None = None
    graph: dict | None = None
    notes: list = field(default_factory=list)

    @property
    def ns(self) -> np.ndarray:
        return np.array([n for n, _ in self.entries])

    @property
    def means(self) -> np.ndarray:
        return np.array([e.mean for _, e in self.entries])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([e.stderr for _, e in self.entries])

    def points(self) -> list[tuple[int, float, float]]:
        return [(n, e.mean, e.stderr) for n, e in self.entries]

    @classmethod
    def from_values(cls, p, ns, values, stderrs=None, diff_stderrs=None, event_kind=TWO_POINT):
        """Curve from given values; with no stderrs the values count as exact."""
        ns = [int(n) for n in ns]
        values = [float(v) for v in values]
        stderrs = [0.0] * len(ns) if stderrs is None else [float(s) for s in stderrs]
        entries = [(n, Estimate(mean=v, stderr=s, samples=0, ci_low=v, ci_high=v, level=1.0))
                   for n, v, s in zip(ns, values, stderrs)]
        diffs = []
        for i in range(len(ns) - 1):
            ind = float(np.hypot(stderrs[i], stderrs[i + 1]))
            paired = ind if diff_stderrs is None else float(diff_stderrs[i])
            diffs.append(PairedDiff(ns[i], ns[i + 1], values[i] - values[i + 1], paired, ind))
        return cls(p=float(p), entries=entries, diffs=diffs, event_kind=event_kind)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for n, e in self.entries:
            writer.writerow([n, repr(e.mean), repr(e.stderr), repr(e.ci_low), repr(e.ci_high), e.samples])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "event_kind": self.event_kind,
            "seed": self.seed,
            "graph": self.graph,
            "notes": list(self.notes),
            "entries": [dict(n=n, **asdict(e)) for n, e in self.entries],
            "diffs": [asdict(d) for d in self.diffs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "PairedCurve":
        entries = []
        for row in data["entries"]:
            row = dict(row)
            n = int(row.pop("n"))
            entries.append((n, Estimate(**row)))
        diffs = [PairedDiff(**d) for d in data.get("diffs", [])]
        return cls(p=float(data["p"]), entries=entries, diffs=diffs,
                   event_kind=data.get("event_kind", TWO_POINT), seed=data.get("seed"),
                   graph=data.get("graph"), notes=list(data.get("notes", [])))


def read_curve_csv(text: str) -> list[tuple[int, float, float]]:
    rows = csv.DictReader(io.StringIO(text))
    return [(int(r["n"]), float(r["mean"]), float(r["stderr"])) for r in rows]


def _as_graph(spec) -> LatticeGraph:
    return spec if isinstance(spec, LatticeGraph) else build_box(spec)


def _graph_info(graph: LatticeGraph) -> dict:
    info = graph.spec.to_dict() if graph.spec is not None else {"bounds": [list(b) for b in graph.bounds]}
    if graph.fixture:
        info["fixture"] = True
    return info


def _chunks(total: int, workers: int):
    workers = max(1, min(int(workers), max(total, 1)))
    edges = [total * i // workers for i in range(workers + 1)]
    return list(zip(edges[:-1], edges[1:]))


def estimate_curve(spec: BoxSpec | LatticeGraph, p: float, n_list, event_kind: str = TWO_POINT,
                   samples: int = 10_000, seed: int = 0, workers: int = 1,
                   level: float = 0.95) -> PairedCurve:
    """Paired Monte Carlo estimates of the event probability at each ``n``.

    Sample ``s`` uses stream ``(seed, s)``; workers get contiguous blocks of
    sample indices and their integer tallies are summed, so the output does
    not depend on ``workers``.
    """
    p = check_probability(p)
    check_event_kind(event_kind)
    samples = int(samples)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    graph = _as_graph(spec)
    n_list = [int(n) for n in n_list]
    if not n_list:
        raise ValueError("n_list is empty")
    pairs = [axis_pair(graph, n) for n in n_list]
    source = pairs[0][0]
    targets = np.array([v for _, v in pairs], dtype=np.int64)
    args = (graph.neighbors, graph.neighbor_bonds, graph.boundary, source, targets, p,
            np.uint64(seed))
    truncated = event_kind == TRUNCATED
    blocks = _chunks(samples, workers)
    if len(blocks) == 1:
        parts = [origin_cluster_counts(*args, 0, samples, truncated)]
    else:
        with ThreadPoolExecutor(len(blocks)) as pool:
            parts = list(pool.map(lambda b: origin_cluster_counts(*args, b[0], b[1], truncated), blocks))
    hits = sum(part[0] for part in parts)
    dsum = sum(part[1] for part in parts)
    dsq = sum(part[2] for part in parts)

    entries = [(n, Estimate.from_counts(int(h), samples, level)) for n, h in zip(n_list, hits)]
    diffs = []
    for i in range(len(n_list) - 1):
        mean = dsum[i] / samples
        var = max(dsq[i] / samples - mean * mean, 0.0)
        ind = float(np.hypot(entries[i][1].stderr, entries[i + 1][1].stderr))
        # the tallies make mean(n) - mean(n_next) hold exactly
        mean = entries[i][1].mean - entries[i + 1][1].mean
        diffs.append(PairedDiff(n_list[i], n_list[i + 1], mean, float(np.sqrt(var / samples)), ind))
    notes = [PROXY_NOTE] if truncated else []
    if graph.fixture:
        notes.append("fixture graph (analytic test case, not a d >= 2 box around the axis)")
    return PairedCurve(p=p, entries=entries, diffs=diffs, event_kind=event_kind, seed=int(seed),
                       graph=_graph_info(graph), notes=notes)


# ---------------------------------------------------------------------------
# sweep (occupation-number) estimator

@numba.njit(nogil=True, cache=True)
def _sweep_thresholds(n_vertices, bonds, source, targets, seed, first, last):
    """First occupation count at which each target joins the source cluster."""
    M = bonds.shape[0]
    n_targets = targets.shape[0]
    out = np.empty((last - first, n_targets), dtype=np.int64)
    parent = np.empty(n_vertices, dtype=np.int64)
    size = np.empty(n_vertices, dtype=np.int64)
    order = np.empty(M, dtype=np.int64)
    for s in range(first, last):
        key = rng.stream_key(seed, numba.uint64(s))
        for b in range(M):
            order[b] = b
        # Fisher-Yates from the top; draw i picks the slot for position i
        for i in range(M - 1, 0, -1):
            j = int(rng.uniform(key, i) * (i + 1))
            order[i], order[j] = order[j], order[i]
        for v in range(n_vertices):
            parent[v] = v
            size[v] = 1
        row = out[s - first]
        remaining = 0
        for t in range(n_targets):
            if targets[t] == source:
                row[t] = 0
            else:
                row[t] = -1
                remaining += 1
        k = 0
        while remaining > 0 and k < M:
            b = order[k]
            k += 1
            _union(parent, size, bonds[b, 0], bonds[b, 1])
            root = _find(parent, source)
            for t in range(n_targets):
                if row[t] < 0 and _find(parent, targets[t]) == root:
                    row[t] = k
                    remaining -= 1
        for t in range(n_targets):
            if row[t] < 0:
                row[t] = M + 1  # never connected, even fully open
    return out


@dataclass
class SweepResult:
    n_list: list
    p_grid: list
    means: np.ndarray    # (len(p_grid), len(n_list))
    stderrs: np.ndarray
    sweeps: int
    M: int
    thresholds: np.ndarray = field(repr=False)  # (sweeps, len(n_list)) first-hit counts

    def occupation_curve(self, n_index: int) -> np.ndarray:
        """Fraction of sweeps with the event holding after ``k`` bonds, ``k = 0..M``."""
        k = np.arange(self.M + 1)
        return (self.thresholds[:, n_index][:, None] <= k[None, :]).mean(axis=0)

    def curve(self, p_index: int) -> list[tuple[int, float, float]]:
        return [(n, float(m), float(s)) for n, m, s in
                zip(self.n_list, self.means[p_index], self.stderrs[p_index])]


def sweep_estimate(spec: BoxSpec | LatticeGraph, n_list, p_grid, sweeps: int = 1000, seed: int = 0,
                   event_kind: str = TWO_POINT, workers: int = 1) -> SweepResult:
    """Curves over ``p_grid`` from random bond-addition orders.

    Each sweep contributes ``P(Binomial(M, p) >= K)`` where ``K`` is the
    occupation count at which the event first held, so the estimate is
    ``sum_k C(M,k) p^k (1-p)^(M-k) * fraction(K <= k)``.
    """
    check_event_kind(event_kind)
    if event_kind == TRUNCATED:
        raise ValueError("the truncated event is not increasing in the set of open bonds; "
                         "sweep estimation needs an increasing event")
    sweeps = int(sweeps)
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    p_grid = [check_probability(p) for p in p_grid]
    graph = _as_graph(spec)
    n_list = [int(n) for n in n_list]
    pairs = [axis_pair(graph, n) for n in n_list]
    source = pairs[0][0]
    targets = np.array([v for _, v in pairs], dtype=np.int64)
    args = (graph.vertex_count, graph.bonds, source, targets, np.uint64(seed))
    blocks = _chunks(sweeps, workers)
    if len(blocks) == 1:
        thresholds = _sweep_thresholds(*args, 0, sweeps)
    else:
        with ThreadPoolExecutor(len(blocks)) as pool:
            thresholds = np.concatenate(list(pool.map(lambda b: _sweep_thresholds(*args, *b), blocks)))
    M = graph.bond_count
    means = np.empty((len(p_grid), len(n_list)))
    stderrs = np.empty_like(means)
    for i, p in enumerate(p_grid):
        # survival[k] = P(Binomial(M, p) >= k), k = 0..M+1
        w = log_binomial_weights(M, p)
        survival = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
        per_sweep = np.minimum(survival[thresholds], 1.0)
        means[i] = per_sweep.mean(axis=0)
        stderrs[i] = per_sweep.std(axis=0) / np.sqrt(sweeps)
    return SweepResult(n_list=n_list, p_grid=p_grid, means=means, stderrs=stderrs,
                       sweeps=sweeps, M=M, thresholds=thresholds)


# ---------------------------------------------------------------------------
# correlation length

@dataclass
class LogLinearFit:
    ns: np.ndarray
    log_amplitude: float
    slope: float
    cov: np.ndarray
    residuals: np.ndarray    # log(value) - model, per point
    sigmas: np.ndarray | None  # stderr of log(value), None when unweighted
    chi2: float


def log_linear_fit(ns, values, stderrs=None, nu: float = 0.0) -> LogLinearFit:
    """Weighted least squares of ``log v + nu log n`` on ``[1, n]``.

    With stderrs, weights are ``(v / stderr)^2`` and the covariance is taken
    at face value; without them the fit is unweighted and the covariance is
    scaled by the residual variance.
    """
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if ns.size < 3:
        raise ValueError(f"a fit needs at least 3 points, got {ns.size}")
    if np.any(values <= 0):
        raise ValueError("all values in the fit window must be strictly positive")
    if nu != 0.0 and np.any(ns <= 0):
        raise ValueError("power-law corrected fits need n >= 1")
    y = np.log(values) + (nu * np.log(ns) if nu else 0.0)
    X = np.column_stack([np.ones_like(ns), ns])
    weighted = stderrs is not None and np.all(np.asarray(stderrs, dtype=float) > 0)
    if weighted:
        sigmas = np.asarray(stderrs, dtype=float) / values
        w = 1.0 / sigmas
    else:
        sigmas = None
        w = np.ones_like(ns)
    A = X * w[:, None]
    coef, _, rank, _ = np.linalg.lstsq(A, y * w, rcond=None)
    if rank < 2:
        raise ValueError("singular fit: need at least two distinct n values")
    resid = y - X @ coef
    chi2 = float(np.sum((resid * w) ** 2))
    cov = np.linalg.inv(A.T @ A)
    if not weighted:
        dof = ns.size - 2
        cov = cov * (chi2 / dof if dof > 0 else 0.0)
    return LogLinearFit(ns=ns, log_amplitude=float(coef[0]), slope=float(coef[1]), cov=cov,
                        residuals=resid, sigmas=sigmas, chi2=chi2)


@dataclass
class XiEstimate:
    xi: float
    stderr: float
    fit_window: tuple
    model: str
    nu: float
    amplitude: float
    amplitude_stderr: float
    residuals: list
    chi2: float

    def to_dict(self) -> dict:
        return asdict(self)


def default_window(points, min_ratio: float = 10.0) -> tuple[int, int]:
    """Longest run of consecutive points with ``value > min_ratio * stderr``."""
    best, start = (0, -1, -1), None
    for i, (_, v, s) in enumerate(points):
        ok = v > 0 and v > min_ratio * s
        if ok and start is None:
            start = i
        if start is not None and (not ok or i == len(points) - 1):
            end = i if ok else i - 1
            if end - start + 1 > best[0]:
                best = (end - start + 1, start, end)
            start = None
    if best[0] == 0:
        raise ValueError("no point of the curve exceeds its error bar")
    return points[best[1]][0], points[best[2]][0]


def _curve_points(curve) -> list[tuple[int, float, float]]:
    if isinstance(curve, PairedCurve):
        return curve.points()
    pts = []
    for row in curve:
        n, v = row[0], row[1]
        s = row[2] if len(row) > 2 else 0.0
        pts.append((int(n), float(v), float(s)))
    return sorted(pts)


def estimate_xi(curve, d: int, model: str = PURE_EXPONENTIAL, nu: float | None = None,
                window: tuple[int, int] | None = None) -> XiEstimate:
    """Correlation length from ``log v = log A - n / xi - nu log n``.

    ``model="pure_exponential"`` fixes ``nu = 0``; ``"oz_corrected"`` uses
    ``nu`` (default ``(d - 1) / 2``).
    """
    if model == PURE_EXPONENTIAL:
        nu = 0.0
    elif model == OZ_CORRECTED:
        nu = (d - 1) / 2 if nu is None else float(nu)
    else:
        raise ValueError(f"unknown model {model!r}")
    pts = _curve_points(curve)
    if window is None:
        window = default_window(pts)
    sel = [pt for pt in pts if window[0] <= pt[0] <= window[1]]
    ns, vals, errs = (np.array(c, dtype=float) for c in zip(*sel)) if sel else ([], [], [])
    fit = log_linear_fit(ns, vals, errs if np.any(errs > 0) else None, nu)
    if fit.slope >= 0:
        raise ValueError("curve does not decay on the fit window; correlation length undefined")
    xi = -1.0 / fit.slope
    xi_se = float(np.sqrt(fit.cov[1, 1])) / fit.slope ** 2
    amp = float(np.exp(fit.log_amplitude))
    return XiEstimate(xi=xi, stderr=xi_se, fit_window=(int(window[0]), int(window[1])), model=model,
                      nu=nu, amplitude=amp, amplitude_stderr=amp * float(np.sqrt(fit.cov[0, 0])),
                      residuals=[float(r) for r in fit.residuals], chi2=fit.chi2)
