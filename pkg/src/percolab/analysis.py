"""Explicit bounds, Ornstein-Zernike fits, ratio diagnostics and monotonicity verdicts.

All bound evaluators take ``lam = (1 - p) / p`` where the high-density forms
need it and work in log space, so values far below the float range come back
as 0.0 without breaking ``lower <= upper``.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import PROXY_NOTE, TRUNCATED, TWO_POINT, check_event_kind
from .estimators import (PairedCurve, XiEstimate, _curve_points, estimate_curve,
                         log_linear_fit)
from .lattice import BoxSpec, LatticeGraph

DECREASING = "decreasing_confirmed"
VIOLATION = "violation_confirmed"
INCONCLUSIVE = "inconclusive"

INSIDE = "inside"
BELOW = "below_lower"
ABOVE = "above_upper"

LEMMA2, LEMMA4, LEMMA6 = "lemma2", "lemma4", "lemma6"
BOUND_KINDS = (LEMMA2, LEMMA4, LEMMA6)
LEMMA1, LEMMA3, LEMMA5 = "lemma1", "lemma3", "lemma5"
OZ_FORMS = (LEMMA1, LEMMA3, LEMMA5)


@dataclass(frozen=True)
class BoundParams:
    """Constants of the explicit bounds; only their existence is known, so reports echo them."""

    C1: float
    C2: float
    C: float = 8.0

    def __post_init__(self):
        for name in ("C1", "C2", "C"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a finite positive number, got {v!r}")

    @classmethod
    def defaults(cls, d: int) -> "BoundParams":
        return cls(C1=2.0 * d, C2=2.0 * d, C=8.0)

    def to_dict(self) -> dict:
        return asdict(self)


def odds_ratio(p: float) -> float:
    """lambda = (1 - p) / p."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return (1 - p) / p


def _exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def _open_unit(p):
    p = float(p)
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    return p


def _check_n(n):
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    return int(n)


def lemma2_bounds(p: float, n: int, params: BoundParams) -> tuple[float, float]:
    """``p^n (1-p)^(C1 n) <= tau_p(n) <= p^n (1 + C2 p)^(n/2)``."""
    p, n = _open_unit(p), _check_n(n)
    base = n * math.log(p)
    lower = base + params.C1 * n * math.log1p(-p)
    upper = base + 0.5 * n * math.log1p(params.C2 * p)
    return _exp(lower), _exp(upper)


def lemma4_exponent(n: int, d: int) -> int:
    return 2 * (d - 1) * (n + 1) + 2


def lemma4_bounds(p: float, n: int, d: int, params: BoundParams) -> tuple[float, float]:
    """``(lam/(1+lam)^2)^E <= tau^f_p(n) <= 2 (lam sqrt(1 + C lam))^E``, ``E = 2(d-1)(n+1)+2``."""
    if d < 3:
        raise ValueError(f"lemma4 bounds hold for d >= 3 only, got d={d}")
    p, n = _open_unit(p), _check_n(n)
    lam = odds_ratio(p)
    E = lemma4_exponent(n, d)
    lower = E * (math.log(lam) - 2 * math.log1p(lam))
    upper = math.log(2.0) + E * (math.log(lam) + 0.5 * math.log1p(params.C * lam))
    return _exp(lower), _exp(upper)


def lemma6_upper_defined(p: float) -> bool:
    return 64 * odds_ratio(p) < 1


def lemma6_bounds(p: float, n: int) -> tuple[float, float | None]:
    """Planar truncated bounds; the upper one needs ``64 lam < 1`` and is ``None`` otherwise."""
    p, n = _open_unit(p), _check_n(n)
    lam = odds_ratio(p)
    log_pref = (2 * n + 2) * math.log(lam)
    lower = _exp(log_pref + 2 * n * math.log(p))
    if 64 * lam >= 1:
        return lower, None
    # bracket terms kept in log space: (64 lam)^(n/2+1) / (1 - 64 lam) + (1 + 12 lam)^n
    t1 = (n / 2 + 1) * math.log(64 * lam) - math.log1p(-64 * lam)
    t2 = n * math.log1p(12 * lam)
    return lower, _exp(log_pref + float(np.logaddexp(t1, t2)))


def bounds_for(kind: str, p: float, n: int, d: int, params: BoundParams):
    if kind == LEMMA2:
        return lemma2_bounds(p, n, params)
    if kind == LEMMA4:
        return lemma4_bounds(p, n, d, params)
    if kind == LEMMA6:
        if d != 2:
            raise ValueError(f"lemma6 bounds are planar (d=2), got d={d}")
        return lemma6_bounds(p, n)
    raise ValueError(f"unknown bound kind {kind!r}; expected one of {BOUND_KINDS}")


def check_bound_scope(kind: str, d: int):
    if kind not in BOUND_KINDS:
        raise ValueError(f"unknown bound kind {kind!r}; expected one of {BOUND_KINDS}")
    if kind == LEMMA4 and d < 3:
        raise ValueError(f"lemma4 bounds need d >= 3, got d={d}")
    if kind == LEMMA6 and d != 2:
        raise ValueError(f"lemma6 bounds need d = 2, got d={d}")


@dataclass
class BoundReport:
    bound_kind: str
    p: float
    d: int
    params: dict
    z: float
    rows: list
    summary: dict
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def check_bounds(curve, bound_kind: str, p: float | None = None, d: int | None = None,
                 params: BoundParams | None = None, z: float = 3.0) -> BoundReport:
    """Compare each curve value (with ``z * stderr`` slack) against a bound pair.

    A point is ``inside`` when its whole ``+-z*stderr`` band lies within the
    bounds, ``below_lower``/``above_upper`` when the whole band lies outside,
    and ``inconclusive`` otherwise.  Exact curves have ``stderr = 0``.
    """
    if isinstance(curve, PairedCurve):
        p = curve.p if p is None else p
        if d is None and curve.graph and "d" in curve.graph:
            d = curve.graph["d"]
    if p is None or d is None:
        raise ValueError("check_bounds needs p and d")
    check_bound_scope(bound_kind, d)
    params = BoundParams.defaults(d) if params is None else params
    rows, notes = [], []
    for n, v, s in _curve_points(curve):
        lower, upper = bounds_for(bound_kind, p, n, d, params)
        lo_v, hi_v = v - z * s, v + z * s
        if hi_v < lower:
            verdict = BELOW
        elif upper is not None and lo_v > upper:
            verdict = ABOVE
        elif lo_v >= lower and (upper is None or hi_v <= upper):
            verdict = INSIDE
        else:
            verdict = INCONCLUSIVE
        rows.append({"n": n, "value": v, "stderr": s, "lower": lower, "upper": upper,
                     "verdict": verdict})
    if any(r["upper"] is None for r in rows):
        notes.append("lemma6 upper bound undefined (requires 64*(1-p)/p < 1); lower bound only")
    summary = {k: sum(r["verdict"] == k for r in rows) for k in (INSIDE, BELOW, ABOVE, INCONCLUSIVE)}
    return BoundReport(bound_kind=bound_kind, p=float(p), d=int(d), params=params.to_dict(), z=z,
                       rows=rows, summary=summary, notes=notes)


# ---------------------------------------------------------------------------
# Ornstein-Zernike fits

@dataclass
class OzFit:
    form: str
    d: int
    amplitude: float
    amplitude_stderr: float
    xi: float
    xi_stderr: float
    nu: float
    ns: list
    residuals: list
    chi2: float
    trend_coefficient: float
    trend_stderr: float
    trend_flagged: bool

    def to_dict(self) -> dict:
        return asdict(self)


def oz_exponent(form: str, d: int) -> float:
    if form == LEMMA1:
        return (d - 1) / 2
    if form == LEMMA3:
        if d < 3:
            raise ValueError(f"the lemma3 form is for d >= 3, got d={d}")
        return (d - 1) / 2
    if form == LEMMA5:
        if d != 2:
            raise ValueError(f"the lemma5 form is planar (d=2), got d={d}")
        return 2.0
    raise ValueError(f"unknown OZ form {form!r}; expected one of {OZ_FORMS}")


def oz_model(ns, amplitude: float, xi: float, nu: float) -> np.ndarray:
    ns = np.asarray(ns, dtype=float)
    return amplitude * np.exp(-ns / xi) / ns ** nu


def fit_oz(curve, d: int, form: str = LEMMA1, z: float = 3.0, noiseless_tol: float = 1e-8) -> OzFit:
    """Fit ``A exp(-n/xi) / n^nu`` with ``nu`` fixed by ``form``.

    The residual trend is the coefficient ``c`` of ``c / n`` in a regression
    of the log residuals on ``[1, 1/n]``.  For curves with error bars it is
    flagged when ``|c| > z * stderr(c)``; for exact curves when any residual
    exceeds ``noiseless_tol``.
    """
    nu = oz_exponent(form, d)
    pts = _curve_points(curve)
    if len(pts) < 4:
        raise ValueError(f"fit_oz needs at least 4 points, got {len(pts)}")
    ns, vals, errs = (np.array(c, dtype=float) for c in zip(*pts))
    weighted = bool(np.all(errs > 0))
    fit = log_linear_fit(ns, vals, errs if weighted else None, nu)
    if fit.slope >= 0:
        raise ValueError("curve does not decay; OZ fit undefined")
    xi = -1.0 / fit.slope
    amp = math.exp(fit.log_amplitude)

    X = np.column_stack([np.ones_like(ns), 1.0 / ns])
    w = 1.0 / fit.sigmas if weighted else np.ones_like(ns)
    coef, *_ = np.linalg.lstsq(X * w[:, None], fit.residuals * w, rcond=None)
    tcov = np.linalg.pinv((X * w[:, None]).T @ (X * w[:, None]))
    t_se = float(np.sqrt(max(tcov[1, 1], 0.0)))
    if weighted:
        flagged = abs(coef[1]) > z * t_se
    else:
        flagged = bool(np.max(np.abs(fit.residuals)) > noiseless_tol)
        t_se = float("nan")
    return OzFit(form=form, d=d, amplitude=amp, amplitude_stderr=amp * float(np.sqrt(fit.cov[0, 0])),
                 xi=xi, xi_stderr=float(np.sqrt(fit.cov[1, 1])) / fit.slope ** 2, nu=nu,
                 ns=[int(n) for n in ns], residuals=[float(r) for r in fit.residuals], chi2=fit.chi2,
                 trend_coefficient=float(coef[1]), trend_stderr=t_se, trend_flagged=bool(flagged))


# ---------------------------------------------------------------------------
# ratio diagnostic

@dataclass
class RatioReport:
    d: int
    xi: float
    nu: float
    z: float
    rows: list
    all_greater_than_one: bool
    violations: list
    residuals_shrinking: bool
    residuals_strictly_shrinking: bool

    def to_dict(self) -> dict:
        return asdict(self)


def ratio_diagnostic(curve: PairedCurve, xi_estimate: XiEstimate | float, d: int,
                     z: float = 3.0, nu: float | None = None) -> RatioReport:
    """Successive ratios ``mean(n) / mean(n')`` against ``(n'/n)^nu exp((n'-n)/xi)``.

    For ``n' = n + 1`` the prediction is ``(1 + 1/n)^nu e^(1/xi)`` with
    ``nu = (d-1)/2`` by default.  Ratio errors use the paired covariance of the
    two means.  Residuals are ``r / prediction - 1``; they count as shrinking
    when no step grows by more than ``z`` combined standard errors.
    """
    xi = xi_estimate.xi if isinstance(xi_estimate, XiEstimate) else float(xi_estimate)
    nu = (d - 1) / 2 if nu is None else float(nu)
    means = dict((n, e) for n, e in curve.entries)
    rows, violations = [], []
    for diff in curve.diffs:
        a, b = means[diff.n], means[diff.n_next]
        if a.mean <= 0 or b.mean <= 0:
            raise ValueError(f"zero mean at n={diff.n if a.mean <= 0 else diff.n_next}; ratio undefined")
        r = a.mean / b.mean
        cov = 0.5 * (a.stderr ** 2 + b.stderr ** 2 - diff.stderr ** 2)
        rel = (a.stderr / a.mean) ** 2 + (b.stderr / b.mean) ** 2 - 2 * cov / (a.mean * b.mean)
        se = r * math.sqrt(max(rel, 0.0))
        if diff.n > 0:
            pred = (diff.n_next / diff.n) ** nu * math.exp((diff.n_next - diff.n) / xi)
            res, res_se = r / pred - 1, se / pred
        else:
            pred = res = res_se = None
        gt1 = (r - 1 > z * se) if se > 0 else r > 1
        viol = (1 - r > z * se) if se > 0 else r < 1
        if viol:
            violations.append(diff.n)
        rows.append({"n": diff.n, "n_next": diff.n_next, "ratio": r, "stderr": se,
                     "z_score": (r - 1) / se if se > 0 else None, "significant_gt_one": bool(gt1),
                     "prediction": pred, "residual": res, "residual_stderr": res_se})
    with_res = [row for row in rows if row["residual"] is not None]
    shrinking = strict = True
    for prev, cur in zip(with_res, with_res[1:]):
        grow = abs(cur["residual"]) - abs(prev["residual"])
        if grow > 0:
            strict = False
        if grow > z * math.hypot(prev["residual_stderr"], cur["residual_stderr"]):
            shrinking = False
    return RatioReport(d=d, xi=xi, nu=nu, z=z, rows=rows,
                       all_greater_than_one=all(row["significant_gt_one"] for row in rows),
                       violations=violations, residuals_shrinking=shrinking,
                       residuals_strictly_shrinking=strict)


# ---------------------------------------------------------------------------
# monotonicity

@dataclass
class MonotonicityReport:
    p: float
    n_range: tuple
    z: float
    rows: list
    overall: str
    event_kind: str = TWO_POINT
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _verdict(diff: float, se: float, z: float) -> str:
    if diff > z * se:
        return DECREASING
    if diff < -z * se:
        return VIOLATION
    return INCONCLUSIVE


def check_monotone(curve: PairedCurve, z: float = 3.0) -> MonotonicityReport:
    """Per-step verdicts from paired differences: ``diff > z*se`` confirms a decrease."""
    if not curve.diffs:
        raise ValueError("curve carries no paired differences")
    rows = []
    for diff in curve.diffs:
        rows.append({"n": diff.n, "n_next": diff.n_next, "diff": diff.mean, "stderr": diff.stderr,
                     "z_score": diff.mean / diff.stderr if diff.stderr > 0 else None,
                     "verdict": _verdict(diff.mean, diff.stderr, z)})
    verdicts = {row["verdict"] for row in rows}
    if verdicts == {DECREASING}:
        overall = DECREASING
    elif VIOLATION in verdicts:
        overall = VIOLATION
    else:
        overall = INCONCLUSIVE
    notes = ["statistical verdicts at the stated z; not a proof of monotonicity"]
    notes += [note for note in curve.notes if note not in notes]
    ns = [n for n, _ in curve.entries]
    return MonotonicityReport(p=curve.p, n_range=(min(ns), max(ns)), z=z, rows=rows, overall=overall,
                              event_kind=curve.event_kind, notes=notes)


@dataclass
class ThresholdScan:
    event_kind: str
    p_grid: list
    reports: list
    empirical_threshold: float | None
    z: float
    samples: int
    seed: int
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def scan_monotonicity(spec: BoxSpec | LatticeGraph, event_kind: str, p_grid, n_range, samples: int,
                      seed: int = 0, z: float = 3.0, workers: int = 1) -> ThresholdScan:
    """Monotonicity verdicts over ``p_grid`` and the grid-resolved monotone region.

    Two-point scans go upward from small ``p``; truncated scans go downward
    from ``p`` near 1.  The threshold is the last grid point reached before
    the first point that is not ``decreasing_confirmed``.
    """
    check_event_kind(event_kind)
    n_list = list(n_range)
    grid = sorted(float(p) for p in p_grid)
    if event_kind == TRUNCATED:
        grid = grid[::-1]
    reports, threshold, broken = [], None, False
    for p in grid:
        curve = estimate_curve(spec, p, n_list, event_kind, samples, seed, workers)
        rep = check_monotone(curve, z)
        reports.append(rep)
        if not broken and rep.overall == DECREASING:
            threshold = p
        else:
            broken = True
    side = "below" if event_kind == TWO_POINT else "above"
    notes = [f"empirical threshold: every grid point {side} and including it was confirmed "
             f"decreasing at z={z}; grid-resolved, not the true critical value"]
    if event_kind == TRUNCATED:
        notes.append(PROXY_NOTE)
    return ThresholdScan(event_kind=event_kind, p_grid=grid, reports=reports,
                         empirical_threshold=threshold, z=z, samples=int(samples), seed=int(seed),
                         notes=notes)
