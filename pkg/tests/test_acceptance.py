"""Exit criteria, one test per criterion (names carry the criterion number).

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
detail lines; the terminal summary lists PASS/FAIL for each.
"""
import json
import time

import numpy as np
import pytest

from percolab.analysis import (DECREASING, BoundParams, check_bounds, check_monotone, fit_oz,
                               lemma2_bounds, lemma4_bounds, lemma6_bounds, odds_ratio, oz_model,
                               ratio_diagnostic)
from percolab.cli import parse_and_validate, run
from percolab.core import PROXY_NOTE, TRUNCATED, TWO_POINT
from percolab.estimators import PairedCurve, estimate_curve, estimate_xi
from percolab.lattice import BoxSpec, box_graph, build_box
from percolab.oracle import eval_polynomial, exact_curve, exact_polynomials
from percolab.reports import strip_timestamp

Z = 3.0
MC_SAMPLES = 10**7
WORKERS = 8


def say(msg):
    print(f"  {msg}")


# 1 ---------------------------------------------------------------------------

ORACLE_FIXTURES = [
    ("unit square", box_graph([(0, 1), (0, 1)]), [1]),
    ("path d=1, 3 bonds", build_box(BoxSpec(1, 3, 0)), [1, 2, 3]),
    ("3x2 grid", box_graph([(0, 2), (0, 1)]), [1, 2]),
    ("4x2 grid", box_graph([(0, 3), (0, 1)]), [1, 2, 3]),
    ("unit cube", box_graph([(0, 1), (0, 1), (0, 1)]), [1]),
    ("box d=2 n_max=1 margin=1", build_box(BoxSpec(2, 1, 1)), [0, 1]),
]


def test_criterion_1_oracle_equivalence():
    start = time.time()
    assert ORACLE_FIXTURES[0][1].bond_count == 4
    worst = 0.0
    for name, graph, ns in ORACLE_FIXTURES:
        assert graph.bond_count <= 20
        polys = exact_polynomials(graph, ns, TWO_POINT)
        if name == "unit square":
            assert polys[0].counts == (0, 1, 3, 4, 1)
        for p in (0.1, 0.3, 0.5, 0.7, 0.9):
            curve = estimate_curve(graph, p, ns, TWO_POINT, samples=10**6, seed=20240 + int(p * 10))
            for (n, est), poly in zip(curve.entries, polys):
                exact = eval_polynomial(poly, p)
                dev = abs(est.mean - exact)
                assert dev <= 5 * est.stderr, (name, p, n, est.mean, exact, est.stderr)
                if est.stderr > 0:
                    worst = max(worst, dev / est.stderr)
    elapsed = time.time() - start
    say(f"{len(ORACLE_FIXTURES)} fixtures x 5 p, worst deviation {worst:.2f} stderr, {elapsed:.1f}s")
    assert elapsed < 120


# 2 & 3 -----------------------------------------------------------------------

def _desk_scale(event_kind, ps, n_last):
    spec = BoxSpec(d=2, n_max=n_last + 1, margin=20)
    start = time.time()
    reports = []
    for p in ps:
        curve = estimate_curve(spec, p, range(1, n_last + 2), event_kind, MC_SAMPLES, seed=1,
                               workers=WORKERS)
        rep = check_monotone(curve, Z)
        reports.append(rep)
        say(f"p={p}: " + " ".join(f"n={r['n']}:{r['verdict'][:4]}(z={r['z_score'] and round(r['z_score'], 1)})"
                                  for r in rep.rows))
    elapsed = time.time() - start
    say(f"{elapsed:.1f}s")
    return reports, elapsed


def test_criterion_2_subcritical_monotonicity():
    reports, elapsed = _desk_scale(TWO_POINT, (0.02, 0.05, 0.1), 8)
    assert elapsed < 600
    assert all(len(rep.rows) == 8 for rep in reports)
    assert all(rep.overall == DECREASING for rep in reports)


def test_criterion_3_truncated_monotonicity():
    reports, elapsed = _desk_scale(TRUNCATED, (0.95, 0.98), 6)
    assert all(PROXY_NOTE in rep.notes for rep in reports)
    assert all(len(rep.rows) == 6 for rep in reports)
    assert all(rep.overall == DECREASING for rep in reports)


# 4 ---------------------------------------------------------------------------

def test_criterion_4_lemma2_sandwich():
    params = BoundParams(C1=4, C2=4)
    cases = [(BoxSpec(1, 8, 0), range(0, 9)), (BoxSpec(2, 1, 1), range(0, 2)),
             (BoxSpec(2, 2, 1), range(0, 3)), (BoxSpec(2, 6, 0), range(0, 7))]
    checked = 0
    for spec, ns in cases:
        graph = build_box(spec)
        polys = exact_polynomials(graph, list(ns), TWO_POINT)
        for p in (0.01, 0.02, 0.05):
            curve = [(n, eval_polynomial(poly, p), 0.0) for n, poly in zip(ns, polys)]
            if spec.d == 1:
                assert [v for _, v, _ in curve] == pytest.approx([p**n for n in ns], rel=1e-12)
            rep = check_bounds(curve, "lemma2", p=p, d=spec.d, params=params, z=Z)
            assert all(r["verdict"] == "inside" for r in rep.rows), (spec, p, rep.rows)
            checked += len(rep.rows)
    say(f"{checked} exact points inside lemma2 bounds (C1=C2=4)")


# 5 ---------------------------------------------------------------------------

def test_criterion_5_bound_self_consistency():
    r = np.random.default_rng(5)
    trials = 10**4
    for _ in range(trials):
        p = float(r.uniform(1e-6, 1 - 1e-6))
        n = int(r.integers(0, 200))
        params = BoundParams(C1=float(r.uniform(1e-9, 50)), C2=float(r.uniform(1e-9, 50)),
                             C=float(r.choice([1e-300, r.uniform(0, 50) or 1e-300])))
        lo, hi = lemma2_bounds(p, n, params)
        assert lo <= hi
        d = int(r.integers(3, 11))
        lo, hi = lemma4_bounds(p, n, d, params)
        assert lo <= hi
        q = float(r.uniform(64 / 65, 1))
        if 64 * odds_ratio(q) < 1 and q < 1:
            lo, hi = lemma6_bounds(q, n)
            assert hi is not None and lo <= hi
        lam = odds_ratio(p)
        assert lam / (1 + lam) ** 2 == pytest.approx(p * (1 - p), rel=1e-12)
    say(f"{trials} randomized trials per bound family")


# 6 ---------------------------------------------------------------------------

def test_criterion_6_oz_fit_recovery():
    ns = np.arange(1, 16)
    cases = [("lemma1", 2, 5.0, 4.0), ("lemma1", 3, 0.7, 2.5), ("lemma1", 4, 2.0, 1.2),
             ("lemma5", 2, 0.3, 1.5)]
    for form, d, A, xi in cases:
        nu = 2.0 if form == "lemma5" else (d - 1) / 2
        fit = fit_oz(list(zip(ns, oz_model(ns, A, xi, nu))), d=d, form=form)
        assert abs(fit.amplitude / A - 1) < 1e-6 and abs(fit.xi / xi - 1) < 1e-6
    r = np.random.default_rng(6)
    for form, d, A, xi in (cases[0], cases[3]):
        nu = 2.0 if form == "lemma5" else (d - 1) / 2
        ok = 0
        for _ in range(100):
            vals = oz_model(ns, A, xi, nu) * (1 + 0.01 * r.standard_normal(ns.size))
            fit = fit_oz([(n, v, 0.01 * v) for n, v in zip(ns, vals)], d=d, form=form)
            ok += (abs(fit.amplitude - A) <= 3 * fit.amplitude_stderr
                   and abs(fit.xi - xi) <= 3 * fit.xi_stderr)
        say(f"{form}: {ok}/100 noisy fits within 3 sigma")
        assert ok >= 95


# 7 ---------------------------------------------------------------------------

def test_criterion_7_ratio_diagnostic():
    spec = BoxSpec(d=2, n_max=9, margin=20)
    curve = estimate_curve(spec, 0.3, range(1, 10), TWO_POINT, MC_SAMPLES, seed=7, workers=WORKERS)
    xi = estimate_xi(curve, d=2, model="oz_corrected")
    rep = ratio_diagnostic(curve, xi, d=2, z=Z)
    for row in rep.rows:
        say(f"n={row['n']}: r={row['ratio']:.4f}+-{row['stderr']:.4f} z={row['z_score']:.1f} "
            f"pred={row['prediction']:.4f} residual={row['residual']:+.4f}+-{row['residual_stderr']:.4f}")
    say(f"xi_hat={xi.xi:.4f}+-{xi.stderr:.4f} window={xi.fit_window}")
    assert [row["n"] for row in rep.rows] == list(range(1, 9))
    assert rep.all_greater_than_one
    assert rep.residuals_shrinking


# 8 ---------------------------------------------------------------------------

DETERMINISM_RUNS = [
    ["exact", "--d", "2", "--margin", "1", "--n", "0..2", "--p", "0.3"],
    ["tau", "--d", "2", "--margin", "5", "--p", "0.3", "--n", "1..6", "--samples", "50000"],
    ["tau-trunc", "--d", "2", "--margin", "3", "--p", "0.8", "--n", "0..3", "--samples", "50000"],
    ["sweep", "--d", "2", "--margin", "3", "--n", "1..3", "--p-grid", "0.3,0.6", "--sweeps", "2000"],
    ["fit-oz", "--d", "2", "--margin", "8", "--p", "0.3", "--n", "1..7", "--samples", "200000"],
    ["check-bounds", "--d", "2", "--margin", "3", "--p", "0.05", "--n", "0..3", "--samples", "50000"],
    ["ratio", "--d", "2", "--margin", "8", "--p", "0.3", "--n", "1..7", "--samples", "200000"],
    ["mono-check", "--d", "2", "--margin", "5", "--p", "0.2", "--n", "1..5", "--samples", "50000"],
    ["mono-scan", "--d", "2", "--margin", "4", "--p-grid", "0.1,0.2", "--n", "1..4",
     "--samples", "50000"],
]


def test_criterion_8_determinism(tmp_path):
    for argv in DETERMINISM_RUNS:
        out = tmp_path / f"{argv[0]}.json"
        reports = []
        for workers in ("1", "1", "8"):
            cfg = parse_and_validate(argv + ["--seed", "123", "--workers", workers, "--output", str(out)])
            assert run(cfg) == 0
            reports.append(json.loads(out.read_text()))
        assert strip_timestamp(reports[0]) == strip_timestamp(reports[1]), argv[0]
        assert reports[0]["result"] == reports[2]["result"], argv[0]
    say(f"{len(DETERMINISM_RUNS)} subcommands reproduced; workers=1 and workers=8 agree")
