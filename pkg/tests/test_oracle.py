import itertools
import json
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from percolab.core import TRUNCATED, TWO_POINT
from percolab.lattice import BoxSpec, axis_pair, box_graph, build_box
from percolab.oracle import (ConnectivityPolynomial, Event, connectivity_counts, eval_polynomial,
                             exact_curve, exact_polynomials)

# Frozen from an independent brute force (dict union-find over itertools.product
# coordinates) on the box [-1,2]x[-1,1], origin <-> (1,0).
BOX17_TWO_POINT = (0, 1, 16, 122, 586, 1980, 4979, 9614, 14487, 17118, 15778, 11178, 5955,
                   2356, 679, 136, 17, 1)
BOX17_TAU1_AT_0_2 = Fraction(162963657349, 762939453125)
# only the origin and (1,0) are interior: the joining bond is open, the other six
# bonds at those two vertices closed, the remaining ten free
BOX17_TRUNCATED = tuple([0] + [comb(10, k - 1) for k in range(1, 12)] + [0] * 6)


def test_single_bond():
    g = box_graph([(0, 1)])
    poly = connectivity_counts(g, Event.two_point(0, 1))
    assert poly.counts == (0, 1)
    assert eval_polynomial(poly, 0.3) == pytest.approx(0.3, abs=1e-15)


def test_two_bond_path(path3):
    poly = connectivity_counts(path3, Event.two_point(0, 2))
    assert poly.counts == (0, 0, 1)
    assert eval_polynomial(poly, Fraction(1, 3)) == Fraction(1, 9)


def test_unit_square(unit_square):
    a, b = axis_pair(unit_square, 1)
    poly = connectivity_counts(unit_square, Event.two_point(a, b))
    assert poly.counts == (0, 1, 3, 4, 1)
    assert eval_polynomial(poly, Fraction(1, 2)) == Fraction(9, 16)
    assert eval_polynomial(poly, 0.5) == pytest.approx(0.5625, rel=1e-14)
    for p in np.linspace(0, 1, 11):
        assert eval_polynomial(poly, p) == pytest.approx(p + p**3 - p**4, abs=1e-14)


def test_value_at_zero_is_a0(unit_square):
    a, b = axis_pair(unit_square, 1)
    assert eval_polynomial(connectivity_counts(unit_square, Event.two_point(a, b)), 0.0) == 0.0
    assert eval_polynomial(connectivity_counts(unit_square, Event.two_point(a, a)), 0.0) == 1.0


def test_box17_regression(box17):
    o, e1 = axis_pair(box17, 1)
    poly = connectivity_counts(box17, Event.two_point(o, e1))
    assert poly.counts == BOX17_TWO_POINT
    assert eval_polynomial(poly, Fraction(1, 5)) == BOX17_TAU1_AT_0_2
    trunc = connectivity_counts(box17, Event.truncated(o, e1))
    assert trunc.counts == BOX17_TRUNCATED
    assert eval_polynomial(trunc, Fraction(1, 5)) == Fraction(1, 5) * Fraction(4, 5) ** 6


def test_exact_curve_examples():
    path = exact_curve(BoxSpec(1, 3, 0), Fraction(1, 2), [1, 2, 3])
    assert path == [(1, Fraction(1, 2)), (2, Fraction(1, 4)), (3, Fraction(1, 8))]
    floats = exact_curve(BoxSpec(1, 3, 0), 0.5, [1, 2, 3])
    assert [v for _, v in floats] == pytest.approx([0.5, 0.25, 0.125], rel=1e-14)
    assert [v for _, v in exact_curve(BoxSpec(2, 2, 1), 1.0, [0, 1, 2])] == [1.0, 1.0, 1.0]
    curve = exact_curve(BoxSpec(2, 1, 1), 0.2, [0, 1])
    assert curve[0] == (0, 1.0)
    assert curve[1][1] == pytest.approx(float(BOX17_TAU1_AT_0_2), rel=1e-14)


def test_cap_is_enforced():
    g = build_box(BoxSpec(2, 3, 1))  # 27 bonds
    with pytest.raises(ValueError, match="capped"):
        exact_curve(g, 0.5, [1])
    with pytest.raises(ValueError):
        exact_curve(box_graph([(0, 2), (0, 1)]), 0.5, [1], cap=3)


def test_workers_partition_gives_same_counts(box17):
    a = exact_polynomials(box17, [0, 1, 2], TWO_POINT, workers=1)
    b = exact_polynomials(box17, [0, 1, 2], TWO_POINT, workers=5)
    assert [x.counts for x in a] == [x.counts for x in b]


ORACLE_GRAPHS = [
    box_graph([(0, 1), (0, 1)]),
    box_graph([(0, 2), (0, 1)]),
    box_graph([(0, 1), (0, 1), (0, 1)]),
    build_box(BoxSpec(2, 1, 1)),
    build_box(BoxSpec(2, 2, 1)),
    build_box(BoxSpec(1, 4, 0)),
]


@pytest.mark.parametrize("graph", ORACLE_GRAPHS, ids=lambda g: str(g.bounds))
def test_polynomial_invariants(graph):
    ns = [n for n in range(graph.bounds[0][1] + 1)]
    two = exact_polynomials(graph, ns, TWO_POINT)
    trunc = exact_polynomials(graph, ns, TRUNCATED)
    grid = np.linspace(0, 1, 41)
    for poly, tpoly in zip(two, trunc):
        fr = poly.fractions()
        assert all(x <= y for x, y in zip(fr, fr[1:]))  # increasing event
        vals = [eval_polynomial(poly, p) for p in grid]
        assert all(0 <= v <= 1 for v in vals)
        assert all(x <= y + 1e-15 for x, y in zip(vals, vals[1:]))
        for p in grid:
            assert eval_polynomial(tpoly, p) <= eval_polynomial(poly, p) + 1e-15


def test_monotone_in_volume():
    for n in (1, 2):
        values = [exact_curve(BoxSpec(2, 2, m), Fraction(3, 10), [n])[0][1] for m in (0, 1)]
        assert values[0] <= values[1]
    small = exact_curve(BoxSpec(1, 2, 0), Fraction(1, 2), [1])[0][1]
    big = exact_curve(BoxSpec(1, 2, 1), Fraction(1, 2), [1])[0][1]
    assert small <= big


def test_counts_validation():
    with pytest.raises(ValueError):
        ConnectivityPolynomial(M=2, counts=(0, 3, 1))
    with pytest.raises(ValueError):
        ConnectivityPolynomial(M=2, counts=(0, 1))


def test_json_export(unit_square):
    a, b = axis_pair(unit_square, 1)
    poly = connectivity_counts(unit_square, Event.two_point(a, b))
    data = json.loads(poly.to_json())
    assert data["M"] == 4 and data["counts"] == [0, 1, 3, 4, 1]
    assert set(data) == {"M", "counts", "event", "graph"}
    assert ConnectivityPolynomial.from_dict(data) == poly
    spec_poly = exact_polynomials(build_box(BoxSpec(2, 1, 1)), [1], TWO_POINT)[0]
    assert spec_poly.to_dict()["graph"] == {"d": 2, "n_max": 1, "margin": 1}


def test_log_space_evaluation_large_counts():
    M = 60
    poly = ConnectivityPolynomial(M=M, counts=tuple(comb(M, k) for k in range(M + 1)))
    for p in (1e-9, 0.3, 0.999999):
        assert eval_polynomial(poly, p) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        eval_polynomial(poly, -0.1)
