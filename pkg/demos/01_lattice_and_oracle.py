# Small boxes and their exact connectivity polynomials.
from fractions import Fraction

from percolab import BoxSpec, build_box
from percolab.lattice import axis_pair
from percolab.oracle import exact_polynomials, eval_polynomial

spec = BoxSpec(d=2, n_max=1, margin=1)
g = build_box(spec)
print("bounds", g.bounds, "vertices", g.vertex_count, "bonds", g.bond_count)
print("origin and e1 vertex ids:", axis_pair(g, 1))

polys = exact_polynomials(g, [1], "two_point")
print("a_k for tau(1):", polys[0].counts)
for p in (Fraction(1, 10), Fraction(1, 2)):
    v = eval_polynomial(polys[0], p)
    print(f"p={p}: tau(1) = {v} ~ {float(v):.6f}")

# the truncated (finite-cluster) event on the same box
trunc = exact_polynomials(g, [0, 1], "truncated")
for n, poly in zip([0, 1], trunc):
    print(f"truncated n={n} at p=0.9:", eval_polynomial(poly, 0.9))
