# Bound checks, the Ornstein-Zernike fit and the monotonicity verdicts.
from percolab import BoxSpec
from percolab.analysis import BoundParams, check_bounds, check_monotone, fit_oz, ratio_diagnostic
from percolab.estimators import estimate_curve, estimate_xi
from percolab.oracle import exact_curve

p = 0.05
exact = [(n, v, 0.0) for n, v in exact_curve(BoxSpec(2, 2, 1), p, [0, 1, 2])]
rep = check_bounds(exact, "lemma2", p=p, d=2, params=BoundParams(C1=4, C2=4))
for row in rep.rows:
    print(row["n"], f"{row['lower']:.3e} <= {row['value']:.3e} <= {row['upper']:.3e}", row["verdict"])

curve = estimate_curve(BoxSpec(2, 8, 15), 0.3, range(1, 9), samples=10**6, seed=5)
fit = fit_oz(curve, d=2, form="lemma1")
print(f"OZ fit: A={fit.amplitude:.3f} xi={fit.xi:.3f} trend flagged: {fit.trend_flagged}")

ratio = ratio_diagnostic(curve, estimate_xi(curve, d=2, model="oz_corrected"), d=2)
print("all ratios above 1:", ratio.all_greater_than_one)

mono = check_monotone(curve)
print("monotonicity:", mono.overall)
for row in mono.rows:
    print("  ", row["n"], row["verdict"], row["z_score"])
