# Paired Monte Carlo estimates and the correlation length.
from percolab import BoxSpec
from percolab.estimators import estimate_curve, estimate_xi

spec = BoxSpec(d=2, n_max=9, margin=15)
curve = estimate_curve(spec, p=0.3, n_list=range(1, 10), samples=10**6, seed=3)
for n, e in curve.entries:
    print(f"n={n}  tau={e.mean:.5f} +- {e.stderr:.5f}")

# paired differences are far tighter than independent ones
for d in curve.diffs[:4]:
    print(f"tau({d.n})-tau({d.n_next}) = {d.mean:.5f}  paired se {d.stderr:.2e}"
          f"  independent se {d.independent_stderr:.2e}")

for model in ("pure_exponential", "oz_corrected"):
    xi = estimate_xi(curve, d=2, model=model)
    print(model, f"xi = {xi.xi:.3f} +- {xi.stderr:.3f} on n in {xi.fit_window}")
