# One set of random bond orderings gives a whole family of curves in p.
import numpy as np

from percolab import BoxSpec
from percolab.estimators import sweep_estimate

res = sweep_estimate(BoxSpec(d=2, n_max=4, margin=4), n_list=[1, 2, 4],
                     p_grid=np.linspace(0.1, 0.6, 6), sweeps=5000, seed=1)
print("bonds:", res.M)
for i, p in enumerate(res.p_grid):
    row = "  ".join(f"{m:.4f}+-{s:.4f}" for m, s in zip(res.means[i], res.stderrs[i]))
    print(f"p={p:.2f}  {row}")
