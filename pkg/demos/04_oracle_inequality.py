"""Oracle inequalities in practice: risk against the bound for each candidate.

The truth is a monotone staircase with three steps. The bound for a
candidate ``u`` trades its distance to the truth against the number of
its constant pieces, so coarser candidates pay bias and finer ones pay
variance. The best candidate should dominate the simulated risk.

Run with ``python demos/04_oracle_inequality.py``.
"""

import numpy as np

from shapereg import Isotonic, project
from shapereg.experiments import ExperimentConfig, oracle_check

n = 256
config = ExperimentConfig("isotonic", {"family": "steps", "k": 3, "height": 2.0}, 1.0, [n], reps=500, seed=1)
_, mu, _ = config.setting(n)

# candidates: the truth, a two-step coarsening and the best constant
two = mu.copy()
two[: 2 * n // 3] = mu[: 2 * n // 3].mean()
candidates = [mu, project(two, Isotonic(n)).fit, np.full(n, mu.mean())]

rep = oracle_check(config, candidates)
print(f"simulated risk {rep.risk.mean_risk:.4f} +- {rep.risk.std_error:.4f}")
for row, label in zip(rep.rows, ("truth", "two steps", "constant")):
    print(f"  {label:10s} bound {row['rhs']:.4f}  margin {row['margin']:+.4f}")
print("holds" if rep.passes else "violated")
