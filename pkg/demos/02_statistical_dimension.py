"""Statistical dimension: exact where possible, simulated elsewhere.

For the monotone cone the statistical dimension is the harmonic number
``H_n``, which grows like ``log n``. For convex sequences no closed form
is known, but simulation shows it stays below ``8 log(en)`` whatever the
design. Run with ``python demos/02_statistical_dimension.py``.
"""

import math

from shapereg import ConvexOnDesign, Isotonic, statdim_isotonic_exact, statdim_mc
from shapereg.experiments import design_equispaced, design_geometric, design_uniform

print("monotone cone")
for n in (10, 100, 1000):
    exact = statdim_isotonic_exact(n)
    est = statdim_mc(Isotonic(n), reps=2000, seed=n)
    print(f"  n={n:5d}  exact {exact:.4f}  simulated {est.mean:.4f} +- {est.std_error:.4f}  "
          f"log n = {math.log(n):.3f}")

print("convex cone, 8 log(en) for comparison")
for name, make in (
    ("equispaced", design_equispaced),
    ("geometric", lambda n: design_geometric(n, 0.5)),
    ("uniform", lambda n: design_uniform(n, seed=3)),
):
    for n in (20, 100):
        est = statdim_mc(ConvexOnDesign(make(n)), reps=1000, seed=n)
        print(f"  {name:10s} n={n:4d}  {est.mean:6.2f} +- {est.std_error:.2f}  "
              f"bound {8 * math.log(math.e * n):6.2f}")
