"""Convergence rates of least squares, and a design that slows convex LS down.

Three simulations at noise level 0.5:

* monotone LS on a linear truth, expected slope near -2/3;
* convex LS on an equispaced design with a quadratic truth, near -4/5;
* convex LS on a geometric design built to make an increasing truth
  hard, back near -2/3.

The grids and replication counts are kept small so the demo finishes in
under a minute; the acceptance suite runs the full version. Run with
``python demos/03_rates.py``.
"""

from shapereg.experiments import ExperimentConfig, rate_fit

grid = [64, 128, 256, 512, 1024]
settings = {
    "monotone, linear truth": ("isotonic", {"family": "linear", "v": 1.0}, {"kind": "equispaced"}),
    "convex, equispaced": ("convex", {"family": "quadratic"}, {"kind": "equispaced"}),
    "convex, worst-case design": ("convex", {"family": "exp_increments"}, {"kind": "worst_case"}),
}
for label, (estimator, truth, design) in settings.items():
    config = ExperimentConfig(estimator, truth, 0.5, grid, reps=100, seed=0, design=design)
    fit = rate_fit(config)
    print(f"{label:28s} slope {fit.slope:+.3f} +- {fit.slope_stderr:.3f}  (r^2 {fit.r_squared:.3f})")
