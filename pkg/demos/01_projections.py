"""Least-squares fits under shape constraints, and how to trust them.

A noisy increasing signal is fitted three ways: as a monotone sequence,
as a valley-shaped sequence, and as a convex sequence on its design.
Each fit comes with an optimality certificate, which we print.

Run with ``python demos/01_projections.py``.
"""

import numpy as np

from shapereg import (
    ConvexOnDesign,
    count_affine_pieces,
    count_constant_pieces,
    kkt_report,
    project_convex,
    project_isotonic,
    project_unimodal,
)

rng = np.random.default_rng(1)
n = 40
x = np.sort(rng.uniform(0, 1, n))
truth = (x - 0.3) ** 2
y = truth + 0.05 * rng.normal(size=n)

# Monotone fit. Pool-adjacent-violators merges neighbouring blocks until
# the block means increase; each block's value is its mean.
iso = project_isotonic(y)
print(f"monotone fit: {count_constant_pieces(iso.fit).count} constant pieces, "
      f"objective {iso.objective:.4f}")
print(f"  certificate: max residual {iso.kkt.max_residual():.1e}")

# Valley fit. The best split between a non-increasing prefix and a
# nondecreasing suffix is found from two prefix sweeps.
uni, split = project_unimodal(y)
print(f"valley fit: split after {split} points, objective {uni.objective:.4f}")

# Convex fit on the actual design, by an active-set method over the kinks.
conv = project_convex(y, x)
print(f"convex fit: {count_affine_pieces(conv.fit, x).count} affine pieces, "
      f"objective {conv.objective:.4f}, {conv.iterations} active-set steps")
print(f"  certificate: max residual {conv.kkt.max_residual():.1e}")

# Convex sequences are valley shaped, so the valley fit can only do better.
assert uni.objective <= conv.objective

# A certificate is only as good as its sensitivity: nudge one value of the
# convex fit and the residuals light up.
bad = conv.fit.copy()
bad[n // 2] += 0.05
print(f"perturbed fit: max residual {kkt_report(y, bad, ConvexOnDesign(x)).max_residual():.1e}")
