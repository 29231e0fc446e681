"""Oriented triangles on the unit circle.

Equally spaced points give a Riemann sum for the area of the unit disc.
Reversing the groups of a grouped configuration can push the cyclic sum
around, but never past ``pi + 2G``.
"""

import math

import numpy as np

from fillings import circle, pipeline

print("n        sum            |sum - pi|     2 pi^3 / (3 n^2)")
for row in pipeline.circle_convergence_table([6, 12, 24, 96, 1000, 10_000]):
    print(f"{row['n']:<8d} {row['sum']:.12f} {row['error']:.3e}      {row['predicted_error']:.3e}")

rng = np.random.default_rng(0)
part, vec = circle.random_configuration(rng, genus=2)
rep = circle.verify_grouped_bound(part, vec)
print(f"\none genus-2 configuration: sum = {rep.sum:.4f}, bound = {rep.bound:.4f}")
for i, (s, b) in enumerate(zip(rep.group_sums, rep.group_bounds)):
    print(f"  group {i}: {len(vec.groups[i]):2d} vectors, partial sum {s:+.4f} <= {b:.4f}")

batch = circle.batch_bound_trials(100_000, (1, 2), seed=1)
print(f"\n{len(batch)} random configurations: all below the bound: {bool(batch.passed.all())}; "
      f"largest sum seen {batch.sum.max():.4f} (pi = {math.pi:.4f})")
