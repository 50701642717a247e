"""The optimal-transport corner at desk scale.

Push quadrature weights forward under a map, compute Wasserstein-2
matchings by factorial brute force and by the assignment solver, and
exhibit the transport bound: moving every sample along the map costs at
least the optimal rearrangement of the resulting point cloud.
"""

import numpy as np

from mapgeom import (
    DiscreteMeasure,
    MapField,
    QuadratureDomain,
    make_manifold,
    pushforward_measure,
    submersion_check,
    wasserstein2_assignment,
    wasserstein2_bruteforce,
)

flat1 = make_manifold("flat:n=1")
rng = np.random.default_rng(3)

# --- push-forward measures ----------------------------------------------------
n = 6
domain = QuadratureDomain(np.full(n, 1.0 / n))
q = MapField(domain, flat1, np.array([[0.0], [0.5], [0.5], [1.5], [2.0], [3.0]]))
mu = pushforward_measure(q)
print("push-forward of uniform weights under a map with a collision:")
print(f"  atoms  {mu.atoms.ravel()}")
print(f"  masses {mu.masses}   (two samples merged)")

# --- brute force certifies the assignment solver --------------------------------
print("\nsolver vs factorial brute force on random equal-mass clouds:")
for trial in range(3):
    k = int(rng.integers(4, 9))
    a = DiscreteMeasure(rng.normal(size=(k, 2)), np.full(k, 1.0 / k))
    b = DiscreteMeasure(rng.normal(size=(k, 2)), np.full(k, 1.0 / k))
    brute = wasserstein2_bruteforce(a, b)
    solved = wasserstein2_assignment(a, b)
    print(f"  n={k}: brute {brute.cost:.12f}  solver {solved.cost:.12f}  "
          f"equal: {solved.cost == brute.cost}")

# --- translation moves mass rigidly --------------------------------------------
x = rng.normal(size=(5, 2))
shift = np.array([0.6, -0.3])
a = DiscreteMeasure(x, np.full(5, 0.2))
b = DiscreteMeasure(x + shift, np.full(5, 0.2))
print(f"\ntranslation by t = {shift}: W2^2 = "
      f"{wasserstein2_assignment(a, b).cost:.12f}  (|t|^2 = {shift @ shift:.12f})")

# --- the transport bound --------------------------------------------------------
print("\nsquared L2 displacement vs optimal transport cost:")
base = MapField(domain, flat1, np.arange(n, dtype=float)[:, None])
crossed = MapField(domain, flat1, base.values[rng.permutation(n)])
res = submersion_check(base, crossed)
print(f"  shuffled rearrangement: l2 {res.l2_cost:.6f} >= w2 {res.w2_cost:.6f} "
      f"(equality: {res.equality})")

target = np.sort(rng.normal(size=n))[:, None]
best = wasserstein2_bruteforce(pushforward_measure(base),
                               DiscreteMeasure(target, np.full(n, 1.0 / n)))
optimal = MapField(domain, flat1, target[best.perm])
res2 = submersion_check(base, optimal)
print(f"  optimal rearrangement:  l2 {res2.l2_cost:.6f} == w2 {res2.w2_cost:.6f} "
      f"(equality: {res2.equality})")
