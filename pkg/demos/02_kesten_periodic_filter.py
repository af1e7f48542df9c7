#!/usr/bin/env python3
"""The 8-state counterexample: a two-symbol lumping of an aperiodic,
irreducible, doubly stochastic chain whose *filter* is periodic.

Started from an admissible point, the filter visits a set of exactly eight
points forever, its per-step support settles into a 4+4 alternation, and
two nearby starts never attract each other: the transport distance between
their n-step laws stays bounded below.
"""

import numpy as np

import filtermc as fm

model = fm.kesten_model()
m = model.partition
print("base chain:", fm.check_irreducible_aperiodic(m.base))
print("stationary vector:", model.stationary.coords)

x0 = np.asarray(fm.gallery.KESTEN_DEFAULT_START)
print("\nadmissible start:", x0)

orbit = []
mu = fm.dirac(x0)
sizes = []
for n in range(1, 21):
    mu = fm.pushforward(mu, m, prune=0.0)
    sizes.append(mu.size)
    for p in mu.points:
        if not any(np.abs(p - q).sum() <= 1e-9 for q in orbit):
            orbit.append(p.copy())
print("per-step support sizes:", sizes)
print("distinct points ever visited:", len(orbit))

O = np.asarray(orbit)
D = np.abs(O[:, None, :] - O[None, :, :]).sum(axis=2)
np.fill_diagonal(D, np.inf)
eps0 = D.min()
print("minimum separation of the orbit, eps0 =", eps0)

print("\nhypothesis check on the first block {0,1,2,3}:")
report = fm.check_isometry_obstruction(m, [0, 1, 2, 3], n_max=5)
print("  isolated orbit points:", report.isolated_pass)
print("  start-independent word sets:", report.equal_words_pass)
print("  exact isometry of the word action:", report.isometry_pass,
      f"(max deviation {report.max_isometry_deviation:.2e})")
print("  => not asymptotically stable:", report.passed)

y0 = x0.copy()
y0[0] -= eps0 / 4
y0[1] += eps0 / 4
print(f"\npaired start at distance eps0/2 = {np.abs(x0 - y0).sum():.3f};"
      " n-step laws never get closer:")
mu_x, mu_y = fm.dirac(x0), fm.dirac(y0)
for n in range(1, 11):
    mu_x = fm.pushforward(mu_x, m, prune=0.0)
    mu_y = fm.pushforward(mu_y, m, prune=0.0)
    d, _ = fm.kantorovich_distance(mu_x, mu_y)
    print(f"  n={n:2d}: d_K = {d:.6f}  (lower bound {eps0 / 2:.3f})")

print("\nrank-one detection comes back undecided, as it must:")
res = fm.detect_rank_one_limit(m, tol=1e-6, max_depth=10)
print("  verdict:", res.kind, "| min proximity over all words:",
      res.diagnostics["min_proximity"])
