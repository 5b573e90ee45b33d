"""
Coverings and disjoint partitions
=================================

Greedy eps-separated centers give a covering by quasi-balls whose overlap
count stays below 5^Q.  Refining to radius 2^{-l-1} and cutting the balls
into disjoint cells gives bumps phi_n with sum phi_n^2 = 1 outside a set of
measure about 2^{-l}.
"""

import numpy as np

from graded_weyl import coverings as cv
from graded_weyl import lie

rng = np.random.default_rng(0)
for alg in (lie.abelian(2), lie.abelian(2, (1, 2)), lie.heisenberg(1)):
    pts = rng.uniform(-1, 1, (1000, alg.dim))
    cov = cv.greedy_cover(pts, 0.4, alg)
    print(f"{alg.name:8s} Q = {cov.delta}: {len(cov):3d} balls, covers {cv.covers(cov, pts)},"
          f" multiplicity {cov.multiplicity} <= {5 ** cov.delta}")

# partitions of the unit interval
alg = lie.abelian(1)
for l in (3, 4, 5):
    h = 2.0 ** (-l - 1) / 256
    axes = [np.arange(0.0, 1.0 + h / 2, h)]
    part = cv.partition_functions(cv.cover_for_level(axes[0][:, None], l, alg), l, axes)
    defect, slack = cv.mass_defect(part)
    print(f"l = {l}: {part.n_cells} cells, measure of {{sum phi^2 != 1}} = {defect:.4f}"
          f" (bound 2^-l = {2.0 ** -l:.4f}, grid slack {slack:.4f})")

# an l^2(L^2) decomposition norm is comparable to the L^2 norm
x = np.linspace(-4, 4, 8001)
f = np.exp(-x**2) * np.cos(3 * x)
cov = cv.Covering(np.arange(-4, 4.01, 1.0)[:, None], 1.0, alg)
h = x[1] - x[0]
print("l2(L2) norm", cv.lplq_norm(f, x[:, None], h, 2, 2, cov), " L2 norm", np.sqrt(np.sum(f**2) * h))
