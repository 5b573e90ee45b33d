"""
The Weyl law for M_f (1 - d^2)^{-1} on the line
================================================

The singular values of T = M_f (1 + P)^{-gamma/m} decay like C k^{-gamma/Q},
here C k^{-2}.
For P = -d^2, f = exp(-x^2) and gamma = 2 the constant is 2/pi.  A periodic
Fourier grid stands in for the line; the box must be small enough that the
grid resolves the frequencies the fit window needs.
"""

import numpy as np

from graded_weyl import discretize as dz
from graded_weyl import lie, spectra
from graded_weyl import operators as op

R = lie.abelian(1)
P = -op.canonical_laplacian(R)
f = op.gaussian_bump(1)

# mu(k) ~ 0.64 k^{-2} lives at frequencies up to about mu^{-1/2} ~ 1.25 k,
# so the window end k = 1000 needs |xi| past 1000
for L in (16 * np.pi, 5.0):
    grid = dz.Grid(1, L, 4096)
    cfg = spectra.WeylConfig(R, P, f, 2.0, grid, window=(100, 1000))
    rep = spectra.weyl_experiment(cfg)
    xi_max = np.pi * 4096 / (2 * L)
    print(f"L = {L:7.3f}  Nyquist |xi| = {xi_max:6.1f}  measured {rep.measured.constant:.5f}"
          f" +- {rep.measured.stderr:.1e}  predicted {rep.predicted.value:.5f}  rel {rep.relative_error:.3f}")

# the scaled sequence (k+1)^2 mu(k) flattens onto the constant
k = np.array([10, 50, 100, 300, 1000])
print("k:", k)
print("(k+1)^2 mu(k):", np.round((k + 1) ** 2 * rep.sv.values[k], 5))

# odd f splits into positive and negative parts of equal weight
g = op.Coefficient.from_expr("x0*exp(-x0**2)", 1)
signed = spectra.signed_experiment(spectra.WeylConfig(R, P, g, 2.0, dz.Grid(1, 5.0, 4096), window=(100, 600)))
print(f"f = x exp(-x^2): plus {signed.plus.constant:.5f} (predicted {signed.predicted_plus:.5f}),"
      f" minus {signed.minus.constant:.5f} (predicted {signed.predicted_minus:.5f})")
