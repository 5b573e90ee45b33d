"""
Residues and the zeta trace
===========================

The residue (1/log s) tau(s^Q alpha_s(T) - T) of T = (1 + P)^{-Q/m} does not
depend on s, and equals Q / Gamma(Q/m + 1) tau(exp(-P)).  The same trace
controls tau(M_f (1 + P)^{-z}) through a Gamma ratio.
"""

import numpy as np

from graded_weyl import discretize as dz
from graded_weyl import lie, residue, spectra, traces
from graded_weyl import operators as op

# the Frullani integral behind the s-independence
for a, m, s in ((0.5, 2, 2.0), (2.0, 4, 10.0)):
    c = residue.frullani_check(a, m, s)
    print(f"Frullani a={a} m={m} s={s}: {c.lhs:.12f} vs m log s = {c.rhs:.12f}")

tau = traces.tau_exp_gaussian([[1.0]])
r = residue.residue_via_definition(1, 2, tau)
print("R, -d^2: per s", np.round(r.per_s, 12), " closed form", residue.residue_closed_form(1, 2, tau), " 1/pi", 1 / np.pi)

aniso = op.Symbol({(4, 0): 1.0, (0, 2): 1.0}, (1, 2))
t = traces.tau_exp_aniso(aniso, (1, 2))
r = residue.residue_via_definition(3, 4, t)
print(f"R^2 layers (1,2), xi^4 + eta^2: tau = {t.value:.10f}, residue {r.value:.10f} (spread {r.spread:.1e})")

heis = traces.tau_exp_heisenberg(np.eye(2))
print("Heisenberg sub-Laplacian residue", residue.residue_via_definition(4, 2, heis).value, " 1/(32 pi^2)", 1 / (32 * np.pi**2))

# discrete trace of M_f (1 + P)^{-z} on a grid against the Gamma-ratio formula
R = lie.abelian(1)
cfg = spectra.WeylConfig(R, -op.canonical_laplacian(R), op.gaussian_bump(1), 2.0, dz.Grid(1, 8.0, 1024))
for row in spectra.zeta_trace_check(cfg, [1.1, 2.0, 3.0, 5.0]):
    print(f"z = {row.z:3.1f}: grid {row.measured:.8f}  formula {row.formula:.8f}  rel {row.relative_error:.1e}")
