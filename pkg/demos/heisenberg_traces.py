"""
Heat traces on the Heisenberg group
===================================

The group trace of exp(-P) for the sub-Laplacian P = -(X1^2 + X2^2) can be
computed three ways: the closed sinh form, a Plancherel integral over the
Schroedinger representations, and the harmonic oscillator levels directly.
"""

import numpy as np

from graded_weyl import lie, traces
from graded_weyl import operators as op
from graded_weyl import representations as reps

H = lie.heisenberg(1)
P = -op.canonical_laplacian(H)
print(H.name, "homogeneous dimension", lie.homogeneous_dimension(H))

# pi_1(P) is p^2 + q^2, the harmonic oscillator: levels 1, 3, 5, ...
basis = reps.OscillatorBasis(1, 30)
M = reps.rep_heisenberg(P, 1.0, basis).matrix
print("lowest levels:", np.round(np.linalg.eigvalsh(M)[:6], 10))

# trace of exp(-pi_1(P)) is a geometric series
val, err = reps.trace_exp_rep(reps.rep_heisenberg(P, 1.0, reps.OscillatorBasis(1, 60)))
print(f"Tr exp(-pi_1(P)) = {val:.10f}  (1/(e - 1/e) = {1 / (np.e - 1 / np.e):.10f})")

# group trace: integrate over s with the Plancherel weight |s| / (2 pi)^2
closed = traces.tau_exp_heisenberg(np.eye(2))
plan = reps.tau_heisenberg_plancherel(P, reps.OscillatorBasis(1, 60))
print(f"closed form   {closed.value:.12e}")
print(f"Plancherel    {plan.value:.12e}  (error estimate {plan.error_estimate:.1e})")
print(f"1/(64 pi^2)   {1 / (64 * np.pi**2):.12e}")

# a quartic operator has no closed form; two routes must agree
for a in (0.5, 2.0):
    D = op.ConstDiffOp(H, {(0, 0, 0, 0): 1.0, (1, 1, 1, 1): 1.0, (2, 2): -a})
    p = reps.tau_heisenberg_plancherel(D, basis)
    r = reps.tau_heisenberg_reduction(D, basis)
    print(f"X1^4 + X2^4 - {a} T^2: Plancherel {p.value:.8e}, reduction {r.value:.8e}")
