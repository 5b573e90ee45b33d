"""Acceptance criteria C1 to C12 at their stated tolerances.

Each ``cN`` returns ``(passed, detail)``; the tests assert on it and the
terminal summary prints one line per criterion.  Run this file directly for
the table alone.
"""
import math
import sys
import time

import numpy as np
import pytest

from graded_weyl import coverings as cv
from graded_weyl import discretize as dz
from graded_weyl import lie
from graded_weyl import operators as op
from graded_weyl import representations as reps
from graded_weyl import residue as rs
from graded_weyl import spectra as sp
from graded_weyl import traces as tr

RESULTS: dict = {}
R1 = lie.abelian(1)
LAP1 = -op.canonical_laplacian(R1)


def rel(a, b):
    return abs(a - b) / abs(b)


def random_pd(d, seed):
    B = np.random.default_rng(seed).normal(size=(d, d))
    return B @ B.T + 0.5 * np.eye(d)


def quadratic_symbol(A):
    A = np.asarray(A, dtype=float)
    d = len(A)
    terms = {}
    for i in range(d):
        for j in range(d):
            e = [0] * d
            e[i] += 1
            e[j] += 1
            terms[tuple(e)] = terms.get(tuple(e), 0.0) + A[i, j]
    return op.Symbol(terms, (1,) * d)


def quadratic_op(alg, A):
    k = len(A)
    return op.ConstDiffOp(alg, {(i, j): -A[i][j] for i in range(k) for j in range(k)})


# --- criteria -----------------------------------------------------------------


def c1():
    t = time.perf_counter()
    worst = 0.0
    for a in (0.5, 1.0, 2.0):
        for m in (1, 2, 4):
            for s in (2.0, math.e, 10.0):
                worst = max(worst, rs.frullani_check(a, m, s).error)
    dt = time.perf_counter() - t
    return worst < 1e-8 and dt < 1.0, f"max error {worst:.2e}, {dt:.2f} s"


def c2():
    worst = 0.0
    cases = [(quadratic_symbol([[1.0]]), 1, np.eye(1)), (op.Symbol({(4,): 1.0}, (1,)), 1, None)]
    cases += [(quadratic_symbol(np.eye(d)), d, np.eye(d)) for d in (2, 3)]
    cases.append((quadratic_symbol(random_pd(2, 7)), 2, random_pd(2, 7)))
    for p, d, A in cases:
        direct = tr.tau_exp_direct(p, d).value
        worst = max(worst, rel(tr.tau_exp_sphere(p, p.order, d).value, direct))
        if A is not None:
            worst = max(worst, rel(tr.tau_exp_gaussian(A).value, direct))
            closed = (4 * np.pi) ** (-d / 2) * np.linalg.det(A) ** -0.5
            worst = max(worst, rel(closed, direct))
    return worst < 1e-6, f"max relative error {worst:.2e}"


def c3():
    p = op.Symbol({(4, 0): 1.0, (0, 2): 1.0}, (1, 2))
    aniso = tr.tau_exp_aniso(p, (1, 2)).value
    direct = tr.tau_exp_direct(p, 2).value
    e1 = rel(aniso, direct)
    cub = tr.anisotropic_sphere_measure((1, 2), method="cubature")
    mc = tr.anisotropic_sphere_measure((1, 2), method="monte_carlo", n_samples=10**6, seed=0)
    e2 = rel(mc, cub)
    return e1 < 1e-4 and e2 < 1e-3, f"aniso {aniso:.7f} direct {direct:.7f} (rel {e1:.1e}); measure rel {e2:.1e}"


def c4():
    H1 = lie.heisenberg(1)
    P = -op.canonical_laplacian(H1)
    v, _ = reps.trace_exp_rep(reps.rep_heisenberg(P, 1.0, reps.OscillatorBasis(1, 60)))
    e_osc = abs(v - 1 / (math.e - 1 / math.e))
    e_pl = e_det = 0.0
    for A in (np.eye(2), np.diag([1.0, 4.0]), random_pd(2, 11)):
        closed = tr.tau_exp_heisenberg(A).value
        pl = reps.tau_heisenberg_plancherel(quadratic_op(H1, A), reps.OscillatorBasis(1, 60)).value
        e_pl = max(e_pl, rel(pl, closed))
        e_det = max(e_det, rel(tr.tau_exp_heisenberg_det(A).value, closed))
    ok = e_osc < 1e-6 and e_pl < 1e-4 and e_det < 1e-8
    return ok, f"oscillator {e_osc:.1e}, Plancherel {e_pl:.1e}, det form {e_det:.1e}"


def c5():
    details = []
    ok = True
    cases = [
        ("R1", 1, 2, tr.tau_exp_gaussian([[1.0]]), 1 / np.pi),
        ("R2(1,2)", 3, 4, tr.tau_exp_direct(op.Symbol({(4, 0): 1.0, (0, 2): 1.0}, (1, 2)), 2), None),
        ("H1", 4, 2, tr.tau_exp_heisenberg(np.eye(2)), 1 / (32 * np.pi**2)),
    ]
    for name, Q, m, tau, exact in cases:
        r = rs.residue_via_definition(Q, m, tau)
        closed = rs.residue_closed_form(Q, m, tau)
        e = rel(r.value, closed)
        if exact is not None:
            e = max(e, rel(r.value, exact))
        ok &= e < 1e-5 and r.spread < 1e-5
        details.append(f"{name} {e:.1e}/{r.spread:.1e}")
    return ok, ", ".join(details)


def c6():
    cfg = sp.WeylConfig(R1, LAP1, op.gaussian_bump(1), 2.0, dz.Grid(1, 16 * np.pi, 4096), window=(100, 1000))
    rep = sp.weyl_experiment(cfg)
    e = rel(rep.measured.constant, 2 / np.pi)
    return e < 0.05, f"measured {rep.measured.constant:.5f} vs 2/pi (rel {e:.3f})"


def c7():
    a = op.trig_polynomial(1, const=2.0, sin=[1.0])
    cfg = sp.WeylConfig(R1, op.DivergenceOp(R1, a), op.gaussian_bump(1), 2.0, dz.Grid(1, 2 * np.pi, 2048), window=(100, 600))
    rep = sp.weyl_experiment(cfg)
    return rep.relative_error < 0.10, f"measured {rep.measured.constant:.5f} vs {rep.predicted.value:.5f} (rel {rep.relative_error:.3f})"


def c8():
    A = lie.abelian(2, (1, 2))
    P = -op.canonical_laplacian(A)
    f = op.gaussian_bump(2, width=[2.0, 0.5])
    cfg = sp.WeylConfig(A, P, f, 4.0, dz.Grid(2, [7.0, 1.75], [96, 96]), K=200, window=(40, 160), refine=dz.Grid(2, [7.0, 1.75], [64, 64]))
    rep = sp.weyl_experiment(cfg)
    ok = rep.relative_error < 0.15 and rep.self_convergence < 0.10
    return ok, f"measured {rep.measured.constant:.5f} vs {rep.predicted.value:.5f} (rel {rep.relative_error:.3f}), spread {rep.self_convergence:.1e}"


def c9():
    g = op.Coefficient.from_expr("x0*exp(-x0**2)", 1)
    grid = dz.Grid(1, 5.0, 4096)
    rep = sp.signed_experiment(sp.WeylConfig(R1, LAP1, g, 2.0, grid, window=(100, 600)))
    e = max(rep.relative_errors)
    pos = sp.signed_experiment(sp.WeylConfig(R1, LAP1, op.gaussian_bump(1), 2.0, grid, window=(100, 600)))
    ok = e < 0.10 and pos.minus.constant < 1e-3
    return ok, f"odd f: max rel {e:.4f}; f >= 0: minus constant {pos.minus.constant:.1e}"


def c10():
    cfg = sp.WeylConfig(R1, LAP1, op.gaussian_bump(1), 2.0, dz.Grid(1, 8.0, 1024))
    r3, r11 = sp.zeta_trace_check(cfg, [3.0, 1.1])
    ok = r3.relative_error < 0.02 and r11.relative_error < 0.10
    return ok, f"z=3 rel {r3.relative_error:.1e}, z=1.1 rel {r11.relative_error:.1e}"


def c11():
    algs = {1: lie.abelian(1), 2: lie.abelian(2), 3: lie.abelian(2, (1, 2))}
    worst = {}
    ok = True
    for delta, alg in algs.items():
        worst[delta] = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            lo = rng.uniform(-3, 0, alg.dim)
            pts = rng.uniform(lo, lo + rng.uniform(0.5, 3, alg.dim), (1500, alg.dim))
            cov = cv.greedy_cover(pts, float(rng.uniform(0.3, 1.0)), alg)
            ok &= cv.covers(cov, pts)
            worst[delta] = max(worst[delta], cov.multiplicity)
        ok &= worst[delta] <= 5**delta
    defects = []
    # unit square at 4 points per radius, unit interval at 256
    for dim, steps in ((2, 4), (1, 256)):
        alg = lie.abelian(dim)
        for l in (3, 4, 5):
            h = 2.0 ** (-l - 1) / steps
            axes = [np.arange(0.0, 1.0 + 0.5 * h, h)] * dim
            mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dim)
            part = cv.partition_functions(cv.cover_for_level(mesh, l, alg), l, axes)
            defect, slack = cv.mass_defect(part)
            ok &= defect <= 2.0**-l + slack
            defects.append(f"{dim}D l={l} {defect:.3f}<={2.0**-l:.3f}+{slack:.3f}")
    mult = ", ".join(f"{worst[d]}/{5**d}" for d in algs)
    return ok, f"multiplicity {mult}; " + ", ".join(defects)


def c12():
    H = lie.heisenberg(1)
    P = -op.canonical_laplacian(H)
    L = 2.0
    cfg = sp.WeylConfig(H, P, op.compact_bump(3, radius=L / 2), 2.0, dz.Grid(3, L, 32, "finite_difference_dirichlet"), K=800, window=(40, 400))
    rep = sp.weyl_experiment(cfg)
    return rep.relative_error < 0.25, f"measured {rep.measured.constant:.5f} vs {rep.predicted.value:.5f} (rel {rep.relative_error:.2f}), informational"


CRITERIA = {f"C{i}": globals()[f"c{i}"] for i in range(1, 13)}
TITLES = {
    "C1": "Frullani identity",
    "C2": "Euclidean trace oracles",
    "C3": "anisotropic trace",
    "C4": "Heisenberg traces",
    "C5": "residue",
    "C6": "Weyl law 1D, box 16 pi",
    "C7": "Weyl law, variable coefficient",
    "C8": "Weyl law, anisotropic 2D",
    "C9": "signed parts",
    "C10": "zeta-trace identity",
    "C11": "coverings and partitions",
    "C12": "Heisenberg 3D Weyl law",
}
SLOW = {"C6", "C8", "C12"}


def evaluate(name):
    t = time.perf_counter()
    ok, detail = CRITERIA[name]()
    line = f"{name:<4}{'PASS' if ok else 'FAIL'}  {TITLES[name]}: {detail} [{time.perf_counter() - t:.1f} s]"
    RESULTS[name] = line
    print(line)
    return ok, line


@pytest.mark.parametrize(
    "name",
    [
        pytest.param(n, marks=[pytest.mark.slow] if n in SLOW else [])
        if n != "C12"
        else pytest.param(n, marks=[pytest.mark.slow, pytest.mark.xfail(reason="informational: 32^3 grid is pre-asymptotic", strict=False)])
        for n in CRITERIA
    ],
)
def test_criterion(name):
    ok, line = evaluate(name)
    assert ok, line


if __name__ == "__main__":
    names = sys.argv[1:] or list(CRITERIA)
    results = [evaluate(n)[0] for n in names]
    sys.exit(0 if all(results) else 1)
