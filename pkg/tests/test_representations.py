import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graded_weyl import lie
from graded_weyl import operators as op
from graded_weyl import representations as reps
from graded_weyl import traces as tr

H1 = lie.heisenberg(1)
H2 = lie.heisenberg(2)


def quadratic_op(alg, A):
    """``-sum A_jk X_j X_k`` over the first layer."""
    k = len(A)
    return op.ConstDiffOp(alg, {(i, j): -A[i][j] for i in range(k) for j in range(k)})


def random_pd(d, seed):
    B = np.random.default_rng(seed).normal(size=(d, d))
    return B @ B.T + 0.5 * np.eye(d)


def test_ladder_examples():
    """[TRIVIAL]"""
    q, p = reps.ladder_matrices(6)
    comm = q @ p - p @ q
    assert np.allclose(comm[:5, :5], 1j * np.eye(5), atol=1e-14)
    for l in range(5):
        assert q[l, l + 1] == pytest.approx(np.sqrt(l + 1) / np.sqrt(2))
    assert np.allclose(q, q.T) and np.allclose(q.imag, 0)
    assert np.allclose(p, -p.T) and np.allclose(p.real, 0)
    q2, p2 = reps.ladder_matrices(2)
    r = 1 / np.sqrt(2)
    assert np.allclose(q2, [[0, r], [r, 0]])
    assert np.allclose(p2, [[0, -1j * r], [1j * r, 0]])
    with pytest.raises(ValueError):
        reps.ladder_matrices(1)


def test_pi_of_T():
    """[PAPER] pi_s(T) = i s."""
    basis = reps.OscillatorBasis(1, 10)
    for s in (0.5, -2.0):
        M = reps.rep_heisenberg(op.field_op(H1, 2), s, basis).matrix
        assert np.allclose(M, 1j * s * np.eye(10))
    with pytest.raises(ValueError):
        reps.rep_heisenberg(op.field_op(H1, 2), 0.0, basis)


def test_harmonic_oscillator_levels():
    """[PAPER] pi_1(-(X1^2+X2^2)) = p^2 + q^2 with levels 1, 3, 5, ..."""
    P = -op.canonical_laplacian(H1)
    M = reps.rep_heisenberg(P, 1.0, reps.OscillatorBasis(1, 30)).matrix
    ev = np.linalg.eigvalsh(M)
    # padding makes the compression exact: the matrix is diagonal
    assert np.allclose(ev, 2 * np.arange(30) + 1, atol=1e-10)
    q, p = reps.ladder_matrices(40)
    assert np.allclose(M, (p @ p + q @ q)[:30, :30])


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10), st.sampled_from([1.0, -1.0]), st.integers(0, 50))
def test_rep_homogeneity(s, sgn, seed):
    """[PAPER] pi_s(P) = |s|^{m/2} pi_{sgn s}(P) for homogeneous even order."""
    A = random_pd(2, seed)
    P4 = op.ConstDiffOp(H1, {(0, 0, 1, 1): 0.3, (2, 2): -0.7, (0, 1, 2): 0.2, (0, 0, 0, 0): 1.0})
    basis = reps.OscillatorBasis(1, 12)
    for D, m in ((quadratic_op(H1, A), 2), (P4, 4)):
        a = reps.rep_heisenberg(D, sgn * s, basis).matrix
        b = reps.rep_heisenberg(D, sgn, basis).matrix
        assert np.allclose(a, s ** (m / 2) * b, atol=1e-12 * max(1, s**2) * np.abs(b).max())


@pytest.mark.parametrize("seed", [0, 1])
def test_rep_hermitian(seed):
    """[DERIVED] formally symmetric operators map to Hermitian matrices."""
    A = random_pd(4, seed)
    D = quadratic_op(H2, A) + op.ConstDiffOp(H2, {(4, 4): -1.0})
    assert D == op.formal_adjoint(D)
    M = reps.rep_heisenberg(D, 0.7, reps.OscillatorBasis(2, 8)).matrix
    assert np.allclose(M, M.conj().T, atol=1e-12)


def test_trace_exp_rep_examples():
    """[DERIVED] geometric series sum exp(-(2l+1)) = 1/(e - 1/e)."""
    P = -op.canonical_laplacian(H1)
    v, err = reps.trace_exp_rep(reps.rep_heisenberg(P, 1.0, reps.OscillatorBasis(1, 60)))
    assert v == pytest.approx(1 / (np.e - 1 / np.e), abs=1e-6)
    assert v == pytest.approx(0.4254590, abs=1e-7)
    v2, _ = reps.trace_exp_rep(reps.rep_heisenberg(2 * P, 1.0, reps.OscillatorBasis(1, 60)))
    assert v2 == pytest.approx(1 / (np.e**2 - np.e**-2), abs=1e-10)


def test_trace_error_decreases():
    """[TRIVIAL]"""
    P = -op.canonical_laplacian(H1)
    errs = [reps.trace_exp_rep(reps.rep_heisenberg(P, 1.0, reps.OscillatorBasis(1, N)))[1] for N in (5, 10, 20, 40)]
    assert all(a > b for a, b in zip(errs, errs[1:]))


def test_trace_rejects_non_hermitian():
    """[TRIVIAL]"""
    M = reps.RepMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]), 1.0, 1, 2)
    with pytest.raises(ValueError):
        reps.trace_exp_rep(M)


def test_plancherel_sublaplacian():
    """[DERIVED] matches the sinh closed form 1/(64 pi^2)."""
    r = reps.tau_heisenberg_plancherel(-op.canonical_laplacian(H1), reps.OscillatorBasis(1, 60))
    assert r.value == pytest.approx(1 / (64 * np.pi**2), rel=1e-4)
    assert r.method == "heisenberg_plancherel"


@pytest.mark.parametrize("A", [np.diag([1.0, 4.0]), 2 * np.eye(2), random_pd(2, 3)], ids=["diag14", "2I", "random"])
def test_plancherel_vs_closed_form(A):
    """[DERIVED] oracle equivalence with the sinh product."""
    r = reps.tau_heisenberg_plancherel(quadratic_op(H1, A), reps.OscillatorBasis(1, 60))
    assert r.value == pytest.approx(tr.tau_exp_heisenberg(A).value, rel=1e-4)


def test_plancherel_scaling_2I():
    """[DERIVED] A = 2I gives 2^{-2} / (64 pi^2)."""
    r = reps.tau_heisenberg_plancherel(quadratic_op(H1, 2 * np.eye(2)), reps.OscillatorBasis(1, 60))
    assert r.value == pytest.approx(0.25 / (64 * np.pi**2), rel=1e-4)


def test_plancherel_h2():
    """[DERIVED] two modes against the closed form."""
    A = np.diag([1.0, 2.0, 1.5, 1.0])
    r = reps.tau_heisenberg_plancherel(quadratic_op(H2, A), reps.OscillatorBasis(2, 40))
    assert r.value == pytest.approx(tr.tau_exp_heisenberg(A).value, rel=1e-3)


@pytest.mark.parametrize("a", [0.5, 2.0])
def test_quartic_reduction(a):
    """[PAPER] X1^4 + X2^4 - a T^2: the two-representation reduction equals the Plancherel integral."""
    D = op.ConstDiffOp(H1, {(0, 0, 0, 0): 1.0, (1, 1, 1, 1): 1.0, (2, 2): -a})
    basis = reps.OscillatorBasis(1, 60)
    p = reps.tau_heisenberg_plancherel(D, basis)
    r = reps.tau_heisenberg_reduction(D, basis)
    assert r.value == pytest.approx(p.value, rel=1e-4)


def test_reduction_quadratic_matches_closed_form():
    """[DERIVED] m = 2 reduction against the sinh product."""
    r = reps.tau_heisenberg_reduction(-op.canonical_laplacian(H1), reps.OscillatorBasis(1, 60))
    assert r.value == pytest.approx(1 / (64 * np.pi**2), rel=1e-4)


def test_truncation_stability():
    """[DERIVED] |value(N) - value(2N)| < 10 * error(N)."""
    D = quadratic_op(H1, np.diag([1.0, 4.0]))
    a = reps.tau_heisenberg_plancherel(D, reps.OscillatorBasis(1, 30))
    b = reps.tau_heisenberg_plancherel(D, reps.OscillatorBasis(1, 60))
    assert abs(a.value - b.value) < 10 * a.error_estimate


def test_reliable_spectrum():
    """[TRIVIAL] levels 2l+1 survive, capped at 80% of the basis."""
    ev = reps.reliable_spectrum(-op.canonical_laplacian(H1), 1.0, reps.OscillatorBasis(1, 40))
    assert len(ev) == 32
    assert np.allclose(ev, 2 * np.arange(32) + 1)


def test_heisenberg_modes():
    """[TRIVIAL]"""
    assert reps.heisenberg_modes(H2) == 2
    with pytest.raises(ValueError):
        reps.heisenberg_modes(lie.abelian(3))
    with pytest.raises(ValueError):
        reps.OscillatorBasis(1, 1)
