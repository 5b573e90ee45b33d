import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special

from graded_weyl import operators as op
from graded_weyl import residue as rs
from graded_weyl import traces as tr

TAU_R1 = tr.tau_exp_gaussian([[1.0]])
ANISO = op.Symbol({(4, 0): 1.0, (0, 2): 1.0}, (1, 2))


def test_closed_form_examples():
    """[DERIVED]"""
    assert rs.residue_closed_form(1, 2, TAU_R1) == pytest.approx(1 / np.pi, rel=1e-14)
    heis = tr.tau_exp_heisenberg(np.eye(2))
    assert rs.residue_closed_form(4, 2, heis) == pytest.approx(1 / (32 * np.pi**2), rel=1e-10)
    assert rs.residue_closed_form(3, 3, 0.25) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        rs.residue_closed_form(1, 2, -1.0)


def test_definition_r1():
    """[DERIVED] s-independent and equal to 1/pi."""
    r = rs.residue_via_definition(1, 2, TAU_R1)
    assert r.value == pytest.approx(1 / np.pi, rel=1e-5)
    assert r.spread < 1e-5 and r.ok
    assert r.s_values == [2.0, np.e, 10.0]


def test_definition_anisotropic():
    """[DERIVED] R^2 with layers (1,2), symbol xi^4 + eta^2: Q = 3, m = 4."""
    t = tr.tau_exp_direct(ANISO, 2)
    r = rs.residue_via_definition(3, 4, t)
    assert r.value == pytest.approx(rs.residue_closed_form(3, 4, t), rel=1e-5)
    assert r.spread < 1e-5


def test_definition_heisenberg():
    """[DERIVED] components reproduce 1/(32 pi^2)."""
    t = tr.tau_exp_heisenberg(np.eye(2))
    r = rs.residue_via_definition(4, 2, t)
    assert r.value == pytest.approx(1 / (32 * np.pi**2), rel=1e-5)


def test_additivity():
    """[PAPER] a(sr) = a(s) + a(r)."""
    for Q, m in ((1, 2), (3, 4), (4, 2)):
        a = lambda s: rs.a_T(s, Q, m, TAU_R1)
        assert a(6.0) == pytest.approx(a(2.0) + a(3.0), rel=1e-6)


def test_definition_rejects_s_one():
    """[TRIVIAL]"""
    with pytest.raises(ValueError):
        rs.residue_via_definition(1, 2, TAU_R1, s_values=[1.0])
    with pytest.raises(ValueError):
        rs.residue_via_definition(1, 2, TAU_R1, s_values=[-2.0])


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("m", [1, 2, 4])
@pytest.mark.parametrize("s", [2.0, np.e, 10.0])
def test_frullani_grid(a, m, s):
    """[PAPER] formula; value by quadrature."""
    c = rs.frullani_check(a, m, s)
    assert c.error < 1e-8
    assert c.rhs == pytest.approx(m * np.log(s))


def test_frullani_examples():
    """[TRIVIAL] / [DERIVED]"""
    assert rs.frullani_check(1.0, 2, 1.0).lhs == 0.0
    assert rs.frullani_check(0.5, 2, 2.0).lhs == pytest.approx(2 * np.log(2), abs=1e-8)
    assert rs.frullani_check(0.5, 2, 2.0).lhs == pytest.approx(1.386294, abs=1e-6)
    with pytest.raises(ValueError):
        rs.frullani_check(0.0, 2, 2.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 3), st.sampled_from([1, 2, 3, 4]), st.floats(1.1, 20))
def test_frullani_antisymmetric(a, m, s):
    """[TRIVIAL] check(a, m, s) = -check(a, m, 1/s)."""
    assert rs.frullani_check(a, m, s).lhs == pytest.approx(-rs.frullani_check(a, m, 1 / s).lhs, abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10))
def test_scale_covariance(c):
    """[DERIVED] P -> cP multiplies the residue by c^{-Q/m}."""
    for Q, m, tau in ((1, 2, TAU_R1), (4, 2, tr.tau_exp_heisenberg(np.eye(2)))):
        scaled = tr.tau_exp_gaussian([[c]]) if Q == 1 else tr.tau_exp_heisenberg(c * np.eye(2))
        assert rs.residue_closed_form(Q, m, scaled) == pytest.approx(c ** (-Q / m) * rs.residue_closed_form(Q, m, tau), rel=1e-8)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 10))
def test_linear_in_tau(lam):
    """[TRIVIAL] the definition side inherits linearity to quadrature tolerance."""
    t = tr.TraceResult(lam * TAU_R1.value, "gaussian")
    assert rs.residue_via_definition(1, 2, t).value == pytest.approx(lam * rs.residue_via_definition(1, 2, TAU_R1).value, rel=1e-9)


def test_f_s_matches_direct_formula():
    """[TRIVIAL] the cancellation-free form equals the naive difference where the latter is accurate."""
    x = np.array([0.01, 0.3, 2.0, 50.0])
    for s, Q, m in ((2.0, 1, 2), (10.0, 3, 4)):
        naive = s**Q * (1 + s**m * x) ** (-Q / m) - (1 + x) ** (-Q / m)
        assert np.allclose(rs.f_s(x, s, Q, m), naive, rtol=1e-10)


def test_gamma_factor():
    """[TRIVIAL] m = Q gives Q tau."""
    assert rs.residue_closed_form(2, 2, TAU_R1) == pytest.approx(2 * TAU_R1.value / special.gamma(2))
