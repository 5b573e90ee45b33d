"""Residue of the resolvent power ``(1 + P)^{-Q/m}``.

For ``T = (1 + P)^{-Q/m}`` define ``a_T(s) = tau(s^Q (1 + s^m P)^{-Q/m} - T)``.
Frullani's integral shows ``a_T(s) = Res(T) log s`` with

    Res(T) = Q / Gamma(Q/m + 1) * tau(e^{-P}).

The definition side is evaluated through the scalar reduction of
:func:`graded_weyl.traces.tau_f_homogeneous`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .traces import TraceResult, tau_f_homogeneous

DEFAULT_S = (2.0, np.e, 10.0)
SPREAD_TOL = 1e-5


@dataclass
class ResidueResult:
    value: float
    s_values: list
    spread: float
    per_s: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.spread < SPREAD_TOL * max(1.0, abs(self.value))


def residue_closed_form(d_hom: float, m: float, tau_exp: TraceResult | float) -> float:
    tau = tau_exp.value if isinstance(tau_exp, TraceResult) else float(tau_exp)
    if d_hom <= 0 or m <= 0 or tau <= 0:
        raise ValueError("inputs must be positive")
    return d_hom / special.gamma(d_hom / m + 1) * tau


def _g(x, a):
    """``x^a (1 + x)^{-a} = exp(-a log1p(1/x))``."""
    return np.exp(-a * np.log1p(1.0 / x))


def _g_diff(x, y, a):
    """``g(x) - g(y)`` without cancellation."""
    lx = -a * np.log1p(1.0 / x)
    ly = -a * np.log1p(1.0 / y)
    return np.exp(ly) * np.expm1(lx - ly)


def f_s(x, s, d_hom, m):
    """``s^Q (1 + s^m x)^{-Q/m} - (1 + x)^{-Q/m}``, written as ``x^{-a} (g(s^m x) - g(x))``."""
    a = d_hom / m
    x = np.asarray(x, dtype=float)
    return x ** (-a) * _g_diff(s**m * x, x, a)


def a_T(s: float, d_hom: float, m: float, tau_exp: TraceResult) -> float:
    """``tau(f_s(P))`` for homogeneous ``P``."""
    if s <= 0:
        raise ValueError("s must be positive")
    return tau_f_homogeneous(lambda x: f_s(x, s, d_hom, m), d_hom, m, tau_exp).value


def residue_via_definition(d_hom: float, m: float, tau_exp: TraceResult, s_values=DEFAULT_S) -> ResidueResult:
    """``a_T(s) / log s`` for each ``s``; value is their mean."""
    vals = []
    for s in s_values:
        if s <= 0 or s == 1:
            raise ValueError("s must be positive and different from 1")
        vals.append(a_T(s, d_hom, m, tau_exp) / np.log(s))
    vals = np.asarray(vals)
    spread = float(vals.max() - vals.min())
    return ResidueResult(float(vals.mean()), list(map(float, s_values)), spread, list(map(float, vals)))


@dataclass
class FrullaniCheck:
    lhs: float
    rhs: float
    error: float


def frullani_check(a: float, m: float, s: float) -> FrullaniCheck:
    """``int_0^inf (g(s^m x) - g(x)) / x dx`` against ``m log s``.

    Integrated in ``t = log x``, where both tails decay exponentially.
    """
    if a <= 0 or s <= 0:
        raise ValueError("a and s must be positive")
    rhs = m * np.log(s)
    if s == 1:
        return FrullaniCheck(0.0, 0.0, 0.0)
    sm = s**m
    h = lambda t: float(_g_diff(sm * np.exp(t), np.exp(t), a))
    # tails: e^{a t} below, e^{-t} above; both beyond e^{-40}
    L = abs(m * np.log(s))
    lo, _ = integrate.quad(h, -40.0 / a - L, 0, epsabs=1e-14, epsrel=1e-13, limit=200)
    hi, _ = integrate.quad(h, 0, 40.0 + L, epsabs=1e-14, epsrel=1e-13, limit=200)
    lhs = lo + hi
    return FrullaniCheck(lhs, rhs, abs(lhs - rhs))
