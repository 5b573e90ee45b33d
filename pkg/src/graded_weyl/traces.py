"""Traces tau(e^{-P}) for the model families and the Weyl-law constant.

For an operator of order ``m``, homogeneous under the dilations of a group of
homogeneous dimension ``Q``, every trace ``tau(f(P))`` is a multiple of
``tau(e^{-P})``.  On ``R^d`` the trace is a Fourier integral

    tau(e^{-P}) = (2 pi)^{-d} int exp(-p(xi)) d xi,

which :func:`tau_exp_direct` evaluates by plain cubature and which every other
abelian formula is checked against.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np
from scipy import integrate, linalg, optimize, special
from scipy.stats import qmc

from .operators import Symbol


@dataclass(frozen=True)
class TraceResult:
    value: float
    method: str
    error_estimate: float = 0.0

    def row(self, group: str, operator_digest: str) -> dict:
        return {
            "group": group,
            "operator": operator_digest,
            "method": self.method,
            "value": f"{self.value:.15e}",
            "error_estimate": f"{self.error_estimate:.3e}",
        }


@dataclass(frozen=True)
class WeylConstant:
    value: float
    exponent: float
    inputs_digest: str


def _check_positive(vals, what="symbol"):
    vals = np.asarray(vals)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise ValueError(f"{what} is not positive on the sphere")


def _unit_sphere_integral(h, d: int, rtol=1e-11):
    """Integral of ``h(u)`` over the Euclidean unit sphere ``S^{d-1}``.

    ``h`` takes an array of shape (..., d).  Hyperspherical angles.
    """
    if d == 1:
        return float(np.sum(h(np.array([[1.0], [-1.0]])))), 0.0
    if d == 2:
        f = lambda t: h(np.stack([np.cos(t), np.sin(t)], axis=-1))
        val, err = integrate.quad(lambda t: float(f(np.array([t]))[0]), 0, 2 * np.pi, limit=400, epsabs=0, epsrel=rtol)
        return val, err

    def angles_to_points(a):
        # a: (n, d-1); last angle in [0, 2 pi)
        n = a.shape[0]
        pts = np.ones((n, d))
        jac = np.ones(n)
        s = np.ones(n)
        for k in range(d - 1):
            pts[:, k] = s * np.cos(a[:, k])
            if k < d - 2:
                jac *= np.sin(a[:, k]) ** (d - 2 - k)
            s = s * np.sin(a[:, k])
        pts[:, d - 1] = s
        return pts, jac

    def integrand(a):
        pts, jac = angles_to_points(a)
        return h(pts) * jac

    lo = np.zeros(d - 1)
    hi = np.full(d - 1, np.pi)
    hi[-1] = 2 * np.pi
    res = integrate.cubature(integrand, lo, hi, rtol=rtol, atol=0, max_subdivisions=20000)
    return float(res.estimate), float(res.error)


def tau_exp_sphere(p: Symbol, m: float, d: int) -> TraceResult:
    """Polar-coordinate formula ``Gamma(d/m) / (m (2 pi)^d) int_{S^{d-1}} p^{-d/m}``."""

    def h(u):
        vals = p.real(u)
        _check_positive(vals)
        return vals ** (-d / m)

    s, err = _unit_sphere_integral(h, d)
    c = special.gamma(d / m) / (m * (2 * np.pi) ** d)
    return TraceResult(c * s, "sphere", c * err)


def tau_exp_gaussian(A) -> TraceResult:
    """``(4 pi)^{-d/2} det(A)^{-1/2}`` for ``p(xi) = xi^T A xi``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1] or not np.allclose(A, A.T):
        raise ValueError("A must be symmetric")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise ValueError("A is not positive definite") from None
    d = A.shape[0]
    logdet = 2 * np.sum(np.log(np.diag(L)))
    return TraceResult(float((4 * np.pi) ** (-d / 2) * np.exp(-0.5 * logdet)), "gaussian", 0.0)


def tau_exp_direct(p: Symbol, d: int, rtol: float | None = None) -> TraceResult:
    """``(2 pi)^{-d} int exp(-p(xi)) d xi`` by adaptive cubature on R^d."""
    if rtol is None:
        rtol = 1e-11 if d <= 2 else 1e-8
    # tail check along the coordinate axes and diagonals
    probe = np.vstack([np.eye(d), -np.eye(d), np.ones((1, d)) / np.sqrt(d)])
    for R in (30.0, 100.0):
        if np.any(p.real(R * probe) < 10.0):
            raise ValueError("exp(-p) does not decay: divergent tail")

    def f(xi):
        return np.exp(-p.real(xi))

    if d == 1:
        val, err = integrate.quad(lambda x: float(f(np.array([[x]]))[0]), -np.inf, np.inf, epsabs=0, epsrel=rtol, limit=400)
    else:
        res = integrate.cubature(f, np.full(d, -np.inf), np.full(d, np.inf), rtol=rtol, atol=0, max_subdivisions=200_000)
        if res.status != "converged":
            raise RuntimeError("cubature did not converge")
        val, err = float(res.estimate), float(res.error)
    c = (2 * np.pi) ** (-d)
    return TraceResult(c * val, "direct_quadrature", c * err)


def tau_f_homogeneous(f, d_hom: float, m: float, tau_exp: TraceResult) -> TraceResult:
    """``tau(f(P)) = Gamma(Q/m)^{-1} int_0^inf x^{Q/m-1} f(x) dx * tau(e^{-P})``."""
    a = d_hom / m
    # tail check: x^a f(x) must go to zero
    t1, t2 = abs(1e6 ** a * f(1e6)), abs(1e12 ** a * f(1e12))
    if not (t2 < 1e-3 or t2 < 0.5 * t1):
        raise ValueError("weighted integral diverges")
    # x = e^t turns the weight into e^{a t} and removes the endpoint singularity
    h = lambda t: np.exp(a * t) * f(np.exp(t))
    lo, hi = -40.0 / a, 40.0
    while abs(h(lo)) > 1e-30 and lo > -2000:
        lo *= 1.5
    while abs(h(hi)) > 1e-30 and hi < 700:
        hi = min(700.0, hi * 1.5)
    v1, e1 = integrate.quad(h, lo, 0, limit=400, epsabs=1e-300, epsrel=1e-12)
    v2, e2 = integrate.quad(h, 0, hi, limit=400, epsabs=1e-300, epsrel=1e-12)
    c = 1 / special.gamma(a)
    return TraceResult(c * (v1 + v2) * tau_exp.value, tau_exp.method, c * (e1 + e2) * tau_exp.value + tau_exp.error_estimate)


# --- anisotropic dilations ---------------------------------------------


def _aniso_radius(v, xi):
    """``rho_v(xi) = (sum |xi_j|^{2 V / v_j})^{1 / 2V}``, ``V = lcm(v)``."""
    v = np.asarray(v)
    V = np.lcm.reduce(v)
    return np.sum(np.abs(xi) ** (2.0 * V / v), axis=-1) ** (1.0 / (2 * V))


def _project(v, xi):
    """Radial projection ``delta_{1/rho} xi`` onto the anisotropic sphere."""
    rho = _aniso_radius(v, xi)
    return xi * rho[..., None] ** (-np.asarray(v, dtype=float))


def _euclid_exit_radius(v, u):
    """``R(u)`` with ``rho_v(R u) = 1`` for a Euclidean unit vector ``u``."""
    return optimize.brentq(lambda r: _aniso_radius(v, r * np.asarray(u)) - 1.0, 1e-12, 1e6, xtol=1e-15)


def aniso_sphere_integral(h, v, rtol=1e-10) -> tuple[float, float]:
    """``int_{S_v} h d mu_v`` via ``Q int_{rho <= 1} h(pi(xi)) d xi``.

    The ball is integrated in Euclidean polar coordinates with the radial
    extent ``R(u)`` found per direction.
    """
    v = np.asarray(v)
    d = len(v)
    Q = int(np.sum(v))

    def radial(u):
        out = np.empty(len(u))
        for i, ui in enumerate(u):
            R = _euclid_exit_radius(v, ui)
            fr = lambda r: r ** (d - 1) * float(h(_project(v, r * ui[None, :]))[0])
            out[i] = integrate.quad(fr, 0, R, epsabs=0, epsrel=rtol * 0.1, limit=200)[0]
        return out

    s, err = _unit_sphere_integral(radial, d, rtol=rtol)
    return Q * s, Q * err


def anisotropic_sphere_measure(v, region=None, method: str = "cubature", n_samples: int = 10**6, seed: int = 0) -> float:
    """``mu_v(A) = Q |{t xi : 0 <= t <= 1, xi in A}|``.

    ``region`` is an indicator on points of the anisotropic sphere (default:
    the whole sphere).  ``method`` is ``"cubature"`` or ``"monte_carlo"``
    (scrambled Sobol points in the box ``[-1, 1]^d``).
    """
    v = np.asarray(v)
    d = len(v)
    Q = int(np.sum(v))
    ind = (lambda s: np.ones(s.shape[:-1])) if region is None else (lambda s: np.asarray(region(s), dtype=float))
    if method == "cubature":
        if region is None:
            R = lambda u: np.array([_euclid_exit_radius(v, ui) for ui in u])
            s, _ = _unit_sphere_integral(lambda u: R(u) ** d / d, d, rtol=1e-10)
            return Q * s
        return aniso_sphere_integral(ind, v, rtol=1e-6)[0]
    if method == "monte_carlo":
        m = int(np.ceil(np.log2(n_samples)))
        pts = qmc.Sobol(d, scramble=True, seed=seed).random_base2(m) * 2 - 1
        rho = _aniso_radius(v, pts)
        inside = rho <= 1
        vals = np.zeros(len(pts))
        if np.any(inside & (rho > 0)):
            sel = inside & (rho > 0)
            vals[sel] = ind(_project(v, pts[sel]))
        return Q * 2.0**d * float(np.mean(vals))
    raise ValueError(f"unknown method {method!r}")


def tau_exp_aniso(p: Symbol, v, m: float | None = None) -> TraceResult:
    """``Gamma(Q/m) / (m (2 pi)^d) int_{S_v} p^{-Q/m} d mu_v``."""
    v = np.asarray(v)
    d = len(v)
    Q = int(np.sum(v))
    m = p.order if m is None else m

    def h(s):
        vals = p.real(s)
        _check_positive(vals)
        return vals ** (-Q / m)

    val, err = aniso_sphere_integral(h, v)
    c = special.gamma(Q / m) / (m * (2 * np.pi) ** d)
    return TraceResult(c * val, "anisotropic", c * err)


# --- Heisenberg --------------------------------------------------------


def symplectic_form(n: int) -> np.ndarray:
    I = np.eye(n)
    Z = np.zeros((n, n))
    return np.block([[Z, I], [-I, Z]])


def williamson_eigenvalues(A) -> np.ndarray:
    """Symplectic eigenvalues: the positive eigenvalues of ``i Omega A``.

    Computed as eigenvalues of the Hermitian matrix ``i A^{1/2} Omega A^{1/2}``,
    which is similar to ``i Omega A``.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] % 2:
        raise ValueError("A must be a square matrix of even size")
    if not np.allclose(A, A.T):
        raise ValueError("A must be symmetric")
    w, V = np.linalg.eigh(A)
    if w[0] <= 0:
        raise ValueError("A is not positive definite")
    n = A.shape[0] // 2
    R = (V * np.sqrt(w)) @ V.T
    H = 1j * R @ symplectic_form(n) @ R
    ev = np.linalg.eigvalsh(H)
    return np.sort(ev[n:])


def _x_over_sinh(x):
    """``x / sinh(x)`` for x >= 0 without overflow."""
    x = np.asarray(x, dtype=float)
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    big = 2 * xs * np.exp(-xs) / (-np.expm1(-2 * xs))
    return np.where(small, 1 - x * x / 6, big)


def tau_exp_heisenberg(A, n: int | None = None) -> TraceResult:
    """``tau(e^{-P})`` for ``P = -sum A_jk X_j X_k`` on H_n.

    ``(2 pi)^{-(3n+1)} 2 int_0^inf prod_k s / (2 sinh(lam_k s)) ds`` with the
    symplectic eigenvalues ``lam_k`` of ``A``.  The integrand is finite at 0.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0] // 2 if n is None else n
    lam = williamson_eigenvalues(A)
    if len(lam) != n:
        raise ValueError("A must be 2n x 2n")

    def g(s):
        return float(np.prod(_x_over_sinh(lam * s) / (2 * lam)))

    S = 60.0 / lam[0]
    val, err = integrate.quad(g, 0, S, epsabs=0, epsrel=1e-13, limit=400)
    c = 2 * (2 * np.pi) ** (-(3 * n + 1))
    return TraceResult(c * val, "heisenberg_closed", c * err)


def tau_exp_heisenberg_det(A, n: int | None = None) -> TraceResult:
    """Determinant form of :func:`tau_exp_heisenberg`.

    ``2^{-n} (2 pi)^{-(3n+1)} det(A)^{-1/2} int_R det(M/sinh M)^{1/2} ds`` with
    ``M = i Omega A s``; the matrix functions are formed with ``expm``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0] // 2 if n is None else n
    Om = symplectic_form(n)
    B = 1j * Om @ A
    lam_min = np.linalg.eigvalsh(A)[0]

    def g(s):
        if s == 0:
            return 1.0
        M = B * s
        sinhM = 0.5 * (linalg.expm(M) - linalg.expm(-M))
        _, ld_m = np.linalg.slogdet(M)
        _, ld_s = np.linalg.slogdet(sinhM)
        return float(np.exp(0.5 * (ld_m - ld_s)))

    # the integrand decreases; stop once it is negligible, before the
    # matrix exponentials lose the small eigen-directions
    S = 0.5 / np.max(np.abs(np.linalg.eigvals(B)))
    while True:
        gs = g(S)
        if not np.isfinite(gs) or gs < 1e-17:
            break
        S *= 1.25
    val, err = integrate.quad(g, 0, S, epsabs=1e-17, epsrel=1e-12, limit=400)
    c = 2.0 ** (-n) * (2 * np.pi) ** (-(3 * n + 1)) / np.sqrt(np.linalg.det(A))
    return TraceResult(2 * c * val, "heisenberg_closed", 2 * c * err)


# --- Weyl constant ---------------------------------------------------------


def weyl_constant(f_values, weights, gamma: float, m: float, d_hom: float, tau_values) -> WeylConstant:
    """``(Gamma(Q/m + 1)^{-1} int |f|^{Q/gamma} tau(e^{-P_g^top}) dg)^{gamma/Q}``.

    Parameters
    ----------
    f_values, weights : array_like
        Samples of ``f`` at quadrature nodes and the node weights.
    tau_values : array_like or float
        ``tau(e^{-P_g^top})`` at the same nodes.
    """
    if not (gamma > 0 and m > 0):
        raise ValueError("gamma and m must be positive")
    f = np.asarray(f_values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel() * np.ones_like(f)
    tau = np.asarray(tau_values, dtype=float).ravel() * np.ones_like(f)
    if np.any(tau <= 0):
        raise ValueError("tau field must be positive")
    integral = float(np.sum(np.abs(f) ** (d_hom / gamma) * tau * w))
    val = (integral / special.gamma(d_hom / m + 1)) ** (gamma / d_hom)
    h = hashlib.sha256()
    for arr in (f, w, tau, np.array([gamma, m, d_hom], dtype=float)):
        h.update(np.ascontiguousarray(arr).tobytes())
    return WeylConstant(val, gamma / d_hom, h.hexdigest()[:12])
