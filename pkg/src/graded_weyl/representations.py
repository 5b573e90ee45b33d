"""Schrodinger representations of the Heisenberg group on oscillator bases.

Basis order of H_n is ``X_1..X_n, X_{n+1}..X_{2n}, T`` with
``[X_j, X_{j+n}] = T``.  The representation with parameter ``s != 0`` is

    pi_s(X_j) = i sqrt|s| p_j,  pi_s(X_{j+n}) = i sgn(s) sqrt|s| q_j,  pi_s(T) = i s,

acting on ``L_2(R^n)`` truncated to the lowest Hermite levels.  Plancherel
measure is ``(2 pi)^{-(3n+1)} |s|^n ds``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sps
from scipy import integrate, special

from .lie import GradedLieAlgebra
from .operators import ConstDiffOp, weighted_length
from .traces import TraceResult

KEEP_FRACTION = 0.8


@dataclass(frozen=True)
class OscillatorBasis:
    modes: int
    N: int = 60

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("need N >= 2")
        if self.modes not in (1, 2):
            raise ValueError("only n = 1 or 2 modes supported")

    @property
    def size(self) -> int:
        return self.N**self.modes

    @property
    def keep(self) -> int:
        """Number of low levels trusted in traces.

        One mode keeps 80%; two modes keep the levels whose total occupation
        is below 80% of the cutoff, i.e. a fraction 0.8**2 / 2.
        """
        if self.modes == 1:
            return int(KEEP_FRACTION * self.N)
        return int(KEEP_FRACTION**2 / 2 * self.size)


@dataclass
class RepMatrix:
    matrix: np.ndarray
    s: float
    modes: int
    order: int


def heisenberg_modes(alg: GradedLieAlgebra) -> int:
    d = alg.dim
    n = (d - 1) // 2
    if d % 2 == 0 or n < 1 or alg.layers != (1,) * (2 * n) + (2,):
        raise ValueError(f"{alg.name} is not a Heisenberg algebra")
    c = alg.structure_constants
    for j in range(n):
        if c[j, j + n, 2 * n] != 1.0:
            raise ValueError(f"{alg.name} is not in the standard Heisenberg basis")
    if np.count_nonzero(c) != 2 * n:
        raise ValueError(f"{alg.name} is not in the standard Heisenberg basis")
    return n


def ladder_matrices(N: int):
    """``q = (a + a^dag)/sqrt 2`` and ``p = i (a^dag - a)/sqrt 2`` on N levels."""
    if N < 2:
        raise ValueError("need N >= 2")
    a = np.diag(np.sqrt(np.arange(1, N)), 1)
    q = (a + a.T) / np.sqrt(2)
    p = 1j * (a.T - a) / np.sqrt(2)
    return q, p


def _sparse_ladder(N):
    a = sps.diags(np.sqrt(np.arange(1, N)), 1, format="csr")
    return (a + a.T) / np.sqrt(2), 1j * (a.T - a) / np.sqrt(2)


def rep_heisenberg(D: ConstDiffOp, s: float, basis: OscillatorBasis) -> RepMatrix:
    """Matrix of ``pi_s(D)`` on the truncated basis.

    Words are multiplied on a basis padded by the longest word length and
    then cut back, which gives the exact compression of ``pi_s(D)`` to the
    lowest ``N`` levels per mode.
    """
    if s == 0:
        raise ValueError("s must be nonzero")
    n = heisenberg_modes(D.alg)
    if n != basis.modes:
        raise ValueError("basis modes do not match the algebra")
    pad = max((len(w) for w in D.terms), default=0)
    Np = basis.N + pad
    q1, p1 = _sparse_ladder(Np)
    I1 = sps.identity(Np, format="csr")
    sq = np.sqrt(abs(s))
    sg = np.sign(s)
    letters = {}
    for j in range(n):
        emb = lambda M, j=j: reduce(sps.kron, [M if k == j else I1 for k in range(n)]).tocsr()
        letters[j] = 1j * sq * emb(p1)
        letters[j + n] = 1j * sg * sq * emb(q1)
    Ifull = sps.identity(Np**n, format="csr", dtype=complex)
    letters[2 * n] = 1j * s * Ifull
    total = sps.csr_matrix((Np**n, Np**n), dtype=complex)
    for w, a in D.terms.items():
        M = Ifull
        for letter in w:
            M = M @ letters[letter]
        total = total + a * M
    # keep levels < N in every mode
    idx = np.arange(Np**n)
    levels = np.stack(np.unravel_index(idx, (Np,) * n), axis=0)
    keep = np.all(levels < basis.N, axis=0)
    sel = idx[keep]
    dense = total[sel][:, sel].toarray()
    order = max((weighted_length(D.alg, w) for w in D.terms), default=0)
    return RepMatrix(dense, float(s), n, order)


def _hermitian_eigs(M: RepMatrix) -> np.ndarray:
    A = M.matrix
    if not np.allclose(A, A.conj().T, atol=1e-9 * max(1.0, np.abs(A).max())):
        raise ValueError("representation matrix is not Hermitian")
    return np.linalg.eigvalsh(0.5 * (A + A.conj().T))


def _keep_count(n_modes: int, size: int) -> int:
    N = round(size ** (1 / n_modes))
    return OscillatorBasis(n_modes, N).keep


def _tail_model(ev: np.ndarray, a: float):
    """Fit ``N(E) = kappa E^a`` to the upper half of the kept eigenvalues."""
    k = len(ev)
    ranks = np.arange(k // 2, k) + 0.5
    E = ev[k // 2 :]
    E = np.maximum(E, 1e-300)
    kappa = float(np.median(ranks / E**a))
    return kappa


def _tail_start(ev, kappa, a):
    """Midpoint after the last kept level, ``E + 1 / (2 N'(E))``."""
    E = ev[-1]
    return E + 1.0 / (2 * kappa * a * E ** (a - 1))


def trace_exp_rep(M: RepMatrix) -> tuple[float, float]:
    """``Tr e^{-M}`` from the trusted part of the truncated spectrum.

    Returns ``(value, error_estimate)``; the estimate is the Weyl-type tail
    ``int_Lambda^inf e^{-E} dN(E)`` beyond the largest kept eigenvalue.
    """
    ev = _hermitian_eigs(M)
    keep = _keep_count(M.modes, len(ev))
    ev = ev[:keep]
    val = float(np.sum(np.exp(-ev)))
    a = 2 * M.modes / M.order if M.order else 1.0
    kappa = _tail_model(ev, a)
    Lam = ev[-1]
    err = kappa * special.gamma(a + 1) * special.gammaincc(a, Lam) if Lam > 0 else np.inf
    return val, float(err)


def _tail_integral_exp(kappa, a, u, Lam):
    """``int_Lam^inf e^{-u E} d(kappa E^a) = kappa a u^{-a} Gamma(a, u Lam)``."""
    return kappa * a * u ** (-a) * special.gamma(a) * special.gammaincc(a, u * Lam)


def reliable_spectrum(D: ConstDiffOp, sgn: float, basis: OscillatorBasis, rtol: float = 1e-9, min_levels: int = 24) -> np.ndarray:
    """Low eigenvalues of ``pi_{+-1}(D)`` that survive enlarging the basis.

    The truncation is compared with one using about 25% more levels per mode;
    levels are kept while the two agree to ``rtol``, capped at
    ``basis.keep``.  If fewer than ``min_levels`` survive, the basis is
    doubled (strongly squeezed operators need many Hermite levels).
    """
    max_N = 1600 if basis.modes == 1 else 60
    while True:
        ev = _hermitian_eigs(rep_heisenberg(D, sgn, basis))
        big = OscillatorBasis(basis.modes, basis.N + max(8, basis.N // 4))
        ev2 = _hermitian_eigs(rep_heisenberg(D, sgn, big))[: len(ev)]
        bad = np.nonzero(np.abs(ev - ev2) > rtol * np.abs(ev2))[0]
        k = min(basis.keep, int(bad[0]) if bad.size else len(ev))
        if k >= min_levels or basis.N * 2 > max_N:
            break
        basis = OscillatorBasis(basis.modes, basis.N * 2)
    if k < 8:
        raise RuntimeError("truncated spectrum too short; increase N")
    return ev[:k]


def tau_heisenberg_plancherel(D: ConstDiffOp, basis: OscillatorBasis, rtol: float = 1e-10) -> TraceResult:
    """``(2 pi)^{-(3n+1)} int |s|^n Tr e^{-pi_s(D)} ds``.

    For homogeneous ``D`` of even order ``m`` the spectrum of ``pi_s(D)`` is
    ``|s|^{m/2}`` times that of ``pi_{sgn s}(D)``, so two diagonalisations
    suffice; the truncated spectrum is completed by a Weyl-type tail.
    Inhomogeneous ``D`` falls back to one diagonalisation per node.
    """
    n = heisenberg_modes(D.alg)
    c = (2 * np.pi) ** (-(3 * n + 1))
    lengths = {weighted_length(D.alg, w) for w in D.terms}
    total = 0.0
    err = 0.0
    if len(lengths) == 1 and (m := lengths.pop()) % 2 == 0:
        a = 2 * n / m
        for sgn in (1.0, -1.0):
            ev = reliable_spectrum(D, sgn, basis)
            if ev[0] <= 0:
                raise ValueError("pi_{+-1}(D) is not positive")
            kappa = _tail_model(ev, a)
            Lam = _tail_start(ev, kappa, a)

            def g(s):
                u = s ** (m / 2)
                return s**n * (np.sum(np.exp(-u * ev)) + _tail_integral_exp(kappa, a, u, Lam))

            # split at the scale where the lowest level decays
            s1 = (1.0 / ev[0]) ** (2 / m)
            v1, e1 = integrate.quad(g, 0, s1, epsabs=0, epsrel=rtol, limit=400)
            v2, e2 = integrate.quad(g, s1, np.inf, epsabs=0, epsrel=rtol, limit=400)
            total += v1 + v2
            # truncation error: size of the modelled tail contribution
            tail = lambda s: s**n * _tail_integral_exp(kappa, a, s ** (m / 2), Lam)
            t_err = integrate.quad(tail, 0, np.inf, limit=200)[0]
            err += e1 + e2 + 0.1 * t_err
        return TraceResult(c * total, "heisenberg_plancherel", c * err)

    def g_general(s):
        M = rep_heisenberg(D, s, basis)
        v, e = trace_exp_rep(M)
        return abs(s) ** n * v

    for sgn in (1.0, -1.0):
        v, e = integrate.quad(lambda s: g_general(sgn * s), 0, np.inf, epsabs=0, epsrel=1e-6, limit=100)
        total += v
        err += e
    return TraceResult(c * total, "heisenberg_plancherel", c * err)


def tau_heisenberg_reduction(D: ConstDiffOp, basis: OscillatorBasis) -> TraceResult:
    """Homogeneous reduction to the two representations ``pi_{+-1}``.

    ``(2 pi)^{-(3n+1)} (2/m) Gamma((2n+2)/m) sum_{+-} Tr pi_{+-1}(D)^{-(2n+2)/m}``
    """
    n = heisenberg_modes(D.alg)
    lengths = {weighted_length(D.alg, w) for w in D.terms}
    if len(lengths) != 1:
        raise ValueError("D must be homogeneous")
    m = lengths.pop()
    b = (2 * n + 2) / m
    a = 2 * n / m
    total = 0.0
    err = 0.0
    for sgn in (1.0, -1.0):
        ev = reliable_spectrum(D, sgn, basis)
        if ev[0] <= 0:
            raise ValueError("pi_{+-1}(D) is not positive")
        kappa = _tail_model(ev, a)
        Lam = _tail_start(ev, kappa, a)
        # int_Lam^inf E^{-b} d(kappa E^a) = kappa a Lam^{a-b} / (b - a)
        tail = kappa * a * Lam ** (a - b) / (b - a)
        total += np.sum(ev**-b) + tail
        err += 0.1 * tail
    c = (2 * np.pi) ** (-(3 * n + 1)) * (2 / m) * math.gamma(b)
    return TraceResult(c * total, "heisenberg_closed", c * err)
