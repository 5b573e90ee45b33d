"""Singular values, power-law fits and end-to-end Weyl-law experiments.

The quantity under test is ``k^{gamma/Q} mu(k, M_f (1 + P)^{-gamma/m})``,
whose limit is the constant returned by :func:`traces.weyl_constant`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
import scipy.sparse.linalg as spla
from scipy import integrate, linalg, special, stats

from . import discretize as dz
from . import lie, traces
from .discretize import DENSE_LIMIT, Grid, MatrixOperator
from .lie import GradedLieAlgebra
from .operators import (
    Coefficient,
    ConstDiffOp,
    DivergenceOp,
    abelian_symbol,
    freeze_top,
)

TRIM = 0.1
MIN_WINDOW = 50


@dataclass(frozen=True)
class SingularValues:
    values: np.ndarray
    method: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if np.any(v < 0) or np.any(np.diff(v) > 0):
            raise ValueError("singular values must be nonnegative and nonincreasing")
        object.__setattr__(self, "values", v)

    @property
    def K(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class AsymptoticFit:
    exponent: float
    constant: float
    window: tuple
    stderr: float
    n_used: int

    def __post_init__(self):
        if not math.isfinite(self.stderr):
            raise ValueError("standard error must be finite")


def _sorted_sv(vals, method) -> SingularValues:
    v = np.sort(np.abs(np.asarray(vals, dtype=float)))[::-1]
    return SingularValues(v, method)


def singular_values(M, K: int | None = None, method: str = "auto", dense_limit: int = DENSE_LIMIT) -> SingularValues:
    """Top ``K`` singular values of ``M``.

    ``method`` is ``"dense"`` (SVD, or symmetric eigenvalues), ``"support"``
    (Gram matrix on the support of ``f`` for ``M = M_f R`` with symmetric
    ``R``), ``"lanczos"`` (ARPACK on ``M^* M``) or ``"auto"``.
    """
    if not isinstance(M, MatrixOperator):
        M = dz.from_matrix(M)
    n = min(M.shape)
    K = n if K is None else int(K)
    if K < 1 or K > n:
        raise ValueError(f"K must be in [1, {n}]")
    if method == "auto":
        if M.dense is not None or (M.sparse is None and n <= dense_limit and "resolvent" not in M.info):
            method = "dense"
        elif "resolvent" in M.info and np.count_nonzero(M.info["f"]) <= dense_limit:
            method = "support"
        else:
            method = "lanczos"
    if method == "dense":
        A = M.to_dense(dense_limit)
        if M.symmetric:
            vals = np.abs(linalg.eigvalsh(A))
        else:
            vals = linalg.svdvals(A)
        return SingularValues(_sorted_sv(vals, "dense").values[:K], "dense")
    if method == "support":
        return _support_gram(M, K)
    if method != "lanczos":
        raise ValueError(f"unknown method {method!r}")
    if K >= n:
        raise ValueError("iterative method needs K < size")
    try:
        if M.symmetric:
            vals = spla.eigsh(M.as_linear_operator(), k=K, which="LM", return_eigenvectors=False, tol=1e-10)
        else:
            A = M.as_linear_operator()
            gram = spla.LinearOperator(M.shape, matvec=lambda v: A.rmatvec(A.matvec(v)), dtype=M.dtype)
            vals = np.sqrt(np.maximum(spla.eigsh(gram, k=K, which="LA", return_eigenvectors=False, tol=1e-10), 0.0))
    except spla.ArpackNoConvergence as exc:
        raise RuntimeError("iterative singular value solver did not converge") from exc
    return _sorted_sv(vals, "lanczos")


def _support_gram(M: MatrixOperator, K: int, chunk: int = 256) -> SingularValues:
    # mu(M_f R)^2 = eig(f R^2 f), and f R^2 f lives on supp f
    f = np.asarray(M.info["f"], dtype=float).ravel()
    R = M.info["resolvent"]
    S = np.nonzero(f)[0]
    if K > len(S):
        raise ValueError(f"only {len(S)} nonzero singular values available")
    n = len(f)
    G = np.empty((n, len(S)))
    for start in range(0, len(S), chunk):
        cols = S[start : start + chunk]
        E = np.zeros((n, len(cols)))
        E[cols, np.arange(len(cols))] = 1.0
        G[:, start : start + len(cols)] = R.matvec(E)
    B = G.T @ G
    del G
    fs = f[S]
    B = fs[:, None] * B * fs[None, :]
    vals = linalg.eigvalsh(0.5 * (B + B.T))
    return SingularValues(np.sqrt(np.maximum(vals, 0.0))[::-1][:K], "support_gram")


# --- fitting -----------------------------------------------------------------


def default_window(K: int) -> tuple:
    return (int(0.05 * K), int(0.5 * K))


def _effective_n(x: np.ndarray) -> float:
    n = len(x)
    if n < 3 or np.std(x) == 0:
        return float(n)
    r = np.corrcoef(x[:-1], x[1:])[0, 1]
    if not np.isfinite(r):
        return float(n)
    return float(np.clip(n * (1 - r) / (1 + r), 1.0, n))


def fit_weyl(sv, p: float | None = None, window: tuple | None = None, trim: float = TRIM) -> AsymptoticFit:
    """Fit ``mu(k) ~ C (k+1)^{-1/p}`` over ``window = [k_min, k_max)``.

    With ``p`` given the constant is the trimmed mean of ``(k+1)^{1/p} mu(k)``.
    Its standard error combines the scatter (effective sample size corrected
    for lag-1 autocorrelation) with the drift between the two window halves,
    which dominates when the sequence is still approaching its limit.  Without ``p`` both are fitted by least squares in
    log-log coordinates.
    """
    mu = np.asarray(sv.values if isinstance(sv, SingularValues) else sv, dtype=float)
    K = len(mu)
    kmin, kmax = default_window(K) if window is None else (int(window[0]), int(window[1]))
    if not 0 <= kmin < kmax <= K:
        raise ValueError(f"window [{kmin}, {kmax}) outside the sequence of length {K}")
    if kmax - kmin < MIN_WINDOW:
        raise ValueError(f"window length must be at least {MIN_WINDOW}")
    k = np.arange(kmin, kmax)
    m = mu[kmin:kmax]
    keep = m > 0
    if not keep.any():
        raise ValueError("window empty after trimming zeros")
    k, m = k[keep], m[keep]
    if p is not None:
        vals = (k + 1.0) ** (1.0 / p) * m
        c = float(stats.trim_mean(vals, trim))
        lo, hi = np.quantile(vals, [trim, 1 - trim])
        core = vals[(vals >= lo) & (vals <= hi)]
        sd = float(np.std(core, ddof=1)) if len(core) > 1 else 0.0
        # systematic part: drift of the scaled sequence across the window
        half = len(vals) // 2
        drift = abs(float(np.mean(vals[:half]) - np.mean(vals[half:]))) if half else 0.0
        err = math.hypot(sd / math.sqrt(_effective_n(vals)), drift)
        return AsymptoticFit(float(p), c, (kmin, kmax), err, len(vals))
    if len(k) < 3:
        raise ValueError("too few nonzero values for a log-log fit")
    coef, cov = np.polyfit(np.log(k + 1.0), np.log(m), 1, cov=True)
    slope, icpt = coef
    if slope >= 0:
        raise ValueError("sequence is not decaying in the window")
    c = float(np.exp(icpt))
    return AsymptoticFit(float(-1.0 / slope), c, (kmin, kmax), float(c * math.sqrt(cov[1, 1])), len(k))


# --- pipeline ------------------------------------------------------------------


@dataclass
class WeylConfig:
    """One experiment: ``M_f (1 + P)^{-gamma/m}`` on ``grid``.

    ``refine`` is a second grid used for the self-convergence estimate.
    """

    alg: GradedLieAlgebra
    operator: object
    f: Coefficient
    gamma: float
    grid: Grid
    K: int | None = None
    window: tuple | None = None
    refine: Grid | None = None
    name: str = "experiment"


@dataclass
class WeylReport:
    measured: AsymptoticFit
    predicted: traces.WeylConstant
    relative_error: float
    sv: SingularValues
    self_convergence: float | None = None
    refined: AsymptoticFit | None = None
    info: dict = field(default_factory=dict)


def operator_order(op) -> int:
    if isinstance(op, DivergenceOp):
        return 2
    return op.order


def _is_heisenberg(alg: GradedLieAlgebra) -> bool:
    try:
        from .representations import heisenberg_modes

        heisenberg_modes(alg)
        return True
    except ValueError:
        return False


def tau_of_constant(op: ConstDiffOp) -> float:
    """``tau(e^{-P})`` for a homogeneous constant coefficient operator."""
    alg = op.alg
    if alg.is_abelian:
        sym = abelian_symbol(op)
        if not sym.is_real:
            raise ValueError("symbol is not real")
        d = alg.dim
        w = np.asarray(alg.weights)
        degs = {sum(e) for e in sym.coeffs}
        if np.all(w == 1) and degs == {2}:
            A = np.zeros((d, d))
            for e, a in sym.coeffs.items():
                idx = [j for j, k in enumerate(e) for _ in range(k)]
                A[idx[0], idx[1]] += 0.5 * a.real
                A[idx[1], idx[0]] += 0.5 * a.real
            return traces.tau_exp_gaussian(A).value
        if np.all(w == w[0]):
            return traces.tau_exp_direct(sym, d).value
        return traces.tau_exp_aniso(sym, tuple(int(x) for x in w)).value
    if _is_heisenberg(alg):
        n = (alg.dim - 1) // 2
        A = np.zeros((2 * n, 2 * n))
        for wd, a in op.terms.items():
            if len(wd) != 2 or 2 * n in wd or abs(complex(a).imag) > 1e-14:
                raise ValueError("only real quadratic forms in the first layer are supported")
            A[wd[0], wd[1]] -= 0.5 * complex(a).real
            A[wd[1], wd[0]] -= 0.5 * complex(a).real
        return traces.tau_exp_heisenberg(A, n).value
    raise NotImplementedError(f"no trace formula for {alg.name}")


def tau_field(op, nodes) -> np.ndarray:
    """``tau(e^{-P_g^top})`` at each node ``g``."""
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    if isinstance(op, ConstDiffOp):
        return np.full(len(nodes), tau_of_constant(freeze_top(op, nodes[0])))
    cache: dict = {}
    out = np.empty(len(nodes))
    for i, g in enumerate(nodes):
        top = freeze_top(op, g)
        key = top.digest()
        if key not in cache:
            cache[key] = tau_of_constant(top)
        out[i] = cache[key]
    return out


def predicted_constant(cfg: WeylConfig, f=None) -> traces.WeylConstant:
    """Predicted Weyl constant from a Riemann sum on the experiment grid."""
    grid = cfg.grid
    nodes = grid.mesh().reshape(-1, grid.dim)
    fv = np.real(np.asarray((f or cfg.f)(nodes))).ravel()
    sel = fv != 0
    if not sel.any():
        return traces.WeylConstant(0.0, cfg.gamma / lie.homogeneous_dimension(cfg.alg), "zero")
    tau = tau_field(cfg.operator, nodes[sel])
    Q = lie.homogeneous_dimension(cfg.alg)
    return traces.weyl_constant(fv[sel], grid.cell_volume, cfg.gamma, operator_order(cfg.operator), Q, tau)


def discretize_operator(cfg: WeylConfig, grid: Grid) -> MatrixOperator:
    op = cfg.operator
    m = operator_order(op)
    q = cfg.gamma / m
    nodes = grid.mesh().reshape(-1, grid.dim)
    fv = np.real(np.asarray(cfg.f(nodes))).reshape(grid.shape)
    if isinstance(op, DivergenceOp):
        P = dz.divergence_form_matrix(np.real(op.a(nodes)), grid)
        R = dz.apply_fractional_resolvent(P, q)
        return dz.from_matrix(fv.ravel()[:, None] * R.dense, symmetric=False)
    if cfg.alg.is_abelian:
        sym = abelian_symbol(op)
        return dz.fourier_operator(sym.real, grid, q, fv)
    if _is_heisenberg(cfg.alg) and cfg.alg.dim == 3:
        std = ConstDiffOp(cfg.alg, {(0, 0): -1.0, (1, 1): -1.0})
        if op != std:
            raise NotImplementedError("finite differences cover the standard sub-Laplacian only")
        return dz.fd_heisenberg_operator(grid, fv, q)
    raise NotImplementedError(f"no discretization for {cfg.alg.name}")


def _run(cfg: WeylConfig, grid: Grid, p: float, window):
    M = discretize_operator(cfg, grid)
    K = cfg.K
    if K is None:
        K = min(M.shape) if (M.dense is not None or min(M.shape) <= DENSE_LIMIT) else None
    if K is None:
        raise ValueError("K is required for large grids")
    sv = singular_values(M, K)
    window = default_window(sv.K) if window is None else window
    return sv, fit_weyl(sv, p, window)


def weyl_experiment(cfg: WeylConfig) -> WeylReport:
    """Discretize, compute singular values, fit, and compare with the prediction."""
    Q = lie.homogeneous_dimension(cfg.alg)
    p = Q / cfg.gamma
    pred = predicted_constant(cfg)
    sv, fit = _run(cfg, cfg.grid, p, cfg.window)
    rel = abs(fit.constant - pred.value) / pred.value
    rep = WeylReport(fit, pred, rel, sv)
    if cfg.refine is not None:
        sv2, fit2 = _run(cfg, cfg.refine, p, fit.window)
        rep.refined = fit2
        rep.self_convergence = abs(fit2.constant - fit.constant) / abs(fit.constant)
        rep.info["refined_sv"] = sv2
    return rep


# --- signed parts ----------------------------------------------------------------


@dataclass
class SignedReport:
    plus: AsymptoticFit
    minus: AsymptoticFit
    predicted_plus: float
    predicted_minus: float
    eigenvalues: np.ndarray
    reassembled: bool

    @property
    def relative_errors(self) -> tuple:
        def rel(fit, pred):
            return abs(fit.constant - pred) / pred if pred > 0 else abs(fit.constant)

        return rel(self.plus, self.predicted_plus), rel(self.minus, self.predicted_minus)


def split_parts(eigenvalues) -> tuple:
    """Singular values of the positive and negative parts, zero padded."""
    lam = np.asarray(eigenvalues, dtype=float)
    n = len(lam)
    plus = np.zeros(n)
    minus = np.zeros(n)
    pos = np.sort(lam[lam > 0])[::-1]
    neg = np.sort(-lam[lam < 0])[::-1]
    plus[: len(pos)] = pos
    minus[: len(neg)] = neg
    return plus, minus


def _fit_or_zero(values, p, window):
    try:
        return fit_weyl(SingularValues(values, "part"), p, window)
    except ValueError as exc:
        if "empty" not in str(exc):
            raise
        return AsymptoticFit(p, 0.0, window, 0.0, 0)


def signed_experiment(cfg: WeylConfig) -> SignedReport:
    """Positive and negative parts of ``(1+P)^{-q/2} M_f (1+P)^{-q/2}``, ``q = gamma/m``."""
    if not (cfg.alg.is_abelian and isinstance(cfg.operator, ConstDiffOp)):
        raise NotImplementedError("signed experiments need a constant coefficient operator on R^d")
    grid = cfg.grid
    m = operator_order(cfg.operator)
    Q = lie.homogeneous_dimension(cfg.alg)
    p = Q / cfg.gamma
    nodes = grid.mesh().reshape(-1, grid.dim)
    fv = np.real(np.asarray(cfg.f(nodes))).ravel()
    S = dz.symmetric_fourier_operator(abelian_symbol(cfg.operator).real, grid, cfg.gamma / m, fv)
    lam = linalg.eigvalsh(S.to_dense())
    plus, minus = split_parts(lam)
    merged = np.sort(np.concatenate([plus[plus > 0], minus[minus > 0]]))
    reassembled = bool(np.array_equal(merged, np.sort(np.abs(lam[lam != 0]))))
    window = default_window(len(lam)) if cfg.window is None else cfg.window
    fp = Coefficient(lambda g: np.maximum(np.real(cfg.f(g)), 0.0), name="f+", dim=grid.dim)
    fm = Coefficient(lambda g: np.maximum(-np.real(cfg.f(g)), 0.0), name="f-", dim=grid.dim)
    return SignedReport(
        _fit_or_zero(plus, p, window),
        _fit_or_zero(minus, p, window),
        predicted_constant(cfg, fp).value,
        predicted_constant(cfg, fm).value,
        lam,
        reassembled,
    )


# --- zeta trace --------------------------------------------------------------------


@dataclass(frozen=True)
class ZetaRow:
    z: float
    measured: float
    formula: float
    in_band: float
    tail: float

    @property
    def relative_error(self) -> float:
        return abs(self.measured - self.formula) / abs(self.formula)


def _lattice_tail(c: float, a: float, m: int, q: float, K: int, tol: float = 1e-17) -> float:
    """``sum_{k > K} (1 + c (a k)^m)^{-q}`` by a Hurwitz zeta expansion.

    ``(1 + b k^m)^{-q} = sum_j binom(-q, j) b^{-q-j} k^{-m(q+j)}``, summed
    over ``k > K`` term by term.  Extended precision avoids the overflow of
    ``b^{-q-j}`` against the underflow of the zeta values.
    """
    b = mpmath.mpf(c) * mpmath.mpf(a) ** m
    if b * (K + 1) ** m <= 1:
        raise ValueError("band too narrow for the tail expansion")
    with mpmath.workdps(30):
        total = mpmath.mpf(0)
        for j in range(400):
            term = mpmath.binomial(-q, j) * b ** (-q - j) * mpmath.zeta(m * (q + j), K + 1)
            total += term
            if abs(term) <= tol * abs(total):
                break
        return float(total)


def zeta_trace_check(cfg: WeylConfig, z_values) -> list:
    """``Tr(M_{f^{2z}} (1+P)^{-z/m})`` on the torus against the Gamma-ratio formula.

    The measured trace is the diagonal of the assembled matrix plus the
    lattice modes beyond the grid band, which the truncated operator drops.
    """
    op = cfg.operator
    grid = cfg.grid
    if not (cfg.alg.is_abelian and grid.dim == 1 and isinstance(op, ConstDiffOp)):
        raise NotImplementedError("zeta trace check is one dimensional")
    sym = abelian_symbol(op)
    if len(sym.coeffs) != 1:
        raise ValueError("P must be homogeneous with a single monomial symbol")
    (e, c), = sym.coeffs.items()
    m = e[0]
    c = c.real
    Q = lie.homogeneous_dimension(cfg.alg)
    tau = tau_of_constant(op)
    nodes = grid.mesh().reshape(-1, 1)
    fv = np.real(np.asarray(cfg.f(nodes))).ravel()
    L = grid.half_width[0]
    N = grid.points[0]
    rows = []
    for z in z_values:
        z = float(z)
        if z <= Q:
            raise ValueError(f"z = {z} must exceed the homogeneous dimension {Q}")
        q = z / m
        w = np.abs(fv) ** (2 * z)
        T = dz.fourier_operator(sym.real, grid, q, w)
        in_band = float(np.trace(T.dense)) if T.dense is not None else float(np.sum(w) * np.mean(T.info["multiplier"]))
        a = np.pi / L
        # band holds k = -N/2 .. N/2 - 1
        tail_sum = _lattice_tail(c, a, m, q, N // 2 - 1) + _lattice_tail(c, a, m, q, N // 2)
        tail = float(np.sum(w) / N * tail_sum)
        integral = integrate.quad(lambda x: abs(float(np.real(cfg.f(np.array([[x]])))[0])) ** (2 * z), -np.inf, np.inf, limit=200)[0]
        formula = special.gamma((z - Q) / m) / special.gamma(z / m) * integral * tau
        rows.append(ZetaRow(z, in_band + tail, float(formula), in_band, tail))
    return rows

