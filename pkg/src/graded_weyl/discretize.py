"""Matrix models of ``M_f (1 + P)^{-q}``.

Two discretisations are provided.

* Abelian groups: periodic Fourier grids on the box ``[-L, L)^d``.  The unitary
  DFT (``norm="ortho"``) diagonalises every constant coefficient operator,
  frequencies are ``xi_k = pi k / L`` and the resolvent power is a Fourier
  multiplier.
* Heisenberg group H_1: second order finite differences with Dirichlet
  truncation in exponential coordinates ``(x, y, z)``, using the fields
  ``X = d_x - (y/2) d_z`` and ``Y = d_y + (x/2) d_z``.  These satisfy
  ``[X, Y] = d_z``; flipping signs of the fields leaves ``P = -(X^2 + Y^2)``
  unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla
from scipy import fft as sfft

DENSE_LIMIT = 6000
RESOLVENT_RTOL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Tensor grid on a box.

    ``fourier_periodic`` grids have nodes ``-L + 2 L j / N``;
    ``finite_difference_dirichlet`` grids store only the ``N`` interior
    nodes ``-L + 2 L j / (N + 1)``, ``j = 1..N``.
    """

    dim: int
    half_width: tuple
    points: tuple
    mode: str = "fourier_periodic"

    def __post_init__(self):
        hw = tuple(float(x) for x in np.broadcast_to(self.half_width, (self.dim,)))
        pts = tuple(int(x) for x in np.broadcast_to(self.points, (self.dim,)))
        object.__setattr__(self, "half_width", hw)
        object.__setattr__(self, "points", pts)
        if self.mode not in ("fourier_periodic", "finite_difference_dirichlet"):
            raise ValueError(f"unknown grid mode {self.mode!r}")
        if any(L <= 0 for L in hw):
            raise ValueError("half widths must be positive")
        if self.mode == "fourier_periodic" and any(n % 2 for n in pts):
            raise ValueError("fourier grids need an even number of points per axis")

    @property
    def shape(self) -> tuple:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> np.ndarray:
        L = np.asarray(self.half_width)
        N = np.asarray(self.points)
        return 2 * L / N if self.mode == "fourier_periodic" else 2 * L / (N + 1)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list:
        out = []
        for L, N, h in zip(self.half_width, self.points, self.spacing):
            if self.mode == "fourier_periodic":
                out.append(-L + h * np.arange(N))
            else:
                out.append(-L + h * np.arange(1, N + 1))
        return out

    def mesh(self) -> np.ndarray:
        """Node coordinates, shape ``points + (dim,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def frequencies(self) -> list:
        """``pi k / L`` per axis in FFT order."""
        return [np.pi * sfft.fftfreq(N, 1.0 / N) / L for L, N in zip(self.half_width, self.points)]

    def frequency_mesh(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.frequencies(), indexing="ij"), axis=-1)

    def check_support(self, support_radius: float, fraction: float = 1.0):
        """Raise if a function of the given support radius leaks out of the box."""
        if support_radius >= fraction * min(self.half_width):
            raise ValueError(
                f"support radius {support_radius:g} not inside {fraction:g} x box half width {min(self.half_width):g}"
            )


@dataclass(eq=False)
class MatrixOperator:
    """Linear map with an action and optional explicit storage."""

    shape: tuple
    matvec: Callable
    rmatvec: Callable | None = None
    dense: np.ndarray | None = None
    sparse: sps.spmatrix | None = None
    symmetric: bool = False
    dtype: type = float
    info: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.shape[0]

    def __matmul__(self, v):
        return self.matvec(v)

    def to_dense(self, limit: int = DENSE_LIMIT) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        if self.sparse is not None:
            return self.sparse.toarray()
        if max(self.shape) > limit:
            raise ValueError("operator too large for dense assembly")
        n = self.shape[1]
        cols = [self.matvec(e) for e in np.eye(n)]
        return np.stack(cols, axis=1)

    def as_linear_operator(self) -> spla.LinearOperator:
        rm = self.rmatvec
        if rm is None and self.symmetric:
            rm = self.matvec
        return spla.LinearOperator(self.shape, matvec=self.matvec, rmatvec=rm, dtype=self.dtype)

    def spot_check(self, n: int = 3, seed: int = 0) -> float:
        """Max relative gap between action and explicit storage on random vectors."""
        store = self.dense if self.dense is not None else self.sparse
        if store is None:
            return 0.0
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(n):
            v = rng.standard_normal(self.shape[1])
            a = self.matvec(v)
            b = store @ v
            worst = max(worst, float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)))
        return worst


def from_matrix(A, symmetric: bool | None = None) -> MatrixOperator:
    if sps.issparse(A):
        A = A.tocsr()
        sym = symmetric if symmetric is not None else abs(A - A.T).max() < 1e-12 * max(abs(A).max(), 1)
        return MatrixOperator(A.shape, lambda v: A @ v, lambda v: A.T.conj() @ v, None, A, bool(sym), A.dtype)
    A = np.asarray(A)
    sym = symmetric if symmetric is not None else bool(np.allclose(A, A.conj().T, atol=1e-12))
    return MatrixOperator(A.shape, lambda v: A @ v, lambda v: A.conj().T @ v, A, None, sym, A.dtype)


# --- Fourier grids -----------------------------------------------------


def fourier_multiplier(p, grid: Grid, exponent: float) -> np.ndarray:
    """``(1 + p(xi))^{-exponent}`` on the frequency lattice, grid shaped."""
    if grid.mode != "fourier_periodic":
        raise ValueError("fourier grid required")
    pv = np.real_if_close(p(grid.frequency_mesh()))
    pv = np.asarray(pv, dtype=complex)
    if np.any(np.abs(pv.imag) > 1e-10 * (1 + np.abs(pv.real))):
        raise ValueError("symbol is not real on the lattice")
    pv = pv.real
    if np.any(pv < -1e-10 * (1 + np.max(np.abs(pv)))):
        raise ValueError("symbol is negative on the lattice")
    return (1.0 + np.maximum(pv, 0.0)) ** (-exponent)


def _circulant_dense(kernel: np.ndarray) -> np.ndarray:
    """Dense matrix of convolution by ``kernel`` on a periodic grid."""
    shape = kernel.shape
    idx = np.indices(shape).reshape(len(shape), -1)
    flat = np.zeros((idx.shape[1], idx.shape[1]), dtype=np.int64)
    for ax, n in enumerate(shape):
        diff = (idx[ax][:, None] - idx[ax][None, :]) % n
        flat = flat * n + diff
    return kernel.ravel()[flat]


def _kernel(mult: np.ndarray) -> np.ndarray:
    # convolution kernel in the unnormalised-sum convention: (C u)_j = sum_l c_{j-l} u_l
    k = sfft.ifftn(mult)
    if np.max(np.abs(k.imag)) < 1e-13 * max(np.max(np.abs(k.real)), 1e-300):
        return k.real
    return k


def fourier_operator(p, grid: Grid, exponent: float, f_values, dense_limit: int = DENSE_LIMIT, support_radius: float | None = None) -> MatrixOperator:
    """``M_f (1 + P)^{-exponent}`` on a periodic grid.

    Parameters
    ----------
    p : callable
        Symbol evaluated on frequency vectors (shape ``(..., d)``).
    f_values : array_like
        Samples of ``f`` on the grid nodes.
    """
    f = np.asarray(f_values).reshape(grid.shape)
    if support_radius is not None:
        grid.check_support(support_radius)
    mult = fourier_multiplier(p, grid, exponent)
    shape = grid.shape
    axes = tuple(range(grid.dim))

    def mv(u):
        u = np.asarray(u).reshape(shape)
        out = f * sfft.ifftn(mult * sfft.fftn(u, axes=axes, norm="ortho"), axes=axes, norm="ortho")
        return _maybe_real(out).ravel()

    def rmv(u):
        u = np.asarray(u).reshape(shape)
        out = sfft.ifftn(mult * sfft.fftn(np.conj(f) * u, axes=axes, norm="ortho"), axes=axes, norm="ortho")
        return _maybe_real(out).ravel()

    dense = None
    if grid.size <= dense_limit:
        dense = f.ravel()[:, None] * _circulant_dense(_kernel(mult))
    n = grid.size
    op = MatrixOperator((n, n), mv, rmv, dense, None, False, float if np.isrealobj(f) else complex)
    op.info.update(multiplier=mult, f=f)
    return op


def symmetric_fourier_operator(p, grid: Grid, exponent: float, f_values, dense_limit: int = DENSE_LIMIT) -> MatrixOperator:
    """``(1 + P)^{-exponent/2} M_f (1 + P)^{-exponent/2}`` (Hermitian for real f)."""
    f = np.asarray(f_values, dtype=float).reshape(grid.shape)
    half = fourier_multiplier(p, grid, exponent / 2)
    axes = tuple(range(grid.dim))

    def mv(u):
        u = np.asarray(u).reshape(grid.shape)
        w = sfft.ifftn(half * sfft.fftn(u, axes=axes, norm="ortho"), axes=axes, norm="ortho")
        w = sfft.ifftn(half * sfft.fftn(f * w, axes=axes, norm="ortho"), axes=axes, norm="ortho")
        return _maybe_real(w).ravel()

    dense = None
    if grid.size <= dense_limit:
        K = _circulant_dense(_kernel(half))
        dense = (K * f.ravel()[None, :]) @ K
        dense = 0.5 * (dense + dense.T)
    n = grid.size
    return MatrixOperator((n, n), mv, mv, dense, None, True)


def _maybe_real(a):
    return a.real if np.isrealobj(a) or np.max(np.abs(a.imag), initial=0) < 1e-12 * max(np.max(np.abs(a.real), initial=0), 1e-300) else a


def spectral_derivative_matrix(grid: Grid, axis: int = 0) -> np.ndarray:
    """Real antisymmetric Fourier differentiation matrix along one axis.

    The Nyquist mode is differentiated to zero so the matrix stays real.
    """
    N = grid.points[axis]
    L = grid.half_width[axis]
    xi = np.pi * sfft.fftfreq(N, 1.0 / N) / L
    xi[N // 2] = 0.0
    k = sfft.ifft(1j * xi)
    D1 = _circulant_dense(k.real if np.max(np.abs(k.imag)) < 1e-12 else k)
    if grid.dim == 1:
        return D1
    mats = [np.eye(n) for n in grid.points]
    mats[axis] = D1
    out = mats[0]
    for M in mats[1:]:
        out = np.kron(out, M)
    return out


def divergence_form_matrix(a_values, grid: Grid) -> np.ndarray:
    """Dense ``P = -div(a grad) = sum_j D_j^T diag(a) D_j`` (symmetric PSD)."""
    a = np.asarray(a_values, dtype=float).ravel()
    if np.any(a <= 0):
        raise ValueError("coefficient must be positive")
    P = np.zeros((grid.size, grid.size))
    for ax in range(grid.dim):
        D = spectral_derivative_matrix(grid, ax)
        P += D.T @ (a[:, None] * D)
    return 0.5 * (P + P.T)


# --- resolvent powers --------------------------------------------------


def _sinc_nodes(r: float, a_min: float, a_max: float, rtol: float):
    """Trapezoid nodes for ``a^{-r} = sin(pi r)/pi int e^{(1-r)u} / (e^u + a) du``.

    Step and range are refined until the scalar approximation meets
    ``rtol`` relative accuracy on a log grid of ``[a_min, a_max]``.
    """
    test = np.geomspace(a_min, a_max, 400)
    c = math.sin(math.pi * r) / math.pi
    h = 0.5
    for _ in range(12):
        lo = math.log(a_min) - (math.log(1 / rtol) + 3) / (1 - r)
        hi = math.log(a_max) + (math.log(1 / rtol) + 3) / r
        u = np.arange(lo, hi + h, h)
        w = c * h * np.exp((1 - r) * u)
        approx = np.sum(w[None, :] / (np.exp(u)[None, :] + test[:, None]), axis=1)
        err = np.max(np.abs(approx * test**r - 1))
        if err < rtol:
            return np.exp(u), w, err
        h *= 0.75
    raise RuntimeError("rational approximation did not reach the requested accuracy")


def _gershgorin_max(P) -> float:
    A = abs(P) if sps.issparse(P) else np.abs(P)
    return float(np.max(np.asarray(A.sum(axis=1)).ravel()))


def apply_fractional_resolvent(P, q: float, dense_limit: int = DENSE_LIMIT, rtol: float = RESOLVENT_RTOL) -> MatrixOperator:
    """``(1 + P)^{-q}`` for symmetric positive semidefinite ``P``.

    Dense path (size <= ``dense_limit``): full eigendecomposition.
    Otherwise: repeated sparse solves for the integer part of ``q`` and a
    trapezoid rule on the Balakrishnan integral (a sum of shifted inverses)
    for the fractional part, accurate to ``rtol`` on the spectral interval.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    if isinstance(P, MatrixOperator):
        P = P.dense if P.dense is not None else P.sparse
        if P is None:
            raise ValueError("explicit storage needed")
    n = P.shape[0]
    if n <= dense_limit:
        Pd = P.toarray() if sps.issparse(P) else np.asarray(P)
        if not np.allclose(Pd, Pd.T, atol=1e-10 * max(1.0, np.abs(Pd).max())):
            raise ValueError("P is not symmetric")
        lam, V = np.linalg.eigh(0.5 * (Pd + Pd.T))
        if lam[0] < -1e-9 * max(1.0, abs(lam[-1])):
            raise ValueError(f"indefinite P detected (lambda_min = {lam[0]:.3g})")
        lam = np.maximum(lam, 0.0)
        R = (V * (1 + lam) ** (-q)) @ V.T
        op = MatrixOperator((n, n), lambda v: R @ v, lambda v: R @ v, R, None, True)
        op.info.update(eigenvalues=lam, eigenvectors=V)
        return op

    P = sps.csc_matrix(P)
    if abs(P - P.T).max() > 1e-10 * max(1.0, abs(P).max()):
        raise ValueError("P is not symmetric")
    I = sps.identity(n, format="csc")
    lu1 = spla.splu((I + P).tocsc())
    # smallest eigenvalue of P through the factored shift
    op1 = spla.LinearOperator((n, n), matvec=lu1.solve, dtype=float)
    mu = spla.eigsh(op1, k=1, which="LM", return_eigenvectors=False, tol=1e-8)[0]
    lam_min = 1 / mu - 1
    if lam_min < -1e-9 * max(1.0, _gershgorin_max(P)):
        raise ValueError(f"indefinite P detected (lambda_min = {lam_min:.3g})")
    k = int(math.floor(q))
    r = q - k
    nodes = []
    if r > 1e-14:
        t, w, _ = _sinc_nodes(r, 1.0, 1.0 + _gershgorin_max(P), rtol)
        for tj, wj in zip(t, w):
            nodes.append((wj, spla.splu(((1 + tj) * I + P).tocsc())))

    def mv(v):
        v = np.asarray(v, dtype=float)
        for _ in range(k):
            v = lu1.solve(v)
        if nodes:
            v = sum(wj * lu.solve(v) for wj, lu in nodes)
        return v

    op = MatrixOperator((n, n), mv, mv, None, None, True)
    op.info.update(n_shifts=len(nodes), lambda_min=lam_min)
    return op


# --- Heisenberg finite differences ---------------------------------------


def _check_fd(grid: Grid):
    if grid.mode != "finite_difference_dirichlet" or grid.dim != 3:
        raise ValueError("3D finite difference grid required")
    if min(grid.points) < 16:
        raise ValueError("grid too coarse: need at least 16 points per axis")


def _d1(n, h):
    return sps.diags([-np.ones(n - 1), np.ones(n - 1)], [-1, 1]) / (2 * h)


def _d2(n, h):
    return sps.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h**2


def _kron3(A, B, C):
    return sps.kron(sps.kron(A, B), C).tocsr()


def heisenberg_fields_fd(grid: Grid):
    """Centered first-order stencils for ``X`` and ``Y`` (Dirichlet)."""
    _check_fd(grid)
    (nx, ny, nz), (hx, hy, hz) = grid.points, grid.spacing
    x, y, _ = grid.axes()
    Ix, Iy, Iz = (sps.identity(n) for n in (nx, ny, nz))
    Dx = _kron3(_d1(nx, hx), Iy, Iz)
    Dy = _kron3(Ix, _d1(ny, hy), Iz)
    Dz = _kron3(Ix, Iy, _d1(nz, hz))
    X3, Y3, _ = np.meshgrid(x, y, np.zeros(nz), indexing="ij")
    X = Dx - sps.diags(Y3.ravel() / 2) @ Dz
    Y = Dy + sps.diags(X3.ravel() / 2) @ Dz
    return X.tocsr(), Y.tocsr()


def heisenberg_sublaplacian_fd(grid: Grid) -> sps.csr_matrix:
    """``P = -(X^2 + Y^2) = -(u_xx + u_yy - y u_xz + x u_yz + (x^2 + y^2)/4 u_zz)``.

    Centered second-order stencils, assembled sparse; the matrix is
    symmetric because each variable coefficient is constant along the
    directions its stencil couples.
    """
    _check_fd(grid)
    (nx, ny, nz), (hx, hy, hz) = grid.points, grid.spacing
    x, y, _ = grid.axes()
    Ix, Iy, Iz = (sps.identity(n) for n in (nx, ny, nz))
    Dxx = _kron3(_d2(nx, hx), Iy, Iz)
    Dyy = _kron3(Ix, _d2(ny, hy), Iz)
    Dzz = _kron3(Ix, Iy, _d2(nz, hz))
    Dxz = _kron3(_d1(nx, hx), Iy, _d1(nz, hz))
    Dyz = _kron3(Ix, _d1(ny, hy), _d1(nz, hz))
    X3, Y3, _ = np.meshgrid(x, y, np.zeros(nz), indexing="ij")
    xs, ys = X3.ravel(), Y3.ravel()
    L = Dxx + Dyy - sps.diags(ys) @ Dxz + sps.diags(xs) @ Dyz + sps.diags((xs**2 + ys**2) / 4) @ Dzz
    return (-L).tocsr()


def heisenberg_sublaplacian_apply(u, grid: Grid) -> np.ndarray:
    """Matrix-free application of the same stencils on a 3D array."""
    _check_fd(grid)
    (hx, hy, hz) = grid.spacing
    x, y, _ = grid.axes()
    U = np.zeros(tuple(n + 2 for n in grid.points))
    U[1:-1, 1:-1, 1:-1] = np.asarray(u).reshape(grid.points)
    c = U[1:-1, 1:-1, 1:-1]
    s = lambda i, j, k: U[1 + i : U.shape[0] - 1 + i, 1 + j : U.shape[1] - 1 + j, 1 + k : U.shape[2] - 1 + k]
    uxx = (s(1, 0, 0) - 2 * c + s(-1, 0, 0)) / hx**2
    uyy = (s(0, 1, 0) - 2 * c + s(0, -1, 0)) / hy**2
    uzz = (s(0, 0, 1) - 2 * c + s(0, 0, -1)) / hz**2
    uxz = (s(1, 0, 1) - s(1, 0, -1) - s(-1, 0, 1) + s(-1, 0, -1)) / (4 * hx * hz)
    uyz = (s(0, 1, 1) - s(0, 1, -1) - s(0, -1, 1) + s(0, -1, -1)) / (4 * hy * hz)
    X = x[:, None, None]
    Y = y[None, :, None]
    out = uxx + uyy - Y * uxz + X * uyz + (X**2 + Y**2) / 4 * uzz
    return -out.ravel()


def fd_heisenberg_operator(grid: Grid, f_values, exponent: float, dense_limit: int = DENSE_LIMIT) -> MatrixOperator:
    """``M_f (1 + P)^{-exponent}`` with ``P`` the finite difference sub-Laplacian."""
    P = heisenberg_sublaplacian_fd(grid)
    R = apply_fractional_resolvent(P, exponent, dense_limit)
    f = np.asarray(f_values, dtype=float).ravel()
    n = grid.size
    mv = lambda v: f * R.matvec(v)
    rmv = lambda v: R.matvec(f * v)
    dense = f[:, None] * R.dense if R.dense is not None else None
    op = MatrixOperator((n, n), mv, rmv, dense, None, False)
    op.info.update(P=P, resolvent=R, f=f)
    return op


# --- binary dump ---------------------------------------------------------

_MAGIC = b"GWMAT1"


def dump_matrix(path, A: np.ndarray, meta: str = "") -> None:
    """Row-major float64 dump with a one-line text header.

    Header: ``GWMAT1 rows=<r> cols=<c> dtype=float64 order=row-major [meta]``.
    """
    A = np.ascontiguousarray(np.asarray(A, dtype="<f8"))
    if A.ndim != 2:
        raise ValueError("2D array expected")
    head = f"{_MAGIC.decode()} rows={A.shape[0]} cols={A.shape[1]} dtype=float64 order=row-major {meta}".rstrip()
    with open(path, "wb") as fh:
        fh.write(head.encode() + b"\n")
        fh.write(A.tobytes())


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.readline().decode().split()
        if not head or head[0] != _MAGIC.decode():
            raise ValueError("not a matrix dump")
        kv = dict(t.split("=", 1) for t in head[1:] if "=" in t)
        r, c = int(kv["rows"]), int(kv["cols"])
        data = np.frombuffer(fh.read(), dtype="<f8")
    if data.size != r * c:
        raise ValueError("truncated matrix dump")
    return data.reshape(r, c).copy()
