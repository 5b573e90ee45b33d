"""Coverings by quasi-balls, disjoint partitions and decomposition norms.

Balls are ``B(x, r) = {g : |x^{-1} g| < r}`` for the quasi-norm
``|g| = max_i |g_i|^{1/w_i}``.  In exponential coordinates ``B(e, 1)`` is the
box ``[-1, 1]^d``, so Lebesgue measure times ``2^{-d}`` gives
``mu(B(x, r)) = r^Q`` exactly.  On abelian groups the quasi-norm distance is
a genuine metric, and balls are boxes with half-widths ``r^{w_i}``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from . import lie
from .lie import GradedLieAlgebra
from .operators import bump_profile


@dataclass
class Covering:
    centers: np.ndarray
    radius: float
    alg: GradedLieAlgebra
    histogram: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def delta(self) -> int:
        return lie.homogeneous_dimension(self.alg)

    @property
    def haar_scale(self) -> float:
        """Factor turning Lebesgue measure into ``mu`` with ``mu(B(e,1)) = 1``."""
        return 2.0 ** (-self.alg.dim)

    def __len__(self):
        return len(self.centers)

    @property
    def multiplicity(self) -> int:
        return int(np.max(np.nonzero(self.histogram)[0])) if self.histogram.size and self.histogram.any() else 0


def distance(alg: GradedLieAlgebra, x, centers) -> np.ndarray:
    """``|c^{-1} x|`` for every pair; shape ``(len(x), len(centers))``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    if alg.is_abelian:
        diff = x[:, None, :] - c[None, :, :]
    else:
        diff = lie.group_mult(alg, -c[None, :, :], x[:, None, :])
    return lie.quasi_norm(alg, diff)


def _inside_blocks(alg, points, centers, r, budget=4_000_000):
    """Yield ``(slice, inside)`` blocks of the point-in-ball matrix."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    step = max(1, budget // max(1, c.shape[0] * c.shape[1]))
    for start in range(0, len(pts), step):
        sl = slice(start, start + step)
        yield sl, distance(alg, pts[sl], c) < r


def greedy_cover(points, eps: float, alg: GradedLieAlgebra) -> Covering:
    """Maximal ``eps``-separated subset of the sample, scanned in order.

    Each new center is a sample point at distance ``>= eps`` from all earlier
    centers, so the balls ``B(x_i, eps/2)`` are disjoint and ``B(x_i, eps)``
    cover every sample point.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, alg.dim)
    if len(pts) == 0:
        return Covering(np.zeros((0, alg.dim)), eps, alg, np.zeros(1, dtype=int))
    covered = np.zeros(len(pts), dtype=bool)
    centers = []
    tree = None
    if alg.is_abelian:
        # balls are boxes; rescale them to unit sup-norm balls
        scaled = pts / eps**alg.weights
        tree = cKDTree(scaled)
        reach = np.nextafter(1.0, 0.0)
    i = 0
    while True:
        rest = np.nonzero(~covered[i:])[0]
        if rest.size == 0:
            break
        i = i + int(rest[0])
        c = pts[i]
        centers.append(c)
        if tree is not None:
            covered[tree.query_ball_point(scaled[i], reach, p=np.inf)] = True
        else:
            covered |= distance(alg, pts, c[None, :])[:, 0] < eps
    cov = Covering(np.array(centers), eps, alg)
    cov.histogram = np.bincount(ball_overlaps(cov), minlength=1)
    return cov


def ball_overlaps(cov: Covering, dilation: float = 1.0, probe=None) -> np.ndarray:
    """For each ball ``B(x_i, N eps)``, how many balls of the family meet it.

    Exact box test on abelian groups.  Otherwise two balls count as meeting
    when a probe point lies in both; ``probe`` defaults to a fixed sample of
    ``B(e, N eps)`` left-translated to every center.
    """
    c = cov.centers
    if len(c) == 0:
        return np.zeros(0, dtype=int)
    r = dilation * cov.radius
    alg = cov.alg
    if alg.is_abelian:
        half = r ** alg.weights
        out = np.empty(len(c), dtype=int)
        for start in range(0, len(c), 512):
            blk = c[start : start + 512]
            meet = np.all(np.abs(blk[:, None, :] - c[None, :, :]) < 2 * half, axis=-1)
            out[start : start + 512] = meet.sum(axis=1)
        return out
    probe = ball_samples(alg, c, r) if probe is None else np.asarray(probe, dtype=float)
    meet = np.zeros((len(c), len(c)), dtype=bool)
    for _, inside in _inside_blocks(alg, probe, c, r):
        ins = inside.astype(np.int32)
        meet |= (ins.T @ ins) > 0
    return meet.sum(axis=1)


def ball_samples(alg: GradedLieAlgebra, centers, r: float, n: int = 64, seed: int = 0) -> np.ndarray:
    """``n`` points of ``B(e, r)`` (plus ``e``) translated to each center."""
    rng = np.random.default_rng(seed)
    half = r ** alg.weights
    u = rng.uniform(-half, half, (8 * n, alg.dim))
    u = u[lie.quasi_norm(alg, u) < r][:n]
    u = np.vstack([np.zeros((1, alg.dim)), u])
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    return lie.group_mult(alg, c[:, None, :], u[None, :, :]).reshape(-1, alg.dim)


def point_multiplicity(cov: Covering, points, dilation: float = 1.0) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(len(pts), dtype=int)
    for sl, inside in _inside_blocks(cov.alg, pts, cov.centers, dilation * cov.radius):
        out[sl] = inside.sum(axis=1)
    return out


def covers(cov: Covering, points) -> bool:
    pts = np.asarray(points, dtype=float).reshape(-1, cov.alg.dim)
    if len(pts) == 0:
        return True
    if len(cov.centers) == 0:
        return False
    return bool(np.all(point_multiplicity(cov, pts) >= 1))


def to_csv(cov: Covering, path, header_lines=()) -> None:
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(cov.alg.dim)] + ["radius"])
        for c in cov.centers:
            w.writerow([f"{v:.12g}" for v in c] + [f"{cov.radius:.12g}"])


# --- partitions ----------------------------------------------------------


@dataclass
class Partition:
    """Disjointly supported bumps ``phi_n`` on a grid.

    ``labels[x]`` is the cell of grid point ``x`` (``-1`` outside the
    covered set) and ``values[x]`` the value of that cell's bump there;
    every other bump vanishes at ``x``.
    """

    level: int
    labels: np.ndarray
    values: np.ndarray
    n_cells: int
    cell_volume: float
    eta: np.ndarray
    slack: float = 0.0

    def phi(self, n: int) -> np.ndarray:
        return np.where(self.labels == n, self.values, 0.0)

    def sum_of_squares(self) -> np.ndarray:
        return np.where(self.labels >= 0, self.values**2, 0.0)


def cover_for_level(points, l: int, alg: GradedLieAlgebra) -> Covering:
    """Covering by balls of radius ``2^{-l-1}``, so each cell has diameter ``<= 2^{-l}``."""
    return greedy_cover(points, 2.0 ** (-l - 1), alg)


def _first_ball_labels(cov: Covering, axes, mesh) -> np.ndarray:
    """Index of the first ball containing each grid point, ``-1`` if none."""
    alg = cov.alg
    r = cov.radius
    shape = tuple(len(a) for a in axes)
    if not alg.is_abelian:
        labels = np.full(mesh.shape[0], -1, dtype=int)
        for sl, inside in _inside_blocks(alg, mesh, cov.centers, r):
            labels[sl] = np.where(inside.any(axis=1), np.argmax(inside, axis=1), -1)
        return labels.reshape(shape)
    # boxes painted in reverse order, so the first ball wins
    labels = np.full(shape, -1, dtype=int)
    half = r ** alg.weights
    for n in range(len(cov.centers) - 1, -1, -1):
        c = cov.centers[n]
        sl = []
        for k, a in enumerate(axes):
            lo = np.searchsorted(a, c[k] - half[k], side="right")
            hi = np.searchsorted(a, c[k] + half[k], side="left")
            sl.append(slice(lo, hi))
        labels[tuple(sl)] = n
    return labels


def partition_functions(cov: Covering, l: int, grid_axes, region_mask=None) -> Partition:
    """Bumps ``phi_n`` inside the disjointified cells ``B_n = B(x_n, r) minus earlier balls``.

    ``phi_n = 1 - (1 - t^2)^3`` with ``t = dist(x, boundary) / eta_n`` clamped
    to ``[0, 1]``, where ``eta_n`` is the largest layer width whose sampled
    measure inside the cell stays below ``2^{-l} / N_l``.  Cell boundary
    points get ``phi = 0``, which keeps supports disjoint on the grid.

    Parameters
    ----------
    grid_axes : sequence of 1D arrays
        Uniform coordinates of a tensor grid.
    region_mask : bool array, optional
        Target region on the grid (default: everything).
    """
    alg = cov.alg
    r = cov.radius
    if r > 2.0 ** (-l - 1) * (1 + 1e-12):
        raise ValueError("covering radius must be at most 2^{-l-1}")
    axes = [np.asarray(a, dtype=float) for a in grid_axes]
    h = np.array([a[1] - a[0] for a in axes])
    if np.any(h > 0.25 * r ** alg.weights):
        raise ValueError("grid too coarse for level %d" % l)
    shape = tuple(len(a) for a in axes)
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, alg.dim)
    mask = np.ones(shape, dtype=bool) if region_mask is None else np.asarray(region_mask, dtype=bool).reshape(shape)

    labels = _first_ball_labels(cov, axes, mesh)

    # grid points with a differently labelled axis neighbour
    boundary = np.zeros(shape, dtype=bool)
    for ax in range(len(shape)):
        fwd = np.diff(labels, axis=ax) != 0
        lo = [slice(None)] * len(shape)
        hi = [slice(None)] * len(shape)
        lo[ax] = slice(0, -1)
        hi[ax] = slice(1, None)
        boundary[tuple(lo)] |= fwd
        boundary[tuple(hi)] |= fwd
    boundary |= labels < 0
    # interfaces sit half a step beyond the last grid point of a cell
    hmin = float(h.min())
    dist = ndimage.distance_transform_edt(~boundary, sampling=h) + 0.5 * hmin

    vol = float(np.prod(h))
    n_cells = len(cov.centers)
    allowed = int(np.floor(2.0 ** (-l) / max(n_cells, 1) / vol))
    eta = np.zeros(n_cells)
    flat_lab = labels.ravel()
    flat_dist = dist.ravel()
    flat_val = np.zeros(flat_lab.size)
    order = np.argsort(flat_lab, kind="stable")
    bounds = np.searchsorted(flat_lab[order], np.arange(n_cells + 1))
    for n in range(n_cells):
        idx = order[bounds[n] : bounds[n + 1]]
        if idx.size == 0:
            continue
        dn = flat_dist[idx]
        srt = np.sort(dn)
        # at least one grid step of transition, otherwise the budget decides
        eta_n = max(hmin, srt[allowed] if allowed < srt.size else srt[-1])
        eta[n] = eta_n
        flat_val[idx] = 1.0 - bump_profile(np.clip(dn / eta_n, 0.0, 1.0))
    values = flat_val.reshape(shape)
    part = Partition(l, labels, values, n_cells, vol, eta)
    part.slack = float(np.count_nonzero(mask & ((labels < 0) | (dist < hmin))) * vol)
    return part


def mass_defect(part: Partition, region_mask=None) -> tuple[float, float]:
    """Sampled measure of ``{sum phi^2 != 1}`` in the region, and the grid slack.

    The slack is the measure of grid points within one step of a cell
    interface: the bumps must dip there however fine the layer is meant to be.
    """
    mask = np.ones(part.labels.shape, dtype=bool) if region_mask is None else np.asarray(region_mask, dtype=bool)
    s2 = part.sum_of_squares()
    defect = np.count_nonzero(mask & (np.abs(s2 - 1) > 1e-12)) * part.cell_volume
    return float(defect), part.slack


def support_diameter(part: Partition, n: int, grid_axes, alg: GradedLieAlgebra) -> float:
    sel = part.phi(n) > 0
    if not sel.any():
        return 0.0
    mesh = np.stack(np.meshgrid(*grid_axes, indexing="ij"), axis=-1)[sel]
    if alg.is_abelian:
        span = mesh.max(axis=0) - mesh.min(axis=0)
        return float(np.max(span ** (1.0 / alg.weights)))
    return float(np.max(distance(alg, mesh, mesh)))


# --- decomposition norms -------------------------------------------------


def lplq_norm(f_values, points, cell_volume: float, p: float, q: float, cov: Covering) -> float:
    """``ell_q`` norm over the balls of ``cov`` of the local ``L_p`` norms.

    ``f_values`` are samples at ``points`` (Riemann sum with weight
    ``cell_volume``).  ``q = inf`` gives the supremum over tiles.
    """
    if p <= 0 or q <= 0:
        raise ValueError("p and q must be positive")
    f = np.abs(np.asarray(f_values, dtype=float).ravel())
    fp = f**p
    local = np.zeros(len(cov.centers))
    for sl, inside in _inside_blocks(cov.alg, points, cov.centers, cov.radius):
        local += inside.T.astype(float) @ fp[sl]
    local = (local * cell_volume) ** (1.0 / p)
    if np.isinf(q):
        return float(local.max(initial=0.0))
    return float(np.sum(local**q) ** (1.0 / q))
