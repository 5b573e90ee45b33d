"""Graded nilpotent Lie algebras in coordinates.

Elements of the algebra and of the group are both stored as real coordinate
vectors in a fixed homogeneous basis ``X_0, ..., X_{d-1}``.  The group is
identified with the algebra through the exponential map, so the group law is
the Baker-Campbell-Hausdorff series, which terminates for nilpotent algebras.
Haar measure is Lebesgue measure in these coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

ATOL_JACOBI = 1e-12
MAX_BCH_STEP = 4

# BCH coefficients through step 4, kept as exact rationals
_BCH = {
    "xy": Fraction(1, 2),
    "xxy": Fraction(1, 12),
    "yxy": Fraction(-1, 12),
    "yxxy": Fraction(-1, 24),
}


@dataclass(frozen=True, eq=False)
class GradedLieAlgebra:
    """Structure constants plus a positive integer grading.

    Parameters
    ----------
    structure_constants : ndarray, shape (d, d, d)
        ``c[i, j, k]`` is the coefficient of ``X_k`` in ``[X_i, X_j]``.
    layers : tuple of int
        Layer (weight) of each basis vector.
    labels : tuple of str
        Display names of the basis vectors.
    """

    structure_constants: np.ndarray
    layers: tuple[int, ...]
    labels: tuple[str, ...] = ()
    name: str = "custom"

    def __post_init__(self):
        c = np.asarray(self.structure_constants, dtype=float)
        d = len(self.layers)
        if c.shape != (d, d, d):
            raise ValueError(f"structure constants must have shape {(d, d, d)}, got {c.shape}")
        if any(int(w) != w or w < 1 for w in self.layers):
            raise ValueError("layers must be positive integers")
        c.setflags(write=False)
        object.__setattr__(self, "structure_constants", c)
        object.__setattr__(self, "layers", tuple(int(w) for w in self.layers))
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"X{i}" for i in range(d)))
        elif len(self.labels) != d:
            raise ValueError("one label per basis vector")

    @property
    def dim(self) -> int:
        return len(self.layers)

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self.layers, dtype=float)

    @property
    def is_abelian(self) -> bool:
        return not np.any(self.structure_constants)

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(repr(self.layers).encode())
        h.update(np.ascontiguousarray(self.structure_constants).tobytes())
        return h.hexdigest()[:12]


@dataclass
class ValidationReport:
    """Outcome of :func:`validate`, one entry per invariant."""

    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(passed for passed, _ in self.checks.values())

    def add(self, name, passed, detail=None):
        self.checks[name] = (bool(passed), detail)

    def __str__(self):
        lines = []
        for name, (passed, detail) in self.checks.items():
            s = f"{name}: {'pass' if passed else 'FAIL'}"
            if detail is not None:
                s += f" ({detail})"
            lines.append(s)
        return "\n".join(lines)


def from_brackets(
    layers: Sequence[int],
    brackets: Sequence[tuple],
    labels: Sequence[str] = (),
    name: str = "custom",
) -> GradedLieAlgebra:
    """Build an algebra from quadruples ``(i, j, k, value)``.

    Each quadruple sets ``[X_i, X_j] = value X_k`` (added to any other
    contributions) and the antisymmetric partner is filled in.
    """
    d = len(layers)
    c = np.zeros((d, d, d))
    for quad in brackets:
        if len(quad) != 4:
            raise ValueError(f"bracket entry {quad!r} is not a quadruple (i, j, k, value)")
        i, j, k, v = quad
        i, j, k = int(i), int(j), int(k)
        for idx in (i, j, k):
            if not 0 <= idx < d:
                raise ValueError(f"bracket index {idx} out of range for dimension {d}")
        if i == j:
            raise ValueError(f"[X_{i}, X_{i}] must vanish")
        c[i, j, k] += float(v)
        c[j, i, k] -= float(v)
    return GradedLieAlgebra(c, tuple(layers), tuple(labels), name)


def abelian(d: int, layers: Sequence[int] | None = None) -> GradedLieAlgebra:
    """``R^d`` with a (possibly anisotropic) dilation structure."""
    if layers is None:
        layers = (1,) * d
    if len(layers) != d:
        raise ValueError("need one layer per coordinate")
    name = "R^%d" % d if all(w == 1 for w in layers) else "R^%d%s" % (d, tuple(layers))
    return GradedLieAlgebra(np.zeros((d, d, d)), tuple(layers), (), name)


def heisenberg(n: int = 1) -> GradedLieAlgebra:
    """Heisenberg algebra H_n with ``[X_j, X_{j+n}] = T``.

    Basis order is ``X_1..X_n, X_{n+1}..X_{2n}, T``.
    """
    if n < 1:
        raise ValueError("n >= 1")
    quads = [(j, j + n, 2 * n, 1.0) for j in range(n)]
    labels = tuple(f"X{j + 1}" for j in range(2 * n)) + ("T",)
    return from_brackets((1,) * (2 * n) + (2,), quads, labels, f"H{n}")


def filiform(N: int) -> GradedLieAlgebra:
    """Model filiform algebra on ``R^{2+N}``.

    Basis ``X, Y_0, ..., Y_N`` with ``[X, Y_k] = Y_{k+1}``; ``X`` and ``Y_0``
    sit in layer 1 and ``Y_k`` in layer ``k + 1``.  Step is ``N + 1``.
    """
    if N < 0:
        raise ValueError("N >= 0")
    d = N + 2
    quads = [(0, k + 1, k + 2, 1.0) for k in range(N)]
    layers = (1,) + tuple(k + 1 for k in range(N + 1))
    labels = ("X",) + tuple(f"Y{k}" for k in range(N + 1))
    return from_brackets(layers, quads, labels, f"filiform{N}")


def from_config(spec: Mapping) -> GradedLieAlgebra:
    """Build an algebra from a parsed configuration table.

    Recognised keys: ``family`` (``abelian``, ``heisenberg``, ``filiform``,
    ``custom``), ``dim``, ``layers``, ``n``, ``N``, ``brackets``, ``labels``.
    """
    fam = spec.get("family", "custom")
    if fam == "abelian":
        d = int(spec.get("dim", len(spec.get("layers", ())) or 1))
        return abelian(d, spec.get("layers"))
    if fam == "heisenberg":
        return heisenberg(int(spec.get("n", 1)))
    if fam == "filiform":
        return filiform(int(spec.get("N", 1)))
    if fam == "custom":
        layers = spec["layers"]
        if "dim" in spec and int(spec["dim"]) != len(layers):
            raise ValueError("dim does not match number of layers")
        return from_brackets(layers, spec.get("brackets", []), spec.get("labels", ()))
    raise ValueError(f"unknown algebra family {fam!r}")


# --- invariants --------------------------------------------------------


def _span_rank(vectors: np.ndarray, tol=1e-10) -> int:
    if vectors.size == 0:
        return 0
    s = np.linalg.svd(vectors, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


def lower_central_series(alg: GradedLieAlgebra, max_len: int = 64) -> list[int]:
    """Dimensions of g, [g,g], [g,[g,g]], ... until it reaches zero."""
    c = alg.structure_constants
    d = alg.dim
    current = np.eye(d)
    dims = [d]
    for _ in range(max_len):
        # span of [X_i, v] for v in current
        brk = np.einsum("ijk,aj->iak", c, current).reshape(-1, d)
        r = _span_rank(brk)
        if r == 0:
            dims.append(0)
            return dims
        u, s, vt = np.linalg.svd(brk, full_matrices=False)
        current = vt[:r]
        dims.append(r)
        if r == dims[-2]:
            break
    return dims


def nilpotency_step(alg: GradedLieAlgebra) -> int | None:
    """Step of nilpotency, or ``None`` if the algebra is not nilpotent."""
    cached = alg.__dict__.get("_step", False)
    if cached is not False:
        return cached
    dims = lower_central_series(alg)
    step = None if dims[-1] != 0 else len(dims) - 1
    object.__setattr__(alg, "_step", step)
    return step


def validate(alg: GradedLieAlgebra, atol: float = ATOL_JACOBI) -> ValidationReport:
    """Check antisymmetry, Jacobi, grading compatibility and nilpotency."""
    c = alg.structure_constants
    rep = ValidationReport()
    bad = np.argwhere(np.abs(c + c.transpose(1, 0, 2)) > atol)
    rep.add("antisymmetry", bad.size == 0, tuple(int(t) for t in bad[0]) if bad.size else None)

    # J[i,j,k,m] = sum_l c_ijl c_lkm + c_jkl c_lim + c_kil c_ljm
    J = (
        np.einsum("ijl,lkm->ijkm", c, c)
        + np.einsum("jkl,lim->ijkm", c, c)
        + np.einsum("kil,ljm->ijkm", c, c)
    )
    bad = np.argwhere(np.abs(J) > atol)
    rep.add("jacobi", bad.size == 0, tuple(int(t) for t in bad[0][:3]) if bad.size else None)

    w = np.asarray(alg.layers)
    mismatch = (np.abs(c) > atol) & (w[:, None, None] + w[None, :, None] != w[None, None, :])
    bad = np.argwhere(mismatch)
    rep.add("grading", bad.size == 0, tuple(int(t) for t in bad[0]) if bad.size else None)

    step = nilpotency_step(alg)
    rep.add("nilpotent", step is not None, None if step is None else f"step {step}")
    return rep


def homogeneous_dimension(alg: GradedLieAlgebra) -> int:
    """Sum of k * dim V_k."""
    return int(sum(alg.layers))


# --- coordinates -------------------------------------------------------


def dilate(alg: GradedLieAlgebra, p, t: float) -> np.ndarray:
    """Apply the dilation ``delta_t``; coordinate i scales by t**layer_i."""
    if not t > 0:
        raise ValueError("dilation parameter must be positive")
    p = np.asarray(p, dtype=float)
    return p * np.power(float(t), alg.weights)


def quasi_norm(alg: GradedLieAlgebra, x) -> np.ndarray:
    """Homogeneous quasi-norm ``max_i |x_i|**(1/w_i)``; vectorised over rows."""
    x = np.asarray(x, dtype=float)
    return np.max(np.abs(x) ** (1.0 / alg.weights), axis=-1)


def bracket(alg: GradedLieAlgebra, p, q) -> np.ndarray:
    """Lie bracket in coordinates, ``[p, q]_k = sum c_ijk p_i q_j``."""
    return np.einsum("ijk,...i,...j->...k", alg.structure_constants, p, q)


def group_mult(alg: GradedLieAlgebra, p, q) -> np.ndarray:
    """Group law by the BCH series (exact for step <= 4)."""
    step = nilpotency_step(alg)
    if step is None or step > MAX_BCH_STEP:
        raise ValueError(f"BCH group law implemented for step <= {MAX_BCH_STEP}, got {step}")
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    z = p + q
    if step >= 2:
        pq = bracket(alg, p, q)
        z = z + float(_BCH["xy"]) * pq
        if step >= 3:
            ppq = bracket(alg, p, pq)
            z = z + float(_BCH["xxy"]) * ppq + float(_BCH["yxy"]) * bracket(alg, q, pq)
            if step >= 4:
                z = z + float(_BCH["yxxy"]) * bracket(alg, q, ppq)
    return z


def inverse(alg: GradedLieAlgebra, p) -> np.ndarray:
    return -np.asarray(p, dtype=float)


def bracket_generic(alg: GradedLieAlgebra, p: Sequence, q: Sequence) -> list:
    """Bracket on plain sequences (works for symbolic entries too)."""
    c = alg.structure_constants
    out = [0] * alg.dim
    for i, j, k in zip(*np.nonzero(c)):
        out[k] = out[k] + float(c[i, j, k]) * p[i] * q[j]
    return out


def left_invariant_field(alg: GradedLieAlgebra, j: int, g) -> list:
    """Components of ``X_j u(g) = d/dt u(g exp(t X_j))`` at ``g``.

    Only the part of the BCH series linear in the second argument survives
    the derivative at t = 0, giving ``e_j + [g, e_j]/2 + [g, [g, e_j]]/12``.
    ``g`` may hold numbers, arrays or sympy symbols.
    """
    e = [1 if i == j else 0 for i in range(alg.dim)]
    ge = bracket_generic(alg, g, e)
    gge = bracket_generic(alg, g, ge)
    return [e[k] + ge[k] / 2 + gge[k] / 12 for k in range(alg.dim)]


def right_invariant_field(alg: GradedLieAlgebra, j: int, g) -> list:
    """Components of ``X_j u(g) = d/dt u(exp(-t X_j) g)`` at ``g``."""
    e = [1 if i == j else 0 for i in range(alg.dim)]
    eg = bracket_generic(alg, e, g)
    geg = bracket_generic(alg, g, eg)
    return [-e[k] - eg[k] / 2 + geg[k] / 12 for k in range(alg.dim)]


# --- generators --------------------------------------------------------


@dataclass(frozen=True)
class PreferredGenerators:
    """Homogeneous basis vectors that generate the algebra.

    ``indices`` are basis indices, ``degrees`` their layers and ``lcm`` the
    least common multiple of the degrees.
    """

    indices: tuple[int, ...]
    degrees: tuple[int, ...]

    @property
    def lcm(self) -> int:
        return int(np.lcm.reduce(np.asarray(self.degrees, dtype=int)))


def generated_dimension(alg: GradedLieAlgebra, indices: Sequence[int]) -> int:
    """Dimension of the subalgebra generated by the given basis vectors."""
    d = alg.dim
    span = np.eye(d)[list(indices)] if len(indices) else np.zeros((0, d))
    rank = _span_rank(span)
    c = alg.structure_constants
    gens = span.copy()
    for _ in range(d + 1):
        if rank == 0:
            return 0
        brk = np.einsum("ijk,ai,bj->abk", c, gens, span).reshape(-1, d)
        stacked = np.vstack([span, brk])
        r = _span_rank(stacked)
        if r == rank:
            break
        _, _, vt = np.linalg.svd(stacked, full_matrices=False)
        span = vt[:r]
        rank = r
    return rank


def preferred_generators(alg: GradedLieAlgebra, indices: Sequence[int] | None = None) -> PreferredGenerators:
    """Choose (or check) homogeneous generators.

    Without ``indices``, basis vectors are scanned in layer order and kept
    whenever they are not already generated by the earlier picks.
    """
    if indices is None:
        order = sorted(range(alg.dim), key=lambda i: (alg.layers[i], i))
        chosen: list[int] = []
        have = 0
        for i in order:
            nd = generated_dimension(alg, chosen + [i])
            if nd > have:
                chosen.append(i)
                have = nd
            if have == alg.dim:
                break
        indices = sorted(chosen)
    indices = tuple(int(i) for i in indices)
    if generated_dimension(alg, indices) != alg.dim:
        raise ValueError(f"basis vectors {indices} do not generate the algebra")
    return PreferredGenerators(indices, tuple(alg.layers[i] for i in indices))
