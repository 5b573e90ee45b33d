"""Differential operators as linear combinations of words in the basis fields.

A word ``(a_1, ..., a_k)`` stands for ``X_{a_1} ... X_{a_k}`` where the
letters index basis vectors of the algebra.  Vector fields act on functions
as left-invariant fields ``X_j u(g) = d/dt u(g exp(t X_j))``; on an abelian
group these are the coordinate derivatives ``d/dx_j`` and the symbol
convention below is ``X_j -> i xi_j``.
"""
from __future__ import annotations

import hashlib
import itertools
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import sympy as sp

from . import lie
from .lie import GradedLieAlgebra, PreferredGenerators

Word = tuple  # tuple[int, ...]

ROCKLAND_TOL = 1e-9


def _coords(d: int):
    return sp.symbols(f"x0:{d}", real=True)


def weighted_length(alg: GradedLieAlgebra, w: Sequence[int]) -> int:
    """Sum of the layers of the letters of ``w``."""
    total = 0
    for a in w:
        if not 0 <= int(a) < alg.dim:
            raise IndexError(f"letter {a} is not a basis index of {alg.name}")
        total += alg.layers[int(a)]
    return total


# --- constant coefficients ---------------------------------------------


@dataclass(eq=False)
class ConstDiffOp:
    """Constant coefficient operator ``sum_w a_w X^w``.

    Terms with zero coefficient are dropped on construction.
    """

    alg: GradedLieAlgebra
    terms: dict = field(default_factory=dict)
    degenerate: bool = False

    def __post_init__(self):
        clean = {}
        for w, a in self.terms.items():
            w = tuple(int(x) for x in w)
            weighted_length(self.alg, w)
            a = complex(a)
            if a != 0:
                clean[w] = clean.get(w, 0) + a
        self.terms = {w: a for w, a in clean.items() if a != 0}

    @property
    def order(self) -> int:
        if not self.terms:
            return 0
        return max(weighted_length(self.alg, w) for w in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other):
        if np.isscalar(other):
            other = identity(self.alg) * other
        t = dict(self.terms)
        for w, a in other.terms.items():
            t[w] = t.get(w, 0) + a
        return ConstDiffOp(self.alg, t)

    __radd__ = __add__

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, ConstDiffOp):
            t: dict = {}
            for (w1, a1), (w2, a2) in itertools.product(self.terms.items(), other.terms.items()):
                t[w1 + w2] = t.get(w1 + w2, 0) + a1 * a2
            return ConstDiffOp(self.alg, t)
        return ConstDiffOp(self.alg, {w: a * other for w, a in self.terms.items()})

    def __rmul__(self, other):
        return self * other

    def __eq__(self, other):
        if not isinstance(other, ConstDiffOp):
            return NotImplemented
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0) - other.terms.get(k, 0)) < 1e-12 for k in keys)

    def digest(self) -> str:
        items = sorted((w, (a.real, a.imag)) for w, a in self.terms.items())
        return hashlib.sha256(repr((self.alg.digest(), items)).encode()).hexdigest()[:12]

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for w, a in sorted(self.terms.items()):
            name = "".join(self.alg.labels[i] for i in w) or "1"
            c = a.real if a.imag == 0 else a
            parts.append(f"{c:g}*{name}")
        return " + ".join(parts)


def identity(alg: GradedLieAlgebra) -> ConstDiffOp:
    return ConstDiffOp(alg, {(): 1.0})


def field_op(alg: GradedLieAlgebra, j: int) -> ConstDiffOp:
    return ConstDiffOp(alg, {(j,): 1.0})


def canonical_laplacian(alg: GradedLieAlgebra, gens: PreferredGenerators | None = None) -> ConstDiffOp:
    """``Delta_G = -sum_j (-1)**(v/v_j) X_j**(2 v / v_j)``.

    ``v`` is the lcm of the generator degrees.  ``-Delta_G`` is the positive
    operator of order ``2 v``.
    """
    if gens is None:
        gens = lie.preferred_generators(alg)
    v = gens.lcm
    terms = {}
    for j, vj in zip(gens.indices, gens.degrees):
        r = v // vj
        terms[(j,) * (2 * r)] = -((-1.0) ** r)
    return ConstDiffOp(alg, terms)


def check_homogeneity(op: ConstDiffOp):
    """Order ``m`` if every term has weighted length ``m``, else ``"inhomogeneous"``."""
    if op.is_zero:
        warnings.warn("zero operator: order 0 by convention", stacklevel=2)
        return 0
    lengths = {weighted_length(op.alg, w) for w in op.terms}
    return lengths.pop() if len(lengths) == 1 else "inhomogeneous"


def const_adjoint(op: ConstDiffOp) -> ConstDiffOp:
    """``(a X^w)^dagger = (-1)^|w| conj(a) X^{reversed w}``."""
    return ConstDiffOp(op.alg, {w[::-1]: (-1) ** len(w) * np.conj(a) for w, a in op.terms.items()})


def normal_form(op: ConstDiffOp) -> ConstDiffOp:
    """Rewrite words with non-decreasing letters (PBW order).

    Uses ``X_b X_a = X_a X_b - [X_a, X_b]`` for ``a < b``.  Offered for
    abelian and step-two algebras.
    """
    step = lie.nilpotency_step(op.alg)
    if step is None or step > 2:
        raise ValueError("normal form is provided for abelian and step-2 algebras only")
    c = op.alg.structure_constants
    out: dict = {}
    stack = list(op.terms.items())
    while stack:
        w, a = stack.pop()
        for pos in range(len(w) - 1):
            if w[pos] > w[pos + 1]:
                b_, a_ = w[pos], w[pos + 1]
                swapped = w[:pos] + (a_, b_) + w[pos + 2 :]
                stack.append((swapped, a))
                for k in np.nonzero(c[a_, b_])[0]:
                    stack.append((w[:pos] + (int(k),) + w[pos + 2 :], -a * c[a_, b_, k]))
                break
        else:
            out[w] = out.get(w, 0) + a
    return ConstDiffOp(op.alg, out)


# --- symbols -----------------------------------------------------------


@dataclass
class Symbol:
    """Polynomial in the dual variables, ``{exponent tuple: coefficient}``."""

    coeffs: dict
    weights: tuple

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape[:-1], dtype=complex)
        for e, a in self.coeffs.items():
            term = np.full(xi.shape[:-1], a, dtype=complex)
            for j, k in enumerate(e):
                if k:
                    term = term * xi[..., j] ** k
            out = out + term
        return out

    def real(self, xi) -> np.ndarray:
        return self(xi).real

    def weighted_degree(self, e) -> int:
        return int(sum(k * w for k, w in zip(e, self.weights)))

    @property
    def order(self) -> int:
        return max((self.weighted_degree(e) for e in self.coeffs), default=0)

    def principal(self, m: int | None = None) -> "Symbol":
        m = self.order if m is None else m
        return Symbol({e: a for e, a in self.coeffs.items() if self.weighted_degree(e) == m}, self.weights)

    @property
    def is_real(self) -> bool:
        return all(abs(complex(a).imag) < 1e-14 for a in self.coeffs.values())

    def __repr__(self):
        return " + ".join(f"{complex(a).real:g}*xi^{e}" for e, a in sorted(self.coeffs.items())) or "0"


def abelian_symbol(op: ConstDiffOp) -> Symbol:
    """Full symbol ``sum_w i^|w| a_w xi^w`` of an operator on an abelian group."""
    if not op.alg.is_abelian:
        raise ValueError("abelian_symbol needs an abelian algebra")
    d = op.alg.dim
    coeffs: dict = {}
    for w, a in op.terms.items():
        e = [0] * d
        for letter in w:
            e[letter] += 1
        e = tuple(e)
        coeffs[e] = coeffs.get(e, 0) + (1j) ** len(w) * a
    coeffs = {e: complex(np.round(a.real, 15) + 1j * np.round(a.imag, 15)) for e, a in coeffs.items() if a != 0}
    return Symbol(coeffs, op.alg.layers)


def sphere_points(alg: GradedLieAlgebra, n: int, rng=None) -> np.ndarray:
    """Points on the anisotropic unit sphere ``sum_j |s_j|^(2v/v_j) = 1``.

    Euclidean unit directions (Fibonacci lattice in 2D, Gaussian samples in
    higher dimension) are pushed radially onto the sphere.
    """
    d = alg.dim
    w = alg.weights
    v = np.lcm.reduce(np.asarray(alg.layers))
    if d == 1:
        u = np.array([[1.0], [-1.0]])
    elif d == 2:
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        u = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        u = rng.standard_normal((n, d))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
    # rho(r u) = 1 with rho^{2v} = sum |r u_j|^{2v/w_j}; solve per row by bisection
    expo = 2 * v / w
    lo = np.zeros(len(u))
    hi = np.ones(len(u))
    f = lambda r: np.sum(np.abs(r[:, None] * u) ** expo, axis=1) - 1.0
    while np.any(f(hi) < 0):
        hi = np.where(f(hi) < 0, 2 * hi, hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        neg = f(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)[:, None] * u


@dataclass
class RocklandReport:
    lower_bound: float
    passed: bool
    mode: str
    n_samples: int

    def __str__(self):
        return f"{self.mode}: min {self.lower_bound:.3g} ({'pass' if self.passed else 'fail'}, {self.n_samples} samples)"


def rockland_check(op: ConstDiffOp, mode: str = "auto", n_samples: int | None = None, basis_size: int = 40) -> RocklandReport:
    """Sufficient positivity check for the principal part of ``op``.

    Abelian groups: minimum of ``Re sigma`` on the anisotropic unit sphere.
    Heisenberg groups: smallest eigenvalue of truncated ``pi_{+-1}(op)``.
    A positive minimum certifies positivity of the frozen operator; it is not
    a proof of the full Rockland condition.
    """
    alg = op.alg
    if mode == "auto":
        mode = "abelian" if alg.is_abelian else "heisenberg"
    if mode == "abelian":
        if not alg.is_abelian:
            raise ValueError("abelian mode on a non-abelian algebra")
        sym = abelian_symbol(op).principal()
        if n_samples is None:
            n_samples = {1: 2, 2: 10_000}.get(alg.dim, 100_000)
        pts = sphere_points(alg, n_samples)
        val = float(np.min(sym.real(pts)))
        return RocklandReport(val, val > ROCKLAND_TOL, mode, len(pts))
    if mode == "heisenberg":
        from . import representations as reps

        n = reps.heisenberg_modes(alg)
        basis = reps.OscillatorBasis(n, basis_size if n == 1 else max(8, basis_size // 3))
        vals = []
        for s in (1.0, -1.0):
            M = reps.rep_heisenberg(op, s, basis).matrix
            vals.append(np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0])
        val = float(min(vals))
        return RocklandReport(val, val > ROCKLAND_TOL, mode, basis.size)
    raise ValueError(f"unsupported mode {mode!r}")


# --- variable coefficients ---------------------------------------------


@dataclass(eq=False)
class Coefficient:
    """Scalar function on the group with declared bounds.

    ``expr`` (a sympy expression in ``x0, x1, ...``) is optional; when given
    it supplies the values and the derivatives used by :func:`formal_adjoint`.
    """

    func: Callable
    sup_bound: float = np.inf
    support_radius: float = np.inf
    expr: sp.Expr | None = None
    name: str = "callable"
    dim: int | None = None

    def __call__(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        return np.asarray(self.func(g)) * np.ones(g.shape[:-1])

    @classmethod
    def from_expr(cls, expr, dim: int, name: str = "expr", sup_bound=np.inf, support_radius=np.inf):
        xs = _coords(dim)
        names = {str(x): x for x in xs}
        expr = sp.sympify(expr, locals=names)
        # bind free symbols to the real coordinate symbols by name
        expr = expr.xreplace({s: names[s.name] for s in expr.free_symbols if s.name in names})
        f = sp.lambdify([xs], expr, modules="numpy")

        def func(g):
            g = np.asarray(g, dtype=float)
            return f([g[..., i] for i in range(dim)])

        return cls(func, sup_bound, support_radius, expr, name, dim)

    def conj(self) -> "Coefficient":
        if self.expr is not None:
            return Coefficient.from_expr(sp.conjugate(self.expr), self.dim, "conj " + self.name, self.sup_bound, self.support_radius)
        return Coefficient(lambda g: np.conj(self.func(g)), self.sup_bound, self.support_radius, None, "conj " + self.name)

    def derivative(self, alg: GradedLieAlgebra, word: Sequence[int]) -> "Coefficient":
        """``X^word`` applied to the coefficient (needs ``expr``)."""
        if self.expr is None:
            raise ValueError(f"coefficient {self.name!r} has no symbolic form; derivatives unavailable")
        xs = _coords(alg.dim)
        e = self.expr
        # X_{a_1}...X_{a_k} b: the rightmost field acts first
        for a in reversed(tuple(word)):
            comps = lie.left_invariant_field(alg, a, list(xs))
            e = sp.simplify(sum(sp.sympify(c) * sp.diff(e, x) for c, x in zip(comps, xs)))
        return Coefficient.from_expr(e, alg.dim, f"X{tuple(word)} {self.name}", np.inf, self.support_radius)


def constant(value: float, dim: int) -> Coefficient:
    return Coefficient.from_expr(sp.Float(value) if not isinstance(value, complex) else value, dim, f"constant({value})", abs(value), np.inf)


def trig_polynomial(dim: int, axis: int = 0, const: float = 0.0, cos: Sequence[float] = (), sin: Sequence[float] = ()) -> Coefficient:
    """``const + sum_k cos[k-1] cos(k x) + sin[k-1] sin(k x)`` along ``axis``."""
    x = _coords(dim)[axis]
    e = sp.Float(const)
    for k, a in enumerate(cos, 1):
        e += sp.Float(a) * sp.cos(k * x)
    for k, b in enumerate(sin, 1):
        e += sp.Float(b) * sp.sin(k * x)
    bound = abs(const) + sum(map(abs, cos)) + sum(map(abs, sin))
    return Coefficient.from_expr(e, dim, "trig", bound, np.inf)


def gaussian_bump(dim: int, center=None, width=1.0, amplitude: float = 1.0) -> Coefficient:
    """``amplitude * exp(-sum ((x_i - c_i)/w_i)^2)``."""
    xs = _coords(dim)
    c = np.zeros(dim) if center is None else np.broadcast_to(np.asarray(center, float), (dim,))
    w = np.broadcast_to(np.asarray(width, float), (dim,))
    e = sp.Float(amplitude) * sp.exp(-sum(((x - float(ci)) / float(wi)) ** 2 for x, ci, wi in zip(xs, c, w)))
    return Coefficient.from_expr(e, dim, "gaussian", abs(amplitude), np.inf)


def bump_profile(t):
    """``(1 - t^2)^3`` on ``|t| < 1``, zero outside."""
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) < 1, (1 - np.minimum(t * t, 1.0)) ** 3, 0.0)


def compact_bump(dim: int, center=None, radius=1.0, amplitude: float = 1.0) -> Coefficient:
    """``amplitude * (1 - r^2)^3`` with ``r^2 = sum ((x_i - c_i)/R_i)^2``, zero for r >= 1."""
    xs = _coords(dim)
    c = np.zeros(dim) if center is None else np.broadcast_to(np.asarray(center, float), (dim,))
    R = np.broadcast_to(np.asarray(radius, float), (dim,))
    r2 = sum(((x - float(ci)) / float(ri)) ** 2 for x, ci, ri in zip(xs, c, R))
    e = sp.Piecewise((sp.Float(amplitude) * (1 - r2) ** 3, r2 < 1), (0, True))
    coef = Coefficient.from_expr(e, dim, "bump", abs(amplitude), float(np.max(R) + np.linalg.norm(c)))
    return coef


def coefficient_from_config(spec, dim: int) -> Coefficient:
    """Numeric literal or ``{kind = ..., ...}`` table."""
    if isinstance(spec, (int, float)):
        return constant(float(spec), dim)
    kind = spec.get("kind")
    args = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "constant":
        return constant(float(args.get("value", 1.0)), dim)
    if kind == "trig":
        return trig_polynomial(dim, **args)
    if kind == "gaussian":
        return gaussian_bump(dim, **args)
    if kind == "bump":
        return compact_bump(dim, **args)
    if kind == "expr":
        return Coefficient.from_expr(args["expr"], dim)
    raise ValueError(f"unknown coefficient kind {kind!r}")


@dataclass(eq=False)
class DiffOp:
    """Variable coefficient operator.

    ``form == "standard"`` means ``sum_w M_{a_w} X^w``; ``form == "adjoint"``
    means ``sum_w X^w o M_{a_w}``.
    """

    alg: GradedLieAlgebra
    terms: dict
    form: str = "standard"

    def __post_init__(self):
        if self.form not in ("standard", "adjoint"):
            raise ValueError("form is 'standard' or 'adjoint'")
        self.terms = {tuple(int(x) for x in w): a for w, a in self.terms.items()}
        for w in self.terms:
            weighted_length(self.alg, w)

    @property
    def order(self) -> int:
        return max((weighted_length(self.alg, w) for w in self.terms), default=0)

    @classmethod
    def from_const(cls, op: ConstDiffOp) -> "DiffOp":
        d = op.alg.dim
        return cls(op.alg, {w: constant(a.real if a.imag == 0 else a, d) for w, a in op.terms.items()})


@dataclass(eq=False)
class DivergenceOp:
    """``-sum_j X_j o M_a o X_j`` over the first-layer basis fields (order 2)."""

    alg: GradedLieAlgebra
    a: Coefficient

    @property
    def order(self) -> int:
        return 2

    @property
    def letters(self) -> list:
        return [j for j, w in enumerate(self.alg.weights) if w == 1]


def freeze_top(op, g) -> ConstDiffOp:
    """Top order part with coefficients frozen at ``g``.

    Works for both forms, since moving a coefficient through the fields only
    produces lower order terms.
    """
    if isinstance(op, ConstDiffOp):
        m = op.order
        return ConstDiffOp(op.alg, {w: a for w, a in op.terms.items() if weighted_length(op.alg, w) == m})
    if isinstance(op, DivergenceOp):
        g = np.asarray(g, dtype=float)
        a = float(np.real(np.asarray(op.a(g[None, :]))[0]))
        return ConstDiffOp(op.alg, {(j, j): -a for j in op.letters})
    m = op.order
    g = np.asarray(g, dtype=float)
    terms = {}
    for w, a in op.terms.items():
        if weighted_length(op.alg, w) == m:
            terms[w] = complex(np.asarray(a(g[None, :]))[0])
    out = ConstDiffOp(op.alg, terms)
    if out.is_zero:
        out.degenerate = True
        warnings.warn(f"top order coefficients vanish at {g}", stacklevel=2)
    return out


def formal_adjoint(op, expand: bool = False):
    """Formal adjoint with respect to Haar measure.

    ``M_a X^w -> (-1)^|w| X^{rev w} o M_conj(a)``.  With ``expand`` the result
    is rewritten in standard form via the Leibniz rule, which needs symbolic
    coefficients.
    """
    if isinstance(op, ConstDiffOp):
        return const_adjoint(op)
    alg = op.alg
    if op.form == "adjoint":
        # (X^w o M_a)^dagger = (-1)^|w| M_conj(a) X^{rev w}
        terms: dict = {}
        for w, a in op.terms.items():
            ca = a.conj()
            sign = (-1) ** len(w)
            terms[w[::-1]] = _scaled(ca, sign) if w[::-1] not in terms else _sum(terms[w[::-1]], _scaled(ca, sign))
        return DiffOp(alg, terms, "standard")
    adj = {}
    for w, a in op.terms.items():
        key = w[::-1]
        c = _scaled(a.conj(), (-1) ** len(w))
        adj[key] = c if key not in adj else _sum(adj[key], c)
    out = DiffOp(alg, adj, "adjoint")
    return expand_adjoint_form(out) if expand else out


def expand_adjoint_form(op: "DiffOp") -> "DiffOp":
    """Rewrite ``X^w o M_b`` as ``sum_S M_{X^{w_S} b} X^{w_{S^c}}`` (Leibniz)."""
    if op.form == "standard":
        return op
    alg = op.alg
    terms: dict = {}
    for w, b in op.terms.items():
        k = len(w)
        for mask in itertools.product((0, 1), repeat=k):
            on_b = tuple(w[i] for i in range(k) if mask[i])
            on_u = tuple(w[i] for i in range(k) if not mask[i])
            coef = b.derivative(alg, on_b) if on_b else b
            if coef.expr is not None and sp.simplify(coef.expr) == 0:
                continue
            terms[on_u] = coef if on_u not in terms else _sum(terms[on_u], coef)
    return DiffOp(alg, terms, "standard")


def _scaled(a: Coefficient, s) -> Coefficient:
    if a.expr is not None:
        return Coefficient.from_expr(s * a.expr, a.dim, a.name, abs(s) * a.sup_bound, a.support_radius)
    return Coefficient(lambda g: s * a.func(g), abs(s) * a.sup_bound, a.support_radius, None, a.name)


def _sum(a: Coefficient, b: Coefficient) -> Coefficient:
    if a.expr is not None and b.expr is not None:
        return Coefficient.from_expr(a.expr + b.expr, a.dim, a.name, a.sup_bound + b.sup_bound, max(a.support_radius, b.support_radius))
    return Coefficient(lambda g: a(g) + b(g), a.sup_bound + b.sup_bound, max(a.support_radius, b.support_radius))


def apply_const(op: ConstDiffOp, expr):
    """Apply a constant coefficient operator to a sympy expression."""
    xs = _coords(op.alg.dim)
    expr = sp.sympify(expr)
    out = 0
    for w, a in op.terms.items():
        e = expr
        for letter in reversed(w):
            comps = lie.left_invariant_field(op.alg, letter, list(xs))
            e = sum(sp.sympify(c) * sp.diff(e, x) for c, x in zip(comps, xs))
        out += a * e
    return sp.expand(out)


def apply_diffop(op: DiffOp, expr):
    """Apply a variable coefficient operator (symbolic coefficients) to ``expr``."""
    xs = _coords(op.alg.dim)
    expr = sp.sympify(expr)
    out = 0
    for w, a in op.terms.items():
        if a.expr is None:
            raise ValueError("symbolic coefficients required")
        if op.form == "standard":
            e = apply_const(ConstDiffOp(op.alg, {w: 1.0}), expr)
            out += a.expr * e
        else:
            out += apply_const(ConstDiffOp(op.alg, {w: 1.0}), a.expr * expr)
    return sp.expand(out)


def from_config(spec: Mapping, alg: GradedLieAlgebra):
    """Operator from a parsed config table.

    ``kind = "laplacian"`` gives ``-Delta_G`` (positive), ``kind = "divergence"``
    gives ``-sum X_j a X_j`` with ``coeff`` as ``a``; otherwise ``terms``
    is a list of ``{word = [...], coeff = literal or table}``.  The result is
    a :class:`ConstDiffOp` when all coefficients are literals.
    """
    kind = spec.get("kind", "terms")
    if kind == "divergence":
        return DivergenceOp(alg, coefficient_from_config(spec.get("coeff", 1.0), alg.dim))
    if kind == "laplacian":
        gens = lie.preferred_generators(alg, spec.get("generators"))
        return -canonical_laplacian(alg, gens)
    if kind != "terms":
        raise ValueError(f"unknown operator kind {kind!r}")
    terms = spec.get("terms", [])
    if all(isinstance(t.get("coeff", 1.0), (int, float)) for t in terms):
        out: dict = {}
        for t in terms:
            w = tuple(t["word"])
            out[w] = out.get(w, 0) + float(t.get("coeff", 1.0))
        return ConstDiffOp(alg, out)
    return DiffOp(alg, {tuple(t["word"]): coefficient_from_config(t.get("coeff", 1.0), alg.dim) for t in terms})
