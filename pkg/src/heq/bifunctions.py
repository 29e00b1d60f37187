"""Structured equilibrium bifunctions F : C x C -> R and their building blocks.

Five bifunction kinds are shipped: difference-of-function, directional
derivative of a convex functional, single-valued operator VI pairing,
fixed-point gap of a nonexpansive map, and the zero bifunction. Each kind
evaluates in closed form; set-valued formulations are realized by supplying
the maximizing selection analytically per kind, so desk-scale verification
gets exact values instead of inner maximization loops.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import (
    DegenerateSample,
    DimensionMismatch,
    NoAnalyticForm,
    NoClosedForm,
    PointOutsideDomain,
    ScaleNonpositive,
)
from .geometry import ConvexSet, as_vector

# Membership slack used when checking evaluation arguments against the domain.
_DOMAIN_TOL = 1e-8


def _spd_floor(mat, what):
    sym = 0.5 * (mat + mat.T)
    lo = float(np.linalg.eigvalsh(sym)[0])
    scale = 1.0 + float(np.linalg.norm(mat))
    if lo < -1e-9 * scale:
        raise ValueError(f"{what} must be positive semidefinite (min eig {lo:.3g})")
    return max(lo, 0.0)


def _matrix(value, name):
    m = np.array(value, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be a square matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} entries must be finite")
    m.flags.writeable = False
    return m


# ---------------------------------------------------------------------------
# Convex functionals
# ---------------------------------------------------------------------------


class ConvexFunctional:
    """Convex function on R^n with an explicit subgradient selection."""

    def value(self, x) -> float:
        raise NotImplementedError

    def subgradient(self, x) -> np.ndarray:
        """One element of the subdifferential at x."""
        raise NotImplementedError

    def directional(self, x, h) -> float:
        """Exact directional derivative sup over the subdifferential of <., h>."""
        raise NotImplementedError

    def grad_lipschitz(self) -> float | None:
        """Lipschitz bound of the gradient, or None when nonsmooth."""
        return None

    def strong_convexity(self) -> float:
        return 0.0

    def value_many(self, pts) -> np.ndarray:
        return np.array([self.value(row) for row in np.asarray(pts, dtype=float)])

    def subgradient_many(self, pts) -> np.ndarray:
        return np.stack([self.subgradient(row) for row in np.asarray(pts, dtype=float)])


@dataclass(frozen=True, eq=False)
class Quadratic(ConvexFunctional):
    """psi(x) = 0.5 <Q x, x> + <q, x> + c with Q positive semidefinite."""

    matrix: np.ndarray
    linear: np.ndarray
    constant: float = 0.0

    def __post_init__(self):
        Q = _matrix(self.matrix, "quadratic matrix")
        object.__setattr__(self, "matrix", Q)
        q = as_vector(self.linear, Q.shape[0])
        q.flags.writeable = False
        object.__setattr__(self, "linear", q)
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "_mu", _spd_floor(Q, "quadratic matrix"))
        eigs = np.linalg.eigvalsh(0.5 * (Q + Q.T))
        object.__setattr__(self, "_L", float(eigs[-1]))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def value(self, x):
        x = as_vector(x, self.dim)
        return 0.5 * float(x @ (self.matrix @ x)) + float(self.linear @ x) + self.constant

    def subgradient(self, x):
        x = as_vector(x, self.dim)
        return self.matrix @ x + self.linear

    def directional(self, x, h):
        return float(self.subgradient(x) @ as_vector(h, self.dim))

    def grad_lipschitz(self):
        return self._L

    def strong_convexity(self):
        return self._mu

    def value_many(self, pts):
        pts = np.asarray(pts, dtype=float)
        quad = 0.5 * np.einsum("ij,jk,ik->i", pts, self.matrix, pts)
        return quad + pts @ self.linear + self.constant

    def subgradient_many(self, pts):
        return np.asarray(pts, dtype=float) @ self.matrix.T + self.linear

    def isotropic_curvature(self) -> float | None:
        """lam when Q == lam * I, else None (enables projection-form proxes)."""
        lam = float(self.matrix[0, 0]) if self.dim else 0.0
        if np.array_equal(self.matrix, lam * np.eye(self.dim)):
            return lam
        return None

    def diagonal_curvature(self) -> np.ndarray | None:
        d = np.diag(self.matrix).copy()
        if np.array_equal(self.matrix, np.diag(d)):
            return d
        return None


@dataclass(frozen=True, eq=False)
class HalfSquaredDistance(ConvexFunctional):
    """psi(x) = 0.5 * dist(x, K)^2 for a closed convex K; gradient x - proj_K(x)."""

    target: ConvexSet

    @property
    def dim(self):
        return self.target.dim

    def value(self, x):
        return 0.5 * self.target.distance(x) ** 2

    def subgradient(self, x):
        x = as_vector(x, self.dim)
        return x - self.target.project(x)

    def directional(self, x, h):
        return float(self.subgradient(x) @ as_vector(h, self.dim))

    def grad_lipschitz(self):
        return 1.0

    def value_many(self, pts):
        pts = np.asarray(pts, dtype=float)
        diff = pts - self.target.project_many(pts)
        return 0.5 * np.einsum("ij,ij->i", diff, diff)

    def subgradient_many(self, pts):
        pts = np.asarray(pts, dtype=float)
        return pts - self.target.project_many(pts)


@dataclass(frozen=True, eq=False)
class Norm1(ConvexFunctional):
    """psi(x) = ||x||_1; the directional derivative picks the maximizing
    sign-pattern vertex of the subdifferential."""

    dim: int

    def value(self, x):
        return float(np.sum(np.abs(as_vector(x, self.dim))))

    def subgradient(self, x):
        return np.sign(as_vector(x, self.dim))

    def directional(self, x, h):
        x = as_vector(x, self.dim)
        h = as_vector(h, self.dim)
        active = x != 0.0
        return float(np.sign(x[active]) @ h[active] + np.sum(np.abs(h[~active])))

    def value_many(self, pts):
        return np.sum(np.abs(np.asarray(pts, dtype=float)), axis=1)

    def subgradient_many(self, pts):
        return np.sign(np.asarray(pts, dtype=float))


# ---------------------------------------------------------------------------
# Monotone maps (single-valued) and nonexpansive maps
# ---------------------------------------------------------------------------


class MonotoneMap:
    """Single-valued monotone operator x -> M x + shift."""

    matrix: np.ndarray
    shift: np.ndarray

    def __call__(self, x) -> np.ndarray:
        return self.matrix @ as_vector(x, self.dim) + self.shift

    @property
    def dim(self):
        return self.matrix.shape[0]

    def apply_many(self, pts) -> np.ndarray:
        return np.asarray(pts, dtype=float) @ self.matrix.T + self.shift

    def lipschitz(self) -> float:
        return float(np.linalg.svd(self.matrix, compute_uv=False)[0])

    def modulus(self) -> float:
        """Strong-monotonicity modulus: min eigenvalue of the symmetric part."""
        sym = 0.5 * (self.matrix + self.matrix.T)
        return max(float(np.linalg.eigvalsh(sym)[0]), 0.0)


@dataclass(frozen=True, eq=False)
class LinearMap(MonotoneMap):
    matrix: np.ndarray

    def __post_init__(self):
        M = _matrix(self.matrix, "monotone map matrix")
        object.__setattr__(self, "matrix", M)
        _spd_floor(M, "monotone map symmetric part")
        shift = np.zeros(M.shape[0])
        shift.flags.writeable = False
        object.__setattr__(self, "shift", shift)


@dataclass(frozen=True, eq=False)
class AffineMap(MonotoneMap):
    matrix: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        M = _matrix(self.matrix, "monotone map matrix")
        object.__setattr__(self, "matrix", M)
        _spd_floor(M, "monotone map symmetric part")
        b = as_vector(self.shift, M.shape[0])
        b.flags.writeable = False
        object.__setattr__(self, "shift", b)


class GradientOfQuadratic(AffineMap):
    """x -> Q x + q, the gradient field of a convex quadratic."""


def identity_map(dim: int) -> LinearMap:
    return LinearMap(np.eye(dim))


class NonexpansiveMap:
    dim: int

    def __call__(self, x) -> np.ndarray:
        raise NotImplementedError

    def apply_many(self, pts) -> np.ndarray:
        return np.stack([self(row) for row in np.asarray(pts, dtype=float)])


@dataclass(frozen=True, eq=False)
class IdentityMap(NonexpansiveMap):
    dim: int

    def __call__(self, x):
        return as_vector(x, self.dim).copy()

    def apply_many(self, pts):
        return np.asarray(pts, dtype=float).copy()


@dataclass(frozen=True, eq=False)
class ProjectionMap(NonexpansiveMap):
    target: ConvexSet

    @property
    def dim(self):
        return self.target.dim

    def __call__(self, x):
        return self.target.project(x)

    def apply_many(self, pts):
        return self.target.project_many(pts)


@dataclass(frozen=True, eq=False)
class AffineContraction(NonexpansiveMap):
    """x -> M x + shift with spectral norm ||M|| <= 1."""

    matrix: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        M = _matrix(self.matrix, "affine map matrix")
        object.__setattr__(self, "matrix", M)
        b = as_vector(self.shift, M.shape[0])
        b.flags.writeable = False
        object.__setattr__(self, "shift", b)
        norm = float(np.linalg.svd(M, compute_uv=False)[0])
        if norm > 1.0 + 1e-9:
            raise ValueError(f"affine map must be nonexpansive, got norm {norm:.6g}")
        object.__setattr__(self, "norm", min(norm, 1.0))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def __call__(self, x):
        return self.matrix @ as_vector(x, self.dim) + self.shift

    def apply_many(self, pts):
        return np.asarray(pts, dtype=float) @ self.matrix.T + self.shift


@dataclass(frozen=True, eq=False)
class RotationMap(NonexpansiveMap):
    """Block rotation acting on consecutive coordinate 2-planes."""

    dim: int
    angles: tuple

    def __post_init__(self):
        angles = tuple(float(a) for a in np.atleast_1d(np.asarray(self.angles, dtype=float)))
        if len(angles) > self.dim // 2:
            raise DimensionMismatch("more rotation angles than coordinate 2-planes")
        object.__setattr__(self, "angles", angles)
        R = np.eye(self.dim)
        for i, a in enumerate(angles):
            c, s = math.cos(a), math.sin(a)
            j = 2 * i
            R[j : j + 2, j : j + 2] = [[c, -s], [s, c]]
        R.flags.writeable = False
        object.__setattr__(self, "matrix", R)

    def __call__(self, x):
        return self.matrix @ as_vector(x, self.dim)

    def apply_many(self, pts):
        return np.asarray(pts, dtype=float) @ self.matrix.T


def fixed_point_set(t: NonexpansiveMap) -> ConvexSet:
    """Analytic descriptor of Fix(t) for the shipped nonexpansive kinds."""
    if isinstance(t, IdentityMap):
        return geometry.WholeSpace(t.dim)
    if isinstance(t, ProjectionMap):
        return t.target
    if isinstance(t, AffineContraction):
        if t.norm < 1.0 - 1e-12:
            sol = np.linalg.solve(np.eye(t.dim) - t.matrix, t.shift)
            return geometry.Singleton(sol)
        try:
            return geometry.AffineSet(np.eye(t.dim) - t.matrix, t.shift)
        except ValueError as exc:
            raise NoAnalyticForm("affine nonexpansive map has no fixed point") from exc
    if isinstance(t, RotationMap):
        return geometry.AffineSet(np.eye(t.dim) - t.matrix, np.zeros(t.dim))
    raise NoAnalyticForm(f"no fixed-point descriptor for {type(t).__name__}")


# ---------------------------------------------------------------------------
# Contraction selector
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Contraction:
    """Selection map g with ||g(x) - g(y)|| <= delta ||x - y||, 0 <= delta < 1."""

    kind: str
    delta: float
    matrix: np.ndarray | None = None
    shift: np.ndarray | None = None
    point: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "delta", float(self.delta))
        if not 0.0 <= self.delta < 1.0:
            raise ValueError("contraction constant must lie in [0, 1)")

    @classmethod
    def affine(cls, matrix, shift, delta: float | None = None) -> "Contraction":
        M = _matrix(matrix, "contraction matrix")
        b = as_vector(shift, M.shape[0])
        b.flags.writeable = False
        norm = float(np.linalg.svd(M, compute_uv=False)[0])
        if delta is None:
            delta = norm
        elif norm > delta + 1e-9:
            raise ValueError(f"declared delta {delta} below the map norm {norm:.6g}")
        return cls(kind="affine", delta=delta, matrix=M, shift=b)

    @classmethod
    def constant(cls, point) -> "Contraction":
        q = as_vector(point)
        q.flags.writeable = False
        return cls(kind="constant", delta=0.0, point=q)

    @property
    def dim(self):
        return self.point.shape[0] if self.kind == "constant" else self.matrix.shape[0]

    def __call__(self, x):
        x = as_vector(x, self.dim)
        if self.kind == "constant":
            return self.point.copy()
        return self.matrix @ x + self.shift


# ---------------------------------------------------------------------------
# Bifunctions
# ---------------------------------------------------------------------------


class Bifunction:
    """Equilibrium bifunction over a closed convex domain."""

    domain: ConvexSet

    @property
    def dim(self):
        return self.domain.dim

    def raw(self, x, y) -> float:
        """Evaluate without domain checks (internal use)."""
        raise NotImplementedError

    def evaluate(self, x, y) -> float:
        x = as_vector(x, self.dim)
        y = as_vector(y, self.dim)
        for pt in (x, y):
            if not self.domain.contains(pt, tol=_DOMAIN_TOL):
                raise PointOutsideDomain(f"argument {pt} is outside the domain")
        return self.raw(x, y)

    def monotonicity_lower_bound(self) -> float:
        """Known modulus rho with F(x,y) + F(y,x) <= -(rho/2) ||x-y||^2."""
        return 0.0

    def raw_many_first(self, pts, x) -> np.ndarray:
        """Vector of F(y_i, x) over the rows y_i of pts (no domain checks)."""
        x = np.asarray(x, dtype=float)
        return np.array([self.raw(row, x) for row in np.asarray(pts, dtype=float)])

    def raw_many_second(self, x, pts) -> np.ndarray:
        """Vector of F(x, y_i) over the rows y_i of pts (no domain checks)."""
        x = np.asarray(x, dtype=float)
        return np.array([self.raw(x, row) for row in np.asarray(pts, dtype=float)])


@dataclass(frozen=True, eq=False)
class DifferenceOfFunction(Bifunction):
    """F(x, y) = psi(y) - psi(x)."""

    psi: ConvexFunctional
    domain: ConvexSet

    def raw(self, x, y):
        return self.psi.value(y) - self.psi.value(x)

    def raw_many_first(self, pts, x):
        return self.psi.value(x) - self.psi.value_many(pts)

    def raw_many_second(self, x, pts):
        return self.psi.value_many(pts) - self.psi.value(x)


@dataclass(frozen=True, eq=False)
class DirectionalDerivative(Bifunction):
    """F(x, y) = psi'(x; y - x), the exact directional derivative."""

    psi: ConvexFunctional
    domain: ConvexSet

    def raw(self, x, y):
        return self.psi.directional(x, np.asarray(y, dtype=float) - np.asarray(x, dtype=float))

    def raw_many_first(self, pts, x):
        if isinstance(self.psi, Norm1):
            return super().raw_many_first(pts, x)
        pts = np.asarray(pts, dtype=float)
        grads = self.psi.subgradient_many(pts)
        return np.einsum("ij,ij->i", grads, np.asarray(x, dtype=float) - pts)

    def raw_many_second(self, x, pts):
        if isinstance(self.psi, Norm1):
            return super().raw_many_second(x, pts)
        g = self.psi.subgradient(x)
        return (np.asarray(pts, dtype=float) - np.asarray(x, dtype=float)) @ g

    def monotonicity_lower_bound(self):
        return 2.0 * self.psi.strong_convexity()


@dataclass(frozen=True, eq=False)
class OperatorVI(Bifunction):
    """F(x, y) = <A(x), y - x> for a single-valued monotone A."""

    operator: MonotoneMap
    domain: ConvexSet

    def raw(self, x, y):
        x = np.asarray(x, dtype=float)
        return float(self.operator(x) @ (np.asarray(y, dtype=float) - x))

    def raw_many_first(self, pts, x):
        pts = np.asarray(pts, dtype=float)
        vals = self.operator.apply_many(pts)
        return np.einsum("ij,ij->i", vals, np.asarray(x, dtype=float) - pts)

    def raw_many_second(self, x, pts):
        x = np.asarray(x, dtype=float)
        return (np.asarray(pts, dtype=float) - x) @ self.operator(x)

    def monotonicity_lower_bound(self):
        return 2.0 * self.operator.modulus()


@dataclass(frozen=True, eq=False)
class FixedPointGap(Bifunction):
    """F(u, v) = <u - T(u), v - u> for a nonexpansive T."""

    map: NonexpansiveMap
    domain: ConvexSet

    def raw(self, x, y):
        x = np.asarray(x, dtype=float)
        return float((x - self.map(x)) @ (np.asarray(y, dtype=float) - x))

    def raw_many_first(self, pts, x):
        pts = np.asarray(pts, dtype=float)
        resid = pts - self.map.apply_many(pts)
        return np.einsum("ij,ij->i", resid, np.asarray(x, dtype=float) - pts)

    def raw_many_second(self, x, pts):
        x = np.asarray(x, dtype=float)
        return (np.asarray(pts, dtype=float) - x) @ (x - self.map(x))


@dataclass(frozen=True, eq=False)
class ZeroBifunction(Bifunction):
    domain: ConvexSet

    def raw(self, x, y):
        return 0.0

    def raw_many_first(self, pts, x):
        return np.zeros(np.asarray(pts).shape[0])

    def raw_many_second(self, x, pts):
        return np.zeros(np.asarray(pts).shape[0])


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def evaluate(f: Bifunction, x, y) -> float:
    return f.evaluate(x, y)


def sample_domain(f: Bifunction, rng: np.random.Generator, count: int) -> np.ndarray:
    """Uniform draws from a box enclosing the domain, projected back onto it
    so evaluation stays within the bifunction's contract."""
    lo, hi = f.domain.enclosing_box()
    pts = rng.uniform(lo, hi, size=(count, f.dim))
    return f.domain.project_many(pts)


def monotonicity_modulus(f: Bifunction, samples: int = 500, seed: int = 0) -> float:
    """Sampled monotonicity modulus.

    Returns the infimum over sampled pairs of -2 (F(x,y) + F(y,x)) / ||x-y||^2.
    A nonnegative value certifies monotonicity on the sample; a declared
    modulus exceeding the estimate by more than 1e-6 triggers a warning.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    rng = np.random.default_rng(seed)
    xs = sample_domain(f, rng, samples)
    ys = sample_domain(f, rng, samples)
    ratios = []
    for x, y in zip(xs, ys):
        gap = float(np.linalg.norm(x - y)) ** 2
        if gap <= 1e-24:
            continue
        ratios.append(-2.0 * (f.raw(x, y) + f.raw(y, x)) / gap)
    if not ratios:
        raise DegenerateSample("all sampled pairs coincide")
    estimate = min(ratios)
    declared = f.monotonicity_lower_bound()
    if declared > estimate + 1e-6:
        warnings.warn(
            f"declared modulus {declared:.6g} exceeds sampled estimate {estimate:.6g}",
            stacklevel=2,
        )
    return estimate


def _dual_residual_spot_check(f: Bifunction, x, count: int = 64, seed: int = 7) -> float:
    rng = np.random.default_rng(seed)
    pts = sample_domain(f, rng, count)
    return float(np.max(f.raw_many_first(pts, x)))


def fitzpatrick_gap(f: Bifunction, x, p, scale: float) -> float:
    """Gap between the Fitzpatrick transform of f at (x, 2p/scale) and the
    support of the lower solution set at the same argument.

    Closed forms exist for the half-squared-distance family (0.5 ||2p/scale||^2,
    exact whenever the domain contains the unconstrained maximizer, an upper
    bound otherwise) and for the fixed-point-gap family (support gap between
    the domain and the fixed-point set). The value is +inf outside the barrier
    cone of the domain and 0 at p = 0 for every kind.
    """
    if scale <= 0:
        raise ScaleNonpositive(f"scale must be positive, got {scale}")
    x = as_vector(x, f.dim)
    p = as_vector(p, f.dim)
    if float(np.linalg.norm(p)) == 0.0:
        return 0.0
    residual = _dual_residual_spot_check(f, x)
    if residual > 1e-6:
        raise PointOutsideDomain(
            f"x fails the lower-solution spot check (sampled residual {residual:.3g})"
        )
    q = (2.0 / scale) * p
    if isinstance(f, (DifferenceOfFunction, DirectionalDerivative)) and isinstance(
        f.psi, HalfSquaredDistance
    ):
        return 0.5 * float(q @ q)
    if isinstance(f, FixedPointGap):
        fix = fixed_point_set(f.map)
        return f.domain.support(q) - fix.support(q)
    raise NoClosedForm(f"no closed-form gap for {type(f).__name__}")
