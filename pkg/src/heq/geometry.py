"""Closed convex sets with exact projections, normal cones and support functions.

Every set kind carries an exact (closed-form) metric projection except
``Intersection``, which runs Dykstra's alternating-projection scheme; that
variant is the one that converges to the metric projection itself, which the
variational characterization ``<x - y, z - y> <= 0`` requires.

All values are immutable after construction and all operations are pure.
Public operations validate their arguments; the underscored ``_project``
kernels assume validated float arrays and are the hot path for the solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    IntersectionNotConverged,
    PointNotInSet,
    UnsupportedKind,
)

# Projection exactness: closed forms are exact to rounding, the iterative
# intersection scheme gets extra slack.
TAU_CLOSED_FORM = 1e-10
TAU_INTERSECTION = 1e-8
DYKSTRA_MAX_SWEEPS = 10_000

# Sample count for the Monte-Carlo normal-cone decision on intersections.
_NORMAL_CONE_SAMPLES = 200


def as_vector(x, dim: int | None = None) -> np.ndarray:
    """Validate and copy ``x`` into a finite 1-d float array."""
    v = np.array(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got array of shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector entries must be finite")
    return v


def _frozen_array(obj, name, value):
    arr = np.array(value, dtype=float)
    arr.flags.writeable = False
    object.__setattr__(obj, name, arr)
    return arr


def _sqnorm(v) -> float:
    return float(v @ v)


@dataclass(frozen=True)
class NormalConeDecision:
    """Outcome of a normal-cone membership test.

    ``approximate`` is True when the decision was made by sampling rather
    than analytically (only the Intersection kind does this).
    """

    contains: bool
    approximate: bool = False
    gap: float = 0.0

    def __bool__(self):
        return self.contains


class ConvexSet:
    """Base class: a nonempty closed convex subset of R^n."""

    dim: int
    tol: float = TAU_CLOSED_FORM

    # -- kernels (validated float arrays in, fresh arrays out) ---------------

    def _project(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- geometry primitives ------------------------------------------------

    def project(self, x) -> np.ndarray:
        return self._project(self._check(x))

    def support(self, p) -> float:
        """sup over the set of <p, .>; may be +inf outside the barrier cone."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw ``count`` points of the set, shape (count, dim)."""
        raise NotImplementedError

    def project_many(self, pts: np.ndarray) -> np.ndarray:
        """Row-wise projection of an (m, dim) array; kinds override when the
        projection vectorizes."""
        pts = np.asarray(pts, dtype=float)
        return np.stack([self._project(np.array(row)) for row in pts])

    # -- derived operations ---------------------------------------------------

    def _check(self, x) -> np.ndarray:
        return as_vector(x, self.dim)

    def _distance(self, x: np.ndarray) -> float:
        diff = x - self._project(x)
        return math.sqrt(_sqnorm(diff))

    def distance(self, x) -> float:
        return self._distance(self._check(x))

    def contains(self, x, tol: float | None = None) -> bool:
        x = self._check(x)
        tol = self.tol if tol is None else tol
        return self._distance(x) <= tol * (1.0 + math.sqrt(_sqnorm(x)))

    def normal_cone_decision(self, x, d, tol: float) -> NormalConeDecision:
        """Decide sup_{z in S} <d, z - x> <= tol, using the exact support value."""
        x = self._check(x)
        d = as_vector(d, self.dim)
        if not self.contains(x, tol=max(self.tol, 1e-9)):
            raise PointNotInSet(f"point {x} is not in the set (within tolerance)")
        gap = self.support(d) - float(d @ x)
        return NormalConeDecision(contains=bool(gap <= tol), gap=gap)

    def enclosing_box(self, halfwidth: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
        """A box guaranteed to contain the set, clipped to +-halfwidth around a
        reference point for unbounded kinds (used only for sampling)."""
        exact = self.bounds()
        if exact is not None:
            return exact
        ref = self.project(np.zeros(self.dim))
        return ref - halfwidth, ref + halfwidth

    def bounds(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Exact componentwise bounds when the set is bounded, else None."""
        return None


@dataclass(frozen=True, eq=False)
class WholeSpace(ConvexSet):
    dim: int

    def _project(self, x):
        return x.copy()

    def project_many(self, pts):
        return np.asarray(pts, dtype=float).copy()

    def support(self, p):
        p = as_vector(p, self.dim)
        return 0.0 if _sqnorm(p) == 0.0 else math.inf

    def sample(self, rng, count):
        return rng.normal(scale=1.5, size=(count, self.dim))


@dataclass(frozen=True, eq=False)
class Box(ConvexSet):
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _frozen_array(self, "lower", as_vector(self.lower))
        hi = _frozen_array(self, "upper", as_vector(self.upper, lo.shape[0]))
        if np.any(lo > hi):
            raise ValueError("box requires lower <= upper componentwise")
        object.__setattr__(self, "dim", lo.shape[0])

    def _project(self, x):
        return np.clip(x, self.lower, self.upper)

    def project_many(self, pts):
        return np.clip(np.asarray(pts, dtype=float), self.lower, self.upper)

    def bounds(self):
        return self.lower.copy(), self.upper.copy()

    def support(self, p):
        p = as_vector(p, self.dim)
        return float(np.sum(np.maximum(p * self.lower, p * self.upper)))

    def sample(self, rng, count):
        return rng.uniform(self.lower, self.upper, size=(count, self.dim))


@dataclass(frozen=True, eq=False)
class Singleton(ConvexSet):
    point: np.ndarray

    def __post_init__(self):
        q = _frozen_array(self, "point", as_vector(self.point))
        object.__setattr__(self, "dim", q.shape[0])

    def _project(self, x):
        return self.point.copy()

    def project_many(self, pts):
        return np.tile(self.point, (np.asarray(pts).shape[0], 1))

    def bounds(self):
        return self.point.copy(), self.point.copy()

    def support(self, p):
        return float(as_vector(p, self.dim) @ self.point)

    def sample(self, rng, count):
        return np.tile(self.point, (count, 1))


@dataclass(frozen=True, eq=False)
class Ball(ConvexSet):
    center: np.ndarray
    radius: float

    def __new__(cls, center, radius):
        # A zero-radius ball is a singleton; normalize at construction.
        if float(radius) == 0.0:
            return Singleton(center)
        return super().__new__(cls)

    def __post_init__(self):
        c = _frozen_array(self, "center", as_vector(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        if self.radius < 0:
            raise ValueError("ball requires radius >= 0")
        object.__setattr__(self, "dim", c.shape[0])

    def _project(self, x):
        diff = x - self.center
        nrm = math.sqrt(_sqnorm(diff))
        if nrm <= self.radius:
            return x.copy()
        return self.center + diff * (self.radius / nrm)

    def project_many(self, pts):
        pts = np.asarray(pts, dtype=float)
        diff = pts - self.center
        nrm = np.linalg.norm(diff, axis=1, keepdims=True)
        scale = np.where(nrm > self.radius, self.radius / np.where(nrm == 0, 1.0, nrm), 1.0)
        return self.center + diff * scale

    def bounds(self):
        return self.center - self.radius, self.center + self.radius

    def support(self, p):
        p = as_vector(p, self.dim)
        return float(p @ self.center) + self.radius * math.sqrt(_sqnorm(p))

    def sample(self, rng, count):
        direc = rng.normal(size=(count, self.dim))
        norms = np.linalg.norm(direc, axis=1, keepdims=True)
        norms[norms == 0] = 1.0
        radii = self.radius * rng.uniform(size=(count, 1)) ** (1.0 / self.dim)
        return self.center + direc / norms * radii


@dataclass(frozen=True, eq=False)
class Halfspace(ConvexSet):
    """The set {x : <normal, x> <= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        a = _frozen_array(self, "normal", as_vector(self.normal))
        if _sqnorm(a) == 0.0:
            raise ValueError("halfspace requires a nonzero normal")
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "dim", a.shape[0])
        object.__setattr__(self, "_normal_sq", _sqnorm(a))

    def _project(self, x):
        excess = float(self.normal @ x) - self.offset
        if excess <= 0:
            return x.copy()
        return x - (excess / self._normal_sq) * self.normal

    def project_many(self, pts):
        pts = np.asarray(pts, dtype=float).copy()
        excess = pts @ self.normal - self.offset
        mask = excess > 0
        pts[mask] -= np.outer(excess[mask] / self._normal_sq, self.normal)
        return pts

    def support(self, p):
        # Finite only on the ray spanned by the outward normal.
        p = as_vector(p, self.dim)
        pn = math.sqrt(_sqnorm(p))
        if pn == 0.0:
            return 0.0
        t = float(p @ self.normal) / self._normal_sq
        if t < 0 or math.sqrt(_sqnorm(p - t * self.normal)) > 1e-10 * pn:
            return math.inf
        return t * self.offset

    def sample(self, rng, count):
        pts = rng.normal(scale=1.5, size=(count, self.dim))
        excess = pts @ self.normal - self.offset
        mask = excess > 0
        pts[mask] -= np.outer(excess[mask] / self._normal_sq, self.normal)
        return pts


@dataclass(frozen=True, eq=False)
class AffineSet(ConvexSet):
    """Solution set of the consistent linear system A x = b."""

    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        if A.ndim != 2:
            raise DimensionMismatch("affine set requires a 2-d matrix")
        A.flags.writeable = False
        object.__setattr__(self, "matrix", A)
        b = _frozen_array(self, "rhs", as_vector(self.rhs, A.shape[0]))
        object.__setattr__(self, "dim", A.shape[1])

        u, s, vt = np.linalg.svd(A, full_matrices=True)
        cutoff = max(A.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
        rank = int(np.sum(s > cutoff))
        # Minimum-norm particular solution and row-space basis.
        x0 = vt[:rank].T @ ((u[:, :rank].T @ b) / s[:rank]) if rank else np.zeros(self.dim)
        if float(np.linalg.norm(A @ x0 - b)) > 1e-9 * (1.0 + float(np.linalg.norm(b))):
            raise ValueError("affine set requires a consistent system A x = b")
        row = vt[:rank].T.copy()
        null = vt[rank:].T.copy()
        for name, val in (("_x0", x0), ("_row_basis", row), ("_null_basis", null)):
            val.flags.writeable = False
            object.__setattr__(self, name, val)

    def _project(self, x):
        diff = x - self._x0
        return x - self._row_basis @ (self._row_basis.T @ diff)

    def project_many(self, pts):
        pts = np.asarray(pts, dtype=float)
        diff = pts - self._x0
        return pts - (diff @ self._row_basis) @ self._row_basis.T

    def support(self, p):
        p = as_vector(p, self.dim)
        pn = math.sqrt(_sqnorm(p))
        if pn == 0.0:
            return 0.0
        # Finite exactly on the row space of A.
        tangential = self._null_basis.T @ p if self._null_basis.size else np.zeros(0)
        if tangential.size and float(np.linalg.norm(tangential)) > 1e-10 * pn:
            return math.inf
        return float(p @ self._x0)

    def sample(self, rng, count):
        k = self._null_basis.shape[1]
        if k == 0:
            return np.tile(self._x0, (count, 1))
        coeff = rng.normal(scale=1.5, size=(count, k))
        return self._x0 + coeff @ self._null_basis.T


@dataclass(frozen=True, eq=False)
class Simplex(ConvexSet):
    """The scaled standard simplex {x >= 0, sum(x) = scale}."""

    dim: int
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "scale", float(self.scale))
        if self.scale <= 0:
            raise ValueError("simplex requires scale > 0")

    def _project(self, x):
        # Sort-based projection onto the scaled simplex.
        u = np.sort(x)[::-1]
        css = np.cumsum(u) - self.scale
        ks = np.arange(1, self.dim + 1)
        cond = u - css / ks > 0
        rho = int(np.nonzero(cond)[0][-1])
        theta = css[rho] / (rho + 1.0)
        return np.maximum(x - theta, 0.0)

    def support(self, p):
        return self.scale * float(np.max(as_vector(p, self.dim)))

    def bounds(self):
        return np.zeros(self.dim), np.full(self.dim, self.scale)

    def sample(self, rng, count):
        return self.scale * rng.dirichlet(np.ones(self.dim), size=count)


@dataclass(frozen=True, eq=False)
class Intersection(ConvexSet):
    """Intersection of finitely many sets; requires a verified common point.

    Projection runs Dykstra's scheme to TAU_INTERSECTION; nonemptiness is
    certified by the feasible point supplied at construction (we refuse to
    guess whether an intersection is nonempty).
    """

    members: tuple
    feasible_point: np.ndarray

    tol = TAU_INTERSECTION

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("intersection requires at least one member")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise DimensionMismatch("intersection members must share a dimension")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "dim", members[0].dim)
        q = _frozen_array(self, "feasible_point", as_vector(self.feasible_point, self.dim))
        for m in members:
            if not m.contains(q, tol=1e-7):
                raise ValueError("feasible point is not in every member")

    def _project(self, x):
        z = x.copy()
        increments = [np.zeros(self.dim) for _ in self.members]
        scale = 1.0 + math.sqrt(_sqnorm(x))
        for _ in range(DYKSTRA_MAX_SWEEPS):
            z_start = z
            for i, member in enumerate(self.members):
                w = z + increments[i]
                z = member._project(w)
                increments[i] = w - z
            sweep_move = math.sqrt(_sqnorm(z - z_start))
            residual = max(member._distance(z) for member in self.members)
            if sweep_move <= 0.1 * TAU_INTERSECTION * scale and residual <= TAU_INTERSECTION * scale:
                return z
        raise IntersectionNotConverged(
            f"Dykstra projection did not reach {TAU_INTERSECTION} in {DYKSTRA_MAX_SWEEPS} sweeps"
        )

    def support(self, p):
        # Upper bound: min over members. Exact at p = 0 and whenever the
        # minimizing member attains its supremum inside the intersection.
        return min(m.support(p) for m in self.members)

    def bounds(self):
        los, his = [], []
        for m in self.members:
            b = m.bounds()
            if b is not None:
                los.append(b[0])
                his.append(b[1])
        if not los:
            return None
        return np.max(np.stack(los), axis=0), np.min(np.stack(his), axis=0)

    def sample(self, rng, count):
        base = self.members[0].sample(rng, count)
        out = np.empty_like(base)
        for i in range(count):
            out[i] = self._project(np.array(base[i]))
        return out

    def normal_cone_decision(self, x, d, tol):
        # No exact support; decide by sampling and flag as approximate.
        x = self._check(x)
        d = as_vector(d, self.dim)
        if not self.contains(x, tol=max(self.tol, 1e-7)):
            raise PointNotInSet("point is not in the intersection (within tolerance)")
        rng = np.random.default_rng(2024)
        pts = self.sample(rng, _NORMAL_CONE_SAMPLES)
        gap = float(np.max(pts @ d - x @ d))
        return NormalConeDecision(contains=bool(gap <= tol), approximate=True, gap=gap)


# -- module-level operation wrappers ----------------------------------------


def project(s: ConvexSet, x) -> np.ndarray:
    """Metric projection of x onto s."""
    return s.project(x)


def support_function(s: ConvexSet, p) -> float:
    """Support value sup_{z in s} <p, z> (may be +inf)."""
    return s.support(p)


def normal_cone_contains(s: ConvexSet, x, d, tol: float = 1e-9) -> bool:
    """True iff <d, z - x> <= tol for every z in s (x must lie in s)."""
    return s.normal_cone_decision(x, d, tol).contains


def normal_cone_decision(s: ConvexSet, x, d, tol: float = 1e-9) -> NormalConeDecision:
    return s.normal_cone_decision(x, d, tol)
