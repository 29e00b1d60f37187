"""Independent desk-scale ground-truth solvers for benchmark problems.

This module deliberately shares no code with the resolvent or iteration
machinery (only geometry and plain bifunction evaluation), so agreement
between an oracle solution and a solver run is evidence rather than a
tautology. Brute force is acceptable here: long projected descents, Picard
iterations, and grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bifunctions import (
    Bifunction,
    DifferenceOfFunction,
    DirectionalDerivative,
    FixedPointGap,
    HalfSquaredDistance,
    OperatorVI,
    Quadratic,
    ZeroBifunction,
    fixed_point_set,
)
from .errors import (
    NoAnalyticForm,
    OracleNotConverged,
    SolutionNotProvided,
    SolutionSetNotProjectable,
)
from .geometry import ConvexSet, Singleton, WholeSpace

_DESCENT_ITERS = 1_000_000
_DESCENT_STEP_EXIT = 1e-14
_CERTIFY_SAMPLES = 500
_CERTIFY_SEED = 13
_GRID_POINT_CAP = 100_000_000


@dataclass(frozen=True)
class OracleResult:
    solution: np.ndarray
    method: str
    certified_residual: float


def _dual_residual_over(f: Bifunction, base: ConvexSet, x, count=_CERTIFY_SAMPLES) -> float:
    rng = np.random.default_rng(_CERTIFY_SEED)
    pts = base.sample(rng, count)
    return float(np.max(f.raw_many_first(pts, np.asarray(x, dtype=float))))


def _certify(f: Bifunction, base: ConvexSet, x, method: str) -> OracleResult:
    resid = _dual_residual_over(f, base, x)
    if resid > 1e-6:
        raise OracleNotConverged(
            f"oracle solution fails the dual residual check ({resid:.3g} > 1e-6)"
        )
    return OracleResult(solution=np.asarray(x, dtype=float), method=method, certified_residual=resid)


def _subset_check(inner: ConvexSet, outer: ConvexSet, what: str):
    rng = np.random.default_rng(_CERTIFY_SEED + 1)
    for pt in inner.sample(rng, 32):
        if not outer.contains(pt, tol=1e-7):
            raise NoAnalyticForm(f"{what}: the candidate solution set leaves the domain")


def solve_lower(problem) -> ConvexSet:
    """Analytic solution set of the lower equilibrium problem."""
    f = problem.lower
    domain = problem.domain
    if isinstance(f, ZeroBifunction):
        return domain
    if isinstance(f, (DifferenceOfFunction, DirectionalDerivative)):
        psi = f.psi
        if isinstance(psi, HalfSquaredDistance):
            _subset_check(psi.target, domain, "half-squared-distance lower level")
            return psi.target
        if isinstance(psi, Quadratic) and psi.strong_convexity() > 0 and isinstance(
            domain, WholeSpace
        ):
            sol = np.linalg.solve(psi.matrix, -psi.linear)
            return Singleton(sol)
        raise NoAnalyticForm(f"no analytic lower solution set for {type(psi).__name__}")
    if isinstance(f, FixedPointGap):
        fix = fixed_point_set(f.map)
        if not isinstance(domain, WholeSpace):
            _subset_check(fix, domain, "fixed-point lower level")
        return fix
    raise NoAnalyticForm(f"no analytic lower solution set for {type(f).__name__}")


def _projected_descent(base: ConvexSet, grad, step: float, x0) -> np.ndarray:
    x = base.project(np.asarray(x0, dtype=float))
    for _ in range(_DESCENT_ITERS):
        x_new = base.project(x - step * grad(x))
        if float(np.linalg.norm(x_new - x)) < _DESCENT_STEP_EXIT:
            return x_new
        x = x_new
    return x


def _grid_points(base: ConvexSet, resolution: float) -> np.ndarray:
    bounds = base.bounds()
    if bounds is None:
        raise NoAnalyticForm("grid search needs a bounded solution set")
    lo, hi = bounds
    axes = [np.arange(l, h + resolution, resolution) for l, h in zip(lo, hi)]
    total = 1
    for ax in axes:
        total *= ax.size
    if total > _GRID_POINT_CAP:
        raise NoAnalyticForm(f"grid of {total} points exceeds the search cap")
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    return base.project_many(pts)


def grid_search(problem, base: ConvexSet, resolution: float = 1e-3) -> np.ndarray:
    """Brute-force minimizer over a projected grid covering the set.

    Functional upper levels minimize the functional value; operator upper
    levels minimize the natural-map residual ||x - proj(x - A x)||.
    """
    if problem.dim > 3:
        raise NoAnalyticForm("grid search is limited to dimension <= 3")
    g = problem.upper
    pts = _grid_points(base, resolution)
    if isinstance(g, (DifferenceOfFunction, DirectionalDerivative)):
        vals = g.psi.value_many(pts)
    elif isinstance(g, OperatorVI):
        moved = base.project_many(pts - g.operator.apply_many(pts))
        vals = np.linalg.norm(pts - moved, axis=1)
    else:
        raise NoAnalyticForm(f"no grid objective for {type(g).__name__}")
    return pts[int(np.argmin(vals))]


def solve_hep(problem) -> OracleResult:
    """Ground-truth solution of the hierarchy (upper problem over the lower
    solution set), by analytic projection where possible and long projected
    descent otherwise."""
    base = problem.lower_solution_set
    if base is None:
        base = solve_lower(problem)
    g = problem.upper
    if isinstance(base, Singleton):
        return _certify(g, base, base.point, "analytic_projection")
    if isinstance(g, (DifferenceOfFunction, DirectionalDerivative)):
        psi = g.psi
        if isinstance(psi, Quadratic):
            iso = psi.isotropic_curvature()
            if iso is not None and iso > 0:
                # psi = (iso/2) ||x + q/iso||^2 + const: projection solves it.
                sol = base.project(-psi.linear / iso)
                return _certify(g, base, sol, "analytic_projection")
            if psi.strong_convexity() > 0:
                step = 1.0 / psi.grad_lipschitz()
                sol = _projected_descent(base, psi.subgradient, step, np.zeros(problem.dim))
                return _certify(g, base, sol, "long_projected_gradient")
        if isinstance(psi, HalfSquaredDistance):
            sol = _projected_descent(base, psi.subgradient, 1.0, np.zeros(problem.dim))
            return _certify(g, base, sol, "long_projected_gradient")
        if problem.dim <= 3:
            return _certify(g, base, grid_search(problem, base), "grid_search")
        raise NoAnalyticForm(f"no oracle for upper functional {type(psi).__name__}")
    if isinstance(g, OperatorVI):
        op = g.operator
        mod, lip = op.modulus(), op.lipschitz()
        if mod > 0:
            step = mod / lip**2
            sol = _projected_descent(base, op, step, np.zeros(problem.dim))
            return _certify(g, base, sol, "long_projected_gradient")
        if problem.dim <= 3:
            return _certify(g, base, grid_search(problem, base), "grid_search")
        raise NoAnalyticForm("operator upper level needs strong monotonicity or a small grid")
    if isinstance(g, ZeroBifunction):
        raise NoAnalyticForm(
            "upper level is zero: every lower solution solves the hierarchy; "
            "use the selector oracle for the distinguished point"
        )
    raise NoAnalyticForm(f"no oracle for upper kind {type(g).__name__}")


def solve_selected(problem, tol: float = 1e-12) -> OracleResult:
    """Distinguished solution selected by the contraction: the unique fixed
    point of (project onto the solution set) composed with the selector,
    computed by Picard iteration (geometric convergence with rate delta)."""
    s_set = problem.solution_set
    if s_set is None:
        raise SolutionSetNotProjectable(
            "the hierarchy solution set must be supplied as a projectable descriptor"
        )
    g = problem.selector
    if g is None:
        raise SolutionNotProvided("selected-solution oracle requires a selector")
    x = s_set.project(np.zeros(problem.dim))
    for _ in range(100_000):
        x_new = s_set.project(g(x))
        if float(np.linalg.norm(x_new - x)) <= tol:
            base = problem.lower_solution_set if problem.lower_solution_set is not None else s_set
            return _certify(problem.upper, base, x_new, "picard_on_selector")
        x = x_new
    raise OracleNotConverged("Picard iteration on the selector did not converge")
