"""The relaxed inertial proximal splitting iteration and its diagnostics.

One step consists of an inertial averaging toward the previous iterate, an
upper-level resolvent, a penalized lower-level resolvent, and a convex
combination with the current iterate and a contraction selector:

    y_k = (1 - gamma_k) x_k + gamma_k x_{k-1}
    u_k = J^G_{r_k}(y_k)
    z_k = J^F_{r_k lam_k}(u_k)
    x_{k+1} = alpha_k x_k + beta_k z_k + (1 - alpha_k - beta_k) g(x_k)

The composite lower resolvent is the resolvent of F at the product parameter
r_k * lam_k, which is exact for every shipped kind. Runs are strictly
sequential; distinct runs share no mutable state.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import resolvents
from .bifunctions import Bifunction, Contraction, ZeroBifunction, sample_domain
from .errors import (
    HeqError,
    NoIterations,
    PointOutsideDomain,
    ScheduleOutOfRange,
    SolutionNotProvided,
)
from .geometry import ConvexSet, as_vector
from .resolvents import DEFAULT_CONFIG, ResolventConfig, resolve
from .schedules import ScheduleSet

CSV_HEADER = "k,step_norm,splitting_gap,minty_residual,dist_to_solution,certificate"


def mixed_square_expansion(a: float, b: float, c: float, x, y, z) -> float:
    """Six-term expansion of ||a x + b y + c z||^2 for weights summing to 1.

    This identity is the arithmetic backbone of the per-iteration certificate;
    it is exported so the expansion itself can be unit-tested.
    """
    x, y, z = (np.asarray(v, dtype=float) for v in (x, y, z))
    sq = lambda v: float(v @ v)
    return (
        a * sq(x)
        + b * sq(y)
        + c * sq(z)
        - a * b * sq(x - y)
        - b * c * sq(y - z)
        - a * c * sq(x - z)
    )


@dataclass(frozen=True)
class StoppingRule:
    max_iters: int = 100_000
    step_tol: float = 1e-10
    solution_tol: float = 1e-8

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(eq=False)
class HepProblem:
    """A two-level equilibrium instance.

    ``lower_solution_set`` is the analytic solution set of the lower problem
    (needed by certificates and oracles), ``solution_set`` the solution set of
    the full hierarchy when its projection is available, ``known_solution`` an
    analytic solution point when one exists.
    """

    domain: ConvexSet
    lower: Bifunction
    upper: Bifunction
    selector: Contraction | None = None
    lower_solution_set: ConvexSet | None = None
    solution_set: ConvexSet | None = None
    known_solution: np.ndarray | None = None
    start: np.ndarray | None = None
    start_prev: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if self.known_solution is not None:
            self.known_solution = as_vector(self.known_solution, self.dim)
        if self.start is not None:
            self.start = as_vector(self.start, self.dim)
        if self.start_prev is not None:
            self.start_prev = as_vector(self.start_prev, self.dim)
        self._spot_check()

    @property
    def dim(self) -> int:
        return self.domain.dim

    def _spot_check(self):
        rng = np.random.default_rng(self.seed)
        if self.lower_solution_set is not None:
            pts = self.lower_solution_set.sample(rng, 8)
            for pt in pts:
                resid = resolvents.minty_residual(self.lower, self.domain.project(pt), 64, 5)
                if resid > 1e-6:
                    raise ValueError(
                        f"lower-solution-set point fails the dual residual check ({resid:.3g})"
                    )
        if self.known_solution is not None:
            if self.lower_solution_set is not None and not self.lower_solution_set.contains(
                self.known_solution, tol=1e-7
            ):
                raise ValueError("known solution does not lie in the lower solution set")
            base = self.lower_solution_set if self.lower_solution_set is not None else self.domain
            probe = base.sample(rng, 64)
            vals = self.upper.raw_many_first(probe, self.known_solution)
            if float(np.max(vals)) > 1e-6:
                raise ValueError(
                    "known solution fails the upper-level dual residual check "
                    f"({float(np.max(vals)):.3g})"
                )
        if self.selector is not None:
            for pt in self.domain.sample(rng, 16):
                if not self.domain.contains(self.selector(pt), tol=1e-8):
                    raise ValueError("selector must map the domain into itself")

    def initial_points(self) -> tuple[np.ndarray, np.ndarray]:
        """(x_0, x_1); a single supplied start doubles as both so y_1 = x_1."""
        x1 = self.start if self.start is not None else self.domain.project(np.zeros(self.dim))
        x0 = self.start_prev if self.start_prev is not None else x1
        return x0.copy(), x1.copy()


@dataclass
class SolverState:
    k: int
    x_prev: np.ndarray
    x_curr: np.ndarray
    ergodic_sum: np.ndarray
    ergodic_comp: np.ndarray
    sigma: float = 0.0
    sigma_comp: float = 0.0

    @classmethod
    def initial(cls, x0, x1):
        x0 = np.asarray(x0, dtype=float)
        x1 = np.asarray(x1, dtype=float)
        return cls(
            k=1,
            x_prev=x0.copy(),
            x_curr=x1.copy(),
            ergodic_sum=np.zeros_like(x1),
            ergodic_comp=np.zeros_like(x1),
        )

    def accumulate(self, weight: float, x: np.ndarray):
        # Compensated summation; sigma can grow very slowly when the weight
        # series diverges only logarithmically.
        term = weight * x - self.ergodic_comp
        total = self.ergodic_sum + term
        self.ergodic_comp = (total - self.ergodic_sum) - term
        self.ergodic_sum = total
        t = weight - self.sigma_comp
        s = self.sigma + t
        self.sigma_comp = (s - self.sigma) - t
        self.sigma = s


@dataclass(frozen=True)
class IterationRecord:
    k: int
    y: np.ndarray
    u: np.ndarray
    z: np.ndarray
    x_next: np.ndarray
    step_norm: float
    splitting_gap: float
    minty_residual: float
    dist_to_solution: float
    certificate: float

    def csv_row(self) -> str:
        vals = (
            self.step_norm,
            self.splitting_gap,
            self.minty_residual,
            self.dist_to_solution,
            self.certificate,
        )
        return f"{self.k}," + ",".join(f"{v:.17g}" for v in vals)


@dataclass
class Trajectory:
    records: list
    final_x: np.ndarray
    ergodic: np.ndarray
    stop_reason: str
    wall_time: float
    error: str | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    def to_csv_text(self) -> str:
        lines = [CSV_HEADER]
        lines.extend(rec.csv_row() for rec in self.records)
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        certs = [r.certificate for r in self.records if not np.isnan(r.certificate)]
        dists = [r.dist_to_solution for r in self.records if not np.isnan(r.dist_to_solution)]
        return {
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "final_point": [float(v) for v in self.final_x],
            "ergodic_average": [float(v) for v in self.ergodic],
            "final_step_norm": self.records[-1].step_norm if self.records else float("nan"),
            "certificate_min": min(certs) if certs else None,
            "final_dist_to_solution": dists[-1] if dists else None,
            "wall_time_s": self.wall_time,
            "error": self.error,
        }


def ergodic_average(state: SolverState) -> np.ndarray:
    """Weighted running mean of the iterates with the proximal weights used."""
    if state.sigma <= 0.0:
        raise NoIterations("no iterations recorded")
    return state.ergodic_sum / state.sigma


def certificate_residual(
    lower: Bifunction,
    solution,
    rho: float,
    c: float,
    b_k: float,
    gamma_k: float,
    r_k: float,
    lam_k: float,
    x_prev,
    x_curr,
    u,
    z,
) -> float:
    """Slack of the per-iteration control inequality at the admissible
    choice v = p = 0 (valid exactly at solutions of the hierarchy).

    Returns RHS - LHS of

        (1 + 2 rho r_k) ||z - x*||^2
          <= r_k lam_k F(z, x*) + (1 - gamma_k) ||x_k - x*||^2
             + gamma_k ||x_{k-1} - x*||^2 - (1 - gamma_k/b_k) ||u - x_k||^2
             - gamma_k (1 - b_k) ||x_k - x_{k-1}||^2 - (1 - c/2) ||u - z||^2

    so a nonnegative value (up to tolerance) certifies the iteration.
    """
    if solution is None:
        raise SolutionNotProvided("certificate requires a hierarchy solution point")
    if not 0.0 < c < 2.0:
        raise ValueError(f"certificate constant c must lie in (0, 2), got {c}")
    if not gamma_k < b_k < 1.0:
        raise ValueError(f"certificate requires gamma_k < b_k < 1, got {gamma_k}, {b_k}")
    xs = as_vector(solution, lower.dim)
    x_prev = np.asarray(x_prev, dtype=float)
    x_curr = np.asarray(x_curr, dtype=float)
    u = np.asarray(u, dtype=float)
    z = np.asarray(z, dtype=float)
    sq = lambda v: float(v @ v)
    rhs = (
        r_k * lam_k * lower.raw(z, xs)
        + (1.0 - gamma_k) * sq(x_curr - xs)
        + gamma_k * sq(x_prev - xs)
        - (1.0 - gamma_k / b_k) * sq(u - x_curr)
        - gamma_k * (1.0 - b_k) * sq(x_curr - x_prev)
        - (1.0 - c / 2.0) * sq(u - z)
    )
    lhs = (1.0 + 2.0 * rho * r_k) * sq(z - xs)
    return rhs - lhs


def ripsa_step(
    problem: HepProblem,
    state: SolverState,
    sched: ScheduleSet,
    cfg: ResolventConfig = DEFAULT_CONFIG,
    minty_probes: np.ndarray | None = None,
    certify_rho: float | None = None,
) -> tuple[SolverState, IterationRecord]:
    """Advance one iteration; the state is updated in place and returned."""
    k = state.k
    vals = sched.at(k)
    if vals["mu"] > 0 and problem.selector is None:
        raise ScheduleOutOfRange(
            f"schedule puts weight {vals['mu']:g} on the selector at k={k} "
            "but the problem has none"
        )
    x_prev, x_curr = state.x_prev, state.x_curr
    gamma = vals["gamma"]
    y = x_curr if gamma == 0.0 else (1.0 - gamma) * x_curr + gamma * x_prev
    u = resolve(problem.upper, vals["r"], y, cfg)
    z = resolve(problem.lower, vals["r"] * vals["lam"], u, cfg)
    x_next = vals["alpha"] * x_curr + vals["beta"] * z
    if vals["mu"] > 0:
        x_next = x_next + vals["mu"] * problem.selector(x_curr)

    state.accumulate(vals["r"], x_curr)

    if minty_probes is not None and minty_probes.size:
        resid = float(np.max(problem.lower.raw_many_first(minty_probes, x_next)))
    else:
        resid = float("nan")
    dist = (
        float(np.linalg.norm(x_next - problem.known_solution))
        if problem.known_solution is not None
        else float("nan")
    )
    cert = float("nan")
    if certify_rho is not None:
        cert = certificate_residual(
            problem.lower,
            problem.known_solution,
            certify_rho,
            sched.c,
            vals["b"],
            gamma,
            vals["r"],
            vals["lam"],
            x_prev,
            x_curr,
            u,
            z,
        )
    record = IterationRecord(
        k=k,
        y=y,
        u=u,
        z=z,
        x_next=x_next,
        step_norm=float(np.linalg.norm(x_next - x_curr)),
        splitting_gap=float(np.linalg.norm(u - z)),
        minty_residual=resid,
        dist_to_solution=dist,
        certificate=cert,
    )
    state.x_prev = x_curr
    state.x_curr = x_next
    state.k = k + 1
    return state, record


def run(
    problem: HepProblem,
    sched: ScheduleSet,
    cfg: ResolventConfig = DEFAULT_CONFIG,
    stop: StoppingRule = StoppingRule(),
    minty_probes: int = 8,
    certify: bool = False,
    rho: float | None = None,
) -> Trajectory:
    """Iterate until a stopping rule fires; returns the full trajectory.

    On a solver failure the partial trajectory is returned with the error
    recorded instead of propagating, so diagnostics stay available.
    """
    x0, x1 = problem.initial_points()
    state = SolverState.initial(x0, x1)
    rng = np.random.default_rng(problem.seed)
    certify_rho = None
    if certify:
        if problem.known_solution is None:
            raise SolutionNotProvided("certificates require a known hierarchy solution")
        certify_rho = rho if rho is not None else problem.upper.monotonicity_lower_bound()
    records = []
    stop_reason = "max_iters"
    error = None
    t0 = time.perf_counter()
    for _ in range(stop.max_iters):
        probes = sample_domain(problem.lower, rng, minty_probes) if minty_probes else None
        try:
            state, rec = ripsa_step(problem, state, sched, cfg, probes, certify_rho)
        except HeqError as exc:
            error = f"{type(exc).__name__}: {exc}"
            stop_reason = "error"
            break
        records.append(rec)
        if rec.step_norm <= stop.step_tol:
            stop_reason = "step_tol"
            break
        if not np.isnan(rec.dist_to_solution) and rec.dist_to_solution <= stop.solution_tol:
            stop_reason = "solution_tol"
            break
    wall = time.perf_counter() - t0
    ergodic = ergodic_average(state) if state.sigma > 0 else state.x_curr.copy()
    return Trajectory(
        records=records,
        final_x=state.x_curr.copy(),
        ergodic=ergodic,
        stop_reason=stop_reason,
        wall_time=wall,
        error=error,
    )


# ---------------------------------------------------------------------------
# Straight-line degenerate variants (independent code paths for equivalence
# testing against the main step under the matching degenerate schedule).
# ---------------------------------------------------------------------------

VARIANTS = ("proximal_point", "mann", "halpern", "splitting")


def _require(cond, message):
    if not cond:
        raise ScheduleOutOfRange(message)


def reduction_trajectory(
    variant: str,
    problem: HepProblem,
    sched: ScheduleSet,
    cfg: ResolventConfig = DEFAULT_CONFIG,
    stop: StoppingRule = StoppingRule(),
    tau=None,
) -> Trajectory:
    """Run one of the classical special-case iterations with dedicated code.

    proximal_point: x <- J^G_r(x)                        (gamma=alpha=mu=0)
    mann:           x <- alpha x + (1-alpha) J^G_r(x)    (gamma=mu=0)
    halpern:        x <- alpha x + beta J^G_r(x) + mu a  (gamma=0, constant a)
    splitting:      x <- J^F_{r lam}(J^G_r(x + tau (x - x_prev)))
                    with extrapolation weight tau (tau = -gamma matches the
                    averaged inertia convention of the main step).

    The single-resolvent variants require a zero lower bifunction so the
    penalized resolvent is the identity on the domain.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if variant != "splitting":
        _require(
            isinstance(problem.lower, ZeroBifunction),
            f"variant {variant} requires a zero lower bifunction",
        )
    x0, x1 = problem.initial_points()
    x_prev, x = x0, x1
    records = []
    stop_reason = "max_iters"
    error = None
    t0 = time.perf_counter()
    for k in range(1, stop.max_iters + 1):
        vals = sched.at(k)
        try:
            if variant == "proximal_point":
                _require(
                    vals["gamma"] == 0 and vals["alpha"] == 0 and vals["beta"] == 1,
                    "proximal_point requires gamma = alpha = 0 and beta = 1",
                )
                u = resolve(problem.upper, vals["r"], x, cfg)
                x_new = u
                y, z = x, u
            elif variant == "mann":
                _require(
                    vals["gamma"] == 0 and vals["mu"] == 0,
                    "mann requires gamma = 0 and alpha + beta = 1",
                )
                u = resolve(problem.upper, vals["r"], x, cfg)
                x_new = vals["alpha"] * x + (1.0 - vals["alpha"]) * u
                y, z = x, u
            elif variant == "halpern":
                _require(vals["gamma"] == 0, "halpern requires gamma = 0")
                _require(
                    problem.selector is not None and problem.selector.kind == "constant",
                    "halpern requires a constant selector (anchor point)",
                )
                u = resolve(problem.upper, vals["r"], x, cfg)
                anchor = problem.selector(x)
                x_new = vals["alpha"] * x + vals["beta"] * u + vals["mu"] * anchor
                y, z = x, u
            else:  # splitting
                t_k = -vals["gamma"] if tau is None else float(tau.value(k))
                y = x + t_k * (x - x_prev)
                u = resolve(problem.upper, vals["r"], y, cfg)
                z = resolve(problem.lower, vals["r"] * vals["lam"], u, cfg)
                x_new = z
        except HeqError as exc:
            error = f"{type(exc).__name__}: {exc}"
            stop_reason = "error"
            break
        dist = (
            float(np.linalg.norm(x_new - problem.known_solution))
            if problem.known_solution is not None
            else float("nan")
        )
        records.append(
            IterationRecord(
                k=k,
                y=y,
                u=u,
                z=z,
                x_next=x_new,
                step_norm=float(np.linalg.norm(x_new - x)),
                splitting_gap=float(np.linalg.norm(u - z)),
                minty_residual=float("nan"),
                dist_to_solution=dist,
                certificate=float("nan"),
            )
        )
        x_prev, x = x, x_new
        if records[-1].step_norm <= stop.step_tol:
            stop_reason = "step_tol"
            break
        if not np.isnan(dist) and dist <= stop.solution_tol:
            stop_reason = "solution_tol"
            break
    wall = time.perf_counter() - t0
    return Trajectory(
        records=records,
        final_x=x.copy(),
        ergodic=x.copy(),
        stop_reason=stop_reason,
        wall_time=wall,
        error=error,
    )
