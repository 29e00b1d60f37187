"""Problem files: a small indented key-value text format.

Grammar (documented in the README): one ``key: value`` pair or ``key:`` block
opener per line, nesting by two-space indentation, sequence items introduced
by ``- ``, ``#`` comments, scalars are integers, floats, bare-word tags or
bracketed numeric arrays (vectors ``[1, 2]`` and matrices ``[[1, 0], [0, 1]]``).
Unknown keys are rejected with the offending line number. Serialization is
canonical (fixed key order, shortest float repr) so parse -> serialize ->
parse is the identity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import bifunctions as bf
from . import geometry, schedules
from .errors import ParseError
from .resolvents import ResolventConfig
from .solver import HepProblem, StoppingRule

# ---------------------------------------------------------------------------
# Low-level parse: text -> nested structure of (value, lineno) nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Node:
    value: object
    lineno: int


def _strip_comment(text: str) -> str:
    out = []
    in_str = False
    for ch in text:
        if ch == '"':
            in_str = not in_str
        if ch == "#" and not in_str:
            break
        out.append(ch)
    return "".join(out).rstrip()


def _scan(text: str):
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = _strip_comment(raw)
        if not content.strip():
            continue
        stripped = content.lstrip(" ")
        indent = len(content) - len(stripped)
        if indent % 2 != 0:
            raise ParseError("indentation must be a multiple of two spaces", lineno)
        if "\t" in raw[: indent + 1]:
            raise ParseError("tabs are not allowed in indentation", lineno)
        rows.append((lineno, indent // 2, stripped))
    return rows


def _parse_scalar(token: str, lineno: int):
    token = token.strip()
    if token.startswith("[") or token in ("true", "false"):
        try:
            return json.loads(token)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed array value: {exc.msg}", lineno) from None
    if token.startswith('"') and token.endswith('"') and len(token) >= 2:
        return token[1:-1]
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    if all(c.isalnum() or c in "_.-" for c in token):
        return token
    raise ParseError(f"cannot parse value {token!r}", lineno)


def _parse_block(rows, pos, level):
    """Parse a mapping at the given indentation level."""
    out = {}
    while pos < len(rows):
        lineno, indent, text = rows[pos]
        if indent < level:
            break
        if indent > level:
            raise ParseError("unexpected indentation", lineno)
        if text.startswith("- "):
            break
        if ":" not in text:
            raise ParseError("expected 'key: value' or 'key:'", lineno)
        key, _, rest = text.partition(":")
        key = key.strip()
        if not key:
            raise ParseError("empty key", lineno)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", lineno)
        rest = rest.strip()
        pos += 1
        if rest:
            out[key] = Node(_parse_scalar(rest, lineno), lineno)
        else:
            if pos < len(rows) and rows[pos][1] == level + 1 and rows[pos][2].startswith("- "):
                items, pos = _parse_list(rows, pos, level + 1)
                out[key] = Node(items, lineno)
            elif pos < len(rows) and rows[pos][1] > level:
                sub, pos = _parse_block(rows, pos, level + 1)
                out[key] = Node(sub, lineno)
            else:
                out[key] = Node({}, lineno)
    return out, pos


def _parse_list(rows, pos, level):
    items = []
    while pos < len(rows):
        lineno, indent, text = rows[pos]
        if indent != level or not text.startswith("- "):
            break
        first = text[2:].strip()
        rows_mod = rows[:pos] + [(lineno, level + 1, first)] + rows[pos + 1 :]
        sub, pos = _parse_block(rows_mod, pos, level + 1)
        items.append(Node(sub, lineno))
    return items, pos


def _parse_tree(text: str, filename=None) -> dict:
    rows = _scan(text)
    try:
        tree, pos = _parse_block(rows, 0, 0)
    except ParseError as exc:
        if filename is not None and exc.filename is None:
            raise ParseError(exc.message, exc.lineno, filename) from None
        raise
    if pos != len(rows):
        raise ParseError("unexpected list item at top level", rows[pos][0], filename)
    return tree


# ---------------------------------------------------------------------------
# Schema helpers
# ---------------------------------------------------------------------------


class _Section:
    """A mapping node plus bookkeeping for unknown-key rejection."""

    def __init__(self, node: Node, name: str, filename=None):
        if not isinstance(node.value, dict):
            raise ParseError(f"section {name!r} must be a mapping", node.lineno, filename)
        self.mapping = node.value
        self.name = name
        self.lineno = node.lineno
        self.filename = filename
        self._taken = set()

    def has(self, key):
        return key in self.mapping

    def take(self, key, kind, required=True, default=None):
        if key not in self.mapping:
            if required:
                raise ParseError(
                    f"section {self.name!r} is missing required key {key!r}",
                    self.lineno,
                    self.filename,
                )
            self._taken.add(key)
            return default
        self._taken.add(key)
        node = self.mapping[key]
        value = node.value
        checks = {
            "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
            "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
            "tag": lambda v: isinstance(v, str),
            "vector": _is_vector,
            "matrix": _is_matrix,
            "mapping": lambda v: isinstance(v, dict),
            "list": lambda v: isinstance(v, list),
        }
        if not checks[kind](value):
            raise ParseError(
                f"key {key!r} in section {self.name!r} must be a {kind}",
                node.lineno,
                self.filename,
            )
        if kind == "number":
            return float(value)
        return value

    def sub(self, key, required=True):
        if key not in self.mapping:
            if required:
                raise ParseError(
                    f"section {self.name!r} is missing required key {key!r}",
                    self.lineno,
                    self.filename,
                )
            self._taken.add(key)
            return None
        self._taken.add(key)
        return _Section(self.mapping[key], f"{self.name}.{key}", self.filename)

    def finish(self):
        for key, node in self.mapping.items():
            if key not in self._taken:
                raise ParseError(
                    f"unknown key {key!r} in section {self.name!r}",
                    node.lineno,
                    self.filename,
                )


def _is_vector(v):
    return isinstance(v, list) and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    )


def _is_matrix(v):
    return isinstance(v, list) and v and all(_is_vector(row) for row in v)


# ---------------------------------------------------------------------------
# Section builders (config dict -> live object)
# ---------------------------------------------------------------------------


def _build_set(sec: _Section, dim: int) -> geometry.ConvexSet:
    kind = sec.take("kind", "tag")
    try:
        if kind == "whole_space":
            out = geometry.WholeSpace(dim)
        elif kind == "box":
            out = geometry.Box(sec.take("lower", "vector"), sec.take("upper", "vector"))
        elif kind == "ball":
            out = geometry.Ball(sec.take("center", "vector"), sec.take("radius", "number"))
        elif kind == "halfspace":
            out = geometry.Halfspace(sec.take("normal", "vector"), sec.take("offset", "number"))
        elif kind == "affine":
            out = geometry.AffineSet(sec.take("matrix", "matrix"), sec.take("rhs", "vector"))
        elif kind == "simplex":
            out = geometry.Simplex(dim, sec.take("scale", "number"))
        elif kind == "singleton":
            out = geometry.Singleton(sec.take("point", "vector"))
        elif kind == "intersection":
            member_nodes = sec.take("members", "list")
            members = []
            for i, node in enumerate(member_nodes):
                msec = _Section(node, f"{sec.name}.members[{i}]", sec.filename)
                members.append(_build_set(msec, dim))
            out = geometry.Intersection(tuple(members), sec.take("feasible", "vector"))
        else:
            raise ParseError(f"unknown set kind {kind!r}", sec.lineno, sec.filename)
    except (ValueError, geometry.DimensionMismatch) as exc:
        raise ParseError(f"invalid set: {exc}", sec.lineno, sec.filename) from None
    sec.finish()
    if out.dim != dim:
        raise ParseError(
            f"set dimension {out.dim} does not match problem dimension {dim}",
            sec.lineno,
            sec.filename,
        )
    return out


def _build_functional(sec: _Section, dim: int) -> bf.ConvexFunctional:
    kind = sec.take("kind", "tag")
    if kind == "quadratic":
        out = bf.Quadratic(
            sec.take("matrix", "matrix"),
            sec.take("linear", "vector"),
            sec.take("constant", "number", required=False, default=0.0),
        )
    elif kind == "half_squared_distance":
        out = bf.HalfSquaredDistance(_build_set(sec.sub("set"), dim))
    elif kind == "norm1":
        out = bf.Norm1(dim)
    else:
        raise ParseError(f"unknown functional kind {kind!r}", sec.lineno, sec.filename)
    sec.finish()
    return out


def _build_operator(sec: _Section) -> bf.MonotoneMap:
    kind = sec.take("kind", "tag")
    if kind == "linear":
        out = bf.LinearMap(sec.take("matrix", "matrix"))
    elif kind == "affine":
        out = bf.AffineMap(sec.take("matrix", "matrix"), sec.take("shift", "vector"))
    elif kind == "quadratic_gradient":
        out = bf.GradientOfQuadratic(sec.take("matrix", "matrix"), sec.take("linear", "vector"))
    else:
        raise ParseError(f"unknown operator kind {kind!r}", sec.lineno, sec.filename)
    sec.finish()
    return out


def _build_map(sec: _Section, dim: int) -> bf.NonexpansiveMap:
    kind = sec.take("kind", "tag")
    if kind == "identity":
        out = bf.IdentityMap(dim)
    elif kind == "projection":
        out = bf.ProjectionMap(_build_set(sec.sub("set"), dim))
    elif kind == "affine":
        out = bf.AffineContraction(sec.take("matrix", "matrix"), sec.take("shift", "vector"))
    elif kind == "rotation":
        out = bf.RotationMap(dim, tuple(sec.take("angles", "vector")))
    else:
        raise ParseError(f"unknown map kind {kind!r}", sec.lineno, sec.filename)
    sec.finish()
    return out


def _build_bifunction(sec: _Section, domain, dim: int) -> bf.Bifunction:
    kind = sec.take("kind", "tag")
    if kind == "difference_of_function":
        out = bf.DifferenceOfFunction(_build_functional(sec.sub("functional"), dim), domain)
    elif kind == "directional_derivative":
        out = bf.DirectionalDerivative(_build_functional(sec.sub("functional"), dim), domain)
    elif kind == "operator_vi":
        out = bf.OperatorVI(_build_operator(sec.sub("operator")), domain)
    elif kind == "fixed_point_gap":
        out = bf.FixedPointGap(_build_map(sec.sub("map"), dim), domain)
    elif kind == "zero":
        out = bf.ZeroBifunction(domain)
    else:
        raise ParseError(f"unknown bifunction kind {kind!r}", sec.lineno, sec.filename)
    sec.finish()
    return out


def _build_selector(sec: _Section) -> bf.Contraction:
    kind = sec.take("kind", "tag")
    try:
        if kind == "constant":
            out = bf.Contraction.constant(sec.take("point", "vector"))
        elif kind == "affine":
            delta = sec.take("delta", "number", required=False)
            out = bf.Contraction.affine(
                sec.take("matrix", "matrix"), sec.take("shift", "vector"), delta
            )
        else:
            raise ParseError(f"unknown selector kind {kind!r}", sec.lineno, sec.filename)
    except ValueError as exc:
        raise ParseError(f"invalid selector: {exc}", sec.lineno, sec.filename) from None
    sec.finish()
    return out


def _build_family(sec: _Section) -> schedules.SequenceFamily:
    kind = sec.take("family", "tag")
    offset = sec.take("offset", "int", required=False, default=1)
    if kind == "constant":
        out = schedules.Constant(sec.take("value", "number"), offset)
    elif kind == "power":
        out = schedules.PowerLaw(sec.take("scale", "number"), sec.take("exponent", "number"), offset)
    elif kind == "log_power":
        out = schedules.LogPower(
            sec.take("scale", "number"),
            sec.take("exponent", "number"),
            sec.take("log_exponent", "number"),
            offset,
        )
    elif kind == "shifted_power":
        out = schedules.ShiftedPower(
            sec.take("base", "number"),
            sec.take("scale", "number"),
            sec.take("exponent", "number"),
            offset,
        )
    elif kind == "ramp":
        out = schedules.LinearRamp(
            sec.take("start", "number"), sec.take("slope", "number"), sec.take("cap", "number"), offset
        )
    elif kind == "table":
        out = schedules.Table(tuple(sec.take("values", "vector")), offset)
    else:
        raise ParseError(f"unknown sequence family {kind!r}", sec.lineno, sec.filename)
    sec.finish()
    return out


def _build_schedules(sec: _Section) -> tuple[schedules.ScheduleSet, str | None]:
    theorem = sec.take("theorem", "tag", required=False)
    if theorem is not None and theorem not in ("thm1", "thm2", "thm3"):
        raise ParseError(f"unknown theorem tag {theorem!r}", sec.lineno, sec.filename)
    c = sec.take("c", "number", required=False, default=1.0)
    fams = {}
    for name in ("r", "lambda", "gamma", "alpha", "beta", "b"):
        fams[name] = _build_family(sec.sub(name))
    sec.finish()
    try:
        sched = schedules.ScheduleSet(
            r=fams["r"],
            lam=fams["lambda"],
            gamma=fams["gamma"],
            alpha=fams["alpha"],
            beta=fams["beta"],
            b=fams["b"],
            c=c,
        )
    except ValueError as exc:
        raise ParseError(f"invalid schedules: {exc}", sec.lineno, sec.filename) from None
    return sched, theorem


# ---------------------------------------------------------------------------
# The problem-file carrier
# ---------------------------------------------------------------------------

_SOLVER_KEYS = (
    "start",
    "start_prev",
    "max_iters",
    "step_tol",
    "solution_tol",
    "inner_tol",
    "inner_max_iters",
    "minty_probes",
)


@dataclass
class Built:
    problem: HepProblem
    schedules: schedules.ScheduleSet
    theorem: str | None
    stop: StoppingRule
    config: ResolventConfig
    minty_probes: int
    seed: int


@dataclass(eq=True)
class ProblemFile:
    """Validated plain-value image of a problem file (the round-trip unit)."""

    dimension: int
    seed: int
    set_cfg: dict
    lower_cfg: dict
    upper_cfg: dict
    schedules_cfg: dict
    selector_cfg: dict | None = None
    solver_cfg: dict = field(default_factory=dict)
    oracle_hints_cfg: dict = field(default_factory=dict)

    def build(self, seed_override: int | None = None) -> Built:
        seed = self.seed if seed_override is None else seed_override
        tree = _to_nodes(self.as_tree())
        root = _Section(Node(tree, 0), "problem")
        return _build_from_root(root, seed_override=seed)

    def as_tree(self) -> dict:
        out = {
            "dimension": self.dimension,
            "seed": self.seed,
            "set": self.set_cfg,
            "lower_bifunction": self.lower_cfg,
            "upper_bifunction": self.upper_cfg,
        }
        if self.selector_cfg is not None:
            out["selector"] = self.selector_cfg
        out["schedules"] = self.schedules_cfg
        if self.solver_cfg:
            out["solver"] = self.solver_cfg
        if self.oracle_hints_cfg:
            out["oracle_hints"] = self.oracle_hints_cfg
        return out


def _to_nodes(value, lineno=0):
    if isinstance(value, dict):
        return {k: Node(_to_nodes(v, lineno), lineno) for k, v in value.items()}
    if isinstance(value, list) and value and isinstance(value[0], dict):
        return [Node(_to_nodes(v, lineno), lineno) for v in value]
    return value


def _plain(value):
    if isinstance(value, Node):
        return _plain(value.value)
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def parse_problem(text: str, filename=None) -> ProblemFile:
    tree = _parse_tree(text, filename)
    root = _Section(Node(tree, 0), "problem", filename)
    dimension = root.take("dimension", "int")
    if dimension < 1:
        raise ParseError("dimension must be >= 1", root.lineno, filename)
    seed = root.take("seed", "int", required=False, default=0)
    set_sec = root.sub("set")
    lower_sec = root.sub("lower_bifunction")
    upper_sec = root.sub("upper_bifunction")
    selector_sec = root.sub("selector", required=False)
    schedules_sec = root.sub("schedules")
    solver_sec = root.sub("solver", required=False)
    hints_sec = root.sub("oracle_hints", required=False)
    root.finish()

    spec = ProblemFile(
        dimension=dimension,
        seed=seed,
        set_cfg=_plain(set_sec.mapping),
        lower_cfg=_plain(lower_sec.mapping),
        upper_cfg=_plain(upper_sec.mapping),
        selector_cfg=_plain(selector_sec.mapping) if selector_sec else None,
        schedules_cfg=_plain(schedules_sec.mapping),
        solver_cfg=_plain(solver_sec.mapping) if solver_sec else {},
        oracle_hints_cfg=_plain(hints_sec.mapping) if hints_sec else {},
    )
    # Validate everything now so diagnostics carry source line numbers.
    _build_from_root(_Section(Node(tree, 0), "problem", filename))
    return spec


def _build_from_root(root: _Section, seed_override: int | None = None) -> Built:
    dim = root.take("dimension", "int")
    seed = root.take("seed", "int", required=False, default=0)
    if seed_override is not None:
        seed = seed_override
    domain = _build_set(root.sub("set"), dim)
    lower = _build_bifunction(root.sub("lower_bifunction"), domain, dim)
    upper = _build_bifunction(root.sub("upper_bifunction"), domain, dim)
    selector_sec = root.sub("selector", required=False)
    selector = _build_selector(selector_sec) if selector_sec else None
    sched, theorem = _build_schedules(root.sub("schedules"))

    stop_kwargs = {}
    cfg_kwargs = {}
    start = start_prev = None
    minty_probes = 8
    solver_sec = root.sub("solver", required=False)
    if solver_sec:
        start = solver_sec.take("start", "vector", required=False)
        start_prev = solver_sec.take("start_prev", "vector", required=False)
        mi = solver_sec.take("max_iters", "int", required=False)
        st = solver_sec.take("step_tol", "number", required=False)
        so = solver_sec.take("solution_tol", "number", required=False)
        it = solver_sec.take("inner_tol", "number", required=False)
        im = solver_sec.take("inner_max_iters", "int", required=False)
        mp = solver_sec.take("minty_probes", "int", required=False)
        if mi is not None:
            stop_kwargs["max_iters"] = mi
        if st is not None:
            stop_kwargs["step_tol"] = st
        if so is not None:
            stop_kwargs["solution_tol"] = so
        if it is not None:
            cfg_kwargs["inner_tol"] = it
        if im is not None:
            cfg_kwargs["inner_max_iters"] = im
        if mp is not None:
            minty_probes = mp
        solver_sec.finish()

    lower_solution_set = solution_set = solution = None
    hints_sec = root.sub("oracle_hints", required=False)
    if hints_sec:
        lss = hints_sec.sub("lower_solution_set", required=False)
        if lss:
            lower_solution_set = _build_set(lss, dim)
        ss = hints_sec.sub("solution_set", required=False)
        if ss:
            solution_set = _build_set(ss, dim)
        solution = hints_sec.take("solution", "vector", required=False)
        hints_sec.finish()
    root.finish()

    try:
        stop = StoppingRule(**stop_kwargs)
        config = ResolventConfig(**cfg_kwargs)
        problem = HepProblem(
            domain=domain,
            lower=lower,
            upper=upper,
            selector=selector,
            lower_solution_set=lower_solution_set,
            solution_set=solution_set,
            known_solution=solution,
            start=start,
            start_prev=start_prev,
            seed=seed,
        )
    except ValueError as exc:
        raise ParseError(f"invalid problem: {exc}", root.lineno, root.filename) from None
    return Built(
        problem=problem,
        schedules=sched,
        theorem=theorem,
        stop=stop,
        config=config,
        minty_probes=minty_probes,
        seed=seed,
    )


def load_problem(path) -> ProblemFile:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_problem(fh.read(), filename=str(path))


# ---------------------------------------------------------------------------
# Canonical serialization
# ---------------------------------------------------------------------------

_KEY_ORDER = (
    "dimension",
    "seed",
    "set",
    "lower_bifunction",
    "upper_bifunction",
    "selector",
    "schedules",
    "solver",
    "oracle_hints",
    # section-local orders
    "kind",
    "family",
    "theorem",
    "c",
    "r",
    "lambda",
    "gamma",
    "alpha",
    "beta",
    "b",
    "functional",
    "operator",
    "map",
    "matrix",
    "linear",
    "constant",
    "shift",
    "point",
    "angles",
    "set",
    "lower",
    "upper",
    "center",
    "radius",
    "normal",
    "offset",
    "rhs",
    "scale",
    "members",
    "feasible",
    "base",
    "exponent",
    "log_exponent",
    "value",
    "values",
    "start",
    "slope",
    "cap",
    "delta",
    "start_prev",
    "max_iters",
    "step_tol",
    "solution_tol",
    "inner_tol",
    "inner_max_iters",
    "minty_probes",
    "lower_solution_set",
    "solution_set",
    "solution",
)
_ORDER_INDEX = {}
for i, k in enumerate(_KEY_ORDER):
    _ORDER_INDEX.setdefault(k, i)


def _order_key(key):
    return (_ORDER_INDEX.get(key, len(_KEY_ORDER)), key)


def _fmt_scalar(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        if v and all(c.isalnum() or c in "_.-" for c in v):
            return v
        return json.dumps(v)
    raise TypeError(f"cannot serialize scalar {v!r}")


def _fmt_array(v) -> str:
    if all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        return "[" + ", ".join(_fmt_scalar(x) for x in v) + "]"
    return "[" + ", ".join(_fmt_array(row) for row in v) + "]"


def _emit(tree: dict, level: int, out: list):
    pad = "  " * level
    for key in sorted(tree.keys(), key=_order_key):
        value = tree[key]
        if isinstance(value, dict):
            out.append(f"{pad}{key}:")
            _emit(value, level + 1, out)
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            out.append(f"{pad}{key}:")
            for item in value:
                lines: list = []
                _emit(item, 0, lines)
                out.append(f"{pad}  - {lines[0].strip()}")
                for extra in lines[1:]:
                    out.append(f"{pad}    {extra}")
        elif isinstance(value, list):
            out.append(f"{pad}{key}: {_fmt_array(value)}")
        else:
            out.append(f"{pad}{key}: {_fmt_scalar(value)}")


def serialize_problem(spec: ProblemFile) -> str:
    lines: list = []
    _emit(spec.as_tree(), 0, lines)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Shipped benchmarks and gap-model derivation
# ---------------------------------------------------------------------------

BENCHMARKS = ("thm1_weak", "thm2_strong", "thm3_viscosity", "remark3_prox", "fixedpoint_lower")


def benchmark_text(name: str) -> str:
    if name not in BENCHMARKS:
        raise KeyError(f"unknown benchmark {name!r}; shipped: {', '.join(BENCHMARKS)}")
    return resources.files("heq.benchmarks").joinpath(f"{name}.heq").read_text(encoding="utf-8")


def load_benchmark(name: str) -> ProblemFile:
    return parse_problem(benchmark_text(name), filename=f"<benchmark:{name}>")


def resolve_problem_argument(arg: str) -> ProblemFile:
    """A CLI problem argument is either a shipped benchmark name or a path."""
    if arg in BENCHMARKS:
        return load_benchmark(arg)
    return load_problem(arg)


def gap_model_for(problem: HepProblem):
    """(GapModel, p_norm) for the problem's lower family, probing the normal
    direction at the known solution when available.

    An interior solution has a trivial normal cone, so the gap collapses to
    zero; boundary solutions get the displacement direction of a small outward
    probe as the representative normal.
    """
    lower = problem.lower
    if isinstance(lower, bf.ZeroBifunction):
        return schedules.ZeroGap(), 0.0
    s_f = problem.lower_solution_set
    x_star = problem.known_solution
    direction = None
    if s_f is not None and x_star is not None:
        t = 1e-6 * (1.0 + float(np.linalg.norm(x_star)))
        probes = [x_star + t * e for e in np.eye(problem.dim)]
        probes += [x_star - t * e for e in np.eye(problem.dim)]
        best = None
        for w in probes:
            disp = w - s_f.project(w)
            if best is None or np.linalg.norm(disp) > np.linalg.norm(best):
                best = disp
        if best is not None and float(np.linalg.norm(best)) > 0.1 * t:
            direction = best / float(np.linalg.norm(best))
        else:
            return schedules.ZeroGap(), 0.0
    if isinstance(lower, (bf.DifferenceOfFunction, bf.DirectionalDerivative)) and isinstance(
        lower.psi, bf.HalfSquaredDistance
    ):
        return schedules.HalfSquaredDistanceGap(), 1.0
    if isinstance(lower, bf.FixedPointGap):
        fix = bf.fixed_point_set(lower.map)
        if direction is None:
            gaps = []
            for e in np.eye(problem.dim):
                for sgn in (1.0, -1.0):
                    gaps.append(problem.domain.support(sgn * e) - fix.support(sgn * e))
            unit_gap = max(gaps)
        else:
            unit_gap = problem.domain.support(direction) - fix.support(direction)
        return schedules.FixedPointSupportGap(unit_gap), 1.0
    # No closed form: fall back to the trivial model and note it upstream.
    return schedules.ZeroGap(), 0.0
