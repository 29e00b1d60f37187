"""Parameter-sequence families and convergence-condition validators.

A schedule bundles the six driving sequences of the iteration (proximal
parameters r_k, penalization parameters lambda_k, inertia gamma_k, relaxation
alpha_k, resolvent weight beta_k, and the derived viscosity weight
mu_k = 1 - alpha_k - beta_k) together with the free certificate constants.

Validation produces one verdict per condition clause. ``proven`` verdicts come
only from the symbolic rule table (p-series facts with logarithmic refinement,
term-wise products/ratios); anything decided from finite partial sums is
labeled ``numeric_pass``/``fail`` because convergence is undecidable from a
prefix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoClosedForm, ScheduleOutOfRange, UnknownTheorem

PROVEN = "proven"
NUMERIC_PASS = "numeric_pass"
FAIL = "fail"
INCONSISTENT = "inconsistent"

_HORIZON = 10_000  # numeric prefix checks
_SERIES_K = 100_000  # numeric series heuristic


# ---------------------------------------------------------------------------
# Symbolic kernel: finite sums of a * k^(-p) * log(k+1)^(-q)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Term:
    a: float
    p: float
    q: float


class TermSum:
    """Finite sum of power-log terms, closed under +, scalar *, * and
    division by a single term. Used for the symbolic clause verdicts."""

    def __init__(self, terms):
        merged = {}
        for t in terms:
            key = (t.p, t.q)
            merged[key] = merged.get(key, 0.0) + t.a
        self.terms = tuple(
            _Term(a, p, q) for (p, q), a in sorted(merged.items()) if a != 0.0
        )

    @classmethod
    def constant(cls, v):
        return cls([_Term(v, 0.0, 0.0)])

    @classmethod
    def power(cls, a, p, q=0.0):
        return cls([_Term(a, p, q)])

    def is_zero(self):
        return not self.terms

    def __add__(self, other):
        return TermSum(self.terms + other.terms)

    def __neg__(self):
        return TermSum([_Term(-t.a, t.p, t.q) for t in self.terms])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        return TermSum([_Term(c * t.a, t.p, t.q) for t in self.terms])

    def __mul__(self, other):
        out = []
        for s in self.terms:
            for t in other.terms:
                out.append(_Term(s.a * t.a, s.p + t.p, s.q + t.q))
        return TermSum(out)

    def divide(self, other):
        """Division; only exact when the divisor is a single term."""
        if len(other.terms) != 1:
            return None
        d = other.terms[0]
        return TermSum([_Term(t.a / d.a, t.p - d.p, t.q - d.q) for t in self.terms])

    def value(self, k):
        k = np.asarray(k, dtype=float)
        out = np.zeros_like(k)
        for t in self.terms:
            out = out + t.a * k ** (-t.p) * np.log(k + 1.0) ** (-t.q)
        return out

    def _leading(self):
        # Slowest-decaying term dominates both limits and series behavior.
        return min(self.terms, key=lambda t: (t.p, t.q))

    def limit(self):
        """Limit as k -> inf (may be +-inf)."""
        if self.is_zero():
            return 0.0
        lead = self._leading()
        if lead.p > 0 or (lead.p == 0 and lead.q > 0):
            return 0.0
        if lead.p == 0 and lead.q == 0:
            finite = lead.a
            rest = TermSum([t for t in self.terms if (t.p, t.q) != (lead.p, lead.q)])
            tail = rest.limit()
            return finite if tail == 0.0 else finite + tail
        return math.inf if lead.a > 0 else -math.inf

    @staticmethod
    def _term_series_converges(t):
        return t.p > 1.0 or (t.p == 1.0 and t.q > 1.0)

    def series(self):
        """'converges' | 'diverges_pos' | 'diverges_neg' for sum over k >= 1."""
        if self.is_zero():
            return "converges"
        divergent = [t for t in self.terms if not self._term_series_converges(t)]
        if not divergent:
            return "converges"
        lead = min(divergent, key=lambda t: (t.p, t.q))
        return "diverges_pos" if lead.a > 0 else "diverges_neg"

    def nonincreasing_all_k(self):
        """True only when every term is individually nonincreasing on k >= 1."""
        return all(t.a == 0 or (t.a > 0 and t.p >= 0 and t.q >= 0) or (t.p == 0 and t.q == 0) for t in self.terms)

    def nondecreasing_all_k(self):
        return all(t.a == 0 or (t.a < 0 and t.p >= 0 and t.q >= 0) or (t.p == 0 and t.q == 0) for t in self.terms)


# ---------------------------------------------------------------------------
# Sequence families
# ---------------------------------------------------------------------------


class SequenceFamily:
    """Closed-form scalar sequence k -> f(k), k >= 1."""

    offset: int = 1

    def value(self, k: int) -> float:
        """Scalar evaluation (hot path: subclasses avoid array round-trips)."""
        return float(self.values(np.array([k]))[0])

    def values(self, ks) -> np.ndarray:
        raise NotImplementedError

    def term_sum(self) -> TermSum | None:
        """Symbolic form ignoring the index offset (asymptotics unchanged),
        or None when the family has no closed power-log form."""
        return None

    def _shifted(self, ks):
        return np.asarray(ks, dtype=float) + (self.offset - 1)


@dataclass(frozen=True)
class Constant(SequenceFamily):
    v: float
    offset: int = 1

    def value(self, k):
        return float(self.v)

    def values(self, ks):
        return np.full(np.asarray(ks).shape, float(self.v))

    def term_sum(self):
        return TermSum.constant(self.v)


@dataclass(frozen=True)
class PowerLaw(SequenceFamily):
    """a * k^(-p); negative p gives growth (e.g. lambda_k = k^2 is p = -2)."""

    a: float
    p: float
    offset: int = 1

    def value(self, k):
        return self.a * float(k + self.offset - 1) ** (-self.p)

    def values(self, ks):
        return self.a * self._shifted(ks) ** (-self.p)

    def term_sum(self):
        return TermSum.power(self.a, self.p)


@dataclass(frozen=True)
class LogPower(SequenceFamily):
    """a * k^(-p) * log(k+1)^(-q)."""

    a: float
    p: float
    q: float
    offset: int = 1

    def value(self, k):
        n = float(k + self.offset - 1)
        return self.a * n ** (-self.p) * math.log(n + 1.0) ** (-self.q)

    def values(self, ks):
        n = self._shifted(ks)
        return self.a * n ** (-self.p) * np.log(n + 1.0) ** (-self.q)

    def term_sum(self):
        return TermSum.power(self.a, self.p, self.q)


@dataclass(frozen=True)
class ShiftedPower(SequenceFamily):
    """c + a * k^(-p): a power law around a nonzero asymptote. Needed to
    express weights like beta_k = 1/2 - mu_k in closed form."""

    c: float
    a: float
    p: float
    offset: int = 1

    def value(self, k):
        return self.c + self.a * float(k + self.offset - 1) ** (-self.p)

    def values(self, ks):
        return self.c + self.a * self._shifted(ks) ** (-self.p)

    def term_sum(self):
        return TermSum([_Term(self.c, 0.0, 0.0), _Term(self.a, self.p, 0.0)])


@dataclass(frozen=True)
class LinearRamp(SequenceFamily):
    """start + slope * (k - 1), capped at cap."""

    start: float
    slope: float
    cap: float
    offset: int = 1

    def value(self, k):
        v = self.start + self.slope * float(k + self.offset - 2)
        return min(v, self.cap) if self.slope >= 0 else max(v, self.cap)

    def values(self, ks):
        vals = self.start + self.slope * (self._shifted(ks) - 1.0)
        return np.minimum(vals, self.cap) if self.slope >= 0 else np.maximum(vals, self.cap)

    def term_sum(self):
        # Eventually constant at the cap; the transient does not affect any
        # asymptotic clause, so expose the constant form.
        return TermSum.constant(self.cap)


@dataclass(frozen=True)
class Table(SequenceFamily):
    """Explicit value table; held at the last entry beyond its length."""

    entries: tuple
    offset: int = 1

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(float(v) for v in self.entries))
        if not self.entries:
            raise ValueError("table family requires at least one entry")

    def value(self, k):
        idx = min(max(k + self.offset - 2, 0), len(self.entries) - 1)
        return self.entries[idx]

    def values(self, ks):
        idx = np.minimum(self._shifted(ks).astype(int) - 1, len(self.entries) - 1)
        idx = np.maximum(idx, 0)
        return np.asarray(self.entries, dtype=float)[idx]


# ---------------------------------------------------------------------------
# Schedule set
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScheduleSet:
    r: SequenceFamily
    lam: SequenceFamily
    gamma: SequenceFamily
    alpha: SequenceFamily
    beta: SequenceFamily
    b: SequenceFamily
    c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.c < 2.0:
            raise ValueError(f"certificate constant c must lie in (0, 2), got {self.c}")

    def mu(self, k: int) -> float:
        return 1.0 - self.alpha.value(k) - self.beta.value(k)

    def mu_values(self, ks) -> np.ndarray:
        return 1.0 - self.alpha.values(ks) - self.beta.values(ks)

    def mu_term_sum(self) -> TermSum | None:
        ta, tb = self.alpha.term_sum(), self.beta.term_sum()
        if ta is None or tb is None:
            return None
        return TermSum.constant(1.0) - ta - tb

    def at(self, k: int) -> dict:
        """Validated scalar values used by one iteration."""
        vals = {
            "r": self.r.value(k),
            "lam": self.lam.value(k),
            "gamma": self.gamma.value(k),
            "alpha": self.alpha.value(k),
            "beta": self.beta.value(k),
            "b": self.b.value(k),
        }
        vals["mu"] = 1.0 - vals["alpha"] - vals["beta"]
        tiny = 1e-12
        if vals["r"] <= 0 or vals["lam"] <= 0:
            raise ScheduleOutOfRange(f"r_k and lambda_k must be positive at k={k}")
        if not -tiny <= vals["gamma"] <= 1 + tiny:
            raise ScheduleOutOfRange(f"gamma_k must lie in [0, 1] at k={k}")
        if vals["alpha"] < -tiny or vals["beta"] <= 0 or vals["mu"] < -tiny:
            raise ScheduleOutOfRange(
                f"weights must satisfy alpha_k, mu_k >= 0 and beta_k > 0 at k={k}"
            )
        if not vals["gamma"] - tiny <= vals["b"] <= 1 + tiny or vals["b"] >= 1:
            if not (vals["gamma"] < vals["b"] < 1):
                raise ScheduleOutOfRange(f"need gamma_k < b_k < 1 at k={k}")
        vals["mu"] = max(vals["mu"], 0.0)
        return vals


# ---------------------------------------------------------------------------
# Gap models for the geometric summability conditions
# ---------------------------------------------------------------------------


class GapModel:
    """Closed-form value of the Fitzpatrick-transform gap evaluated at the
    scaled normal direction 2p/lambda. A tag, not a callback, so schedule
    validation runs without constructing a problem."""

    def value(self, p_norm: float, lam) -> np.ndarray:
        raise NotImplementedError

    def term_sum(self, p_norm: float, lam_terms: TermSum) -> TermSum | None:
        """Symbolic gap-as-sequence through lambda_k when representable."""
        return None


@dataclass(frozen=True)
class ZeroGap(GapModel):
    """Gap identically zero (p = 0, or a zero lower bifunction where the
    Fitzpatrick transform collapses onto the support of the domain)."""

    def value(self, p_norm, lam):
        return np.zeros_like(np.asarray(lam, dtype=float))

    def term_sum(self, p_norm, lam_terms):
        return TermSum([])


@dataclass(frozen=True)
class HalfSquaredDistanceGap(GapModel):
    """Gap 0.5 ||2p/lam||^2 = 2 ||p||^2 / lam^2 of the half-squared-distance
    lower family."""

    def value(self, p_norm, lam):
        return 2.0 * p_norm**2 / np.asarray(lam, dtype=float) ** 2

    def term_sum(self, p_norm, lam_terms):
        if len(lam_terms.terms) != 1:
            return None
        t = lam_terms.terms[0]
        return TermSum.power(2.0 * p_norm**2 / t.a**2, -2.0 * t.p, -2.0 * t.q)


@dataclass(frozen=True)
class FixedPointSupportGap(GapModel):
    """Gap (2/lam) * [sigma_C(p) - sigma_Fix(p)] of the fixed-point lower
    family; ``unit_gap`` is the bracketed support difference at the actual
    normal direction p (may be +inf outside the barrier cone)."""

    unit_gap: float

    def value(self, p_norm, lam):
        return (2.0 / np.asarray(lam, dtype=float)) * self.unit_gap

    def term_sum(self, p_norm, lam_terms):
        if math.isinf(self.unit_gap) or len(lam_terms.terms) != 1:
            return None
        t = lam_terms.terms[0]
        return TermSum.power(2.0 * self.unit_gap / t.a, -t.p, -t.q)


@dataclass(frozen=True)
class CustomPowerGap(GapModel):
    """coef * lam^(-power), for hand-supplied closed forms."""

    coef: float
    power: float

    def value(self, p_norm, lam):
        return self.coef * np.asarray(lam, dtype=float) ** (-self.power)

    def term_sum(self, p_norm, lam_terms):
        if len(lam_terms.terms) != 1:
            return None
        t = lam_terms.terms[0]
        return TermSum.power(self.coef / t.a**self.power, t.p * self.power, t.q * self.power)


# ---------------------------------------------------------------------------
# Condition reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionVerdict:
    clause: str
    verdict: str
    note: str = ""


@dataclass(frozen=True)
class ConditionReport:
    theorem: str
    verdicts: tuple
    notes: str = ""

    @property
    def status(self) -> str:
        if any(v.verdict == FAIL for v in self.verdicts):
            return "fail"
        if any(v.verdict == INCONSISTENT for v in self.verdicts):
            return "inconsistent"
        return "pass"

    def lines(self):
        out = [f"theorem {self.theorem}: {self.status}"]
        for v in self.verdicts:
            line = f"  [{v.verdict}] {v.clause}"
            if v.note:
                line += f"  ({v.note})"
            out.append(line)
        if self.notes:
            out.append(f"  note: {self.notes}")
        return out


# -- clause helpers ----------------------------------------------------------


def _series_verdict(family_terms, numeric_values_fn, want_finite, clause):
    """Decide sum-convergence of a nonnegative sequence symbolically when
    possible, else by the partial-sum heuristic."""
    if family_terms is not None:
        kind = family_terms.series()
        finite = kind == "converges"
        ok = finite == want_finite
        return ConditionVerdict(clause, PROVEN if ok else FAIL, "p-series rule")
    ks = np.arange(1, 2 * _SERIES_K + 1)
    vals = numeric_values_fn(ks)
    s_half = float(np.sum(vals[:_SERIES_K]))
    s_full = float(np.sum(vals))
    grow = s_full - s_half
    scale = max(1.0, abs(s_half))
    if grow <= 1e-6 * scale:
        finite = True
    elif grow >= 1e-3 * scale:
        finite = False
    else:
        return ConditionVerdict(clause, FAIL, "partial-sum heuristic inconclusive")
    ok = finite == want_finite
    return ConditionVerdict(clause, NUMERIC_PASS if ok else FAIL, "partial-sum heuristic")


def _limit_verdict(terms, numeric_values_fn, predicate, clause, describe):
    if terms is not None:
        lim = terms.limit()
        ok = predicate(lim)
        return ConditionVerdict(clause, PROVEN if ok else FAIL, f"{describe} limit {lim:g}")
    tail = float(numeric_values_fn(np.array([_HORIZON]))[0])
    ok = predicate(tail)
    return ConditionVerdict(
        clause, NUMERIC_PASS if ok else FAIL, f"{describe} value {tail:g} at k={_HORIZON}"
    )


def _range_verdict(family, lo, hi, clause, horizon=_HORIZON):
    terms = family.term_sum()
    if isinstance(family, Constant):
        ok = lo <= family.v <= hi
        return ConditionVerdict(clause, PROVEN if ok else FAIL, "constant")
    ks = np.arange(1, horizon + 1)
    vals = family.values(ks)
    ok = bool(np.all(vals >= lo - 1e-12) and np.all(vals <= hi + 1e-12))
    if ok and terms is not None:
        lim = terms.limit()
        ok = lo - 1e-12 <= lim <= hi + 1e-12
    return ConditionVerdict(clause, NUMERIC_PASS if ok else FAIL, f"checked k <= {horizon}")


def _monotone_verdict(family, direction, clause):
    terms = family.term_sum()
    ks = np.arange(1, _HORIZON + 1)
    vals = family.values(ks)
    diffs = np.diff(vals)
    ok_prefix = bool(np.all(diffs <= 1e-15)) if direction == "nonincreasing" else bool(
        np.all(diffs >= -1e-15)
    )
    if terms is not None:
        symb = (
            terms.nonincreasing_all_k()
            if direction == "nonincreasing"
            else terms.nondecreasing_all_k()
        )
        if symb and ok_prefix:
            return ConditionVerdict(clause, PROVEN, "term-wise monotone")
    return ConditionVerdict(
        clause, NUMERIC_PASS if ok_prefix else FAIL, f"checked k <= {_HORIZON}"
    )


def _b_window_verdict(s, clause):
    if isinstance(s.gamma, Constant) and isinstance(s.b, Constant):
        ok = s.gamma.v < s.b.v < 1.0
        return ConditionVerdict(clause, PROVEN if ok else FAIL, "constants")
    ks = np.arange(1, _HORIZON + 1)
    g, b = s.gamma.values(ks), s.b.values(ks)
    ok = bool(np.all(g < b) and np.all(b < 1.0))
    return ConditionVerdict(clause, NUMERIC_PASS if ok else FAIL, f"checked k <= {_HORIZON}")


def _h4_terms(s, gap, p_norm):
    tr, tl = s.r.term_sum(), s.lam.term_sum()
    if tr is None or tl is None:
        return None
    gap_terms = gap.term_sum(p_norm, tl)
    if gap_terms is None:
        return None
    return tl * tr * gap_terms


def _h4_values(s, gap, p_norm, ks):
    lam = s.lam.values(ks)
    return s.lam.values(ks) * s.r.values(ks) * gap.value(p_norm, lam)


def _omega_terms(s, gap, p_norm):
    tl, tr = s.lam.term_sum(), s.r.term_sum()
    if tl is None or tr is None:
        return None
    gap_terms = gap.term_sum(p_norm, tl)
    if gap_terms is None:
        return None
    return tl * gap_terms + tr.scale(2.0 * p_norm**2 / s.c)


def _omega_values(s, gap, p_norm, ks):
    lam = s.lam.values(ks)
    return lam * gap.value(p_norm, lam) + (2.0 / s.c) * s.r.values(ks) * p_norm**2


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def omega(s: ScheduleSet, gap: GapModel, p_norm: float, k: int) -> float:
    """The scalar lambda_k * gap(2p/lambda_k) + (2/c) r_k ||p||^2 driving the
    viscosity-regime summability clauses."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if gap is None:
        raise NoClosedForm("omega requires a closed-form gap model")
    return float(_omega_values(s, gap, p_norm, np.array([k]))[0])


def h4_partial_sums(s: ScheduleSet, gap: GapModel, p_norm: float, K: int) -> np.ndarray:
    """Partial sums S_1..S_K of lambda_k r_k * gap(2p/lambda_k)."""
    if K < 1:
        raise ValueError("K must be >= 1")
    if gap is None:
        raise NoClosedForm("partial sums require a closed-form gap model")
    ks = np.arange(1, K + 1)
    return np.cumsum(_h4_values(s, gap, p_norm, ks))


def validate(
    s: ScheduleSet,
    theorem: str,
    gap: GapModel,
    p_norm: float = 1.0,
) -> ConditionReport:
    """Check the convergence-condition clause set of the named regime."""
    theorem = theorem.lower()
    if theorem == "thm1":
        return _validate_thm1(s, gap, p_norm)
    if theorem == "thm2":
        return _validate_thm2(s, gap, p_norm)
    if theorem == "thm3":
        return _validate_thm3(s, gap, p_norm)
    raise UnknownTheorem(f"unknown theorem tag {theorem!r} (expected thm1/thm2/thm3)")


def _c_clause(s):
    return ConditionVerdict("0 < c < 2", PROVEN, f"c = {s.c:g}")


def _weights_degenerate_clauses(s):
    out = []
    for fam, name, target in ((s.alpha, "alpha_k = 0", 0.0), (s.beta, "beta_k = 1", 1.0)):
        if isinstance(fam, Constant) and fam.v == target:
            out.append(ConditionVerdict(name, PROVEN, "constant"))
        else:
            ks = np.arange(1, _HORIZON + 1)
            ok = bool(np.all(np.abs(fam.values(ks) - target) <= 1e-12))
            out.append(
                ConditionVerdict(name, NUMERIC_PASS if ok else FAIL, f"checked k <= {_HORIZON}")
            )
    return out


def _r_window_clause(s):
    """The viscosity regime prints "lim r_k > 0" but its boundedness argument
    uses "lim r_k < 1". A schedule satisfying the printed form while failing
    the proof-used refinement gets flagged inconsistent rather than failed."""
    clause = "0 < liminf r_k <= limsup r_k < 1"
    terms = s.r.term_sum()
    if terms is not None:
        lim = terms.limit()
        proven = True
    else:
        lim = float(s.r.values(np.array([_HORIZON]))[0])
        proven = False
    if 0.0 < lim < 1.0:
        return ConditionVerdict(clause, PROVEN if proven else NUMERIC_PASS, f"limit {lim:g}")
    if lim > 0.0:
        return ConditionVerdict(
            clause,
            INCONSISTENT,
            f"limit {lim:g} satisfies the printed clause lim r_k > 0 but not the "
            "proof-used bound lim r_k < 1",
        )
    return ConditionVerdict(clause, FAIL, f"limit {lim:g}")


def _h4_clause(s, gap, p_norm):
    clause = "(H4): sum lambda_k r_k [gap at 2p/lambda_k] < infinity"
    vals_fn = lambda ks: _h4_values(s, gap, p_norm, ks)
    probe = float(vals_fn(np.array([1]))[0])
    if math.isinf(probe):
        return ConditionVerdict(clause, FAIL, "gap is infinite (outside the barrier cone)")
    return _series_verdict(_h4_terms(s, gap, p_norm), vals_fn, True, clause)


def _validate_thm1(s, gap, p_norm):
    verdicts = [_c_clause(s)]
    verdicts += _weights_degenerate_clauses(s)
    verdicts.append(
        _series_verdict(s.r.term_sum(), s.r.values, False, "sum r_k = infinity")
    )
    sq_terms = None if s.r.term_sum() is None else s.r.term_sum() * s.r.term_sum()
    verdicts.append(
        _series_verdict(sq_terms, lambda ks: s.r.values(ks) ** 2, True, "sum r_k^2 < infinity")
    )
    verdicts.append(_monotone_verdict(s.gamma, "nondecreasing", "gamma_k nondecreasing"))
    verdicts.append(_monotone_verdict(s.r, "nonincreasing", "r_k nonincreasing"))
    verdicts.append(_b_window_verdict(s, "gamma_k < b_k < 1"))
    verdicts.append(_h4_clause(s, gap, p_norm))
    prod = None
    if s.lam.term_sum() is not None and s.r.term_sum() is not None:
        prod = s.lam.term_sum() * s.r.term_sum()
    verdicts.append(
        _limit_verdict(
            prod,
            lambda ks: s.lam.values(ks) * s.r.values(ks),
            lambda L: L > 0,
            "liminf lambda_k r_k > 0",
            "whole-sequence clause;",
        )
    )
    return ConditionReport("thm1", tuple(verdicts))


def _validate_thm2(s, gap, p_norm):
    verdicts = [_c_clause(s)]
    verdicts += _weights_degenerate_clauses(s)
    verdicts.append(_range_verdict(s.gamma, 0.0, 0.5, "gamma_k in [0, 1/2]"))
    verdicts.append(
        _series_verdict(s.r.term_sum(), s.r.values, False, "sum r_k = infinity")
    )
    sq_terms = None if s.r.term_sum() is None else s.r.term_sum() * s.r.term_sum()
    verdicts.append(
        _series_verdict(sq_terms, lambda ks: s.r.values(ks) ** 2, True, "sum r_k^2 < infinity")
    )
    verdicts.append(_b_window_verdict(s, "gamma_k < b_k < 1"))

    lam_terms = s.lam.term_sum()
    lim_terms = None
    if lam_terms is not None:
        gap_terms = gap.term_sum(p_norm, lam_terms)
        if gap_terms is not None:
            lim_terms = lam_terms * gap_terms
    verdicts.append(
        _limit_verdict(
            lim_terms,
            lambda ks: s.lam.values(ks) * gap.value(p_norm, s.lam.values(ks)),
            lambda L: L <= 0,
            "limsup lambda_k [gap at 2p/lambda_k] <= 0",
            "scaled gap;",
        )
    )
    h5_terms = _h4_terms(s, gap, p_norm)
    verdicts.append(
        _limit_verdict(
            h5_terms,
            lambda ks: _h4_values(s, gap, p_norm, ks),
            lambda L: L <= 0,
            "(H5): limsup lambda_k r_k [gap at 2p/lambda_k] <= 0",
            "scaled gap;",
        )
    )
    report = ConditionReport(
        "thm2",
        tuple(verdicts),
        notes="requires the upper bifunction strongly monotone (problem-side, not a schedule clause)",
    )
    return report


def _validate_thm3(s, gap, p_norm):
    verdicts = [_c_clause(s)]
    verdicts.append(_b_window_verdict(s, "gamma_k < b_k < 1"))

    mu_terms = s.mu_term_sum()
    verdicts.append(
        _series_verdict(mu_terms, s.mu_values, False, "sum mu_k = infinity")
    )
    verdicts.append(
        _limit_verdict(mu_terms, s.mu_values, lambda L: L == 0, "lim mu_k = 0", "mu;")
    )

    alpha_terms = s.alpha.term_sum()
    verdicts.append(
        _limit_verdict(
            alpha_terms, s.alpha.values, lambda L: L < 1, "limsup alpha_k < 1", "alpha;"
        )
    )

    lam_terms = s.lam.term_sum()
    verdicts.append(
        _limit_verdict(
            lam_terms, s.lam.values, lambda L: L == math.inf, "lim lambda_k = infinity", "lambda;"
        )
    )

    verdicts.append(_r_window_clause(s))

    omega_terms = _omega_terms(s, gap, p_norm)
    beta_terms = s.beta.term_sum()
    bo_terms = None if (omega_terms is None or beta_terms is None) else beta_terms * omega_terms
    verdicts.append(
        _series_verdict(
            bo_terms,
            lambda ks: s.beta.values(ks) * _omega_values(s, gap, p_norm, ks),
            True,
            "sum beta_k omega_k < infinity",
        )
    )
    ratio_terms = None
    if bo_terms is not None and mu_terms is not None:
        ratio_terms = bo_terms.divide(mu_terms)
    verdicts.append(
        _limit_verdict(
            ratio_terms,
            lambda ks: s.beta.values(ks) * _omega_values(s, gap, p_norm, ks) / s.mu_values(ks),
            lambda L: L == 0,
            "lim (beta_k/mu_k) omega_k = 0",
            "ratio;",
        )
    )

    # Printed clause "lim beta_k = 0" is jointly unsatisfiable with mu_k -> 0
    # and limsup alpha_k < 1 under alpha+beta+mu = 1; flag it instead of
    # enforcing it (the proof never uses it).
    verdicts.append(
        ConditionVerdict(
            "lim beta_k = 0",
            INCONSISTENT,
            "unsatisfiable together with lim mu_k = 0 and limsup alpha_k < 1; not enforced",
        )
    )
    return ConditionReport("thm3", tuple(verdicts))


# ---------------------------------------------------------------------------
# Shipped schedule presets
# ---------------------------------------------------------------------------


def preset(name: str) -> ScheduleSet:
    """Default schedules for the three convergence regimes."""
    name = name.lower()
    if name == "thm1":
        return ScheduleSet(
            r=PowerLaw(1.0, 0.9),
            lam=PowerLaw(1.0, -2.0),
            gamma=Constant(0.2),
            alpha=Constant(0.0),
            beta=Constant(1.0),
            b=Constant(0.6),
            c=1.0,
        )
    if name == "thm2":
        return ScheduleSet(
            r=PowerLaw(1.0, 0.9),
            lam=PowerLaw(1.0, -2.0),
            gamma=Constant(0.3),
            alpha=Constant(0.0),
            beta=Constant(1.0),
            b=Constant(0.6),
            c=1.0,
        )
    if name == "thm3":
        # Index offset keeps beta_k positive from k = 1 on; asymptotics match
        # the documented family (mu_k ~ k^-0.7, beta_k = 1/2 - mu_k).
        return ScheduleSet(
            r=Constant(1.0),
            lam=PowerLaw(1.0, -1.0),
            gamma=Constant(0.2),
            alpha=Constant(0.5),
            beta=ShiftedPower(0.5, -1.0, 0.7, offset=4),
            b=Constant(0.6),
            c=1.0,
        )
    raise UnknownTheorem(f"unknown preset {name!r}")
