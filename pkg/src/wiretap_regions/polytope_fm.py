"""Linear inequality systems over rate variables and Fourier-Motzkin projection.

Systems live in the nonnegative orthant: every rate variable carries an
implicit ``v >= 0`` constraint (the "ambient" bounds).  Coefficients are exact
rationals; right-hand sides are either :class:`~.entropy_algebra.InfoExpr`
values (symbolic systems) or floats (numeric systems).  Elimination doubles
coefficients, so everything on the left stays in ``Fraction`` arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from .entropy_algebra import InfoExpr
from .errors import (
    DimensionTooLarge,
    DuplicateSlackName,
    UnboundedRegion,
    ZeroCoefficient,
)

LE = "<="
EQ = "=="

VERTEX_TOL = 1e-9


def _as_rhs_zero(template):
    return InfoExpr() if isinstance(template, InfoExpr) else 0.0


def _rhs_scale(rhs, k: Fraction):
    if isinstance(rhs, InfoExpr):
        return rhs * k
    return float(rhs) * float(k)


def _rhs_add(r1, r2):
    if isinstance(r1, InfoExpr) or isinstance(r2, InfoExpr):
        return r1 + r2
    return float(r1) + float(r2)


def _rhs_is_zero(rhs) -> bool:
    if isinstance(rhs, InfoExpr):
        return rhs.is_zero()
    return rhs == 0.0


@dataclass(frozen=True)
class LinIneq:
    """``sum(coeffs[v] * v) REL rhs`` with REL one of ``<=`` or ``==``."""

    coeffs: tuple[tuple[str, Fraction], ...]
    rhs: object
    rel: str = LE
    label: str | None = None

    @staticmethod
    def of(coeffs: dict, rhs, rel: str = LE, label: str | None = None) -> "LinIneq":
        items = tuple(sorted((v, Fraction(c)) for v, c in coeffs.items() if c != 0))
        return LinIneq(items, rhs, rel, label)

    def coeff(self, var: str) -> Fraction:
        for v, c in self.coeffs:
            if v == var:
                return c
        return Fraction(0)

    def coeff_dict(self) -> dict[str, Fraction]:
        return dict(self.coeffs)

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def scaled(self, k: Fraction) -> "LinIneq":
        k = Fraction(k)
        if k <= 0 and self.rel == LE:
            raise ValueError("inequalities may only be scaled by positive rationals")
        return LinIneq.of({v: c * k for v, c in self.coeffs}, _rhs_scale(self.rhs, k),
                          self.rel, self.label)

    def plus(self, other: "LinIneq") -> "LinIneq":
        coeffs = self.coeff_dict()
        for v, c in other.coeffs:
            coeffs[v] = coeffs.get(v, Fraction(0)) + c
        return LinIneq.of(coeffs, _rhs_add(self.rhs, other.rhs), LE, None)

    def canonical(self) -> "LinIneq":
        """Positive content normalization of the coefficient vector.

        Equalities additionally get their leading coefficient made positive
        (negative scaling is sign-preserving for ``==``).
        """
        if not self.coeffs:
            return self
        nums = [abs(c.numerator) for _, c in self.coeffs]
        dens = [c.denominator for _, c in self.coeffs]
        g = reduce(math.gcd, nums)
        l = reduce(math.lcm, dens)
        scale = Fraction(l, g) if g else Fraction(1)
        if self.rel == EQ and self.coeffs[0][1] * scale < 0:
            scale = -scale
            return LinIneq.of({v: c * scale for v, c in self.coeffs},
                              _rhs_scale(self.rhs, scale), self.rel, self.label)
        return self.scaled(scale) if scale != 1 else self

    def rhs_key(self):
        return self.rhs.key() if isinstance(self.rhs, InfoExpr) else float(self.rhs)

    def key(self):
        return (self.rel, self.coeffs, self.rhs_key())

    def __repr__(self):
        if self.coeffs:
            lhs = " + ".join(f"{c}*{v}" if c != 1 else v for v, c in self.coeffs)
        else:
            lhs = "0"
        return f"{lhs} {self.rel} {self.rhs!r}"


@dataclass(frozen=True)
class IneqSystem:
    """Constraint set over an ordered tuple of nonnegative rate variables."""

    vars: tuple[str, ...]
    ineqs: tuple[LinIneq, ...]

    def __post_init__(self):
        known = set(self.vars)
        for q in self.ineqs:
            for v in q.variables:
                if v not in known:
                    raise ZeroCoefficient(f"constraint mentions unknown variable {v!r}")

    @staticmethod
    def of(vars, ineqs) -> "IneqSystem":
        return IneqSystem(tuple(vars), tuple(ineqs))

    @property
    def equalities(self) -> tuple[LinIneq, ...]:
        return tuple(q for q in self.ineqs if q.rel == EQ)

    @property
    def inequalities(self) -> tuple[LinIneq, ...]:
        return tuple(q for q in self.ineqs if q.rel == LE)

    def rhs_zero(self):
        for q in self.ineqs:
            return _as_rhs_zero(q.rhs)
        return 0.0

    def with_ineqs(self, ineqs) -> "IneqSystem":
        return IneqSystem(self.vars, tuple(ineqs))


def _dedup(ineqs) -> list[LinIneq]:
    seen, out = set(), []
    for q in ineqs:
        k = q.canonical().key()
        if k not in seen:
            seen.add(k)
            out.append(q)
    return out


def _ambient_implied(q: LinIneq) -> bool:
    """True when the row follows from the nonnegative orthant alone."""
    if q.rel != LE:
        return False
    if not q.coeffs:
        if isinstance(q.rhs, InfoExpr):
            return q.rhs.is_zero()
        return q.rhs >= 0.0
    if all(c <= 0 for _, c in q.coeffs):
        if isinstance(q.rhs, InfoExpr):
            return q.rhs.is_zero()
        return q.rhs >= 0.0
    return False


def substitute_equality(sys: IneqSystem, eq: LinIneq, var: str | None = None) -> IneqSystem:
    """Remove ``var`` from the system using the equality ``eq``.

    The equality is solved for ``var`` and substituted into every constraint;
    the ambient bound ``var >= 0`` becomes an explicit constraint on the
    substituted expression.  When the equality involves a single variable,
    ``var`` may be omitted.
    """
    if eq.rel != EQ:
        raise ZeroCoefficient("substitution requires an equality")
    if var is None:
        if len(eq.coeffs) != 1:
            raise ZeroCoefficient("equality has several variables; name the one to remove")
        var = eq.coeffs[0][0]
    c = eq.coeff(var)
    if c == 0:
        raise ZeroCoefficient(f"equality has zero coefficient on {var!r}")
    if var not in sys.vars:
        return sys
    # var = (eq.rhs - rest) / c
    rest = {v: k for v, k in eq.coeffs if v != var}

    def replace(q: LinIneq) -> LinIneq | None:
        a = q.coeff(var)
        if a == 0:
            return q
        coeffs = {v: k for v, k in q.coeffs if v != var}
        for v, k in rest.items():
            coeffs[v] = coeffs.get(v, Fraction(0)) - k * a / c
        rhs = _rhs_add(q.rhs, _rhs_scale(eq.rhs, -a / c))
        out = LinIneq.of(coeffs, rhs, q.rel, q.label)
        if out.rel == EQ and not out.coeffs and _rhs_is_zero(out.rhs):
            return None  # the consumed equality itself
        return out

    new = [r for r in (replace(q) for q in sys.ineqs) if r is not None]
    # ambient var >= 0  =>  -(substituted expression) <= 0
    ambient = replace(LinIneq.of({var: Fraction(-1)}, _as_rhs_zero(sys.rhs_zero())))
    if ambient is not None and not _ambient_implied(ambient):
        new.append(ambient)
    return IneqSystem(tuple(v for v in sys.vars if v != var), tuple(_dedup(new)))


def fm_eliminate(sys: IneqSystem, var: str) -> IneqSystem:
    """Project the system onto the remaining variables.

    If an equality mentions ``var`` it is substituted first (consuming it);
    otherwise all positive/negative inequality combinations are formed, with
    the ambient ``var >= 0`` acting as one lower bound.  Rows implied by the
    nonnegative orthant and exact duplicates are removed; anything else,
    including pure sign rows with no variables, is kept.
    """
    if var not in sys.vars:
        return sys
    for eq in sys.equalities:
        if eq.coeff(var) != 0:
            return substitute_equality(sys, eq, var)
    zero_rhs = sys.rhs_zero()
    uppers, lowers, rest = [], [], []
    for q in sys.ineqs:
        a = q.coeff(var)
        if a > 0:
            uppers.append(q)
        elif a < 0:
            lowers.append(q)
        else:
            rest.append(q)
    # ambient lower bound 0 <= var
    lowers.append(LinIneq.of({var: Fraction(-1)}, _as_rhs_zero(zero_rhs)))
    out = list(rest)
    for lo, up in itertools.product(lowers, uppers):
        combo = lo.scaled(Fraction(1) / -lo.coeff(var)).plus(
            up.scaled(Fraction(1) / up.coeff(var)))
        if not _ambient_implied(combo):
            out.append(combo)
    return IneqSystem(tuple(v for v in sys.vars if v != var), tuple(_dedup(out)))


def apply_rate_transfer(sys: IneqSystem, transfers, slack_names=None) -> IneqSystem:
    """Augment the system with rate-transfer slack variables.

    Each transfer ``(source, dest)`` introduces a fresh nonnegative slack
    ``t``: the achievable tuple ``(source, dest)`` is rewritten to
    ``(source + t, dest - t)`` in old coordinates, i.e. the new region point
    gave up ``t`` of ``source`` in favor of ``dest``.  Nonnegativity of the
    old destination rate becomes ``sum of incoming slacks <= dest``; the bound
    of the slack total by the old source rate is the ambient nonnegativity of
    the new source.  Destinations absent from the system are treated as zero
    in old coordinates (they enter as fresh variables equal to their incoming
    slack).  The result is ready for :func:`fm_eliminate` of the slacks.
    """
    transfers = list(transfers)
    if slack_names is None:
        slack_names = [f"x{i}_{s}_{d}" for i, (s, d) in enumerate(transfers)]
    if len(slack_names) != len(transfers):
        raise DuplicateSlackName("one slack name per transfer required")
    taken = set(sys.vars)
    for name in slack_names:
        if name in taken:
            raise DuplicateSlackName(f"slack name {name!r} already in use")
        taken.add(name)
    for s, d in transfers:
        if s == d:
            raise DuplicateSlackName(f"transfer {s!r} -> {d!r} is not a pair of distinct rates")

    gains = {}   # var -> slacks it receives (dest side)
    losses = {}  # var -> slacks it gives (source side)
    new_vars = list(sys.vars)
    for (s, d), t in zip(transfers, slack_names):
        losses.setdefault(s, []).append(t)
        gains.setdefault(d, []).append(t)
        if d not in new_vars:
            new_vars.append(d)
    new_vars.extend(slack_names)
    zero = sys.rhs_zero()

    def rewrite(q: LinIneq) -> LinIneq:
        coeffs = q.coeff_dict()
        for v, a in q.coeffs:
            for t in losses.get(v, ()):
                coeffs[t] = coeffs.get(t, Fraction(0)) + a
            for t in gains.get(v, ()):
                coeffs[t] = coeffs.get(t, Fraction(0)) - a
        return LinIneq.of(coeffs, q.rhs, q.rel, q.label)

    out = [rewrite(q) for q in sys.ineqs]
    for dest, ts in gains.items():
        row = {t: Fraction(1) for t in ts}
        row[dest] = Fraction(-1)
        # old dest >= 0 when dest existed; otherwise dest is exactly its inflow
        rel = LE if dest in sys.vars else EQ
        out.append(LinIneq.of(row, _as_rhs_zero(zero), rel=rel))
    return IneqSystem(tuple(new_vars), tuple(_dedup(out)))


# --- numeric view -------------------------------------------------------------


@dataclass(frozen=True)
class VPolytope:
    """Vertex list of a bounded numeric system inside the orthant."""

    vars: tuple[str, ...]
    vertices: np.ndarray = field(repr=False)
    dim: int = 0

    def __post_init__(self):
        arr = np.asarray(self.vertices, dtype=float).reshape(-1, len(self.vars))
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "vertices", arr)
        object.__setattr__(self, "dim", len(self.vars))


def _numeric_rows(sys: IneqSystem, allow_eq: bool = False):
    d = len(sys.vars)
    idx = {v: i for i, v in enumerate(sys.vars)}
    ub, bub, eq, beq = [], [], [], []
    for q in sys.ineqs:
        if isinstance(q.rhs, InfoExpr):
            raise ZeroCoefficient("numeric operation on a symbolic system; instantiate first")
        row = np.zeros(d)
        for v, c in q.coeffs:
            row[idx[v]] = float(c)
        if q.rel == LE:
            ub.append(row)
            bub.append(float(q.rhs))
        elif allow_eq:
            eq.append(row)
            beq.append(float(q.rhs))
        else:
            raise ZeroCoefficient("numeric vertex enumeration expects pure <= systems")
    A = np.array(ub).reshape(-1, d)
    if allow_eq:
        return A, np.array(bub), np.array(eq).reshape(-1, d), np.array(beq)
    return A, np.array(bub, dtype=float)


def _feasible(A: np.ndarray, b: np.ndarray, d: int) -> bool:
    from scipy.optimize import linprog

    if A.shape[0] == 0:
        return True
    res = linprog(c=np.zeros(d), A_ub=A, b_ub=b, bounds=[(0, None)] * d, method="highs")
    return res.status == 0


def _check_bounded(A: np.ndarray, d: int) -> None:
    """Raise UnboundedRegion when a nonzero recession direction d>=0 exists."""
    from scipy.optimize import linprog

    if A.shape[0] == 0:
        raise UnboundedRegion("no constraints besides the orthant")
    res = linprog(c=np.zeros(d), A_ub=A, b_ub=np.zeros(A.shape[0]),
                  A_eq=np.ones((1, d)), b_eq=[1.0], bounds=[(0, None)] * d,
                  method="highs")
    if res.status == 0:
        raise UnboundedRegion("system has a recession direction inside the orthant")


def vertices(sys: IneqSystem, tol: float = VERTEX_TOL) -> VPolytope:
    """Exact vertex enumeration by active-set basis enumeration.

    All ``d``-subsets of the constraint rows (explicit plus the orthant walls)
    are solved and filtered by feasibility; vertices are deduplicated at
    ``1e-9``.  Requires a bounded region and dimension at most 6.
    """
    d = len(sys.vars)
    if d > 6:
        raise DimensionTooLarge(f"vertex enumeration supports dimension <= 6, got {d}")
    A_exp, b_exp = _numeric_rows(sys)
    if not _feasible(A_exp, b_exp, d):
        return VPolytope(sys.vars, np.empty((0, d)))
    _check_bounded(A_exp, d)
    A = np.vstack([A_exp, -np.eye(d)])
    b = np.concatenate([b_exp, np.zeros(d)])
    m = A.shape[0]
    combos = np.array(list(itertools.combinations(range(m), d)), dtype=int)
    mats = A[combos]                       # (n, d, d)
    rhs = b[combos]                        # (n, d)
    dets = np.linalg.det(mats)
    scale = np.abs(mats).max(axis=(1, 2)) + 1.0
    ok = np.abs(dets) > 1e-12 * scale**d
    if not ok.any():
        return VPolytope(sys.vars, np.empty((0, d)))
    sols = np.linalg.solve(mats[ok], rhs[ok][..., None])[..., 0]   # (k, d)
    feas = (sols @ A.T <= b[None, :] + tol).all(axis=1)
    pts = sols[feas]
    if pts.shape[0] == 0:
        return VPolytope(sys.vars, np.empty((0, d)))
    # dedup at tolerance: sort lexicographically, then single pass
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    keep = [0]
    for i in range(1, pts.shape[0]):
        if np.abs(pts[i] - pts[keep[-1]]).max() > tol:
            keep.append(i)
    # lexsort adjacency can split near-duplicates; final O(n^2) sweep on survivors
    pts = pts[keep]
    uniq = []
    for p in pts:
        if not any(np.abs(p - q).max() <= tol for q in uniq):
            uniq.append(p)
    return VPolytope(sys.vars, np.array(uniq))


def max_violation(sys: IneqSystem, point, var_order=None) -> float:
    """Largest amount by which ``point`` violates the system (<=0 means inside)."""
    A, b = _numeric_rows(sys)
    x = np.asarray(point, dtype=float)
    if var_order is not None and tuple(var_order) != sys.vars:
        pos = {v: i for i, v in enumerate(var_order)}
        x = x[[pos[v] for v in sys.vars]]
    worst = float((A @ x - b).max()) if A.shape[0] else 0.0
    return max(worst, float((-x).max()) if x.size else 0.0)


def region_equal(a: IneqSystem, b: IneqSystem, tol: float = VERTEX_TOL) -> bool:
    """True iff the two numeric regions coincide (mutual vertex containment)."""
    va = vertices(a, tol)
    vb = vertices(b, tol)
    order = va.vars
    for p in va.vertices:
        if max_violation(b, p, var_order=order) > tol:
            return False
    for p in vb.vertices:
        if max_violation(a, p, var_order=vb.vars) > tol:
            return False
    return True


def support_value(sys: IneqSystem, objective: dict[str, float]):
    """``max objective . x`` over the numeric system.

    Returns ``-inf`` for an empty region and ``None`` when the objective is
    unbounded above.  Unlike :func:`vertices` this accepts equality rows.
    """
    from scipy.optimize import linprog

    A, b, A_eq, b_eq = _numeric_rows(sys, allow_eq=True)
    d = len(sys.vars)
    c = np.zeros(d)
    for v, k in objective.items():
        c[sys.vars.index(v)] = k
    res = linprog(c=-c, A_ub=A if A.size else None, b_ub=b if A.size else None,
                  A_eq=A_eq if A_eq.size else None, b_eq=b_eq if A_eq.size else None,
                  bounds=[(0, None)] * d, method="highs")
    if res.status == 2:
        return float("-inf")
    if res.status == 3:
        return None
    if res.status != 0:
        raise UnboundedRegion(f"LP failed with status {res.status}")
    return float(-res.fun)


def instantiate(sys: IneqSystem, table, sym_values=None) -> IneqSystem:
    """Replace symbolic right-hand sides by their numeric values on a table."""
    out = []
    for q in sys.ineqs:
        rhs = q.rhs.evaluate(table, sym_values) if isinstance(q.rhs, InfoExpr) else float(q.rhs)
        out.append(LinIneq(q.coeffs, rhs, q.rel, q.label))
    return sys.with_ineqs(out)
