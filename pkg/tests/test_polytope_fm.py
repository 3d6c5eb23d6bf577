import itertools

import numpy as np
import pytest

from wiretap_regions.errors import (
    DimensionTooLarge,
    DuplicateSlackName,
    UnboundedRegion,
    ZeroCoefficient,
)
from wiretap_regions.polytope_fm import (
    EQ,
    IneqSystem,
    LinIneq,
    apply_rate_transfer,
    fm_eliminate,
    max_violation,
    region_equal,
    substitute_equality,
    support_value,
    vertices,
)


def num_sys(varnames, rows):
    return IneqSystem.of(varnames, [LinIneq.of(c, float(r)) for c, r in rows])


def grid_membership(sys, varnames, pts):
    """Oracle: brute membership test of points against a numeric system plus
    the nonnegative orthant."""
    out = []
    for p in pts:
        ok = all(x >= -1e-12 for x in p)
        for q in sys.ineqs:
            lhs = sum(float(c) * p[varnames.index(v)] for v, c in q.coeffs)
            ok = ok and lhs <= float(q.rhs) + 1e-9
        out.append(ok)
    return out


def test_fm_projection_matches_sampling_oracle():
    # {x+y <= 2, x-y <= 1} in the orthant; eliminate x
    s = num_sys(("x", "y"), [({"x": 1, "y": 1}, 2), ({"x": 1, "y": -1}, 1)])
    proj = fm_eliminate(s, "x")
    ys = np.linspace(-0.5, 2.5, 200)
    got = grid_membership(proj, ("y",), [(y,) for y in ys])
    # oracle: y is in the projection iff some x >= 0 lifts it
    expect = []
    for y in ys:
        feasible = y >= 0 and min(2 - y, 1 + y) >= 0
        expect.append(bool(feasible))
    assert got == expect


def test_fm_absent_variable_noop():
    s = num_sys(("x", "y"), [({"x": 1}, 1)])
    assert fm_eliminate(s, "w") is s


def test_fm_soundness_random_systems():
    rng = np.random.default_rng(4)
    for _ in range(10):
        d = int(rng.integers(2, 5))
        names = tuple(f"v{i}" for i in range(d))
        rows = []
        for _ in range(6):
            coeffs = {names[i]: float(np.round(rng.uniform(-2, 2), 3)) for i in range(d)}
            rows.append((coeffs, float(rng.uniform(0.5, 3.0))))
        s = num_sys(names, rows)
        target = names[-1]
        proj = fm_eliminate(s, target)
        for _ in range(100):
            p = rng.uniform(0, 2, size=d - 1)
            in_proj = all(
                sum(float(c) * p[list(proj.vars).index(v)] for v, c in q.coeffs)
                <= float(q.rhs) + 1e-9 for q in proj.ineqs)
            # 1-D lift feasibility: intersect the interval constraints on target
            lo, hi = 0.0, np.inf
            feasible = True
            for q in s.ineqs:
                a = float(q.coeff(target))
                rest = sum(float(c) * p[names.index(v)] for v, c in q.coeffs if v != target)
                slack = float(q.rhs) - rest
                if a > 0:
                    hi = min(hi, slack / a)
                elif a < 0:
                    lo = max(lo, slack / a)
                elif slack < -1e-9:
                    feasible = False
            liftable = feasible and lo <= hi + 1e-9
            assert in_proj == liftable


def test_substitute_equality_simple():
    s = num_sys(("x", "y"), [({"x": 1, "y": 1}, 3)])
    out = substitute_equality(s, LinIneq.of({"x": 1}, 1.0, rel=EQ))
    assert out.vars == ("y",)
    [q] = [q for q in out.ineqs if q.coeffs]
    assert q.coeff("y") == 1 and float(q.rhs) == 2.0


def test_substitute_equality_noop_when_var_absent():
    s = num_sys(("y",), [({"y": 1}, 3)])
    out = substitute_equality(s, LinIneq.of({"x": 1}, 1.0, rel=EQ), "x")
    assert out is s


def test_substitute_zero_coefficient():
    with pytest.raises(ZeroCoefficient):
        substitute_equality(num_sys(("x",), [({"x": 1}, 1)]),
                            LinIneq.of({"x": 1}, 1.0, rel=EQ), "y")


def test_transfer_zero_is_contained():
    # after a transfer the old region (slack = 0) stays feasible
    s = num_sys(("Rs", "Rp"), [({"Rs": 1}, 1.0), ({"Rp": 1, "Rs": 1}, 1.5)])
    t = apply_rate_transfer(s, [("Rs", "Rp")], ["t0"])
    proj = fm_eliminate(t, "t0")
    for p in vertices(s).vertices:
        assert max_violation(proj, p, var_order=s.vars) <= 1e-9


def test_transfer_fresh_destination():
    # {Rs <= c} with a transfer into a new variable: membership oracle on a grid
    s = num_sys(("Rs",), [({"Rs": 1}, 1.0)])
    t = apply_rate_transfer(s, [("Rs", "Rp")], ["t0"])
    proj = fm_eliminate(t, "t0")
    assert set(proj.vars) == {"Rs", "Rp"}
    for rs in np.linspace(0, 1.4, 15):
        for rp in np.linspace(0, 1.4, 15):
            lifted = rp + rs <= 1.0 + 1e-12
            p = [rs if v == "Rs" else rp for v in proj.vars]
            assert (max_violation(proj, p) <= 1e-9) == lifted


def test_transfer_duplicate_slack():
    s = num_sys(("Rs", "Rp"), [({"Rs": 1}, 1)])
    with pytest.raises(DuplicateSlackName):
        apply_rate_transfer(s, [("Rs", "Rp")], ["Rs"])


def test_vertices_unit_square():
    s = num_sys(("x", "y"), [({"x": 1}, 1), ({"y": 1}, 1)])
    got = sorted(map(tuple, np.round(vertices(s).vertices, 9)))
    assert got == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_vertices_simplex():
    s = num_sys(("x", "y", "z"), [({"x": 1, "y": 1, "z": 1}, 1)])
    assert vertices(s).vertices.shape[0] == 4


def exact_vertex_oracle(rows, d):
    """Independent exact enumeration with Fraction arithmetic."""
    import fractions
    A = [[fractions.Fraction(r[0].get(i, 0)) for i in range(d)] for r in rows]
    b = [fractions.Fraction(r[1]) for r in rows]
    for i in range(d):
        A.append([fractions.Fraction(-int(i == j)) for j in range(d)])
        b.append(fractions.Fraction(0))
    verts = set()
    for idx in itertools.combinations(range(len(A)), d):
        M = [[A[i][j] for j in range(d)] for i in idx]
        rhs = [b[i] for i in idx]
        # Gaussian elimination over Fractions
        M = [row[:] for row in M]
        rhs = rhs[:]
        sing = False
        for col in range(d):
            piv = next((r for r in range(col, d) if M[r][col] != 0), None)
            if piv is None:
                sing = True
                break
            M[col], M[piv] = M[piv], M[col]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
            inv = M[col][col]
            M[col] = [x / inv for x in M[col]]
            rhs[col] = rhs[col] / inv
            for r in range(d):
                if r != col and M[r][col] != 0:
                    f = M[r][col]
                    M[r] = [x - f * y for x, y in zip(M[r], M[col])]
                    rhs[r] = rhs[r] - f * rhs[col]
        if sing:
            continue
        x = rhs
        if all(sum(A[i][j] * x[j] for j in range(d)) <= b[i] for i in range(len(A))):
            verts.add(tuple(float(v) for v in x))
    return sorted(verts)


def test_vertices_against_exact_oracle():
    # a five-bound rate system with hand-picked constants
    consts = {"rs2": 0.2, "rs12": 0.55, "rs2p2": 0.3, "rs12p2": 0.65, "total": 0.8}
    rows = [
        ({3: 1}, consts["rs2"]),
        ({1: 1, 3: 1}, consts["rs12"]),
        ({2: 1, 3: 1}, consts["rs2p2"]),
        ({1: 1, 2: 1, 3: 1}, consts["rs12p2"]),
        ({0: 1, 1: 1, 2: 1, 3: 1}, consts["total"]),
    ]
    oracle = exact_vertex_oracle(rows, 4)
    names = ("Rp1", "Rs1", "Rp2", "Rs2")
    sys = num_sys(names, [({names[i]: c for i, c in r.items()}, v) for r, v in rows])
    got = sorted(map(tuple, np.round(vertices(sys).vertices, 9)))
    oracle_rounded = sorted(set(tuple(np.round(p, 9)) for p in oracle))
    assert got == oracle_rounded


def test_vertices_unbounded_raises():
    s = num_sys(("x", "y"), [({"x": 1}, 1)])
    with pytest.raises(UnboundedRegion):
        vertices(s)


def test_vertices_dimension_cap():
    names = tuple(f"v{i}" for i in range(7))
    s = num_sys(names, [({n: 1 for n in names}, 1)])
    with pytest.raises(DimensionTooLarge):
        vertices(s)


def test_region_equal_cases():
    sq = num_sys(("x", "y"), [({"x": 1}, 1), ({"y": 1}, 1)])
    assert region_equal(sq, sq)
    redundant = num_sys(("x", "y"), [({"x": 1}, 1), ({"y": 1}, 1), ({"x": 1, "y": 1}, 5)])
    assert region_equal(sq, redundant)
    tri = num_sys(("x", "y"), [({"x": 1, "y": 1}, 1)])
    assert not region_equal(sq, tri)


def test_support_value_and_infeasible():
    sq = num_sys(("x", "y"), [({"x": 1}, 1), ({"y": 1}, 2)])
    assert support_value(sq, {"x": 1, "y": 1}) == pytest.approx(3.0)
    empty = num_sys(("x",), [({"x": 1}, -1)])
    assert support_value(empty, {"x": 1}) == float("-inf")
    unb = num_sys(("x", "y"), [({"x": 1}, 1)])
    assert support_value(unb, {"y": 1}) is None


def test_elimination_order_invariance():
    # projecting out two variables in either order yields the same region
    rng = np.random.default_rng(19)
    for _ in range(5):
        names = ("a", "b", "c", "d")
        rows = []
        for _ in range(7):
            coeffs = {n: float(np.round(rng.uniform(-1.5, 2.0), 3)) for n in names}
            rows.append((coeffs, float(rng.uniform(1.0, 3.0))))
        s = num_sys(names, rows)
        p1 = fm_eliminate(fm_eliminate(s, "c"), "d")
        p2 = fm_eliminate(fm_eliminate(s, "d"), "c")
        assert region_equal(p1, p2, tol=1e-9)


def test_transfer_monotone_on_instantiations():
    rng = np.random.default_rng(8)
    for _ in range(5):
        c = np.sort(rng.uniform(0.2, 1.0, size=3))
        s = num_sys(("Rp", "Rs"), [({"Rs": 1}, c[0]), ({"Rp": 1, "Rs": 1}, c[2])])
        t = fm_eliminate(apply_rate_transfer(s, [("Rs", "Rp")], ["t0"]), "t0")
        for p in vertices(s).vertices:
            assert max_violation(t, p, var_order=s.vars) <= 1e-9
