"""Gaussian vector channel instances and closed-form log-det rate regions.

Channels are ``Y1 = X + N1``, ``Y2 = X + N2``, ``Z = X + NZ`` with an input
covariance cap ``E[X X'] <= S``; degradedness is the noise-covariance order
``0 < S1 <= S2 <= SZ`` (or, for channels given by gain matrices with unit
noise, the contraction test on the gain quotients).  All bounds are halves of
natural-log determinant ratios, in nats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BudgetZero,
    CapExceeded,
    NotDegraded,
    NotPSD,
    SingularMatrix,
    UnknownCorollary,
)
from .polytope_fm import IneqSystem, LinIneq, vertices
from .regions_discrete import RATES, SweepResult, hull_of

ORDER_TOL = 1e-10
SYM_TOL = 1e-12


def _sym(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.shape[0] != a.shape[1]:
        raise NotPSD(f"matrix of shape {a.shape} is not square")
    if np.abs(a - a.T).max() > SYM_TOL:
        raise NotPSD(f"symmetry residual {np.abs(a - a.T).max():.2e} exceeds {SYM_TOL}")
    return 0.5 * (a + a.T)


def check_psd(m, name: str = "matrix") -> np.ndarray:
    """Validate positive semidefiniteness with the relative eigenvalue
    tolerance -1e-10 * trace/d, clipping tiny negatives to zero."""
    a = _sym(m)
    w, v = np.linalg.eigh(a)
    d = a.shape[0]
    floor = -1e-10 * max(np.trace(a) / d, 1.0)
    if w.min() < floor:
        raise NotPSD(f"{name} has eigenvalue {w.min():.3e} below tolerance {floor:.1e}")
    w = np.clip(w, 0.0, None)
    return (v * w) @ v.T


def check_pd(m, name: str = "matrix") -> np.ndarray:
    a = _sym(m)
    w = np.linalg.eigvalsh(a)
    if w.min() <= 0:
        raise NotPSD(f"{name} must be positive definite; min eigenvalue {w.min():.3e}")
    return a


def psd_leq(a, b, tol: float = ORDER_TOL) -> bool:
    """a <= b in the semidefinite order, within an absolute eigenvalue slack."""
    w = np.linalg.eigvalsh(_sym(b) - _sym(a))
    return bool(w.min() >= -tol)


def logdet(m) -> float:
    """log det of a positive definite matrix via Cholesky; raises on failure."""
    try:
        chol = np.linalg.cholesky(_sym(m))
    except np.linalg.LinAlgError:
        raise SingularMatrix("nonpositive pivot in Cholesky factorization") from None
    return float(2.0 * np.log(np.diag(chol)).sum())


@dataclass(frozen=True)
class GaussChannel:
    """Input covariance cap and the three noise covariances (all d x d)."""

    S: np.ndarray
    Sigma1: np.ndarray
    Sigma2: np.ndarray
    SigmaZ: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "S", check_pd(self.S, "S"))
        object.__setattr__(self, "Sigma1", check_pd(self.Sigma1, "Sigma1"))
        object.__setattr__(self, "Sigma2", check_pd(self.Sigma2, "Sigma2"))
        object.__setattr__(self, "SigmaZ", check_pd(self.SigmaZ, "SigmaZ"))
        d = self.S.shape[0]
        for m in (self.Sigma1, self.Sigma2, self.SigmaZ):
            if m.shape != (d, d):
                raise NotPSD("all channel matrices must share one dimension")

    @property
    def dim(self) -> int:
        return self.S.shape[0]


@dataclass(frozen=True)
class HGaussChannel:
    """Gain-matrix channel form with identity noise at every receiver."""

    H1: np.ndarray
    H2: np.ndarray
    HZ: np.ndarray

    def __post_init__(self):
        h1 = np.atleast_2d(np.asarray(self.H1, dtype=float))
        h2 = np.atleast_2d(np.asarray(self.H2, dtype=float))
        hz = np.atleast_2d(np.asarray(self.HZ, dtype=float))
        if not (h1.shape[1] == h2.shape[1] == hz.shape[1]):
            raise NotPSD("gain matrices must agree on the input dimension")
        object.__setattr__(self, "H1", h1)
        object.__setattr__(self, "H2", h2)
        object.__setattr__(self, "HZ", hz)


@dataclass(frozen=True)
class CovSplit:
    """Covariance allocation: either a single K <= S or a triple summing under S."""

    K: np.ndarray | None = None
    K0: np.ndarray | None = None
    K1: np.ndarray | None = None
    K2: np.ndarray | None = None

    def __post_init__(self):
        single = self.K is not None
        triple = all(m is not None for m in (self.K0, self.K1, self.K2))
        if single == triple:
            raise NotPSD("provide either K or the triple (K0, K1, K2)")
        if single:
            object.__setattr__(self, "K", check_psd(self.K, "K"))
        else:
            object.__setattr__(self, "K0", check_psd(self.K0, "K0"))
            object.__setattr__(self, "K1", check_psd(self.K1, "K1"))
            object.__setattr__(self, "K2", check_psd(self.K2, "K2"))

    def validate_cap(self, S) -> None:
        total = self.K if self.K is not None else self.K0 + self.K1 + self.K2
        if not psd_leq(total, S):
            raise CapExceeded("covariance allocation exceeds the input cap S")


def check_degraded_order(ch: GaussChannel) -> bool:
    """Noise-covariance order Sigma1 <= Sigma2 <= SigmaZ (Sigma1 > 0 holds by
    construction)."""
    return psd_leq(ch.Sigma1, ch.Sigma2) and psd_leq(ch.Sigma2, ch.SigmaZ)


def check_degraded_H(ch: HGaussChannel):
    """Degradedness test for the gain-matrix form.

    Least-squares candidates D21 = H2 H1^+ and DZ2 = HZ H2^+ must reproduce
    the smaller gains and be contractions.  Returns (ok, D21, DZ2).
    """
    d21 = ch.H2 @ np.linalg.pinv(ch.H1)
    dz2 = ch.HZ @ np.linalg.pinv(ch.H2)
    ok = True
    if np.linalg.norm(ch.H2 - d21 @ ch.H1) > 1e-9:
        ok = False
    if np.linalg.norm(ch.HZ - dz2 @ ch.H2) > 1e-9:
        ok = False
    for d in (d21, dz2):
        w = np.linalg.eigvalsh(d @ d.T)
        if w.max() > 1.0 + ORDER_TOL:
            ok = False
    return ok, d21, dz2


def construct_joint_noise(ch: GaussChannel) -> np.ndarray:
    """Joint covariance of (N1, N2, NZ) realizing the degraded chain.

    Writes N2 = N1 + M2 and NZ = N2 + MZ with independent increments of
    covariance Sigma2-Sigma1 and SigmaZ-Sigma2, so the blocks reproduce the
    marginal noise covariances exactly and X -> Y1 -> Y2 -> Z holds.
    """
    if not check_degraded_order(ch):
        raise NotDegraded("noise covariances are not ordered")
    s1, s2, sz = ch.Sigma1, ch.Sigma2, ch.SigmaZ
    return np.block([[s1, s1, s1], [s1, s2, s2], [s1, s2, sz]])


def _half_logdet_ratio(num, den) -> float:
    return 0.5 * (logdet(num) - logdet(den))


def _gauss_constants(K, ch: GaussChannel) -> dict[str, float]:
    S, s1, s2, sz = ch.S, ch.Sigma1, ch.Sigma2, ch.SigmaZ
    lead = _half_logdet_ratio(S + s2, K + s2)
    private = _half_logdet_ratio(K + s1, s1)
    return {
        "rs2": lead - _half_logdet_ratio(S + sz, K + sz),
        "rs12": lead + private - _half_logdet_ratio(S + sz, sz),
        "rs2p2": lead,
        "rs12p2": lead + private - _half_logdet_ratio(K + sz, sz),
        "total": lead + private,
    }


def _rate_system(values: dict[str, float]) -> IneqSystem:
    coeffs = {
        "rs2": {"Rs2": 1},
        "rs12": {"Rs1": 1, "Rs2": 1},
        "rs2p2": {"Rp2": 1, "Rs2": 1},
        "rs12p2": {"Rs1": 1, "Rp2": 1, "Rs2": 1},
        "total": {"Rp1": 1, "Rs1": 1, "Rp2": 1, "Rs2": 1},
    }
    return IneqSystem.of(RATES, [LinIneq.of(coeffs[l], float(v), label=l)
                                 for l, v in values.items()])


def eval_gauss_inner(split: CovSplit, ch: GaussChannel) -> IneqSystem:
    """Five-bound achievable region for a degraded channel and a fixed K <= S."""
    if not check_degraded_order(ch):
        raise NotDegraded("inner bound needs the degraded noise order")
    if split.K is None:
        raise NotPSD("inner bound takes a single-matrix split K")
    split.validate_cap(ch.S)
    return _rate_system(_gauss_constants(split.K, ch))


def eval_gauss_outer(split: CovSplit, ch: GaussChannel) -> IneqSystem:
    """Outer bound: the inner system without the Rs1+Rp2+Rs2 constraint."""
    inner = eval_gauss_inner(split, ch)
    return inner.with_ineqs([q for q in inner.ineqs if q.label != "rs12p2"])


def specialize_gauss_corollary(sys: IneqSystem, which: str) -> IneqSystem:
    """Specializations mirroring the discrete ones (cor4/cor5/cor6/cor6_alt)."""
    from .regions_discrete import specialize_corollary

    mapping = {"cor4": "cor1", "cor5": "cor2", "cor6": "cor3", "cor6_alt": "cor3_alt"}
    if which not in mapping:
        raise UnknownCorollary(f"unknown specialization {which!r}")
    return specialize_corollary(sys, mapping[which])


def dpc_matrix(K1, Sigma1) -> np.ndarray:
    """Precoding matrix K1 (K1 + Sigma1)^{-1} against known interference."""
    k1 = check_psd(K1, "K1")
    s1 = _sym(Sigma1)
    m = k1 + s1
    try:
        return np.linalg.solve(m.T, k1.T).T
    except np.linalg.LinAlgError:
        raise SingularMatrix("K1 + Sigma1 is singular") from None


def _project_range(cov, tol: float = 1e-12):
    w, v = np.linalg.eigh(_sym(cov))
    keep = w > tol * max(w.max(), 1.0)
    return v[:, keep]


def gauss_mi(Saa, Sab, Sbb) -> float:
    """Mutual information of a jointly Gaussian pair from covariance blocks.

    Degenerate marginals are projected onto their range first; a singular
    conditional covariance (deterministic dependence) raises SingularMatrix.
    """
    Saa, Sbb = _sym(Saa), _sym(Sbb)
    Sab = np.atleast_2d(np.asarray(Sab, dtype=float))
    Pa = _project_range(Saa)
    Pb = _project_range(Sbb)
    if Pa.shape[1] == 0 or Pb.shape[1] == 0:
        return 0.0
    a = Pa.T @ Saa @ Pa
    b = Pb.T @ Sbb @ Pb
    c = Pa.T @ Sab @ Pb
    cond = b - c.T @ np.linalg.solve(a, c)
    return 0.5 * (logdet(b) - logdet(cond))


def dpc_identity_check(K1, K2, K0, ch: GaussChannel) -> float:
    """Residual of the interference-free rate identity under precoding.

    Builds the jointly Gaussian layered selection (V1 = U1 + A U2 + U with
    A = K1 (K1+Sigma1)^{-1}, V2 = U + U2, X = U + U1 + U2) and compares
    I(V1;Y1|U) - I(V1;V2|U) against  0.5 log |K1+Sigma1|/|Sigma1|.
    """
    k1 = check_psd(K1, "K1")
    k2 = check_psd(K2, "K2")
    check_psd(K0, "K0")
    s1 = ch.Sigma1
    A = dpc_matrix(k1, s1)
    # conditioned on U everything is a function of (U1, U2, N1)
    v1 = k1 + A @ k2 @ A.T               # Cov(V1 - U)
    y1 = k1 + k2 + s1                    # Cov(Y1 - U)
    v1y1 = k1 + A @ k2                   # Cov(V1 - U, Y1 - U)
    v1v2 = A @ k2                        # Cov(V1 - U, V2 - U)
    lhs = gauss_mi(v1, v1y1, y1) - gauss_mi(v1, v1v2, k2)
    rhs = _half_logdet_ratio(k1 + s1, s1)
    return abs(lhs - rhs)


def eval_general_gauss(split: CovSplit, ch: GaussChannel, order: str = "21") -> IneqSystem:
    """Eight-bound layered region for a covariance triple (K0, K1, K2).

    ``order="21"`` encodes the second user's layer first and precodes the
    first user's layer against it; ``order="12"`` swaps the roles of the two
    users (indices of K, Sigma and the rate labels all swap).
    """
    if split.K is not None:
        raise NotPSD("general region takes a triple split (K0, K1, K2)")
    split.validate_cap(ch.S)
    if order == "12":
        swapped = GaussChannel(ch.S, ch.Sigma2, ch.Sigma1, ch.SigmaZ)
        base = _general_bounds(split.K0, split.K2, split.K1, swapped)
        relabel = {"Rs1": "Rs2", "Rs2": "Rs1", "Rp1": "Rp2", "Rp2": "Rp1"}
        rows = [LinIneq.of({relabel[v]: c for v, c in q.coeffs}, q.rhs, q.rel,
                           q.label.translate(str.maketrans("12", "21")))
                for q in base]
        return IneqSystem.of(RATES, rows)
    if order != "21":
        raise UnknownCorollary(f"unknown encoding order {order!r}")
    return IneqSystem.of(RATES, _general_bounds(split.K0, split.K1, split.K2, ch))


def _general_bounds(K0, K1, K2, ch: GaussChannel) -> list[LinIneq]:
    S, s1, s2, sz = ch.S, ch.Sigma1, ch.Sigma2, ch.SigmaZ
    tot = K0 + K1 + K2
    inner12 = K1 + K2

    def min_j(num_fn):
        return min(num_fn(s1), num_fn(s2))

    cloud = min_j(lambda s: _half_logdet_ratio(tot + s, inner12 + s))
    cloud_cap = min_j(lambda s: _half_logdet_ratio(S + s, inner12 + s))
    dirty = _half_logdet_ratio(K1 + s1, s1)
    layer2 = _half_logdet_ratio(inner12 + s2, K1 + s2)
    b = {
        "rs1": cloud + dirty - _half_logdet_ratio(tot + sz, inner12 + sz)
               - _half_logdet_ratio(K1 + sz, sz),
        "rs2": cloud + layer2 - _half_logdet_ratio(tot + sz, K1 + sz),
        "rs12": cloud + layer2 + dirty - _half_logdet_ratio(tot + sz, sz),
        "rs1p1": cloud_cap + dirty,
        "rs2p2": cloud_cap + layer2,
        "rs1p1s2": cloud_cap + dirty + layer2
                   - _half_logdet_ratio(inner12 + sz, K1 + sz),
        "rs12p2": cloud_cap + layer2 + dirty - _half_logdet_ratio(K1 + sz, sz),
        "total": cloud_cap + layer2 + dirty,
    }
    coeffs = {
        "rs1": {"Rs1": 1},
        "rs2": {"Rs2": 1},
        "rs12": {"Rs1": 1, "Rs2": 1},
        "rs1p1": {"Rs1": 1, "Rp1": 1},
        "rs2p2": {"Rs2": 1, "Rp2": 1},
        "rs1p1s2": {"Rs1": 1, "Rp1": 1, "Rs2": 1},
        "rs12p2": {"Rs1": 1, "Rs2": 1, "Rp2": 1},
        "total": {"Rp1": 1, "Rs1": 1, "Rp2": 1, "Rs2": 1},
    }
    return [LinIneq.of(coeffs[l], float(v), label=l) for l, v in b.items()]


# --- scalar discretization ---------------------------------------------------


def discretize_scalar(ch: GaussChannel, k_alloc: float, m: int = 61, span: float = 6.0):
    """Fine discrete twin of a scalar channel and its Gaussian aux selection.

    Returns ``(aux, channel)`` suitable for the discrete degraded evaluation:
    U on a grid carrying N(0, S-K), X | U ~ N(u, K) quantized onto a grid, and
    the cascade stages of the degraded noise increments row-discretized.  Used
    to cross-check the closed-form bounds against the discrete path.
    """
    import math

    from .info_core import VarId, build_degraded_joint, make_table
    from .regions_discrete import AuxJoint

    if ch.dim != 1:
        raise NotPSD("discretization is defined for scalar channels")
    S = float(ch.S[0, 0])
    s1 = float(ch.Sigma1[0, 0])
    s2 = float(ch.Sigma2[0, 0])
    sz = float(ch.SigmaZ[0, 0])
    su = S - k_alloc

    def centered_grid(var, n):
        if var > 1e-12:
            g = np.linspace(-span * math.sqrt(var), span * math.sqrt(var), n)
            p = np.exp(-g ** 2 / (2.0 * var))
            return g, p / p.sum()
        return np.array([0.0]), np.array([1.0])

    ug, pu = centered_grid(su, m)
    xg = np.linspace(-1.2 * span * math.sqrt(S), 1.2 * span * math.sqrt(S), m)
    if k_alloc > 1e-12:
        pxu = np.exp(-(xg[None, :] - ug[:, None]) ** 2 / (2.0 * k_alloc))
        pxu /= pxu.sum(axis=1, keepdims=True)
    else:
        pxu = np.zeros((ug.size, xg.size))
        for i, u in enumerate(ug):
            pxu[i, int(np.argmin(np.abs(xg - u)))] = 1.0
    aux_arr = pu[:, None] * pxu

    def stage(src, var, n):
        var = max(var, 1e-15)
        dst = np.linspace(src[0] - span * math.sqrt(var), src[-1] + span * math.sqrt(var), n)
        kmat = np.exp(-(dst[None, :] - src[:, None]) ** 2 / (2.0 * var))
        return dst, kmat / kmat.sum(axis=1, keepdims=True)

    y1g, k1 = stage(xg, s1, 2 * m)
    y2g, k2 = stage(y1g, s2 - s1, 2 * m)
    _, k3 = stage(y2g, sz - s2, 2 * m)
    channel = build_degraded_joint(k1, k2, k3, names=("X", "Y1", "Y2", "Z"))
    aux = AuxJoint(make_table((VarId("U", ug.size), VarId("X", xg.size)), aux_arr))
    return aux, channel


# --- sweeps -----------------------------------------------------------------


def random_psd_under(rng: np.random.Generator, S: np.ndarray) -> np.ndarray:
    """Random PSD matrix K <= S: congruence of a random contraction by S^1/2."""
    d = S.shape[0]
    w, v = np.linalg.eigh(S)
    root = (v * np.sqrt(np.clip(w, 0, None))) @ v.T
    q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    contraction = (q * rng.uniform(0.0, 1.0, size=d)) @ q.T
    return check_psd(root @ contraction @ root, "K")


def sweep_covariances(ch: GaussChannel, budget: int, seed: int = 0,
                      mode: str = "fixed_S", trace_p: float | None = None) -> SweepResult:
    """Seeded sweep of covariance splits; fixed-prefix sampling as in the
    discrete sweeps.  ``trace_P`` mode additionally samples the cap S on the
    trace simplex ``tr(S) <= P``."""
    if budget < 1:
        raise BudgetZero("sweep budget must be >= 1")
    if not check_degraded_order(ch):
        raise NotDegraded("covariance sweep expects a degraded channel")
    rng = np.random.default_rng(seed)
    d = ch.dim
    pts, rows = [], []
    corner_ks = [np.zeros((d, d)), ch.S.copy(), 0.5 * ch.S]

    def add(idx, K, channel):
        sys = eval_gauss_inner(CovSplit(K=K), channel)
        vp = vertices(sys)
        if vp.vertices.size:
            pts.append(vp.vertices)
        rows.append((idx, f"K{idx}", [float(q.rhs) for q in sys.ineqs],
                     vp.vertices.shape[0]))

    count = 0
    if mode == "fixed_S":
        for K in corner_ks[:budget]:
            add(count, K, ch)
            count += 1
        while count < budget:
            add(count, random_psd_under(rng, ch.S), ch)
            count += 1
    elif mode == "trace_P":
        p = trace_p if trace_p is not None else float(np.trace(ch.S))
        while count < budget:
            q, _ = np.linalg.qr(rng.normal(size=(d, d)))
            lam = rng.dirichlet(np.ones(d)) * p
            S = (q * np.clip(lam, 1e-9 * p, None)) @ q.T
            S = check_pd(0.5 * (S + S.T), "S")
            channel = GaussChannel(S, ch.Sigma1, ch.Sigma2, ch.SigmaZ)
            add(count, random_psd_under(rng, S), channel)
            count += 1
    else:
        raise BudgetZero(f"unknown sweep mode {mode!r}")
    cloud = np.vstack(pts) if pts else np.empty((0, 4))
    return SweepResult(rates=RATES, points=cloud, hull_points=hull_of(cloud), rows=rows)
