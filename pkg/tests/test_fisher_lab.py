import math

import numpy as np
import pytest

from wiretap_regions.errors import NoRoot, QuadratureNonConvergent, StepTooLarge
from wiretap_regions.fisher_lab import (
    GaussPair,
    ScalarMixture,
    debruijn_check,
    gaussian_fisher,
    interpolation_t_star,
    lemma_suite_check,
    mixture_cond_entropy,
    mixture_cond_fisher,
    mixture_entropy,
    random_gauss_pair,
    random_mixture,
    sufficiency_evidence_scalar,
)
from wiretap_regions.regions_gaussian import GaussChannel, sweep_covariances

I1 = np.eye(1)


def test_fisher_independent_pair():
    pair = GaussPair(np.diag([1.0, 2.0]), d_u=1, d_x=1)  # X ~ N(0,2) independent of U
    J = gaussian_fisher(pair, [[1.0]])
    assert J[0, 0] == pytest.approx(1.0 / 3.0, abs=1e-14)


def test_fisher_deterministic_relation():
    pair = GaussPair(np.array([[1.0, 1.0], [1.0, 1.0]]), d_u=1, d_x=1)  # U = X
    J = gaussian_fisher(pair, [[0.25]])
    assert J[0, 0] == pytest.approx(4.0, abs=1e-12)


def test_fisher_matches_block_conditional_covariance():
    rng = np.random.default_rng(30)
    for _ in range(10):
        pair = random_gauss_pair(rng, 2)
        a = rng.normal(size=(2, 2))
        sn = a @ a.T + 0.2 * np.eye(2)
        J = gaussian_fisher(pair, sn)
        oracle = np.linalg.inv(pair.cov_x_given_u() + sn)
        assert np.abs(J - oracle).max() <= 1e-12 * max(1.0, np.abs(oracle).max())


def test_debruijn_scalar_quarter():
    pair = GaussPair(np.diag([1.0, 1.0]), d_u=1, d_x=1)
    # h = log(2 pi e (1 + s))/2 so dh/ds = 1/4 at s = 1, matching J/2
    assert debruijn_check(pair, [[1.0]], step=1e-4) <= 1e-9


def test_debruijn_gaussian_small_dims():
    rng = np.random.default_rng(31)
    worst = 0.0
    for d in (1, 2, 3):
        for _ in range(5):
            pair = random_gauss_pair(rng, d)
            a = rng.normal(size=(d, d))
            sn = a @ a.T + 0.4 * np.eye(d)
            worst = max(worst, debruijn_check(pair, sn, step=1e-4))
    assert worst <= 1e-5


def test_debruijn_second_order_convergence():
    rng = np.random.default_rng(32)
    pair = random_gauss_pair(rng, 2)
    a = rng.normal(size=(2, 2))
    sn = a @ a.T + 0.5 * np.eye(2)
    r1 = debruijn_check(pair, sn, step=4e-3)
    r2 = debruijn_check(pair, sn, step=2e-3)
    assert 3.2 <= r1 / r2 <= 4.8


def test_debruijn_mixture():
    rng = np.random.default_rng(33)
    worst = 0.0
    for _ in range(5):
        mix = random_mixture(rng)
        worst = max(worst, debruijn_check(mix, [[0.7 + rng.uniform(0, 1)]], step=1e-4))
    assert worst <= 1e-4


def test_debruijn_step_too_large():
    pair = GaussPair(np.diag([1.0, 1.0]), d_u=1, d_x=1)
    with pytest.raises(StepTooLarge):
        debruijn_check(pair, [[1.0]], step=0.9)


def test_quadrature_nonconvergence_detected():
    # a 31-point grid cannot resolve two narrow spikes ten units apart
    with pytest.raises(QuadratureNonConvergent):
        mixture_entropy([0.0, 10.37], [0.5, 0.5], 1e-2, n=31, span=8.0)


def test_mixture_entropy_gaussian_closed_form():
    h = mixture_entropy([0.0], [1.0], 1.7)
    assert h == pytest.approx(0.5 * math.log(2 * math.pi * math.e * 1.7), abs=1e-9)


def test_mixture_fisher_gaussian_closed_form():
    j = mixture_fisher_one_center(2.3)
    assert j == pytest.approx(1 / 2.3, abs=1e-9)


def mixture_fisher_one_center(var):
    from wiretap_regions.fisher_lab import mixture_fisher
    return mixture_fisher([0.0], [1.0], var)


def test_lemma_suite_slacks():
    rep = lemma_suite_check(seed=2, count=60, include_mixtures=True)
    slacks = rep.min_slack()
    assert set(slacks) == {"L6", "L7", "L8", "L9", "L11", "L12"}
    assert rep.worst >= -1e-8
    # equality cases sit at zero, strict cases are positive
    gauss_rows = [(l, s) for l, k, _, s in rep.rows if k == "gauss" for l in [l]]
    l12 = [s for l, s in gauss_rows if l == "L12"]
    assert min(l12) > 0.0


def test_lemma12_explicit_example():
    # A = I, B = 2I: A^{-1} - B^{-1} = I/2
    rep_val = np.linalg.inv(np.eye(2)) - np.linalg.inv(2 * np.eye(2))
    assert np.allclose(rep_val, 0.5 * np.eye(2))


def test_lemma11_gaussian_equality():
    rng = np.random.default_rng(34)
    rep = lemma_suite_check(seed=4, count=9)
    l11 = [s for l, k, _, s in rep.rows if l == "L11" and k == "gauss"]
    assert max(abs(s) for s in l11) <= 1e-10


def test_lemma7_closed_form_oracle():
    # closed-form conditional covariances make the slack exactly zero for
    # Gaussian signals; quadrature mixtures give strictly positive slack
    rng = np.random.default_rng(35)
    mix = random_mixture(rng)
    v1, v2 = 0.6, 1.4
    j1 = mixture_cond_fisher(mix, v1)
    j2 = mixture_cond_fisher(mix, v2)
    assert (1 / j2 - v2) - (1 / j1 - v1) >= -1e-10


def test_interpolation_gaussian_constant_path():
    pair = GaussPair(np.array([[1.0, 0.5], [0.5, 1.0]]), 1, 1)
    t, k = interpolation_t_star(pair, 1.0, 2.0)
    assert t == 0.0
    assert k == pytest.approx(0.75, abs=1e-12)  # Cov(X|U) = 1 - 0.25


def test_interpolation_deterministic_u():
    pair = GaussPair(np.array([[0.0, 0.0], [0.0, 1.5]]), 1, 1)
    _, k = interpolation_t_star(pair, 1.0, 2.0)
    assert k == pytest.approx(1.5, abs=1e-10)


def test_interpolation_mixture_bracket():
    rng = np.random.default_rng(36)
    for _ in range(5):
        mix = random_mixture(rng)
        t, k = interpolation_t_star(mix, 1.0, 2.0)
        assert 0.0 <= t <= 1.0
        # oracle: dense grid sign change of f(t) - g
        j2 = mixture_cond_fisher(mix, 1.0)
        jz = mixture_cond_fisher(mix, 2.0)
        g = mixture_cond_entropy(mix, 2.0) - mixture_cond_entropy(mix, 1.0)
        kz, k2 = 1 / jz - 2.0, 1 / j2 - 1.0
        ts = np.linspace(0, 1, 201)
        vals = np.array([0.5 * math.log(((1 - t) * kz + t * k2 + 2.0)
                                        / ((1 - t) * kz + t * k2 + 1.0)) - g for t in ts])
        # a sign change, or a grazing root when the path is (near-)constant
        assert vals.min() <= 1e-10 and vals.max() >= -1e-10
        # sandwich
        assert k >= k2 - 1e-8
        assert k <= mix.second_moment() + 1e-8


def test_interpolation_rejects_reversed_order():
    pair = GaussPair(np.diag([1.0, 1.0]), 1, 1)
    with pytest.raises(NoRoot):
        interpolation_t_star(pair, 2.0, 1.0)


def scalar_channel():
    return GaussChannel(S=1.0 * I1, Sigma1=0.5 * I1, Sigma2=1.0 * I1, SigmaZ=2.0 * I1)


def gauss_envelope(ch, n=60):
    return sweep_covariances(ch, budget=n, seed=17).points


def test_evidence_discretized_gaussian_self_consistency():
    ch = scalar_channel()
    xs = np.linspace(-4, 4, 33)
    w = np.exp(-xs ** 2 / 2.0)
    w /= w.sum()
    scale = math.sqrt(0.999 / float((w * xs ** 2).sum()))
    mix = ScalarMixture(np.zeros(xs.size), xs * scale, w)
    rep = sufficiency_evidence_scalar(mix, ch, gauss_envelope(ch))
    assert rep.max_slack <= 5e-3


def test_evidence_antipodal_dominated():
    ch = scalar_channel()
    mix = ScalarMixture([0.0, 0.0], [-1.0, 1.0], [0.5, 0.5])
    rep = sufficiency_evidence_scalar(mix, ch, gauss_envelope(ch))
    assert rep.contained and rep.max_slack <= 1e-3


def test_evidence_random_mixtures_dominated():
    ch = scalar_channel()
    env = gauss_envelope(ch)
    rng = np.random.default_rng(37)
    for _ in range(10):
        mix = random_mixture(rng)
        scale = min(1.0, math.sqrt(0.98 / max(mix.second_moment(), 1e-9)))
        mix = ScalarMixture(mix.u_points, mix.x_points * scale, mix.weights)
        rep = sufficiency_evidence_scalar(mix, ch, env)
        assert rep.contained, rep.max_slack


def test_evidence_rejects_over_cap():
    ch = scalar_channel()
    mix = ScalarMixture([0.0, 0.0], [-3.0, 3.0], [0.5, 0.5])
    with pytest.raises(QuadratureNonConvergent):
        sufficiency_evidence_scalar(mix, ch, gauss_envelope(ch, n=5))
