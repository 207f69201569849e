import math

import numpy as np
import pytest
from scipy.special import logsumexp
from scipy.stats import multivariate_normal

import gmmsi
from gmmsi import presets
from gmmsi.classify import (
    BhattTable,
    ProjectedMixture,
    bound_weight,
    classification_phase_verdict,
    diversity_order,
    exp_decay_verdict,
    log_class_likelihood,
    map_distributed,
    map_side_info,
    perr_upper_bound,
)
from gmmsi.model import FactorModel, JointGmm, component_from_factors
from gmmsi.sensing import assemble, draw_kernel, observe


def _binary_scalar_model(v1, v2, mu1, mu2):
    comps = {}
    for idx, (v, mu) in enumerate(((v1, mu1), (v2, mu2)), start=1):
        comps[(idx, 1)] = gmmsi.JointComponent(
            np.array([mu]), np.zeros(1), np.array([[v]]), np.eye(1), np.zeros((1, 1))
        )
    return JointGmm(prior=np.array([[0.5], [0.5]]), components=comps)


def test_log_likelihood_matches_scipy(mixture):
    phi = draw_kernel(20, 12, 5, 3, seed=13)
    s = gmmsi.sample_joint(mixture, 40, seed=21)
    obs = observe(s.x1, s.x2, phi, 0.05, seed=21)
    full = assemble(phi)
    for pair in mixture.components:
        comp = mixture.component(pair)
        ref = multivariate_normal(
            mean=full @ comp.mu_x, cov=full @ comp.sigma_x @ full.T + 0.05 * np.eye(8)
        ).logpdf(obs.y)
        got = log_class_likelihood(obs.y, mixture, phi, 0.05, pair)
        assert np.allclose(got, ref, atol=1e-9)


def test_map_side_info_matches_brute_force(mixture):
    phi = draw_kernel(20, 12, 6, 4, seed=3)
    s = gmmsi.sample_joint(mixture, 300, seed=4)
    obs = observe(s.x1, s.x2, phi, 0.02, seed=4)
    ll = np.stack(
        [
            log_class_likelihood(obs.y, mixture, phi, 0.02, pair)
            + math.log(mixture.prior_of(pair))
            for pair in sorted(mixture.components)
        ],
        axis=1,
    )
    # columns sorted by (i, k): class posteriors via logsumexp over k
    per_class = np.stack(
        [logsumexp(ll[:, :2], axis=1), logsumexp(ll[:, 2:], axis=1)], axis=1
    )
    want = per_class.argmax(axis=1) + 1
    got = map_side_info(obs.y, mixture, phi, 0.02)
    assert np.array_equal(np.asarray(got), want)


def test_map_distributed_matches_brute_force(mixture):
    phi = draw_kernel(20, 12, 6, 4, seed=3)
    s = gmmsi.sample_joint(mixture, 200, seed=6)
    obs = observe(s.x1, s.x2, phi, 0.02, seed=6)
    pairs = sorted(mixture.components)
    ll = np.stack(
        [
            log_class_likelihood(obs.y, mixture, phi, 0.02, pair)
            + math.log(mixture.prior_of(pair))
            for pair in pairs
        ],
        axis=1,
    )
    want = np.array([pairs[j] for j in ll.argmax(axis=1)])
    got = np.asarray(map_distributed(obs.y, mixture, phi, 0.02))
    assert np.array_equal(got, want)


def test_tied_posterior_prefers_smaller_class(nprng):
    f = FactorModel(
        p_c1=nprng.standard_normal((4, 1)),
        p_c2=nprng.standard_normal((3, 1)),
        p_1=nprng.standard_normal((4, 1)),
        p_2=nprng.standard_normal((3, 1)),
    )
    comp = component_from_factors(f)
    twin = JointGmm(prior=np.array([[0.5], [0.5]]), components={(1, 1): comp, (2, 1): comp})
    phi = draw_kernel(4, 3, 2, 1, seed=0)
    s = gmmsi.sample_joint(twin, 20, seed=1)
    obs = observe(s.x1, s.x2, phi, 0.1, seed=1)
    assert np.all(np.asarray(map_side_info(obs.y, twin, phi, 0.1)) == 1)


def test_bhatt_exponent_dense_oracle(mixture):
    # zero means: K = log det of the average minus half the parts
    phi = draw_kernel(20, 12, 6, 4, seed=11)
    full = assemble(phi)
    sigma2 = 3e-3
    table = BhattTable(mixture, phi)
    quad = table.quads.index((1, 1, 2, 2))
    ka = table.exponents(sigma2)[quad]
    sa = full @ mixture.component((1, 1)).sigma_x @ full.T + sigma2 * np.eye(10)
    sb = full @ mixture.component((2, 2)).sigma_x @ full.T + sigma2 * np.eye(10)
    mid = (sa + sb) / 2
    want = 0.5 * (
        np.linalg.slogdet(mid)[1]
        - 0.5 * np.linalg.slogdet(sa)[1]
        - 0.5 * np.linalg.slogdet(sb)[1]
    )
    assert abs(ka - want) < 1e-9


def test_bhatt_exponent_scalar_closed_form():
    model = _binary_scalar_model(0.8, 2.5, 0.4, -1.0)
    phi = draw_kernel(1, 1, 1, 0, seed=5)
    a = phi.phi1[0, 0]
    sigma2 = 0.05
    s1 = a * a * 0.8 + sigma2
    s2 = a * a * 2.5 + sigma2
    delta = a * (0.4 - (-1.0))
    want = delta**2 / (4 * (s1 + s2)) + 0.5 * math.log(
        (s1 + s2) / (2 * math.sqrt(s1 * s2))
    )
    table = BhattTable(model, phi)
    got = table.exponents(sigma2)[table.quads.index((1, 1, 2, 1))]
    assert abs(got - want) < 1e-10


def test_bound_weights(mixture):
    phi = draw_kernel(20, 12, 6, 4, seed=11)
    for mode in ("side_info", "distributed"):
        table = BhattTable(mixture, phi, mode)
        for quad, w in zip(table.quads, table.weights):
            assert w == bound_weight(mixture, quad, mode)
    # uniform prior: every side-info weight is sqrt(1) * sqrt(1/16)
    assert np.allclose(BhattTable(mixture, phi, "side_info").weights, 0.25)
    assert np.allclose(BhattTable(mixture, phi, "distributed").weights, 0.25)


def test_bound_caps_and_matches_table(mixture):
    phi = draw_kernel(20, 12, 6, 4, seed=11)
    table = BhattTable(mixture, phi)
    for sigma2 in (1e-4, 1e-2, 1e0):
        b = table.bound(sigma2)
        assert 0.0 <= b <= table.weights.sum()
        assert b == perr_upper_bound(mixture, phi, sigma2)
        assert np.all(table.exponents(sigma2) >= -1e-12)


def test_bound_decreases_with_noise(mixture):
    phi = draw_kernel(20, 12, 6, 4, seed=11)
    grid = gmmsi.log_grid(1e-6, 1e-1, 3)
    vals = np.array([perr_upper_bound(mixture, phi, s) for s in grid])
    assert np.all(np.diff(vals) < 0)  # grid is descending in sigma2


def test_projected_mixture_batch_consistency(mixture):
    phi = draw_kernel(20, 12, 4, 2, seed=9)
    pm = ProjectedMixture(mixture, phi)
    s = gmmsi.sample_joint(mixture, 7, seed=2)
    obs = observe(s.x1, s.x2, phi, 0.01, seed=2)
    batch = pm.loglik(obs.y, 0.01)
    for t in range(7):
        single = pm.loglik(obs.y[t : t + 1], 0.01)
        assert np.allclose(batch[t], single[0])


def test_diversity_orders_on_preset(mixture_geo):
    assert diversity_order(mixture_geo, 6, 4).d == 0.5
    assert diversity_order(mixture_geo, 8, 4).d == 1.5
    assert diversity_order(mixture_geo, 5, 4).d == 0.0
    assert diversity_order(mixture_geo, 7, 0).d == 0.0
    assert diversity_order(mixture_geo, 8, 0).d == 0.5


def test_verdict_agrees_with_diversity_on_random_models():
    for seed in range(12):
        model = presets.random_low_rank_mixture(seed)
        geo = gmmsi.geometry_summary(model)
        for mode in ("side_info", "distributed"):
            for m1 in (0, 2, 4, 6, 9):
                for m2 in (0, 2, 5):
                    v = classification_phase_verdict(geo, m1, m2, mode)
                    d = diversity_order(geo, m1, m2, mode).d
                    if v.outcome == "error_floor":
                        assert d == 0.0
                        assert v.d == 0.0
                    else:
                        assert v.outcome == "phase_transition"
                        assert d > 0
                        assert v.d == d


def test_verdict_rejects_nonzero_means():
    model = presets.random_low_rank_mixture(3, nonzero_means=True)
    geo = gmmsi.geometry_summary(model)
    with pytest.raises(ValueError):
        classification_phase_verdict(geo, 4, 2)


def _mean_case_model(mu_x1_b, p1b=None):
    basis1 = np.eye(5)[:, :2]
    basis2 = np.eye(4)[:, :2]
    inno1 = np.eye(5)[:, 2:3]
    inno2 = np.eye(4)[:, 2:3]
    a = component_from_factors(
        FactorModel(p_c1=basis1, p_c2=basis2, p_1=inno1, p_2=inno2)
    )
    b = component_from_factors(
        FactorModel(
            p_c1=basis1,
            p_c2=basis2,
            p_1=inno1 if p1b is None else p1b,
            p_2=inno2,
            mu_x1=mu_x1_b,
        )
    )
    return JointGmm(prior=np.array([[0.5], [0.5]]), components={(1, 1): a, (2, 1): b})


def test_decay_verdict_mean_out_of_range_is_exponential():
    geo = gmmsi.geometry_summary(_mean_case_model(np.array([0, 0, 0, 0, 2.0])))
    v = exp_decay_verdict(geo, 3, 2)
    assert v.outcome == "exponential_decay"
    assert v.d == math.inf


def test_decay_verdict_mean_in_range_floor():
    # same covariances, mean shift inside the shared range: no decay at all
    geo = gmmsi.geometry_summary(_mean_case_model(np.array([0, 0, 1.5, 0, 0])))
    v = exp_decay_verdict(geo, 3, 2)
    assert v.outcome == "error_floor"
    assert v.d == 0.0


def test_decay_verdict_mean_in_range_polynomial():
    # distinct innovation subspaces: slow quadruple survives with d > 0
    geo = gmmsi.geometry_summary(
        _mean_case_model(np.array([0, 0, 1.0, 0.5, 0]), p1b=np.eye(5)[:, 3:4])
    )
    v = exp_decay_verdict(geo, 5, 4)
    assert v.outcome == "polynomial_decay"
    assert 0 < v.d < math.inf


def test_decay_verdict_accepts_zero_mean(mixture_geo):
    v = exp_decay_verdict(mixture_geo, 6, 4)
    assert v.outcome == "polynomial_decay"
    assert v.d == 0.5
