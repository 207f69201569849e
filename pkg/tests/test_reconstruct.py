import numpy as np
import pytest

import gmmsi
from gmmsi.reconstruct import (
    PairFilter,
    classify_reconstruct,
    gaussian_cme,
    gaussian_mmse,
    gmm_cme,
    mse_lower_bound,
    reconstruction_phase_verdict,
)
from gmmsi.sensing import assemble, draw_kernel, observe


def _dense_reference(comp, phi, sigma2, target):
    full = assemble(phi)
    m = full.shape[0]
    rows = comp.sigma_x.shape[0] if target == "joint" else comp.sigma_x1.shape[0]
    sy = full @ comp.sigma_x @ full.T + sigma2 * np.eye(m)
    cross = comp.sigma_x[:rows] @ full.T
    gain = np.linalg.solve(sy, cross.T).T
    mmse = np.trace(comp.sigma_x[:rows, :rows]) - np.trace(gain @ cross.T)
    return full, gain, mmse


@pytest.mark.parametrize("target", ["x1", "joint"])
def test_gaussian_cme_dense_oracle(mixture, target):
    comp = mixture.component((1, 2))
    phi = draw_kernel(20, 12, 6, 4, seed=17)
    sigma2 = 1e-2
    x1, x2 = gmmsi.sample_pair(mixture, (1, 2), 50, seed=3)
    obs = observe(x1, x2, phi, sigma2, seed=3)
    full, gain, mmse = _dense_reference(comp, phi, sigma2, target)
    mu_y = full @ comp.mu_x
    rows = comp.mu_x.size if target == "joint" else comp.mu_x1.size
    want = comp.mu_x[:rows] + (obs.y - mu_y) @ gain.T
    got = gaussian_cme(obs.y, comp, phi, sigma2, target=target)
    assert np.allclose(got, want, atol=1e-10)
    assert abs(gaussian_mmse(comp, phi, sigma2, target=target) - mmse) < 1e-9


def test_gaussian_mmse_monte_carlo(gauss_pair):
    comp = gauss_pair.component((1, 1))
    phi = draw_kernel(5, 4, 4, 3, seed=2)
    sigma2 = 0.05
    x1, x2 = gmmsi.sample_pair(gauss_pair, (1, 1), 40_000, seed=5)
    obs = observe(x1, x2, phi, sigma2, seed=5)
    est = gaussian_cme(obs.y, comp, phi, sigma2)
    emp = np.mean(np.sum((est - x1) ** 2, axis=1))
    ref = gaussian_mmse(comp, phi, sigma2)
    assert abs(emp - ref) < 0.05 * ref


def test_pair_filter_matches_gaussian_helpers(mixture):
    comp = mixture.component((2, 1))
    phi = draw_kernel(20, 12, 5, 2, seed=23)
    filt = PairFilter(comp, phi)
    for sigma2 in (1e-4, 1e-1):
        assert abs(filt.mmse(sigma2, "x1") - gaussian_mmse(comp, phi, sigma2)) < 1e-10
        assert (
            abs(filt.mmse(sigma2, "joint") - gaussian_mmse(comp, phi, sigma2, "joint"))
            < 1e-10
        )


def test_gmm_posterior_normalized(mixture):
    phi = draw_kernel(20, 12, 6, 4, seed=7)
    s = gmmsi.sample_joint(mixture, 60, seed=9)
    obs = observe(s.x1, s.x2, phi, 0.05, seed=9)
    _, post = gmm_cme(obs.y, mixture, phi, 0.05)
    assert np.allclose(post.weights.sum(axis=1), 1.0, atol=1e-12)
    assert post.weights.min() >= 0.0


def test_gmm_cme_marginalization(mixture):
    phi = draw_kernel(20, 12, 6, 4, seed=7)
    s = gmmsi.sample_joint(mixture, 40, seed=11)
    obs = observe(s.x1, s.x2, phi, 0.03, seed=11)
    est1, _ = gmm_cme(obs.y, mixture, phi, 0.03, target="x1")
    estj, _ = gmm_cme(obs.y, mixture, phi, 0.03, target="joint")
    assert np.abs(est1 - estj[:, :20]).max() < 1e-9


def test_posterior_concentrates_at_low_noise(mixture):
    phi = draw_kernel(20, 12, 8, 6, seed=7)
    s = gmmsi.sample_joint(mixture, 200, seed=13)
    obs = observe(s.x1, s.x2, phi, 1e-8, seed=13)
    _, post = gmm_cme(obs.y, mixture, phi, 1e-8)
    top = np.asarray(post.pairs)[post.weights.argmax(axis=1)]
    truth = np.stack([s.c1, s.c2], axis=1)
    assert np.mean(np.all(top == truth, axis=1)) > 0.97


def test_classify_reconstruct_uses_map_pair(mixture):
    phi = draw_kernel(20, 12, 6, 4, seed=7)
    s = gmmsi.sample_joint(mixture, 100, seed=15)
    obs = observe(s.x1, s.x2, phi, 0.02, seed=15)
    est, labels = classify_reconstruct(obs.y, mixture, phi, 0.02)
    want = np.asarray(gmmsi.map_distributed(obs.y, mixture, phi, 0.02))
    assert np.array_equal(np.asarray(labels), want)
    # estimate equals the chosen pair's filter output
    for t in (0, 17, 63):
        comp = mixture.component(tuple(labels[t]))
        ref = gaussian_cme(obs.y[t : t + 1], comp, phi, 0.02)
        assert np.allclose(est[t], ref[0], atol=1e-10)


def test_estimator_ordering(mixture):
    phi = draw_kernel(20, 12, 6, 4, seed=19)
    sigma2 = 1e-2
    s = gmmsi.sample_joint(mixture, 6000, seed=17)
    obs = observe(s.x1, s.x2, phi, sigma2, seed=17)
    est_gmm, _ = gmm_cme(obs.y, mixture, phi, sigma2)
    est_cr, _ = classify_reconstruct(obs.y, mixture, phi, sigma2)
    se_gmm = np.sum((est_gmm - s.x1) ** 2, axis=1)
    se_cr = np.sum((est_cr - s.x1) ** 2, axis=1)
    n = se_gmm.size
    lb = mse_lower_bound(mixture, phi, sigma2)
    assert se_gmm.mean() >= lb - 3 * se_gmm.std() / np.sqrt(n)
    diff = se_cr - se_gmm
    assert diff.mean() >= -3 * diff.std() / np.sqrt(n)


def test_mse_lower_bound_is_prior_weighted_mmse(mixture):
    phi = draw_kernel(20, 12, 6, 4, seed=19)
    for sigma2 in (1e-3, 1e-1):
        want = sum(
            mixture.prior_of(pair) * gaussian_mmse(mixture.component(pair), phi, sigma2)
            for pair in mixture.components
        )
        assert abs(mse_lower_bound(mixture, phi, sigma2) - want) < 1e-12


def test_gaussian_thresholds(gauss_geo):
    # exact recovery region of the single-component model: per m2 the
    # minimum m1 is 3,3,2,1,1,1
    expected_min_m1 = {0: 3, 1: 3, 2: 2, 3: 1, 4: 1, 5: 1}
    for m2, lim in expected_min_m1.items():
        for m1 in range(0, 6):
            v = reconstruction_phase_verdict(gauss_geo, m1, m2, "gaussian")
            assert v.outcome == ("transition" if m1 >= lim else "no_transition")


def test_gmm_verdict_bracket(mixture_geo):
    assert reconstruction_phase_verdict(mixture_geo, 5, 4, "gmm_sufficient").outcome == "no_transition"
    assert reconstruction_phase_verdict(mixture_geo, 6, 4, "gmm_sufficient").outcome == "transition"
    assert reconstruction_phase_verdict(mixture_geo, 5, 4, "gmm_necessary").outcome == "transition"
    assert reconstruction_phase_verdict(mixture_geo, 4, 4, "gmm_necessary").outcome == "no_transition"
    assert reconstruction_phase_verdict(mixture_geo, 7, 0, "gmm_sufficient").outcome == "no_transition"
    assert reconstruction_phase_verdict(mixture_geo, 8, 0, "gmm_sufficient").outcome == "transition"


def test_distributed_verdicts(gauss_geo):
    cases = {
        (2, 2): "transition",
        (3, 1): "transition",
        (1, 2): "no_transition",
        (4, 0): "no_transition",
    }
    for (m1, m2), want in cases.items():
        assert reconstruction_phase_verdict(gauss_geo, m1, m2, "dist_gaussian").outcome == want


def test_gaussian_tag_needs_single_component(mixture_geo):
    with pytest.raises(ValueError):
        reconstruction_phase_verdict(mixture_geo, 4, 2, "gaussian")


def test_unknown_theorem_rejected(gauss_geo):
    with pytest.raises(ValueError):
        reconstruction_phase_verdict(gauss_geo, 3, 3, "not_a_theorem")
