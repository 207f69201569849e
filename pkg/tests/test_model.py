import numpy as np
import pytest

import gmmsi
from gmmsi import ConfigError, FactorModel, JointComponent, JointGmm, ModelError
from gmmsi.model import component_from_factors, index_sets, stacked_factor


def _random_factors(nprng, n1=6, n2=5, c=2, w1=2, w2=1, mu1=None, mu2=None):
    return FactorModel(
        p_c1=nprng.standard_normal((n1, c)),
        p_c2=nprng.standard_normal((n2, c)),
        p_1=nprng.standard_normal((n1, w1)),
        p_2=nprng.standard_normal((n2, w2)),
        mu_x1=mu1,
        mu_x2=mu2,
    )


def test_factor_covariances(nprng):
    f = _random_factors(nprng)
    comp = component_from_factors(f)
    assert np.allclose(comp.sigma_x1, f.p_c1 @ f.p_c1.T + f.p_1 @ f.p_1.T)
    assert np.allclose(comp.sigma_x2, f.p_c2 @ f.p_c2.T + f.p_2 @ f.p_2.T)
    assert np.allclose(comp.sigma_x12, f.p_c1 @ f.p_c2.T)
    assert np.allclose(comp.mu_x, 0.0)


def test_stacked_factor_reproduces_joint_covariance(nprng):
    f = _random_factors(nprng)
    comp = component_from_factors(f)
    load = stacked_factor(f)
    assert load.shape == (11, 5)
    assert np.allclose(load @ load.T, comp.sigma_x)


def test_mismatched_common_width_rejected(nprng):
    with pytest.raises(ModelError):
        FactorModel(
            p_c1=nprng.standard_normal((6, 2)),
            p_c2=nprng.standard_normal((5, 3)),
            p_1=nprng.standard_normal((6, 1)),
            p_2=nprng.standard_normal((5, 1)),
        )


def test_zero_width_factors_allowed(nprng):
    f = FactorModel(
        p_c1=nprng.standard_normal((4, 2)),
        p_c2=nprng.standard_normal((3, 2)),
        p_1=np.zeros((4, 0)),
        p_2=np.zeros((3, 0)),
    )
    comp = component_from_factors(f)
    assert comp.sigma_x.shape == (7, 7)


def test_component_validation(nprng):
    sym = nprng.standard_normal((3, 3))
    sym = sym @ sym.T
    bad = sym.copy()
    bad[0, 1] += 1e-3
    with pytest.raises(ModelError):
        JointComponent(np.zeros(3), np.zeros(2), bad, np.eye(2), np.zeros((3, 2)))
    with pytest.raises(ModelError):
        JointComponent(np.zeros(3), np.zeros(2), -np.eye(3), np.eye(2), np.zeros((3, 2)))


def test_component_arrays_frozen(nprng):
    comp = component_from_factors(_random_factors(nprng))
    with pytest.raises(ValueError):
        comp.sigma_x1[0, 0] = 5.0


def test_prior_validation(nprng):
    comp = component_from_factors(_random_factors(nprng))
    with pytest.raises(ModelError):
        JointGmm(prior=np.array([[1.2]]), components={(1, 1): comp})
    with pytest.raises(ModelError):
        JointGmm(prior=np.array([[-0.1], [1.1]]), components={(1, 1): comp, (2, 1): comp})
    # tiny drift is renormalized
    m = JointGmm(prior=np.array([[0.5 + 1e-12], [0.5]]), components={(1, 1): comp, (2, 1): comp})
    assert abs(m.prior.sum() - 1.0) < 1e-15


def test_dims_must_agree(nprng):
    a = component_from_factors(_random_factors(nprng))
    b = component_from_factors(_random_factors(nprng, n1=7))
    with pytest.raises(ModelError):
        JointGmm(prior=np.array([[0.5], [0.5]]), components={(1, 1): a, (2, 1): b})


def test_index_sets(mixture):
    sets = index_sets(mixture)
    assert len(sets.s) == 4
    assert len(sets.s_sic) == 8
    assert len(sets.s_dc) == 12
    assert all(i != j for (i, k, j, l) in sets.s_sic)
    assert list(sets.s) == sorted(sets.s)


def test_sampling_shapes_and_labels(mixture):
    s = gmmsi.sample_joint(mixture, 500, seed=3)
    assert s.x1.shape == (500, 20)
    assert s.x2.shape == (500, 12)
    assert set(np.unique(s.c1)) <= {1, 2}
    assert set(np.unique(s.c2)) <= {1, 2}


def test_sampling_prefix_property(mixture):
    big = gmmsi.sample_joint(mixture, 200, seed=3)
    small = gmmsi.sample_joint(mixture, 50, seed=3)
    # labels match exactly; values only up to shape-dependent matmul rounding
    assert np.allclose(big.x1[:50], small.x1, rtol=0, atol=1e-12)
    assert np.array_equal(big.c1[:50], small.c1)
    assert np.array_equal(big.c2[:50], small.c2)
    again = gmmsi.sample_joint(mixture, 200, seed=3)
    assert np.array_equal(big.x1, again.x1) and np.array_equal(big.x2, again.x2)


def test_sample_covariance_converges(mixture):
    pair = (1, 2)
    x1, x2 = gmmsi.sample_pair(mixture, pair, 60_000, seed=5)
    emp = x1.T @ x1 / x1.shape[0]
    ref = mixture.component(pair).sigma_x1
    assert np.abs(emp - ref).max() < 0.15
    emp12 = x1.T @ x2 / x1.shape[0]
    assert np.abs(emp12 - mixture.component(pair).sigma_x12).max() < 0.15


def test_label_frequencies_match_prior(mixture):
    s = gmmsi.sample_joint(mixture, 40_000, seed=8)
    for i in (1, 2):
        for k in (1, 2):
            freq = np.mean((s.c1 == i) & (s.c2 == k))
            assert abs(freq - 0.25) < 0.01


def test_toml_round_trip(tmp_path, mixture):
    path = tmp_path / "model.toml"
    gmmsi.save_model(mixture, path)
    back = gmmsi.load_model(path)
    assert back.n1 == mixture.n1 and back.n2 == mixture.n2
    assert np.allclose(back.prior, mixture.prior)
    for pair, comp in mixture.components.items():
        other = back.component(pair)
        assert np.allclose(other.sigma_x, comp.sigma_x, atol=1e-12)
        assert np.allclose(other.mu_x, comp.mu_x, atol=1e-12)


def test_load_rejects_garbage(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[dims]\nn1 = 4\n")
    with pytest.raises(ConfigError):
        gmmsi.load_model(path)
    path.write_text("not toml at all [[[")
    with pytest.raises(ConfigError):
        gmmsi.load_model(path)
