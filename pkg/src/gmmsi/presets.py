"""Ready-made models used by the demos and the test suite.

The interesting regimes need rank coincidences between components:
covariances that overlap on common subspaces so that some label pairs
are hard to tell apart at any noise level while others separate. The
builders here get that by drawing small pools of random columns and
letting components reuse them.
"""

from __future__ import annotations

import numpy as np

from . import rng
from .model import FactorModel, JointGmm, component_from_factors

# stream tags inside a preset seed
_POOL1, _POOL2, _INNOV1, _INNOV2, _PRIOR, _MEANS, _PICK = range(7)


def _factors(pc1, pc2, p1, p2, mu1=None, mu2=None):
    return component_from_factors(
        FactorModel(p_c1=pc1, p_c2=pc2, p_1=p1, p_2=p2, mu_x1=mu1, mu_x2=mu2)
    )


def shared_subspace_mixture(seed=0):
    """Two-by-two zero-mean mixture on R^20 x R^12 with reused columns.

    Each component couples the signals through four common columns and
    adds three private columns on the first signal, two on the second,
    so every component has rank triple (7, 6, 9). Components of the
    same first label share all their common columns and some private
    ones; across first labels only part of the pools is shared. The six
    pairwise covariance sums then realize distinct rank triples, which
    is what makes the error floors and phase transitions of this model
    land at different feature counts. Uniform prior.
    """
    g = rng.normals(seed, _POOL1, (20, 5))    # common columns, first signal
    h = rng.normals(seed, _POOL2, (12, 7))    # common columns, second signal
    u = rng.normals(seed, _INNOV1, (20, 6))   # private columns, first signal
    v = rng.normals(seed, _INNOV2, (12, 7))   # private columns, second signal

    common_a = (g[:, [0, 1, 2, 3]], h[:, [0, 1, 2, 3]])
    common_b = (g[:, [0, 1, 2, 4]], h[:, [4, 5, 6, 0]])
    components = {
        (1, 1): _factors(*common_a, u[:, [0, 1, 2]], v[:, [0, 1]]),
        (1, 2): _factors(*common_a, u[:, [0, 1, 3]], v[:, [2, 3]]),
        (2, 1): _factors(*common_b, u[:, [0, 3, 4]], v[:, [2, 4]]),
        (2, 2): _factors(*common_b, u[:, [3, 4, 5]], v[:, [5, 6]]),
    }
    return JointGmm(prior=np.full((2, 2), 0.25), components=components)


def coupled_gaussian_pair(seed=0):
    """Single zero-mean component on R^5 x R^4 with rank triple (3, 3, 4).

    Two common columns tie the signals together and each adds one
    private column. Factor columns are orthonormalized within each
    signal and get O(1) scales, so both marginal spectra are balanced:
    recovery failures cost a visible fraction of the signal energy
    instead of hiding in a weak eigendirection. Small enough that
    exhaustive feature-count grids stay cheap.
    """
    q1 = np.linalg.qr(rng.normals(seed, _POOL1, (5, 3)))[0]
    q2 = np.linalg.qr(rng.normals(seed, _POOL2, (4, 3)))[0]
    pc1 = q1[:, :2] * np.array([2.0, 1.5])
    p1 = q1[:, 2:] * 1.2
    pc2 = q2[:, :2] * np.array([1.8, 1.4])
    p2 = q2[:, 2:] * 1.1
    return JointGmm(prior=np.array([[1.0]]), components={(1, 1): _factors(pc1, pc2, p1, p2)})


def random_low_rank_mixture(
    seed,
    n1=8,
    n2=6,
    k1=2,
    k2=2,
    common=2,
    innov1=2,
    innov2=2,
    pool_margin=2,
    nonzero_means=False,
    uniform_prior=True,
):
    """Random mixture whose components draw columns from shared pools.

    Pool sizes exceed the per-component widths by pool_margin, so
    column reuse (hence rank coincidence between components) happens
    often but not always. With nonzero_means each component also gets a
    generic mean. Useful for property tests that need variety rather
    than a specific rank table.
    """
    if min(n1, n2, k1, k2) < 1 or min(common, innov1, innov2, pool_margin) < 0:
        raise ValueError("dimensions must be positive, widths non-negative")
    if common > min(n1, n2) or common + innov1 > n1 or common + innov2 > n2:
        raise ValueError("factor widths must not exceed signal dimensions")
    pool_c1 = rng.normals(seed, _POOL1, (n1, common + pool_margin))
    pool_c2 = rng.normals(seed, _POOL2, (n2, common + pool_margin))
    pool_1 = rng.normals(seed, _INNOV1, (n1, innov1 + pool_margin))
    pool_2 = rng.normals(seed, _INNOV2, (n2, innov2 + pool_margin))
    means = rng.normals(seed, _MEANS, (k1 * k2, n1 + n2)) if nonzero_means else None
    pick = rng.generator(seed, _PICK)

    components = {}
    for i in range(1, k1 + 1):
        for k in range(1, k2 + 1):
            cols_c = pick.choice(pool_c1.shape[1], size=common, replace=False)
            cols_1 = pick.choice(pool_1.shape[1], size=innov1, replace=False)
            cols_2 = pick.choice(pool_2.shape[1], size=innov2, replace=False)
            idx = (i - 1) * k2 + (k - 1)
            mu1 = means[idx, :n1] if nonzero_means else None
            mu2 = means[idx, n1:] if nonzero_means else None
            components[(i, k)] = _factors(
                pool_c1[:, cols_c], pool_c2[:, cols_c], pool_1[:, cols_1], pool_2[:, cols_2],
                mu1, mu2,
            )
    if uniform_prior:
        prior = np.full((k1, k2), 1.0 / (k1 * k2))
    else:
        raw = rng.uniforms(seed, _PRIOR, k1 * k2).reshape(k1, k2) + 0.1
        prior = raw / raw.sum()
    return JointGmm(prior=prior, components=components)
