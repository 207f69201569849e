"""Signal recovery from noisy features, with analytic error limits.

For one Gaussian component the conditional mean is linear in the
features and its error has a closed form; those are the building
blocks. For a mixture the conditional mean weighs per-component linear
estimates by the feature posterior. A cheaper decoder classifies first
and reconstructs with the winner's filter. The oracle lower bound
assumes labels were handed to the decoder for free.

Targets: "x1" recovers the primary signal from all features (side
information setting); "joint" recovers the stacked pair (distributed
setting). Phase verdicts mirror the analytic conditions for each.
"""

from __future__ import annotations

import dataclasses

import numpy as np
from scipy.special import logsumexp

from .classify import ProjectedMixture
from .model import ClassPair, index_sets
from .sensing import assemble

TARGETS = ("x1", "joint")

THEOREMS = (
    "gaussian",
    "gmm_sufficient",
    "gmm_necessary",
    "dist_gaussian",
    "dist_gmm_sufficient",
    "dist_gmm_necessary",
)


def _check_target(target):
    if target not in TARGETS:
        raise ValueError(f"target must be one of {TARGETS}, got {target!r}")


class PairFilter:
    """Linear conditional-mean machinery for one component.

    One eigendecomposition of phi Sigma phi^T serves every noise level:
    gains, estimates and error traces are diagonal reweightings.
    """

    def __init__(self, component, phi):
        self.component = component
        full = assemble(phi)
        self.m = full.shape[0]
        self.n1 = component.n1
        self.n = component.n1 + component.n2
        sigma = component.sigma_x
        raw = full @ sigma @ full.T
        w, v = np.linalg.eigh(0.5 * (raw + raw.T))
        self.eigvals = np.clip(w, 0.0, None)
        self.eigvecs = v
        self.cross = sigma @ full.T @ v        # (n, m), rows cover the stacked signal
        self.proj_mean = full @ component.mu_x
        self.mu_x = component.mu_x

    def _rows(self, target):
        return slice(0, self.n1) if target == "x1" else slice(0, self.n)

    def gain(self, sigma2, target="x1"):
        """Feature-to-signal gain matrix at one noise level."""
        _check_target(target)
        r = self._rows(target)
        return (self.cross[r] / (self.eigvals + float(sigma2))) @ self.eigvecs.T

    def estimate(self, y, sigma2, target="x1"):
        """Conditional mean of the target given features, batched."""
        _check_target(target)
        sigma2 = float(sigma2)
        if not sigma2 > 0.0:
            raise ValueError("sigma2 must be positive")
        y = np.atleast_2d(np.asarray(y, dtype=float))
        r = self._rows(target)
        t = (y - self.proj_mean) @ self.eigvecs
        return self.mu_x[r] + (t / (self.eigvals + sigma2)) @ self.cross[r].T

    def mmse(self, sigma2, target="x1"):
        """Exact mean squared error of the conditional mean."""
        _check_target(target)
        sigma2 = float(sigma2)
        if not sigma2 > 0.0:
            raise ValueError("sigma2 must be positive")
        r = self._rows(target)
        prior_trace = np.trace(self.component.sigma_x[r, r])
        gain_trace = ((self.cross[r] ** 2) / (self.eigvals + sigma2)).sum()
        return float(prior_trace - gain_trace)


@dataclasses.dataclass(frozen=True, eq=False)
class GaussianEstimator:
    """Closed-form conditional mean for one component at one noise level."""

    gain: np.ndarray
    offset: np.ndarray
    mmse: float
    sigma2: float
    target: str

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return self.offset + y @ self.gain.T


def gaussian_estimator(component, phi, sigma2, target="x1"):
    """Build the linear conditional-mean estimator and its error."""
    pf = PairFilter(component, phi)
    gain = pf.gain(sigma2, target)
    rows = slice(0, pf.n1) if target == "x1" else slice(0, pf.n)
    offset = pf.mu_x[rows] - gain @ pf.proj_mean
    return GaussianEstimator(
        gain=gain, offset=offset, mmse=pf.mmse(sigma2, target), sigma2=float(sigma2), target=target
    )


def gaussian_cme(y, component, phi, sigma2, target="x1"):
    """Conditional mean of the target under one Gaussian component.

    y is (m1 + m2,) or (count, .); the estimate matches in shape.
    """
    pf = PairFilter(component, phi)
    single = np.asarray(y).ndim == 1
    est = pf.estimate(y, sigma2, target)
    return est[0] if single else est


def gaussian_mmse(component, phi, sigma2, target="x1"):
    """Exact mean squared error of the Gaussian conditional mean."""
    return PairFilter(component, phi).mmse(sigma2, target)


@dataclasses.dataclass(frozen=True, eq=False)
class GmmPosterior:
    """Posterior over support pairs for one or more feature vectors.

    log_weights has shape (count, len(pairs)) and each row sums to one
    after exponentiation.
    """

    pairs: tuple
    log_weights: np.ndarray

    @property
    def weights(self):
        return np.exp(self.log_weights)


def _posterior(pm, y, sigma2):
    log_post = pm.log_posterior(y, sigma2)
    return log_post - logsumexp(log_post, axis=1, keepdims=True)


def gmm_cme(y, model, phi, sigma2, target="x1"):
    """Conditional mean of the target under the mixture.

    Returns (estimate, GmmPosterior). The estimate is the posterior-
    weighted blend of per-component conditional means; its x1 target
    coincides with the leading block of the joint target, so estimating
    a block and marginalizing commute.
    """
    _check_target(target)
    pm = ProjectedMixture(model, phi)
    single = np.asarray(y).ndim == 1
    y2d = np.atleast_2d(np.asarray(y, dtype=float))
    logw = _posterior(pm, y2d, sigma2)
    w = np.exp(logw)
    filters = [PairFilter(model.component(p), phi) for p in pm.pairs]
    est = None
    for idx, pf in enumerate(filters):
        part = pf.estimate(y2d, sigma2, target) * w[:, idx : idx + 1]
        est = part if est is None else est + part
    post = GmmPosterior(pairs=pm.pairs, log_weights=logw)
    return (est[0] if single else est), post


def classify_reconstruct(y, model, phi, sigma2, target="x1"):
    """Decide the most probable pair, then apply its linear filter.

    Returns (estimate, labels) with labels the (count, 2) decided pairs
    (a single ClassPair for a single vector). Cheaper than the full
    conditional mean and asymptotically as good whenever the labels can
    be learned from the features.
    """
    _check_target(target)
    pm = ProjectedMixture(model, phi)
    single = np.asarray(y).ndim == 1
    y2d = np.atleast_2d(np.asarray(y, dtype=float))
    best = np.argmax(pm.log_posterior(y2d, sigma2), axis=1)
    filters = [PairFilter(model.component(p), phi) for p in pm.pairs]
    width = filters[0].n1 if target == "x1" else filters[0].n
    est = np.empty((y2d.shape[0], width))
    for idx, pf in enumerate(filters):
        rows = np.flatnonzero(best == idx)
        if rows.size:
            est[rows] = pf.estimate(y2d[rows], sigma2, target)
    labels = np.array(pm.pairs, dtype=np.int64)[best]
    if single:
        return est[0], ClassPair(int(labels[0, 0]), int(labels[0, 1]))
    return est, labels


def mse_lower_bound(model, phi, sigma2, target="x1"):
    """Error of the label-aware oracle: prior-weighted per-pair errors.

    No decoder that must infer the labels can do better at any noise
    level.
    """
    _check_target(target)
    sets = index_sets(model)
    total = 0.0
    for pair in sets.s:
        pf = PairFilter(model.component(pair), phi)
        total += model.prior_of(pair) * pf.mmse(sigma2, target)
    return float(total)


@dataclasses.dataclass(frozen=True)
class ReconVerdict:
    """Does the reconstruction error vanish as the noise does.

    outcome is "transition" or "no_transition"; binding_pair names the
    first component violating the feature-count condition (None when
    all pass). theorem records which analytic condition was evaluated.
    """

    theorem: str
    m1: int
    m2: int
    outcome: str
    binding_pair: object


def _si_condition(m1, m2, r1, r2, r, strict):
    if strict:
        return m1 > r1 or (m1 > r - r2 and m1 + m2 > r)
    return m1 >= r1 or (m1 >= r - r2 and m1 + m2 >= r)


def _joint_condition(m1, m2, r1, r2, r, strict):
    if strict:
        return m1 > r - r2 and m2 > r - r1 and m1 + m2 > r
    return m1 >= r - r2 and m2 >= r - r1 and m1 + m2 >= r


def reconstruction_phase_verdict(geometry, m1, m2, theorem="gaussian"):
    """Analytic verdict on vanishing reconstruction error.

    gaussian / dist_gaussian are exact for a single component (and
    require one). gmm_sufficient / dist_gmm_sufficient are strict
    conditions guaranteeing a transition for a mixture; gmm_necessary /
    dist_gmm_necessary are the matching non-strict conditions a
    transition cannot do without. The two bracket every mixture within
    one feature.
    """
    if theorem not in THEOREMS:
        raise ValueError(f"theorem must be one of {THEOREMS}, got {theorem!r}")
    m1, m2 = int(m1), int(m2)
    if m1 < 0 or m2 < 0:
        raise ValueError("feature counts must be non-negative")
    pairs = geometry.sets.s
    if theorem in ("gaussian", "dist_gaussian") and len(pairs) != 1:
        raise ValueError(f"theorem {theorem!r} applies to a single component, support has {len(pairs)}")
    joint = theorem.startswith("dist_")
    strict = theorem.endswith("sufficient")
    shape = _joint_condition if joint else _si_condition
    for pair in pairs:
        r1, r2, r = geometry.component_ranks[pair].triple
        if not shape(m1, m2, r1, r2, r, strict):
            return ReconVerdict(theorem, m1, m2, "no_transition", pair)
    return ReconVerdict(theorem, m1, m2, "transition", None)
