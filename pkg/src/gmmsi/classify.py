"""Label inference from noisy features and its asymptotic analysis.

Two decision problems share the machinery here. With side information,
the decoder sees the features of both signals but only the label of the
first is in question; the optimal rule marginalizes the second label.
In the distributed problem both labels are decided jointly. For each
rule the module provides the exact decision, a Bhattacharyya-style
analytic upper bound on average error, the diversity order (the
low-noise log-log slope of that error), and categorical verdicts:
does the error vanish with the noise or does it hit a floor.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.special import logsumexp

from .geometry import projected_rank
from .model import ClassPair, index_sets
from .sensing import assemble

_LOG_2PI = math.log(2.0 * math.pi)

MODES = ("side_info", "distributed")

OUTCOMES = ("phase_transition", "error_floor", "exponential_decay", "polynomial_decay")


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


class ProjectedMixture:
    """Mixture pushed through a fixed feature pair.

    Eigendecomposes phi Sigma^(ik) phi^T once per component, after which
    log-likelihoods for any noise level are diagonal operations. Columns
    of every per-sample matrix follow the lexicographic support order.
    """

    def __init__(self, model, phi):
        self.model = model
        self.phi = phi
        self.sets = index_sets(model)
        self.pairs = self.sets.s
        full = assemble(phi)
        self.m = full.shape[0]
        means = []
        eigvecs = []
        eigvals = []
        for pair in self.pairs:
            comp = model.component(pair)
            proj = full @ comp.sigma_x @ full.T
            w, v = np.linalg.eigh(0.5 * (proj + proj.T))
            eigvals.append(np.clip(w, 0.0, None))
            eigvecs.append(v)
            means.append(full @ comp.mu_x)
        self.proj_mean = np.array(means)          # (P, m)
        self.eigvecs = np.array(eigvecs)          # (P, m, m)
        self.eigvals = np.array(eigvals)          # (P, m)
        self.log_prior = np.log(np.array([model.prior_of(p) for p in self.pairs]))

    def loglik(self, y, sigma2):
        """Log densities, shape (count, len(pairs))."""
        sigma2 = float(sigma2)
        if not sigma2 > 0.0:
            raise ValueError("sigma2 must be positive")
        y = np.atleast_2d(np.asarray(y, dtype=float))
        if y.shape[1] != self.m:
            raise ValueError(f"y must have {self.m} features, got {y.shape[1]}")
        out = np.empty((y.shape[0], len(self.pairs)))
        for idx in range(len(self.pairs)):
            d = self.eigvals[idx] + sigma2
            t = (y - self.proj_mean[idx]) @ self.eigvecs[idx]
            quad = np.einsum("nm,m,nm->n", t, 1.0 / d, t)
            out[:, idx] = -0.5 * (self.m * _LOG_2PI + np.log(d).sum() + quad)
        return out

    def log_posterior(self, y, sigma2):
        """Unnormalized log posterior over support pairs, shape (count, P)."""
        return self.loglik(y, sigma2) + self.log_prior


def log_class_likelihood(y, model, phi, sigma2, pair):
    """Log density of the features under one component.

    y is a single feature vector (m1 + m2,) or a batch (count, .);
    returns a float or a (count,) array accordingly.
    """
    pm = ProjectedMixture(model, phi)
    try:
        idx = pm.pairs.index(tuple(pair))
    except ValueError:
        raise ValueError(f"pair {tuple(pair)} not in the support of the prior") from None
    single = np.asarray(y).ndim == 1
    vals = pm.loglik(y, sigma2)[:, idx]
    return float(vals[0]) if single else vals


def side_info_decisions(pairs, log_post):
    """First-label decisions from an unnormalized log posterior batch.

    Marginalizes the second label by log-sum-exp over the columns of
    each first label; ties resolve to the smallest label.
    """
    classes = sorted({p[0] for p in pairs})
    scores = np.full((log_post.shape[0], len(classes)), -np.inf)
    for col, i in enumerate(classes):
        members = [idx for idx, p in enumerate(pairs) if p[0] == i]
        scores[:, col] = logsumexp(log_post[:, members], axis=1)
    # argmax takes the first maximizer, i.e. the smallest class label
    return np.array(classes, dtype=np.int64)[np.argmax(scores, axis=1)]


def map_side_info(y, model, phi, sigma2):
    """Most probable first label given all features, second label summed out.

    Ties resolve to the smallest label. Returns an int for a single
    feature vector, an int array for a batch.
    """
    pm = ProjectedMixture(model, phi)
    single = np.asarray(y).ndim == 1
    dec = side_info_decisions(pm.pairs, pm.log_posterior(y, sigma2))
    return int(dec[0]) if single else dec


def map_distributed(y, model, phi, sigma2):
    """Most probable label pair. Ties resolve lexicographically.

    Returns a (i, k) pair for a single vector, an (count, 2) int array
    for a batch.
    """
    pm = ProjectedMixture(model, phi)
    single = np.asarray(y).ndim == 1
    best = np.argmax(pm.log_posterior(y, sigma2), axis=1)
    pairs = np.array(pm.pairs, dtype=np.int64)
    dec = pairs[best]
    if single:
        return ClassPair(int(dec[0, 0]), int(dec[0, 1]))
    return dec


# ---------------------------------------------------------------------------
# Bhattacharyya bound


def bound_weight(model, quad, mode):
    """Weight of one ordered quadruple in the analytic error bound.

    side_info pairs the class marginal of the true label with the
    geometric mean of the conditional second-label probabilities, which
    collapses to sqrt(p(i)/p(j)) sqrt(p(ik) p(jl)). distributed uses the
    plain prior of the true pair.
    """
    _check_mode(mode)
    a, b = (quad[0], quad[1]), (quad[2], quad[3])
    pa, pb = model.prior_of(a), model.prior_of(b)
    if mode == "side_info":
        p_c1 = model.prior.sum(axis=1)
        return math.sqrt(p_c1[a[0] - 1] / p_c1[b[0] - 1]) * math.sqrt(pa * pb)
    return pa


class BhattTable:
    """Pairwise overlap exponents for every confusable ordered quadruple.

    All sigma2 dependence is diagonal: one eigendecomposition per
    component and per unordered quadruple serves a whole noise sweep.
    """

    def __init__(self, model, phi, mode="side_info"):
        _check_mode(mode)
        self.mode = mode
        sets = index_sets(model)
        self.quads = sets.s_sic if mode == "side_info" else sets.s_dc
        full = assemble(phi)
        self.m = full.shape[0]
        pair_index = {p: idx for idx, p in enumerate(sets.s)}
        proj_cov = []
        proj_mean = []
        for p in sets.s:
            comp = model.component(p)
            raw = full @ comp.sigma_x @ full.T
            proj_cov.append(0.5 * (raw + raw.T))
            proj_mean.append(full @ comp.mu_x)
        comp_eigs = [np.clip(np.linalg.eigvalsh(c), 0.0, None) for c in proj_cov]

        seen = {}
        lam_a, lam_b, lam_sum, zproj, weights = [], [], [], [], []
        for quad in self.quads:
            a, b = (quad[0], quad[1]), (quad[2], quad[3])
            ia, ib = pair_index[a], pair_index[b]
            key = (min(ia, ib), max(ia, ib))
            if key not in seen:
                s = proj_cov[ia] + proj_cov[ib]
                w, v = np.linalg.eigh(s)
                seen[key] = (np.clip(w, 0.0, None), v)
            w, v = seen[key]
            lam_a.append(comp_eigs[ia])
            lam_b.append(comp_eigs[ib])
            lam_sum.append(w)
            zproj.append(v.T @ (proj_mean[ia] - proj_mean[ib]))
            weights.append(bound_weight(model, quad, mode))
        shape = (len(self.quads), self.m)
        self.lam_a = np.array(lam_a).reshape(shape)
        self.lam_b = np.array(lam_b).reshape(shape)
        self.lam_sum = np.array(lam_sum).reshape(shape)
        self.zproj = np.array(zproj).reshape(shape)
        self.weights = np.array(weights)

    def exponents(self, sigma2):
        """Overlap exponent K per quadruple, shape (len(quads),)."""
        sigma2 = float(sigma2)
        if not sigma2 > 0.0:
            raise ValueError("sigma2 must be positive")
        half = 0.5 * (self.lam_sum + 2.0 * sigma2)
        quad = 0.125 * (self.zproj**2 / half).sum(axis=1)
        logdet = (
            np.log(half).sum(axis=1)
            - 0.5 * np.log(self.lam_a + sigma2).sum(axis=1)
            - 0.5 * np.log(self.lam_b + sigma2).sum(axis=1)
        )
        return quad + 0.5 * logdet

    def bound(self, sigma2):
        """Weighted overlap sum: the analytic error upper bound."""
        if len(self.quads) == 0:
            return 0.0
        return float(np.exp(np.log(self.weights) - self.exponents(sigma2)).sum())


def bhatt_exponent(model, phi, sigma2, quad):
    """Overlap exponent K between the components of one ordered quadruple.

    exp(-K) is the integral of the geometric mean of the two projected
    densities at noise level sigma2.
    """
    table = BhattTable(model, phi, mode="distributed")
    try:
        idx = table.quads.index(tuple(quad))
    except ValueError:
        raise ValueError(f"quadruple {tuple(quad)} is not a pair of distinct support labels") from None
    return float(table.exponents(sigma2)[idx])


def perr_upper_bound(model, phi, sigma2, mode="side_info"):
    """Analytic upper bound on the average error probability.

    Sum of exp(-K) over confusable ordered quadruples, weighted by
    sqrt(p(i)/p(j)) sqrt(p(ik) p(jl)) in side_info mode and by p(ik) in
    distributed mode. Each term is at most its weight, so the sum never
    exceeds the total weight; values above one are vacuous but returned
    as computed.
    """
    return BhattTable(model, phi, mode).bound(sigma2)


# ---------------------------------------------------------------------------
# diversity and verdicts


@dataclasses.dataclass(frozen=True)
class DiversityReport:
    """Low-noise decay order of the error bound.

    d is the minimum of the per-quadruple exponents (math.inf when no
    quadruple is confusable); binding lists the quadruples attaining it.
    """

    mode: str
    m1: int
    m2: int
    d: float
    binding: tuple
    per_quadruple: dict


def pairwise_diversity(geometry, quad, m1, m2):
    """Decay exponent contributed by one ordered quadruple.

    Half the gap between the projected rank of the covariance sum and
    the average projected rank of the two components; a non-negative
    multiple of 1/4, zero exactly when the quadruple causes a floor.
    """
    quad = tuple(quad)
    try:
        pr = geometry.pair_ranks[quad]
    except KeyError:
        raise ValueError(f"quadruple {quad} not in the geometry table") from None
    a = geometry.component_ranks[(quad[0], quad[1])]
    b = geometry.component_ranks[(quad[2], quad[3])]
    r_sum = projected_rank(m1, m2, pr)
    r_a = projected_rank(m1, m2, a)
    r_b = projected_rank(m1, m2, b)
    return 0.5 * (r_sum - 0.5 * (r_a + r_b))


def diversity_order(geometry, m1, m2, mode="side_info"):
    """Worst-case decay exponent over the confusable quadruples of a mode."""
    _check_mode(mode)
    quads = geometry.sets.s_sic if mode == "side_info" else geometry.sets.s_dc
    per = {q: pairwise_diversity(geometry, q, m1, m2) for q in quads}
    if not per:
        return DiversityReport(mode, int(m1), int(m2), math.inf, (), {})
    d = min(per.values())
    binding = tuple(q for q in quads if per[q] == d)
    return DiversityReport(mode, int(m1), int(m2), d, binding, per)


@dataclasses.dataclass(frozen=True)
class Verdict:
    """Categorical low-noise behavior of the average error.

    outcome is one of phase_transition / error_floor for zero-mean
    models and exponential_decay / polynomial_decay / error_floor for
    models with means. case records which rank pattern decided the
    binding quadruple ("case1".."case4", "rank_overlap" for an
    unavoidable floor, "mixed" when the pattern is outside the four
    enumerated ones and the rank gap itself was tested). d is the decay
    exponent (0 at a floor, inf for exponential decay).
    """

    mode: str
    m1: int
    m2: int
    outcome: str
    case: str
    binding_quadruple: tuple
    d: float
    per_quadruple: dict


def _case_of(cr_a, cr_b, pr):
    """Which enumerated rank pattern an ordered quadruple falls in."""
    strict1 = pr.r_x1_pair > cr_a.r_x1 and pr.r_x1_pair > cr_b.r_x1
    equal1 = pr.r_x1_pair == cr_a.r_x1 == cr_b.r_x1
    strict2 = pr.r_x2_pair > cr_a.r_x2 and pr.r_x2_pair > cr_b.r_x2
    equal2 = pr.r_x2_pair == cr_a.r_x2 == cr_b.r_x2
    if strict1 and strict2:
        return "case1"
    if equal1 and equal2:
        return "case2"
    if strict1 and equal2:
        return "case3"
    if equal1 and strict2:
        return "case4"
    return "mixed"


def _zero_mean_condition(case, cr_a, cr_b, pr, m1, m2):
    """Feature counts that push the quadruple's error to zero with the noise."""
    r1 = min(cr_a.r_x1, cr_b.r_x1)
    r2 = min(cr_a.r_x2, cr_b.r_x2)
    r = min(cr_a.r_x, cr_b.r_x)
    gap2 = min(cr_a.r_x - cr_a.r_x2, cr_b.r_x - cr_b.r_x2)  # what m1 must beat
    gap1 = min(cr_a.r_x - cr_a.r_x1, cr_b.r_x - cr_b.r_x1)  # what m2 must beat
    if case == "case1":
        return m1 > r1 or m2 > r2 or m1 + m2 > r
    if case == "case2":
        return m1 > gap2 and m2 > gap1 and m1 + m2 > r
    if case == "case3":
        return m1 > r1 or (m1 > gap2 and m1 + m2 > r)
    if case == "case4":
        return m2 > r2 or (m2 > gap1 and m1 + m2 > r)
    raise ValueError(case)


def classification_phase_verdict(geometry, m1, m2, mode="side_info"):
    """Phase transition or error floor for a zero-mean model.

    Requires every component mean to vanish; models with means follow
    exp_decay_verdict instead. The verdict is exact: the enumerated
    rank-pattern conditions are used where they apply, and quadruples
    with mixed patterns are decided by the sign of the projected rank
    gap, which is what the conditions encode.
    """
    _check_mode(mode)
    m1, m2 = int(m1), int(m2)
    if m1 < 0 or m2 < 0:
        raise ValueError("feature counts must be non-negative")
    if not geometry.zero_mean:
        raise ValueError("model has nonzero means; use exp_decay_verdict")
    quads = geometry.sets.s_sic if mode == "side_info" else geometry.sets.s_dc
    cases = {}
    failing = []
    for quad in quads:
        cr_a = geometry.component_ranks[(quad[0], quad[1])]
        cr_b = geometry.component_ranks[(quad[2], quad[3])]
        pr = geometry.pair_ranks[quad]
        if pr.r_x_pair == cr_a.r_x == cr_b.r_x:
            # full covariance overlap: no feature budget separates these
            cases[quad] = "rank_overlap"
            failing.append(quad)
            continue
        case = _case_of(cr_a, cr_b, pr)
        cases[quad] = case
        if case == "mixed":
            ok = pairwise_diversity(geometry, quad, m1, m2) > 0
        else:
            ok = _zero_mean_condition(case, cr_a, cr_b, pr, m1, m2)
        if not ok:
            failing.append(quad)
    if failing:
        binding = failing[0]
        return Verdict(mode, m1, m2, "error_floor", cases[binding], binding, 0.0, cases)
    rep = diversity_order(geometry, m1, m2, mode)
    binding = rep.binding[0] if rep.binding else ()
    case = cases.get(binding, "")
    return Verdict(mode, m1, m2, "phase_transition", case, binding, rep.d, cases)


def exp_decay_verdict(geometry, m1, m2, mode="side_info"):
    """Exponential decay, polynomial decay, or floor for models with means.

    A quadruple whose mean difference escapes the range of the summed
    covariance can be driven to exponentially small error when its
    feature-count condition holds; quadruples with in-range means or a
    failed condition decay at best polynomially, at the rate of their
    projected rank gap. The slowest quadruple wins. With all means zero
    this reduces to the polynomial verdict.
    """
    _check_mode(mode)
    m1, m2 = int(m1), int(m2)
    if m1 < 0 or m2 < 0:
        raise ValueError("feature counts must be non-negative")
    quads = geometry.sets.s_sic if mode == "side_info" else geometry.sets.s_dc
    cases = {}
    slow = []  # quadruples stuck at polynomial decay
    for quad in quads:
        pr = geometry.pair_ranks[quad]
        mu1_in, mu2_in, mu_in = geometry.mean_in_range[quad]
        if mu_in:
            cases[quad] = "in_range"
            slow.append(quad)
            continue
        r1, r2, r = pr.triple
        if not mu1_in and not mu2_in:
            case = "case1"
            ok = m1 > r1 or m2 > r2 or m1 + m2 > r
        elif mu1_in and mu2_in:
            case = "case2"
            ok = m1 > r - r2 and m2 > r - r1 and m1 + m2 > r
        elif not mu1_in:
            case = "case3"
            ok = m1 > r1 or (m1 > r - r2 and m1 + m2 > r)
        else:
            case = "case4"
            ok = m2 > r2 or (m2 > r - r1 and m1 + m2 > r)
        cases[quad] = case
        if not ok:
            slow.append(quad)
    if not slow:
        return Verdict(mode, m1, m2, "exponential_decay", "", (), math.inf, cases)
    per = {q: pairwise_diversity(geometry, q, m1, m2) for q in slow}
    d = min(per.values())
    binding = next(q for q in slow if per[q] == d)
    outcome = "error_floor" if d == 0.0 else "polynomial_decay"
    return Verdict(mode, m1, m2, outcome, cases[binding], binding, d, cases)
