"""Monte Carlo sweeps, slope fits, and feature-count region maps.

A sweep walks a decreasing noise grid and measures one decoder per
task: classify_si / classify_dc count label errors against the exact
decision rules, reconstruct_si / reconstruct_dc measure squared error
of the mixture conditional mean and of the classify-then-filter
decoder. Alongside every empirical value goes its analytic companion
(overlap bound, oracle error) evaluated on the same kernels.

Trials are stratified over the prior with largest-remainder rounding.
All randomness is counter-based: the draw for grid point g, support
pair q depends only on (seed, g, q), so results do not depend on worker
scheduling, batch sizes, or the number of threads (GMMSI_THREADS).
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.special import logsumexp

from . import rng
from .classify import (
    BhattTable,
    ProjectedMixture,
    bound_weight,
    classification_phase_verdict,
    exp_decay_verdict,
    side_info_decisions,
)
from .geometry import geometry_summary
from .model import index_sets, sqrt_factor
from .reconstruct import THEOREMS, PairFilter, reconstruction_phase_verdict
from .sensing import assemble, draw_kernel

TASKS = ("classify_si", "classify_dc", "reconstruct_si", "reconstruct_dc")

_MIN_TRIALS = 100
_MAX_TRIALS = 1_000_000

# stream tags inside a sweep seed
_T_SIGNAL = 1
_T_NOISE = 2
_T_KERNEL1 = 3
_T_KERNEL2 = 4


def wilson_interval(successes, total, z=1.96):
    """Score interval for a binomial proportion; exact at 0 and total."""
    k, n = int(successes), int(total)
    if n <= 0 or not 0 <= k <= n:
        raise ValueError("need 0 <= successes <= total with total > 0")
    p = k / n
    zz = z * z / n
    center = (p + 0.5 * zz) / (1.0 + zz)
    half = z * math.sqrt(p * (1.0 - p) / n + 0.25 * zz / n) / (1.0 + zz)
    return max(0.0, center - half), min(1.0, center + half)


def log_grid(lo=1e-8, hi=1e-1, per_decade=5):
    """Descending geometric noise grid, endpoints included."""
    lo, hi = float(lo), float(hi)
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    decades = math.log10(hi) - math.log10(lo)
    count = max(2, int(round(decades * per_decade)) + 1)
    return np.logspace(math.log10(hi), math.log10(lo), count)


def _allocate(probs, total):
    """Largest-remainder split of total trials over the support."""
    ideal = np.asarray(probs, dtype=float) * total
    base = np.floor(ideal).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        order = np.argsort(-(ideal - base), kind="stable")
        base[order[:short]] += 1
    return base


def _worker_count():
    raw = os.environ.get("GMMSI_THREADS", "")
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"GMMSI_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


@dataclasses.dataclass(frozen=True, eq=False)
class SweepConfig:
    """Everything a sweep needs; validated on construction.

    sigma2_grid defaults to five points per decade from 1e-1 down to
    1e-8. freeze_kernel, when set, draws a single kernel from that seed
    and reuses it everywhere; otherwise every trial gets a fresh kernel
    and analytic columns average over the first bound_kernels of them.
    """

    model: object
    task: str
    m1: int
    m2: int
    sigma2_grid: np.ndarray = None
    trials: int = 1000
    seed: int = 0
    kernel: str = "gaussian"
    freeze_kernel: int = None
    bound_kernels: int = 64

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        m1, m2 = int(self.m1), int(self.m2)
        if m1 < 0 or m2 < 0:
            raise ValueError("feature counts must be non-negative")
        if self.kernel not in ("gaussian", "identity2"):
            raise ValueError(f"kernel must be gaussian or identity2, got {self.kernel!r}")
        if self.kernel == "identity2" and m2 != self.model.n2:
            raise ValueError(f"identity2 forces m2 = n2 = {self.model.n2}, got m2 = {m2}")
        trials = int(self.trials)
        if not _MIN_TRIALS <= trials <= _MAX_TRIALS:
            raise ValueError(f"trials must lie in [{_MIN_TRIALS}, {_MAX_TRIALS}]")
        grid = self.sigma2_grid
        grid = log_grid() if grid is None else np.asarray(grid, dtype=float).ravel()
        if grid.size < 1 or not np.all(np.isfinite(grid)) or np.any(grid <= 0):
            raise ValueError("sigma2_grid must hold positive finite values")
        if grid.size > 1 and not np.all(np.diff(grid) < 0):
            raise ValueError("sigma2_grid must be strictly decreasing")
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")
        if self.freeze_kernel is not None and int(self.freeze_kernel) < 0:
            raise ValueError("freeze_kernel must be a non-negative seed")
        if int(self.bound_kernels) < 1:
            raise ValueError("bound_kernels must be positive")
        grid = grid.copy()
        grid.setflags(write=False)
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "m2", m2)
        object.__setattr__(self, "trials", trials)
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "sigma2_grid", grid)
        object.__setattr__(self, "bound_kernels", int(self.bound_kernels))

    @property
    def mode(self):
        """Decision mode the task implies."""
        return "side_info" if self.task.endswith("_si") else "distributed"

    @property
    def target(self):
        return "x1" if self.task.endswith("_si") else "joint"


def _fmt(x):
    return repr(float(x))


@dataclasses.dataclass(frozen=True, eq=False)
class SweepCurve:
    """One measured curve over the noise grid, with analytic companions.

    Classification tasks fill perr_*; reconstruction tasks fill mse_*.
    Standard errors for the MSE columns live here (not in the CSV) so
    tests can set Monte Carlo tolerances. perr_emp is the raw
    proportion; at zero observed errors it is 0 and perr_hi still gives
    the one-sided Wilson ceiling.
    """

    task: str
    m1: int
    m2: int
    sigma2: np.ndarray
    trials: int
    seed: int
    kernel: str
    freeze_kernel: object
    perr_emp: np.ndarray = None
    perr_lo: np.ndarray = None
    perr_hi: np.ndarray = None
    perr_bound: np.ndarray = None
    mse_emp: np.ndarray = None
    mse_se: np.ndarray = None
    mse_cr_emp: np.ndarray = None
    mse_cr_se: np.ndarray = None
    mmse_gauss: np.ndarray = None
    mse_lb: np.ndarray = None

    @property
    def mode(self):
        return "side_info" if self.task.endswith("_si") else "distributed"

    @property
    def kind(self):
        return "classify" if self.task.startswith("classify") else "reconstruct"

    def csv_text(self):
        """Normative CSV rendering (exact round-trip decimals)."""
        lines = []
        if self.kind == "classify":
            lines.append("sigma2,perr_emp,perr_emp_lo,perr_emp_hi,perr_bound,mode")
            for g, s2 in enumerate(self.sigma2):
                lines.append(
                    ",".join(
                        [
                            _fmt(s2),
                            _fmt(self.perr_emp[g]),
                            _fmt(self.perr_lo[g]),
                            _fmt(self.perr_hi[g]),
                            _fmt(self.perr_bound[g]),
                            self.mode,
                        ]
                    )
                )
        else:
            lines.append("sigma2,mse_emp,mse_cr_emp,mmse_gauss_formula,mse_lb,m1,m2")
            for g, s2 in enumerate(self.sigma2):
                gauss = "" if self.mmse_gauss is None else _fmt(self.mmse_gauss[g])
                lines.append(
                    ",".join(
                        [
                            _fmt(s2),
                            _fmt(self.mse_emp[g]),
                            _fmt(self.mse_cr_emp[g]),
                            gauss,
                            _fmt(self.mse_lb[g]),
                            str(self.m1),
                            str(self.m2),
                        ]
                    )
                )
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sweep internals


def _unordered_bound_terms(model, sets, mode):
    """Unordered quadruples as support indices with both ordered weights."""
    quads = sets.s_sic if mode == "side_info" else sets.s_dc
    pair_index = {p: idx for idx, p in enumerate(sets.s)}
    acc = {}
    for quad in quads:
        ia = pair_index[(quad[0], quad[1])]
        ib = pair_index[(quad[2], quad[3])]
        key = (min(ia, ib), max(ia, ib))
        acc[key] = acc.get(key, 0.0) + bound_weight(model, quad, mode)
    return [(a, b, w) for (a, b), w in sorted(acc.items())]


class _FrozenContext:
    """Shared read-only state for a frozen-kernel sweep."""

    def __init__(self, cfg):
        model = cfg.model
        self.sets = index_sets(model)
        seed = cfg.freeze_kernel if cfg.freeze_kernel is not None else cfg.seed
        self.phi = draw_kernel(model.n1, model.n2, cfg.m1, cfg.m2, seed, cfg.kernel)
        self.full = assemble(self.phi)
        self.pm = ProjectedMixture(model, self.phi)
        self.counts = _allocate([model.prior_of(p) for p in self.sets.s], cfg.trials)
        self.roots = [sqrt_factor(model.component(p)) for p in self.sets.s]
        self.mus = [model.component(p).mu_x for p in self.sets.s]


def _classify_point_frozen(cfg, ctx, bt, g):
    s2 = float(cfg.sigma2_grid[g])
    sq = math.sqrt(s2)
    m = ctx.full.shape[0]
    errors = 0
    for q, pair in enumerate(ctx.sets.s):
        nq = int(ctx.counts[q])
        if nq == 0:
            continue
        z = rng.normals(cfg.seed, (_T_SIGNAL, g, q), (nq, ctx.full.shape[1]))
        w = rng.normals(cfg.seed, (_T_NOISE, g, q), (nq, m))
        y = z @ (ctx.full @ ctx.roots[q]).T + sq * w + ctx.pm.proj_mean[q]
        log_post = ctx.pm.log_posterior(y, s2)
        if cfg.mode == "side_info":
            dec = side_info_decisions(ctx.pm.pairs, log_post)
            errors += int((dec != pair.i).sum())
        else:
            best = np.argmax(log_post, axis=1)
            errors += int((best != q).sum())
    lo, hi = wilson_interval(errors, cfg.trials)
    return errors / cfg.trials, lo, hi, bt.bound(s2)


def _recon_point_frozen(cfg, ctx, filters, g):
    s2 = float(cfg.sigma2_grid[g])
    sq = math.sqrt(s2)
    target = cfg.target
    m = ctx.full.shape[0]
    n1 = cfg.model.n1
    width = n1 if target == "x1" else ctx.full.shape[1]
    err_sum = err_sq = cr_sum = cr_sq = 0.0
    for q in range(len(ctx.sets.s)):
        nq = int(ctx.counts[q])
        if nq == 0:
            continue
        z = rng.normals(cfg.seed, (_T_SIGNAL, g, q), (nq, ctx.full.shape[1]))
        x = z @ ctx.roots[q].T + ctx.mus[q]
        w = rng.normals(cfg.seed, (_T_NOISE, g, q), (nq, m))
        y = x @ ctx.full.T + sq * w
        log_post = ctx.pm.log_posterior(y, s2)
        logw = log_post - logsumexp(log_post, axis=1, keepdims=True)
        weights = np.exp(logw)
        best = np.argmax(log_post, axis=1)
        est = np.zeros((nq, width))
        est_cr = np.empty((nq, width))
        for p, pf in enumerate(filters):
            part = pf.estimate(y, s2, target)
            est += weights[:, p : p + 1] * part
            rows = np.flatnonzero(best == p)
            if rows.size:
                est_cr[rows] = part[rows]
        truth = x[:, :n1] if target == "x1" else x
        e = ((est - truth) ** 2).sum(axis=1)
        ec = ((est_cr - truth) ** 2).sum(axis=1)
        err_sum += float(e.sum())
        err_sq += float((e**2).sum())
        cr_sum += float(ec.sum())
        cr_sq += float((ec**2).sum())
    t = cfg.trials
    mse = err_sum / t
    mse_cr = cr_sum / t
    se = math.sqrt(max(0.0, err_sq / t - mse**2) / t)
    cr_se = math.sqrt(max(0.0, cr_sq / t - mse_cr**2) / t)
    probs = [cfg.model.prior_of(p) for p in ctx.sets.s]
    lb = sum(pr * pf.mmse(s2, target) for pr, pf in zip(probs, filters))
    gauss = filters[0].mmse(s2, target) if len(filters) == 1 else None
    return mse, se, mse_cr, cr_se, gauss, lb


class _RedrawContext:
    """Per-sweep constants for the kernel-per-trial paths."""

    def __init__(self, cfg):
        model = cfg.model
        self.sets = index_sets(model)
        self.pairs = self.sets.s
        self.P = len(self.pairs)
        self.n1, self.n2 = model.n1, model.n2
        self.n = self.n1 + self.n2
        self.m1, self.m2 = cfg.m1, cfg.m2
        self.m = self.m1 + self.m2
        comps = [model.component(p) for p in self.pairs]
        self.sig = [c.sigma_x for c in comps]
        self.mu = np.array([c.mu_x for c in comps])
        self.roots = [sqrt_factor(c) for c in comps]
        self.log_prior = np.log(np.array([model.prior_of(p) for p in self.pairs]))
        self.counts = _allocate([model.prior_of(p) for p in self.pairs], cfg.trials)
        self.labels = np.repeat(np.arange(self.P), self.counts)
        self.bound_terms = _unordered_bound_terms(model, self.sets, cfg.mode)
        # chunk size keeps the (B, P, m, m) stacks around a hundred MB
        per_trial = max(1, self.P * max(1, self.m) ** 2 * 8 * 4)
        self.chunk = int(min(cfg.trials, max(cfg.bound_kernels, 1.5e8 // per_trial, 64)))

    def draw_kernels(self, cfg, g):
        t = cfg.trials
        phi1 = rng.normals(cfg.seed, (_T_KERNEL1, g), (t, self.m1, self.n1))
        if cfg.kernel == "identity2":
            phi2 = np.broadcast_to(np.eye(self.n2), (t, self.n2, self.n2))
        else:
            phi2 = rng.normals(cfg.seed, (_T_KERNEL2, g), (t, self.m2, self.n2))
        return phi1, phi2

    def draw_signals(self, cfg, g):
        z = rng.normals(cfg.seed, (_T_SIGNAL, g, 0), (cfg.trials, self.n))
        x = np.empty_like(z)
        start = 0
        for q in range(self.P):
            stop = start + int(self.counts[q])
            x[start:stop] = z[start:stop] @ self.roots[q].T + self.mu[q]
            start = stop
        return x

    def observe(self, cfg, g, x, phi1, phi2, s2):
        w = rng.normals(cfg.seed, (_T_NOISE, g, 0), (cfg.trials, self.m))
        y1 = np.einsum("tmn,tn->tm", phi1, x[:, : self.n1])
        y2 = np.einsum("tmn,tn->tm", phi2, x[:, self.n1 :])
        return np.concatenate([y1, y2], axis=1) + math.sqrt(s2) * w

    def projections(self, phi1c, phi2c):
        """Per-trial, per-pair projected covariances and means."""
        b = phi1c.shape[0]
        cov = np.empty((b, self.P, self.m, self.m))
        mup = np.empty((b, self.P, self.m))
        m1 = self.m1
        for p in range(self.P):
            s = self.sig[p]
            s11 = s[: self.n1, : self.n1]
            s12 = s[: self.n1, self.n1 :]
            s22 = s[self.n1 :, self.n1 :]
            t11 = np.einsum("tan,nk,tbk->tab", phi1c, s11, phi1c, optimize=True)
            t12 = np.einsum("tan,nk,tbk->tab", phi1c, s12, phi2c, optimize=True)
            t22 = np.einsum("tan,nk,tbk->tab", phi2c, s22, phi2c, optimize=True)
            cov[:, p, :m1, :m1] = t11
            cov[:, p, :m1, m1:] = t12
            cov[:, p, m1:, :m1] = t12.transpose(0, 2, 1)
            cov[:, p, m1:, m1:] = t22
            mup[:, p, :m1] = np.einsum("tmn,n->tm", phi1c, self.mu[p, : self.n1])
            mup[:, p, m1:] = np.einsum("tmn,n->tm", phi2c, self.mu[p, self.n1 :])
        cov = 0.5 * (cov + cov.transpose(0, 1, 3, 2))
        lam, vec = np.linalg.eigh(cov)
        return cov, np.clip(lam, 0.0, None), vec, mup

    def log_posterior(self, yc, lam, vec, mup, s2):
        diff = yc[:, None, :] - mup
        z = np.einsum("tpm,tpmr->tpr", diff, vec)
        d = lam + s2
        quad = (z**2 / d).sum(axis=-1)
        return (
            -0.5 * (self.m * math.log(2.0 * math.pi) + np.log(d).sum(axis=-1) + quad)
            + self.log_prior
        )

    def bound_from_chunk(self, cov, lam, mup, s2, limit):
        """Kernel-averaged analytic bound from the first chunk's trials."""
        b = min(limit, cov.shape[0])
        if not self.bound_terms:
            return 0.0
        acc = np.zeros(b)
        for a, c, w_total in self.bound_terms:
            s = cov[:b, a] + cov[:b, c]
            wv, vv = np.linalg.eigh(s)
            wv = np.clip(wv, 0.0, None)
            dmu = mup[:b, a] - mup[:b, c]
            zz = np.einsum("tm,tmr->tr", dmu, vv)
            half = 0.5 * (wv + 2.0 * s2)
            k = (
                0.125 * (zz**2 / half).sum(axis=1)
                + 0.5 * np.log(half).sum(axis=1)
                - 0.25 * np.log(lam[:b, a] + s2).sum(axis=1)
                - 0.25 * np.log(lam[:b, c] + s2).sum(axis=1)
            )
            acc += w_total * np.exp(-k)
        return float(acc.mean())


def _classify_point_redraw(cfg, ctx, g):
    s2 = float(cfg.sigma2_grid[g])
    phi1, phi2 = ctx.draw_kernels(cfg, g)
    x = ctx.draw_signals(cfg, g)
    y = ctx.observe(cfg, g, x, phi1, phi2, s2)
    errors = 0
    bound = 0.0
    for start in range(0, cfg.trials, ctx.chunk):
        stop = min(start + ctx.chunk, cfg.trials)
        cov, lam, vec, mup = ctx.projections(phi1[start:stop], phi2[start:stop])
        log_post = ctx.log_posterior(y[start:stop], lam, vec, mup, s2)
        truth = ctx.labels[start:stop]
        if cfg.mode == "side_info":
            dec = side_info_decisions(ctx.pairs, log_post)
            true_i = np.array([ctx.pairs[t][0] for t in truth])
            errors += int((dec != true_i).sum())
        else:
            errors += int((np.argmax(log_post, axis=1) != truth).sum())
        if start == 0:
            bound = ctx.bound_from_chunk(cov, lam, mup, s2, cfg.bound_kernels)
    lo, hi = wilson_interval(errors, cfg.trials)
    return errors / cfg.trials, lo, hi, bound


def _recon_point_redraw(cfg, ctx, g):
    s2 = float(cfg.sigma2_grid[g])
    target = cfg.target
    phi1, phi2 = ctx.draw_kernels(cfg, g)
    x = ctx.draw_signals(cfg, g)
    y = ctx.observe(cfg, g, x, phi1, phi2, s2)
    width = ctx.n1 if target == "x1" else ctx.n
    rows = slice(0, width)
    prior = np.exp(ctx.log_prior)
    prior_trace = np.array([np.trace(s[rows, rows]) for s in ctx.sig])
    err_sum = err_sq = cr_sum = cr_sq = 0.0
    lb = gauss = None
    for start in range(0, cfg.trials, ctx.chunk):
        stop = min(start + ctx.chunk, cfg.trials)
        b = stop - start
        phi1c, phi2c = phi1[start:stop], phi2[start:stop]
        cov, lam, vec, mup = ctx.projections(phi1c, phi2c)
        yc = y[start:stop]
        log_post = ctx.log_posterior(yc, lam, vec, mup, s2)
        weights = np.exp(log_post - logsumexp(log_post, axis=1, keepdims=True))
        best = np.argmax(log_post, axis=1)
        full = np.zeros((b, ctx.m, ctx.n))
        full[:, : ctx.m1, : ctx.n1] = phi1c
        full[:, ctx.m1 :, ctx.n1 :] = phi2c
        est = np.zeros((b, width))
        est_cr = np.empty((b, width))
        kern_mmse = np.empty((b, ctx.P))
        for p in range(ctx.P):
            g_mat = np.einsum("tmn,nk->tmk", full, ctx.sig[p], optimize=True)
            cross = np.einsum("tmk,tmr->tkr", g_mat, vec[:, p], optimize=True)
            d = lam[:, p] + s2
            tvec = np.einsum("tm,tmr->tr", yc - mup[:, p], vec[:, p])
            xh = ctx.mu[p, rows] + np.einsum("tr,tkr->tk", tvec / d, cross[:, rows])
            est += weights[:, p : p + 1] * xh
            sel = np.flatnonzero(best == p)
            if sel.size:
                est_cr[sel] = xh[sel]
            kern_mmse[:, p] = prior_trace[p] - (
                (cross[:, rows] ** 2) / d[:, None, :]
            ).sum(axis=(1, 2))
        truth = x[start:stop, rows]
        e = ((est - truth) ** 2).sum(axis=1)
        ec = ((est_cr - truth) ** 2).sum(axis=1)
        err_sum += float(e.sum())
        err_sq += float((e**2).sum())
        cr_sum += float(ec.sum())
        cr_sq += float((ec**2).sum())
        if start == 0:
            limit = min(cfg.bound_kernels, b)
            lb = float((kern_mmse[:limit] @ prior).mean())
            gauss = float(kern_mmse[:limit, 0].mean()) if ctx.P == 1 else None
    t = cfg.trials
    mse = err_sum / t
    mse_cr = cr_sum / t
    se = math.sqrt(max(0.0, err_sq / t - mse**2) / t)
    cr_se = math.sqrt(max(0.0, cr_sq / t - mse_cr**2) / t)
    return mse, se, mse_cr, cr_se, gauss, lb


def run_sweep(cfg):
    """Run one Monte Carlo sweep and return its SweepCurve."""
    if not isinstance(cfg, SweepConfig):
        raise TypeError("run_sweep takes a SweepConfig")
    grid = cfg.sigma2_grid
    classify = cfg.task.startswith("classify")
    if cfg.freeze_kernel is not None:
        ctx = _FrozenContext(cfg)
        if classify:
            bt = BhattTable(cfg.model, ctx.phi, cfg.mode)
            point = lambda g: _classify_point_frozen(cfg, ctx, bt, g)
        else:
            filters = [PairFilter(cfg.model.component(p), ctx.phi) for p in ctx.sets.s]
            point = lambda g: _recon_point_frozen(cfg, ctx, filters, g)
    else:
        ctx = _RedrawContext(cfg)
        if classify:
            point = lambda g: _classify_point_redraw(cfg, ctx, g)
        else:
            point = lambda g: _recon_point_redraw(cfg, ctx, g)

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, range(grid.size)))
    else:
        rows = [point(g) for g in range(grid.size)]

    common = dict(
        task=cfg.task,
        m1=cfg.m1,
        m2=cfg.m2,
        sigma2=grid.copy(),
        trials=cfg.trials,
        seed=cfg.seed,
        kernel=cfg.kernel,
        freeze_kernel=cfg.freeze_kernel,
    )
    cols = list(zip(*rows))
    if classify:
        return SweepCurve(
            **common,
            perr_emp=np.array(cols[0]),
            perr_lo=np.array(cols[1]),
            perr_hi=np.array(cols[2]),
            perr_bound=np.array(cols[3]),
        )
    gauss = None if cols[4][0] is None else np.array(cols[4], dtype=float)
    return SweepCurve(
        **common,
        mse_emp=np.array(cols[0]),
        mse_se=np.array(cols[1]),
        mse_cr_emp=np.array(cols[2]),
        mse_cr_se=np.array(cols[3]),
        mmse_gauss=gauss,
        mse_lb=np.array(cols[5]),
    )


_SLOPE_FIELDS = {
    "perr_emp": "perr_emp",
    "bound": "perr_bound",
    "mse_emp": "mse_emp",
    "mse_cr": "mse_cr_emp",
    "mse_lb": "mse_lb",
    "mmse": "mmse_gauss",
}


def fit_slope(curve, decades=2.0, field="auto"):
    """Least-squares log-log slope over the lowest noise decades.

    The fit window anchors at the smallest sigma2 with a positive
    finite value and spans the given number of decades upward. A value
    proportional to sigma2^d fits slope d. Non-positive and non-finite
    points are excluded; fewer than three usable points is an error.
    """
    if field == "auto":
        field = "perr_emp" if curve.kind == "classify" else "mse_emp"
    if field not in _SLOPE_FIELDS:
        raise ValueError(f"field must be auto or one of {sorted(_SLOPE_FIELDS)}")
    values = getattr(curve, _SLOPE_FIELDS[field])
    if values is None:
        raise ValueError(f"curve has no {field} values")
    values = np.asarray(values, dtype=float)
    ok = np.isfinite(values) & (values > 0)
    if not ok.any():
        raise ValueError("no positive finite values to fit")
    s_min = curve.sigma2[ok].min()
    window = ok & (curve.sigma2 <= s_min * 10.0 ** float(decades) * (1 + 1e-12))
    if window.sum() < 3:
        raise ValueError(f"need at least 3 usable points in the last {decades} decades")
    slope, _ = np.polyfit(np.log(curve.sigma2[window]), np.log(values[window]), 1)
    return float(slope)


# ---------------------------------------------------------------------------
# region maps


REGION_PREDICATES = ("classify_si", "classify_dc") + THEOREMS


@dataclasses.dataclass(frozen=True)
class ProbeSpec:
    """Numerical spot check for region cells.

    For each (m1, m2) cell, evaluates the label-aware oracle error at a
    tiny noise level on `kernels` fresh kernels and compares it to the
    target's prior trace: below pass_frac of it on every kernel counts
    as a transition, above fail_frac on every kernel as a floor.
    """

    sigma2: float = 1e-10
    kernels: int = 20
    seed: int = 0
    target: str = "x1"
    pass_frac: float = 1e-4
    fail_frac: float = 1e-2
    kernel: str = "gaussian"


@dataclasses.dataclass(frozen=True, eq=False)
class RegionGrid:
    """Boolean verdict maps over a rectangle of feature counts.

    verdicts maps predicate name to a bool array indexed by
    (m1_index, m2_index). Probe results, when requested, sit alongside
    as min/max oracle error over the probed kernels plus a categorical
    outcome per cell.
    """

    m1_values: tuple
    m2_values: tuple
    verdicts: dict
    probe_lo: np.ndarray = None
    probe_hi: np.ndarray = None
    probe_outcome: np.ndarray = None

    def csv_text(self):
        tags = list(self.verdicts)
        header = ["m1", "m2"] + tags
        if self.probe_outcome is not None:
            header += ["probe_lo", "probe_hi", "probe_outcome"]
        lines = [",".join(header)]
        for a, m1 in enumerate(self.m1_values):
            for b, m2 in enumerate(self.m2_values):
                row = [str(m1), str(m2)]
                row += [("true" if self.verdicts[t][a, b] else "false") for t in tags]
                if self.probe_outcome is not None:
                    row += [
                        _fmt(self.probe_lo[a, b]),
                        _fmt(self.probe_hi[a, b]),
                        str(self.probe_outcome[a, b]),
                    ]
                lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def _predicate_outcome(geometry, m1, m2, name):
    if name == "classify_si" or name == "classify_dc":
        mode = "side_info" if name.endswith("_si") else "distributed"
        if geometry.zero_mean:
            v = classification_phase_verdict(geometry, m1, m2, mode)
        else:
            v = exp_decay_verdict(geometry, m1, m2, mode)
        return v.outcome != "error_floor"
    return reconstruction_phase_verdict(geometry, m1, m2, name).outcome == "transition"


def _probe_cell(model, m1, m2, spec):
    sets = index_sets(model)
    probs = [model.prior_of(p) for p in sets.s]
    rows = slice(0, model.n1) if spec.target == "x1" else slice(0, model.n1 + model.n2)
    ref = sum(
        pr * np.trace(model.component(p).sigma_x[rows, rows]) for pr, p in zip(probs, sets.s)
    )
    values = []
    for r in range(spec.kernels):
        phi = draw_kernel(model.n1, model.n2, m1, m2, (spec.seed, m1, m2, r), spec.kernel)
        total = 0.0
        for pr, p in zip(probs, sets.s):
            total += pr * PairFilter(model.component(p), phi).mmse(spec.sigma2, spec.target)
        values.append(total)
    lo, hi = min(values), max(values)
    # classify on the kernel median: single near-degenerate draws can
    # push min/max across either threshold on boundary cells
    mid = float(np.median(values))
    if mid <= spec.pass_frac * ref:
        outcome = "pass"
    elif mid >= spec.fail_frac * ref:
        outcome = "fail"
    else:
        outcome = "mixed"
    return lo, hi, outcome


def region_map(model, m1_values, m2_values, predicates=("classify_si",), tol_factor=100.0, probe=None):
    """Evaluate analytic verdict predicates over a feature-count grid.

    predicates may mix classification modes and reconstruction theorem
    tags; each yields a boolean map (True where the error vanishes with
    the noise). An optional ProbeSpec adds a numerical check per cell.
    """
    m1_values = tuple(int(v) for v in m1_values)
    m2_values = tuple(int(v) for v in m2_values)
    if any(v < 0 for v in m1_values + m2_values):
        raise ValueError("feature counts must be non-negative")
    for name in predicates:
        if name not in REGION_PREDICATES:
            raise ValueError(f"unknown predicate {name!r}; choose from {REGION_PREDICATES}")
    geometry = geometry_summary(model, tol_factor)
    shape = (len(m1_values), len(m2_values))
    verdicts = {name: np.zeros(shape, dtype=bool) for name in predicates}
    for a, m1 in enumerate(m1_values):
        for b, m2 in enumerate(m2_values):
            for name in predicates:
                verdicts[name][a, b] = _predicate_outcome(geometry, m1, m2, name)
    probe_lo = probe_hi = probe_outcome = None
    if probe is not None:
        probe_lo = np.zeros(shape)
        probe_hi = np.zeros(shape)
        probe_outcome = np.empty(shape, dtype=object)
        for a, m1 in enumerate(m1_values):
            for b, m2 in enumerate(m2_values):
                lo, hi, out = _probe_cell(model, m1, m2, probe)
                probe_lo[a, b] = lo
                probe_hi[a, b] = hi
                probe_outcome[a, b] = out
    return RegionGrid(
        m1_values=m1_values,
        m2_values=m2_values,
        verdicts=verdicts,
        probe_lo=probe_lo,
        probe_hi=probe_hi,
        probe_outcome=probe_outcome,
    )


# ---------------------------------------------------------------------------
# file output


def atomic_write_text(path, text):
    """Write-then-rename so readers never see a partial file."""
    path = os.fspath(path)
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def write_curve_csv(curve, path):
    atomic_write_text(path, curve.csv_text())


def geometry_csv_texts(table):
    """Component and quadruple CSV bodies for a geometry table."""
    comp = ["i,k,r_x1,r_x2,r_x"]
    for row in table.component_rows():
        comp.append(",".join(str(v) for v in row))
    pair = ["i,k,j,l,r_x1_pair,r_x2_pair,r_x_pair,mu1_in,mu2_in,mu_in"]
    for row in table.pair_rows():
        cells = [str(v) for v in row[:7]]
        cells += ["true" if v else "false" for v in row[7:]]
        pair.append(",".join(cells))
    return "\n".join(comp) + "\n", "\n".join(pair) + "\n"


def write_geometry_csvs(table, component_path, pair_path):
    comp_text, pair_text = geometry_csv_texts(table)
    atomic_write_text(component_path, comp_text)
    atomic_write_text(pair_path, pair_text)


def verdict_csv_text(verdicts):
    """Rows for classification and reconstruction verdicts alike."""
    lines = ["mode,m1,m2,outcome,case,binding_i,binding_k,binding_j,binding_l,d"]
    for v in verdicts:
        if hasattr(v, "theorem"):  # reconstruction
            pair = v.binding_pair
            bind = ["", "", "", ""] if pair is None else [str(pair[0]), str(pair[1]), "", ""]
            lines.append(",".join([v.theorem, str(v.m1), str(v.m2), v.outcome, ""] + bind + [""]))
        else:
            quad = v.binding_quadruple
            bind = [str(q) for q in quad] if quad else ["", "", "", ""]
            d = "" if v.d is None else _fmt(v.d)
            lines.append(
                ",".join([v.mode, str(v.m1), str(v.m2), v.outcome, v.case] + bind + [d])
            )
    return "\n".join(lines) + "\n"


def write_verdict_csv(verdicts, path):
    atomic_write_text(path, verdict_csv_text(verdicts))


def diversity_csv_text(reports):
    lines = ["mode,m1,m2,d,binding_i,binding_k,binding_j,binding_l"]
    for r in reports:
        quad = r.binding[0] if r.binding else ("", "", "", "")
        lines.append(
            ",".join([r.mode, str(r.m1), str(r.m2), _fmt(r.d)] + [str(q) for q in quad])
        )
    return "\n".join(lines) + "\n"


def write_region_csv(grid, path):
    atomic_write_text(path, grid.csv_text())


def write_manifest(path, payload):
    """JSON manifest with stable key order."""
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
