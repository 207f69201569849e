"""Joint Gaussian mixture models for a signal / side-information pair.

A model couples a primary signal x1 (dimension n1) with a secondary signal
x2 (dimension n2). Each label pair (i, k), 1-based with i in 1..k1 and
k in 1..k2, selects a joint Gaussian component for the stacked vector
(x1, x2); a prior matrix over label pairs completes the mixture.
Components are typically rank-deficient: they are built from low-rank
factor loadings, with correlation between x1 and x2 induced by loadings
that share latent coordinates.
"""

from __future__ import annotations

import dataclasses
from typing import NamedTuple

import numpy as np

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from . import rng

_SYM_TOL = 1e-10
_PSD_TOL = 1e-10
_PRIOR_TOL = 1e-9

# stream tags for sample_joint / sample_pair
_LABEL_STREAM = 0
_GAUSS_STREAM = 1


class ModelError(ValueError):
    """Invalid model data (shapes, symmetry, definiteness, prior)."""


class ConfigError(ValueError):
    """Malformed or inconsistent model file."""


class ClassPair(NamedTuple):
    """1-based label pair (i, k); behaves like a plain tuple."""

    i: int
    k: int


def _as_matrix(a, name, rows=None, cols=None):
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ModelError(f"{name} must be 2-D, got shape {m.shape}")
    if rows is not None and m.shape[0] != rows:
        raise ModelError(f"{name} must have {rows} rows, got {m.shape[0]}")
    if cols is not None and m.shape[1] != cols:
        raise ModelError(f"{name} must have {cols} columns, got {m.shape[1]}")
    if not np.all(np.isfinite(m)):
        raise ModelError(f"{name} has non-finite entries")
    return m


def _as_vector(a, name, size):
    v = np.asarray(a, dtype=float)
    if v.ndim != 1 or v.shape[0] != size:
        raise ModelError(f"{name} must be a vector of length {size}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ModelError(f"{name} has non-finite entries")
    return v


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


@dataclasses.dataclass(frozen=True, eq=False)
class JointComponent:
    """One joint Gaussian component of the pair (x1, x2).

    Parameters
    ----------
    mu_x1, mu_x2 : array_like
        Component means, shapes (n1,) and (n2,).
    sigma_x1, sigma_x2 : array_like
        Marginal covariance blocks, shapes (n1, n1) and (n2, n2).
    sigma_x12 : array_like
        Cross-covariance block E[(x1 - mu_x1)(x2 - mu_x2)^T], shape (n1, n2).

    The stacked covariance [[sigma_x1, sigma_x12], [sigma_x12^T, sigma_x2]]
    must be symmetric positive semidefinite; rank deficiency is expected.
    """

    mu_x1: np.ndarray
    mu_x2: np.ndarray
    sigma_x1: np.ndarray
    sigma_x2: np.ndarray
    sigma_x12: np.ndarray

    def __post_init__(self):
        s1 = _as_matrix(self.sigma_x1, "sigma_x1")
        n1 = s1.shape[0]
        s2 = _as_matrix(self.sigma_x2, "sigma_x2")
        n2 = s2.shape[0]
        s1 = _as_matrix(s1, "sigma_x1", n1, n1)
        s2 = _as_matrix(s2, "sigma_x2", n2, n2)
        s12 = _as_matrix(self.sigma_x12, "sigma_x12", n1, n2)
        m1 = _as_vector(self.mu_x1, "mu_x1", n1)
        m2 = _as_vector(self.mu_x2, "mu_x2", n2)
        for name, s in (("sigma_x1", s1), ("sigma_x2", s2)):
            scale = 1.0 + np.abs(s).max(initial=0.0)
            if np.abs(s - s.T).max(initial=0.0) > _SYM_TOL * scale:
                raise ModelError(f"{name} is not symmetric")
        s1 = 0.5 * (s1 + s1.T)
        s2 = 0.5 * (s2 + s2.T)
        joint = np.block([[s1, s12], [s12.T, s2]])
        eig = np.linalg.eigvalsh(joint)
        if eig[0] < -_PSD_TOL * max(eig[-1], 1.0):
            raise ModelError(
                f"joint covariance is not positive semidefinite (min eigenvalue {eig[0]:.3e})"
            )
        object.__setattr__(self, "mu_x1", m1)
        object.__setattr__(self, "mu_x2", m2)
        object.__setattr__(self, "sigma_x1", s1)
        object.__setattr__(self, "sigma_x2", s2)
        object.__setattr__(self, "sigma_x12", s12)
        _freeze(m1, m2, s1, s2, s12)

    @property
    def n1(self):
        return self.mu_x1.shape[0]

    @property
    def n2(self):
        return self.mu_x2.shape[0]

    @property
    def mu_x(self):
        """Stacked mean, shape (n1 + n2,)."""
        return np.concatenate([self.mu_x1, self.mu_x2])

    @property
    def sigma_x(self):
        """Stacked covariance, shape (n1 + n2, n1 + n2)."""
        return np.block([[self.sigma_x1, self.sigma_x12], [self.sigma_x12.T, self.sigma_x2]])


@dataclasses.dataclass(frozen=True, eq=False)
class FactorModel:
    """Low-rank factor description of one joint component.

    x1 = p_c1 z_c + p_1 z_1 + mu_x1 and x2 = p_c2 z_c + p_2 z_2 + mu_x2
    with independent standard normal latent blocks z_c, z_1, z_2. The
    shared block z_c is what correlates the two signals. Factor widths
    may be zero (empty matrices with the right row count).
    """

    p_c1: np.ndarray
    p_c2: np.ndarray
    p_1: np.ndarray
    p_2: np.ndarray
    mu_x1: np.ndarray = None
    mu_x2: np.ndarray = None

    def __post_init__(self):
        pc1 = _as_matrix(self.p_c1, "p_c1")
        n1 = pc1.shape[0]
        pc2 = _as_matrix(self.p_c2, "p_c2", cols=pc1.shape[1])
        n2 = pc2.shape[0]
        p1 = _as_matrix(self.p_1, "p_1", rows=n1)
        p2 = _as_matrix(self.p_2, "p_2", rows=n2)
        m1 = np.zeros(n1) if self.mu_x1 is None else _as_vector(self.mu_x1, "mu_x1", n1)
        m2 = np.zeros(n2) if self.mu_x2 is None else _as_vector(self.mu_x2, "mu_x2", n2)
        object.__setattr__(self, "p_c1", pc1)
        object.__setattr__(self, "p_c2", pc2)
        object.__setattr__(self, "p_1", p1)
        object.__setattr__(self, "p_2", p2)
        object.__setattr__(self, "mu_x1", m1)
        object.__setattr__(self, "mu_x2", m2)
        _freeze(pc1, pc2, p1, p2, m1, m2)

    @property
    def n1(self):
        return self.p_c1.shape[0]

    @property
    def n2(self):
        return self.p_c2.shape[0]


def stacked_factor(factors):
    """Loading matrix of the stacked vector (x1, x2).

    Block layout [[p_c1, p_1, 0], [p_c2, 0, p_2]], so the stacked
    covariance equals stacked_factor @ stacked_factor.T.
    """
    n1, n2 = factors.n1, factors.n2
    s1 = factors.p_1.shape[1]
    s2 = factors.p_2.shape[1]
    top = np.hstack([factors.p_c1, factors.p_1, np.zeros((n1, s2))])
    bottom = np.hstack([factors.p_c2, np.zeros((n2, s1)), factors.p_2])
    return np.vstack([top, bottom])


def component_from_factors(factors):
    """Joint Gaussian component realized by a factor description."""
    return JointComponent(
        mu_x1=factors.mu_x1,
        mu_x2=factors.mu_x2,
        sigma_x1=factors.p_c1 @ factors.p_c1.T + factors.p_1 @ factors.p_1.T,
        sigma_x2=factors.p_c2 @ factors.p_c2.T + factors.p_2 @ factors.p_2.T,
        sigma_x12=factors.p_c1 @ factors.p_c2.T,
    )


@dataclasses.dataclass(frozen=True, eq=False)
class JointGmm:
    """Gaussian mixture over label pairs.

    Parameters
    ----------
    prior : array_like
        Joint label probabilities, shape (k1, k2), non-negative, summing
        to one within 1e-9 (renormalized exactly on construction).
    components : dict
        Maps (i, k) label pairs (1-based) to JointComponent instances.
        Every pair with positive prior must be present; components for
        zero-prior pairs are allowed and ignored.
    """

    prior: np.ndarray
    components: dict

    def __post_init__(self):
        p = np.asarray(self.prior, dtype=float)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ModelError(f"prior must be a (k1, k2) matrix, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ModelError("prior entries must be finite and non-negative")
        total = p.sum()
        if abs(total - 1.0) > _PRIOR_TOL:
            raise ModelError(f"prior must sum to 1 within {_PRIOR_TOL}, got {total!r}")
        p = p / total
        comps = {}
        dims = None
        for key, comp in self.components.items():
            pair = ClassPair(int(key[0]), int(key[1]))
            if not (1 <= pair.i <= p.shape[0] and 1 <= pair.k <= p.shape[1]):
                raise ModelError(f"component label {tuple(pair)} outside prior shape {p.shape}")
            if not isinstance(comp, JointComponent):
                raise ModelError(f"component {tuple(pair)} is not a JointComponent")
            if dims is None:
                dims = (comp.n1, comp.n2)
            elif (comp.n1, comp.n2) != dims:
                raise ModelError(
                    f"component {tuple(pair)} has dims {(comp.n1, comp.n2)}, expected {dims}"
                )
            comps[pair] = comp
        if dims is None:
            raise ModelError("model needs at least one component")
        for i in range(1, p.shape[0] + 1):
            for k in range(1, p.shape[1] + 1):
                if p[i - 1, k - 1] > 0 and ClassPair(i, k) not in comps:
                    raise ModelError(f"missing component for positive-prior pair ({i}, {k})")
        object.__setattr__(self, "prior", p)
        object.__setattr__(self, "components", comps)
        _freeze(p)

    @property
    def k1(self):
        return self.prior.shape[0]

    @property
    def k2(self):
        return self.prior.shape[1]

    @property
    def n1(self):
        return next(iter(self.components.values())).n1

    @property
    def n2(self):
        return next(iter(self.components.values())).n2

    def prior_of(self, pair):
        return float(self.prior[pair[0] - 1, pair[1] - 1])

    def component(self, pair):
        try:
            return self.components[ClassPair(*pair)]
        except KeyError:
            raise ModelError(f"no component for pair {tuple(pair)}") from None


@dataclasses.dataclass(frozen=True)
class IndexSets:
    """Support of the prior and the derived error-event index sets.

    s lists the positive-prior pairs (i, k). s_sic holds ordered
    quadruples (i, k, j, l) with both pairs in s and i != j: the events
    that can confuse the label of x1. s_dc additionally keeps i == j,
    k != l: any mixup between distinct pairs. All lexicographic.
    """

    s: tuple
    s_sic: tuple
    s_dc: tuple


def index_sets(model):
    """Index sets of the positive-prior support of ``model``."""
    s = tuple(
        ClassPair(i, k)
        for i in range(1, model.k1 + 1)
        for k in range(1, model.k2 + 1)
        if model.prior[i - 1, k - 1] > 0
    )
    s_dc = tuple((a.i, a.k, b.i, b.k) for a in s for b in s if a != b)
    s_sic = tuple(q for q in s_dc if q[0] != q[2])
    return IndexSets(s=s, s_sic=s_sic, s_dc=s_dc)


@dataclasses.dataclass(frozen=True, eq=False)
class LabeledSampleSet:
    """Batch of joint draws with their labels.

    x1 has shape (count, n1), x2 (count, n2); c1 and c2 are 1-based
    label vectors of length count. seed reproduces the batch exactly.
    """

    x1: np.ndarray
    x2: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    seed: int


def sqrt_factor(component):
    """Square root A of the stacked covariance with Sigma = A @ A.T.

    Symmetric eigendecomposition with negative eigenvalues clipped at
    zero; A is (n, n) so a sample is mu + A @ g with g standard normal.
    """
    w, u = np.linalg.eigh(component.sigma_x)
    return u * np.sqrt(np.clip(w, 0.0, None))


def sample_joint(model, count, seed):
    """Draw ``count`` labeled samples from the mixture.

    Labels and Gaussian inputs come from separate counter-based streams
    of ``seed``, so sample row t is a function of (model, seed, t) alone:
    prefixes agree across batch sizes, up to matmul rounding that
    depends on the batch shape. Equal batch sizes match exactly.
    """
    count = int(count)
    if count < 0:
        raise ValueError("count must be non-negative")
    sets = index_sets(model)
    probs = np.array([model.prior_of(p) for p in sets.s])
    which = rng.categorical(seed, _LABEL_STREAM, probs, count)
    n1, n2 = model.n1, model.n2
    g = rng.normals(seed, _GAUSS_STREAM, (count, n1 + n2))
    x = np.empty((count, n1 + n2))
    c1 = np.empty(count, dtype=np.int64)
    c2 = np.empty(count, dtype=np.int64)
    for idx, pair in enumerate(sets.s):
        rows = np.flatnonzero(which == idx)
        if rows.size == 0:
            continue
        comp = model.component(pair)
        x[rows] = g[rows] @ sqrt_factor(comp).T + comp.mu_x
        c1[rows] = pair.i
        c2[rows] = pair.k
    return LabeledSampleSet(x1=x[:, :n1], x2=x[:, n1:], c1=c1, c2=c2, seed=int(seed))


def sample_pair(model, pair, count, seed):
    """Draw ``count`` samples from one component; returns (x1, x2).

    Uses the same Gaussian stream layout as sample_joint, so the draw is
    reproducible from (pair, seed) without a label stream.
    """
    count = int(count)
    if count < 0:
        raise ValueError("count must be non-negative")
    comp = model.component(pair)
    n1 = comp.n1
    g = rng.normals(seed, _GAUSS_STREAM, (count, n1 + comp.n2))
    x = g @ sqrt_factor(comp).T + comp.mu_x
    return x[:, :n1], x[:, n1:]


# ---------------------------------------------------------------------------
# model files


def _doc_matrix(section, key, rows, cols=None, required=True):
    if key not in section:
        if required:
            raise ConfigError(f"missing key {key!r}")
        return None
    val = section[key]
    if not isinstance(val, list):
        raise ConfigError(f"{key} must be an array of rows")
    if len(val) == 0:
        # zero factor width: no columns
        return np.zeros((rows, 0))
    arr = np.array(val, dtype=float)
    if arr.ndim != 2:
        raise ConfigError(f"{key} rows have inconsistent lengths")
    if arr.shape[0] != rows:
        raise ConfigError(f"{key} must have {rows} rows, got {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise ConfigError(f"{key} must have {cols} columns, got {arr.shape[1]}")
    return arr


def _doc_vector(section, key, size):
    if key not in section:
        return None
    arr = np.array(section[key], dtype=float)
    if arr.ndim != 1 or arr.shape[0] != size:
        raise ConfigError(f"{key} must be a flat array of length {size}")
    return arr


_FACTOR_KEYS = ("p_c1", "p_c2", "p_1", "p_2")
_SIGMA_KEYS = ("sigma_x1", "sigma_x2", "sigma_x12")


def _parse_component(section, label, n1, n2):
    has_factor = any(k in section for k in _FACTOR_KEYS)
    has_sigma = any(k in section for k in _SIGMA_KEYS)
    if has_factor == has_sigma:
        raise ConfigError(
            f"component {label} must give either factor blocks {_FACTOR_KEYS} "
            f"or covariance blocks {_SIGMA_KEYS}"
        )
    mu1 = _doc_vector(section, "mu_x1", n1)
    mu2 = _doc_vector(section, "mu_x2", n2)
    try:
        if has_factor:
            pc1 = _doc_matrix(section, "p_c1", n1)
            pc2 = _doc_matrix(section, "p_c2", n2, cols=pc1.shape[1])
            fm = FactorModel(
                p_c1=pc1,
                p_c2=pc2,
                p_1=_doc_matrix(section, "p_1", n1),
                p_2=_doc_matrix(section, "p_2", n2),
                mu_x1=mu1,
                mu_x2=mu2,
            )
            return component_from_factors(fm)
        return JointComponent(
            mu_x1=np.zeros(n1) if mu1 is None else mu1,
            mu_x2=np.zeros(n2) if mu2 is None else mu2,
            sigma_x1=_doc_matrix(section, "sigma_x1", n1, n1),
            sigma_x2=_doc_matrix(section, "sigma_x2", n2, n2),
            sigma_x12=_doc_matrix(section, "sigma_x12", n1, n2),
        )
    except (ConfigError, ModelError) as exc:
        raise ConfigError(f"component {label}: {exc}") from None


def load_model(path):
    """Read a mixture from a TOML model file.

    The file needs [dims] with n1/n2/k1/k2, [prior] with a k1 x k2 row
    matrix under key p, and one [component.<i>.<k>] table per
    positive-prior pair holding either factor blocks (p_c1, p_c2, p_1,
    p_2) or covariance blocks (sigma_x1, sigma_x2, sigma_x12), plus
    optional mu_x1 / mu_x2 (zero when absent).
    """
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"model file {path} is not valid TOML: {exc}") from None

    dims = doc.get("dims")
    if not isinstance(dims, dict):
        raise ConfigError("missing [dims] section")
    try:
        n1, n2 = int(dims["n1"]), int(dims["n2"])
        k1, k2 = int(dims["k1"]), int(dims["k2"])
    except KeyError as exc:
        raise ConfigError(f"[dims] is missing key {exc.args[0]!r}") from None
    if min(n1, n2) < 1 or min(k1, k2) < 1:
        raise ConfigError("[dims] entries must be positive integers")

    prior_tab = doc.get("prior")
    if not isinstance(prior_tab, dict) or "p" not in prior_tab:
        raise ConfigError("missing [prior] section with key p")
    prior = np.array(prior_tab["p"], dtype=float)
    if prior.ndim == 1 and k1 == 1:
        prior = prior.reshape(1, -1)
    if prior.shape != (k1, k2):
        raise ConfigError(f"prior p must be a {k1} x {k2} row matrix, got shape {prior.shape}")

    comp_root = doc.get("component", {})
    if not isinstance(comp_root, dict):
        raise ConfigError("[component] must hold [component.<i>.<k>] tables")
    components = {}
    for i_key, row in comp_root.items():
        if not isinstance(row, dict):
            raise ConfigError(f"[component.{i_key}] must hold [component.{i_key}.<k>] tables")
        for k_key, section in row.items():
            try:
                pair = ClassPair(int(i_key), int(k_key))
            except ValueError:
                raise ConfigError(f"component labels must be integers, got {i_key}.{k_key}") from None
            components[pair] = _parse_component(section, f"{pair.i}.{pair.k}", n1, n2)
    try:
        return JointGmm(prior=prior, components=components)
    except ModelError as exc:
        raise ConfigError(str(exc)) from None


def _fmt(x):
    # repr round-trips doubles exactly and is stable across runs
    return repr(float(x))


def _toml_rows(name, mat, out):
    out.append(f"{name} = [")
    for row in np.asarray(mat):
        out.append("  [" + ", ".join(_fmt(v) for v in row) + "],")
    out.append("]")


def _toml_vec(name, vec, out):
    out.append(f"{name} = [" + ", ".join(_fmt(v) for v in np.asarray(vec)) + "]")


def save_model(model, path):
    """Write a mixture as a TOML model file (covariance form, exact floats)."""
    out = []
    out.append("[dims]")
    out.append(f"n1 = {model.n1}")
    out.append(f"n2 = {model.n2}")
    out.append(f"k1 = {model.k1}")
    out.append(f"k2 = {model.k2}")
    out.append("")
    out.append("[prior]")
    _toml_rows("p", model.prior, out)
    for pair in sorted(model.components):
        comp = model.components[pair]
        out.append("")
        out.append(f"[component.{pair.i}.{pair.k}]")
        _toml_vec("mu_x1", comp.mu_x1, out)
        _toml_vec("mu_x2", comp.mu_x2, out)
        _toml_rows("sigma_x1", comp.sigma_x1, out)
        _toml_rows("sigma_x2", comp.sigma_x2, out)
        _toml_rows("sigma_x12", comp.sigma_x12, out)
    text = "\n".join(out) + "\n"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
