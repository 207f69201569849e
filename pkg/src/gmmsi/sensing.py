"""Linear feature maps and noisy observations.

Each signal is observed through its own matrix: y1 = phi1 x1 + w1 and
y2 = phi2 x2 + w2 with independent N(0, sigma2 I) noise on both, the
same variance on each branch. Feature counts m1, m2 may be zero.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import rng

_KINDS = ("gaussian", "identity2")

# stream tags inside a kernel seed / an observation seed
_PHI1_STREAM = 0
_PHI2_STREAM = 1
_W1_STREAM = 2
_W2_STREAM = 3


@dataclasses.dataclass(frozen=True, eq=False)
class SensingPair:
    """The two feature matrices, phi1 (m1, n1) and phi2 (m2, n2)."""

    phi1: np.ndarray
    phi2: np.ndarray

    def __post_init__(self):
        p1 = np.asarray(self.phi1, dtype=float)
        p2 = np.asarray(self.phi2, dtype=float)
        if p1.ndim != 2 or p2.ndim != 2:
            raise ValueError("phi1 and phi2 must be 2-D")
        if not (np.all(np.isfinite(p1)) and np.all(np.isfinite(p2))):
            raise ValueError("feature matrices must be finite")
        object.__setattr__(self, "phi1", p1)
        object.__setattr__(self, "phi2", p2)
        p1.setflags(write=False)
        p2.setflags(write=False)

    @property
    def m1(self):
        return self.phi1.shape[0]

    @property
    def m2(self):
        return self.phi2.shape[0]

    @property
    def n1(self):
        return self.phi1.shape[1]

    @property
    def n2(self):
        return self.phi2.shape[1]


def draw_kernel(n1, n2, m1, m2, seed, kind="gaussian"):
    """Draw a feature pair for signal dimensions (n1, n2).

    kind "gaussian" fills both matrices with i.i.d. standard normals.
    kind "identity2" observes the second signal directly (phi2 = I, so
    m2 must equal n2 or be None). Entries depend only on (seed, position),
    so any (m1, m2) prefix of a larger kernel is reproduced exactly.
    """
    if kind not in _KINDS:
        raise ValueError(f"kernel kind must be one of {_KINDS}, got {kind!r}")
    n1, n2, m1 = int(n1), int(n2), int(m1)
    if min(n1, n2) < 1 or m1 < 0:
        raise ValueError("need n1, n2 >= 1 and m1 >= 0")
    phi1 = rng.normals(seed, _PHI1_STREAM, (m1, n1))
    if kind == "identity2":
        if m2 is not None and int(m2) != n2:
            raise ValueError(f"identity2 forces m2 = n2 = {n2}, got m2 = {m2}")
        phi2 = np.eye(n2)
    else:
        m2 = int(m2)
        if m2 < 0:
            raise ValueError("need m2 >= 0")
        phi2 = rng.normals(seed, _PHI2_STREAM, (m2, n2))
    return SensingPair(phi1=phi1, phi2=phi2)


def assemble(phi):
    """Block-diagonal matrix acting on the stacked signal (x1, x2)."""
    m1, n1 = phi.phi1.shape
    m2, n2 = phi.phi2.shape
    full = np.zeros((m1 + m2, n1 + n2))
    full[:m1, :n1] = phi.phi1
    full[m1:, n1:] = phi.phi2
    return full


@dataclasses.dataclass(frozen=True, eq=False)
class Observation:
    """Noisy features of one or more stacked samples.

    y1 has shape (m1,) or (count, m1), y2 likewise; sigma2 is the noise
    variance both branches were drawn with.
    """

    y1: np.ndarray
    y2: np.ndarray
    sigma2: float

    @property
    def y(self):
        """Concatenated feature vector(s), shape (..., m1 + m2)."""
        return np.concatenate([self.y1, self.y2], axis=-1)


def observe(x1, x2, phi, sigma2, seed):
    """Push samples through the feature pair and add noise.

    x1 is (n1,) or (count, n1), x2 matching. Noise streams are separate
    from kernel streams, so the same seed may drive both without overlap.
    """
    sigma2 = float(sigma2)
    if not sigma2 >= 0.0:
        raise ValueError("sigma2 must be non-negative")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    single = x1.ndim == 1
    if single != (x2.ndim == 1):
        raise ValueError("x1 and x2 must both be single samples or both batches")
    x1b = np.atleast_2d(x1)
    x2b = np.atleast_2d(x2)
    if x1b.shape[0] != x2b.shape[0]:
        raise ValueError("x1 and x2 batches must have equal length")
    if x1b.shape[1] != phi.n1 or x2b.shape[1] != phi.n2:
        raise ValueError(
            f"sample dims {(x1b.shape[1], x2b.shape[1])} do not match kernel dims {(phi.n1, phi.n2)}"
        )
    count = x1b.shape[0]
    sig = np.sqrt(sigma2)
    y1 = x1b @ phi.phi1.T + sig * rng.normals(seed, _W1_STREAM, (count, phi.m1))
    y2 = x2b @ phi.phi2.T + sig * rng.normals(seed, _W2_STREAM, (count, phi.m2))
    if single:
        y1, y2 = y1[0], y2[0]
    return Observation(y1=y1, y2=y2, sigma2=sigma2)
