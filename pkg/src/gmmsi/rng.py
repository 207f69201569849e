"""Counter-based random streams.

Every value is a pure function of (seed, stream, position): uniforms come
from a Philox counter generator keyed by hashing (seed, stream), and
normals are inverse-CDF transforms that consume exactly one 64-bit word
per value. A prefix of a stream therefore does not depend on how much of
the stream is generated at once, and distinct (seed, stream) pairs give
non-overlapping draws.
"""

import numpy as np
from scipy.special import ndtri

# random() yields doubles in [0, 1); 0.0 occurs with probability 2^-53 and
# would map to -inf, so the lower tail is clipped there (about -8.21 sigma).
_TINY = 2.0 ** -53


def _as_words(value, name):
    if isinstance(value, (tuple, list)):
        words = [int(v) for v in value]
    else:
        words = [int(value)]
    if not words or any(w < 0 for w in words):
        raise ValueError(f"{name} must be a non-negative integer or a non-empty tuple of them")
    return words


def generator(seed, stream=0):
    """Philox generator for the (seed, stream) pair.

    Both arguments may be single non-negative integers or tuples of
    them; the concatenated words key the generator, so callers should
    keep a fixed tuple shape per call site.
    """
    entropy = _as_words(seed, "seed") + _as_words(stream, "stream")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def uniforms(seed, stream, count):
    """Draw ``count`` doubles in [0, 1), one counter word each."""
    return generator(seed, stream).random(int(count))


def normals(seed, stream, shape):
    """Standard normals with fixed counter consumption (one word per value)."""
    u = generator(seed, stream).random(size=shape)
    return ndtri(np.maximum(u, _TINY))


def categorical(seed, stream, probs, count):
    """Indices into ``probs`` (need not be normalized), one word per draw."""
    p = np.asarray(probs, dtype=float).ravel()
    if p.size == 0 or np.any(p < 0):
        raise ValueError("probs must be non-empty and non-negative")
    edges = np.cumsum(p)
    if edges[-1] <= 0:
        raise ValueError("probs must have positive mass")
    u = uniforms(seed, stream, count) * edges[-1]
    return np.searchsorted(edges, u, side="right").astype(np.int64)
