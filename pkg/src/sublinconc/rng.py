"""Counter-based random streams keyed by (seed, *stream indices).

Each stream is a Philox generator whose key comes from hashing the full
index tuple, so draws for (seed, prior, chunk) never depend on how work
was scheduled.
"""

from __future__ import annotations

import numpy as np

# fixed tags for non-Monte-Carlo consumers
NET_CANDIDATES = 101
NET_VERIFY = 102
NET_CHECK = 103
PROPERTY = 104


def stream(seed: int, *indices: int) -> np.random.Generator:
    if seed < 0 or any(i < 0 for i in indices):
        raise ValueError("seed and stream indices must be non-negative")
    ss = np.random.SeedSequence([int(seed), *map(int, indices)])
    return np.random.Generator(np.random.Philox(ss))


def unit_vectors(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Uniform draws on S^{dim-1}, shape (count, dim)."""
    if dim == 1:
        return np.where(rng.random((count, 1)) < 0.5, -1.0, 1.0)
    g = rng.standard_normal((count, dim))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # a zero Gaussian vector has probability 0; redraw defensively
    bad = norms[:, 0] == 0
    while np.any(bad):
        g[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        bad = norms[:, 0] == 0
    return g / norms
