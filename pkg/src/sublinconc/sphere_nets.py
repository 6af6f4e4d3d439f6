"""Half-nets of the unit sphere and the covering transfer they support.

A half-net N of S^{d-1} has every unit vector within Euclidean distance 1/2
of some point of N.  If |S| > n t then ⟨±p, S⟩ > n t / 2 for some p ∈ N,
which turns a norm tail into 2|N| directional tails.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as rng_mod

MAX_NET_DIM = 8
VOLUMETRIC_BASE = 5


@dataclass(frozen=True, eq=False)
class SphereNet:
    dim: int
    points: np.ndarray
    target_radius: float = 0.5
    verified_radius: float | None = None
    verify_samples: int = 0
    seed: int = 0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != self.dim or pts.shape[0] == 0:
            raise ValueError("points must be a nonempty (m, dim) array")
        if not np.allclose(np.linalg.norm(pts, axis=1), 1.0, rtol=0, atol=1e-12):
            raise ValueError("net points must be unit vectors")
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def budget(self) -> int:
        return VOLUMETRIC_BASE**self.dim

    def to_text(self) -> str:
        """One unit vector per row, whitespace separated."""
        return "".join(" ".join(f"{v:.17g}" for v in row) + "\n" for row in self.points)


def _min_dist_sq(points: np.ndarray, net: np.ndarray, chunk: int = 8192) -> np.ndarray:
    """For each row of ``points`` the squared distance to the nearest net point."""
    out = np.empty(points.shape[0])
    for lo in range(0, points.shape[0], chunk):
        block = points[lo : lo + chunk]
        # |u - p|^2 = 2 - 2<u, p> for unit vectors
        sq = 2.0 - 2.0 * np.max(block @ net.T, axis=1)
        out[lo : lo + chunk] = np.maximum(sq, 0.0)
    return out


def covering_radius(net: SphereNet, samples: int, seed: int) -> float:
    """Max over sampled unit vectors of the distance to the nearest net point."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if net.dim == 1:
        # S^0 = {-1, +1} is finite: check it exactly
        u = np.array([[-1.0], [1.0]])
        return float(np.sqrt(np.max(_min_dist_sq(u, net.points))))
    g = rng_mod.stream(seed, rng_mod.NET_CHECK, net.dim)
    worst = 0.0
    chunk = 50_000
    for lo in range(0, samples, chunk):
        u = rng_mod.unit_vectors(g, min(chunk, samples - lo), net.dim)
        worst = max(worst, float(np.max(_min_dist_sq(u, net.points))))
    return float(np.sqrt(worst))


def _default_candidates(d: int) -> int:
    return int(min(200_000, 2_000 * 3**d))


def build_half_net(
    d: int,
    seed: int = 0,
    target_radius: float = 0.5,
    margin: float = 0.9,
    candidates: int | None = None,
    verify_samples: int = 100_000,
    max_rounds: int = 50,
) -> SphereNet:
    """Greedy farthest-point net of S^{d-1} with covering radius <= target_radius.

    Points are picked from a random candidate cloud until every candidate lies
    within ``margin * target_radius`` of the net.  The net is then checked on
    ``verify_samples`` fresh directions; any direction farther than the target
    is added and the check repeats.  Deterministic for a given seed.
    """
    if not 1 <= d <= MAX_NET_DIM:
        raise ValueError(f"net dimension must be in [1, {MAX_NET_DIM}], got {d}")
    if d == 1:
        return SphereNet(
            1, np.array([[-1.0], [1.0]]), target_radius, 0.0, 2, seed, {"rounds": 0}
        )
    if candidates is None:
        candidates = _default_candidates(d)
    inner_sq = (margin * target_radius) ** 2
    target_sq = target_radius**2

    cloud = rng_mod.unit_vectors(rng_mod.stream(seed, rng_mod.NET_CANDIDATES, d), candidates, d)
    chosen = [0]
    best = np.maximum(2.0 - 2.0 * (cloud @ cloud[0]), 0.0)
    while True:
        j = int(np.argmax(best))
        if best[j] <= inner_sq:
            break
        chosen.append(j)
        best = np.minimum(best, np.maximum(2.0 - 2.0 * (cloud @ cloud[j]), 0.0))
    net = cloud[chosen]

    rounds = 0
    worst_sq = np.inf
    while rounds < max_rounds:
        g = rng_mod.stream(seed, rng_mod.NET_VERIFY, d, rounds)
        u = rng_mod.unit_vectors(g, verify_samples, d)
        dist_sq = _min_dist_sq(u, net)
        worst_sq = float(np.max(dist_sq))
        if worst_sq <= target_sq:
            break
        # greedily absorb uncovered directions, farthest first
        far = u[dist_sq > inner_sq]
        far_best = _min_dist_sq(far, net)
        added = []
        while far.shape[0]:
            k = int(np.argmax(far_best))
            if far_best[k] <= inner_sq:
                break
            added.append(far[k])
            far_best = np.minimum(far_best, np.maximum(2.0 - 2.0 * (far @ far[k]), 0.0))
        net = np.vstack([net, np.array(added)])
        rounds += 1
    else:
        raise RuntimeError(f"net verification did not settle after {max_rounds} rounds")

    # renormalise to keep |p| = 1 to machine precision
    net = net / np.linalg.norm(net, axis=1, keepdims=True)
    return SphereNet(
        d,
        net,
        target_radius,
        float(np.sqrt(worst_sq)),
        verify_samples,
        seed,
        {"rounds": rounds, "candidates": candidates},
    )


def covering_transfer_check(net: SphereNet, S, n: int, t: float) -> bool:
    """True iff |S| <= n t or some ±p in the net has ⟨p, S⟩ > n t / 2."""
    S = np.atleast_1d(np.asarray(S, dtype=float))
    return bool(covering_transfer_batch(net, S[None, :], n, t)[0])


def covering_transfer_batch(net: SphereNet, S, n: int, t: float) -> np.ndarray:
    """Row-wise ``covering_transfer_check`` over S of shape (m, d)."""
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[1] != net.dim:
        raise ValueError(f"expected shape (m, {net.dim}), got {S.shape}")
    level = n * t
    small = np.linalg.norm(S, axis=1) <= level
    proj = np.max(np.abs(S @ net.points.T), axis=1)
    return small | (proj > level / 2)
