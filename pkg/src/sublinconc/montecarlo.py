"""Monte Carlo estimates of the upper capacity V(rho_Theta(mean X) > t).

The supremum over the prior set is approximated from below by a finite
search over extreme priors.  Any single prior underestimates the capacity,
so "estimate <= upper bound" remains a genuine test of an upper bound.

Work is split into fixed-size chunks, each drawing from the counter-based
stream (seed, prior index, chunk index); results do not depend on the
number of workers.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from . import bounds as bd
from . import convex_sets as cs
from . import priors as pr
from . import rng as rng_mod

CI_LEVEL = 0.99
MIN_REPLICATES = 1000
CHUNK_ENTRIES = 1 << 22


def clopper_pearson(k: int, n: int, level: float = CI_LEVEL) -> tuple[float, float]:
    """Exact two-sided binomial interval for k successes in n trials."""
    if not 0 <= k <= n or n < 1:
        raise ValueError("need 0 <= k <= n and n >= 1")
    alpha = 1.0 - level
    lo = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


@dataclass(frozen=True)
class CapacityEstimate:
    t: float
    n: int
    point: float
    ci_lo: float
    ci_hi: float
    replicates: int
    priors_searched: int
    seed: int
    argmax_prior: int = 0
    exceedances: int = 0


@dataclass(frozen=True)
class SandwichRow:
    t: float
    mc: CapacityEstimate
    lower: float
    lower_valid: bool
    azuma: bd.BoundValue
    bernstein: bd.BoundValue
    dimfree: bd.BoundValue

    @property
    def min_upper(self) -> float:
        return min(self.azuma.clamped, self.bernstein.clamped, self.dimfree.clamped)

    @property
    def upper_ok(self) -> bool:
        return self.mc.ci_lo <= self.min_upper

    @property
    def lower_ok(self) -> bool:
        return (not self.lower_valid) or self.mc.ci_hi >= self.lower


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    se: float
    argmax_prior: int
    sigma_bar_sq: float
    n: int

    @property
    def li_hu_rhs(self) -> float:
        return self.sigma_bar_sq / self.n


def chunk_size(n: int, d: int) -> int:
    return max(1, CHUNK_ENTRIES // (n * d))


def _with_n(family: pr.PriorFamily, n: int) -> pr.PriorFamily:
    if family.n == n:
        return family
    if isinstance(family, pr.DiscreteFamily):
        raise ValueError("a discrete family has a fixed n")
    return dataclasses.replace(family, n=n)


def distance_draws(
    family: pr.PriorFamily,
    prior: pr.PriorPoint,
    prior_index: int,
    replicates: int,
    seed: int,
    body: cs.ConvexBody | None = None,
    workers: int = 1,
) -> np.ndarray:
    """rho_Theta(mean X) for ``replicates`` independent draws under one prior."""
    if body is None:
        body = pr.average_mean_set(family)
    size = chunk_size(family.n, family.d)
    starts = list(range(0, replicates, size))

    def run(c: int) -> np.ndarray:
        count = min(size, replicates - starts[c])
        X = pr.sample_batch(family, prior, rng_mod.stream(seed, prior_index, c), count)
        return cs.distances(body, X.mean(axis=1))

    if workers <= 1:
        parts = [run(c) for c in range(len(starts))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(starts))))
    return np.concatenate(parts)


def estimate_tails(
    family: pr.PriorFamily,
    priors: Sequence[pr.PriorPoint],
    n: int,
    t_grid: Sequence[float],
    replicates: int,
    seed: int,
    workers: int = 1,
) -> list[CapacityEstimate]:
    """One capacity estimate per t, all sharing the same draws."""
    if replicates < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} replicates")
    if not priors:
        raise ValueError("need at least one prior")
    family = _with_n(family, n)
    body = pr.average_mean_set(family)
    t_arr = np.asarray(t_grid, dtype=float)
    counts = np.zeros((len(priors), len(t_arr)), dtype=np.int64)
    for k, prior in enumerate(priors):
        rho = np.sort(distance_draws(family, prior, k, replicates, seed, body, workers))
        counts[k] = replicates - np.searchsorted(rho, t_arr, side="right")
    out = []
    for j, t in enumerate(t_arr):
        k = int(np.argmax(counts[:, j]))
        hits = int(counts[k, j])
        lo, hi = clopper_pearson(hits, replicates)
        out.append(CapacityEstimate(float(t), n, hits / replicates, lo, hi, replicates,
                                    len(priors), seed, k, hits))
    return out


def estimate_tail(family, priors, n, t, replicates, seed, workers: int = 1) -> CapacityEstimate:
    return estimate_tails(family, priors, n, [t], replicates, seed, workers)[0]


def sandwich_sweep(
    family: pr.PriorFamily,
    n: int,
    t_grid: Sequence[float],
    replicates: int,
    seed: int,
    workers: int = 1,
    random_corners: int = 0,
    direction=None,
) -> list[SandwichRow]:
    """Monte Carlo tails next to the three upper bounds and the sharpness lower bound."""
    t_grid = [float(t) for t in t_grid]
    if not t_grid:
        raise ValueError("t grid is empty")
    if any(b <= a for a, b in zip(t_grid, t_grid[1:])) or t_grid[0] <= 0:
        raise ValueError("t grid must be positive and strictly ascending")
    family = _with_n(family, n)
    priors = pr.corner_priors(family, direction, random_corners, seed)
    estimates = estimate_tails(family, priors, n, t_grid, replicates, seed, workers)
    sigma_sq = pr.sigma_bar_sq(family)
    rows = []
    for t, mc in zip(t_grid, estimates):
        inp = bd.BoundInput(n, family.d, family.M, sigma_sq, t)
        if isinstance(family, pr.UniformShift):
            lb = bd.sharpness_lower_bound(n, bd.sigma_from_radius(family.r), t)
            lower, valid = lb.value, lb.valid
        else:
            lower, valid = math.nan, False
        rows.append(SandwichRow(t, mc, lower, valid, bd.azuma_bound(inp),
                                bd.bernstein_bound(inp), bd.dimfree_bound(inp)))
    return rows


def moment_estimate(
    family: pr.PriorFamily,
    n: int,
    replicates: int,
    seed: int,
    workers: int = 1,
    random_corners: int = 0,
) -> MomentEstimate:
    """Max over corner priors of the sample mean of rho_Theta(mean X)^2."""
    if replicates < MIN_REPLICATES:
        raise ValueError(f"need at least {MIN_REPLICATES} replicates")
    family = _with_n(family, n)
    body = pr.average_mean_set(family)
    best = None
    for k, prior in enumerate(pr.corner_priors(family, None, random_corners, seed)):
        sq = distance_draws(family, prior, k, replicates, seed, body, workers) ** 2
        mean = float(sq.mean())
        se = float(sq.std(ddof=1) / math.sqrt(replicates))
        if best is None or mean > best[0]:
            best = (mean, se, k)
    return MomentEstimate(best[0], best[1], best[2], pr.sigma_bar_sq(family), n)


SANDWICH_COLUMNS = (
    "t", "n", "point", "ci_lo", "ci_hi", "replicates", "priors_searched", "seed",
    "argmax_prior", "lower", "lower_valid", "azuma", "bernstein", "dimfree",
    "min_upper", "upper_ok", "lower_ok",
)


def sandwich_to_csv(rows: Sequence[SandwichRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SANDWICH_COLUMNS)
    f = bd._fmt
    for r in rows:
        writer.writerow([
            f(r.t), r.mc.n, f(r.mc.point), f(r.mc.ci_lo), f(r.mc.ci_hi), r.mc.replicates,
            r.mc.priors_searched, r.mc.seed, r.mc.argmax_prior, f(r.lower), int(r.lower_valid),
            f(r.azuma.clamped), f(r.bernstein.clamped), f(r.dimfree.clamped), f(r.min_upper),
            int(r.upper_ok), int(r.lower_ok),
        ])
    return buf.getvalue()
