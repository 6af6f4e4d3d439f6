"""Parametric families of product priors.

A family is represented by its extreme product measures only.  Suprema of
linear functionals over the convex hull are attained there, so sampling
never has to touch mixtures.

UniformShift
    d = 1, X_i ~ Uniform[mu_i - r, mu_i + r] with mu_i in [-a, a].
BallShift
    d >= 2, X_i uniform on the radius-r ball centred at mu_i in a body Theta_1.
DiscreteFamily
    product extremes of a finite space from :mod:`sublinconc.oracle`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import convex_sets as cs
from . import rng as rng_mod


class GridResolutionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class UniformShift:
    a: float
    r: float
    n: int

    def __post_init__(self):
        if not (self.a >= 0 and self.r > 0 and self.n >= 1):
            raise ValueError("UniformShift needs a >= 0, r > 0, n >= 1")

    @property
    def d(self) -> int:
        return 1

    @property
    def M(self) -> float:
        return self.a + self.r


@dataclass(frozen=True, eq=False)
class BallShift:
    body: cs.ConvexBody
    r: float
    n: int
    a: float | None = None

    def __post_init__(self):
        if self.body.dim < 2:
            raise ValueError("BallShift needs d >= 2; use UniformShift for d = 1")
        if not (self.r > 0 and self.n >= 1):
            raise ValueError("BallShift needs r > 0, n >= 1")
        reach = cs.max_norm(self.body)
        if self.a is None:
            object.__setattr__(self, "a", reach)
        elif reach > self.a * (1 + 1e-12):
            raise ValueError(f"body reaches |theta| = {reach} > a = {self.a}")

    @property
    def d(self) -> int:
        return self.body.dim

    @property
    def M(self) -> float:
        return self.a + self.r


@dataclass(frozen=True, eq=False)
class DiscreteFamily:
    """Product extremes of a finite space (hull semantics for sampling)."""

    space: "object"

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def d(self) -> int:
        return self.space.d

    @property
    def M(self) -> float:
        return self.space.M


PriorFamily = Union[UniformShift, BallShift, DiscreteFamily]


@dataclass(frozen=True, eq=False)
class PriorPoint:
    """One extreme prior.  ``mu`` has shape (n,) or (n, d); discrete priors
    carry an extreme index instead."""

    mu: np.ndarray | None = None
    extreme: int | None = None
    label: str = ""

    def mu_matrix(self, n: int, d: int) -> np.ndarray:
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim == 0:
            mu = np.full((n, d), float(mu))
        elif mu.ndim == 1:
            mu = mu[:, None] if d == 1 else np.broadcast_to(mu, (n, d))
        if mu.shape != (n, d):
            raise ValueError(f"prior shape {mu.shape} does not match (n, d) = {(n, d)}")
        return mu


def _check_admissible(family: PriorFamily, prior: PriorPoint) -> np.ndarray | None:
    if isinstance(family, DiscreteFamily):
        if prior.extreme is None or not 0 <= prior.extreme < len(family.space.extremes):
            raise ValueError("discrete prior needs a valid extreme index")
        return None
    mu = prior.mu_matrix(family.n, family.d)
    tol = 1e-12 * max(1.0, family.a)
    if isinstance(family, UniformShift):
        if np.any(np.abs(mu) > family.a + tol):
            raise ValueError("shift outside [-a, a]")
    else:
        dist = cs.distances(family.body, mu)
        if np.any(dist > tol):
            raise ValueError("shift outside Theta_1")
    return mu


def sample_batch(
    family: PriorFamily, prior: PriorPoint, rng: np.random.Generator, replicates: int
) -> np.ndarray:
    """Draw ``replicates`` copies of (X_1, ..., X_n); shape (replicates, n, d)."""
    mu = _check_admissible(family, prior)
    n, d = family.n, family.d
    if isinstance(family, UniformShift):
        u = rng.random((replicates, n))
        X = (mu[:, 0] + family.r * (2.0 * u - 1.0))[..., None]
    elif isinstance(family, BallShift):
        g = rng.standard_normal((replicates, n, d))
        g /= np.linalg.norm(g, axis=2, keepdims=True)
        radius = family.r * rng.random((replicates, n, 1)) ** (1.0 / d)
        X = mu + radius * g
    else:
        X = family.space.sample(prior.extreme, rng, replicates)
    norms = np.abs(X[..., 0]) if d == 1 else np.linalg.norm(X, axis=2)
    if np.any(norms > family.M * (1 + 1e-12)):
        raise AssertionError("sample escaped the almost-sure bound M")
    return X


def sample(family: PriorFamily, prior: PriorPoint, seed: int) -> np.ndarray:
    """One draw of (X_1, ..., X_n) as an (n, d) array."""
    return sample_batch(family, prior, rng_mod.stream(seed), 1)[0]


def mean_set(family: PriorFamily, i: int = 1) -> cs.ConvexBody:
    """Theta_i, the set of means of X_i over the family (1-based index)."""
    if not 1 <= i <= family.n:
        raise ValueError(f"index {i} outside 1..{family.n}")
    if isinstance(family, UniformShift):
        return cs.interval(-family.a, family.a)
    if isinstance(family, BallShift):
        return family.body
    from .oracle import theta_exact

    return theta_exact(family.space, i).body


def average_mean_set(family: PriorFamily) -> cs.ConvexBody:
    """Theta, the Minkowski average of Theta_1, ..., Theta_n."""
    if isinstance(family, DiscreteFamily):
        return cs.minkowski_average([mean_set(family, i) for i in range(1, family.n + 1)])
    # shift families are identically distributed: Theta = Theta_1
    return mean_set(family, 1)


def golden_section(f, lo: float, hi: float, tol: float = 1e-8) -> tuple[float, float]:
    """Minimise a unimodal f on [lo, hi]; returns (argmin, min)."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    best = min((f(x), x) for x in (a, b, 0.5 * (a + b)))
    return best[1], best[0]


def _ball_second_moment(r: float, d: int) -> float:
    """E|U|^2 for U uniform on the radius-r ball in R^d (r^2/3 when d = 1)."""
    return r * r * d / (d + 2)


def _minimax_center(body: cs.ConvexBody) -> float:
    """inf over theta in body of sup over mu in body of |mu - theta|^2."""
    if isinstance(body, cs.Ball):
        return body.radius**2
    if isinstance(body, cs.Interval):
        return float(np.sum(((body.hi - body.lo) / 2) ** 2))
    V = body.vertices
    if V.shape[0] == 1:
        return 0.0
    from scipy.optimize import minimize

    # minimum enclosing ball of the vertices, epigraph form; its centre lies in the hull
    d = body.dim
    x0 = np.append(V.mean(axis=0), np.max(np.sum((V - V.mean(axis=0)) ** 2, axis=1)))
    cons = {"type": "ineq", "fun": lambda z: z[d] - np.sum((V - z[:d]) ** 2, axis=1)}
    res = minimize(lambda z: z[d], x0, constraints=[cons], method="SLSQP",
                   options={"ftol": 1e-14, "maxiter": 500})
    centre = res.x[:d]
    return float(np.max(np.sum((V - centre) ** 2, axis=1)))


def sigma_bar_sq(family: PriorFamily, mu_grid: int = 65) -> float:
    """sup_i inf_{theta in Theta_i} sup_P E_P|X_i - theta|^2.

    UniformShift: golden-section over theta of the maximum over a mu-grid of
    (mu - theta)^2 + r^2/3.  BallShift: closed form for box and ball bodies,
    minimum enclosing ball for polytopes.  Discrete: exact enumeration.
    """
    if isinstance(family, DiscreteFamily):
        from .oracle import sigma_bar_sq_exact

        return sigma_bar_sq_exact(family.space)
    inner = _ball_second_moment(family.r, family.d)
    if isinstance(family, BallShift):
        return _minimax_center(family.body) + inner
    a = family.a
    if a == 0:
        return inner
    mus = np.linspace(-a, a, mu_grid)

    def worst(theta: float) -> float:
        return float(np.max((mus - theta) ** 2))

    theta, value = golden_section(worst, -a, a, tol=1e-12 * a)
    if min(theta + a, a - theta) < 1e-6 * a:
        warnings.warn("minimiser sits on the boundary of Theta; grid may be too coarse",
                      GridResolutionWarning)
    return value + inner


def corner_priors(
    family: PriorFamily, direction=None, random_corners: int = 0, seed: int = 0
) -> list[PriorPoint]:
    """Extreme shift assignments used as the Monte Carlo search set.

    The first prior always pushes every shift as far as possible along
    ``direction`` (default +e_1); the second pushes it the opposite way.
    ``random_corners`` adds per-coordinate random mixes of the two.
    """
    if isinstance(family, DiscreteFamily):
        return [PriorPoint(extreme=k, label=f"extreme{k}") for k in range(len(family.space.extremes))]
    n, d = family.n, family.d
    if direction is None:
        direction = np.eye(d)[0]
    nu = np.atleast_1d(np.asarray(direction, dtype=float))
    if nu.shape != (d,) or np.linalg.norm(nu) == 0:
        raise ValueError("direction must be a nonzero vector of length d")
    nu = nu / np.linalg.norm(nu)
    body = mean_set(family, 1)
    hi = cs.support_point(body, nu)
    lo = cs.support_point(body, -nu)
    if np.allclose(hi, lo):
        return [PriorPoint(np.tile(hi, (n, 1)) if d > 1 else np.full(n, hi[0]), label="center")]

    def pack(rows: np.ndarray) -> np.ndarray:
        return rows if d > 1 else rows[:, 0]

    out = [
        PriorPoint(pack(np.tile(hi, (n, 1))), label="aligned"),
        PriorPoint(pack(np.tile(lo, (n, 1))), label="anti-aligned"),
    ]
    g = rng_mod.stream(seed, rng_mod.PROPERTY, 7)
    for k in range(random_corners):
        pick = g.random(n) < 0.5
        rows = np.where(pick[:, None], hi, lo)
        out.append(PriorPoint(pack(rows), label=f"random{k}"))
    return out


# --- config records -----------------------------------------------------------


def family_from_dict(record: dict, n: int | None = None) -> PriorFamily:
    kind = record.get("kind")
    n = int(record.get("n", n if n is not None else 0))
    if n < 1:
        raise ValueError("family needs n >= 1")
    if kind == "uniform_shift":
        return UniformShift(float(record["a"]), float(record["r"]), n)
    if kind == "ball_shift":
        body = cs.body_from_dict(record["body"])
        return BallShift(body, float(record["r"]), n, record.get("a"))
    raise ValueError(f"unknown family kind {kind!r}")


def family_to_dict(family: PriorFamily) -> dict:
    if isinstance(family, UniformShift):
        return {"kind": "uniform_shift", "a": family.a, "r": family.r, "n": family.n}
    if isinstance(family, BallShift):
        return {"kind": "ball_shift", "a": family.a, "r": family.r, "n": family.n,
                "body": cs.body_to_dict(family.body)}
    raise TypeError("discrete families are serialised through their finite space")
