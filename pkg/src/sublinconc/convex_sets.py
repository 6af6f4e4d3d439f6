"""Convex compact bodies in R^d: boxes, balls and vertex polytopes.

Every body supports the support function, Euclidean projection and the
point-to-set distance.  Polytope projection runs Wolfe's minimum-norm-point
iteration on the translated vertex set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

DEFAULT_PROJECTION_TOL = 1e-9
DEFAULT_COMBINATION_CAP = 10**6
MAX_DIM = 16


class ProjectionError(RuntimeError):
    """Polytope projection failed to meet its optimality test."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


def _as_vector(x, dim: int | None = None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: body has dim {dim}, got {v.shape[0]}")
    return v


@dataclass(frozen=True, eq=False)
class Interval:
    """Axis-aligned box [lo, hi] (a closed interval when dim == 1)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lo)
        hi = _as_vector(self.hi)
        if lo.shape != hi.shape:
            raise ValueError("lo and hi must have the same length")
        if np.any(lo > hi):
            raise ValueError("Interval requires lo <= hi componentwise")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ValueError("Interval bounds must be finite")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _as_vector(self.center)
        if not (self.radius >= 0 and np.isfinite(self.radius)):
            raise ValueError("Ball radius must be finite and >= 0")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]


@dataclass(frozen=True, eq=False)
class Polytope:
    """Convex hull of a finite vertex list (rows of ``vertices``)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("Polytope needs a nonempty (m, d) vertex array")
        if not np.all(np.isfinite(v)):
            raise ValueError("Polytope vertices must be finite")
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]


ConvexBody = Union[Interval, Ball, Polytope]


def interval(lo, hi) -> Interval:
    return Interval(np.atleast_1d(lo), np.atleast_1d(hi))


def singleton(point) -> Polytope:
    return Polytope(np.atleast_2d(np.asarray(point, dtype=float)))


def support_function(body: ConvexBody, p) -> float:
    """sup over the body of <theta, p>."""
    p = _as_vector(p, body.dim)
    if isinstance(body, Interval):
        return float(np.sum(np.maximum(body.lo * p, body.hi * p)))
    if isinstance(body, Ball):
        return float(body.center @ p + body.radius * np.linalg.norm(p))
    if isinstance(body, Polytope):
        return float(np.max(body.vertices @ p))
    raise TypeError(f"unsupported body {type(body).__name__}")


def support_point(body: ConvexBody, p) -> np.ndarray:
    """A maximiser of <theta, p> over the body (ties broken deterministically)."""
    p = _as_vector(p, body.dim)
    if isinstance(body, Interval):
        return np.where(p >= 0, body.hi, body.lo)
    if isinstance(body, Ball):
        norm = np.linalg.norm(p)
        if norm == 0:
            return body.center.copy()
        return body.center + body.radius * p / norm
    if isinstance(body, Polytope):
        return body.vertices[int(np.argmax(body.vertices @ p))].copy()
    raise TypeError(f"unsupported body {type(body).__name__}")


def max_norm(body: ConvexBody) -> float:
    """sup over the body of |theta|."""
    if isinstance(body, Interval):
        return float(np.linalg.norm(np.maximum(np.abs(body.lo), np.abs(body.hi))))
    if isinstance(body, Ball):
        return float(np.linalg.norm(body.center) + body.radius)
    if isinstance(body, Polytope):
        return float(np.max(np.linalg.norm(body.vertices, axis=1)))
    raise TypeError(f"unsupported body {type(body).__name__}")


def _same_body(a: ConvexBody, b: ConvexBody) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Interval):
        return np.array_equal(a.lo, b.lo) and np.array_equal(a.hi, b.hi)
    if isinstance(a, Ball):
        return np.array_equal(a.center, b.center) and a.radius == b.radius
    return a.vertices.shape == b.vertices.shape and np.array_equal(a.vertices, b.vertices)


def _dedupe_rows(points: np.ndarray, decimals: int = 12) -> np.ndarray:
    _, idx = np.unique(np.round(points, decimals), axis=0, return_index=True)
    return points[np.sort(idx)]


def _hull_vertices(points: np.ndarray) -> np.ndarray:
    """Drop points that are not extreme.  Leaves degenerate sets deduplicated only."""
    points = _dedupe_rows(points)
    m, d = points.shape
    if d == 1:
        lo, hi = points.min(), points.max()
        return np.array([[lo], [hi]]) if lo < hi else points[:1]
    if m <= d + 1:
        return points
    from scipy.spatial import ConvexHull, QhullError

    try:
        hull = ConvexHull(points)
    except QhullError:
        # lower-dimensional set: qhull cannot prune it, keep everything
        return points
    return points[np.sort(hull.vertices)]


def minkowski_average(
    bodies: Sequence[ConvexBody], combination_cap: int = DEFAULT_COMBINATION_CAP
) -> ConvexBody:
    """Return (1/n) * (K_1 + ... + K_n).

    All bodies must share dimension and kind.  Polytope sums are accumulated
    pairwise with hull pruning after each step; a step whose raw combination
    count |current| * |V_i| exceeds ``combination_cap`` raises ValueError.
    """
    bodies = list(bodies)
    if not bodies:
        raise ValueError("minkowski_average needs at least one body")
    dim = bodies[0].dim
    kind = type(bodies[0])
    for b in bodies:
        if b.dim != dim:
            raise ValueError("all bodies must share the same dimension")
        if type(b) is not kind:
            raise ValueError("mixed shape kinds are not supported")
    n = len(bodies)
    # the average of n copies of one convex set is the set itself
    if all(_same_body(bodies[0], b) for b in bodies[1:]):
        return bodies[0]
    if kind is Interval:
        return Interval(
            np.mean([b.lo for b in bodies], axis=0), np.mean([b.hi for b in bodies], axis=0)
        )
    if kind is Ball:
        return Ball(np.mean([b.center for b in bodies], axis=0), float(np.mean([b.radius for b in bodies])))

    acc = bodies[0].vertices
    for b in bodies[1:]:
        count = acc.shape[0] * b.vertices.shape[0]
        if count > combination_cap:
            raise ValueError(
                f"vertex combination count {count} exceeds cap {combination_cap}"
            )
        sums = (acc[:, None, :] + b.vertices[None, :, :]).reshape(-1, dim)
        acc = _hull_vertices(sums)
    return Polytope(acc / n)


def _wolfe_min_norm(P: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-norm point of conv(rows of P) by Wolfe's algorithm.

    Returns (z, weights).  Stops when max_j (|z|^2 - <z, P_j>) <= tol.
    """
    m = P.shape[0]
    norms = np.einsum("ij,ij->i", P, P)
    start = int(np.argmin(norms))
    corral = [start]
    lam = np.array([1.0])
    z = P[start].copy()
    it = 0
    while True:
        gaps = z @ z - P @ z
        j = int(np.argmax(gaps))
        residual = float(gaps[j])
        if residual <= tol or j in corral:
            break
        corral.append(j)
        lam = np.append(lam, 0.0)
        while True:
            it += 1
            if it > max_iter:
                raise ProjectionError("minimum-norm-point iteration cap reached", residual)
            Q = P[corral]
            k = len(corral)
            # affine minimiser over aff(Q): [Q Q^T 1; 1^T 0][alpha; mu] = [0; 1]
            A = np.zeros((k + 1, k + 1))
            A[:k, :k] = Q @ Q.T
            A[:k, k] = 1.0
            A[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            alpha = np.linalg.lstsq(A, rhs, rcond=None)[0][:k]
            if np.all(alpha > 1e-14):
                lam = alpha
                break
            mask = alpha <= 1e-14
            denom = lam[mask] - alpha[mask]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(denom > 0, lam[mask] / denom, np.inf)
            theta = float(min(1.0, np.min(ratios)))
            lam = lam + theta * (alpha - lam)
            keep = lam > 1e-14
            if not np.any(keep):
                keep[int(np.argmax(lam))] = True
            corral = [c for c, kp in zip(corral, keep) if kp]
            lam = lam[keep]
            lam = lam / lam.sum()
        z = lam @ P[corral]
    weights = np.zeros(m)
    weights[corral] = lam
    return z, weights


def project(
    body: ConvexBody,
    x,
    tol: float = DEFAULT_PROJECTION_TOL,
    max_iter: int | None = None,
) -> np.ndarray:
    """Euclidean projection of ``x`` onto ``body``.

    For polytopes the result pi satisfies <x - pi, v - pi> <= tol for every
    vertex v; otherwise ProjectionError is raised with the worst residual.
    """
    x = _as_vector(x, body.dim)
    if isinstance(body, Interval):
        return np.clip(x, body.lo, body.hi)
    if isinstance(body, Ball):
        diff = x - body.center
        dist = np.linalg.norm(diff)
        if dist <= body.radius:
            return x.copy()
        return body.center + diff * (body.radius / dist)
    if isinstance(body, Polytope):
        V = body.vertices
        if V.shape[0] == 1:
            return V[0].copy()
        if max_iter is None:
            max_iter = 10 * V.shape[0] * body.dim
        scale = max(1.0, float(np.max(np.abs(V - x))) ** 2)
        z, _ = _wolfe_min_norm(V - x, tol * scale, max_iter)
        pi = x + z
        residual = float(np.max((x - pi) @ (V - pi).T))
        if residual > tol * scale:
            raise ProjectionError("projection failed the variational inequality", residual)
        return pi
    raise TypeError(f"unsupported body {type(body).__name__}")


def distance_to(body: ConvexBody, x, tol: float = DEFAULT_PROJECTION_TOL) -> float:
    """rho(x) = inf over the body of |x - theta|."""
    x = _as_vector(x, body.dim)
    return float(np.linalg.norm(x - project(body, x, tol=tol)))


def distances(body: ConvexBody, points) -> np.ndarray:
    """Vectorised ``distance_to`` over the rows of ``points`` (shape (m, d))."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None] if body.dim == 1 else X[None, :]
    if X.shape[1] != body.dim:
        raise ValueError(f"dimension mismatch: body has dim {body.dim}, got {X.shape[1]}")
    if isinstance(body, Interval):
        gap = np.maximum(np.maximum(body.lo - X, X - body.hi), 0.0)
        return np.abs(gap[:, 0]) if body.dim == 1 else np.linalg.norm(gap, axis=1)
    if isinstance(body, Ball):
        return np.maximum(np.linalg.norm(X - body.center, axis=1) - body.radius, 0.0)
    return np.array([distance_to(body, x) for x in X])


# --- structured records -------------------------------------------------------


def body_to_dict(body: ConvexBody) -> dict:
    if isinstance(body, Interval):
        return {"kind": "interval", "lo": body.lo.tolist(), "hi": body.hi.tolist()}
    if isinstance(body, Ball):
        return {"kind": "ball", "center": body.center.tolist(), "radius": body.radius}
    if isinstance(body, Polytope):
        return {"kind": "polytope", "vertices": body.vertices.tolist()}
    raise TypeError(f"unsupported body {type(body).__name__}")


def body_from_dict(record: dict) -> ConvexBody:
    kind = record.get("kind")
    if kind == "interval":
        body = interval(record["lo"], record["hi"])
    elif kind == "ball":
        body = Ball(np.asarray(record["center"], dtype=float), float(record["radius"]))
    elif kind == "polytope":
        body = Polytope(np.asarray(record["vertices"], dtype=float))
    else:
        raise ValueError(f"unknown body kind {kind!r}")
    if body.dim > MAX_DIM:
        raise ValueError(f"dimension {body.dim} exceeds supported maximum {MAX_DIM}")
    return body


def polytope_from_interval(box: Interval) -> Polytope:
    """Vertex representation of a box (2^d corners)."""
    corners = itertools.product(*zip(box.lo, box.hi))
    return Polytope(_dedupe_rows(np.array(list(corners), dtype=float)))
