"""Exact enumeration on finite sublinear-expectation spaces.

A :class:`FiniteSpace` has n coordinates, each with a finite support in R^d,
and a list of extreme product measures.  Two semantics are supported:

``hull``
    P is the convex hull of the listed product measures, so the upper
    expectation is the maximum of the listed linear expectations.
``rectangular``
    At every step i the conditional law of X_i given the past may be any of
    the listed i-th marginals, chosen as a function of the history.  The
    upper expectation is then a backward induction over coordinates.  This is
    the set under which the coordinates are independent in the sequential
    sense; the plain hull of product measures generally is not.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Sequence, Union

import numpy as np

from . import convex_sets as cs
from . import rng as rng_mod

ATOM_CAP = 10**6
PROB_TOL = 1e-15

FunctionLike = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    n: int
    d: int
    supports: tuple
    extremes: tuple
    rectangular: bool = False
    name: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        supports = []
        for pts in self.supports:
            arr = np.asarray(pts, dtype=float)
            if arr.ndim == 1:
                arr = arr[:, None]
            if arr.ndim != 2 or arr.shape[1] != self.d or arr.shape[0] == 0:
                raise ValueError("each support must be a nonempty (k, d) array")
            supports.append(arr)
        if len(supports) != self.n:
            raise ValueError(f"expected {self.n} supports, got {len(supports)}")
        if not self.extremes:
            raise ValueError("need at least one extreme measure")
        extremes = []
        for ext in self.extremes:
            if len(ext) != self.n:
                raise ValueError("every extreme needs one probability vector per coordinate")
            probs = []
            for i, p in enumerate(ext):
                p = np.asarray(p, dtype=float)
                if p.shape != (supports[i].shape[0],):
                    raise ValueError(f"probability vector {i} does not match its support")
                if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
                    raise ValueError("probability vectors must be nonnegative and sum to 1")
                probs.append(p)
            extremes.append(tuple(probs))
        object.__setattr__(self, "supports", tuple(supports))
        object.__setattr__(self, "extremes", tuple(extremes))

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(s.shape[0] for s in self.supports)

    @property
    def num_atoms(self) -> int:
        return int(np.prod(self.shape))

    @property
    def M(self) -> float:
        return float(max(np.max(np.linalg.norm(s, axis=1)) for s in self.supports))

    def marginal_set(self, i: int) -> list[np.ndarray]:
        """Distinct i-th marginals (0-based) across the extremes."""
        out: list[np.ndarray] = []
        for ext in self.extremes:
            if not any(np.array_equal(ext[i], q) for q in out):
                out.append(ext[i])
        return out

    def atom_values(self) -> np.ndarray:
        """X at every atom, shape (*self.shape, n, d)."""
        grids = np.meshgrid(*[np.arange(k) for k in self.shape], indexing="ij")
        return np.stack([self.supports[i][grids[i]] for i in range(self.n)], axis=-2)

    def extreme_means(self, k: int) -> np.ndarray:
        return np.stack([p @ s for p, s in zip(self.extremes[k], self.supports)])

    def sample(self, k: int, rng: np.random.Generator, replicates: int) -> np.ndarray:
        out = np.empty((replicates, self.n, self.d))
        for i, (p, s) in enumerate(zip(self.extremes[k], self.supports)):
            out[:, i, :] = s[rng.choice(len(p), size=replicates, p=p)]
        return out


def _check_cap(space: FiniteSpace, cap: int = ATOM_CAP):
    if space.num_atoms > cap:
        raise ValueError(f"space has {space.num_atoms} atoms, over the cap {cap}")


def evaluate(space: FiniteSpace, f: FunctionLike) -> np.ndarray:
    """Values of f on every atom, shape space.shape."""
    if callable(f):
        _check_cap(space)
        values = np.asarray(f(space.atom_values()), dtype=float)
    else:
        values = np.asarray(f, dtype=float)
    if values.shape != space.shape:
        raise ValueError(f"function values have shape {values.shape}, expected {space.shape}")
    return values


def _expect_batch(space: FiniteSpace, V: np.ndarray) -> np.ndarray:
    """Upper expectation of each V[b] (V has shape (B, *space.shape))."""
    if space.rectangular:
        for i in range(space.n - 1, -1, -1):
            V = np.max(np.stack([V @ q for q in space.marginal_set(i)]), axis=0)
        return V
    best = None
    for ext in space.extremes:
        W = V
        for i in range(space.n - 1, -1, -1):
            W = W @ ext[i]
        best = W if best is None else np.maximum(best, W)
    return best


def sublinear_expect(space: FiniteSpace, f: FunctionLike) -> float:
    """Upper expectation sup over P of E_P[f]."""
    values = evaluate(space, f)
    return float(_expect_batch(space, values[None])[0])


def linear_expect(space: FiniteSpace, f: FunctionLike, k: int) -> float:
    """E_P[f] under the k-th listed product extreme."""
    W = evaluate(space, f)
    for i in range(space.n - 1, -1, -1):
        W = W @ space.extremes[k][i]
    return float(W)


def _lift_prefix(space: FiniteSpace, psi: np.ndarray) -> np.ndarray:
    """Broadcast a function of (X_1..X_m), shape (k_1..k_m), to all of Omega."""
    m = psi.ndim
    return np.broadcast_to(psi.reshape(psi.shape + (1,) * (space.n - m)), space.shape)


def _lift_coordinate(space: FiniteSpace, i: int, phi: np.ndarray) -> np.ndarray:
    """Broadcast a function of X_i alone (0-based i), shape (k_i,), to Omega."""
    shape = [1] * space.n
    shape[i] = space.shape[i]
    return np.broadcast_to(phi.reshape(shape), space.shape)


# --- independence -------------------------------------------------------------


@dataclass
class IndependenceReport:
    max_discrepancy: float
    per_index: list[float]
    functions_checked: int
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.tol


def _prefix_values(space: FiniteSpace, m: int) -> np.ndarray:
    """X_1..X_m at every prefix atom, shape (k_1..k_m, m, d)."""
    grids = np.meshgrid(*[np.arange(k) for k in space.shape[:m]], indexing="ij")
    return np.stack([space.supports[i][grids[i]] for i in range(m)], axis=-2)


def default_test_functions(space: FiniteSpace, m: int, seed: int = 0, random_count: int = 16) -> list[np.ndarray]:
    """Test functions of (X_1..X_m): structured ones plus seeded random tables."""
    X = _prefix_values(space, m)
    last = X[..., -1, :]
    head = X[..., :-1, :].sum(axis=-2)
    out = [
        np.einsum("...d,...d->...", head, last),
        np.einsum("...d,...d->...", head, last) - np.abs(head).sum(axis=-1) ** 2,
        (X.sum(axis=-2) ** 2).sum(axis=-1),
        np.max(X[..., 0], axis=-1),
        (X.mean(axis=-2)[..., 0] > 0).astype(float),
        np.cos(3.0 * head[..., 0]) * last[..., 0],
    ]
    g = rng_mod.stream(seed, rng_mod.PROPERTY, 11, m)
    shape = space.shape[:m]
    out += [g.standard_normal(shape) for _ in range(random_count)]
    return out


def check_independence(
    space: FiniteSpace,
    test_functions: Callable[[FiniteSpace, int], Sequence[np.ndarray]] | None = None,
    tol: float = 1e-12,
) -> IndependenceReport:
    """Compare both sides of the sequential independence identity.

    For each 1 <= i <= n-1 and each test function psi of (X_1..X_{i+1}):
    E[psi(X_1..X_{i+1})] versus E[ E[psi(x, X_{i+1})] evaluated at x = (X_1..X_i) ].
    """
    if test_functions is None:
        test_functions = default_test_functions
    per_index = []
    count = 0
    for i in range(1, space.n):
        worst = 0.0
        for psi in test_functions(space, i + 1):
            psi = np.asarray(psi, dtype=float)
            lhs = sublinear_expect(space, _lift_prefix(space, psi))
            # inner: for every prefix x, E[psi(x, X_{i+1})] as a batch over prefixes
            prefix_shape = psi.shape[:-1]
            rows = psi.reshape(-1, psi.shape[-1])
            shape = [1] * space.n
            shape[i] = space.shape[i]
            batch = np.broadcast_to(
                rows.reshape((rows.shape[0],) + tuple(shape)), (rows.shape[0],) + space.shape
            )
            phi = _expect_batch(space, batch).reshape(prefix_shape)
            rhs = sublinear_expect(space, _lift_prefix(space, phi))
            worst = max(worst, abs(lhs - rhs))
            count += 1
        per_index.append(worst)
    return IndependenceReport(max(per_index, default=0.0), per_index, count, tol)


# --- expectation sets ---------------------------------------------------------


@dataclass
class ThetaReport:
    body: cs.ConvexBody
    max_discrepancy: float
    directions: int
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.tol


def theta_exact(space: FiniteSpace, i: int, directions: int = 64, seed: int = 0, tol: float = 1e-12) -> ThetaReport:
    """Theta_i (1-based) as the hull of the extreme means, checked against
    the support function p -> E[<p, X_i>] on random probe directions."""
    if not 1 <= i <= space.n:
        raise ValueError(f"index {i} outside 1..{space.n}")
    k = i - 1
    support = space.supports[k]
    means = np.array([q @ support for q in space.marginal_set(k)])
    if space.d == 1:
        body: cs.ConvexBody = cs.interval(means.min(), means.max())
    else:
        body = cs.Polytope(cs._hull_vertices(means))
    g = rng_mod.stream(seed, rng_mod.PROPERTY, 13, i)
    P = g.standard_normal((directions, space.d))
    worst = 0.0
    for p in P:
        g_p = sublinear_expect(space, _lift_coordinate(space, k, support @ p))
        worst = max(worst, abs(g_p - cs.support_function(body, p)))
    return ThetaReport(body, worst, directions, tol)


def _theta_probe_points(body: cs.ConvexBody, count: int = 9) -> np.ndarray:
    if isinstance(body, cs.Interval) and body.dim == 1:
        return np.linspace(body.lo[0], body.hi[0], count)[:, None]
    V = cs.polytope_from_interval(body).vertices if isinstance(body, cs.Interval) else body.vertices
    centre = V.mean(axis=0)
    pts = [centre] + [v for v in V] + [(v + centre) / 2 for v in V]
    return np.array(pts)


# --- conditional domination ---------------------------------------------------


@dataclass
class DominationReport:
    max_violation: float
    checks: int
    tol: float = 1e-12

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tol


def verify_conditional_domination(space: FiniteSpace, random_count: int = 8, seed: int = 0,
                                  tol: float = 1e-12) -> DominationReport:
    """E_P[phi(X_i) | F_{i-1}] <= E[phi(X_i)] for every extreme, index and history.

    Test functions are x -> |x - theta|^2 for theta on a grid over Theta_i
    plus seeded random tables on the support of X_i.
    """
    worst = -np.inf
    checks = 0
    g = rng_mod.stream(seed, rng_mod.PROPERTY, 17)
    for k in range(space.n):
        support = space.supports[k]
        body = theta_exact(space, k + 1, directions=1).body
        phis = [np.sum((support - th) ** 2, axis=1) for th in _theta_probe_points(body)]
        phis += [g.standard_normal(support.shape[0]) for _ in range(random_count)]
        upper = [sublinear_expect(space, _lift_coordinate(space, k, phi)) for phi in phis]
        if space.rectangular:
            # any listed marginal may be the conditional law after any history
            histories = int(np.prod(space.shape[:k])) if k else 1
            for q in space.marginal_set(k):
                for phi, up in zip(phis, upper):
                    worst = max(worst, float(q @ phi) - up)
                    checks += histories
            continue
        for ext in space.extremes:
            joint = np.ones(())
            for j in range(k + 1):
                joint = np.multiply.outer(joint, ext[j])
            joint = joint.reshape(-1, space.shape[k])
            mass = joint.sum(axis=1)
            live = mass > 0
            cond = joint[live] / mass[live, None]
            for phi, up in zip(phis, upper):
                worst = max(worst, float(np.max(cond @ phi)) - up)
                checks += int(live.sum())
    return DominationReport(max(worst, 0.0), checks, tol)


# --- sigma bar and the moment inequality --------------------------------------


def _coordinate_variance_proxy(space: FiniteSpace, k: int) -> float:
    """inf over theta in Theta_k of max over marginals q of E_q|X_k - theta|^2."""
    support = space.supports[k]
    Q = space.marginal_set(k)
    means = np.array([q @ support for q in Q])
    second = np.array([q @ np.sum(support**2, axis=1) for q in Q])

    def F(theta: np.ndarray) -> float:
        return float(np.max(second - 2.0 * means @ theta + theta @ theta))

    if space.d == 1:
        lo, hi = means.min(), means.max()
        m = means[:, 0]
        cands = [lo, hi] + [x for x in m if lo <= x <= hi]
        for a, b in itertools.combinations(range(len(Q)), 2):
            if m[a] != m[b]:
                # (x - m_a)^2 + v_a = (x - m_b)^2 + v_b is linear in x
                x = (second[b] - second[a]) / (2.0 * (m[b] - m[a]))
                if lo <= x <= hi:
                    cands.append(x)
        return min(F(np.array([c])) for c in cands)
    if len(Q) == 1:
        return F(means[0])
    from scipy.optimize import minimize

    L = len(Q)
    x0 = np.append(np.full(L, 1.0 / L), F(means.mean(axis=0)))
    cons = [
        {"type": "eq", "fun": lambda z: np.sum(z[:L]) - 1.0},
        {"type": "ineq", "fun": lambda z: z[L] - (second - 2.0 * means @ (z[:L] @ means) + (z[:L] @ means) @ (z[:L] @ means))},
    ]
    res = minimize(lambda z: z[L], x0, constraints=cons, bounds=[(0, 1)] * L + [(None, None)],
                   method="SLSQP", options={"ftol": 1e-15, "maxiter": 1000})
    lam = np.clip(res.x[:L], 0, None)
    return F((lam / lam.sum()) @ means)


def sigma_bar_sq_exact(space: FiniteSpace) -> float:
    """sup_i inf_{theta in Theta_i} E|X_i - theta|^2 by enumeration."""
    return max(_coordinate_variance_proxy(space, k) for k in range(space.n))


def theta_average(space: FiniteSpace) -> cs.ConvexBody:
    bodies = [theta_exact(space, i, directions=1).body for i in range(1, space.n + 1)]
    return cs.minkowski_average(bodies)


@dataclass
class MomentReport:
    upper_second_moment: float
    sigma_bar_sq: float
    n: int

    @property
    def rhs(self) -> float:
        return self.sigma_bar_sq / self.n

    @property
    def slack(self) -> float:
        return self.rhs - self.upper_second_moment

    @property
    def passed(self) -> bool:
        return self.upper_second_moment <= self.rhs


def verify_moment_inequality(space: FiniteSpace, cap: int = ATOM_CAP) -> MomentReport:
    """E[rho_Theta(mean X)^2] versus sigma_bar^2 / n, both by full enumeration."""
    _check_cap(space, cap)
    body = theta_average(space)
    xbar = space.atom_values().mean(axis=-2).reshape(-1, space.d)
    rho_sq = (cs.distances(body, xbar) ** 2).reshape(space.shape)
    return MomentReport(sublinear_expect(space, rho_sq), sigma_bar_sq_exact(space), space.n)


# --- construction and serialisation -------------------------------------------


def shifted_uniform_space(a: float = 1.0, r: float = 0.5, n: int = 3, rectangular: bool = True) -> FiniteSpace:
    """Discretised shifted-uniform space: X_i uniform on {mu-r, mu, mu+r}, mu in {-a, 0, a}."""
    shifts = [-a, 0.0, a]
    support = np.unique(np.array([m + e for m in shifts for e in (-r, 0.0, r)]))
    marginals = []
    for m in shifts:
        p = np.zeros(len(support))
        for e in (-r, 0.0, r):
            p[np.searchsorted(support, m + e)] += 1.0 / 3.0
        marginals.append(p)
    extremes = [tuple(marginals[c] for c in combo) for combo in itertools.product(range(3), repeat=n)]
    return FiniteSpace(n, 1, tuple(support for _ in range(n)), tuple(extremes), rectangular,
                       name="shifted_uniform")


def space_to_dict(space: FiniteSpace) -> dict:
    return {
        "name": space.name,
        "n": space.n,
        "d": space.d,
        "semantics": "rectangular" if space.rectangular else "hull",
        "supports": [s.tolist() for s in space.supports],
        "extremes": [[p.tolist() for p in ext] for ext in space.extremes],
        **({"expect": space.meta["expect"]} if "expect" in space.meta else {}),
    }


def space_from_dict(record: dict) -> FiniteSpace:
    semantics = record.get("semantics", "hull")
    if semantics not in ("hull", "rectangular"):
        raise ValueError(f"unknown semantics {semantics!r}")
    meta = {"expect": record["expect"]} if "expect" in record else {}
    return FiniteSpace(
        int(record["n"]), int(record["d"]),
        tuple(np.asarray(s, dtype=float) for s in record["supports"]),
        tuple(tuple(np.asarray(p, dtype=float) for p in ext) for ext in record["extremes"]),
        semantics == "rectangular", record.get("name", ""), meta,
    )


SHIPPED_SPACES = ("trivial", "shifted_uniform", "negative_control")


def load_space(name_or_path: str) -> FiniteSpace:
    if name_or_path in SHIPPED_SPACES:
        text = resources.files("sublinconc").joinpath("data", "spaces", f"{name_or_path}.json").read_text()
    else:
        with open(name_or_path) as fh:
            text = fh.read()
    return space_from_dict(json.loads(text))
