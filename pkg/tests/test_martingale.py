import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sublinconc import convex_sets as cs
from sublinconc import martingale as mg
from sublinconc import oracle as orc
from sublinconc import priors as pr
from sublinconc import rng as rng_mod


@pytest.mark.parametrize("k", [0, 1, 5])
def test_reduction_bound_uniform_shift(k):
    fam = pr.UniformShift(1.0, 0.5, 30)
    prior = pr.corner_priors(fam, random_corners=6, seed=3)[k]
    body = pr.average_mean_set(fam)
    X = pr.sample_batch(fam, prior, rng_mod.stream(k), 2000)
    gaps = mg.reduction_gaps(X, prior.mu_matrix(30, 1), body)
    assert np.all(gaps >= -1e-12)
    rs = mg.reduce(X[0], prior, fam)
    assert rs.n == 30 and mg.check_reduction_bound(rs, body)
    np.testing.assert_allclose(rs.Y, X[0] - 1.0 * (prior.mu_matrix(30, 1)))


def test_reduction_bound_polytope_shift():
    tri = cs.Polytope(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    fam = pr.BallShift(tri, 0.3, 8)
    g = np.random.default_rng(0)
    lam = g.dirichlet(np.ones(3), size=8)
    prior = pr.PriorPoint(lam @ tri.vertices)
    X = pr.sample_batch(fam, prior, rng_mod.stream(2), 300)
    gaps = mg.reduction_gaps(X, prior.mu_matrix(8, 2), tri)
    assert np.all(gaps >= -1e-9)


def test_reduction_on_discrete_family():
    space = orc.load_space("shifted_uniform")
    fam = pr.DiscreteFamily(space)
    prior = pr.PriorPoint(extreme=5)
    X = pr.sample_batch(fam, prior, rng_mod.stream(0), 1)[0]
    rs = mg.reduce(X, prior, fam)
    assert mg.check_reduction_bound(rs, pr.average_mean_set(fam))


@given(st.floats(1e-3, 1e3), st.integers(1, 10**6), st.floats(0, 10), st.floats(1e-2, 10))
def test_freedman_matches_high_precision(s, n, sigma_sq, M):
    expected = mpmath.exp(-mpmath.mpf(s) ** 2 / (2 * n * mpmath.mpf(sigma_sq) + 4 * mpmath.mpf(M) * s / 3))
    ours = mg.freedman_tail(s, n, sigma_sq, M)
    assert 0 < ours <= 1
    if expected > 1e-300:
        assert ours == pytest.approx(float(expected), rel=1e-12)


def test_freedman_floor_and_errors():
    assert mg.freedman_tail(1e6, 1, 0.0, 1.0) == 5e-324
    with pytest.raises(ValueError):
        mg.freedman_tail(0.0, 10, 1.0, 1.0)
    with pytest.raises(ValueError):
        mg.freedman_tail(1.0, 10, -1.0, 1.0)


def test_azuma_tail_value():
    assert mg.azuma_log_tail(10.0, 100, 0.5) == pytest.approx(-100 / 200)
    assert mg.azuma_tail(10.0, 100, 0.5) == pytest.approx(math.exp(-0.5))


def test_freedman_dominates_empirical_martingale_tail():
    # i.i.d. increments uniform on [-2M, 2M]: bounded by 2M, variance (2M)^2 / 3
    n, M, R = 200, 0.5, 200_000
    g = rng_mod.stream(123)
    Y = g.uniform(-2 * M, 2 * M, (R, n))
    sigma_sq = (2 * M) ** 2 / 3
    S = Y.sum(axis=1)
    for s in (5.0, 10.0, 15.0):
        assert np.mean(S > s) <= mg.freedman_tail(s, n, sigma_sq, M)
