import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sublinconc import convex_sets as cs
from sublinconc import priors as pr
from sublinconc import rng as rng_mod


def brute_sigma_sq(a, r, grid=4001):
    """inf over theta of the max over mu of (mu - theta)^2 + r^2/3 on dense grids."""
    thetas = np.linspace(-a, a, grid)
    mus = np.array([-a, a])
    return float(np.min(np.max((mus[:, None] - thetas) ** 2, axis=0))) + r * r / 3


def test_sigma_bar_sq_reference_family():
    assert pr.sigma_bar_sq(pr.UniformShift(1.0, 0.5, 10)) == pytest.approx(1 + 0.25 / 3, abs=1e-8)
    assert pr.sigma_bar_sq(pr.UniformShift(0.0, 1.0, 10)) == pytest.approx(1 / 3, abs=1e-15)


@given(st.floats(0.01, 5), st.floats(0.01, 5))
def test_sigma_bar_sq_matches_grid_oracle(a, r):
    ours = pr.sigma_bar_sq(pr.UniformShift(a, r, 3))
    assert ours == pytest.approx(brute_sigma_sq(a, r), rel=1e-6, abs=1e-9)


def test_ball_shift_sigma_closed_forms():
    d, r = 3, 0.5
    ball = pr.BallShift(cs.Ball(np.zeros(d), 2.0), r, 4)
    assert pr.sigma_bar_sq(ball) == pytest.approx(4.0 + r * r * d / (d + 2))
    box = pr.BallShift(cs.interval([-1, -1, -1], [1, 1, 1]), r, 4)
    assert pr.sigma_bar_sq(box) == pytest.approx(3.0 + r * r * d / (d + 2))


def test_polytope_minimax_centre_matches_grid():
    tri = cs.Polytope(np.array([[0.0, 0.0], [2.0, 0.0], [0.5, 1.5]]))
    fam = pr.BallShift(tri, 0.1, 2)
    xs = np.linspace(-0.5, 2.5, 601)
    grid = np.stack(np.meshgrid(xs, xs), -1).reshape(-1, 2)
    worst = np.max(((grid[:, None, :] - tri.vertices) ** 2).sum(-1), axis=1)
    expected = float(np.min(worst)) + 0.01 * 2 / 4
    assert pr.sigma_bar_sq(fam) == pytest.approx(expected, abs=2e-4)
    assert pr.sigma_bar_sq(fam) <= expected + 1e-12


def test_samples_respect_support_and_shape():
    fam = pr.UniformShift(1.0, 0.5, 20)
    prior = pr.corner_priors(fam)[0]
    X = pr.sample_batch(fam, prior, rng_mod.stream(0), 500)
    assert X.shape == (500, 20, 1)
    assert np.all(np.abs(X) <= fam.M)
    assert np.all(X >= 0.5)


def test_ball_samples_are_in_the_ball_and_centred():
    body = cs.Ball(np.array([0.3, -0.2]), 0.4)
    fam = pr.BallShift(body, 0.5, 5)
    mu = np.array([0.3, 0.2])
    X = pr.sample_batch(fam, pr.PriorPoint(mu), rng_mod.stream(1), 40_000)
    assert np.all(np.linalg.norm(X - mu, axis=2) <= 0.5 + 1e-12)
    np.testing.assert_allclose(X.mean(axis=(0, 1)), mu, atol=5e-3)
    # E|U|^2 = r^2 d / (d + 2) for the uniform ball
    assert np.mean(np.sum((X - mu) ** 2, axis=2)) == pytest.approx(0.25 * 2 / 4, rel=2e-2)


def test_inadmissible_priors_are_rejected():
    fam = pr.UniformShift(1.0, 0.5, 3)
    with pytest.raises(ValueError):
        pr.sample_batch(fam, pr.PriorPoint(np.array([0.0, 2.0, 0.0])), rng_mod.stream(0), 10)
    with pytest.raises(ValueError):
        pr.sample_batch(fam, pr.PriorPoint(np.zeros(4)), rng_mod.stream(0), 10)


def test_ball_shift_radius_bound():
    with pytest.raises(ValueError):
        pr.BallShift(cs.Ball(np.zeros(2), 2.0), 0.5, 3, a=1.0)
    with pytest.raises(ValueError):
        pr.BallShift(cs.interval(-1.0, 1.0), 0.5, 3)


def test_corner_priors():
    fam = pr.UniformShift(1.0, 0.5, 4)
    pri = pr.corner_priors(fam, random_corners=3, seed=2)
    assert [p.label for p in pri[:2]] == ["aligned", "anti-aligned"]
    np.testing.assert_array_equal(pri[0].mu, np.ones(4))
    np.testing.assert_array_equal(pri[1].mu, -np.ones(4))
    assert len(pri) == 5
    assert all(set(np.abs(p.mu)) == {1.0} for p in pri)
    single = pr.corner_priors(pr.UniformShift(0.0, 1.0, 4))
    assert len(single) == 1 and single[0].label == "center"


def test_mean_sets():
    fam = pr.UniformShift(2.0, 0.5, 3)
    body = pr.average_mean_set(fam)
    assert (body.lo[0], body.hi[0]) == (-2.0, 2.0)
    with pytest.raises(ValueError):
        pr.mean_set(fam, 4)


def test_golden_section():
    x, fx = pr.golden_section(lambda v: (v - 0.3) ** 2 + 1.0, -1.0, 2.0, tol=1e-10)
    assert x == pytest.approx(0.3, abs=1e-7)  # flat minimum: sqrt(eps) resolution
    assert fx == pytest.approx(1.0)


def test_sample_is_deterministic():
    fam = pr.UniformShift(1.0, 0.5, 6)
    prior = pr.corner_priors(fam)[1]
    np.testing.assert_array_equal(pr.sample(fam, prior, 5), pr.sample(fam, prior, 5))


@pytest.mark.parametrize("record", [
    {"kind": "uniform_shift", "a": 1.0, "r": 0.5, "n": 7},
    {"kind": "ball_shift", "a": 1.0, "r": 0.2, "n": 3,
     "body": {"kind": "ball", "center": [0.0, 0.0], "radius": 1.0}},
])
def test_family_records_round_trip(record):
    fam = pr.family_from_dict(record)
    again = pr.family_from_dict(pr.family_to_dict(fam))
    assert (again.n, again.d, again.M) == (fam.n, fam.d, fam.M)
    assert math.isclose(pr.sigma_bar_sq(again), pr.sigma_bar_sq(fam))


def test_family_record_errors():
    with pytest.raises(ValueError):
        pr.family_from_dict({"kind": "mystery", "n": 3})
    with pytest.raises(ValueError):
        pr.family_from_dict({"kind": "uniform_shift", "a": 1, "r": 1})
