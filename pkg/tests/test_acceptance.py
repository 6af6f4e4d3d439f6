"""Acceptance criteria, one test and one summary line each."""

import math
import time
from fractions import Fraction

import numpy as np

from conftest import ACCEPTANCE_LINES
from sublinconc import bounds as bd
from sublinconc import montecarlo as mc
from sublinconc import oracle as orc
from sublinconc import priors as pr
from sublinconc import rng as rng_mod
from sublinconc import sphere_nets as sn
from sublinconc.cli import sharpness_rows

SEED = 2024


def report(number: int, title: str, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, detail


def test_criterion_1_sandwich_upper_side():
    fam = pr.UniformShift(1.0, 0.5, 10_000)
    grid = [0.05, 0.1, 0.15, 0.2]
    start = time.perf_counter()
    rows = mc.sandwich_sweep(fam, 10_000, grid, 20_000, SEED)
    elapsed = time.perf_counter() - start

    # closed-form Bernstein value at t = 0.1 from exact rationals; sigma^2 itself
    # comes from a golden-section search, good to about 1e-12 relative
    sigma_sq = Fraction(13, 12)
    denom = 8 * sigma_sq + Fraction(8, 3) * Fraction(3, 2) * Fraction(1, 10)
    exponent = float(10_000 * Fraction(1, 100) / denom)
    be = rows[1].bernstein
    bernstein_ok = math.isclose(be.exponent, exponent, rel_tol=1e-10) and math.isclose(
        be.raw, 10 * math.exp(-exponent), rel_tol=1e-10)

    point_ok = all(r.mc.point <= r.min_upper for r in rows)
    lo_ok = all(r.mc.ci_lo <= r.min_upper for r in rows)
    hi_bad = [(r.t, r.mc.ci_hi, r.min_upper) for r in rows if r.mc.ci_hi > r.min_upper]
    ok = point_ok and lo_ok and not hi_bad and bernstein_ok and elapsed < 90
    detail = (
        f"point<=min {point_ok}, ci_lo<=min {lo_ok}, bernstein(t=0.1) exponent {be.exponent:.6g} "
        f"raw {be.raw:.4g} ok {bernstein_ok}, {elapsed:.1f}s; ci_hi<=min fails at "
        + (", ".join(f"t={t:g} ({hi:.3g} > {m:.3g})" for t, hi, m in hi_bad) or "no t")
    )
    report(1, "sandwich upper side", ok, detail)


def test_criterion_2_sandwich_lower_side():
    rows = sharpness_rows(1.0, 1.0, [100, 400, 1600], 100_000, SEED)
    target = 0.25 * math.exp(-1 / 8)
    ok = all(r["lower_valid"] and r["ci_hi"] >= r["lower"] for r in rows)
    ok &= all(math.isclose(r["lower"], target, rel_tol=1e-14) for r in rows)
    detail = ", ".join(f"n={r['n']}: ci_hi {r['ci_hi']:.4f} vs {r['lower']:.4f}" for r in rows)
    report(2, "sandwich lower side", ok, detail)


def test_criterion_3_oracle_exactness():
    start = time.perf_counter()
    space = orc.load_space("shifted_uniform")
    assert space.n == 3 and space.shape == (7, 7, 7) and space.rectangular
    ind = orc.check_independence(space)
    theta = max(orc.theta_exact(space, i).max_discrepancy for i in range(1, 4))
    dom = orc.verify_conditional_domination(space)
    mom = orc.verify_moment_inequality(space)
    neg = orc.check_independence(orc.load_space("negative_control"))
    elapsed = time.perf_counter() - start
    ok = (ind.max_discrepancy <= 1e-12 and theta <= 1e-12 and dom.max_violation <= 1e-12
          and mom.passed and neg.max_discrepancy > 1e-3 and elapsed < 5)
    detail = (f"independence {ind.max_discrepancy:.2g}, theta {theta:.2g}, domination "
              f"{dom.max_violation:.2g}, moment {mom.upper_second_moment:.4g} <= {mom.rhs:.4g}, "
              f"negative control {neg.max_discrepancy:.3g}, {elapsed:.2f}s")
    report(3, "oracle exactness", ok, detail)


def exact_exponents(n, M, s, t):
    """Bernstein and Azuma exponents as exact rationals."""
    n, M, s, t = Fraction(n), Fraction(M), Fraction(s), Fraction(t)
    return n * t * t / (8 * s + Fraction(8, 3) * M * t), n * t * t / (32 * M * M)


def test_criterion_4_bound_algebra():
    g = rng_mod.stream(SEED, rng_mod.PROPERTY, 4)
    violations = {"dominance": 0, "general": 0, "criterion": 0}
    for _ in range(10_000):
        n = int(round(10 ** g.uniform(1, 6)))
        d = int(g.integers(1, 9))
        M = 10.0 * (1.0 - g.random())  # (0, 10]
        s = 4 * M * M * g.random() if g.random() > 0.05 else 0.0
        t = 2 * M * (1.0 - g.random())  # (0, 2M]
        inp = bd.BoundInput(n, d, M, s, t)
        df, be, az = bd.dimfree_bound(inp), bd.bernstein_bound(inp), bd.azuma_bound(inp)
        if not (df.raw <= be.raw and df.log_raw <= be.log_raw):
            violations["dominance"] += 1
        for named, general in ((az, bd.azuma_via_general(inp)), (be, bd.bernstein_via_general(inp))):
            same_raw = named.raw == general.raw or math.isclose(named.raw, general.raw, rel_tol=1e-12)
            if not (same_raw and math.isclose(named.exponent, general.exponent, rel_tol=1e-12)):
                violations["general"] += 1
        e_be, e_az = exact_exponents(n, M, s, t)
        if bd.bernstein_beats_azuma(inp) != (e_be >= e_az):
            violations["criterion"] += 1
    ok = not any(violations.values())
    report(4, "bound algebra", ok, f"10000 tuples, violations {violations}")


def test_criterion_5_rate_function():
    u = np.round(np.arange(-900, 901) * 1e-3, 12)
    series_gap = max(abs(bd.rate_function_uniform(x) - bd.rate_function_series(x)) for x in u)
    quad_bad = 0
    for r in (1.0, math.sqrt(3) / 2, 2.5):
        for x in np.arange(-500, 501) * 1e-3 * r:
            value, valid = bd.rate_quadratic_bound(x, r)
            quad_bad += int(not (valid and bd.rate_function_uniform(x / r) <= value))
    at_half = bd.rate_function_uniform(0.5)
    identity = max(abs(lhs - rhs) / rhs for lhs, rhs in
                   (bd.rate_coefficient_identity(s) for s in (0.1, 0.5, 1.0, 2.0, 3.7)))
    ok = series_gap <= 1e-10 and quad_bad == 0 and abs(at_half - 0.1308121) <= 1e-6 and identity <= 1e-15
    detail = (f"series gap {series_gap:.2g}, quadratic violations {quad_bad}, "
              f"value at 0.5 {at_half:.10f}, identity rel err {identity:.2g}")
    report(5, "rate function", ok, detail)


def test_criterion_6_covering():
    parts, ok = [], True
    for d in (1, 2, 3, 4):
        net = sn.build_half_net(d, seed=SEED)
        radius = sn.covering_radius(net, 100_000, SEED + d)
        g = rng_mod.stream(SEED, rng_mod.NET_CHECK, d)
        failures = 0
        for _ in range(10):
            m = 100_000
            n = int(g.integers(1, 10_000))
            t = float(g.uniform(1e-3, 2.0))
            S = rng_mod.unit_vectors(g, m, d) * g.uniform(0, 4 * n * t, (m, 1))
            failures += int(np.sum(~sn.covering_transfer_batch(net, S, n, t)))
        ok &= net.size <= 5**d and radius <= 0.5 and failures == 0
        parts.append(f"d={d}: size {net.size}/{5**d}, radius {radius:.3f}, failures {failures}/1e6")
    report(6, "covering", ok, "; ".join(parts))


def test_criterion_7_moment_recovery():
    parts, ok = [], True
    families = [pr.UniformShift(0.0, 1.0, 100), pr.UniformShift(1.0, 0.5, 100)]
    for fam in families:
        for n in (100, 1000, 10_000):
            est = mc.moment_estimate(fam, n, 20_000, SEED)
            mb = bd.moment_bound(n, 1, fam.M, est.sigma_bar_sq)
            ok &= est.value <= est.li_hu_rhs + 4 * est.se and est.value <= mb
            parts.append(f"a={fam.a:g} n={n}: {est.value:.3g} (rhs {est.li_hu_rhs:.3g}, bound {mb:.3g})")
        sigma_sq = pr.sigma_bar_sq(fam)
        values = [bd.moment_bound(n, 1, fam.M, sigma_sq) for n in (1000, 2000, 4000, 8000, 16_000)]
        ratios = [b / a for a, b in zip(values, values[1:])]
        ok &= max(ratios) <= 0.6
        parts.append(f"a={fam.a:g} doubling ratios <= {max(ratios):.3f}")
    report(7, "moment recovery", ok, "; ".join(parts))
